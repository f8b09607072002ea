// Thin bindings. Structured results cross the boundary as JSON text; the
// Python package decodes them.
#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "sosc/analysis.hpp"
#include "sosc/avsos.hpp"
#include "sosc/conformance.hpp"
#include "sosc/dsl.hpp"
#include "sosc/validate.hpp"

namespace py = pybind11;
using namespace sosc;

namespace {

nlohmann::json diagJson(const Diagnostic& d) {
  nlohmann::json j{{"element", d.elementId},
                   {"rule", d.rule},
                   {"severity", std::string(toString(d.severity))},
                   {"message", d.message}};
  if (d.span) j["line"] = d.span->startLine, j["col"] = d.span->startCol;
  return j;
}

std::string validate(const std::string& text, const std::string& file) {
  nlohmann::json out = nlohmann::json::array();
  try {
    ModelDocument doc = parseModel(text, file);
    Diagnostics all = validateStructure(doc);
    for (auto& d : validateFaultModel(doc)) {
      if (std::find(all.begin(), all.end(), d) == all.end()) all.push_back(d);
    }
    attachSpans(all, doc);
    for (const auto& d : all) out.push_back(diagJson(d));
  } catch (const ParseFailure& e) {
    for (const auto& d : e.errors()) out.push_back(diagJson(d));
  }
  return out.dump();
}

struct Av {
  ModelDocument doc;
  std::unique_ptr<avsos::AvSosSystem> sys;
};

Av build(int devices, bool ft, int retries, std::optional<bool> faultyTl, const ExecutionConfig& cfg) {
  Av a;
  a.doc = avsos::withCatalog(avsos::buildAvSos(devices, ft, retries, faultyTl));
  a.sys = std::make_unique<avsos::AvSosSystem>(a.doc.compositions.back(), a.doc, cfg);
  return a;
}

std::string simulateAv(int devices, bool ft, int retries, std::optional<bool> faultyTl, double dropProb,
                     std::uint64_t seed, std::size_t maxSteps) {
  auto cfg = ExecutionConfig::defaults();
  cfg.seed = seed;
  cfg.maxSteps = maxSteps;
  Av a = build(devices, ft, retries, faultyTl, cfg);
  auto policy = dropProb > 0 ? FaultPolicy::probabilistic(dropProb, seed) : FaultPolicy::none();
  Trace t = runSimulation(*a.sys, policy, cfg);
  return toJsonLines(t);
}

std::string exploreAv(int devices, bool ft, int retries, std::optional<bool> faultyTl, int budget,
                    std::optional<int> perSeq, const std::string& property, std::size_t maxSteps) {
  auto cfg = ExecutionConfig::defaults();
  cfg.maxSteps = maxSteps;
  Av a = build(devices, ft, retries, faultyTl, cfg);
  std::unique_ptr<TraceProperty> prop;
  if (property == "agreement") prop = avsos::agreementProperty(a.sys->deviceIds());
  else if (property == "no-duplicate-decision") prop = avsos::noDuplicateDecisionProperty();
  else if (property == "give-up-bound") prop = avsos::giveUpBoundProperty(retries);
  else throw std::invalid_argument("unknown property '" + property + "'");
  return toJson(explore(*a.sys, FaultPolicy::exhaustive(budget, perSeq), cfg, *prop)).dump();
}

const Contract& named(const ModelDocument& doc, const std::string& name) {
  const Contract* c = doc.findContract(name);
  if (!c) throw std::invalid_argument("no contract '" + name + "'");
  return *c;
}

std::string conform(const std::string& text, const std::string& impl, const std::string& contract,
                    std::size_t depth) {
  ModelDocument doc = parseModel(text);
  return toJson(refines(subjectOf(named(doc, impl)), subjectOf(named(doc, contract)), depth)).dump();
}

py::tuple runCli(std::vector<std::string> args) {
  args.insert(args.begin(), "sosc");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cliMain(static_cast<int>(argv.size()), argv.data(), out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "SoS contract analysis";

  m.def("catalog", [] { return serializeModel(avsos::catalogDocument()); });
  m.def("canonical", [](const std::string& text) { return serializeModel(parseModel(text)); }, py::arg("text"));
  m.def("validate", &validate, py::arg("text"), py::arg("file") = "<input>");
  m.def("simulate", &simulateAv, py::arg("devices"), py::arg("fault_tolerant") = false, py::arg("retries") = 1,
        py::arg("faulty_tl") = py::none(), py::arg("drop_prob") = 0.0, py::arg("seed") = 0,
        py::arg("max_steps") = 1000);
  m.def("explore", &exploreAv, py::arg("devices"), py::arg("fault_tolerant") = false, py::arg("retries") = 1,
        py::arg("faulty_tl") = py::none(), py::arg("budget") = 0, py::arg("per_seq") = py::none(),
        py::arg("property") = "agreement", py::arg("max_steps") = 60);
  m.def("conform", &conform, py::arg("text"), py::arg("impl"), py::arg("contract"), py::arg("depth") = 6);
  m.def("monte_carlo_loss",
        [](double p, int retries, std::uint64_t messages, std::uint64_t seed) {
          return toJson(monteCarloLoss(p, retries, messages, seed)).dump();
        },
        py::arg("drop_prob"), py::arg("retries"), py::arg("messages"), py::arg("seed") = 0);
  m.def("run_cli", &runCli, py::arg("args"));

  py::register_exception<ParseFailure>(m, "ParseError", PyExc_ValueError);
}
