#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sosc/analysis.hpp"
#include "sosc/avsos.hpp"
#include "sosc/conformance.hpp"
#include "sosc/dsl.hpp"
#include "sosc/engine.hpp"
#include "sosc/validate.hpp"

namespace sosc {

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parse failures are reported with their own diagnostics.
struct ParseError : std::runtime_error {
  Diagnostics diags;
  std::string file;
  ParseError(Diagnostics d, std::string f)
      : std::runtime_error("parse error"), diags(std::move(d)), file(std::move(f)) {}
};

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeOut(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path);
  f << text;
}

ModelDocument loadFile(const std::string& path) {
  try {
    return parseModel(readFile(path), path);
  } catch (const ParseFailure& e) {
    throw ParseError(e.errors(), path);
  }
}

// Knobs for builtin:avsos.
struct AvKnobs {
  int devices = 3;
  bool faultTolerant = false;
  int retries = 1;
  std::string tl;          // "", "nominal" or "faulty"
  bool wantsFaults = false;  // a fault option was given
};

// A resolved model reference: the document plus the element it names.
struct Model {
  ModelDocument doc;
  std::string name;
  const Contract* contract = nullptr;
  const SoSComposition* composition = nullptr;
};

void pick(Model& m, const std::string& name, const std::string& ref) {
  if (name.empty()) {
    if (!m.doc.compositions.empty()) {
      m.composition = &m.doc.compositions.back();
    } else if (!m.doc.contracts.empty()) {
      m.contract = &m.doc.contracts.back();
    } else {
      throw UsageError(ref + ": document has no contracts or compositions");
    }
  } else {
    m.composition = m.doc.findComposition(name);
    if (!m.composition) m.contract = m.doc.findContract(name);
    if (!m.composition && !m.contract) throw UsageError(ref + ": no element named '" + name + "'");
  }
  m.name = m.composition ? m.composition->name : m.contract->name;
}

// builtin:avsos, builtin:catalog[#Name], builtin:tl-nominal, builtin:tl-faulty,
// builtin:le-device, builtin:le-wrapper, or path[#Name].
std::unique_ptr<Model> resolve(const std::string& ref, const AvKnobs& av) {
  auto model = std::make_unique<Model>();
  std::string base = ref, name;
  if (auto hash = ref.rfind('#'); hash != std::string::npos) {
    base = ref.substr(0, hash);
    name = ref.substr(hash + 1);
  }
  if (base.rfind("builtin:", 0) == 0) {
    std::string what = base.substr(8);
    static const std::map<std::string, std::string> contracts = {{"tl-nominal", "Transport_Layer"},
                                                                  {"tl-faulty", "Faulty_Transport_Layer"},
                                                                  {"le-device", "LE_Device"},
                                                                  {"le-wrapper", "LE_Wrapper"}};
    if (what == "avsos") {
      if (av.devices < 1) throw UsageError("--devices must be at least 1");
      if (av.retries < 0) throw UsageError("--retries must be non-negative");
      std::optional<bool> faulty;
      if (av.tl == "faulty") faulty = true;
      else if (av.tl == "nominal") faulty = false;
      else if (!av.tl.empty()) throw UsageError("--tl must be 'nominal' or 'faulty'");
      else if (av.wantsFaults) faulty = true;
      model->doc = avsos::withCatalog(avsos::buildAvSos(av.devices, av.faultTolerant, av.retries, faulty));
      pick(*model, "", ref);
    } else if (what == "catalog") {
      model->doc = avsos::catalogDocument();
      pick(*model, name, ref);
    } else if (auto it = contracts.find(what); it != contracts.end()) {
      model->doc = avsos::catalogDocument();
      pick(*model, it->second, ref);
    } else {
      throw UsageError("unknown builtin '" + what + "'");
    }
    return model;
  }
  model->doc = loadFile(base);
  pick(*model, name, ref);
  return model;
}

ParamBindings parseParams(const std::vector<std::string>& items) {
  ParamBindings out;
  for (const auto& s : items) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("expected name=value, got '" + s + "'");
    try {
      out[s.substr(0, eq)] = std::stoll(s.substr(eq + 1));
    } catch (const std::exception&) {
      throw UsageError("parameter value must be an integer: '" + s + "'");
    }
  }
  return out;
}

// A running system plus whatever it borrows from.
struct Runnable {
  std::unique_ptr<TransitionSystem> sys;
  const avsos::AvSosSystem* av = nullptr;
  FlatComposition flat;
};

std::unique_ptr<Runnable> makeSystem(const Model& m, const ExecutionConfig& cfg, const ParamBindings& params,
                                     bool requireAv) {
  auto r = std::make_unique<Runnable>();
  if (m.composition) {
    try {
      auto av = std::make_unique<avsos::AvSosSystem>(*m.composition, m.doc, cfg);
      r->av = av.get();
      r->sys = std::move(av);
      return r;
    } catch (const std::invalid_argument& e) {
      if (requireAv) throw UsageError(m.name + " is not an AV composition: " + e.what());
    }
    r->flat = instantiate(*m.composition, m.doc, params);
  } else {
    if (requireAv) throw UsageError(m.name + " is a contract; an AV composition is needed here");
    r->flat.leaves.push_back({m.contract->name, m.contract, params});
  }
  r->sys = std::make_unique<ProductSystem>(r->flat);
  return r;
}

std::set<DropPoint> parseDropPoints(const std::vector<std::string>& items) {
  std::set<DropPoint> out;
  for (const auto& s : items) {
    auto colon = s.rfind(':');
    if (colon == std::string::npos || colon == 0) throw UsageError("expected instance:occurrence, got '" + s + "'");
    try {
      out.insert({s.substr(0, colon), std::stoull(s.substr(colon + 1))});
    } catch (const std::exception&) {
      throw UsageError("bad drop point '" + s + "'");
    }
  }
  return out;
}

std::unique_ptr<TraceProperty> makeProperty(const std::string& name, const avsos::AvSosSystem& sys, int retries,
                                            std::optional<Int> expected) {
  if (name == "agreement") return avsos::agreementProperty(sys.deviceIds(), expected);
  if (name == "no-duplicate-decision") return avsos::noDuplicateDecisionProperty();
  if (name == "give-up-bound") return avsos::giveUpBoundProperty(retries);
  throw UsageError("unknown property '" + name + "' (agreement, no-duplicate-decision, give-up-bound)");
}

void addAvOptions(CLI::App* cmd, AvKnobs& av) {
  cmd->add_option("--devices", av.devices, "builtin:avsos device count")->capture_default_str();
  cmd->add_flag("--fault-tolerant", av.faultTolerant, "builtin:avsos with LE wrappers");
  cmd->add_option("--retries", av.retries, "wrapper maxRetries")->capture_default_str();
  cmd->add_option("--tl", av.tl, "transport layer: nominal or faulty");
}

void addTimeouts(CLI::App* cmd, ExecutionConfig& cfg, std::map<std::string, Tick>& overrides) {
  cmd->add_option("--max-steps", cfg.maxSteps, "step bound")->capture_default_str();
  cmd->add_option("--timeout", overrides, "timeout override, name=ticks (repeatable)")
      ->delimiter(',')
      ->type_name("NAME=TICKS");
}

void applyTimeouts(ExecutionConfig& cfg, const std::map<std::string, Tick>& overrides) {
  for (const auto& [k, v] : overrides) cfg.timeouts[k] = v;
  checkConfig(cfg);
}

// ---- subcommands ---------------------------------------------------------------

int runValidate(const std::string& file, std::ostream& out) {
  ModelDocument doc = loadFile(file);
  Diagnostics diags = validateStructure(doc);
  for (auto& d : validateFaultModel(doc)) {
    if (std::find(diags.begin(), diags.end(), d) == diags.end()) diags.push_back(std::move(d));
  }
  for (const auto& d : diags) out << format(d, file) << "\n";
  for (const auto& f : waivedFaults(doc)) {
    Diagnostic note{element::dysfunction(f), "UNMITIGATED_SOS_FAULT", Severity::Note,
                    "fault '" + f + "' is waived", std::nullopt};
    Diagnostics one{note};
    attachSpans(one, doc);
    out << format(one[0], file) << "\n";
  }
  return hasErrors(diags) ? kCheckFailed : kOk;
}

}  // namespace

int cliMain(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"sosc: contracts, fault injection and conformance for systems of systems"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // validate
  std::string validateFile;
  auto* validate = app.add_subcommand("validate", "structural and fault-model checks of a .sosc file");
  validate->add_option("file", validateFile, ".sosc file")->required();

  // simulate
  std::string simModel, simOut;
  AvKnobs simAv;
  ExecutionConfig simCfg = ExecutionConfig::defaults();
  std::map<std::string, Tick> simTimeouts;
  double simDropProb = 0.0;
  std::uint64_t simSeed = 0;
  std::vector<std::string> simDropAt, simParams;
  bool simNoInternal = false;
  auto* simulate = app.add_subcommand("simulate", "one seeded run, written as JSONL");
  simulate->add_option("model", simModel, "builtin:NAME or file.sosc[#Name]")->required();
  addAvOptions(simulate, simAv);
  addTimeouts(simulate, simCfg, simTimeouts);
  simulate->add_option("--drop-prob", simDropProb, "probabilistic drop per transmission")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--seed", simSeed, "scheduler and fault seed")->capture_default_str();
  simulate->add_option("--drop-at", simDropAt, "scheduled drop, instance:occurrence (repeatable)");
  simulate->add_option("--param", simParams, "contract parameter, name=value (repeatable)");
  simulate->add_flag("--visible-only", simNoInternal, "omit INTERNAL events");
  simulate->add_option("--out", simOut, "output file (default stdout)");

  // explore
  std::string expModel, expOut, expCex, expProperty = "agreement";
  AvKnobs expAv;
  ExecutionConfig expCfg = ExecutionConfig::defaults();
  expCfg.maxSteps = 60;
  std::map<std::string, Tick> expTimeouts;
  int expBudget = 0;
  std::optional<int> expPerSeq;
  std::optional<Int> expLeader;
  std::size_t expCap = ExploreOptions{}.stateCap;
  auto* exploreCmd = app.add_subcommand("explore", "exhaustive bounded exploration against a property");
  exploreCmd->add_option("model", expModel, "builtin:avsos or file.sosc[#Name]")->required();
  addAvOptions(exploreCmd, expAv);
  addTimeouts(exploreCmd, expCfg, expTimeouts);
  exploreCmd->add_option("--budget", expBudget, "total drop budget")->capture_default_str()->check(CLI::NonNegativeNumber);
  exploreCmd->add_option("--per-seq", expPerSeq, "drops allowed per DATA sequence number");
  exploreCmd->add_option("--property", expProperty, "agreement | no-duplicate-decision | give-up-bound")
      ->capture_default_str();
  exploreCmd->add_option("--expect-leader", expLeader, "agreement: required leader id");
  exploreCmd->add_option("--state-cap", expCap, "abort above this many states")->capture_default_str();
  exploreCmd->add_option("--out", expOut, "report file (default stdout)");
  exploreCmd->add_option("--counterexample", expCex,
                         "counterexample JSONL on FAIL (default counterexample.jsonl, or next to --out)");

  // conform
  std::string implRef, contractRef, confOut;
  std::size_t depth = 6;
  std::vector<std::string> implParams, contractParams, renames;
  bool noImplInjection = false, noContractInjection = false;
  std::size_t confCap = RefinementOptions{}.stateCap;
  auto* conform = app.add_subcommand("conform", "bounded trace refinement of an implementation against a contract");
  conform->add_option("--impl", implRef, "implementation: builtin:NAME or file.sosc[#Name]")->required();
  conform->add_option("--contract", contractRef, "contract: builtin:NAME or file.sosc[#Name]")->required();
  conform->add_option("--depth", depth, "trace length bound")->capture_default_str();
  conform->add_option("--impl-param", implParams, "implementation parameter name=value (repeatable)");
  conform->add_option("--contract-param", contractParams, "contract parameter name=value (repeatable)");
  conform->add_option("--rename", renames, "label mapping from=to, or from= to hide (repeatable)");
  conform->add_flag("--no-impl-injection", noImplInjection, "ignore [error] transitions of the implementation");
  conform->add_flag("--no-contract-injection", noContractInjection, "ignore [error] transitions of the contract");
  conform->add_option("--state-cap", confCap, "abort above this many subset states")->capture_default_str();
  conform->add_option("--out", confOut, "report file (default stdout)");

  // report
  bool loss = false;
  double lossP = 0.0;
  int lossRetries = 1;
  std::uint64_t lossMessages = 1000, lossSeed = 0;
  std::string reportOut;
  auto* report = app.add_subcommand("report", "analyses");
  report->add_flag("--loss", loss, "Monte Carlo message loss through one wrapper pair")->required();
  report->add_option("--drop-prob", lossP, "drop probability")->required()->check(CLI::Range(0.0, 1.0));
  report->add_option("--retries", lossRetries, "wrapper maxRetries")->capture_default_str()->check(CLI::NonNegativeNumber);
  report->add_option("--messages", lossMessages, "payloads to send")->capture_default_str()->check(CLI::PositiveNumber);
  report->add_option("--seed", lossSeed, "fault seed")->capture_default_str();
  report->add_option("--out", reportOut, "report file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return runValidate(validateFile, out);

    if (*simulate) {
      simAv.wantsFaults = simDropProb > 0 || !simDropAt.empty();
      applyTimeouts(simCfg, simTimeouts);
      simCfg.seed = simSeed;
      simCfg.recordInternal = !simNoInternal;
      auto model = resolve(simModel, simAv);
      auto run = makeSystem(*model, simCfg, parseParams(simParams), false);
      FaultPolicy policy = !simDropAt.empty()   ? FaultPolicy::scheduled(parseDropPoints(simDropAt))
                           : simDropProb > 0.0 ? FaultPolicy::probabilistic(simDropProb, simSeed)
                                               : FaultPolicy::none();
      if (!simDropAt.empty() && simDropProb > 0.0) throw UsageError("--drop-at and --drop-prob are exclusive");
      Trace t = runSimulation(*run->sys, policy, simCfg);
      writeOut(simOut, toJsonLines(t), out);
      err << model->name << ": " << t.events.size() << " events, " << t.annotation << "\n";
      return kOk;
    }

    if (*exploreCmd) {
      expAv.wantsFaults = expBudget > 0;
      applyTimeouts(expCfg, expTimeouts);
      auto model = resolve(expModel, expAv);
      auto run = makeSystem(*model, expCfg, {}, true);
      int retries = expAv.retries;
      auto prop = makeProperty(expProperty, *run->av, retries, expLeader);
      auto result = explore(*run->sys, FaultPolicy::exhaustive(expBudget, expPerSeq), expCfg, *prop,
                            ExploreOptions{expCap});
      nlohmann::json j = toJson(result);
      j["model"] = model->name;
      j["property"] = expProperty;
      j["budget"] = expBudget;
      j["maxSteps"] = expCfg.maxSteps;
      writeOut(expOut, j.dump(2) + "\n", out);
      if (result.counterexample) {
        std::string path = expCex;
        if (path.empty()) {
          path = expOut.empty() || expOut == "-"
                     ? "counterexample.jsonl"
                     : std::filesystem::path(expOut).replace_extension(".counterexample.jsonl").string();
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) throw UsageError("cannot write " + path);
        f << toJsonLines(*result.counterexample);
        err << "counterexample written to " << path << "\n";
      }
      err << expProperty << ": " << toString(result.verdict) << " (" << result.states << " states)";
      if (!result.message.empty()) err << ": " << result.message;
      err << "\n";
      return result.verdict == Verdict::Pass ? kOk : kCheckFailed;
    }

    if (*conform) {
      AvKnobs av;
      auto impl = resolve(implRef, av);
      auto target = resolve(contractRef, av);
      auto subject = [](const Model& m, const ParamBindings& p) {
        return m.composition ? subjectOf(*m.composition, m.doc, p) : subjectOf(*m.contract, p);
      };
      Subject a = subject(*impl, parseParams(implParams));
      Subject b = subject(*target, parseParams(contractParams));
      RefinementOptions opts;
      opts.implInjection = !noImplInjection;
      opts.contractInjection = !noContractInjection;
      opts.stateCap = confCap;
      for (const auto& r : renames) {
        auto eq = r.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("expected from=to, got '" + r + "'");
        std::string to = r.substr(eq + 1);
        opts.renaming[r.substr(0, eq)] = to.empty() ? std::nullopt : std::optional<std::string>(to);
      }
      ConformanceReport rep = refines(a, b, depth, opts);
      writeOut(confOut, toJson(rep).dump(2) + "\n", out);
      return rep.conforms ? kOk : kCheckFailed;
    }

    if (*report) {
      LossReport r = monteCarloLoss(lossP, lossRetries, lossMessages, lossSeed);
      writeOut(reportOut, toJson(r).dump(2) + "\n", out);
      return kOk;
    }
  } catch (const ParseError& e) {
    for (const auto& d : e.diags) err << format(d, e.file) << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const AlphabetMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const StateExplosion& e) {
    err << "inconclusive: " << e.what() << "\n";
    return kCheckFailed;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace sosc
