#include "doctest.h"

#include "sosc/avsos.hpp"
#include "sosc/conformance.hpp"

#include <algorithm>

#include "gen.hpp"

using namespace sosc;

namespace {
const std::string S = "LE_SendMsgs";
const std::string R = "LE_RecvMsgs";
}  // namespace

TEST_CASE("nominal TL traces at depth 4 match the hand enumeration") {
  Contract tl = avsos::tlNominal();
  TraceSet ts = computeTraces(tl, 4, false);
  std::set<LabelTrace> expected = {{}, {S}, {S, R}, {S, R, S}, {S, R, S, R}};
  CHECK(ts.traces == expected);
}

TEST_CASE("TL refinement in both directions") {
  Contract nominal = avsos::tlNominal();
  Contract faulty = avsos::tlFaulty();
  auto down = refines(subjectOf(nominal), subjectOf(faulty), 6);
  CHECK(down.conforms);
  auto up = refines(subjectOf(faulty), subjectOf(nominal), 6);
  REQUIRE_FALSE(up.conforms);
  CHECK(*up.witness == LabelTrace{S, "timeout"});
}

namespace {

// Visible traces by brute force over CompiledProtocol::step. Labels in
// `hidden` are treated as silent.
std::set<LabelTrace> oracleTraces(const Contract& c, std::size_t depth, bool injection,
                                  const std::set<std::string>& hidden = {}) {
  CompiledProtocol p = CompiledProtocol::forContract(c);
  std::vector<Stimulus> stimuli = {Stimulus::silent()};
  for (const auto& l : p.alphabet()) stimuli.push_back(Stimulus::event(l));

  std::set<LabelTrace> out = {{}};
  std::set<std::pair<Configuration, LabelTrace>> seen;
  std::vector<std::pair<Configuration, LabelTrace>> todo = {{p.initial(), {}}};
  seen.insert(todo[0]);
  while (!todo.empty()) {
    auto [cfg, tr] = todo.back();
    todo.pop_back();
    for (const auto& s : stimuli) {
      for (const auto& f : p.step(cfg, s, injection)) {
        const auto& t = p.transition(f.transition);
        LabelTrace next = tr;
        if (t.trigger.kind == TriggerKind::Event && !hidden.contains(t.trigger.label)) {
          if (tr.size() == depth) continue;
          next.push_back(t.trigger.label);
        }
        if (seen.insert({f.next, next}).second) {
          out.insert(next);
          todo.push_back({f.next, next});
        }
      }
    }
  }
  return out;
}

std::optional<LabelTrace> shortestMissing(const std::set<LabelTrace>& impl, const std::set<LabelTrace>& contract) {
  std::optional<LabelTrace> best;
  for (const auto& t : impl) {
    if (contract.contains(t)) continue;
    if (!best || t.size() < best->size() || (t.size() == best->size() && t < *best)) best = t;
  }
  return best;
}

Contract randomContract(gen::Rng& rng, const std::string& name) {
  gen::MachineOpts o;
  o.states = gen::pick(rng, 1, 3);
  o.composite = gen::coin(rng, 0.3);
  o.transitions = gen::pick(rng, 1, 6);
  o.labels = {"ea", "eb"};
  return gen::contract(rng, name, o);
}

// Extra event transitions only add behaviour.
Contract widened(gen::Rng& rng, Contract c, int extra) {
  auto& m = c.protocol;
  std::vector<std::string> names;
  for (const auto& s : m.root.states) names.push_back(s.name);
  for (int i = 0; i < extra; ++i) {
    Transition t;
    t.source = gen::oneOf(rng, names);
    t.target = gen::oneOf(rng, names);
    t.trigger = {TriggerKind::Event, gen::coin(rng) ? "ea" : "eb", std::nullopt};
    m.transitions.push_back(t);
  }
  return c;
}

std::set<std::string> labelsOf(const Contract& c) { return CompiledProtocol::forContract(c).alphabet(); }

}  // namespace

TEST_CASE("an empty protocol has only the empty trace") {
  Contract c;
  c.name = "Empty";
  TraceSet ts = computeTraces(c, 5, true);
  CHECK(ts.traces == std::set<LabelTrace>{{}});
}

TEST_CASE("faulty TL contains the nominal traces at every depth") {
  for (std::size_t d = 1; d <= 6; ++d) {
    auto n = computeTraces(avsos::tlNominal(), d, false).traces;
    auto f = computeTraces(avsos::tlFaulty(), d, true).traces;
    CHECK(std::includes(f.begin(), f.end(), n.begin(), n.end()));
    CHECK(n == oracleTraces(avsos::tlNominal(), d, false));
    CHECK(f == oracleTraces(avsos::tlFaulty(), d, true));
  }
}

TEST_CASE("the refinement witness is a faulty trace with a nominal prefix") {
  auto up = refines(subjectOf(avsos::tlFaulty()), subjectOf(avsos::tlNominal()), 6);
  REQUIRE(up.witness);
  auto n = computeTraces(avsos::tlNominal(), 6, true).traces;
  auto f = computeTraces(avsos::tlFaulty(), 6, true).traces;
  CHECK(f.contains(*up.witness));
  CHECK_FALSE(n.contains(*up.witness));
  LabelTrace prefix(up.witness->begin(), up.witness->end() - 1);
  CHECK(n.contains(prefix));
  CHECK(*up.witness == *shortestMissing(f, n));
  auto j = toJson(up);
  CHECK(j["verdict"] == "VIOLATES");
  CHECK(j["witness"] == nlohmann::json(*up.witness));
}

TEST_CASE("alphabet mismatch under an explicit renaming") {
  RefinementOptions o;
  o.renaming["LE_SendMsgs"] = std::string("NoSuchLabel");
  CHECK_THROWS_AS(refines(subjectOf(avsos::tlNominal()), subjectOf(avsos::tlFaulty()), 4, o), AlphabetMismatch);
  // hiding is always allowed; a silent timeout lets two sends run back to back
  RefinementOptions h;
  h.renaming["timeout"] = std::nullopt;
  auto r = refines(subjectOf(avsos::tlFaulty()), subjectOf(avsos::tlNominal()), 6, h);
  REQUIRE(r.witness);
  CHECK(*r.witness == LabelTrace{S, S});
}

TEST_CASE("computed traces match brute force on generated machines") {
  gen::Rng rng(2026);
  for (int i = 0; i < 200; ++i) {
    Contract c = randomContract(rng, "M" + std::to_string(i));
    for (bool inj : {false, true}) {
      auto ts = computeTraces(c, 4, inj).traces;
      CHECK(ts == oracleTraces(c, 4, inj));
      // prefix closed
      for (const auto& t : ts) {
        if (!t.empty()) CHECK(ts.contains(LabelTrace(t.begin(), t.end() - 1)));
      }
    }
    auto off = computeTraces(c, 4, false).traces;
    auto on = computeTraces(c, 4, true).traces;
    CHECK(std::includes(on.begin(), on.end(), off.begin(), off.end()));
  }
}

TEST_CASE("refinement properties on generated machines") {
  gen::Rng rng(77);
  int violated = 0, conforming = 0;
  for (int i = 0; i < 220; ++i) {
    Contract a = randomContract(rng, "A");
    Contract b = randomContract(rng, "B");

    // reflexive
    CHECK(refines(subjectOf(a), subjectOf(a), 5).conforms);

    // verdict and witness agree with brute force, after hiding labels B lacks
    std::set<std::string> hide;
    auto bl = labelsOf(b);
    for (const auto& l : labelsOf(a))
      if (!bl.contains(l)) hide.insert(l);
    for (std::size_t d = 1; d <= 5; ++d) {
      auto r = refines(subjectOf(a), subjectOf(b), d);
      auto expect = shortestMissing(oracleTraces(a, d, true, hide), oracleTraces(b, d, true));
      CHECK(r.conforms == !expect.has_value());
      CHECK(r.witness == expect);
      // depth monotone: a violation stays a violation
      if (!r.conforms) {
        CHECK_FALSE(refines(subjectOf(a), subjectOf(b), d + 1).conforms);
      }
    }
    refines(subjectOf(a), subjectOf(b), 5).conforms ? ++conforming : ++violated;

    // transitive along a widening chain a <= a+ <= a++
    Contract a1 = widened(rng, a, 1);
    Contract a2 = widened(rng, a1, 2);
    bool ab = refines(subjectOf(a), subjectOf(a1), 4).conforms;
    bool bc = refines(subjectOf(a1), subjectOf(a2), 4).conforms;
    CHECK(ab);
    CHECK(bc);
    CHECK(refines(subjectOf(a), subjectOf(a2), 4).conforms);
  }
  // both verdicts occur, so the comparison above is not vacuous
  CHECK(violated > 20);
  CHECK(conforming > 20);
}
