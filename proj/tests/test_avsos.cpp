#include "doctest.h"

#include <chrono>
#include <map>

#include "sosc/avsos.hpp"
#include "sosc/validate.hpp"

using namespace sosc;
using namespace sosc::avsos;

namespace {

struct Built {
  ModelDocument doc;
  std::unique_ptr<AvSosSystem> sys;
};

Built build(int n, bool ft, int retries = 1, std::optional<bool> faulty = std::nullopt,
            ExecutionConfig cfg = ExecutionConfig::defaults()) {
  Built b;
  b.doc = withCatalog(buildAvSos(n, ft, retries, faulty));
  b.sys = std::make_unique<AvSosSystem>(b.doc.compositions.back(), b.doc, cfg);
  return b;
}

ExecutionConfig steps(std::size_t k) {
  auto cfg = ExecutionConfig::defaults();
  cfg.maxSteps = k;
  return cfg;
}

std::size_t count(const Trace& t, const std::string& label) {
  std::size_t n = 0;
  for (const auto& e : t.events) n += e.label == label;
  return n;
}

// Owner handoffs per (src, seq), read straight off the delivery events.
std::map<std::pair<std::string, Int>, int> handoffs(const Trace& t) {
  std::map<std::pair<std::string, Int>, int> out;
  for (const auto& e : t.events) {
    if (e.label != "LE_RecvMsgs" || !e.payload.contains("handoff")) continue;
    if (e.payload["handoff"].get<bool>())
      out[{e.payload["src"].get<std::string>(), e.payload["seq"].get<Int>()}] += 1;
  }
  return out;
}

}  // namespace

TEST_CASE("buildAvSos structure") {
  for (auto [n, ft, wrappers] : {std::tuple{3, true, 6}, {2, true, 2}, {1, false, 0}, {4, false, 0}}) {
    auto b = build(n, ft);
    CHECK(b.sys->deviceCount() == static_cast<std::size_t>(n));
    CHECK(b.sys->wrapperCount() == static_cast<std::size_t>(wrappers));
    CHECK(b.sys->faultyTransport() == ft);
    CHECK(validateStructure(b.doc).empty());
    auto flat = instantiate(b.doc.compositions.back(), b.doc, {});
    std::size_t tl = 0;
    for (const auto& leaf : flat.leaves) tl += leaf.path == "tl";
    CHECK(tl == 1);
  }
  // the catalogue pairing: FT devices over the faulty TL
  auto s = buildAvSos(3, true, 1);
  CHECK(s.name == "AV_SoS_3_FT");
}

TEST_CASE("wrapper parameters follow the peer ids") {
  auto b = build(3, true);
  auto flat = instantiate(b.doc.compositions.back(), b.doc, {});
  std::map<std::string, std::pair<Int, Int>> ids;
  for (const auto& leaf : flat.leaves) {
    if (leaf.contract->name != "LE_Wrapper") continue;
    ids[leaf.path] = {leaf.params.at("myId"), leaf.params.at("yrId")};
  }
  REQUIRE(ids.size() == 6);
  for (const auto& [path, p] : ids) CHECK(p.first != p.second);
  CHECK(ids.at("av[1].le.wrapper[1]") == std::pair<Int, Int>{1, 2});
  CHECK(ids.at("av[1].le.wrapper[2]") == std::pair<Int, Int>{1, 3});
  CHECK(ids.at("av[2].le.wrapper[1]") == std::pair<Int, Int>{2, 1});
  CHECK(ids.at("av[3].le.wrapper[2]") == std::pair<Int, Int>{3, 2});
}

TEST_CASE("single device elects itself") {
  auto b = build(1, false);
  Trace t = runSimulation(*b.sys, FaultPolicy::none(), ExecutionConfig::defaults());
  CHECK(leadersOf(t, b.sys->deviceIds()).at(1) == 1);
  CHECK(t.annotation == "TERMINATED");
}

TEST_CASE("nominal simulation agrees on the max id") {
  for (int n = 2; n <= 4; ++n) {
    auto b = build(n, false);
    Trace t = runSimulation(*b.sys, FaultPolicy::none(), ExecutionConfig::defaults());
    for (const auto& [dev, leader] : leadersOf(t, b.sys->deviceIds())) CHECK(leader == n);
    CHECK(t.annotation == "TERMINATED");
  }
}

TEST_CASE("lost messages from device 2 split the election") {
  // ids {1,2}, no wrapper: drop the only message device 1 would receive
  auto b = build(2, false, 1, true);
  auto none = runSimulation(*b.sys, FaultPolicy::none(), steps(100));
  int occurrence = -1, k = 0;
  for (const auto& e : none.events) {
    if (e.instance != "tl" || e.label != "LE_RecvMsgs") continue;
    if (e.payload["src"] == "av[2].le") occurrence = k;
    ++k;
  }
  REQUIRE(occurrence >= 0);
  auto t = runSimulation(*b.sys, FaultPolicy::scheduled({{"tl", static_cast<std::uint64_t>(occurrence)}}),
                         steps(100));
  auto leaders = leadersOf(t, b.sys->deviceIds());
  CHECK(leaders.at(1) == 1);
  CHECK(leaders.at(2) == 2);
  CHECK(count(t, "dropMessage") == 1);
  CHECK(!replay(*b.sys, t));
}

TEST_CASE("wrapper paths in source/sink mode") {
  auto cfg = steps(200);
  SUBCASE("nominal: one transmission, one handoff") {
    auto sys = AvSosSystem::sourceSink(1, 1, cfg);
    auto t = runSimulation(*sys, FaultPolicy::none(), cfg);
    CHECK(count(t, "transmit") == 1);
    CHECK(count(t, "retransmit") == 0);
    CHECK(handoffs(t).size() == 1);
  }
  SUBCASE("one drop is masked by the retry") {
    auto sys = AvSosSystem::sourceSink(1, 1, cfg);
    auto t = runSimulation(*sys, FaultPolicy::scheduled({{"tl", 0}}), cfg);
    CHECK(count(t, "transmit") + count(t, "retransmit") == 2);
    auto h = handoffs(t);
    REQUIRE(h.size() == 1);
    CHECK(h.begin()->second == 1);
    CHECK(count(t, "give_up") == 0);
  }
  SUBCASE("two drops exhaust maxRetries = 1") {
    auto sys = AvSosSystem::sourceSink(1, 1, cfg);
    auto t = runSimulation(*sys, FaultPolicy::scheduled({{"tl", 0}, {"tl", 1}}), cfg);
    CHECK(count(t, "transmit") + count(t, "retransmit") == 2);
    CHECK(count(t, "give_up") == 1);
    CHECK(handoffs(t).empty());
  }
  SUBCASE("lost ACK makes a duplicate that dedup swallows") {
    auto sys = AvSosSystem::sourceSink(1, 1, cfg);
    // occurrence 0 is the DATA, 1 its ACK
    auto t = runSimulation(*sys, FaultPolicy::scheduled({{"tl", 1}}), cfg);
    CHECK(count(t, "retransmit") == 1);
    std::size_t dups = 0;
    for (const auto& e : t.events)
      if (e.label == "LE_RecvMsgs" && e.payload.value("dup", false)) ++dups;
    CHECK(dups == 1);
    auto h = handoffs(t);
    REQUIRE(h.size() == 1);
    CHECK(h.begin()->second == 1);
  }
  SUBCASE("without dedup the duplicate reaches the owner") {
    auto sys = AvSosSystem::sourceSink(1, 1, cfg, {.dedup = false});
    auto t = runSimulation(*sys, FaultPolicy::scheduled({{"tl", 1}}), cfg);
    auto h = handoffs(t);
    REQUIRE(h.size() == 1);
    CHECK(h.begin()->second == 2);
  }
}

TEST_CASE("dedup: at most one handoff per (src, seq) under random loss") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto b = build(3, true, 2);
    auto cfg = steps(400);
    cfg.seed = seed;
    auto t = runSimulation(*b.sys, FaultPolicy::probabilistic(0.3, seed), cfg);
    for (const auto& [key, n] : handoffs(t)) CHECK(n == 1);
    CHECK_NOTHROW(leadersOf(t, b.sys->deviceIds()));
  }
}

TEST_CASE("simulation is a pure function of its arguments") {
  auto b = build(3, true);
  auto cfg = steps(300);
  cfg.seed = 11;
  auto a = runSimulation(*b.sys, FaultPolicy::probabilistic(0.4, 5), cfg);
  auto c = runSimulation(*b.sys, FaultPolicy::probabilistic(0.4, 5), cfg);
  CHECK(toJsonLines(a) == toJsonLines(c));
  CHECK(!replay(*b.sys, a));
}

TEST_CASE("exhaustive agreement without loss, n = 1..4") {
  for (int n = 1; n <= 4; ++n) {
    auto b = build(n, false);
    auto prop = agreementProperty(b.sys->deviceIds(), n);
    auto r = explore(*b.sys, FaultPolicy::exhaustive(0), steps(400), *prop);
    INFO("n=" << n << " " << r.message);
    CHECK((r.verdict == Verdict::Pass));
  }
}

TEST_CASE("divergence witness without wrapper") {
  auto b = build(2, false, 1, true);
  auto prop = agreementProperty(b.sys->deviceIds());
  auto r = explore(*b.sys, FaultPolicy::exhaustive(1), steps(40), *prop);
  REQUIRE((r.verdict == Verdict::Fail));
  REQUIRE(r.counterexample);
  CHECK(!replay(*b.sys, *r.counterexample));
  auto leaders = leadersOf(*r.counterexample, b.sys->deviceIds());
  CHECK(leaders.at(1) != leaders.at(2));
  CHECK(count(*r.counterexample, "dropMessage") == 1);
}

TEST_CASE("single-drop masking and the give-up bound") {
  auto b = build(2, true, 1);
  auto policy = FaultPolicy::exhaustive(2, 1);
  auto agree = agreementProperty(b.sys->deviceIds());
  CHECK((explore(*b.sys, policy, steps(60), *agree).verdict == Verdict::Pass));
  auto bound = giveUpBoundProperty(1);
  CHECK((explore(*b.sys, policy, steps(60), *bound).verdict == Verdict::Pass));
  auto dup = noDuplicateDecisionProperty();
  CHECK((explore(*b.sys, policy, steps(60), *dup).verdict == Verdict::Pass));
}

TEST_CASE("two drops on one seq defeat maxRetries = 1") {
  auto b = build(2, true, 1);
  auto agree = agreementProperty(b.sys->deviceIds());
  auto r = explore(*b.sys, FaultPolicy::exhaustive(2, 2), steps(80), *agree);
  CHECK((r.verdict == Verdict::Fail));
  // the bound itself still holds: give_up, not a third transmission
  auto bound = giveUpBoundProperty(1);
  CHECK((explore(*b.sys, FaultPolicy::exhaustive(3, 3), steps(80), *bound).verdict == Verdict::Pass));
}

TEST_CASE("give-up bound monitor catches a third transmission") {
  auto prop = giveUpBoundProperty(1);
  std::string st = prop->initial();
  Event e;
  e.instance = "w";
  e.payload = {{"seq", 1}};
  for (const char* label : {"transmit", "retransmit"}) {
    e.label = label;
    st = prop->observe(st, e);
  }
  CHECK(!prop->safetyViolation(st));
  st = prop->observe(st, e);
  CHECK(prop->safetyViolation(st));
  e.payload = {{"seq", 2}};
  e.label = "transmit";
  CHECK(!prop->safetyViolation(prop->observe(st, e)));
}

TEST_CASE("leadersOf") {
  auto decide = [](Int d, Int l) {
    Event e;
    e.instance = "av[" + std::to_string(d) + "].le";
    e.label = "leader_elected";
    e.payload = {{"device", d}, {"leader", l}};
    return e;
  };
  Trace t;
  for (Int d = 1; d <= 3; ++d) t.events.push_back(decide(d, 3));
  auto m = leadersOf(t, {1, 2, 3});
  CHECK(m == std::map<Int, std::optional<Int>>{{1, 3}, {2, 3}, {3, 3}});

  auto empty = leadersOf(Trace{}, {1, 2});
  CHECK(!empty.at(1));
  CHECK(!empty.at(2));

  t.events.push_back(decide(2, 3));
  CHECK_THROWS_AS(leadersOf(t, {1, 2, 3}), DuplicateDecision);
}
