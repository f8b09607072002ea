#include "doctest.h"

#include <map>

#include "sosc/avsos.hpp"
#include "sosc/engine.hpp"

using namespace sosc;

namespace {

// K independent senders, one message each. Every send may be dropped.
// A dropped message never arrives; the end state is the delivered set.
class Lossy : public TransitionSystem {
 public:
  explicit Lossy(int k, bool chain = false) : k_(k), chain_(chain) {}

  struct S : SystemState {
    std::vector<int> st;  // 0 pending, 1 delivered, 2 dropped
    std::unique_ptr<SystemState> clone() const override { return std::make_unique<S>(*this); }
    std::string encode(Tick) const override {
      std::string s;
      for (int v : st) s += char('0' + v);
      return s;
    }
  };

  std::unique_ptr<SystemState> initial() const override {
    auto s = std::make_unique<S>();
    s->st.assign(static_cast<std::size_t>(k_), 0);
    return s;
  }
  std::vector<Move> moves(const SystemState& base, Tick) const override {
    const auto& s = static_cast<const S&>(base);
    std::vector<Move> out;
    for (int i = 0; i < k_; ++i) {
      if (s.st[static_cast<std::size_t>(i)] != 0) continue;
      if (chain_ && i > 0 && s.st[static_cast<std::size_t>(i - 1)] == 0) continue;
      Move m;
      m.instance = "p" + std::to_string(i);
      m.label = "send";
      m.tag = i;
      out.push_back(m);
      Move e = m;
      e.label = "drop";
      e.error = true;
      e.visibility = Visibility::Internal;
      e.alternativeOf = static_cast<int>(out.size()) - 1;
      e.faultKey = chain_ ? "all" : m.instance;
      out.push_back(e);
    }
    return out;
  }
  void apply(SystemState& base, const Move& m, Tick) const override {
    static_cast<S&>(base).st[static_cast<std::size_t>(m.tag)] = m.error ? 2 : 1;
  }
  std::vector<std::string> instances() const override {
    std::vector<std::string> out;
    for (int i = 0; i < k_; ++i) out.push_back("p" + std::to_string(i));
    return out;
  }

 private:
  int k_;
  bool chain_;
};

class Trivial : public TraceProperty {
 public:
  std::string name() const override { return "true"; }
  std::string initial() const override { return ""; }
  std::string observe(const std::string& s, const Event&) const override { return s; }
  std::optional<std::string> safetyViolation(const std::string&) const override { return std::nullopt; }
  std::optional<std::string> finalViolation(const std::string&) const override { return std::nullopt; }
};

// Counts error events; safety fails above `limit`, final fails when any occurred.
class Drops : public TraceProperty {
 public:
  explicit Drops(int limit, bool noneAllowed = false) : limit_(limit), none_(noneAllowed) {}
  std::string name() const override { return "drops"; }
  std::string initial() const override { return "0"; }
  std::string observe(const std::string& s, const Event& e) const override {
    return e.error ? std::to_string(std::stoi(s) + 1) : s;
  }
  std::optional<std::string> safetyViolation(const std::string& s) const override {
    if (std::stoi(s) > limit_) return "too many drops";
    return std::nullopt;
  }
  std::optional<std::string> finalViolation(const std::string& s) const override {
    if (none_ && s != "0") return "a message was lost";
    return std::nullopt;
  }

 private:
  int limit_;
  bool none_;
};

// DATA deliveries on each (src, dst) stream never go back in seq.
class Fifo : public TraceProperty {
 public:
  std::string name() const override { return "fifo"; }
  std::string initial() const override { return nlohmann::json::object().dump(); }
  std::string observe(const std::string& s, const Event& e) const override {
    if (e.label != "LE_RecvMsgs" || e.payload.value("kind", "") != "DATA") return s;
    auto j = nlohmann::json::parse(s);
    std::string key = e.payload["src"].get<std::string>() + ">" + e.payload["dst"].get<std::string>();
    Int seq = e.payload["seq"].get<Int>();
    if (j.contains(key) && j[key].get<Int>() > seq) j["bad"] = true;
    j[key] = seq;
    return j.dump();
  }
  std::optional<std::string> safetyViolation(const std::string& s) const override {
    if (nlohmann::json::parse(s).contains("bad")) return "out of order";
    return std::nullopt;
  }
  std::optional<std::string> finalViolation(const std::string&) const override { return std::nullopt; }
};

std::uint64_t choose(int n, int k) {
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

struct Av {
  ModelDocument doc;
  std::unique_ptr<avsos::AvSosSystem> sys;
};

Av av(int n, bool ft, std::optional<bool> faultyTl = std::nullopt,
      ExecutionConfig cfg = ExecutionConfig::defaults()) {
  Av a;
  a.doc = avsos::withCatalog(avsos::buildAvSos(n, ft, 1, faultyTl));
  a.sys = std::make_unique<avsos::AvSosSystem>(a.doc.compositions.back(), a.doc, cfg);
  return a;
}

}  // namespace

TEST_CASE("injectDecision") {
  std::mt19937_64 rng(1);
  DropSite site{"tl", 3, 0};
  CHECK_FALSE(injectDecision(FaultPolicy::none(), site, rng).first);
  CHECK(injectDecision(FaultPolicy::scheduled({{"tl", 3}}), site, rng).first);
  CHECK_FALSE(injectDecision(FaultPolicy::scheduled({{"tl", 2}}), site, rng).first);
  CHECK(injectDecision(FaultPolicy::probabilistic(1.0, 9), site, rng).first);
  CHECK_FALSE(injectDecision(FaultPolicy::probabilistic(0.0, 9), site, rng).first);
  CHECK_FALSE(injectDecision(FaultPolicy::exhaustive(3), site, rng).first);

  // the window switches faults off after it closes
  auto windowed = FaultPolicy::probabilistic(1.0, 9);
  windowed.persistenceWindow = 5;
  CHECK(injectDecision(windowed, {"tl", 0, 5}, rng).first);
  CHECK_FALSE(injectDecision(windowed, {"tl", 0, 6}, rng).first);

  // the probabilistic branch consumes exactly one draw
  std::mt19937_64 a(77), b(77);
  auto [fire, after] = injectDecision(FaultPolicy::probabilistic(0.5, 0), site, a);
  double u = static_cast<double>(b() >> 11) * 0x1.0p-53;
  CHECK(fire == (u < 0.5));
  CHECK(after == b);
}

TEST_CASE("bernoulli frequency") {
  std::mt19937_64 rng(5);
  int hits = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) hits += bernoulli(rng, 0.3);
  CHECK(std::abs(hits / double(n) - 0.3) < 0.005);
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(checkPolicy(FaultPolicy::probabilistic(1.5, 0)), std::invalid_argument);
  CHECK_THROWS_AS(checkPolicy(FaultPolicy::exhaustive(-1)), std::invalid_argument);
  CHECK_THROWS_AS(checkPolicy(FaultPolicy::exhaustive(1, -2)), std::invalid_argument);
  auto cfg = ExecutionConfig::defaults();
  CHECK(cfg.timeout("election_timeout") == 10);
  CHECK(cfg.timeout("wrapper_timeout") == 3);
  CHECK(cfg.timeout("tl_delivery_timeout") == 2);
  CHECK_THROWS_AS(cfg.timeout("nope"), std::invalid_argument);
  cfg.timeouts["wrapper_timeout"] = 0;
  CHECK_THROWS_AS(checkConfig(cfg), std::invalid_argument);
  cfg = ExecutionConfig::defaults();
  cfg.maxSteps = 0;
  CHECK_THROWS_AS(checkConfig(cfg), std::invalid_argument);
  try {
    checkConfig(cfg);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).starts_with("CONFIG_ERROR"));
  }
}

TEST_CASE("admissibility of transient faults") {
  CHECK(admissible(FaultPolicy::exhaustive(2), Persistence::Transient));
  auto p = FaultPolicy::probabilistic(0.3, 1);
  CHECK_FALSE(admissible(p, Persistence::Transient));
  p.persistenceWindow = 100;
  CHECK(admissible(p, Persistence::Transient));
  CHECK(admissible(FaultPolicy::probabilistic(0.3, 1), Persistence::Permanent));
}

TEST_CASE("explorer end states match the subset count") {
  for (int k = 1; k <= 6; ++k) {
    for (int b = 0; b <= k; ++b) {
      Lossy sys(k);
      auto cfg = ExecutionConfig::defaults();
      cfg.maxSteps = 50;
      auto r = explore(sys, FaultPolicy::exhaustive(b), cfg, Trivial{});
      std::uint64_t expect = 0;
      for (int j = 0; j <= b; ++j) expect += choose(k, j);
      CHECK((r.verdict == Verdict::Pass));
      CHECK(r.traces == expect);
    }
  }
}

TEST_CASE("the budget is never overrun") {
  for (int b = 0; b <= 4; ++b) {
    Lossy sys(5);
    auto r = explore(sys, FaultPolicy::exhaustive(b), ExecutionConfig::defaults(), Drops(b));
    CHECK((r.verdict == Verdict::Pass));
    // and it is reached: one more than allowed is a violation for b < 5
    auto tight = explore(sys, FaultPolicy::exhaustive(b + 1), ExecutionConfig::defaults(), Drops(b));
    CHECK((tight.verdict == Verdict::Fail));
    REQUIRE(tight.counterexample);
    CHECK(tight.counterexample->events.size() == static_cast<std::size_t>(b + 1));
  }
}

TEST_CASE("per-key limits") {
  // chained senders share one key: at most one drop overall
  Lossy sys(4, true);
  auto r = explore(sys, FaultPolicy::exhaustive(4, 1), ExecutionConfig::defaults(), Trivial{});
  CHECK(r.traces == 5);
  // independent keys: budget is the only limit
  Lossy free(4);
  auto q = explore(free, FaultPolicy::exhaustive(2, 1), ExecutionConfig::defaults(), Trivial{});
  CHECK(q.traces == 1 + 4 + 6);
}

TEST_CASE("counterexamples are minimal and replay") {
  Lossy sys(3);
  auto r = explore(sys, FaultPolicy::exhaustive(1), ExecutionConfig::defaults(), Drops(5, true));
  REQUIRE((r.verdict == Verdict::Fail));
  REQUIRE(r.counterexample);
  CHECK(r.counterexample->events.size() == 3);
  int errors = 0;
  for (const auto& e : r.counterexample->events) errors += e.error;
  CHECK(errors == 1);
  CHECK_FALSE(replay(sys, *r.counterexample).has_value());
  auto j = toJson(r);
  CHECK(j["result"] == "FAIL");
  CHECK(j["counterexample"].size() == 3);

  // a doctored trace is rejected
  Trace bad = *r.counterexample;
  bad.events[0].instance = "p9";
  CHECK(replay(sys, bad).has_value());
}

TEST_CASE("bounds: BOUND_EXCEEDED and the state cap") {
  Lossy sys(6);
  auto cfg = ExecutionConfig::defaults();
  cfg.maxSteps = 3;
  auto r = explore(sys, FaultPolicy::none(), cfg, Trivial{});
  CHECK((r.verdict == Verdict::BoundExceeded));
  REQUIRE(r.longestPrefix);
  CHECK(r.longestPrefix->events.size() == 3);
  CHECK(toJson(r).contains("longestPrefix"));

  auto capped = explore(sys, FaultPolicy::exhaustive(6), ExecutionConfig::defaults(), Trivial{}, {10});
  CHECK((capped.verdict == Verdict::BoundExceeded));
  CHECK(capped.message.starts_with("STATE_CAP"));

  auto sim = runSimulation(sys, FaultPolicy::none(), cfg);
  CHECK(sim.annotation == "BOUND_REACHED");
  CHECK(sim.events.size() == 3);
}

TEST_CASE("simulator: round robin, scheduled drops, streaming form") {
  Lossy sys(4);
  auto t = runSimulation(sys, FaultPolicy::none(), ExecutionConfig::defaults());
  CHECK(t.annotation == "TERMINATED");
  REQUIRE(t.events.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(t.events[static_cast<std::size_t>(i)].instance == "p" + std::to_string(i));

  auto d = runSimulation(sys, FaultPolicy::scheduled({{"p2", 0}}), ExecutionConfig::defaults());
  for (const auto& e : d.events) CHECK(e.error == (e.instance == "p2"));

  auto cfg = ExecutionConfig::defaults();
  cfg.recordInternal = false;
  std::vector<Event> seen;
  auto annot = runSimulation(sys, FaultPolicy::probabilistic(1.0, 3), cfg, [&](const Event& e) { seen.push_back(e); });
  CHECK(annot == "TERMINATED");
  CHECK(seen.empty());
}

TEST_CASE("simulator traces are schedules the explorer accepts") {
  for (bool ft : {false, true}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto a = av(ft ? 2 : 3, ft);
      auto cfg = ExecutionConfig::defaults();
      cfg.seed = seed;
      auto t = runSimulation(*a.sys, FaultPolicy::probabilistic(ft ? 0.3 : 0.0, seed * 7 + 1), cfg);
      CHECK_FALSE(replay(*a.sys, t).has_value());
    }
  }
}

TEST_CASE("transport queues are FIFO") {
  auto a = av(3, false);
  auto r = explore(*a.sys, FaultPolicy::none(), ExecutionConfig::defaults(), Fifo{});
  CHECK((r.verdict == Verdict::Pass));
  auto f = av(2, true);
  auto cfg = ExecutionConfig::defaults();
  cfg.maxSteps = 60;
  auto q = explore(*f.sys, FaultPolicy::exhaustive(2, 1), cfg, Fifo{});
  CHECK((q.verdict == Verdict::Pass));
}

TEST_CASE("dropping every message from device 1 hides its id") {
  auto a = av(2, false, true);
  std::set<DropPoint> all;
  for (std::uint64_t k = 0; k < 8; ++k) all.insert({"tl", k});
  auto t = runSimulation(*a.sys, FaultPolicy::scheduled(all), ExecutionConfig::defaults());
  for (const auto& e : t.events) {
    if (e.label == "LE_RecvMsgs") CHECK(e.payload["src"] != "av[1].le");
  }
  auto leaders = avsos::leadersOf(t, {1, 2});
  CHECK(leaders[2] == std::optional<Int>(2));
}

TEST_CASE("100 seeded nominal runs at n = 4 elect 4") {
  auto a = av(4, false);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto cfg = ExecutionConfig::defaults();
    cfg.seed = seed;
    auto t = runSimulation(*a.sys, FaultPolicy::none(), cfg);
    CHECK(t.annotation == "TERMINATED");
    for (const auto& [d, l] : avsos::leadersOf(t, {1, 2, 3, 4})) CHECK(l == std::optional<Int>(4));
  }
}

TEST_CASE("determinism") {
  auto a = av(3, true);
  auto cfg = ExecutionConfig::defaults();
  cfg.seed = 11;
  auto policy = FaultPolicy::probabilistic(0.25, 4);
  auto first = toJsonLines(runSimulation(*a.sys, policy, cfg));
  for (int i = 0; i < 3; ++i) CHECK(toJsonLines(runSimulation(*a.sys, policy, cfg)) == first);
  auto small = av(2, true);
  auto r1 = toJson(explore(*small.sys, FaultPolicy::exhaustive(1), cfg, *avsos::noDuplicateDecisionProperty()));
  auto r2 = toJson(explore(*small.sys, FaultPolicy::exhaustive(1), cfg, *avsos::noDuplicateDecisionProperty()));
  CHECK(r1 == r2);
}
