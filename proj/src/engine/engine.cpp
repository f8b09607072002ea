#include "sosc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace sosc {

nlohmann::json toJson(const Envelope& e) {
  return {{"src", e.src},
          {"dst", e.dst},
          {"seq", e.seq},
          {"kind", e.kind == EnvelopeKind::Data ? "DATA" : "ACK"},
          {"payload", e.payload}};
}

FaultPolicy FaultPolicy::probabilistic(double p, std::uint64_t seed) {
  FaultPolicy f;
  f.mode = FaultMode::Probabilistic;
  f.dropProb = p;
  f.seed = seed;
  return f;
}

FaultPolicy FaultPolicy::scheduled(std::set<DropPoint> points) {
  FaultPolicy f;
  f.mode = FaultMode::Scheduled;
  f.dropPoints = std::move(points);
  return f;
}

FaultPolicy FaultPolicy::exhaustive(int budget, std::optional<int> perSeq) {
  FaultPolicy f;
  f.mode = FaultMode::Exhaustive;
  f.dropBudget = budget;
  f.perSeqLimit = perSeq;
  return f;
}

void checkPolicy(const FaultPolicy& p) {
  if (!(p.dropProb >= 0.0 && p.dropProb <= 1.0))
    throw std::invalid_argument("CONFIG_ERROR: drop probability must lie in [0, 1]");
  if (p.dropBudget < 0) throw std::invalid_argument("CONFIG_ERROR: negative drop budget");
  if (p.perSeqLimit && *p.perSeqLimit < 0)
    throw std::invalid_argument("CONFIG_ERROR: negative per-sequence limit");
  if (p.persistenceWindow && *p.persistenceWindow < 0)
    throw std::invalid_argument("CONFIG_ERROR: negative persistence window");
}

bool admissible(const FaultPolicy& p, Persistence persistence) {
  if (persistence != Persistence::Transient) return true;
  switch (p.mode) {
    case FaultMode::None:
    case FaultMode::Scheduled:  // finitely many drop points
    case FaultMode::Exhaustive:
      return true;
    case FaultMode::Probabilistic:
      return p.persistenceWindow.has_value() || p.dropProb == 0.0;
  }
  return false;
}

ExecutionConfig ExecutionConfig::defaults() {
  ExecutionConfig c;
  c.timeouts = {{"election_timeout", 10}, {"wrapper_timeout", 3}, {"tl_delivery_timeout", 2}};
  return c;
}

Tick ExecutionConfig::timeout(std::string_view name) const {
  auto it = timeouts.find(name);
  if (it == timeouts.end())
    throw std::invalid_argument("CONFIG_ERROR: missing timeout '" + std::string(name) + "'");
  if (it->second <= 0)
    throw std::invalid_argument("CONFIG_ERROR: timeout '" + std::string(name) + "' must be positive");
  return it->second;
}

void checkConfig(const ExecutionConfig& cfg) {
  if (cfg.maxSteps == 0) throw std::invalid_argument("CONFIG_ERROR: maxSteps must be positive");
  for (const auto& [name, value] : cfg.timeouts) {
    if (value <= 0)
      throw std::invalid_argument("CONFIG_ERROR: timeout '" + name + "' must be positive");
  }
}

bool bernoulli(std::mt19937_64& rng, double p) {
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return u < p;
}

std::pair<bool, std::mt19937_64> injectDecision(const FaultPolicy& policy, const DropSite& site,
                                                std::mt19937_64 rng) {
  if (policy.persistenceWindow && site.t > *policy.persistenceWindow) return {false, rng};
  switch (policy.mode) {
    case FaultMode::None:
    case FaultMode::Exhaustive:
      return {false, rng};
    case FaultMode::Scheduled:
      return {policy.dropPoints.contains(DropPoint{site.instance, site.occurrence}), rng};
    case FaultMode::Probabilistic: {
      bool fire = bernoulli(rng, policy.dropProb);
      return {fire, rng};
    }
  }
  return {false, rng};
}

Event toEvent(const Move& m, Tick t) {
  Event e;
  e.t = t;
  e.instance = m.instance;
  e.label = m.label;
  e.payload = m.payload;
  e.visibility = m.visibility;
  e.error = m.error;
  return e;
}

Candidates candidates(const TransitionSystem& sys, const SystemState& s, Tick now) {
  std::vector<Move> all = sys.moves(s, now);
  Candidates c;
  c.time = now;

  bool urgent = false;
  std::optional<Tick> earliest;
  for (const Move& m : all) {
    if (!m.deadline) {
      urgent = true;
    } else if (!earliest || *m.deadline < *earliest) {
      earliest = m.deadline;
    }
  }
  auto selected = [&](const Move& m) {
    if (urgent) return !m.deadline.has_value();
    return m.deadline.has_value() && *m.deadline == *earliest;
  };
  if (!urgent && earliest) c.time = std::max(now, *earliest);

  std::vector<int> remap(all.size(), -1);
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].error || !selected(all[i])) continue;
    remap[i] = static_cast<int>(c.nominal.size());
    c.nominal.push_back(all[i]);
  }
  for (const Move& m : all) {
    if (!m.error) continue;
    Move e = m;
    if (m.alternativeOf >= 0) {
      int idx = remap[static_cast<std::size_t>(m.alternativeOf)];
      if (idx < 0) continue;  // its nominal sibling is not a candidate now
      e.alternativeOf = idx;
    } else if (!selected(m)) {
      continue;
    }
    c.errors.push_back(std::move(e));
  }
  return c;
}

namespace {

bool eventLess(const Event& a, const Event& b) {
  if (a.t != b.t) return a.t < b.t;
  if (a.instance != b.instance) return a.instance < b.instance;
  if (a.label != b.label) return a.label < b.label;
  if (a.error != b.error) return !a.error;
  return a.payload.dump() < b.payload.dump();
}

bool sameEvent(const Event& a, const Event& b) {
  return a.t == b.t && a.instance == b.instance && a.label == b.label && a.payload == b.payload;
}

}  // namespace

std::string runSimulation(const TransitionSystem& sys, const FaultPolicy& policy,
                          const ExecutionConfig& cfg, const EventSink& sink) {
  checkPolicy(policy);
  checkConfig(cfg);

  std::mt19937_64 sched(cfg.seed);
  std::mt19937_64 faults(policy.seed);
  std::map<std::string, std::uint64_t> occurrences;
  const std::vector<std::string> order = sys.instances();
  std::size_t cursor = 0;

  auto groupOf = [&](const Move& m) {
    auto it = std::find(order.begin(), order.end(), m.instance);
    return static_cast<std::size_t>(it - order.begin());  // unknown instances share the last group
  };

  std::string annotation;
  auto state = sys.initial();
  Tick now = 0;
  std::size_t steps = 0;
  for (;; ++steps) {
    Candidates c = candidates(sys, *state, now);

    // Free-standing error moves are offered to the policy one by one.
    std::vector<const Move*> pool;
    for (const Move& m : c.nominal) pool.push_back(&m);
    for (const Move& e : c.errors) {
      if (e.alternativeOf >= 0) continue;
      std::uint64_t occ = occurrences[e.instance]++;
      auto [fire, next] = injectDecision(policy, {e.instance, occ, c.time}, faults);
      faults = next;
      if (fire) pool.push_back(&e);
    }
    if (pool.empty()) {
      annotation = sys.finished(*state) ? "TERMINATED" : "DEADLOCK_BEFORE_BOUND";
      break;
    }
    if (steps >= cfg.maxSteps) {
      annotation = "BOUND_REACHED";
      break;
    }
    now = c.time;

    // Round-robin: first instance at or after the cursor that can move.
    const std::size_t groups = order.size() + 1;
    std::vector<const Move*> group;
    std::size_t chosenGroup = 0;
    for (std::size_t k = 0; k < groups && group.empty(); ++k) {
      std::size_t g = (cursor + k) % groups;
      for (const Move* m : pool) {
        if (groupOf(*m) == g) group.push_back(m);
      }
      chosenGroup = g;
    }
    const Move* chosen = group.size() == 1 ? group[0] : group[sched() % group.size()];
    cursor = (chosenGroup + 1) % groups;

    if (!chosen->error) {
      auto index = static_cast<int>(chosen - c.nominal.data());
      std::vector<const Move*> alternatives;
      for (const Move& e : c.errors) {
        if (e.alternativeOf == index) alternatives.push_back(&e);
      }
      if (!alternatives.empty()) {
        std::uint64_t occ = occurrences[chosen->instance]++;
        auto [fire, next] = injectDecision(policy, {chosen->instance, occ, now}, faults);
        faults = next;
        if (fire) {
          chosen = alternatives.size() == 1 ? alternatives[0]
                                            : alternatives[sched() % alternatives.size()];
        }
      }
    }

    sys.apply(*state, *chosen, now);
    if (chosen->visibility == Visibility::Visible || cfg.recordInternal) sink(toEvent(*chosen, now));
  }
  return annotation;
}

Trace runSimulation(const TransitionSystem& sys, const FaultPolicy& policy, const ExecutionConfig& cfg) {
  Trace trace;
  trace.annotation = runSimulation(sys, policy, cfg, [&](const Event& e) { trace.events.push_back(e); });
  return trace;
}

std::string_view toString(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "PASS";
    case Verdict::Fail:
      return "FAIL";
    case Verdict::BoundExceeded:
      return "BOUND_EXCEEDED";
  }
  return "PASS";
}

namespace {

struct Node {
  int parent = -1;
  Event event;
  std::size_t depth = 0;
};

struct Frontier {
  int node;
  std::unique_ptr<SystemState> state;
  Tick now;
  int used;
  std::map<std::string, int> perKey;
  std::string monitor;
};

std::string memoKey(const Frontier& f) {
  std::string k = f.state->encode(f.now);
  k += '\x1f';
  k += std::to_string(f.used);
  for (const auto& [key, n] : f.perKey) {
    k += '\x1e';
    k += key;
    k += '=';
    k += std::to_string(n);
  }
  k += '\x1f';
  k += f.monitor;
  return k;
}

Trace pathTo(const std::vector<Node>& nodes, int id) {
  Trace t;
  for (int n = id; n > 0; n = nodes[static_cast<std::size_t>(n)].parent)
    t.events.push_back(nodes[static_cast<std::size_t>(n)].event);
  std::reverse(t.events.begin(), t.events.end());
  return t;
}

}  // namespace

ExplorationResult explore(const TransitionSystem& sys, const FaultPolicy& policy,
                          const ExecutionConfig& cfg, const TraceProperty& property,
                          const ExploreOptions& opts) {
  checkPolicy(policy);
  checkConfig(cfg);
  const bool injecting = policy.mode == FaultMode::Exhaustive;

  ExplorationResult result;
  std::vector<Node> nodes(1);
  std::unordered_set<std::string> visited;

  std::vector<Frontier> layer;
  {
    Frontier root{0, sys.initial(), 0, 0, {}, property.initial()};
    visited.insert(memoKey(root));
    if (auto v = property.safetyViolation(root.monitor)) {
      result.verdict = Verdict::Fail;
      result.counterexample = Trace{};
      result.message = *v;
      result.states = 1;
      return result;
    }
    layer.push_back(std::move(root));
  }

  bool bounded = false;
  for (std::size_t depth = 0; !layer.empty(); ++depth) {
    std::vector<Frontier> next;
    std::optional<std::pair<int, std::string>> safety;  // first violation one level down
    std::optional<std::pair<int, std::string>> final;

    for (Frontier& f : layer) {
      Candidates c = candidates(sys, *f.state, f.now);

      struct Option {
        const Move* move;
        Event event;
        std::size_t order;
      };
      std::vector<Option> options;
      for (const Move& m : c.nominal) options.push_back({&m, toEvent(m, c.time), options.size()});
      if (injecting) {
        for (const Move& e : c.errors) {
          if (f.used >= policy.dropBudget) break;
          if (policy.persistenceWindow && c.time > *policy.persistenceWindow) break;
          if (policy.perSeqLimit && !e.faultKey.empty()) {
            auto it = f.perKey.find(e.faultKey);
            if (it != f.perKey.end() && it->second >= *policy.perSeqLimit) continue;
          }
          options.push_back({&e, toEvent(e, c.time), options.size()});
        }
      }

      if (options.empty()) {
        ++result.traces;
        if (!final) {
          if (auto v = property.finalViolation(f.monitor)) final = {f.node, *v};
        }
        continue;
      }
      if (depth >= cfg.maxSteps) {
        if (!bounded) {
          bounded = true;
          result.longestPrefix = pathTo(nodes, f.node);
        }
        continue;
      }
      if (final || safety) continue;  // the verdict for this depth is already fixed

      std::stable_sort(options.begin(), options.end(), [](const Option& a, const Option& b) {
        return eventLess(a.event, b.event);
      });
      for (Option& o : options) {
        Frontier g{-1, f.state->clone(), c.time, f.used, f.perKey, {}};
        sys.apply(*g.state, *o.move, c.time);
        if (o.move->error) {
          ++g.used;
          if (!o.move->faultKey.empty()) ++g.perKey[o.move->faultKey];
        }
        g.monitor = property.observe(f.monitor, o.event);
        if (!visited.insert(memoKey(g)).second) continue;
        if (visited.size() > opts.stateCap) {
          result.verdict = Verdict::BoundExceeded;
          result.states = visited.size();
          result.message = "STATE_CAP: more than " + std::to_string(opts.stateCap) + " states";
          return result;
        }
        g.node = static_cast<int>(nodes.size());
        nodes.push_back({f.node, std::move(o.event), depth + 1});
        if (auto v = property.safetyViolation(g.monitor)) {
          if (!safety) safety = {g.node, *v};
          continue;
        }
        next.push_back(std::move(g));
      }
    }

    auto fail = [&](const std::pair<int, std::string>& v) {
      result.verdict = Verdict::Fail;
      result.counterexample = pathTo(nodes, v.first);
      result.counterexample->annotation = v.second;
      result.message = v.second;
      result.states = visited.size();
      return result;
    };
    if (final) return fail(*final);
    if (safety) return fail(*safety);
    layer = std::move(next);
  }

  result.states = visited.size();
  if (bounded) {
    result.verdict = Verdict::BoundExceeded;
    result.message = "BOUND_EXCEEDED: a schedule reached " + std::to_string(cfg.maxSteps) +
                     " steps without terminating";
  }
  return result;
}

nlohmann::json toJson(const ExplorationResult& r) {
  nlohmann::json j;
  j["result"] = std::string(toString(r.verdict));
  j["states"] = r.states;
  j["traces"] = r.traces;
  if (!r.message.empty()) j["message"] = r.message;
  if (r.counterexample) {
    nlohmann::json events = nlohmann::json::array();
    for (const Event& e : r.counterexample->events) events.push_back(toJson(e));
    j["counterexample"] = std::move(events);
  }
  if (r.longestPrefix) {
    nlohmann::json events = nlohmann::json::array();
    for (const Event& e : r.longestPrefix->events) events.push_back(toJson(e));
    j["longestPrefix"] = std::move(events);
  }
  return j;
}

std::optional<std::string> replay(const TransitionSystem& sys, const Trace& trace) {
  auto state = sys.initial();
  Tick now = 0;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    Candidates c = candidates(sys, *state, now);
    const Move* match = nullptr;
    for (const Move& m : c.nominal) {
      if (sameEvent(toEvent(m, c.time), e)) {
        match = &m;
        break;
      }
    }
    if (!match) {
      for (const Move& m : c.errors) {
        if (sameEvent(toEvent(m, c.time), e)) {
          match = &m;
          break;
        }
      }
    }
    if (!match) {
      return "event " + std::to_string(i) + " (" + e.instance + " " + e.label + " at t=" +
             std::to_string(e.t) + ") is not enabled";
    }
    now = c.time;
    sys.apply(*state, *match, now);
  }
  return std::nullopt;
}

}  // namespace sosc
