#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sosc/model.hpp"
#include "sosc/trace.hpp"

namespace sosc {

// ---- messages ---------------------------------------------------------------

enum class EnvelopeKind { Data, Ack };

struct Envelope {
  std::string src;
  std::string dst;
  Int seq = 0;
  EnvelopeKind kind = EnvelopeKind::Data;
  Int payload = 0;
  auto operator<=>(const Envelope&) const = default;
};

nlohmann::json toJson(const Envelope& e);

// ---- configuration ----------------------------------------------------------

enum class FaultMode { None, Probabilistic, Scheduled, Exhaustive };

struct DropPoint {
  std::string instance;
  std::uint64_t occurrence = 0;  // 0-based count of ERROR opportunities at the instance
  auto operator<=>(const DropPoint&) const = default;
};

struct FaultPolicy {
  FaultMode mode = FaultMode::None;
  double dropProb = 0.0;
  std::uint64_t seed = 0;
  std::set<DropPoint> dropPoints;
  int dropBudget = 0;
  // Exhaustive only: at most this many drops per fault key (for the AV
  // models, per logical DATA sequence number).
  std::optional<int> perSeqLimit;
  // Faults may only strike while logical time is within [0, window].
  std::optional<Tick> persistenceWindow;

  static FaultPolicy none() { return {}; }
  static FaultPolicy probabilistic(double p, std::uint64_t seed);
  static FaultPolicy scheduled(std::set<DropPoint> points);
  static FaultPolicy exhaustive(int budget, std::optional<int> perSeq = std::nullopt);
};

// CONFIG_ERROR (std::invalid_argument) on out-of-range fields.
void checkPolicy(const FaultPolicy& p);

// A TRANSIENT dysfunction needs a bounded presence: a finite window or a
// finite drop budget.
bool admissible(const FaultPolicy& p, Persistence persistence);

struct ExecutionConfig {
  std::size_t maxSteps = 1000;
  std::map<std::string, Tick, std::less<>> timeouts;
  std::uint64_t seed = 0;
  bool recordInternal = true;

  // election_timeout 10, wrapper_timeout 3, tl_delivery_timeout 2.
  static ExecutionConfig defaults();
  // Throws std::invalid_argument("CONFIG_ERROR: ...") when missing or <= 0.
  Tick timeout(std::string_view name) const;
};

void checkConfig(const ExecutionConfig& cfg);

struct DropSite {
  std::string instance;
  std::uint64_t occurrence = 0;
  Tick t = 0;
};

// Decision for one ERROR-transition opportunity. Exhaustive mode is handled
// by explore() and always answers false here.
std::pair<bool, std::mt19937_64> injectDecision(const FaultPolicy& policy, const DropSite& site,
                                                std::mt19937_64 rng);

// u = (x >> 11) * 2^-53 for the next 64-bit draw; fire iff u < p.
bool bernoulli(std::mt19937_64& rng, double p);

// ---- transition systems -----------------------------------------------------

class SystemState {
 public:
  virtual ~SystemState() = default;
  virtual std::unique_ptr<SystemState> clone() const = 0;
  // Canonical encoding relative to `now`: equal encodings must have equal
  // futures (timer deadlines are stored relative to the current time).
  virtual std::string encode(Tick now) const = 0;
};

struct Move {
  std::string instance;
  std::string label;
  Visibility visibility = Visibility::Visible;
  nlohmann::json payload;
  bool error = false;
  // Timer moves become enabled when logical time reaches the deadline.
  std::optional<Tick> deadline;
  // Groups drops for per-key limits (e.g. "av[1].le>av[2].le#1").
  std::string faultKey;
  // For an error move: index of the nominal move it replaces, or -1 when the
  // error move is a free-standing alternative.
  int alternativeOf = -1;
  // System-private data used by apply().
  std::int64_t tag = 0;
  std::int64_t tag2 = 0;
};

class TransitionSystem {
 public:
  virtual ~TransitionSystem() = default;
  virtual std::unique_ptr<SystemState> initial() const = 0;
  // All moves, nominal and error, in a deterministic order.
  virtual std::vector<Move> moves(const SystemState& s, Tick now) const = 0;
  virtual void apply(SystemState& s, const Move& m, Tick now) const = 0;
  // Instance order for the round-robin scheduler.
  virtual std::vector<std::string> instances() const = 0;
  // True when a state without moves is a proper end, not a deadlock.
  virtual bool finished(const SystemState&) const { return true; }
};

Event toEvent(const Move& m, Tick t);

// Candidates at a state: urgent moves if any, else the timer moves with the
// earliest deadline (time then jumps there). Error moves are returned
// separately, paired with their nominal sibling where one exists.
struct Candidates {
  Tick time = 0;
  std::vector<Move> nominal;
  std::vector<Move> errors;  // alternativeOf indexes into `nominal`
};

Candidates candidates(const TransitionSystem& sys, const SystemState& s, Tick now);

// ---- properties -------------------------------------------------------------

// Monitor over the event stream. States are opaque strings so they can join
// the explorer's memo key.
class TraceProperty {
 public:
  virtual ~TraceProperty() = default;
  virtual std::string name() const = 0;
  virtual std::string initial() const = 0;
  virtual std::string observe(const std::string& state, const Event& e) const = 0;
  // Violated as soon as the prefix is bad.
  virtual std::optional<std::string> safetyViolation(const std::string& state) const = 0;
  // Checked on maximal (terminated or deadlocked) schedules only.
  virtual std::optional<std::string> finalViolation(const std::string& state) const = 0;
};

// ---- execution --------------------------------------------------------------

// Round-robin over instances with a seeded tie-break; faults via
// injectDecision. A pure function of its arguments.
Trace runSimulation(const TransitionSystem& sys, const FaultPolicy& policy, const ExecutionConfig& cfg);

// Streaming form for long runs: events go to `sink` as they happen; returns
// the terminal annotation.
using EventSink = std::function<void(const Event&)>;
std::string runSimulation(const TransitionSystem& sys, const FaultPolicy& policy, const ExecutionConfig& cfg,
                          const EventSink& sink);

enum class Verdict { Pass, Fail, BoundExceeded };
std::string_view toString(Verdict v);

struct ExplorationResult {
  Verdict verdict = Verdict::Pass;
  std::size_t states = 0;
  std::size_t traces = 0;  // distinct maximal end states
  std::optional<Trace> counterexample;  // FAIL: minimal and lexicographically first
  std::optional<Trace> longestPrefix;   // BOUND_EXCEEDED
  std::string message;
};

struct ExploreOptions {
  std::size_t stateCap = 5'000'000;
};

// Breadth-first over all interleavings and drop choices within the budget.
ExplorationResult explore(const TransitionSystem& sys, const FaultPolicy& policy,
                          const ExecutionConfig& cfg, const TraceProperty& property,
                          const ExploreOptions& opts = {});

nlohmann::json toJson(const ExplorationResult& r);

// Checks that `trace` (with internal events) is a schedule of `sys`:
// every event matches a candidate move at its time. Returns an error
// message or nullopt.
std::optional<std::string> replay(const TransitionSystem& sys, const Trace& trace);

// ---- generic product of DSL contracts --------------------------------------

struct FlatComposition;

// Untimed interleaving product of the leaf protocols of a composition.
// Labels named in a connection synchronise pairwise between the two sides;
// all other labels fire on their own. Payload-carrying events range over
// `payloadDomain`.
class ProductSystem : public TransitionSystem {
 public:
  ProductSystem(const FlatComposition& flat, std::vector<Int> payloadDomain = {0, 1, 2, 3});
  ~ProductSystem() override;

  std::unique_ptr<SystemState> initial() const override;
  std::vector<Move> moves(const SystemState& s, Tick now) const override;
  void apply(SystemState& s, const Move& m, Tick now) const override;
  std::vector<std::string> instances() const override;

  std::size_t size() const;
  std::string describe(const SystemState& s) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sosc
