#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sosc/model.hpp"

namespace sosc {

using ParamBindings = std::map<std::string, Int, std::less<>>;

// Input offered to a protocol: a visible event (optionally carrying an integer
// payload) or the internal "silent" stimulus that fires completion and
// internal transitions.
struct Stimulus {
  bool internal = false;
  std::string label;
  std::optional<Int> payload;

  static Stimulus event(std::string label, std::optional<Int> payload = std::nullopt) {
    return {false, std::move(label), payload};
  }
  static Stimulus silent() { return {true, {}, std::nullopt}; }
};

// Active simple state per region (-1 when the region is inactive) plus the
// value of every evaluable variable.
struct Configuration {
  std::vector<int> active;
  std::vector<Int> vars;
  auto operator<=>(const Configuration&) const = default;
};

struct Firing {
  std::size_t transition;
  Configuration next;
};

class UnknownEventError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A protocol state machine resolved to indices, ready for stepping. Construct
// once and reuse; instances are immutable.
class CompiledProtocol {
 public:
  // `extraVars` are contract state variables that share the protocol's
  // variable space (only evaluable ones are kept). `params` bind contract
  // parameters used in guards, actions and initial values.
  explicit CompiledProtocol(ProtocolStateMachine machine, std::vector<VarDecl> extraVars = {},
                            ParamBindings params = {});

  static CompiledProtocol forContract(const Contract& c, const ParamBindings& params = {});

  const ProtocolStateMachine& machine() const { return machine_; }
  const Transition& transition(std::size_t i) const { return machine_.transitions[i]; }

  Configuration initial() const;

  // All configurations reachable by firing exactly one enabled transition.
  // Event stimuli only fire when the configuration is stable (no nominal
  // completion or internal transition enabled). ERROR transitions take part
  // only when `injection` is set. Throws UnknownEventError for labels outside
  // the alphabet.
  std::vector<Firing> step(const Configuration& c, const Stimulus& s, bool injection) const;

  bool stable(const Configuration& c) const;

  // Visible labels of the machine.
  const std::set<std::string>& alphabet() const { return alphabet_; }
  bool hasBinder(std::string_view label) const;

  std::vector<std::string> activeStates(const Configuration& c) const;
  bool isActive(const Configuration& c, std::string_view state) const;
  std::optional<Int> var(const Configuration& c, std::string_view name) const;
  std::string describe(const Configuration& c) const;

 private:
  struct FlatState {
    std::string name;
    int region = -1;
    std::vector<int> children;  // child region indices
  };
  struct FlatRegion {
    int parent = -1;  // owning state, -1 for the root region
    int initial = -1;
  };
  struct FlatTransition {
    int source = -1;
    int target = -1;
  };

  int flatten(const Region& r, int parentState);
  void enter(Configuration& c, int state) const;
  void exitChildren(Configuration& c, int state) const;
  bool enabled(const Configuration& c, std::size_t t, const Stimulus& s, bool injection) const;
  std::optional<Configuration> fire(const Configuration& c, std::size_t t,
                                    const Stimulus& s) const;
  Lookup lookupFor(const Configuration& c, const Transition* t, const Stimulus* s) const;

  ProtocolStateMachine machine_;
  ParamBindings params_;
  std::vector<FlatState> states_;
  std::vector<FlatRegion> regions_;
  std::vector<FlatTransition> flat_;
  std::vector<VarDecl> vars_;
  std::map<std::string, int, std::less<>> varIndex_;
  std::map<std::string, int, std::less<>> stateIndex_;
  std::map<std::string, Int, std::less<>> enumLiterals_;
  std::set<std::string> alphabet_;
  std::set<std::string> binderLabels_;
};

// Convenience form: compiles the machine and returns the distinct successor
// configurations.
std::vector<Configuration> step(const ProtocolStateMachine& m, const Configuration& c,
                                const Stimulus& s, bool injection);

// Rewrites every expression of the machine, replacing parameters by literals.
ProtocolStateMachine specialize(const ProtocolStateMachine& m, const ParamBindings& params);

}  // namespace sosc
