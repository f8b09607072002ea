#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sosc/expr.hpp"

namespace sosc {

struct TypedName {
  std::string name;
  Type type;
  bool operator==(const TypedName&) const = default;
};

struct VarDecl {
  std::string name;
  Type type;
  Expr initial;  // may be absent for opaque types
  bool operator==(const VarDecl&) const = default;
};

struct OperationSig {
  std::string name;
  std::vector<TypedName> args;
  Expr pre;   // absent means `true`
  Expr post;  // may reference primed state variables
  bool operator==(const OperationSig&) const = default;
};

enum class Stereotype { Nominal, Error };

enum class TriggerKind {
  Event,       // `on LABEL` or `on LABEL(x)`, visible
  Internal,    // `internal LABEL`, not observable
  Completion,  // no trigger at all
};

struct Trigger {
  TriggerKind kind = TriggerKind::Completion;
  std::string label;
  std::optional<std::string> binder;  // payload variable for `on LABEL(x)`
  bool operator==(const Trigger&) const = default;
};

struct Action {
  enum class Kind { Assign, Invoke };
  Kind kind = Kind::Assign;
  std::string target;       // assigned variable or invoked operation
  Expr value;               // Assign only
  std::vector<Expr> args;   // Invoke only
  bool operator==(const Action&) const = default;
};

struct Transition {
  std::string source;
  std::string target;
  Trigger trigger;
  Expr guard;
  std::vector<Action> actions;
  Stereotype stereotype = Stereotype::Nominal;
  bool operator==(const Transition&) const = default;

  bool visible() const { return trigger.kind == TriggerKind::Event; }
  // Label used in traces: the event label, the internal label, or "tau".
  std::string traceLabel() const;
};

enum class StateKind { Simple, Composite, Parallel };

struct Region;

struct State {
  std::string name;
  StateKind kind = StateKind::Simple;
  bool initial = false;
  std::vector<Region> regions;  // one for composite, two or more for parallel
};

struct Region {
  std::string name;  // empty for the single region of a composite state
  std::vector<State> states;
};

bool operator==(const State& a, const State& b);
bool operator==(const Region& a, const Region& b);

struct ProtocolStateMachine {
  std::vector<VarDecl> localVars;
  Region root;
  std::vector<Transition> transitions;
  bool operator==(const ProtocolStateMachine&) const = default;

  bool empty() const { return root.states.empty() && transitions.empty(); }
};

struct Contract {
  std::string name;
  std::vector<TypedName> params;
  std::vector<VarDecl> stateVars;
  std::vector<OperationSig> operations;
  std::vector<Expr> invariants;
  std::vector<std::string> failureModes;
  std::vector<std::string> mitigates;
  ProtocolStateMachine protocol;
  bool operator==(const Contract&) const = default;
};

enum class Level { CS, SOS };
enum class Persistence { Transient, Permanent, Unspecified };
enum class DysfunctionKind { Fault, Error, Failure };

struct Dysfunction {
  std::string id;
  std::string name;
  std::string description;
  Level level = Level::CS;
  Persistence persistence = Persistence::Unspecified;
  bool waived = false;  // deliberately unmitigated, still reported
  bool operator==(const Dysfunction&) const = default;
};

enum class Relation { Causes, LocatedIn, Affects, ExhibitedBy, MitigatedBy };

struct DependabilityEdge {
  Relation relation = Relation::Causes;
  std::string from;
  std::string to;
  bool operator==(const DependabilityEdge&) const = default;
};

struct DependabilityModel {
  std::vector<Dysfunction> faults;
  std::vector<Dysfunction> errors;
  std::vector<Dysfunction> failures;
  std::vector<DependabilityEdge> edges;
  bool operator==(const DependabilityModel&) const = default;

  const Dysfunction* find(std::string_view id, DysfunctionKind* kind = nullptr) const;
};

struct Endpoint {
  std::string instance;
  std::string port;
  bool operator==(const Endpoint&) const = default;
};

struct Connection {
  Endpoint a;
  Endpoint b;
  std::vector<std::string> labels;
  bool operator==(const Connection&) const = default;
};

// Actual parameters may reference the enclosing composition's parameters and
// the copy index `i` (1-based) of a multiplied instance.
struct InstanceDecl {
  std::string name;
  std::string ref;  // contract or composition name
  int multiplicity = 1;
  std::vector<Expr> args;
  bool operator==(const InstanceDecl&) const = default;
};

struct SoSComposition {
  std::string name;
  std::vector<TypedName> params;
  std::vector<SoSComposition> locals;  // nested compositions visible only here
  std::vector<InstanceDecl> children;
  std::vector<Connection> connections;
  bool operator==(const SoSComposition&) const = default;
};

struct SourceSpan {
  std::string file;
  int startLine = 1;
  int startCol = 1;
  int endLine = 1;
  int endCol = 1;
  bool operator==(const SourceSpan&) const = default;
};

struct ModelDocument {
  std::vector<Contract> contracts;
  std::vector<SoSComposition> compositions;
  std::optional<DependabilityModel> dependability;
  std::map<std::string, SourceSpan> spans;  // element id -> location

  const Contract* findContract(std::string_view name) const;
  const SoSComposition* findComposition(std::string_view name) const;
};

// Structural equality; source spans are ignored.
bool operator==(const ModelDocument& a, const ModelDocument& b);

std::string_view toString(Level l);
std::string_view toString(Persistence p);
std::string_view toString(Relation r);
std::string_view toString(DysfunctionKind k);

// Element ids used for diagnostics and span lookup.
namespace element {
std::string contract(std::string_view name);
std::string composition(std::string_view name);
std::string dysfunction(std::string_view id);
std::string edge(std::size_t index);
}  // namespace element

}  // namespace sosc
