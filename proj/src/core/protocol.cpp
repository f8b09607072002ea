#include "sosc/protocol.hpp"

#include <algorithm>

namespace sosc {

CompiledProtocol::CompiledProtocol(ProtocolStateMachine machine, std::vector<VarDecl> extraVars,
                                   ParamBindings params)
    : machine_(std::move(machine)), params_(std::move(params)) {
  flatten(machine_.root, -1);

  for (auto& v : extraVars) {
    if (v.type.evaluable()) vars_.push_back(std::move(v));
  }
  for (const auto& v : machine_.localVars) vars_.push_back(v);
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    varIndex_.emplace(vars_[i].name, static_cast<int>(i));
    if (vars_[i].type.kind == TypeKind::Enum) {
      const auto& lits = vars_[i].type.literals;
      for (std::size_t k = 0; k < lits.size(); ++k) enumLiterals_.emplace(lits[k], k);
    }
  }

  for (const auto& t : machine_.transitions) {
    auto src = stateIndex_.find(t.source);
    auto tgt = stateIndex_.find(t.target);
    if (src == stateIndex_.end() || tgt == stateIndex_.end()) {
      throw std::invalid_argument("transition " + t.source + " -> " + t.target +
                                  " references an undeclared state");
    }
    if (states_[src->second].region != states_[tgt->second].region) {
      throw std::invalid_argument("transition " + t.source + " -> " + t.target +
                                  " crosses regions");
    }
    flat_.push_back({src->second, tgt->second});
    if (t.trigger.kind == TriggerKind::Event) {
      alphabet_.insert(t.trigger.label);
      if (t.trigger.binder) binderLabels_.insert(t.trigger.label);
    }
  }
}

CompiledProtocol CompiledProtocol::forContract(const Contract& c, const ParamBindings& params) {
  return CompiledProtocol(c.protocol, c.stateVars, params);
}

int CompiledProtocol::flatten(const Region& r, int parentState) {
  int ri = static_cast<int>(regions_.size());
  regions_.push_back({parentState, -1});
  for (const State& s : r.states) {
    int si = static_cast<int>(states_.size());
    states_.push_back({s.name, ri, {}});
    stateIndex_.emplace(s.name, si);
    if (s.initial && regions_[ri].initial < 0) regions_[ri].initial = si;
    for (const Region& child : s.regions) {
      int ci = flatten(child, si);
      states_[si].children.push_back(ci);
    }
  }
  if (regions_[ri].initial < 0 && !r.states.empty()) {
    throw std::invalid_argument("region without an initial state");
  }
  return ri;
}

Configuration CompiledProtocol::initial() const {
  Configuration c;
  c.active.assign(regions_.size(), -1);
  c.vars.assign(vars_.size(), 0);
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    const VarDecl& v = vars_[i];
    Int value = v.type.kind == TypeKind::Int ? v.type.lo : 0;
    if (v.initial) {
      // Earlier variables and parameters are visible in initialisers.
      value = evaluate(v.initial, [&](std::string_view name, bool primed) -> std::optional<Int> {
        if (primed) return std::nullopt;
        if (auto it = varIndex_.find(name); it != varIndex_.end() && it->second < int(i))
          return c.vars[it->second];
        if (auto it = params_.find(name); it != params_.end()) return it->second;
        if (auto it = enumLiterals_.find(name); it != enumLiterals_.end()) return it->second;
        return std::nullopt;
      });
    }
    if (!v.type.contains(value)) {
      throw std::invalid_argument("initial value of '" + v.name + "' outside " +
                                  toString(v.type));
    }
    c.vars[i] = value;
  }
  if (!regions_.empty() && regions_[0].initial >= 0) {
    c.active[0] = regions_[0].initial;
    enter(c, regions_[0].initial);
  }
  return c;
}

void CompiledProtocol::enter(Configuration& c, int state) const {
  for (int r : states_[state].children) {
    int init = regions_[r].initial;
    c.active[r] = init;
    if (init >= 0) enter(c, init);
  }
}

void CompiledProtocol::exitChildren(Configuration& c, int state) const {
  for (int r : states_[state].children) {
    int cur = c.active[r];
    if (cur >= 0) exitChildren(c, cur);
    c.active[r] = -1;
  }
}

Lookup CompiledProtocol::lookupFor(const Configuration& c, const Transition* t,
                                   const Stimulus* s) const {
  return [this, &c, t, s](std::string_view name, bool primed) -> std::optional<Int> {
    if (primed) return std::nullopt;
    if (t && s && t->trigger.binder && *t->trigger.binder == name) return s->payload;
    if (auto it = varIndex_.find(name); it != varIndex_.end()) return c.vars[it->second];
    if (auto it = params_.find(name); it != params_.end()) return it->second;
    if (auto it = enumLiterals_.find(name); it != enumLiterals_.end()) return it->second;
    return std::nullopt;
  };
}

bool CompiledProtocol::enabled(const Configuration& c, std::size_t ti, const Stimulus& s,
                               bool injection) const {
  const Transition& t = machine_.transitions[ti];
  if (t.stereotype == Stereotype::Error && !injection) return false;
  const FlatTransition& f = flat_[ti];
  if (c.active[states_[f.source].region] != f.source) return false;
  if (s.internal) {
    if (t.trigger.kind == TriggerKind::Event) return false;
  } else {
    if (t.trigger.kind != TriggerKind::Event || t.trigger.label != s.label) return false;
    if (t.trigger.binder && !s.payload) return false;
  }
  if (!t.guard) return true;
  return evaluateBool(t.guard, lookupFor(c, &t, &s));
}

std::optional<Configuration> CompiledProtocol::fire(const Configuration& c, std::size_t ti,
                                                    const Stimulus& s) const {
  const Transition& t = machine_.transitions[ti];
  Configuration next = c;
  for (const Action& a : t.actions) {
    if (a.kind != Action::Kind::Assign) continue;  // operations are abstract
    auto it = varIndex_.find(a.target);
    if (it == varIndex_.end()) continue;  // opaque contract state
    Int v = evaluate(a.value, lookupFor(next, &t, &s));
    // Leaving the declared range disables the transition.
    if (!vars_[it->second].type.contains(v)) return std::nullopt;
    next.vars[it->second] = v;
  }
  const FlatTransition& f = flat_[ti];
  int region = states_[f.source].region;
  exitChildren(next, f.source);
  next.active[region] = f.target;
  enter(next, f.target);
  return next;
}

bool CompiledProtocol::stable(const Configuration& c) const {
  Stimulus silent = Stimulus::silent();
  for (std::size_t i = 0; i < machine_.transitions.size(); ++i) {
    if (machine_.transitions[i].stereotype == Stereotype::Error) continue;
    if (enabled(c, i, silent, false) && fire(c, i, silent)) return false;
  }
  return true;
}

std::vector<Firing> CompiledProtocol::step(const Configuration& c, const Stimulus& s,
                                           bool injection) const {
  if (!s.internal && !alphabet_.contains(s.label)) {
    throw UnknownEventError("UNKNOWN_EVENT: '" + s.label + "' is not in the protocol alphabet");
  }
  std::vector<Firing> out;
  if (!s.internal && !stable(c)) return out;
  for (std::size_t i = 0; i < machine_.transitions.size(); ++i) {
    if (!enabled(c, i, s, injection)) continue;
    if (auto next = fire(c, i, s)) out.push_back({i, std::move(*next)});
  }
  return out;
}

bool CompiledProtocol::hasBinder(std::string_view label) const {
  return binderLabels_.contains(std::string(label));
}

std::vector<std::string> CompiledProtocol::activeStates(const Configuration& c) const {
  std::vector<std::string> out;
  for (std::size_t r = 0; r < regions_.size(); ++r) {
    int s = c.active[r];
    if (s >= 0 && states_[s].children.empty()) out.push_back(states_[s].name);
  }
  return out;
}

bool CompiledProtocol::isActive(const Configuration& c, std::string_view state) const {
  auto it = stateIndex_.find(state);
  if (it == stateIndex_.end()) return false;
  return c.active[states_[it->second].region] == it->second;
}

std::optional<Int> CompiledProtocol::var(const Configuration& c, std::string_view name) const {
  auto it = varIndex_.find(name);
  if (it == varIndex_.end()) return std::nullopt;
  return c.vars[it->second];
}

std::string CompiledProtocol::describe(const Configuration& c) const {
  std::string out = "{";
  bool first = true;
  for (const auto& s : activeStates(c)) {
    if (!first) out += ", ";
    out += s;
    first = false;
  }
  out += "}";
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    out += ' ';
    out += vars_[i].name;
    out += '=';
    out += std::to_string(c.vars[i]);
  }
  return out;
}

std::vector<Configuration> step(const ProtocolStateMachine& m, const Configuration& c,
                                const Stimulus& s, bool injection) {
  CompiledProtocol p(m);
  std::vector<Configuration> out;
  for (auto& f : p.step(c, s, injection)) {
    if (std::find(out.begin(), out.end(), f.next) == out.end()) out.push_back(std::move(f.next));
  }
  return out;
}

ProtocolStateMachine specialize(const ProtocolStateMachine& m, const ParamBindings& params) {
  std::map<std::string, Expr, std::less<>> bindings;
  for (const auto& [k, v] : params) bindings.emplace(k, Expr::integer(v));
  ProtocolStateMachine out = m;
  for (auto& v : out.localVars) v.initial = substitute(v.initial, bindings);
  for (auto& t : out.transitions) {
    auto local = bindings;
    if (t.trigger.binder) local.erase(*t.trigger.binder);
    t.guard = substitute(t.guard, local);
    for (auto& a : t.actions) {
      a.value = substitute(a.value, local);
      for (auto& arg : a.args) arg = substitute(arg, local);
    }
  }
  return out;
}

}  // namespace sosc
