#include "sosc/validate.hpp"

#include <functional>
#include <map>
#include <set>
#include <stdexcept>

namespace sosc {

namespace {

using Scope = std::map<std::string, Type, std::less<>>;

class Collector {
 public:
  explicit Collector(Diagnostics& out) : out_(out) {}

  void add(std::string id, std::string rule, std::string message) {
    Diagnostic d;
    d.elementId = std::move(id);
    d.rule = std::move(rule);
    d.message = std::move(message);
    out_.push_back(std::move(d));
  }

 private:
  Diagnostics& out_;
};

void addEnumLiterals(Scope& scope, const Type& t) {
  if (t.kind != TypeKind::Enum) return;
  for (const auto& lit : t.literals) scope.emplace(lit, t);
}

bool assignable(const Type& target, const Type& value) {
  if (target.kind == TypeKind::Opaque || value.kind == TypeKind::Opaque) return true;
  if (target.kind == TypeKind::Enum) return target == value;
  return target.kind == value.kind;
}

// Type-checks `e` in `scope`. Unresolved names and type errors are reported
// under separate rules so each mutation maps to one rule.
void checkExpr(Collector& out, const std::string& id, const Expr& e, const Scope& scope,
               bool wantBool, std::string_view what) {
  if (!e) return;
  std::vector<std::string> names;
  collectIdentifiers(e, names);
  bool unresolved = false;
  for (const auto& n : names) {
    if (!scope.contains(n)) {
      out.add(id, "UNRESOLVED_IDENTIFIER", "unresolved identifier '" + n + "' in " + std::string(what));
      unresolved = true;
    }
  }
  if (unresolved) return;
  std::vector<std::string> errors;
  auto t = inferType(
      e,
      [&](std::string_view n) -> std::optional<Type> {
        if (auto it = scope.find(n); it != scope.end()) return it->second;
        return std::nullopt;
      },
      errors);
  for (const auto& msg : errors) out.add(id, "TYPE_ERROR", msg + " in " + std::string(what));
  if (errors.empty() && wantBool && t && t->kind != TypeKind::Bool && t->kind != TypeKind::Opaque)
    out.add(id, "TYPE_ERROR", std::string(what) + " '" + toString(e) + "' is not boolean");
}

void checkInitial(Collector& out, const std::string& id, const VarDecl& v, const Scope& scope) {
  if (!v.initial) return;
  std::vector<std::string> names;
  collectIdentifiers(v.initial, names);
  for (const auto& n : names) {
    if (!scope.contains(n)) {
      out.add(id, "UNRESOLVED_IDENTIFIER",
              "unresolved identifier '" + n + "' in initial value of '" + v.name + "'");
      return;
    }
  }
  std::vector<std::string> errors;
  auto t = inferType(
      v.initial,
      [&](std::string_view n) -> std::optional<Type> {
        if (auto it = scope.find(n); it != scope.end()) return it->second;
        return std::nullopt;
      },
      errors);
  for (const auto& msg : errors) out.add(id, "TYPE_ERROR", msg);
  if (errors.empty() && t && !assignable(v.type, *t)) {
    out.add(id, "TYPE_ERROR", "initial value of '" + v.name + "' has type " + toString(*t) +
                                  ", expected " + toString(v.type));
    return;
  }
  // Constant initial values must lie in range.
  if (names.empty() && v.type.kind == TypeKind::Int) {
    try {
      Int value = evaluate(v.initial, [](std::string_view, bool) { return std::nullopt; });
      if (!v.type.contains(value))
        out.add(id, "TYPE_ERROR", "initial value " + std::to_string(value) + " of '" + v.name +
                                      "' outside " + toString(v.type));
    } catch (const EvalError&) {
    }
  }
  if (v.type.kind == TypeKind::Int && v.type.lo > v.type.hi)
    out.add(id, "TYPE_ERROR", "empty range " + toString(v.type));
}

struct StateInfo {
  int region = -1;  // index into a flat region table
};

class ProtocolChecker {
 public:
  ProtocolChecker(Collector& out, const std::string& owner) : out_(out), owner_(owner) {}

  void run(const Contract& c, const Scope& base) {
    const ProtocolStateMachine& m = c.protocol;
    Scope scope = base;
    for (const auto& v : m.localVars) {
      std::string id = owner_ + "/var:" + v.name;
      if (scope.contains(v.name) && !isEnumLiteral(base, v.name)) {
        out_.add(id, "DUPLICATE_ID", "variable '" + v.name + "' already declared");
      }
      checkInitial(out_, id, v, scope);
      scope.insert_or_assign(v.name, v.type);
      addEnumLiterals(scope, v.type);
    }

    if (!m.root.states.empty()) walkRegion(m.root, "protocol");

    std::set<std::string, std::less<>> ops;
    std::map<std::string, std::size_t, std::less<>> arity;
    for (const auto& op : c.operations) {
      ops.insert(op.name);
      arity[op.name] = op.args.size();
    }
    std::set<std::string, std::less<>> assignable;
    for (const auto& v : c.stateVars) assignable.insert(v.name);
    for (const auto& v : m.localVars) assignable.insert(v.name);

    for (std::size_t k = 0; k < m.transitions.size(); ++k) {
      const Transition& t = m.transitions[k];
      std::string id = owner_ + "/trans:" + std::to_string(k);
      auto src = states_.find(t.source);
      auto dst = states_.find(t.target);
      if (src == states_.end())
        out_.add(id, "UNRESOLVED_STATE", "unknown source state '" + t.source + "'");
      if (dst == states_.end())
        out_.add(id, "UNRESOLVED_STATE", "unknown target state '" + t.target + "'");
      if (src != states_.end() && dst != states_.end() && src->second.region != dst->second.region)
        out_.add(id, "CROSS_REGION_TRANSITION",
                 "'" + t.source + "' and '" + t.target + "' belong to different regions");
      if (t.trigger.kind == TriggerKind::Internal && !t.guard && t.stereotype != Stereotype::Error)
        out_.add(id, "INTERNAL_WITHOUT_GUARD",
                 "internal transition '" + t.trigger.label + "' needs a guard");

      Scope local = scope;
      if (t.trigger.binder) local.insert_or_assign(*t.trigger.binder, Type::opaque("Payload"));
      checkExpr(out_, id, t.guard, local, true, "guard");
      for (const Action& a : t.actions) {
        if (a.kind == Action::Kind::Assign) {
          if (!assignable.contains(a.target)) {
            out_.add(id, "UNRESOLVED_ASSIGN_TARGET", "assignment to undeclared variable '" + a.target + "'");
            continue;
          }
          checkExpr(out_, id, a.value, local, false, "assignment to '" + a.target + "'");
          std::vector<std::string> errors;
          auto vt = inferType(
              a.value,
              [&](std::string_view n) -> std::optional<Type> {
                if (auto it = local.find(n); it != local.end()) return it->second;
                return std::nullopt;
              },
              errors);
          auto target = local.find(a.target);
          if (errors.empty() && vt && target != local.end() && !sosc::assignable(target->second, *vt))
            out_.add(id, "TYPE_ERROR", "cannot assign " + toString(*vt) + " to '" + a.target + "'");
        } else {
          auto it = arity.find(a.target);
          if (it == arity.end()) {
            out_.add(id, "UNRESOLVED_OPERATION", "call of undeclared operation '" + a.target + "'");
            continue;
          }
          if (it->second != a.args.size())
            out_.add(id, "PARAM_ARITY", "operation '" + a.target + "' takes " +
                                            std::to_string(it->second) + " argument(s), got " +
                                            std::to_string(a.args.size()));
          for (const Expr& arg : a.args) checkExpr(out_, id, arg, local, false, "argument");
        }
      }
    }
  }

 private:
  static bool isEnumLiteral(const Scope& s, std::string_view name) {
    auto it = s.find(name);
    if (it == s.end() || it->second.kind != TypeKind::Enum) return false;
    for (const auto& l : it->second.literals)
      if (l == name) return true;
    return false;
  }

  void walkRegion(const Region& r, const std::string& label) {
    int region = regionCount_++;
    int initials = 0;
    for (const State& s : r.states) {
      if (s.initial) ++initials;
      std::string id = owner_ + "/state:" + s.name;
      if (!states_.emplace(s.name, StateInfo{region}).second) {
        out_.add(id, "DUPLICATE_STATE", "state '" + s.name + "' declared twice");
      }
      if (s.kind == StateKind::Parallel && s.regions.size() < 2)
        out_.add(id, "PARALLEL_REGION_COUNT",
                 "parallel state '" + s.name + "' needs at least two regions");
      if (s.kind == StateKind::Composite && s.regions.size() != 1)
        out_.add(id, "PARALLEL_REGION_COUNT", "composite state '" + s.name + "' needs one region");
      for (const Region& child : s.regions) {
        if (child.states.empty()) {
          out_.add(id, "INITIAL_STATE_COUNT",
                   "region" + (child.name.empty() ? "" : " '" + child.name + "'") + " of '" +
                       s.name + "' has no states");
          continue;
        }
        walkRegion(child, child.name.empty() ? s.name : child.name);
      }
    }
    if (initials != 1) {
      out_.add(owner_, "INITIAL_STATE_COUNT",
               "region '" + label + "' has " + std::to_string(initials) +
                   " initial states, expected exactly one");
    }
  }

  Collector& out_;
  std::string owner_;
  std::map<std::string, StateInfo, std::less<>> states_;
  int regionCount_ = 0;
};

void checkDysfunctionRefs(Collector& out, const Contract& c, const std::string& owner,
                          const DependabilityModel* dep) {
  for (const auto& f : c.failureModes) {
    std::string id = owner + "/failure_mode:" + f;
    DysfunctionKind kind{};
    if (!dep) {
      out.add(id, "DANGLING_DYSFUNCTION_REF",
              "failure mode '" + f + "' refers to no dependability model");
    } else if (!dep->find(f, &kind)) {
      out.add(id, "DANGLING_DYSFUNCTION_REF", "unknown failure '" + f + "'");
    } else if (kind != DysfunctionKind::Failure) {
      out.add(id, "DANGLING_DYSFUNCTION_REF", "'" + f + "' is a " + std::string(toString(kind)) +
                                                  ", not a failure");
    }
  }
  for (const auto& f : c.mitigates) {
    std::string id = owner + "/mitigates:" + f;
    DysfunctionKind kind{};
    if (!dep) {
      out.add(id, "DANGLING_DYSFUNCTION_REF",
              "mitigated fault '" + f + "' refers to no dependability model");
    } else if (!dep->find(f, &kind)) {
      out.add(id, "DANGLING_DYSFUNCTION_REF", "unknown fault '" + f + "'");
    } else if (kind != DysfunctionKind::Fault) {
      out.add(id, "DANGLING_DYSFUNCTION_REF", "'" + f + "' is a " + std::string(toString(kind)) +
                                                  ", not a fault");
    }
  }
}

// Composition scope: locals of this and all enclosing compositions, then the
// document's top level.
struct CompositionScope {
  const ModelDocument& doc;
  std::vector<const SoSComposition*> chain;  // innermost last

  const SoSComposition* findComposition(std::string_view name) const {
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      for (const auto& l : (*it)->locals)
        if (l.name == name) return &l;
    }
    return doc.findComposition(name);
  }
};

void checkComposition(Collector& out, const SoSComposition& s, const std::string& id,
                      CompositionScope& scope, std::set<const SoSComposition*>& active) {
  scope.chain.push_back(&s);
  active.insert(&s);

  std::set<std::string, std::less<>> seenLocals;
  for (const auto& l : s.locals) {
    std::string lid = id + "/sos:" + l.name;
    if (!seenLocals.insert(l.name).second)
      out.add(lid, "DUPLICATE_ID", "composition '" + l.name + "' declared twice");
    checkComposition(out, l, lid, scope, active);
  }

  Scope params;
  for (const auto& p : s.params) {
    if (p.name == "i") out.add(id, "DUPLICATE_ID", "'i' is reserved for the copy index");
    if (!params.emplace(p.name, p.type).second)
      out.add(id, "DUPLICATE_ID", "parameter '" + p.name + "' declared twice");
    addEnumLiterals(params, p.type);
  }

  std::set<std::string, std::less<>> instances;
  for (const auto& inst : s.children) {
    std::string iid = id + "/instance:" + inst.name;
    if (!instances.insert(inst.name).second)
      out.add(iid, "DUPLICATE_ID", "instance '" + inst.name + "' declared twice");
    if (inst.multiplicity < 1)
      out.add(iid, "BAD_MULTIPLICITY", "multiplicity of '" + inst.name + "' must be at least 1");

    Scope argScope = params;
    if (inst.multiplicity > 1) argScope.insert_or_assign("i", Type::integer(1, inst.multiplicity));
    for (const Expr& a : inst.args) checkExpr(out, iid, a, argScope, false, "argument");

    const std::vector<TypedName>* formals = nullptr;
    if (const SoSComposition* comp = scope.findComposition(inst.ref)) {
      if (active.contains(comp)) {
        out.add(iid, "UNRESOLVED_CONTRACT", "composition '" + inst.ref + "' contains itself");
        continue;
      }
      formals = &comp->params;
    } else if (const Contract* c = scope.doc.findContract(inst.ref)) {
      formals = &c->params;
    } else {
      out.add(iid, "UNRESOLVED_CONTRACT", "unknown contract or composition '" + inst.ref + "'");
      continue;
    }
    if (formals->size() != inst.args.size())
      out.add(iid, "PARAM_ARITY", "'" + inst.ref + "' takes " + std::to_string(formals->size()) +
                                      " argument(s), got " + std::to_string(inst.args.size()));
  }

  for (std::size_t k = 0; k < s.connections.size(); ++k) {
    const Connection& c = s.connections[k];
    std::string cid = id + "/connect:" + std::to_string(k);
    for (const Endpoint* e : {&c.a, &c.b}) {
      if (!instances.contains(e->instance))
        out.add(cid, "UNRESOLVED_ENDPOINT",
                "connection endpoint '" + e->instance + "." + e->port + "' names no instance");
    }
  }

  active.erase(&s);
  scope.chain.pop_back();
}

bool isNamedModel(const ModelDocument& doc, std::string_view name) {
  if (doc.findContract(name) || doc.findComposition(name)) return true;
  // Nested compositions count as well.
  std::function<bool(const SoSComposition&)> walk = [&](const SoSComposition& s) {
    for (const auto& l : s.locals) {
      if (l.name == name || walk(l)) return true;
    }
    return false;
  };
  for (const auto& s : doc.compositions)
    if (walk(s)) return true;
  return false;
}

}  // namespace

Diagnostics validateStructure(const Contract& c, const DependabilityModel* dependability) {
  Diagnostics diags;
  Collector out(diags);
  const std::string owner = element::contract(c.name);

  Scope base;
  for (const auto& p : c.params) {
    if (!base.emplace(p.name, p.type).second)
      out.add(owner, "DUPLICATE_ID", "parameter '" + p.name + "' declared twice");
    addEnumLiterals(base, p.type);
  }
  for (const auto& v : c.stateVars) {
    std::string id = owner + "/var:" + v.name;
    if (base.contains(v.name)) out.add(id, "DUPLICATE_ID", "'" + v.name + "' already declared");
    checkInitial(out, id, v, base);
    base.insert_or_assign(v.name, v.type);
    addEnumLiterals(base, v.type);
  }

  std::set<std::string, std::less<>> opNames;
  for (const auto& op : c.operations) {
    std::string id = owner + "/op:" + op.name;
    if (!opNames.insert(op.name).second)
      out.add(id, "DUPLICATE_ID", "operation '" + op.name + "' declared twice");
    Scope scope = base;
    for (const auto& a : op.args) {
      if (!scope.emplace(a.name, a.type).second && !c.stateVars.empty()) {
        bool shadows = false;
        for (const auto& v : c.stateVars) shadows |= v.name == a.name;
        if (shadows) out.add(id, "DUPLICATE_ID", "argument '" + a.name + "' shadows a variable");
      }
      scope.insert_or_assign(a.name, a.type);
      addEnumLiterals(scope, a.type);
    }
    checkExpr(out, id, op.pre, scope, true, "precondition");
    Scope post = scope;
    for (const auto& v : c.stateVars) post.insert_or_assign(v.name + "'", v.type);
    checkExpr(out, id, op.post, post, true, "postcondition");
  }

  for (std::size_t k = 0; k < c.invariants.size(); ++k) {
    checkExpr(out, owner + "/invariant:" + std::to_string(k), c.invariants[k], base, true,
              "invariant");
  }

  checkDysfunctionRefs(out, c, owner, dependability);
  ProtocolChecker(out, owner).run(c, base);
  return diags;
}

Diagnostics validateStructure(const SoSComposition& s, const ModelDocument& context) {
  Diagnostics diags;
  Collector out(diags);
  CompositionScope scope{context, {}};
  std::set<const SoSComposition*> active;
  checkComposition(out, s, element::composition(s.name), scope, active);
  return diags;
}

Diagnostics validateStructure(const DependabilityModel& m, const ModelDocument* context) {
  Diagnostics diags;
  Collector out(diags);

  std::set<std::string, std::less<>> ids;
  for (const auto* list : {&m.faults, &m.errors, &m.failures}) {
    for (const auto& d : *list) {
      if (!ids.insert(d.id).second)
        out.add(element::dysfunction(d.id), "DUPLICATE_ID", "dysfunction '" + d.id + "' declared twice");
    }
  }

  for (std::size_t k = 0; k < m.edges.size(); ++k) {
    const DependabilityEdge& e = m.edges[k];
    std::string id = element::edge(k);
    std::string rel(toString(e.relation));
    DysfunctionKind fromKind{};
    const Dysfunction* from = m.find(e.from, &fromKind);
    if (!from) {
      out.add(id, "UNRESOLVED_EDGE_TARGET", rel + " edge from unknown dysfunction '" + e.from + "'");
    }
    if (e.relation == Relation::Causes) {
      DysfunctionKind toKind{};
      const Dysfunction* to = m.find(e.to, &toKind);
      if (!to) {
        out.add(id, "UNRESOLVED_EDGE_TARGET", "causes edge to unknown dysfunction '" + e.to + "'");
        continue;
      }
      if (!from) continue;
      bool ok = false;
      if (fromKind == DysfunctionKind::Fault && toKind == DysfunctionKind::Error)
        ok = from->level == to->level;
      else if (fromKind == DysfunctionKind::Error && toKind == DysfunctionKind::Failure)
        ok = from->level == to->level;
      else if (fromKind == DysfunctionKind::Failure && toKind == DysfunctionKind::Fault)
        ok = from->level == Level::CS && to->level == Level::SOS;
      if (!ok) {
        out.add(id, "CAUSAL_CHAIN_VIOLATION",
                "'" + e.from + "' (" + std::string(toString(fromKind)) + ", " +
                    std::string(toString(from->level)) + ") cannot cause '" + e.to + "' (" +
                    std::string(toString(toKind)) + ", " + std::string(toString(to->level)) + ")");
      }
      continue;
    }
    if (context && !isNamedModel(*context, e.to)) {
      out.add(id, "UNRESOLVED_EDGE_TARGET",
              rel + " edge targets unknown contract or composition '" + e.to + "'");
    }
  }
  return diags;
}

Diagnostics validateStructure(const ModelDocument& doc) {
  Diagnostics diags;
  Collector out(diags);
  std::set<std::string, std::less<>> names;
  for (const auto& c : doc.contracts) {
    if (!names.insert(c.name).second)
      out.add(element::contract(c.name), "DUPLICATE_ID", "'" + c.name + "' declared twice");
  }
  for (const auto& s : doc.compositions) {
    if (!names.insert(s.name).second)
      out.add(element::composition(s.name), "DUPLICATE_ID", "'" + s.name + "' declared twice");
  }
  const DependabilityModel* dep = doc.dependability ? &*doc.dependability : nullptr;
  for (const auto& c : doc.contracts) {
    auto d = validateStructure(c, dep);
    diags.insert(diags.end(), d.begin(), d.end());
  }
  for (const auto& s : doc.compositions) {
    auto d = validateStructure(s, doc);
    diags.insert(diags.end(), d.begin(), d.end());
  }
  if (dep) {
    auto d = validateStructure(*dep, &doc);
    diags.insert(diags.end(), d.begin(), d.end());
  }
  attachSpans(diags, doc);
  return diags;
}

bool pathUnder(std::string_view path, std::string_view prefix) {
  if (!path.starts_with(prefix)) return false;
  if (path.size() == prefix.size()) return true;
  char c = path[prefix.size()];
  return c == '.' || c == '[';
}

namespace {

void expand(const SoSComposition& s, const std::string& prefix, const ParamBindings& params,
            CompositionScope& scope, FlatComposition& out, int depth) {
  if (depth > 64) throw std::invalid_argument("composition nesting too deep at '" + prefix + "'");
  scope.chain.push_back(&s);
  auto join = [&](const std::string& name) { return prefix.empty() ? name : prefix + "." + name; };

  for (const auto& inst : s.children) {
    if (inst.multiplicity < 1)
      throw std::invalid_argument("bad multiplicity for instance '" + inst.name + "'");
    for (int copy = 1; copy <= inst.multiplicity; ++copy) {
      std::string name = inst.multiplicity > 1 ? inst.name + "[" + std::to_string(copy) + "]" : inst.name;
      std::string path = join(name);
      Lookup lookup = [&](std::string_view n, bool primed) -> std::optional<Int> {
        if (primed) return std::nullopt;
        if (n == "i") return copy;
        if (auto it = params.find(n); it != params.end()) return it->second;
        return std::nullopt;
      };
      std::vector<Int> actuals;
      for (const Expr& a : inst.args) {
        try {
          actuals.push_back(evaluate(a, lookup));
        } catch (const EvalError& e) {
          throw std::invalid_argument("cannot evaluate argument of '" + path + "': " + e.what());
        }
      }
      const std::vector<TypedName>* formals = nullptr;
      const SoSComposition* comp = scope.findComposition(inst.ref);
      const Contract* contract = comp ? nullptr : scope.doc.findContract(inst.ref);
      if (comp) {
        formals = &comp->params;
      } else if (contract) {
        formals = &contract->params;
      } else {
        throw std::invalid_argument("unknown contract or composition '" + inst.ref + "'");
      }
      if (formals->size() != actuals.size())
        throw std::invalid_argument("argument count mismatch for '" + path + "'");
      ParamBindings bound;
      for (std::size_t k = 0; k < actuals.size(); ++k) bound[(*formals)[k].name] = actuals[k];
      if (comp) {
        expand(*comp, path, bound, scope, out, depth + 1);
      } else {
        out.leaves.push_back({path, contract, std::move(bound)});
      }
    }
  }
  for (const auto& c : s.connections) {
    out.connections.push_back({join(c.a.instance), join(c.b.instance), c.labels});
  }
  scope.chain.pop_back();
}

}  // namespace

FlatComposition instantiate(const SoSComposition& s, const ModelDocument& doc,
                            const ParamBindings& params) {
  FlatComposition out;
  CompositionScope scope{doc, {}};
  expand(s, "", params, scope, out, 0);
  return out;
}

}  // namespace sosc
