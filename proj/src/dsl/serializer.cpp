#include "sosc/dsl.hpp"

namespace sosc {

namespace {

class Writer {
 public:
  void line(int depth, const std::string& text) {
    out_.append(static_cast<std::size_t>(depth) * 2, ' ');
    out_ += text;
    out_ += '\n';
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

std::string typedNames(const std::vector<TypedName>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += v[i].name + ": " + toString(v[i].type);
  }
  return s + ")";
}

std::string joined(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += v[i];
  }
  return s;
}

std::string exprList(const std::vector<Expr>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += toString(v[i]);
  }
  return s;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out + "\"";
}

std::string varDecl(const VarDecl& v) {
  std::string s = "var " + v.name + ": " + toString(v.type);
  if (v.initial) s += " = " + toString(v.initial);
  return s + ";";
}

void writeState(Writer& w, int depth, const State& s) {
  std::string head = s.initial ? "initial " : "";
  switch (s.kind) {
    case StateKind::Simple:
      w.line(depth, head + "state " + s.name + ";");
      return;
    case StateKind::Composite:
      w.line(depth, head + "state " + s.name + " {");
      for (const Region& r : s.regions) {
        for (const State& c : r.states) writeState(w, depth + 1, c);
      }
      w.line(depth, "}");
      return;
    case StateKind::Parallel:
      w.line(depth, head + "parallel " + s.name + " {");
      for (const Region& r : s.regions) {
        w.line(depth + 1, "region " + r.name + " {");
        for (const State& c : r.states) writeState(w, depth + 2, c);
        w.line(depth + 1, "}");
      }
      w.line(depth, "}");
      return;
  }
}

std::string transition(const Transition& t) {
  std::string s = "trans " + t.source + " -> " + t.target;
  switch (t.trigger.kind) {
    case TriggerKind::Event:
      s += " on " + t.trigger.label;
      if (t.trigger.binder) s += "(" + *t.trigger.binder + ")";
      break;
    case TriggerKind::Internal:
      s += " internal " + t.trigger.label;
      break;
    case TriggerKind::Completion:
      break;
  }
  if (t.guard) s += " [" + toString(t.guard) + "]";
  if (!t.actions.empty()) {
    s += " /";
    for (std::size_t i = 0; i < t.actions.size(); ++i) {
      const Action& a = t.actions[i];
      s += i ? ", " : " ";
      if (a.kind == Action::Kind::Assign) {
        s += a.target + " := " + toString(a.value);
      } else {
        s += a.target + "(" + exprList(a.args) + ")";
      }
    }
  }
  if (t.stereotype == Stereotype::Error) s += " [error]";
  return s + ";";
}

void writeContract(Writer& w, const Contract& c) {
  std::string head = "contract " + c.name;
  if (!c.params.empty()) head += typedNames(c.params);
  w.line(0, head + " {");
  for (const auto& v : c.stateVars) w.line(1, varDecl(v));
  for (const auto& op : c.operations) {
    std::string s = "op " + op.name + typedNames(op.args);
    if (op.pre) s += " pre " + toString(op.pre);
    if (op.post) s += " post " + toString(op.post);
    w.line(1, s + ";");
  }
  for (const auto& inv : c.invariants) w.line(1, "invariant " + toString(inv) + ";");
  if (!c.failureModes.empty()) w.line(1, "failure_modes " + joined(c.failureModes) + ";");
  if (!c.mitigates.empty()) w.line(1, "mitigates " + joined(c.mitigates) + ";");
  const ProtocolStateMachine& p = c.protocol;
  if (p.localVars.empty() && p.root.states.empty() && p.transitions.empty()) {
    w.line(1, "protocol {}");
  } else {
    w.line(1, "protocol {");
    for (const auto& v : p.localVars) w.line(2, varDecl(v));
    for (const auto& s : p.root.states) writeState(w, 2, s);
    for (const auto& t : p.transitions) w.line(2, transition(t));
    w.line(1, "}");
  }
  w.line(0, "}");
}

void writeComposition(Writer& w, int depth, const SoSComposition& s) {
  std::string head = "sos " + s.name;
  if (!s.params.empty()) head += typedNames(s.params);
  w.line(depth, head + " {");
  for (const auto& local : s.locals) writeComposition(w, depth + 1, local);
  for (const auto& inst : s.children) {
    std::string line = "instance " + inst.name + " : " + inst.ref;
    if (!inst.args.empty()) line += "(" + exprList(inst.args) + ")";
    if (inst.multiplicity != 1) line += " * " + std::to_string(inst.multiplicity);
    w.line(depth + 1, line + ";");
  }
  for (const auto& c : s.connections) {
    w.line(depth + 1, "connect " + c.a.instance + "." + c.a.port + " -- " + c.b.instance + "." +
                          c.b.port + " : {" + joined(c.labels) + "};");
  }
  w.line(depth, "}");
}

void writeDysfunction(Writer& w, std::string_view kind, const Dysfunction& d) {
  std::string s = std::string(kind) + " " + d.id + " level=" + std::string(toString(d.level)) +
                  " persistence=" + std::string(toString(d.persistence));
  if (!d.name.empty()) s += " name=" + quoted(d.name);
  if (!d.description.empty()) s += " description=" + quoted(d.description);
  if (d.waived) s += " waived";
  w.line(1, s + ";");
}

void writeDependability(Writer& w, const DependabilityModel& m) {
  w.line(0, "dependability {");
  for (const auto& d : m.faults) writeDysfunction(w, "fault", d);
  for (const auto& d : m.errors) writeDysfunction(w, "error", d);
  for (const auto& d : m.failures) writeDysfunction(w, "failure", d);
  for (const auto& e : m.edges) {
    std::string sep = e.relation == Relation::LocatedIn ? " in " : " -> ";
    w.line(1, std::string(toString(e.relation)) + " " + e.from + sep + e.to + ";");
  }
  w.line(0, "}");
}

}  // namespace

std::string serializeContract(const Contract& c) {
  Writer w;
  writeContract(w, c);
  return w.take();
}

std::string serializeComposition(const SoSComposition& s) {
  Writer w;
  writeComposition(w, 0, s);
  return w.take();
}

std::string serializeModel(const ModelDocument& doc) {
  std::vector<std::string> blocks;
  for (const auto& c : doc.contracts) blocks.push_back(serializeContract(c));
  for (const auto& s : doc.compositions) blocks.push_back(serializeComposition(s));
  if (doc.dependability) {
    Writer w;
    writeDependability(w, *doc.dependability);
    blocks.push_back(w.take());
  }
  if (blocks.empty()) return "\n";
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) out += '\n';
    out += blocks[i];
  }
  return out;
}

}  // namespace sosc
