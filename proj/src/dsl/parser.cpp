#include <set>

#include "lexer.hpp"

namespace sosc {

ParseFailure::ParseFailure(Diagnostics errors)
    : std::runtime_error(errors.empty() ? "parse failure" : errors.front().message),
      errors_(std::move(errors)) {}

namespace dsl {
namespace {

class Parser {
 public:
  Parser(std::vector<Token> toks, std::string file) : toks_(std::move(toks)), file_(std::move(file)) {}

  ModelDocument document() {
    ModelDocument doc;
    while (!atEnd()) {
      if (isKeyword("contract")) {
        doc.contracts.push_back(contract(doc));
      } else if (isKeyword("sos")) {
        doc.compositions.push_back(composition(doc, ""));
      } else if (isKeyword("dependability")) {
        if (doc.dependability) error(peek(), "duplicate dependability section");
        doc.dependability = dependability(doc);
      } else {
        error(peek(), "expected 'contract', 'sos' or 'dependability'");
      }
    }
    return doc;
  }

  Expr expression() { return implication(); }

  Type type() {
    const Token& t = peek();
    if (t.kind != TokKind::Ident) error(t, "expected a type");
    if (t.text == "bool") {
      next();
      return Type::boolean();
    }
    if (t.text == "int") {
      next();
      expect("[");
      Int lo = signedInt();
      expect("..");
      Int hi = signedInt();
      expect("]");
      if (lo > hi) error(previous(), "empty integer range");
      return Type::integer(lo, hi);
    }
    if (t.text == "enum") {
      next();
      expect("{");
      std::vector<std::string> lits;
      do {
        lits.push_back(identifier("enumeration literal"));
      } while (accept(","));
      expect("}");
      return Type::enumeration(std::move(lits));
    }
    next();
    return Type::opaque(t.text);
  }

  bool atEnd() const { return peek().kind == TokKind::End; }
  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  void expectEnd() {
    if (!atEnd()) error(peek(), "unexpected trailing input");
  }

 private:
  // ---- token helpers -----------------------------------------------------

  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  const Token& previous() const { return toks_[pos_ == 0 ? 0 : pos_ - 1]; }

  bool isPunct(std::string_view p, std::size_t k = 0) const {
    const Token& t = peek(k);
    return t.kind == TokKind::Punct && t.text == p;
  }
  bool isKeyword(std::string_view kw, std::size_t k = 0) const {
    const Token& t = peek(k);
    return t.kind == TokKind::Ident && t.text == kw;
  }
  bool accept(std::string_view p) {
    if (!isPunct(p)) return false;
    next();
    return true;
  }
  bool acceptKeyword(std::string_view kw) {
    if (!isKeyword(kw)) return false;
    next();
    return true;
  }

  [[noreturn]] void error(const Token& t, const std::string& msg) const {
    Diagnostic d;
    d.message = msg;
    if (t.kind != TokKind::End) d.message += ", found " + found(t);
    d.span = SourceSpan{file_, t.line, t.col, t.endLine, t.endCol};
    throw ParseFailure({d});
  }

  // A missing terminator is reported right after the previous token, which
  // keeps the error on the line that lacks it.
  [[noreturn]] void missing(std::string_view what) const {
    const Token& cur = peek();
    if (pos_ > 0 && cur.line > previous().endLine) {
      const Token& prev = previous();
      Diagnostic d;
      d.message = "expected '" + std::string(what) + "' after " + found(prev);
      d.span = SourceSpan{file_, prev.endLine, prev.endCol, prev.endLine, prev.endCol};
      throw ParseFailure({d});
    }
    error(cur, "expected '" + std::string(what) + "'");
  }

  static std::string found(const Token& t) {
    switch (t.kind) {
      case TokKind::String:
        return "string \"" + t.text + "\"";
      case TokKind::End:
        return "end of input";
      default:
        return "'" + t.text + "'";
    }
  }

  void expect(std::string_view p) {
    if (!accept(p)) missing(p);
  }
  void expectKeyword(std::string_view kw) {
    if (!acceptKeyword(kw)) error(peek(), "expected '" + std::string(kw) + "'");
  }

  // Statement terminator; optional right before a closing brace.
  void terminator() {
    if (accept(";")) return;
    if (isPunct("}")) return;
    missing(";");
  }

  std::string identifier(std::string_view what) {
    const Token& t = peek();
    if (t.kind != TokKind::Ident) error(t, "expected " + std::string(what));
    if (reserved(t.text)) error(t, "'" + t.text + "' is reserved and cannot name " + std::string(what));
    next();
    return t.text;
  }

  static bool reserved(std::string_view s) {
    static const std::set<std::string, std::less<>> words = {"true", "false"};
    return words.contains(s);
  }

  Int signedInt() {
    bool neg = accept("-");
    const Token& t = peek();
    if (t.kind != TokKind::Int) error(t, "expected an integer");
    next();
    return neg ? -t.value : t.value;
  }

  SourceSpan spanFrom(const Token& start) const {
    const Token& end = previous();
    return SourceSpan{file_, start.line, start.col, end.endLine, end.endCol};
  }

  void record(ModelDocument& doc, const std::string& id, const Token& start) {
    doc.spans.insert_or_assign(id, spanFrom(start));
  }

  // ---- expressions -------------------------------------------------------

  Expr implication() {
    Expr lhs = disjunction();
    if (accept("=>")) return Expr::binary(BinaryOp::Implies, lhs, implication());
    return lhs;
  }

  Expr disjunction() {
    Expr lhs = conjunction();
    while (accept("||")) lhs = Expr::binary(BinaryOp::Or, lhs, conjunction());
    return lhs;
  }

  Expr conjunction() {
    Expr lhs = comparison();
    while (accept("&&")) lhs = Expr::binary(BinaryOp::And, lhs, comparison());
    return lhs;
  }

  Expr comparison() {
    Expr lhs = additive();
    static const std::pair<std::string_view, BinaryOp> ops[] = {
        {"==", BinaryOp::Eq}, {"!=", BinaryOp::Ne}, {"<=", BinaryOp::Le},
        {">=", BinaryOp::Ge}, {"<", BinaryOp::Lt},  {">", BinaryOp::Gt}};
    for (auto [sym, op] : ops) {
      if (accept(sym)) {
        Expr rhs = additive();
        for (auto [s2, op2] : ops) {
          (void)op2;
          if (isPunct(s2)) error(peek(), "comparisons do not chain; add parentheses");
        }
        return Expr::binary(op, lhs, rhs);
      }
    }
    return lhs;
  }

  Expr additive() {
    Expr lhs = multiplicative();
    for (;;) {
      if (accept("+")) {
        lhs = Expr::binary(BinaryOp::Add, lhs, multiplicative());
      } else if (accept("-")) {
        lhs = Expr::binary(BinaryOp::Sub, lhs, multiplicative());
      } else {
        return lhs;
      }
    }
  }

  Expr multiplicative() {
    Expr lhs = unary();
    while (accept("*")) lhs = Expr::binary(BinaryOp::Mul, lhs, unary());
    return lhs;
  }

  Expr unary() {
    if (accept("!")) return Expr::unary(UnaryOp::Not, unary());
    if (isPunct("-")) {
      next();
      if (peek().kind == TokKind::Int) return Expr::integer(-next().value);
      return Expr::unary(UnaryOp::Neg, unary());
    }
    return primary();
  }

  Expr primary() {
    const Token& t = peek();
    if (t.kind == TokKind::Int) {
      next();
      return Expr::integer(t.value);
    }
    if (accept("(")) {
      Expr e = expression();
      expect(")");
      return e;
    }
    if (t.kind == TokKind::Ident) {
      next();
      if (t.text == "true") return Expr::boolean(true);
      if (t.text == "false") return Expr::boolean(false);
      if (accept("(")) {
        std::vector<Expr> args;
        if (!isPunct(")")) {
          do {
            args.push_back(expression());
          } while (accept(","));
        }
        expect(")");
        return Expr::call(t.text, std::move(args));
      }
      if (accept("'")) return Expr::primed(t.text);
      return Expr::ident(t.text);
    }
    error(t, "expected an expression");
  }

  // ---- shared ------------------------------------------------------------

  std::vector<TypedName> typedNames() {
    std::vector<TypedName> out;
    expect("(");
    if (!isPunct(")")) {
      do {
        TypedName tn;
        tn.name = identifier("a parameter name");
        expect(":");
        tn.type = type();
        out.push_back(std::move(tn));
      } while (accept(","));
    }
    expect(")");
    return out;
  }

  VarDecl varDecl() {
    expectKeyword("var");
    VarDecl v;
    v.name = identifier("a variable name");
    expect(":");
    v.type = type();
    if (accept("=")) v.initial = expression();
    terminator();
    return v;
  }

  std::vector<std::string> identList(std::string_view what) {
    std::vector<std::string> out;
    do {
      out.push_back(identifier(what));
    } while (accept(","));
    return out;
  }

  // ---- contracts ---------------------------------------------------------

  Contract contract(ModelDocument& doc) {
    const Token& start = peek();
    expectKeyword("contract");
    Contract c;
    c.name = identifier("a contract name");
    if (isPunct("(")) c.params = typedNames();
    expect("{");
    const std::string id = element::contract(c.name);
    while (!isPunct("}")) {
      const Token& itemStart = peek();
      if (isKeyword("var")) {
        c.stateVars.push_back(varDecl());
        record(doc, id + "/var:" + c.stateVars.back().name, itemStart);
      } else if (acceptKeyword("op")) {
        OperationSig op;
        op.name = identifier("an operation name");
        op.args = typedNames();
        if (acceptKeyword("pre")) op.pre = expression();
        if (acceptKeyword("post")) op.post = expression();
        terminator();
        c.operations.push_back(std::move(op));
        record(doc, id + "/op:" + c.operations.back().name, itemStart);
      } else if (acceptKeyword("invariant")) {
        c.invariants.push_back(expression());
        terminator();
        record(doc, id + "/invariant:" + std::to_string(c.invariants.size() - 1), itemStart);
      } else if (acceptKeyword("failure_modes")) {
        for (auto& f : identList("a failure identifier")) {
          c.failureModes.push_back(f);
          record(doc, id + "/failure_mode:" + f, itemStart);
        }
        terminator();
      } else if (acceptKeyword("mitigates")) {
        for (auto& f : identList("a fault identifier")) {
          c.mitigates.push_back(f);
          record(doc, id + "/mitigates:" + f, itemStart);
        }
        terminator();
      } else if (acceptKeyword("protocol")) {
        c.protocol = protocol(doc, id);
        accept(";");
      } else if (atEnd()) {
        missing("}");
      } else {
        error(peek(),
              "expected 'var', 'op', 'invariant', 'failure_modes', 'mitigates', 'protocol' or '}'");
      }
    }
    expect("}");
    record(doc, id, start);
    return c;
  }

  ProtocolStateMachine protocol(ModelDocument& doc, const std::string& owner) {
    ProtocolStateMachine m;
    expect("{");
    while (!isPunct("}")) {
      const Token& itemStart = peek();
      if (isKeyword("var")) {
        m.localVars.push_back(varDecl());
        record(doc, owner + "/var:" + m.localVars.back().name, itemStart);
      } else if (isKeyword("state") || isKeyword("parallel") || isKeyword("initial")) {
        m.root.states.push_back(stateDecl(doc, owner));
      } else if (acceptKeyword("trans")) {
        m.transitions.push_back(transition());
        terminator();
        record(doc, owner + "/trans:" + std::to_string(m.transitions.size() - 1), itemStart);
      } else if (atEnd()) {
        missing("}");
      } else {
        error(peek(), "expected 'var', 'state', 'parallel', 'trans' or '}'");
      }
    }
    expect("}");
    return m;
  }

  State stateDecl(ModelDocument& doc, const std::string& owner) {
    const Token& start = peek();
    State s;
    s.initial = acceptKeyword("initial");
    if (acceptKeyword("state")) {
      s.name = identifier("a state name");
      if (accept("{")) {
        s.kind = StateKind::Composite;
        Region r;
        r.states = stateList(doc, owner);
        s.regions.push_back(std::move(r));
        accept(";");
      } else {
        terminator();
      }
    } else if (acceptKeyword("parallel")) {
      s.kind = StateKind::Parallel;
      s.name = identifier("a state name");
      expect("{");
      while (!isPunct("}")) {
        const Token& rstart = peek();
        if (!acceptKeyword("region")) {
          if (atEnd()) missing("}");
          error(peek(), "expected 'region' or '}'");
        }
        Region r;
        r.name = identifier("a region name");
        expect("{");
        r.states = stateList(doc, owner);
        record(doc, owner + "/region:" + r.name, rstart);
        s.regions.push_back(std::move(r));
        accept(";");
      }
      expect("}");
      accept(";");
    } else {
      error(peek(), "expected 'state' or 'parallel'");
    }
    record(doc, owner + "/state:" + s.name, start);
    return s;
  }

  // Parses states up to and including the closing brace.
  std::vector<State> stateList(ModelDocument& doc, const std::string& owner) {
    std::vector<State> out;
    while (!isPunct("}")) {
      if (atEnd()) missing("}");
      out.push_back(stateDecl(doc, owner));
    }
    expect("}");
    return out;
  }

  Transition transition() {
    Transition t;
    t.source = identifier("a source state");
    expect("->");
    t.target = identifier("a target state");
    if (acceptKeyword("on")) {
      t.trigger.kind = TriggerKind::Event;
      t.trigger.label = identifier("an event label");
      if (accept("(")) {
        t.trigger.binder = identifier("a payload variable");
        expect(")");
      }
    } else if (acceptKeyword("internal")) {
      t.trigger.kind = TriggerKind::Internal;
      t.trigger.label = identifier("an internal label");
    }
    if (isPunct("[") && !isErrorMarker()) {
      next();
      t.guard = expression();
      expect("]");
    }
    if (accept("/")) {
      do {
        t.actions.push_back(action());
      } while (accept(","));
    }
    if (isErrorMarker()) {
      next();
      next();
      next();
      t.stereotype = Stereotype::Error;
    }
    return t;
  }

  bool isErrorMarker() const {
    return isPunct("[") && isKeyword("error", 1) && isPunct("]", 2);
  }

  Action action() {
    Action a;
    a.target = identifier("an action");
    if (accept(":=")) {
      a.kind = Action::Kind::Assign;
      a.value = expression();
    } else if (accept("(")) {
      a.kind = Action::Kind::Invoke;
      if (!isPunct(")")) {
        do {
          a.args.push_back(expression());
        } while (accept(","));
      }
      expect(")");
    } else {
      error(peek(), "expected ':=' or '(' in action");
    }
    return a;
  }

  // ---- compositions ------------------------------------------------------

  SoSComposition composition(ModelDocument& doc, const std::string& parentId) {
    const Token& start = peek();
    expectKeyword("sos");
    SoSComposition s;
    s.name = identifier("a composition name");
    if (isPunct("(")) s.params = typedNames();
    const std::string id =
        parentId.empty() ? element::composition(s.name) : parentId + "/sos:" + s.name;
    expect("{");
    while (!isPunct("}")) {
      const Token& itemStart = peek();
      if (isKeyword("sos")) {
        s.locals.push_back(composition(doc, id));
        accept(";");
      } else if (acceptKeyword("instance")) {
        InstanceDecl inst;
        inst.name = identifier("an instance name");
        expect(":");
        inst.ref = identifier("a contract or composition name");
        if (accept("(")) {
          if (!isPunct(")")) {
            do {
              inst.args.push_back(expression());
            } while (accept(","));
          }
          expect(")");
        }
        if (accept("*")) {
          const Token& m = peek();
          if (m.kind != TokKind::Int) error(m, "expected a multiplicity");
          next();
          if (m.value > 1'000'000) error(m, "multiplicity too large");
          inst.multiplicity = static_cast<int>(m.value);
        }
        terminator();
        s.children.push_back(std::move(inst));
        record(doc, id + "/instance:" + s.children.back().name, itemStart);
      } else if (acceptKeyword("connect")) {
        Connection c;
        c.a = endpoint();
        expect("--");
        c.b = endpoint();
        if (accept(":")) {
          expect("{");
          if (!isPunct("}")) c.labels = identList("an event label");
          expect("}");
        }
        terminator();
        s.connections.push_back(std::move(c));
        record(doc, id + "/connect:" + std::to_string(s.connections.size() - 1), itemStart);
      } else if (atEnd()) {
        missing("}");
      } else {
        error(peek(), "expected 'sos', 'instance', 'connect' or '}'");
      }
    }
    expect("}");
    record(doc, id, start);
    return s;
  }

  Endpoint endpoint() {
    Endpoint e;
    e.instance = identifier("an instance name");
    expect(".");
    e.port = identifier("a port name");
    return e;
  }

  // ---- dependability -----------------------------------------------------

  DependabilityModel dependability(ModelDocument& doc) {
    const Token& start = peek();
    expectKeyword("dependability");
    DependabilityModel m;
    expect("{");
    while (!isPunct("}")) {
      const Token& itemStart = peek();
      if (isKeyword("fault") || isKeyword("error") || isKeyword("failure")) {
        std::string kind = next().text;
        Dysfunction d = dysfunction();
        terminator();
        record(doc, element::dysfunction(d.id), itemStart);
        if (kind == "fault") {
          m.faults.push_back(std::move(d));
        } else if (kind == "error") {
          m.errors.push_back(std::move(d));
        } else {
          m.failures.push_back(std::move(d));
        }
      } else if (peek().kind == TokKind::Ident && relationKeyword(peek().text)) {
        DependabilityEdge e;
        e.relation = *relationKeyword(next().text);
        e.from = identifier("a dysfunction identifier");
        if (e.relation == Relation::LocatedIn) {
          expectKeyword("in");
        } else {
          expect("->");
        }
        e.to = identifier("an identifier");
        terminator();
        m.edges.push_back(std::move(e));
        record(doc, element::edge(m.edges.size() - 1), itemStart);
      } else if (atEnd()) {
        missing("}");
      } else {
        error(peek(),
              "expected 'fault', 'error', 'failure', 'causes', 'located_in', 'affects', "
              "'exhibited_by', 'mitigated_by' or '}'");
      }
    }
    expect("}");
    doc.spans.insert_or_assign("dependability", spanFrom(start));
    return m;
  }

  static std::optional<Relation> relationKeyword(std::string_view s) {
    if (s == "causes") return Relation::Causes;
    if (s == "located_in") return Relation::LocatedIn;
    if (s == "affects") return Relation::Affects;
    if (s == "exhibited_by") return Relation::ExhibitedBy;
    if (s == "mitigated_by") return Relation::MitigatedBy;
    return std::nullopt;
  }

  Dysfunction dysfunction() {
    Dysfunction d;
    d.id = identifier("a dysfunction identifier");
    std::set<std::string> seen;
    static const std::set<std::string, std::less<>> attributes = {"level", "persistence", "name",
                                                                   "description", "waived"};
    while (peek().kind == TokKind::Ident && attributes.contains(peek().text)) {
      const Token& key = next();
      if (!seen.insert(key.text).second) error(key, "attribute '" + key.text + "' given twice");
      if (key.text == "waived") {
        d.waived = true;
        continue;
      }
      expect("=");
      if (key.text == "level") {
        const Token& v = peek();
        if (isKeyword("CS")) {
          d.level = Level::CS;
        } else if (isKeyword("SOS")) {
          d.level = Level::SOS;
        } else {
          error(v, "expected 'CS' or 'SOS'");
        }
        next();
      } else if (key.text == "persistence") {
        const Token& v = peek();
        if (isKeyword("TRANSIENT")) {
          d.persistence = Persistence::Transient;
        } else if (isKeyword("PERMANENT")) {
          d.persistence = Persistence::Permanent;
        } else if (isKeyword("UNSPECIFIED")) {
          d.persistence = Persistence::Unspecified;
        } else {
          error(v, "expected 'TRANSIENT', 'PERMANENT' or 'UNSPECIFIED'");
        }
        next();
      } else {
        const Token& v = peek();
        if (v.kind != TokKind::String) error(v, "expected a quoted string");
        next();
        (key.text == "name" ? d.name : d.description) = v.text;
      }
    }
    return d;
  }

  std::vector<Token> toks_;
  std::string file_;
  std::size_t pos_ = 0;
};

}  // namespace
}  // namespace dsl

ModelDocument parseModel(std::string_view text, std::string file) {
  dsl::Parser p(dsl::tokenize(text, file), file);
  return p.document();
}

Expr parseExpression(std::string_view text) {
  dsl::Parser p(dsl::tokenize(text, "<expr>"), "<expr>");
  Expr e = p.expression();
  p.expectEnd();
  return e;
}

Type parseType(std::string_view text) {
  dsl::Parser p(dsl::tokenize(text, "<type>"), "<type>");
  Type t = p.type();
  p.expectEnd();
  return t;
}

}  // namespace sosc
