#include "sosc/expr.hpp"

#include <algorithm>

namespace sosc {

bool Type::contains(Int v) const {
  switch (kind) {
    case TypeKind::Bool:
      return v == 0 || v == 1;
    case TypeKind::Int:
      return v >= lo && v <= hi;
    case TypeKind::Enum:
      return v >= 0 && v < static_cast<Int>(literals.size());
    case TypeKind::Opaque:
      return true;
  }
  return false;
}

std::string toString(const Type& t) {
  switch (t.kind) {
    case TypeKind::Bool:
      return "bool";
    case TypeKind::Int:
      return "int[" + std::to_string(t.lo) + ".." + std::to_string(t.hi) + "]";
    case TypeKind::Enum: {
      std::string s = "enum{";
      for (std::size_t i = 0; i < t.literals.size(); ++i) {
        if (i) s += ", ";
        s += t.literals[i];
      }
      return s + "}";
    }
    case TypeKind::Opaque:
      return t.name;
  }
  return {};
}

Expr Expr::boolean(bool v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::BoolLit;
  n->boolValue = v;
  return Expr(std::move(n));
}

Expr Expr::integer(Int v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::IntLit;
  n->intValue = v;
  return Expr(std::move(n));
}

Expr Expr::ident(std::string name) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Ident;
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::primed(std::string name) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Primed;
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::unary(UnaryOp op, Expr operand) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Unary;
  n->unary = op;
  n->args.push_back(std::move(operand));
  return Expr(std::move(n));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Binary;
  n->binary = op;
  n->args.push_back(std::move(lhs));
  n->args.push_back(std::move(rhs));
  return Expr(std::move(n));
}

Expr Expr::call(std::string fn, std::vector<Expr> args) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Call;
  n->name = std::move(fn);
  n->args = std::move(args);
  return Expr(std::move(n));
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  const ExprNode& x = *a.node_;
  const ExprNode& y = *b.node_;
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case ExprKind::BoolLit:
      return x.boolValue == y.boolValue;
    case ExprKind::IntLit:
      return x.intValue == y.intValue;
    case ExprKind::Ident:
    case ExprKind::Primed:
      return x.name == y.name;
    case ExprKind::Unary:
      return x.unary == y.unary && x.args == y.args;
    case ExprKind::Binary:
      return x.binary == y.binary && x.args == y.args;
    case ExprKind::Call:
      return x.name == y.name && x.args == y.args;
  }
  return false;
}

int precedence(BinaryOp op) {
  switch (op) {
    case BinaryOp::Implies:
      return 1;
    case BinaryOp::Or:
      return 2;
    case BinaryOp::And:
      return 3;
    case BinaryOp::Eq:
    case BinaryOp::Ne:
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge:
      return 4;
    case BinaryOp::Add:
    case BinaryOp::Sub:
      return 5;
    case BinaryOp::Mul:
      return 6;
  }
  return 0;
}

std::string_view symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::Implies:
      return "=>";
    case BinaryOp::Or:
      return "||";
    case BinaryOp::And:
      return "&&";
    case BinaryOp::Eq:
      return "==";
    case BinaryOp::Ne:
      return "!=";
    case BinaryOp::Lt:
      return "<";
    case BinaryOp::Le:
      return "<=";
    case BinaryOp::Gt:
      return ">";
    case BinaryOp::Ge:
      return ">=";
    case BinaryOp::Add:
      return "+";
    case BinaryOp::Sub:
      return "-";
    case BinaryOp::Mul:
      return "*";
  }
  return "?";
}

namespace {

constexpr int kUnaryPrecedence = 7;

bool isComparison(BinaryOp op) { return precedence(op) == 4; }

// `parentPrec` is the binding strength required at this position.
void print(const Expr& e, int parentPrec, std::string& out) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::BoolLit:
      out += n.boolValue ? "true" : "false";
      return;
    case ExprKind::IntLit:
      if (n.intValue < 0) {
        // Negative literals print as a negation so they reparse identically.
        if (parentPrec > kUnaryPrecedence) out += '(';
        out += '-';
        out += std::to_string(-n.intValue);
        if (parentPrec > kUnaryPrecedence) out += ')';
      } else if (parentPrec > kUnaryPrecedence) {
        out += '(';
        out += std::to_string(n.intValue);
        out += ')';
      } else {
        out += std::to_string(n.intValue);
      }
      return;
    case ExprKind::Ident:
      out += n.name;
      return;
    case ExprKind::Primed:
      out += n.name;
      out += '\'';
      return;
    case ExprKind::Unary: {
      bool paren = parentPrec > kUnaryPrecedence;
      if (paren) out += '(';
      out += n.unary == UnaryOp::Not ? "!" : "-";
      // `-3` reads back as a literal, so a negated literal keeps its parens;
      // so does a double negation, since `--` is a token of its own.
      const ExprNode& inner = n.args[0].node();
      bool tight = inner.kind == ExprKind::IntLit ||
                   (n.unary == UnaryOp::Neg && inner.kind == ExprKind::Unary && inner.unary == UnaryOp::Neg);
      print(n.args[0], tight ? kUnaryPrecedence + 1 : kUnaryPrecedence, out);
      if (paren) out += ')';
      return;
    }
    case ExprKind::Binary: {
      int p = precedence(n.binary);
      bool paren = p < parentPrec;
      if (paren) out += '(';
      // Implication is right-associative, comparisons do not chain, the rest
      // associate to the left.
      int lp = p, rp = p + 1;
      if (n.binary == BinaryOp::Implies) {
        lp = p + 1;
        rp = p;
      } else if (isComparison(n.binary)) {
        lp = p + 1;
      }
      print(n.args[0], lp, out);
      out += ' ';
      out += symbol(n.binary);
      out += ' ';
      print(n.args[1], rp, out);
      if (paren) out += ')';
      return;
    }
    case ExprKind::Call: {
      out += n.name;
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        print(n.args[i], 0, out);
      }
      out += ')';
      return;
    }
  }
}

}  // namespace

std::string toString(const Expr& e) {
  if (!e) return {};
  std::string out;
  print(e, 0, out);
  return out;
}

bool isBuiltinFunction(std::string_view name) {
  return name == "max" || name == "min" || name == "ite" || name == "abs";
}

Int evaluate(const Expr& e, const Lookup& lookup) {
  if (!e) throw EvalError("evaluating an absent expression");
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::BoolLit:
      return n.boolValue ? 1 : 0;
    case ExprKind::IntLit:
      return n.intValue;
    case ExprKind::Ident:
    case ExprKind::Primed: {
      auto v = lookup(n.name, n.kind == ExprKind::Primed);
      if (!v) {
        throw EvalError("unbound identifier '" + n.name +
                        (n.kind == ExprKind::Primed ? "'" : "") + "'");
      }
      return *v;
    }
    case ExprKind::Unary: {
      Int v = evaluate(n.args[0], lookup);
      return n.unary == UnaryOp::Not ? (v == 0 ? 1 : 0) : -v;
    }
    case ExprKind::Binary: {
      Int a = evaluate(n.args[0], lookup);
      // Short-circuit keeps guards like `k > 0 && f(k)` total.
      if (n.binary == BinaryOp::And && a == 0) return 0;
      if (n.binary == BinaryOp::Or && a != 0) return 1;
      if (n.binary == BinaryOp::Implies && a == 0) return 1;
      Int b = evaluate(n.args[1], lookup);
      switch (n.binary) {
        case BinaryOp::Implies:
        case BinaryOp::Or:
        case BinaryOp::And:
          return b != 0 ? 1 : 0;
        case BinaryOp::Eq:
          return a == b;
        case BinaryOp::Ne:
          return a != b;
        case BinaryOp::Lt:
          return a < b;
        case BinaryOp::Le:
          return a <= b;
        case BinaryOp::Gt:
          return a > b;
        case BinaryOp::Ge:
          return a >= b;
        case BinaryOp::Add:
          return a + b;
        case BinaryOp::Sub:
          return a - b;
        case BinaryOp::Mul:
          return a * b;
      }
      return 0;
    }
    case ExprKind::Call: {
      if (n.name == "ite") {
        if (n.args.size() != 3) throw EvalError("ite expects 3 arguments");
        return evaluate(n.args[0], lookup) != 0 ? evaluate(n.args[1], lookup)
                                                : evaluate(n.args[2], lookup);
      }
      if (n.name == "abs") {
        if (n.args.size() != 1) throw EvalError("abs expects 1 argument");
        Int v = evaluate(n.args[0], lookup);
        return v < 0 ? -v : v;
      }
      if (n.name == "max" || n.name == "min") {
        if (n.args.empty()) throw EvalError(n.name + " expects arguments");
        Int acc = evaluate(n.args[0], lookup);
        for (std::size_t i = 1; i < n.args.size(); ++i) {
          Int v = evaluate(n.args[i], lookup);
          acc = n.name == "max" ? std::max(acc, v) : std::min(acc, v);
        }
        return acc;
      }
      throw EvalError("unknown function '" + n.name + "'");
    }
  }
  return 0;
}

bool evaluateBool(const Expr& e, const Lookup& lookup) { return evaluate(e, lookup) != 0; }

void collectIdentifiers(const Expr& e, std::vector<std::string>& out) {
  if (!e) return;
  const ExprNode& n = e.node();
  if (n.kind == ExprKind::Ident) out.push_back(n.name);
  if (n.kind == ExprKind::Primed) out.push_back(n.name + "'");
  for (const Expr& a : n.args) collectIdentifiers(a, out);
}

Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& bindings) {
  if (!e) return e;
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::Ident: {
      auto it = bindings.find(n.name);
      return it == bindings.end() ? e : it->second;
    }
    case ExprKind::Unary:
      return Expr::unary(n.unary, substitute(n.args[0], bindings));
    case ExprKind::Binary:
      return Expr::binary(n.binary, substitute(n.args[0], bindings),
                          substitute(n.args[1], bindings));
    case ExprKind::Call: {
      std::vector<Expr> args;
      args.reserve(n.args.size());
      for (const Expr& a : n.args) args.push_back(substitute(a, bindings));
      return Expr::call(n.name, std::move(args));
    }
    default:
      return e;
  }
}

namespace {

bool numeric(const Type& t) { return t.kind == TypeKind::Int || t.kind == TypeKind::Opaque; }
bool booleanish(const Type& t) { return t.kind == TypeKind::Bool || t.kind == TypeKind::Opaque; }

bool comparable(const Type& a, const Type& b) {
  if (a.kind == TypeKind::Opaque || b.kind == TypeKind::Opaque) return true;
  if (a.kind == TypeKind::Enum || b.kind == TypeKind::Enum) return a == b;
  return a.kind == b.kind;
}

}  // namespace

std::optional<Type> inferType(const Expr& e, const TypeLookup& resolve,
                              std::vector<std::string>& errors) {
  if (!e) return std::nullopt;
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::BoolLit:
      return Type::boolean();
    case ExprKind::IntLit:
      return Type::integer(n.intValue, n.intValue);
    case ExprKind::Ident:
    case ExprKind::Primed: {
      std::string key = n.kind == ExprKind::Primed ? n.name + "'" : n.name;
      auto t = resolve(key);
      if (!t) errors.push_back("unresolved identifier '" + key + "'");
      return t;
    }
    case ExprKind::Unary: {
      auto t = inferType(n.args[0], resolve, errors);
      if (!t) return std::nullopt;
      if (n.unary == UnaryOp::Not) {
        if (!booleanish(*t)) errors.push_back("'!' applied to non-boolean " + toString(n.args[0]));
        return Type::boolean();
      }
      if (!numeric(*t)) errors.push_back("'-' applied to non-integer " + toString(n.args[0]));
      return Type::integer(-t->hi, -t->lo);
    }
    case ExprKind::Binary: {
      auto a = inferType(n.args[0], resolve, errors);
      auto b = inferType(n.args[1], resolve, errors);
      if (!a || !b) {
        return precedence(n.binary) <= 4 ? std::optional<Type>(Type::boolean()) : std::nullopt;
      }
      std::string where = toString(e);
      switch (n.binary) {
        case BinaryOp::Implies:
        case BinaryOp::Or:
        case BinaryOp::And:
          if (!booleanish(*a) || !booleanish(*b))
            errors.push_back("logical operator on non-boolean operand in '" + where + "'");
          return Type::boolean();
        case BinaryOp::Eq:
        case BinaryOp::Ne:
          if (!comparable(*a, *b)) errors.push_back("incomparable operands in '" + where + "'");
          return Type::boolean();
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge:
          if (!numeric(*a) || !numeric(*b))
            errors.push_back("ordering on non-integer operand in '" + where + "'");
          return Type::boolean();
        case BinaryOp::Add:
        case BinaryOp::Sub:
        case BinaryOp::Mul:
          if (!numeric(*a) || !numeric(*b)) {
            errors.push_back("arithmetic on non-integer operand in '" + where + "'");
            return std::nullopt;
          }
          if (a->kind == TypeKind::Opaque) return a;
          if (b->kind == TypeKind::Opaque) return b;
          if (n.binary == BinaryOp::Add) return Type::integer(a->lo + b->lo, a->hi + b->hi);
          if (n.binary == BinaryOp::Sub) return Type::integer(a->lo - b->hi, a->hi - b->lo);
          {
            Int c[] = {a->lo * b->lo, a->lo * b->hi, a->hi * b->lo, a->hi * b->hi};
            return Type::integer(*std::min_element(c, c + 4), *std::max_element(c, c + 4));
          }
      }
      return std::nullopt;
    }
    case ExprKind::Call: {
      std::vector<std::optional<Type>> ts;
      for (const Expr& a : n.args) ts.push_back(inferType(a, resolve, errors));
      if (!isBuiltinFunction(n.name)) {
        errors.push_back("unknown function '" + n.name + "'");
        return std::nullopt;
      }
      if (n.name == "ite") {
        if (ts.size() != 3) {
          errors.push_back("ite expects 3 arguments");
          return std::nullopt;
        }
        if (ts[0] && !booleanish(*ts[0])) errors.push_back("ite condition is not boolean");
        if (ts[1] && ts[2] && ts[1]->kind == TypeKind::Int && ts[2]->kind == TypeKind::Int)
          return Type::integer(std::min(ts[1]->lo, ts[2]->lo), std::max(ts[1]->hi, ts[2]->hi));
        return ts[1] ? ts[1] : ts[2];
      }
      if (n.name == "abs" && ts.size() != 1) errors.push_back("abs expects 1 argument");
      if (ts.empty()) {
        errors.push_back(n.name + " expects arguments");
        return std::nullopt;
      }
      Int lo = 0, hi = 0;
      bool first = true;
      for (const auto& t : ts) {
        if (!t) return std::nullopt;
        if (!numeric(*t)) {
          errors.push_back(n.name + " applied to non-integer argument");
          return std::nullopt;
        }
        if (t->kind == TypeKind::Opaque) return t;
        if (first) {
          lo = t->lo;
          hi = t->hi;
          first = false;
        } else if (n.name == "max") {
          lo = std::max(lo, t->lo);
          hi = std::max(hi, t->hi);
        } else {
          lo = std::min(lo, t->lo);
          hi = std::min(hi, t->hi);
        }
      }
      if (n.name == "abs") return Type::integer(0, std::max(std::abs(lo), std::abs(hi)));
      return Type::integer(lo, hi);
    }
  }
  return std::nullopt;
}

}  // namespace sosc
