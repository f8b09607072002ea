#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sosc {

using Int = std::int64_t;

enum class TypeKind { Bool, Int, Enum, Opaque };

// Semantic type of a parameter or variable. Opaque types (DeviceId, Payload,
// Ticks, ...) can be declared and compared but never evaluated.
struct Type {
  TypeKind kind = TypeKind::Bool;
  Int lo = 0;
  Int hi = 0;
  std::vector<std::string> literals;
  std::string name;

  static Type boolean() { return {}; }
  static Type integer(Int lo, Int hi) { return {TypeKind::Int, lo, hi, {}, {}}; }
  static Type enumeration(std::vector<std::string> lits) {
    return {TypeKind::Enum, 0, 0, std::move(lits), {}};
  }
  static Type opaque(std::string name) { return {TypeKind::Opaque, 0, 0, {}, std::move(name)}; }

  bool evaluable() const { return kind != TypeKind::Opaque; }
  bool contains(Int v) const;

  bool operator==(const Type&) const = default;
};

std::string toString(const Type& t);

enum class ExprKind { BoolLit, IntLit, Ident, Primed, Unary, Binary, Call };
enum class UnaryOp { Not, Neg };
enum class BinaryOp { Implies, Or, And, Eq, Ne, Lt, Le, Gt, Ge, Add, Sub, Mul };

class Expr;

struct ExprNode {
  ExprKind kind = ExprKind::BoolLit;
  bool boolValue = false;
  Int intValue = 0;
  std::string name;  // identifier or function name
  UnaryOp unary = UnaryOp::Not;
  BinaryOp binary = BinaryOp::Or;
  std::vector<Expr> args;
};

// Immutable expression tree with value semantics. A default-constructed Expr
// is "absent" (no guard, no initial value, ...).
class Expr {
 public:
  Expr() = default;

  static Expr boolean(bool v);
  static Expr integer(Int v);
  static Expr ident(std::string name);
  static Expr primed(std::string name);
  static Expr unary(UnaryOp op, Expr operand);
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);
  static Expr call(std::string fn, std::vector<Expr> args);

  bool present() const { return node_ != nullptr; }
  explicit operator bool() const { return present(); }
  const ExprNode& node() const { return *node_; }
  const ExprNode* operator->() const { return node_.get(); }

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const ExprNode> node_;
};

// Canonical textual form; minimal parentheses, reparses to an equal tree.
std::string toString(const Expr& e);

int precedence(BinaryOp op);
std::string_view symbol(BinaryOp op);

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Name resolution for evaluation. Returns nullopt for unknown names.
using Lookup = std::function<std::optional<Int>(std::string_view name, bool primed)>;

// Total over bounded integers: booleans are 0/1, enum literals their index.
// Throws EvalError on unresolved identifiers or unknown functions.
Int evaluate(const Expr& e, const Lookup& lookup);
bool evaluateBool(const Expr& e, const Lookup& lookup);

// Identifiers referenced by the expression (excluding function names).
// Primed identifiers are reported with a trailing '\''.
void collectIdentifiers(const Expr& e, std::vector<std::string>& out);

// Replace unprimed identifiers by the mapped expressions.
Expr substitute(const Expr& e, const std::map<std::string, Expr, std::less<>>& bindings);

// Built-in functions of the expression language.
bool isBuiltinFunction(std::string_view name);

// Type inference. `resolve` maps identifiers (primed ones carry a trailing
// '\'') to their declared type; errors are appended as messages.
using TypeLookup = std::function<std::optional<Type>(std::string_view name)>;
std::optional<Type> inferType(const Expr& e, const TypeLookup& resolve,
                              std::vector<std::string>& errors);

}  // namespace sosc
