#pragma once

// A small closed-form expression language for Hamiltonians H(x, eta, P) and
// candidate maps u(x), with value, first- and second-order evaluation.
//
// Grammar (precedence high to low, binary operators left-associative):
//
//   primary  := number | variable | func '(' args ')' | '(' expr ')'
//   power    := primary ('^' exponent)*        exponent := '-' exponent | primary
//   unary    := '-' unary | power
//   term     := unary (('*' | '/') unary)*
//   expr     := term (('+' | '-') term)*
//
// Variables: x<i> (1 <= i <= n), u<a> and eta<a> (1 <= a <= N; u is an alias
// of eta inside a Hamiltonian), P<a><i> (single digit each). Functions: abs,
// sqrt, exp, log, sin, cos (one argument) and pow(base, exponent).
//
// Singularity policy: abs at 0, sqrt at 0 and non-integer constant powers of
// 0 raise SingularityError; log of a nonpositive number, sqrt of a negative
// number, division by zero and fractional powers of negative numbers raise
// DomainError. A power whose exponent contains no variable is a constant
// power; otherwise it is evaluated as exp(e * log(b)) and needs b > 0.

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "linfvar/dual.hpp"

namespace linfvar::expr {

struct Dims {
  int n = 1;  ///< spatial dimension
  int N = 1;  ///< number of map components
  bool operator==(const Dims&) const = default;
};

enum class VarKind : std::uint8_t { X, U, Eta, P };

struct Variable {
  VarKind kind = VarKind::X;
  int alpha = 0;  ///< component index (1-based), unused for X
  int i = 0;      ///< spatial index (1-based), unused for U/Eta
  bool operator==(const Variable&) const = default;
};

std::string variable_name(const Variable& v);

/// Which variable kinds an expression may reference.
struct Scope {
  bool x = true, u = true, eta = true, p = true;
  static Scope all() { return {}; }
  static Scope spatial() { return {true, false, false, false}; }
  bool allows(VarKind k) const;
};

enum class UnaryOp : std::uint8_t { Neg, Abs, Sqrt, Exp, Log, Sin, Cos };
enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Constant {
  double value = 0.0;
};
struct Unary {
  UnaryOp op;
  NodePtr arg;
};
struct Binary {
  BinaryOp op;
  NodePtr lhs, rhs;
};

struct Node {
  std::variant<Constant, Variable, Unary, Binary> data;
  bool has_variables = false;
};

NodePtr make_constant(double v);
NodePtr make_variable(const Variable& v);
/// Negation of a constant folds into a negative constant (canonical form).
NodePtr make_unary(UnaryOp op, NodePtr arg);
NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs);

bool structurally_equal(const Node& a, const Node& b);

/// Immutable expression tree together with the (n, N) it was declared for.
class Ast {
 public:
  Ast() = default;
  Ast(NodePtr root, Dims dims);

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }
  Dims dims() const { return dims_; }
  bool empty() const { return root_ == nullptr; }

  bool uses(VarKind kind) const;
  std::vector<Variable> variables() const;

  static Ast constant(double v, Dims dims) { return Ast(make_constant(v), dims); }
  static Ast variable(const Variable& v, Dims dims) { return Ast(make_variable(v), dims); }

 private:
  NodePtr root_;
  Dims dims_;
};

Ast operator+(const Ast& a, const Ast& b);
Ast operator-(const Ast& a, const Ast& b);
Ast operator*(const Ast& a, const Ast& b);
Ast operator/(const Ast& a, const Ast& b);
Ast operator-(const Ast& a);
Ast pow(const Ast& base, const Ast& exponent);
Ast apply(UnaryOp op, const Ast& arg);

/// Parses `src`; throws ParseError (syntax, unknown identifier, arity) with
/// the byte offset of the offending token.
Ast parse(std::string_view src, Dims dims, Scope scope = Scope::all());

/// Canonical, fully parenthesised text. parse(print(a)) is structurally
/// equal to a for every tree built by parse or the builders above.
std::string print(const Ast& ast);

/// Flat variable slots: [x_1..x_n | eta_1..eta_N | P_11..P_Nn (row-major)].
/// u_a shares the slot of eta_a.
struct VariableLayout {
  int n = 1, N = 1;
  explicit VariableLayout(Dims d) : n(d.n), N(d.N) {}
  int size() const { return n + N + N * n; }
  int x_slot(int i) const { return i - 1; }
  int eta_slot(int a) const { return n + a - 1; }
  int p_slot(int a, int i) const { return n + N + (a - 1) * n + (i - 1); }
  int slot(const Variable& v) const;
};

/// Name-addressed binding, convenient for tests and the CLI.
class Binding {
 public:
  explicit Binding(Dims dims);
  Binding& set(std::string_view name, double value);
  int slot_of(std::string_view name) const;
  std::span<const double> values() const { return values_; }

 private:
  Dims dims_;
  std::vector<double> values_;
};

double evaluate(const Ast& ast, std::span<const double> binding);
Dual1 eval_jet1(const Ast& ast, std::span<const double> binding, std::span<const int> seed_slots);
/// Value, gradient and Hessian with respect to the variables in `seed_slots`
/// (in that order).
Dual2 eval_jet2(const Ast& ast, std::span<const double> binding, std::span<const int> seed_slots);

}  // namespace linfvar::expr
