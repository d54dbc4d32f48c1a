#include "linfvar/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <optional>
#include <system_error>

#include "linfvar/errors.hpp"

namespace linfvar::expr {

std::string variable_name(const Variable& v) {
  switch (v.kind) {
    case VarKind::X:
      return "x" + std::to_string(v.i);
    case VarKind::U:
      return "u" + std::to_string(v.alpha);
    case VarKind::Eta:
      return "eta" + std::to_string(v.alpha);
    case VarKind::P:
      if (v.alpha < 10 && v.i < 10) return "P" + std::to_string(v.alpha) + std::to_string(v.i);
      return "P" + std::to_string(v.alpha) + "_" + std::to_string(v.i);
  }
  return "?";
}

bool Scope::allows(VarKind k) const {
  switch (k) {
    case VarKind::X:
      return x;
    case VarKind::U:
      return u;
    case VarKind::Eta:
      return eta;
    case VarKind::P:
      return p;
  }
  return false;
}

NodePtr make_constant(double v) {
  auto n = std::make_shared<Node>();
  n->data = Constant{v};
  return n;
}

NodePtr make_variable(const Variable& v) {
  auto n = std::make_shared<Node>();
  n->data = v;
  n->has_variables = true;
  return n;
}

NodePtr make_unary(UnaryOp op, NodePtr arg) {
  if (op == UnaryOp::Neg) {
    if (const auto* c = std::get_if<Constant>(&arg->data)) return make_constant(-c->value);
  }
  auto n = std::make_shared<Node>();
  n->has_variables = arg->has_variables;
  n->data = Unary{op, std::move(arg)};
  return n;
}

NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Node>();
  n->has_variables = lhs->has_variables || rhs->has_variables;
  n->data = Binary{op, std::move(lhs), std::move(rhs)};
  return n;
}

bool structurally_equal(const Node& a, const Node& b) {
  if (a.data.index() != b.data.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.data);
        if constexpr (std::is_same_v<T, Constant>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, Variable>) {
          return x == y;
        } else if constexpr (std::is_same_v<T, Unary>) {
          return x.op == y.op && structurally_equal(*x.arg, *y.arg);
        } else {
          return x.op == y.op && structurally_equal(*x.lhs, *y.lhs) &&
                 structurally_equal(*x.rhs, *y.rhs);
        }
      },
      a.data);
}

Ast::Ast(NodePtr root, Dims dims) : root_(std::move(root)), dims_(dims) {
  if (!root_) throw InputError("Ast requires a root node");
}

namespace {

void collect_variables(const Node& node, std::vector<Variable>& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Variable>) {
          for (const auto& v : out)
            if (v == x) return;
          out.push_back(x);
        } else if constexpr (std::is_same_v<T, Unary>) {
          collect_variables(*x.arg, out);
        } else if constexpr (std::is_same_v<T, Binary>) {
          collect_variables(*x.lhs, out);
          collect_variables(*x.rhs, out);
        }
      },
      node.data);
}

Dims merged(const Ast& a, const Ast& b) {
  if (!(a.dims() == b.dims())) throw InputError("combining expressions with different (n, N)");
  return a.dims();
}

}  // namespace

bool Ast::uses(VarKind kind) const {
  for (const auto& v : variables())
    if (v.kind == kind) return true;
  return false;
}

std::vector<Variable> Ast::variables() const {
  std::vector<Variable> out;
  if (root_) collect_variables(*root_, out);
  return out;
}

Ast operator+(const Ast& a, const Ast& b) {
  return Ast(make_binary(BinaryOp::Add, a.root_ptr(), b.root_ptr()), merged(a, b));
}
Ast operator-(const Ast& a, const Ast& b) {
  return Ast(make_binary(BinaryOp::Sub, a.root_ptr(), b.root_ptr()), merged(a, b));
}
Ast operator*(const Ast& a, const Ast& b) {
  return Ast(make_binary(BinaryOp::Mul, a.root_ptr(), b.root_ptr()), merged(a, b));
}
Ast operator/(const Ast& a, const Ast& b) {
  return Ast(make_binary(BinaryOp::Div, a.root_ptr(), b.root_ptr()), merged(a, b));
}
Ast operator-(const Ast& a) { return Ast(make_unary(UnaryOp::Neg, a.root_ptr()), a.dims()); }
Ast pow(const Ast& base, const Ast& exponent) {
  return Ast(make_binary(BinaryOp::Pow, base.root_ptr(), exponent.root_ptr()),
             merged(base, exponent));
}
Ast apply(UnaryOp op, const Ast& arg) { return Ast(make_unary(op, arg.root_ptr()), arg.dims()); }

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Token {
  enum Kind { Number, Ident, Op, LParen, RParen, Comma, End } kind;
  std::string_view text;
  std::size_t offset;
  double number = 0.0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::size_t start = pos_;
    if (pos_ >= src_.size()) {
      tok_ = {Token::End, {}, start};
      return;
    }
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), v);
      if (ec != std::errc()) throw ParseError("malformed number", start);
      pos_ = static_cast<std::size_t>(ptr - src_.data());
      tok_ = {Token::Number, src_.substr(start, pos_ - start), start, v};
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      tok_ = {Token::Ident, src_.substr(start, pos_ - start), start};
      return;
    }
    ++pos_;
    switch (c) {
      case '+':
      case '-':
      case '*':
      case '/':
      case '^':
        tok_ = {Token::Op, src_.substr(start, 1), start};
        return;
      case '(':
        tok_ = {Token::LParen, src_.substr(start, 1), start};
        return;
      case ')':
        tok_ = {Token::RParen, src_.substr(start, 1), start};
        return;
      case ',':
        tok_ = {Token::Comma, src_.substr(start, 1), start};
        return;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", start);
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_{Token::End, {}, 0};
};

std::optional<int> parse_index(std::string_view digits) {
  if (digits.empty() || digits.front() == '0') return std::nullopt;
  int v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  return v;
}

// Recognises x<i>, u<a>, eta<a>, P<a><i>, P<a>_<i>. Range checks are done by
// the caller.
std::optional<Variable> match_variable(std::string_view name) {
  auto digits_after = [&](std::size_t prefix) { return name.substr(prefix); };
  if (name.size() >= 2 && name[0] == 'x') {
    if (auto i = parse_index(digits_after(1))) return Variable{VarKind::X, 0, *i};
    return std::nullopt;
  }
  if (name.size() >= 4 && name.substr(0, 3) == "eta") {
    if (auto a = parse_index(digits_after(3))) return Variable{VarKind::Eta, *a, 0};
    return std::nullopt;
  }
  if (name.size() >= 2 && name[0] == 'u') {
    if (auto a = parse_index(digits_after(1))) return Variable{VarKind::U, *a, 0};
    return std::nullopt;
  }
  if (name.size() >= 3 && name[0] == 'P') {
    const auto rest = name.substr(1);
    if (const auto us = rest.find('_'); us != std::string_view::npos) {
      auto a = parse_index(rest.substr(0, us));
      auto i = parse_index(rest.substr(us + 1));
      if (a && i) return Variable{VarKind::P, *a, *i};
      return std::nullopt;
    }
    if (rest.size() == 2 && rest[0] != '0' && rest[1] != '0' &&
        std::isdigit(static_cast<unsigned char>(rest[0])) &&
        std::isdigit(static_cast<unsigned char>(rest[1])))
      return Variable{VarKind::P, rest[0] - '0', rest[1] - '0'};
  }
  return std::nullopt;
}

std::optional<UnaryOp> match_function(std::string_view name) {
  if (name == "abs") return UnaryOp::Abs;
  if (name == "sqrt") return UnaryOp::Sqrt;
  if (name == "exp") return UnaryOp::Exp;
  if (name == "log") return UnaryOp::Log;
  if (name == "sin") return UnaryOp::Sin;
  if (name == "cos") return UnaryOp::Cos;
  return std::nullopt;
}

class Parser {
 public:
  Parser(std::string_view src, Dims dims, Scope scope) : lex_(src), dims_(dims), scope_(scope) {}

  NodePtr parse_all() {
    NodePtr e = expr();
    const Token& t = lex_.peek();
    if (t.kind != Token::End) throw ParseError("unexpected token '" + std::string(t.text) + "'", t.offset);
    return e;
  }

 private:
  bool at_op(char c) const {
    const Token& t = lex_.peek();
    return t.kind == Token::Op && t.text[0] == c;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    while (at_op('+') || at_op('-')) {
      const BinaryOp op = lex_.take().text[0] == '+' ? BinaryOp::Add : BinaryOp::Sub;
      lhs = make_binary(op, lhs, term());
    }
    return lhs;
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (at_op('*') || at_op('/')) {
      const BinaryOp op = lex_.take().text[0] == '*' ? BinaryOp::Mul : BinaryOp::Div;
      lhs = make_binary(op, lhs, unary());
    }
    return lhs;
  }

  NodePtr unary() {
    if (at_op('-')) {
      lex_.take();
      return make_unary(UnaryOp::Neg, unary());
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    while (at_op('^')) {
      lex_.take();
      base = make_binary(BinaryOp::Pow, base, exponent());
    }
    return base;
  }

  NodePtr exponent() {
    if (at_op('-')) {
      lex_.take();
      return make_unary(UnaryOp::Neg, exponent());
    }
    return primary();
  }

  NodePtr primary() {
    const Token t = lex_.take();
    switch (t.kind) {
      case Token::Number:
        return make_constant(t.number);
      case Token::LParen: {
        NodePtr e = expr();
        expect(Token::RParen, "')'");
        return e;
      }
      case Token::Ident:
        return identifier(t);
      case Token::End:
        throw ParseError("unexpected end of expression", t.offset);
      default:
        throw ParseError("unexpected token '" + std::string(t.text) + "'", t.offset);
    }
  }

  NodePtr identifier(const Token& t) {
    if (lex_.peek().kind == Token::LParen) {
      lex_.take();
      std::vector<NodePtr> args;
      if (lex_.peek().kind != Token::RParen) {
        args.push_back(expr());
        while (lex_.peek().kind == Token::Comma) {
          lex_.take();
          args.push_back(expr());
        }
      }
      expect(Token::RParen, "')'");
      if (t.text == "pow") {
        if (args.size() != 2) throw ParseError("pow expects 2 arguments", t.offset);
        return make_binary(BinaryOp::Pow, args[0], args[1]);
      }
      if (auto op = match_function(t.text)) {
        if (args.size() != 1)
          throw ParseError(std::string(t.text) + " expects 1 argument", t.offset);
        return make_unary(*op, args[0]);
      }
      throw ParseError("unknown function '" + std::string(t.text) + "'", t.offset);
    }
    auto v = match_variable(t.text);
    if (!v) throw ParseError("unknown variable '" + std::string(t.text) + "'", t.offset);
    const bool in_range = [&] {
      switch (v->kind) {
        case VarKind::X:
          return v->i >= 1 && v->i <= dims_.n;
        case VarKind::U:
        case VarKind::Eta:
          return v->alpha >= 1 && v->alpha <= dims_.N;
        case VarKind::P:
          return v->alpha >= 1 && v->alpha <= dims_.N && v->i >= 1 && v->i <= dims_.n;
      }
      return false;
    }();
    if (!in_range || !scope_.allows(v->kind))
      throw ParseError("unknown variable '" + std::string(t.text) + "'", t.offset);
    return make_variable(*v);
  }

  void expect(Token::Kind kind, const char* what) {
    const Token t = lex_.take();
    if (t.kind != kind) throw ParseError(std::string("expected ") + what, t.offset);
  }

  Lexer lex_;
  Dims dims_;
  Scope scope_;
};

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  std::string s(buf, ptr);
  // A bare "1e-05" would lex the '-' as an operator; to_chars never emits a
  // sign after 'e' without digits, and from_chars accepts the exponent form.
  if (v < 0 || (v == 0.0 && std::signbit(v))) return "(" + s + ")";
  return s;
}

const char* unary_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::Neg:
      return "-";
    case UnaryOp::Abs:
      return "abs";
    case UnaryOp::Sqrt:
      return "sqrt";
    case UnaryOp::Exp:
      return "exp";
    case UnaryOp::Log:
      return "log";
    case UnaryOp::Sin:
      return "sin";
    case UnaryOp::Cos:
      return "cos";
  }
  return "?";
}

char binary_symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add:
      return '+';
    case BinaryOp::Sub:
      return '-';
    case BinaryOp::Mul:
      return '*';
    case BinaryOp::Div:
      return '/';
    case BinaryOp::Pow:
      return '^';
  }
  return '?';
}

void print_node(const Node& node, std::string& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Constant>) {
          out += format_number(x.value);
        } else if constexpr (std::is_same_v<T, Variable>) {
          out += variable_name(x);
        } else if constexpr (std::is_same_v<T, Unary>) {
          if (x.op == UnaryOp::Neg) {
            out += "(-";
            print_node(*x.arg, out);
            out += ")";
          } else {
            out += unary_name(x.op);
            out += "(";
            print_node(*x.arg, out);
            out += ")";
          }
        } else {
          out += "(";
          print_node(*x.lhs, out);
          out += ' ';
          out += binary_symbol(x.op);
          out += ' ';
          print_node(*x.rhs, out);
          out += ")";
        }
      },
      node.data);
}

}  // namespace

Ast parse(std::string_view src, Dims dims, Scope scope) {
  if (dims.n < 1 || dims.N < 1) throw InputError("expression dimensions must be positive");
  if (src.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw ParseError("empty expression", 0);
  Parser p(src, dims, scope);
  return Ast(p.parse_all(), dims);
}

std::string print(const Ast& ast) {
  std::string out;
  print_node(ast.root(), out);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

int VariableLayout::slot(const Variable& v) const {
  switch (v.kind) {
    case VarKind::X:
      return x_slot(v.i);
    case VarKind::U:
    case VarKind::Eta:
      return eta_slot(v.alpha);
    case VarKind::P:
      return p_slot(v.alpha, v.i);
  }
  return -1;
}

Binding::Binding(Dims dims) : dims_(dims), values_(VariableLayout(dims).size(), 0.0) {}

int Binding::slot_of(std::string_view name) const {
  auto v = match_variable(name);
  if (!v) throw InputError("unknown variable '" + std::string(name) + "'");
  const VariableLayout layout(dims_);
  const int s = layout.slot(*v);
  if (s < 0 || s >= layout.size()) throw InputError("variable out of range: " + std::string(name));
  return s;
}

Binding& Binding::set(std::string_view name, double value) {
  values_[static_cast<std::size_t>(slot_of(name))] = value;
  return *this;
}

namespace {

struct PlainOps {
  using T = double;
  std::span<const double> binding;
  T constant(double v) const { return v; }
  T variable(int slot) const { return binding[static_cast<std::size_t>(slot)]; }
};

template <class D>
struct DualOps {
  using T = D;
  std::span<const double> binding;
  std::vector<int> seed_of_slot;  // -1 when not seeded
  Eigen::Index seeds;
  T constant(double v) const { return T::constant(v, seeds); }
  T variable(int slot) const {
    const double v = binding[static_cast<std::size_t>(slot)];
    const int s = seed_of_slot[static_cast<std::size_t>(slot)];
    return s < 0 ? T::constant(v, seeds) : T::variable(v, seeds, s);
  }
};

double value_of(double v) { return v; }
template <class D>
double value_of(const D& d) {
  return d.value;
}

template <class Ops>
typename Ops::T eval_node(const Node& node, const Ops& ops, const VariableLayout& layout) {
  using T = typename Ops::T;
  return std::visit(
      [&](const auto& x) -> T {
        using N = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<N, Constant>) {
          return ops.constant(x.value);
        } else if constexpr (std::is_same_v<N, Variable>) {
          return ops.variable(layout.slot(x));
        } else if constexpr (std::is_same_v<N, Unary>) {
          T a = eval_node(*x.arg, ops, layout);
          switch (x.op) {
            case UnaryOp::Neg:
              return -a;
            case UnaryOp::Abs:
              return dual_math::abs(a);
            case UnaryOp::Sqrt:
              return dual_math::sqrt(a);
            case UnaryOp::Exp:
              return dual_math::exp(a);
            case UnaryOp::Log:
              return dual_math::log(a);
            case UnaryOp::Sin:
              return dual_math::sin(a);
            case UnaryOp::Cos:
              return dual_math::cos(a);
          }
          throw InputError("corrupt unary node");
        } else {
          T a = eval_node(*x.lhs, ops, layout);
          if (x.op == BinaryOp::Pow && !x.rhs->has_variables) {
            const double e = value_of(eval_node(*x.rhs, ops, layout));
            return dual_math::pow_const(a, e);
          }
          T b = eval_node(*x.rhs, ops, layout);
          switch (x.op) {
            case BinaryOp::Add:
              return a + b;
            case BinaryOp::Sub:
              return a - b;
            case BinaryOp::Mul:
              return a * b;
            case BinaryOp::Div:
              return dual_math::divide(a, b);
            case BinaryOp::Pow:
              return dual_math::pow_general(a, b);
          }
          throw InputError("corrupt binary node");
        }
      },
      node.data);
}

void check_binding(const Ast& ast, std::span<const double> binding) {
  const VariableLayout layout(ast.dims());
  if (static_cast<int>(binding.size()) < layout.size())
    throw InputError("binding has " + std::to_string(binding.size()) + " slots, expected " +
                     std::to_string(layout.size()));
}

template <class D>
DualOps<D> make_dual_ops(const Ast& ast, std::span<const double> binding,
                         std::span<const int> seed_slots) {
  check_binding(ast, binding);
  DualOps<D> ops{binding, std::vector<int>(binding.size(), -1),
                 static_cast<Eigen::Index>(seed_slots.size())};
  for (std::size_t k = 0; k < seed_slots.size(); ++k) {
    const int s = seed_slots[k];
    if (s < 0 || static_cast<std::size_t>(s) >= binding.size())
      throw InputError("seed slot out of range");
    ops.seed_of_slot[static_cast<std::size_t>(s)] = static_cast<int>(k);
  }
  return ops;
}

}  // namespace

double evaluate(const Ast& ast, std::span<const double> binding) {
  check_binding(ast, binding);
  const VariableLayout layout(ast.dims());
  return eval_node(ast.root(), PlainOps{binding}, layout);
}

Dual1 eval_jet1(const Ast& ast, std::span<const double> binding, std::span<const int> seed_slots) {
  const auto ops = make_dual_ops<Dual1>(ast, binding, seed_slots);
  return eval_node(ast.root(), ops, VariableLayout(ast.dims()));
}

Dual2 eval_jet2(const Ast& ast, std::span<const double> binding, std::span<const int> seed_slots) {
  const auto ops = make_dual_ops<Dual2>(ast, binding, seed_slots);
  Dual2 r = eval_node(ast.root(), ops, VariableLayout(ast.dims()));
  r.hess = 0.5 * (r.hess + r.hess.transpose()).eval();
  return r;
}

}  // namespace linfvar::expr
