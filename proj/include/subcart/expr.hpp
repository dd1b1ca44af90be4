#pragma once

/**
 * @file
 * @brief Immutable symbolic expressions for smooth functions on R^n.
 *
 * A SmoothExpr is a shared, immutable expression tree. Evaluation is a pure
 * tree walk, so identical trees at identical points give bit-identical
 * results, and values may be evaluated from any number of threads.
 *
 * Differentiation is symbolic and closed: diff() returns another SmoothExpr,
 * which makes nested derivatives (Jacobi identities, torsion tensors) exact.
 * The smart constructors perform light simplification only: constant folding
 * and absorption of 0 and 1.
 */

#include <Eigen/Core>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subcart/error.hpp"

namespace subcart {

using Point = Eigen::VectorXd;

enum class Op : std::uint8_t {
  Const,
  Var,
  Add,
  Mul,
  Div,
  Pow,
  Neg,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
  Tanh,
  /// psi_k(u) = exp(-1/u) / u^k for u > 0 and 0 otherwise. Smooth everywhere.
  Psi,
};

/// Names used when parsing and printing variables. Entry i names variable i.
using VariableNames = std::vector<std::string>;

class SmoothExpr
{
public:
  /// The zero constant.
  SmoothExpr() : SmoothExpr(constant(0.0)) {}

  static SmoothExpr constant(double c) { return SmoothExpr(make(Op::Const, c, 0, nullptr, nullptr)); }
  static SmoothExpr variable(int index)
  {
    if (index < 0) { throw DimensionError("negative variable index"); }
    return SmoothExpr(make(Op::Var, 0.0, index, nullptr, nullptr));
  }

  Op op() const noexcept { return node_->op; }
  /// Constant value for Op::Const.
  double value() const noexcept { return node_->value; }
  /// Variable index for Var, exponent for Pow, order k for Psi.
  int index() const noexcept { return node_->index; }
  /// Child operands; rhs() is only set for binary nodes.
  SmoothExpr lhs() const { return SmoothExpr(node_->lhs); }
  SmoothExpr rhs() const { return SmoothExpr(node_->rhs); }
  std::size_t arity() const noexcept { return node_->rhs ? 2 : node_->lhs ? 1 : 0; }

  bool is_constant() const noexcept { return op() == Op::Const; }
  bool is_constant(double c) const noexcept { return is_constant() && value() == c; }
  bool is_zero() const noexcept { return is_constant(0.0); }

  /// Largest variable index referenced, or -1 for a closed expression.
  int max_variable() const noexcept { return node_->max_var; }

  /// Evaluate at `x`. Throws DomainError on a guard violation or a non-finite value.
  double operator()(std::span<const double> x) const { return eval(*node_, x); }
  double operator()(const Point & x) const { return eval(*node_, std::span<const double>(x.data(), x.size())); }

  /// Round-trip printable form; parse(str()) reproduces this tree.
  std::string str(const VariableNames & names = {}) const;

  /// Structural identity, with constants compared bitwise.
  bool same_as(const SmoothExpr & o) const { return same(node_.get(), o.node_.get()); }

  /// Number of nodes, counting shared subtrees once per reference.
  std::size_t size() const { return count(node_.get()); }

  /// Unsimplified node construction, used by the parser so that parse trees
  /// mirror the input text exactly.
  static SmoothExpr raw(Op op, const SmoothExpr & a, const SmoothExpr & b = {}, int index = 0)
  {
    const bool binary = op == Op::Add || op == Op::Mul || op == Op::Div;
    return SmoothExpr(make(op, 0.0, index, a.node_, binary ? b.node_ : nullptr));
  }

private:
  struct Node
  {
    Op op;
    double value;
    int index;
    int max_var;
    std::shared_ptr<const Node> lhs, rhs;
  };
  using NodePtr = std::shared_ptr<const Node>;

  explicit SmoothExpr(NodePtr n) : node_(std::move(n)) {}

  static NodePtr make(Op op, double value, int index, NodePtr lhs, NodePtr rhs)
  {
    int mv = op == Op::Var ? index : -1;
    if (lhs) { mv = std::max(mv, lhs->max_var); }
    if (rhs) { mv = std::max(mv, rhs->max_var); }
    return std::make_shared<const Node>(Node{op, value, index, mv, std::move(lhs), std::move(rhs)});
  }

  static double eval(const Node & n, std::span<const double> x);
  static bool same(const Node * a, const Node * b);
  static std::size_t count(const Node * n) { return n ? 1 + count(n->lhs.get()) + count(n->rhs.get()) : 0; }

  NodePtr node_;
};

inline SmoothExpr constant(double c) { return SmoothExpr::constant(c); }
inline SmoothExpr var(int i) { return SmoothExpr::variable(i); }

/// Exact partial derivative with respect to variable `v`.
SmoothExpr diff(const SmoothExpr & f, int v);

/// Value, gradient and optionally Hessian of an expression at a point.
struct Jet
{
  double value{0.0};
  Eigen::VectorXd gradient;
  std::optional<Eigen::MatrixXd> hessian;
};

/**
 * @brief Evaluate `f` and its symbolic derivatives up to `order` (0, 1 or 2).
 *
 * The Hessian is assembled from the upper triangle, so it is exactly symmetric.
 */
Jet eval_jet(const SmoothExpr & f, const Point & x, int order);

/// Parse `text` over `n_vars` variables named x1..xn, or `aliases` when given.
SmoothExpr parse(std::string_view text, int n_vars, const VariableNames & aliases = {});

SmoothExpr operator+(const SmoothExpr & a, const SmoothExpr & b);
SmoothExpr operator-(const SmoothExpr & a, const SmoothExpr & b);
SmoothExpr operator*(const SmoothExpr & a, const SmoothExpr & b);
SmoothExpr operator/(const SmoothExpr & a, const SmoothExpr & b);
SmoothExpr operator-(const SmoothExpr & a);
SmoothExpr pow(const SmoothExpr & a, int k);
SmoothExpr psi(const SmoothExpr & a, int k = 0);

// ---------------------------------------------------------------------------
// Implementation
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_number(double v)
{
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

inline double psi_value(double u, int k)
{
  if (!(u > 0.0)) { return 0.0; }
  // exp(-1/u - k log u) stays finite where exp(-1/u) and u^k would both underflow.
  return std::exp(-1.0 / u - static_cast<double>(k) * std::log(u));
}

[[noreturn]] inline void domain_fail(const std::string & what, std::span<const double> x)
{
  std::string msg = what + " at point (";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) { msg += ", "; }
    msg += format_number(x[i]);
  }
  throw DomainError(msg + ")");
}

}  // namespace detail

inline double SmoothExpr::eval(const Node & n, std::span<const double> x)
{
  double r = 0.0;
  switch (n.op) {
  case Op::Const: return n.value;
  case Op::Var:
    if (static_cast<std::size_t>(n.index) >= x.size()) {
      throw DimensionError("variable x" + std::to_string(n.index + 1) + " outside point of dimension " +
                           std::to_string(x.size()));
    }
    return x[n.index];
  case Op::Add: r = eval(*n.lhs, x) + eval(*n.rhs, x); break;
  case Op::Mul: r = eval(*n.lhs, x) * eval(*n.rhs, x); break;
  case Op::Div: {
    const double num = eval(*n.lhs, x);
    const double den = eval(*n.rhs, x);
    if (den == 0.0) { detail::domain_fail("division by zero in '" + SmoothExpr(n.rhs).str() + "'", x); }
    r = num / den;
    break;
  }
  case Op::Pow: {
    const double b = eval(*n.lhs, x);
    if (n.index < 0 && b == 0.0) {
      detail::domain_fail("negative power of zero in '" + SmoothExpr(n.lhs).str() + "'", x);
    }
    r = std::pow(b, n.index);
    break;
  }
  case Op::Neg: return -eval(*n.lhs, x);
  case Op::Sin: r = std::sin(eval(*n.lhs, x)); break;
  case Op::Cos: r = std::cos(eval(*n.lhs, x)); break;
  case Op::Exp: r = std::exp(eval(*n.lhs, x)); break;
  case Op::Log: {
    const double a = eval(*n.lhs, x);
    if (!(a > 0.0)) { detail::domain_fail("log of non-positive '" + SmoothExpr(n.lhs).str() + "'", x); }
    r = std::log(a);
    break;
  }
  case Op::Sqrt: {
    const double a = eval(*n.lhs, x);
    if (a < 0.0) { detail::domain_fail("sqrt of negative '" + SmoothExpr(n.lhs).str() + "'", x); }
    r = std::sqrt(a);
    break;
  }
  case Op::Tanh: r = std::tanh(eval(*n.lhs, x)); break;
  case Op::Psi: r = detail::psi_value(eval(*n.lhs, x), n.index); break;
  }
  if (!std::isfinite(r)) { detail::domain_fail("non-finite value of '" + SmoothExpr(std::make_shared<const Node>(n)).str() + "'", x); }
  return r;
}

inline bool SmoothExpr::same(const Node * a, const Node * b)
{
  if (a == b) { return true; }
  if (!a || !b) { return false; }
  if (a->op != b->op || a->index != b->index) { return false; }
  if (a->op == Op::Const && (a->value != b->value || std::signbit(a->value) != std::signbit(b->value))) {
    return false;
  }
  return same(a->lhs.get(), b->lhs.get()) && same(a->rhs.get(), b->rhs.get());
}

inline SmoothExpr operator+(const SmoothExpr & a, const SmoothExpr & b)
{
  if (a.is_constant() && b.is_constant()) { return constant(a.value() + b.value()); }
  if (a.is_zero()) { return b; }
  if (b.is_zero()) { return a; }
  return SmoothExpr::raw(Op::Add, a, b);
}

inline SmoothExpr operator-(const SmoothExpr & a)
{
  if (a.is_constant()) { return constant(-a.value()); }
  if (a.op() == Op::Neg) { return a.lhs(); }
  if (a.op() == Op::Mul && a.lhs().is_constant()) { return constant(-a.lhs().value()) * a.rhs(); }
  return SmoothExpr::raw(Op::Neg, a);
}

inline SmoothExpr operator-(const SmoothExpr & a, const SmoothExpr & b)
{
  if (a.is_constant() && b.is_constant()) { return constant(a.value() - b.value()); }
  if (b.is_zero()) { return a; }
  if (a.is_zero()) { return -b; }
  return SmoothExpr::raw(Op::Add, a, -b);
}

inline SmoothExpr operator*(const SmoothExpr & a, const SmoothExpr & b)
{
  if (a.is_constant() && b.is_constant()) { return constant(a.value() * b.value()); }
  if (a.is_zero() || b.is_zero()) { return constant(0.0); }
  if (a.is_constant(1.0)) { return b; }
  if (b.is_constant(1.0)) { return a; }
  if (a.is_constant(-1.0)) { return -b; }
  if (b.is_constant(-1.0)) { return -a; }
  if (b.is_constant() && !a.is_constant()) { return b * a; }
  if (a.is_constant() && b.op() == Op::Mul && b.lhs().is_constant()) { return constant(a.value() * b.lhs().value()) * b.rhs(); }
  if (a.is_constant() && b.op() == Op::Neg) { return constant(-a.value()) * b.lhs(); }
  return SmoothExpr::raw(Op::Mul, a, b);
}

inline SmoothExpr operator/(const SmoothExpr & a, const SmoothExpr & b)
{
  if (b.is_constant(1.0)) { return a; }
  if (a.is_constant() && b.is_constant() && b.value() != 0.0) { return constant(a.value() / b.value()); }
  if (a.is_zero() && !(b.is_zero())) { return constant(0.0); }
  if (b.is_constant() && b.value() != 0.0 && a.op() == Op::Mul && a.lhs().is_constant()) {
    return constant(a.lhs().value() / b.value()) * a.rhs();
  }
  return SmoothExpr::raw(Op::Div, a, b);
}

inline SmoothExpr pow(const SmoothExpr & a, int k)
{
  if (k == 0) { return constant(1.0); }
  if (k == 1) { return a; }
  if (a.is_constant() && (k > 0 || a.value() != 0.0)) { return constant(std::pow(a.value(), k)); }
  if (a.op() == Op::Pow) {
    const long long kk = static_cast<long long>(a.index()) * k;
    if (kk <= 1'000'000 && kk >= -1'000'000) { return pow(a.lhs(), static_cast<int>(kk)); }
  }
  return SmoothExpr::raw(Op::Pow, a, {}, k);
}

#define SUBCART_UNARY(fn, OP)                                    \
  inline SmoothExpr fn(const SmoothExpr & a)                     \
  {                                                              \
    if (a.is_constant()) {                                       \
      const double v = std::fn(a.value());                       \
      if (std::isfinite(v)) { return constant(v); }              \
    }                                                            \
    return SmoothExpr::raw(Op::OP, a);                           \
  }

SUBCART_UNARY(sin, Sin)
SUBCART_UNARY(cos, Cos)
SUBCART_UNARY(exp, Exp)
SUBCART_UNARY(tanh, Tanh)

#undef SUBCART_UNARY

inline SmoothExpr log(const SmoothExpr & a)
{
  if (a.is_constant() && a.value() > 0.0) { return constant(std::log(a.value())); }
  return SmoothExpr::raw(Op::Log, a);
}

inline SmoothExpr sqrt(const SmoothExpr & a)
{
  if (a.is_constant() && a.value() >= 0.0) { return constant(std::sqrt(a.value())); }
  return SmoothExpr::raw(Op::Sqrt, a);
}

inline SmoothExpr psi(const SmoothExpr & a, int k)
{
  if (a.is_constant()) { return constant(detail::psi_value(a.value(), k)); }
  return SmoothExpr::raw(Op::Psi, a, {}, k);
}

inline SmoothExpr diff(const SmoothExpr & f, int v)
{
  switch (f.op()) {
  case Op::Const: return constant(0.0);
  case Op::Var: return constant(f.index() == v ? 1.0 : 0.0);
  default: break;
  }
  if (f.max_variable() < v) { return constant(0.0); }

  const SmoothExpr a = f.lhs();
  const SmoothExpr da = diff(a, v);
  switch (f.op()) {
  case Op::Add: return da + diff(f.rhs(), v);
  case Op::Mul: {
    const SmoothExpr b = f.rhs();
    return da * b + a * diff(b, v);
  }
  case Op::Div: {
    const SmoothExpr b = f.rhs();
    const SmoothExpr db = diff(b, v);
    if (db.is_zero()) { return da / b; }
    return (da * b - a * db) / pow(b, 2);
  }
  case Op::Pow: return constant(f.index()) * pow(a, f.index() - 1) * da;
  case Op::Neg: return -da;
  case Op::Sin: return cos(a) * da;
  case Op::Cos: return -(sin(a) * da);
  case Op::Exp: return f * da;
  case Op::Log: return da / a;
  case Op::Sqrt: return da / (constant(2.0) * f);
  case Op::Tanh: return (constant(1.0) - pow(f, 2)) * da;
  case Op::Psi: {
    // d/du exp(-1/u) u^-k = psi_{k+2}(u) - k psi_{k+1}(u)
    const int k = f.index();
    SmoothExpr d = psi(a, k + 2);
    if (k != 0) { d = d - constant(k) * psi(a, k + 1); }
    return d * da;
  }
  default: break;
  }
  return constant(0.0);
}

inline Jet eval_jet(const SmoothExpr & f, const Point & x, int order)
{
  if (order < 0 || order > 2) { throw PreconditionError("jet order must be 0, 1 or 2"); }
  const auto n = static_cast<int>(x.size());
  if (f.max_variable() >= n) { throw DimensionError("expression uses more variables than the point has"); }
  Jet jet;
  jet.value = f(x);
  if (order == 0) { return jet; }
  jet.gradient.resize(n);
  std::vector<SmoothExpr> first;
  first.reserve(n);
  for (int i = 0; i < n; ++i) {
    first.push_back(diff(f, i));
    jet.gradient(i) = first.back()(x);
  }
  if (order == 2) {
    Eigen::MatrixXd h(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        h(i, j) = diff(first[i], j)(x);
        h(j, i) = h(i, j);
      }
    }
    jet.hessian = std::move(h);
  }
  return jet;
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

namespace detail {

inline const char * function_name(Op op)
{
  switch (op) {
  case Op::Sin: return "sin";
  case Op::Cos: return "cos";
  case Op::Exp: return "exp";
  case Op::Log: return "log";
  case Op::Sqrt: return "sqrt";
  case Op::Tanh: return "tanh";
  case Op::Psi: return "psi";
  default: return nullptr;
  }
}

struct Printer
{
  const VariableNames & names;

  std::string var(int i) const
  {
    if (static_cast<std::size_t>(i) < names.size()) { return names[i]; }
    return "x" + std::to_string(i + 1);
  }

  std::string expr(const SmoothExpr & e) const
  {
    if (e.op() != Op::Add) { return term(e); }
    const SmoothExpr b = e.rhs();
    if (b.op() == Op::Neg) { return expr(e.lhs()) + " - " + term(b.lhs()); }
    return expr(e.lhs()) + " + " + term(b);
  }

  std::string term(const SmoothExpr & e) const
  {
    if (e.op() == Op::Add) { return "(" + expr(e) + ")"; }
    if (e.op() == Op::Mul) { return term(e.lhs()) + "*" + factor(e.rhs()); }
    if (e.op() == Op::Div) { return term(e.lhs()) + "/" + factor(e.rhs()); }
    return factor(e);
  }

  std::string factor(const SmoothExpr & e) const
  {
    switch (e.op()) {
    case Op::Add:
    case Op::Mul:
    case Op::Div: return "(" + expr(e) + ")";
    case Op::Pow: return base(e.lhs()) + "^" + std::to_string(e.index());
    default: return base(e);
    }
  }

  std::string base(const SmoothExpr & e) const
  {
    switch (e.op()) {
    case Op::Const: return format_number(e.value());
    case Op::Var: return var(e.index());
    case Op::Neg: {
      const SmoothExpr c = e.lhs();
      // "-3" would parse back as a negative constant, so keep the Neg node visible.
      if (c.op() == Op::Const) { return "-(" + format_number(c.value()) + ")"; }
      if (c.op() == Op::Add || c.op() == Op::Mul || c.op() == Op::Div || c.op() == Op::Pow) {
        return "-(" + expr(c) + ")";
      }
      return "-" + base(c);
    }
    case Op::Psi:
      if (e.index() != 0) { return std::string("psi(") + expr(e.lhs()) + ", " + std::to_string(e.index()) + ")"; }
      return std::string("psi(") + expr(e.lhs()) + ")";
    case Op::Add:
    case Op::Mul:
    case Op::Div:
    case Op::Pow: return "(" + expr(e) + ")";
    default: return std::string(function_name(e.op())) + "(" + expr(e.lhs()) + ")";
    }
  }
};

}  // namespace detail

inline std::string SmoothExpr::str(const VariableNames & names) const { return detail::Printer{names}.expr(*this); }

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace detail {

class Parser
{
public:
  static bool is_function_name(const std::string & id) { return function(id).has_value(); }

  Parser(std::string_view text, int n_vars, const VariableNames & aliases)
      : text_(text), n_vars_(n_vars), aliases_(aliases)
  {}

  SmoothExpr run()
  {
    SmoothExpr e = expr();
    skip_space();
    if (pos_ < text_.size()) { fail("unexpected '" + std::string(1, text_[pos_]) + "'"); }
    return e;
  }

private:
  [[noreturn]] void fail(const std::string & msg) const { fail_at(msg, pos_); }

  [[noreturn]] void fail_at(const std::string & msg, std::size_t at) const
  {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < at && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(msg, line, col);
  }

  void skip_space()
  {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) { ++pos_; }
  }

  bool accept(char c)
  {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c)
  {
    if (!accept(c)) {
      if (pos_ >= text_.size()) { fail(std::string("expected '") + c + "' but reached end of input"); }
      fail(std::string("expected '") + c + "'");
    }
  }

  SmoothExpr expr()
  {
    SmoothExpr e = term();
    for (;;) {
      if (accept('+')) {
        e = SmoothExpr::raw(Op::Add, e, term());
      } else if (accept('-')) {
        e = SmoothExpr::raw(Op::Add, e, SmoothExpr::raw(Op::Neg, term()));
      } else {
        return e;
      }
    }
  }

  SmoothExpr term()
  {
    SmoothExpr e = factor();
    for (;;) {
      if (accept('*')) {
        e = SmoothExpr::raw(Op::Mul, e, factor());
      } else if (accept('/')) {
        e = SmoothExpr::raw(Op::Div, e, factor());
      } else {
        return e;
      }
    }
  }

  SmoothExpr factor()
  {
    SmoothExpr b = base();
    if (accept('^')) { return SmoothExpr::raw(Op::Pow, b, {}, integer()); }
    return b;
  }

  int integer()
  {
    skip_space();
    const std::size_t start = pos_;
    bool neg = false;
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) {
      neg = text_[pos_] == '-';
      ++pos_;
    }
    const std::size_t digits = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) { ++pos_; }
    if (pos_ == digits) { fail_at("expected integer exponent", start); }
    int k = 0;
    auto [p, ec] = std::from_chars(text_.data() + digits, text_.data() + pos_, k);
    if (ec != std::errc()) { fail_at("exponent out of range", start); }
    return neg ? -k : k;
  }

  double number()
  {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) { ++q; }
      if (q < text_.size() && std::isdigit(static_cast<unsigned char>(text_[q]))) {
        pos_ = q;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) { ++pos_; }
      }
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || p != text_.data() + pos_) { fail_at("malformed number", start); }
    return v;
  }

  std::string identifier()
  {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  SmoothExpr base()
  {
    skip_space();
    if (pos_ >= text_.size()) { fail("unexpected end of input"); }
    const char c = text_[pos_];
    if (c == '-') {
      ++pos_;
      skip_space();
      if (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
        return constant(-number());
      }
      return SmoothExpr::raw(Op::Neg, base());
    }
    if (c == '(') {
      ++pos_;
      SmoothExpr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') { return constant(number()); }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      const std::string id = identifier();
      if (auto f = function(id)) {
        expect('(');
        SmoothExpr arg = expr();
        int k = 0;
        if (*f == Op::Psi && accept(',')) { k = integer(); }
        expect(')');
        return SmoothExpr::raw(*f, arg, {}, k);
      }
      return variable(id, start);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  static std::optional<Op> function(const std::string & id)
  {
    for (Op op : {Op::Sin, Op::Cos, Op::Exp, Op::Log, Op::Sqrt, Op::Tanh, Op::Psi}) {
      if (id == function_name(op)) { return op; }
    }
    return std::nullopt;
  }

  SmoothExpr variable(const std::string & id, std::size_t start) const
  {
    for (std::size_t i = 0; i < aliases_.size(); ++i) {
      if (aliases_[i] == id) {
        if (static_cast<int>(i) >= n_vars_) { fail_at("variable '" + id + "' exceeds dimension", start); }
        return var(static_cast<int>(i));
      }
    }
    if (id.size() > 1 && id[0] == 'x' && id.find_first_not_of("0123456789", 1) == std::string::npos) {
      int k = 0;
      auto [p, ec] = std::from_chars(id.data() + 1, id.data() + id.size(), k);
      if (ec != std::errc() || k < 1) { fail_at("invalid variable '" + id + "'", start); }
      if (k > n_vars_) {
        fail_at("variable '" + id + "' exceeds dimension " + std::to_string(n_vars_), start);
      }
      return var(k - 1);
    }
    fail_at("unknown identifier '" + id + "'", start);
  }

  std::string_view text_;
  std::size_t pos_{0};
  int n_vars_;
  const VariableNames & aliases_;
};

}  // namespace detail

inline SmoothExpr parse(std::string_view text, int n_vars, const VariableNames & aliases)
{
  for (const auto & a : aliases) {
    if (detail::Parser::is_function_name(a)) { throw PreconditionError("alias '" + a + "' shadows a function"); }
  }
  return detail::Parser(text, n_vars, aliases).run();
}

}  // namespace subcart
