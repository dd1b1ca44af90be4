#pragma once

/**
 * @file
 * @brief Derivations of C∞(S) represented by ambient vector fields, and their Lie calculus.
 */

#include <Eigen/Core>

#include <string>
#include <vector>

#include "subcart/expr.hpp"

namespace subcart {

/**
 * @brief Derivation given by an ambient representative f_1 ∂_1 + ... + f_n ∂_n.
 *
 * Tangency to a particular space is not checked here; the flow module detects
 * it dynamically. Two representatives that agree on S are still distinct fields.
 */
class TangentField
{
public:
  TangentField() = default;

  explicit TangentField(std::vector<SmoothExpr> components, std::string label = {})
      : components_(std::move(components)), label_(std::move(label))
  {}

  static TangentField zero(int n, std::string label = "0")
  {
    return TangentField(std::vector<SmoothExpr>(n, constant(0.0)), std::move(label));
  }

  /// The coordinate field ∂_i.
  static TangentField coordinate(int n, int i)
  {
    std::vector<SmoothExpr> c(n, constant(0.0));
    c.at(i) = constant(1.0);
    return TangentField(std::move(c), "d" + std::to_string(i + 1));
  }

  static TangentField parse(const std::vector<std::string> & components, int n, std::string label = {},
                            const VariableNames & aliases = {})
  {
    if (static_cast<int>(components.size()) != n) {
      throw DimensionError("field '" + label + "' has " + std::to_string(components.size()) +
                           " components in dimension " + std::to_string(n));
    }
    std::vector<SmoothExpr> c;
    c.reserve(components.size());
    for (const auto & s : components) { c.push_back(subcart::parse(s, n, aliases)); }
    return TangentField(std::move(c), std::move(label));
  }

  int dim() const noexcept { return static_cast<int>(components_.size()); }
  const std::string & label() const noexcept { return label_; }
  const std::vector<SmoothExpr> & components() const noexcept { return components_; }
  const SmoothExpr & operator[](int i) const { return components_.at(i); }

  TangentField relabeled(std::string label) const { return TangentField(components_, std::move(label)); }

  Point value_at(const Point & x) const
  {
    Point v(dim());
    for (int i = 0; i < dim(); ++i) { v(i) = components_[i](x); }
    return v;
  }

  /// Symbolic Jacobian entries ∂_j f_i, row-major.
  std::vector<std::vector<SmoothExpr>> jacobian() const
  {
    std::vector<std::vector<SmoothExpr>> jac(dim());
    for (int i = 0; i < dim(); ++i) {
      jac[i].reserve(dim());
      for (int j = 0; j < dim(); ++j) { jac[i].push_back(diff(components_[i], j)); }
    }
    return jac;
  }

  bool is_zero() const
  {
    for (const auto & c : components_) {
      if (!c.is_zero()) { return false; }
    }
    return true;
  }

  /// Largest variable index used by any component.
  int max_variable() const
  {
    int m = -1;
    for (const auto & c : components_) { m = std::max(m, c.max_variable()); }
    return m;
  }

private:
  std::vector<SmoothExpr> components_;
  std::string label_;
};

inline void require_same_dim(const TangentField & X, const TangentField & Y)
{
  if (X.dim() != Y.dim()) {
    throw DimensionError("fields '" + X.label() + "' and '" + Y.label() + "' live in dimensions " +
                         std::to_string(X.dim()) + " and " + std::to_string(Y.dim()));
  }
}

/// X·f = Σ f_i ∂_i f, computed symbolically.
inline SmoothExpr apply(const TangentField & X, const SmoothExpr & f)
{
  if (f.max_variable() >= X.dim()) { throw DimensionError("function uses variables beyond the field's dimension"); }
  SmoothExpr r = constant(0.0);
  for (int i = 0; i <= f.max_variable(); ++i) { r = r + X[i] * diff(f, i); }
  return r;
}

/// [X, Y]^i = X·Y^i − Y·X^i.
inline TangentField lie_bracket(const TangentField & X, const TangentField & Y)
{
  require_same_dim(X, Y);
  std::vector<SmoothExpr> c;
  c.reserve(X.dim());
  for (int i = 0; i < X.dim(); ++i) { c.push_back(apply(X, Y[i]) - apply(Y, X[i])); }
  return TangentField(std::move(c), "[" + X.label() + "," + Y.label() + "]");
}

inline TangentField operator+(const TangentField & X, const TangentField & Y)
{
  require_same_dim(X, Y);
  std::vector<SmoothExpr> c;
  for (int i = 0; i < X.dim(); ++i) { c.push_back(X[i] + Y[i]); }
  return TangentField(std::move(c), X.label() + "+" + Y.label());
}

inline TangentField operator-(const TangentField & X, const TangentField & Y)
{
  require_same_dim(X, Y);
  std::vector<SmoothExpr> c;
  for (int i = 0; i < X.dim(); ++i) { c.push_back(X[i] - Y[i]); }
  return TangentField(std::move(c), X.label() + "-" + Y.label());
}

/// Module action f·X.
inline TangentField operator*(const SmoothExpr & f, const TangentField & X)
{
  std::vector<SmoothExpr> c;
  for (int i = 0; i < X.dim(); ++i) { c.push_back(f * X[i]); }
  return TangentField(std::move(c), X.label());
}

}  // namespace subcart
