#pragma once

/**
 * @file
 * @brief Almost complex structures J on derivation modules: torsion, eigenspace
 * closure, Cauchy-Riemann residuals and Kähler compatibility at sample points.
 */

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "subcart/poisson.hpp"

namespace subcart {

/// Matrix field J(x) acting on ambient components, (JX)^i = Σ_j J^{ij} X^j.
class AlmostComplexStructure
{
public:
  AlmostComplexStructure() = default;

  explicit AlmostComplexStructure(ExprMatrix matrix, std::string label = {})
      : j_(std::move(matrix)), label_(std::move(label))
  {
    const std::size_t n = j_.size();
    if (n == 0) { throw DimensionError("almost complex structure must be non-empty"); }
    for (const auto & row : j_) {
      if (row.size() != n) { throw DimensionError("almost complex structure must be square"); }
    }
  }

  static AlmostComplexStructure parse(const std::vector<std::vector<std::string>> & rows, std::string label = {},
                                      const VariableNames & aliases = {})
  {
    const int n = static_cast<int>(rows.size());
    ExprMatrix m;
    for (const auto & r : rows) {
      if (static_cast<int>(r.size()) != n) { throw DimensionError("almost complex structure must be square"); }
      std::vector<SmoothExpr> row;
      for (const auto & s : r) { row.push_back(subcart::parse(s, n, aliases)); }
      m.push_back(std::move(row));
    }
    return AlmostComplexStructure(std::move(m), std::move(label));
  }

  /// The constant structure with J∂_{2i-1} = ∂_{2i}.
  static AlmostComplexStructure standard(int k)
  {
    const int n = 2 * k;
    ExprMatrix m(n, std::vector<SmoothExpr>(n, constant(0.0)));
    for (int i = 0; i < k; ++i) {
      m[2 * i + 1][2 * i] = constant(1.0);
      m[2 * i][2 * i + 1] = constant(-1.0);
    }
    return AlmostComplexStructure(std::move(m), "J0");
  }

  int dim() const noexcept { return static_cast<int>(j_.size()); }
  const std::string & label() const noexcept { return label_; }
  const ExprMatrix & matrix() const noexcept { return j_; }

  Eigen::MatrixXd at(const Point & x) const
  {
    Eigen::MatrixXd m(dim(), dim());
    for (int i = 0; i < dim(); ++i) {
      for (int k = 0; k < dim(); ++k) { m(i, k) = j_[i][k](x); }
    }
    return m;
  }

  TangentField apply(const TangentField & X) const
  {
    if (X.dim() != dim()) { throw DimensionError("field and structure dimensions differ"); }
    std::vector<SmoothExpr> c;
    for (int i = 0; i < dim(); ++i) {
      SmoothExpr s = constant(0.0);
      for (int k = 0; k < dim(); ++k) {
        if (!j_[i][k].is_zero() && !X[k].is_zero()) { s = s + j_[i][k] * X[k]; }
      }
      c.push_back(s);
    }
    return TangentField(std::move(c), "J" + X.label());
  }

  /// max ‖J(x)² + I‖ over the points.
  double square_residual(const std::vector<Point> & points) const
  {
    double r = 0.0;
    for (const auto & x : points) {
      const Eigen::MatrixXd m = at(x);
      r = std::max(r, (m * m + Eigen::MatrixXd::Identity(dim(), dim())).cwiseAbs().maxCoeff());
    }
    return r;
  }

private:
  ExprMatrix j_;
  std::string label_;
};

/// N(X,Y) = 2([JX,JY] − J[JX,Y] − J[X,JY] − [X,Y]).
inline TangentField torsion(const AlmostComplexStructure & J, const TangentField & X, const TangentField & Y)
{
  require_same_dim(X, Y);
  const TangentField JX = J.apply(X), JY = J.apply(Y);
  const TangentField inner = lie_bracket(JX, JY) - J.apply(lie_bracket(JX, Y)) - J.apply(lie_bracket(X, JY)) -
                             lie_bracket(X, Y);
  return (constant(2.0) * inner).relabeled("N(" + X.label() + "," + Y.label() + ")");
}

/// max over points of ‖N(fX,hY) − f h N(X,Y)‖.
inline double tensoriality_residual(const AlmostComplexStructure & J, const TangentField & X, const TangentField & Y,
                                    const SmoothExpr & f, const SmoothExpr & h, const std::vector<Point> & points)
{
  const TangentField lhs = torsion(J, f * X, h * Y);
  const TangentField rhs = (f * h) * torsion(J, X, Y);
  double r = 0.0;
  for (const auto & x : points) { r = std::max(r, (lhs.value_at(x) - rhs.value_at(x)).norm()); }
  return r;
}

/**
 * @brief Size of the part of [X − iJX, Y − iJY] outside the +i eigenspace of J.
 *
 * The complex bracket V is handled as the real pair A = [X,Y] − [JX,JY] and
 * Im V = −B with B = [JX,Y] + [X,JY]. The projection (V + iJV)/2 onto the −i
 * eigenspace is determined by its real part (A + JB)/2, whose norm is returned.
 */
inline double eigenspace_closure_residual(const AlmostComplexStructure & J, const TangentField & X,
                                          const TangentField & Y, const std::vector<Point> & points)
{
  require_same_dim(X, Y);
  const TangentField JX = J.apply(X), JY = J.apply(Y);
  const TangentField A = lie_bracket(X, Y) - lie_bracket(JX, JY);
  const TangentField B = lie_bracket(JX, Y) + lie_bracket(X, JY);
  double r = 0.0;
  for (const auto & x : points) {
    r = std::max(r, 0.5 * (A.value_at(x) + J.at(x) * B.value_at(x)).norm());
  }
  return r;
}

/// max over points and fields of |X·f − (JX)·h| and |(JX)·f + X·h|.
inline double cauchy_riemann_residual(const AlmostComplexStructure & J, const FieldFamily & F, const SmoothExpr & f,
                                      const SmoothExpr & h, const std::vector<Point> & points)
{
  double r = 0.0;
  for (const auto & X : F.fields) {
    const TangentField JX = J.apply(X);
    const SmoothExpr e1 = apply(X, f) - apply(JX, h);
    const SmoothExpr e2 = apply(JX, f) + apply(X, h);
    for (const auto & x : points) { r = std::max({r, std::abs(e1(x)), std::abs(e2(x))}); }
  }
  return r;
}

/// Pointwise inverse of a nondegenerate bivector, the 2-form Ω with Ω = Π^{-1}.
inline ExprMatrix form_from_constant_bivector(const PoissonStructure & P)
{
  const Eigen::MatrixXd pi = P.at(Point::Zero(P.dim()));
  for (int i = 0; i < P.dim(); ++i) {
    for (int j = 0; j < P.dim(); ++j) {
      if (P(i, j).max_variable() >= 0) { throw PreconditionError("form_from_constant_bivector: bivector is not constant"); }
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(pi);
  if (!lu.isInvertible()) { throw PreconditionError("form_from_constant_bivector: bivector is degenerate"); }
  const Eigen::MatrixXd w = lu.inverse();
  ExprMatrix m(P.dim(), std::vector<SmoothExpr>(P.dim(), constant(0.0)));
  for (int i = 0; i < P.dim(); ++i) {
    for (int j = 0; j < P.dim(); ++j) { m[i][j] = constant(w(i, j)); }
  }
  return m;
}

struct KahlerReport
{
  /// max |Ω(JX,JY) − Ω(X,Y)|.
  double compatibility{0.0};
  /// max |g(X,Y) − g(Y,X)| with g(X,Y) = Ω(JX,Y).
  double symmetry{0.0};
  /// Smallest eigenvalue of the symmetrised g on the span of the family, over points.
  double min_eigenvalue{0.0};
  bool positive{false};
  double torsion{0.0};
  bool torsion_free{false};
  bool kahler{false};
  std::string verdict;
};

/**
 * @brief Kähler compatibility of (J, Ω) on the span of a family at sample points.
 *
 * Ω is a matrix field of 2-form coefficients, Ω(X,Y) = Xᵀ W Y. Positivity is
 * judged on an orthonormal basis of span F(x).
 */
inline KahlerReport kahler_check(const AlmostComplexStructure & J, const ExprMatrix & omega, const FieldFamily & F,
                                 const std::vector<Point> & points, double tol = 1e-10)
{
  const int n = J.dim();
  if (static_cast<int>(omega.size()) != n) { throw DimensionError("form and structure dimensions differ"); }
  KahlerReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < F.size(); ++a) {
    for (std::size_t b = 0; b < F.size(); ++b) {
      const TangentField N = torsion(J, F.fields[a], F.fields[b]);
      for (const auto & x : points) { rep.torsion = std::max(rep.torsion, N.value_at(x).norm()); }
    }
  }
  for (const auto & x : points) {
    Eigen::MatrixXd W(n, n);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(omega[i].size()) != n) { throw DimensionError("form must be square"); }
      for (int k = 0; k < n; ++k) { W(i, k) = omega[i][k](x); }
    }
    const Eigen::MatrixXd Jx = J.at(x);
    const Eigen::MatrixXd V = family_values(F, x);
    for (Eigen::Index a = 0; a < V.cols(); ++a) {
      for (Eigen::Index b = 0; b < V.cols(); ++b) {
        const Eigen::VectorXd X = V.col(a), Y = V.col(b);
        rep.compatibility =
            std::max(rep.compatibility, std::abs((Jx * X).dot(W * (Jx * Y)) - X.dot(W * Y)));
        rep.symmetry = std::max(rep.symmetry, std::abs((Jx * X).dot(W * Y) - (Jx * Y).dot(W * X)));
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeThinU);
    const int r = numerical_rank(V, 1e-8);
    if (r == 0) { continue; }
    const Eigen::MatrixXd Q = svd.matrixU().leftCols(r);
    const Eigen::MatrixXd WQ = Q.transpose() * W * Q;
    if (Eigen::JacobiSVD<Eigen::MatrixXd>(WQ).singularValues().minCoeff() < 1e-12) {
      throw PreconditionError("kahler_check: form is degenerate on the span at " + detail::format_point(x));
    }
    const Eigen::MatrixXd G = Q.transpose() * Jx.transpose() * W * Q;
    const Eigen::MatrixXd Gs = 0.5 * (G + G.transpose());
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Gs).eigenvalues().minCoeff());
  }
  rep.positive = rep.min_eigenvalue > tol;
  rep.torsion_free = rep.torsion <= tol;
  rep.kahler = rep.compatibility <= tol && rep.positive && rep.torsion_free;
  if (rep.kahler) {
    rep.verdict = "Kahler at samples";
  } else if (rep.compatibility <= tol && rep.positive) {
    rep.verdict = "almost Kahler at samples";
  } else {
    rep.verdict = "not Kahler at samples";
  }
  return rep;
}

}  // namespace subcart
