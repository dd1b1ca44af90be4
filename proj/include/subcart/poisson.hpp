#pragma once

/**
 * @file
 * @brief Poisson brackets given by a coordinate bivector, Hamiltonian fields,
 * symplectic leaves and singular reduction through invariant generators.
 */

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "subcart/orbit.hpp"

namespace subcart {

using ExprMatrix = std::vector<std::vector<SmoothExpr>>;

/// Bracket {f,g} = Σ Π^{ij} ∂_i f ∂_j g for an antisymmetric matrix Π of expressions.
class PoissonStructure
{
public:
  PoissonStructure() = default;

  PoissonStructure(ExprMatrix bivector, std::string label = {}) : pi_(std::move(bivector)), label_(std::move(label))
  {
    const std::size_t n = pi_.size();
    if (n == 0) { throw DimensionError("bivector must be non-empty"); }
    for (const auto & row : pi_) {
      if (row.size() != n) { throw DimensionError("bivector must be square"); }
      for (const auto & e : row) {
        if (e.max_variable() >= static_cast<int>(n)) {
          throw DimensionError("bivector entry '" + e.str() + "' uses a variable beyond dimension " +
                               std::to_string(n));
        }
      }
    }
  }

  static PoissonStructure parse(const std::vector<std::vector<std::string>> & rows, std::string label = {},
                                const VariableNames & aliases = {})
  {
    const int n = static_cast<int>(rows.size());
    ExprMatrix m;
    for (const auto & r : rows) {
      if (static_cast<int>(r.size()) != n) { throw DimensionError("bivector must be square"); }
      std::vector<SmoothExpr> row;
      for (const auto & s : r) { row.push_back(subcart::parse(s, n, aliases)); }
      m.push_back(std::move(row));
    }
    return PoissonStructure(std::move(m), std::move(label));
  }

  /// Canonical structure on R^{2k} with coordinates (q_1..q_k, p_1..p_k).
  static PoissonStructure canonical(int k)
  {
    const int n = 2 * k;
    ExprMatrix m(n, std::vector<SmoothExpr>(n, constant(0.0)));
    for (int i = 0; i < k; ++i) {
      m[i][k + i] = constant(1.0);
      m[k + i][i] = constant(-1.0);
    }
    return PoissonStructure(std::move(m), "canonical");
  }

  int dim() const noexcept { return static_cast<int>(pi_.size()); }
  const std::string & label() const noexcept { return label_; }
  const ExprMatrix & bivector() const noexcept { return pi_; }
  const SmoothExpr & operator()(int i, int j) const { return pi_.at(i).at(j); }

  Eigen::MatrixXd at(const Point & x) const
  {
    Eigen::MatrixXd m(dim(), dim());
    for (int i = 0; i < dim(); ++i) {
      for (int j = 0; j < dim(); ++j) { m(i, j) = pi_[i][j](x); }
    }
    return m;
  }

  /// max |Π^{ij} + Π^{ji}| over the points.
  double antisymmetry_residual(const std::vector<Point> & points) const
  {
    double r = 0.0;
    for (const auto & x : points) { r = std::max(r, (at(x) + at(x).transpose()).cwiseAbs().maxCoeff()); }
    return r;
  }

private:
  ExprMatrix pi_;
  std::string label_;
};

namespace detail {

inline void check_function(const PoissonStructure & P, const SmoothExpr & f)
{
  if (f.max_variable() >= P.dim()) {
    throw DimensionError("function '" + f.str() + "' uses a variable beyond dimension " + std::to_string(P.dim()));
  }
}

}  // namespace detail

inline SmoothExpr bracket(const PoissonStructure & P, const SmoothExpr & f, const SmoothExpr & g)
{
  detail::check_function(P, f);
  detail::check_function(P, g);
  const int n = P.dim();
  std::vector<SmoothExpr> df, dg;
  for (int i = 0; i < n; ++i) {
    df.push_back(diff(f, i));
    dg.push_back(diff(g, i));
  }
  SmoothExpr r = constant(0.0);
  for (int i = 0; i < n; ++i) {
    if (df[i].is_zero()) { continue; }
    for (int j = 0; j < n; ++j) {
      if (P(i, j).is_zero() || dg[j].is_zero()) { continue; }
      r = r + P(i, j) * df[i] * dg[j];
    }
  }
  return r;
}

/// X_f with X_f·h = {f,h}: (X_f)^j = Σ_i Π^{ij} ∂_i f.
inline TangentField hamiltonian_field(const PoissonStructure & P, const SmoothExpr & f, std::string label = {})
{
  detail::check_function(P, f);
  const int n = P.dim();
  std::vector<SmoothExpr> c(n, constant(0.0));
  for (int i = 0; i < n; ++i) {
    const SmoothExpr d = diff(f, i);
    if (d.is_zero()) { continue; }
    for (int j = 0; j < n; ++j) {
      if (!P(i, j).is_zero()) { c[j] = c[j] + P(i, j) * d; }
    }
  }
  return TangentField(std::move(c), label.empty() ? "X[" + f.str() + "]" : std::move(label));
}

/// max over points of |{f1,{f2,f3}} + {f2,{f3,f1}} + {f3,{f1,f2}}|.
inline double jacobi_residual(const PoissonStructure & P, const SmoothExpr & f1, const SmoothExpr & f2,
                              const SmoothExpr & f3, const std::vector<Point> & points)
{
  const SmoothExpr cyc =
      bracket(P, f1, bracket(P, f2, f3)) + bracket(P, f2, bracket(P, f3, f1)) + bracket(P, f3, bracket(P, f1, f2));
  double r = 0.0;
  for (const auto & x : points) { r = std::max(r, std::abs(cyc(x))); }
  return r;
}

struct InvarianceResult
{
  double residual{0.0};
  /// Difference between the variational and finite-difference evaluations.
  double error_bar{0.0};
  Point image;
};

/**
 * @brief |{f1∘φ_t, f2∘φ_t}(x) − {f1,f2}(φ_t x)| for the Hamiltonian flow φ of h.
 *
 * The flow must stay in S up to time t. Derivatives of f∘φ_t use the flow
 * Jacobian from the variational equation; a central finite-difference
 * Jacobian of the ambient flow gives the error bar.
 */
inline InvarianceResult invariance_residual(const PoissonStructure & P, const SmoothExpr & h, const SmoothExpr & f1,
                                            const SmoothExpr & f2, double t, const Point & x,
                                            const SubcartesianSpace & S, const FlowOptions & opt = {},
                                            double fd_step = 1e-5)
{
  if (S.ambient_dim() != P.dim()) { throw DimensionError("space and structure dimensions differ"); }
  const TangentField Xh = hamiltonian_field(P, h);
  InvarianceResult out;
  out.image = flow_map(S, Xh, t, x, opt);
  if (t == 0.0) { return out; }
  const int n = P.dim();
  const auto ambient = SubcartesianSpace::euclidean(n);
  const FlowJacobian fj = flow_jacobian(ambient, Xh, t, x, opt);

  Eigen::MatrixXd fd(n, n);
  for (int i = 0; i < n; ++i) {
    Point a = x, b = x;
    a(i) += fd_step;
    b(i) -= fd_step;
    fd.col(i) = (flow_map(ambient, Xh, t, a, opt) - flow_map(ambient, Xh, t, b, opt)) / (2.0 * fd_step);
  }

  auto grad = [&](const SmoothExpr & f, const Point & p) {
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) { g(i) = diff(f, i)(p); }
    return g;
  };
  const Eigen::VectorXd g1 = grad(f1, fj.image), g2 = grad(f2, fj.image);
  const Eigen::MatrixXd pi = P.at(x);
  const double rhs = bracket(P, f1, f2)(fj.image);
  const double lhs = (fj.jacobian.transpose() * g1).dot(pi * (fj.jacobian.transpose() * g2));
  const double lhs_fd = (fd.transpose() * g1).dot(pi * (fd.transpose() * g2));
  out.residual = std::abs(lhs - rhs);
  out.error_bar = std::abs(lhs - lhs_fd);
  return out;
}

/// Structure and invariants of a singular reduction.
struct ReductionSetup
{
  PoissonStructure ambient;
  std::vector<SmoothExpr> invariants;
  /// Relations among the invariants, in σ-coordinates (x1 = σ1, ...).
  std::vector<SmoothExpr> relations;
  /// Inequalities on σ-space.
  std::vector<Constraint> inequalities;
  int degree{2};
  int samples{200};
  std::uint64_t seed{0};
  double residual_cutoff{1e-10};
  /// Upstairs sample points are uniform in [-box, box]^n.
  double box{1.0};
};

class ReductionError : public Error
{
public:
  ReductionError(const std::string & msg, int a, int b) : Error(msg), a_(a), b_(b) {}
  std::pair<int, int> pair() const { return {a_, b_}; }

private:
  int a_, b_;
};

struct ReductionResult
{
  PoissonStructure reduced;
  SubcartesianSpace space;
  /// Max |Λ^{ab}(σ(x)) − {σ_a,σ_b}(x)| over fresh certification points.
  double certification_residual{0.0};
  int certification_points{0};
};

namespace detail {

inline std::vector<std::vector<int>> monomial_exponents(int k, int degree)
{
  std::vector<std::vector<int>> out;
  std::vector<int> e(k, 0);
  for (int d = 0; d <= degree; ++d) {
    auto rec = [&](auto && self, int pos, int left) -> void {
      if (pos == k - 1) {
        e[pos] = left;
        out.push_back(e);
        return;
      }
      for (int a = left; a >= 0; --a) {
        e[pos] = a;
        self(self, pos + 1, left - a);
      }
    };
    if (k > 0) { rec(rec, 0, d); }
  }
  return out;
}

inline double monomial_value(const std::vector<int> & e, const Eigen::VectorXd & s)
{
  double v = 1.0;
  for (std::size_t i = 0; i < e.size(); ++i) { v *= std::pow(s(static_cast<Eigen::Index>(i)), e[i]); }
  return v;
}

inline SmoothExpr monomial_expr(const std::vector<int> & e)
{
  SmoothExpr m = constant(1.0);
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] > 0) { m = m * pow(var(static_cast<int>(i)), e[i]); }
  }
  return m;
}

inline double snap(double c)
{
  if (std::abs(c) < 1e-9) { return 0.0; }
  const double r = std::round(c);
  return std::abs(c - r) < 1e-8 ? r : c;
}

}  // namespace detail

/**
 * @brief Reduced bivector on σ-space with Λ^{ab}(σ(x)) = {σ_a, σ_b}(x).
 *
 * Each pairwise bracket is matched by least squares against σ-monomials of
 * increasing degree up to setup.degree; the first degree whose residual is
 * below the cutoff is kept. Coefficients are snapped to nearby integers and
 * the result is replayed on fresh random points.
 */
inline ReductionResult reduce(const ReductionSetup & setup)
{
  const int n = setup.ambient.dim();
  const int k = static_cast<int>(setup.invariants.size());
  if (k == 0) { throw PreconditionError("reduce: no invariants"); }
  for (const auto & s : setup.invariants) { detail::check_function(setup.ambient, s); }

  std::mt19937_64 rng(setup.seed);
  std::uniform_real_distribution<double> unif(-setup.box, setup.box);
  auto draw = [&](int count) {
    std::vector<Point> pts;
    for (int m = 0; m < count; ++m) {
      Point x(n);
      for (int i = 0; i < n; ++i) { x(i) = unif(rng); }
      pts.push_back(std::move(x));
    }
    return pts;
  };
  auto sigma = [&](const Point & x) {
    Eigen::VectorXd s(k);
    for (int a = 0; a < k; ++a) { s(a) = setup.invariants[a](x); }
    return s;
  };

  const auto monos = detail::monomial_exponents(k, setup.degree);
  const int fit_points = std::max(setup.samples, 3 * static_cast<int>(monos.size()));
  const auto pts = draw(fit_points);
  Eigen::MatrixXd A(fit_points, static_cast<Eigen::Index>(monos.size()));
  for (int m = 0; m < fit_points; ++m) {
    const Eigen::VectorXd s = sigma(pts[m]);
    for (std::size_t c = 0; c < monos.size(); ++c) { A(m, static_cast<Eigen::Index>(c)) = detail::monomial_value(monos[c], s); }
  }

  ExprMatrix lambda(k, std::vector<SmoothExpr>(k, constant(0.0)));
  std::vector<std::vector<SmoothExpr>> upstairs(k, std::vector<SmoothExpr>(k, constant(0.0)));
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      const SmoothExpr br = bracket(setup.ambient, setup.invariants[a], setup.invariants[b]);
      upstairs[a][b] = br;
      Eigen::VectorXd y(fit_points);
      for (int m = 0; m < fit_points; ++m) { y(m) = br(pts[m]); }
      const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
      bool found = false;
      std::size_t used = 0;
      for (int d = 0; d <= setup.degree && !found; ++d) {
        while (used < monos.size() && std::accumulate(monos[used].begin(), monos[used].end(), 0) <= d) { ++used; }
        const Eigen::MatrixXd Ad = A.leftCols(static_cast<Eigen::Index>(used));
        Eigen::VectorXd c = Ad.completeOrthogonalDecomposition().solve(y);
        for (Eigen::Index i = 0; i < c.size(); ++i) { c(i) = detail::snap(c(i)); }
        if ((Ad * c - y).cwiseAbs().maxCoeff() > setup.residual_cutoff * scale) { continue; }
        SmoothExpr e = constant(0.0);
        for (Eigen::Index i = 0; i < c.size(); ++i) {
          if (c(i) != 0.0) { e = e + constant(c(i)) * detail::monomial_expr(monos[static_cast<std::size_t>(i)]); }
        }
        lambda[a][b] = e;
        lambda[b][a] = -e;
        found = true;
      }
      if (!found) {
        throw ReductionError("reduce: bracket {s" + std::to_string(a + 1) + ",s" + std::to_string(b + 1) + "} = " +
                                 br.str() + " is not a polynomial of degree <= " + std::to_string(setup.degree) +
                                 " in the invariants",
                             a, b);
      }
    }
  }

  ReductionResult out;
  out.reduced = PoissonStructure(lambda, "reduced");
  out.certification_points = setup.samples;
  for (const auto & x : draw(setup.samples)) {
    const Eigen::VectorXd s = sigma(x);
    for (int a = 0; a < k; ++a) {
      for (int b = a + 1; b < k; ++b) {
        const double want = upstairs[a][b](x);
        const double r = std::abs(lambda[a][b](s) - want) / std::max(1.0, std::abs(want));
        out.certification_residual = std::max(out.certification_residual, r);
      }
    }
  }
  if (out.certification_residual > setup.residual_cutoff) {
    throw ReductionError("reduce: certification residual " + detail::format_number(out.certification_residual) +
                             " exceeds cutoff",
                         -1, -1);
  }
  Cell cell;
  for (const auto & r : setup.relations) { cell.push_back({r, Relation::EqZero}); }
  for (const auto & c : setup.inequalities) { cell.push_back(c); }
  out.space = SubcartesianSpace(k, {cell});
  return out;
}

struct CasimirDrift
{
  SmoothExpr casimir;
  double max_drift{0.0};
};

struct LeafSample
{
  OrbitSample sample;
  std::vector<CasimirDrift> casimirs;
};

/// Orbit of the Hamiltonian fields of the generators, with Casimir drift along the cloud.
inline LeafSample leaf_sample(const SubcartesianSpace & S, const PoissonStructure & P,
                              const std::vector<SmoothExpr> & generators, const Point & x0, int budget,
                              double step_scale, std::uint64_t seed, const std::vector<SmoothExpr> & casimirs = {},
                              const OrbitOptions & opt = {})
{
  std::vector<TangentField> fields;
  for (const auto & g : generators) { fields.push_back(hamiltonian_field(P, g)); }
  const FieldFamily F(fields, S);
  LeafSample out;
  out.sample = sample_orbit(F, x0, budget, step_scale, seed, opt);
  for (const auto & c : casimirs) {
    detail::check_function(P, c);
    const double c0 = c(x0);
    CasimirDrift d{c, 0.0};
    for (const auto & p : out.sample.points) { d.max_drift = std::max(d.max_drift, std::abs(c(p.point) - c0)); }
    out.casimirs.push_back(std::move(d));
  }
  return out;
}

}  // namespace subcart
