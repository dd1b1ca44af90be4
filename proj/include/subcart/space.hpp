#pragma once

/**
 * @file
 * @brief Differential subspaces of R^n given by finite unions of constraint cells.
 */

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "subcart/expr.hpp"

namespace subcart {

enum class Relation { EqZero, GeqZero, GtZero, LtZero, LeqZero };

inline const char * relation_name(Relation r)
{
  switch (r) {
  case Relation::EqZero: return "eq0";
  case Relation::GeqZero: return "geq0";
  case Relation::GtZero: return "gt0";
  case Relation::LtZero: return "lt0";
  case Relation::LeqZero: return "leq0";
  }
  return "?";
}

inline std::optional<Relation> relation_from_name(const std::string & s)
{
  for (Relation r : {Relation::EqZero, Relation::GeqZero, Relation::GtZero, Relation::LtZero, Relation::LeqZero}) {
    if (s == relation_name(r)) { return r; }
  }
  return std::nullopt;
}

/// Strict relations exclude their boundary g = 0.
inline bool is_strict(Relation r) { return r == Relation::GtZero || r == Relation::LtZero; }

struct Constraint
{
  SmoothExpr g;
  Relation rel;

  /// Signed margin: >= 0 exactly when the relation holds with zero tolerance
  /// (strict relations treat the boundary as margin 0).
  double margin(double gv) const
  {
    switch (rel) {
    case Relation::EqZero: return -std::abs(gv);
    case Relation::GeqZero:
    case Relation::GtZero: return gv;
    case Relation::LtZero:
    case Relation::LeqZero: return -gv;
    }
    return 0.0;
  }

  /// Tolerant satisfaction; strict relations use a guard band of width `tol`.
  bool holds(double gv, double tol) const
  {
    switch (rel) {
    case Relation::EqZero: return std::abs(gv) <= tol;
    case Relation::GeqZero: return gv >= -tol;
    case Relation::GtZero: return gv > tol;
    case Relation::LtZero: return gv < -tol;
    case Relation::LeqZero: return gv <= tol;
    }
    return false;
  }

  std::string str(const VariableNames & names = {}) const { return g.str(names) + " " + relation_name(rel); }
};

/// Conjunction of constraints.
using Cell = std::vector<Constraint>;

/// Outcome of a membership query with the evidence behind it.
struct Membership
{
  bool member{false};
  /// Indices of the cells that contain the point.
  std::vector<int> cells;
  /// Per cell, the first failing constraint index (or -1 when the cell holds).
  std::vector<int> failing;
  /// Guard violations encountered while evaluating constraints.
  std::vector<std::string> diagnostics;
};

/**
 * @brief Subset of R^n described as a finite union of constraint cells.
 *
 * Membership means some cell has every constraint satisfied at the membership
 * tolerance. Neighbourhoods are Euclidean balls of R^n intersected with the set.
 */
class SubcartesianSpace
{
public:
  SubcartesianSpace() = default;

  SubcartesianSpace(int ambient_dim, std::vector<Cell> cells, double tol = 1e-9, bool locally_closed = false)
      : dim_(ambient_dim), cells_(std::move(cells)), tol_(tol), locally_closed_(locally_closed)
  {
    if (dim_ <= 0) { throw DimensionError("ambient dimension must be positive"); }
    if (!(tol_ >= 0.0)) { throw PreconditionError("membership tolerance must be non-negative"); }
    for (const auto & cell : cells_) {
      for (const auto & c : cell) {
        if (c.g.max_variable() >= dim_) {
          throw DimensionError("constraint '" + c.g.str() + "' uses a variable beyond dimension " +
                               std::to_string(dim_));
        }
      }
    }
  }

  /// All of R^n.
  static SubcartesianSpace euclidean(int n, double tol = 1e-9) { return SubcartesianSpace(n, {Cell{}}, tol, true); }

  int ambient_dim() const noexcept { return dim_; }
  const std::vector<Cell> & cells() const noexcept { return cells_; }
  double tol() const noexcept { return tol_; }
  bool locally_closed() const noexcept { return locally_closed_; }

  SubcartesianSpace with_tol(double tol) const
  {
    SubcartesianSpace s = *this;
    s.tol_ = tol;
    return s;
  }

  Membership membership(const Point & x, std::optional<double> tol_override = std::nullopt) const
  {
    check_dim(x);
    const double tol = tol_override.value_or(tol_);
    Membership m;
    m.failing.assign(cells_.size(), -1);
    for (std::size_t ci = 0; ci < cells_.size(); ++ci) {
      const Cell & cell = cells_[ci];
      for (std::size_t k = 0; k < cell.size(); ++k) {
        bool ok = false;
        try {
          ok = cell[k].holds(cell[k].g(x), tol);
        } catch (const DomainError & e) {
          m.diagnostics.push_back("cell " + std::to_string(ci) + " constraint " + std::to_string(k) + ": " + e.what());
        }
        if (!ok) {
          m.failing[ci] = static_cast<int>(k);
          break;
        }
      }
      if (m.failing[ci] < 0) { m.cells.push_back(static_cast<int>(ci)); }
    }
    m.member = !m.cells.empty();
    return m;
  }

  bool contains(const Point & x, std::optional<double> tol_override = std::nullopt) const
  {
    return membership(x, tol_override).member;
  }

  /**
   * @brief Smallest signed margin of the inequality constraints, maximised over member cells.
   *
   * Equality constraints are always active and do not contribute. A cell without
   * inequalities has infinite slack. Throws PreconditionError for non-members.
   */
  double slack(const Point & x) const
  {
    const Membership m = membership(x);
    if (!m.member) { throw PreconditionError("slack requested at a point outside the space"); }
    double best = -std::numeric_limits<double>::infinity();
    for (int ci : m.cells) {
      double s = std::numeric_limits<double>::infinity();
      for (const auto & c : cells_[ci]) {
        if (c.rel == Relation::EqZero) { continue; }
        s = std::min(s, c.margin(c.g(x)));
      }
      best = std::max(best, s);
    }
    return best;
  }

  /// Describe the constraint that fails first in cell `ci` at `x`.
  std::string describe_failure(const Point & x, int ci, const VariableNames & names = {}) const
  {
    const Membership m = membership(x);
    if (ci < 0 || ci >= static_cast<int>(cells_.size()) || m.failing[ci] < 0) { return {}; }
    return "cell " + std::to_string(ci) + ": " + cells_[ci][m.failing[ci]].str(names);
  }

  void check_dim(const Point & x) const
  {
    if (x.size() != dim_) {
      throw DimensionError("point of dimension " + std::to_string(x.size()) + " in a space of dimension " +
                           std::to_string(dim_));
    }
  }

private:
  int dim_{0};
  std::vector<Cell> cells_;
  double tol_{1e-9};
  bool locally_closed_{false};
};

/**
 * @brief Move `x` onto the equality constraints of `cell` by Gauss-Newton
 * minimum-norm corrections. Returns nullopt when the iteration hits a guard
 * violation or does not converge to `tol`.
 */
inline std::optional<Point> project_onto_cell(const Cell & cell, const Point & x, double tol, int max_iter = 30)
{
  std::vector<const Constraint *> eqs;
  for (const auto & c : cell) {
    if (c.rel == Relation::EqZero) { eqs.push_back(&c); }
  }
  if (eqs.empty()) { return x; }
  const auto n = x.size();
  const auto m = static_cast<Eigen::Index>(eqs.size());
  std::vector<std::vector<SmoothExpr>> grads(eqs.size());
  for (std::size_t k = 0; k < eqs.size(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i) { grads[k].push_back(diff(eqs[k]->g, static_cast<int>(i))); }
  }
  Point y = x;
  try {
    for (int it = 0; it < max_iter; ++it) {
      Eigen::VectorXd r(m);
      Eigen::MatrixXd jac(m, n);
      for (Eigen::Index k = 0; k < m; ++k) {
        r(k) = eqs[k]->g(y);
        for (Eigen::Index i = 0; i < n; ++i) { jac(k, i) = grads[k][i](y); }
      }
      if (r.cwiseAbs().maxCoeff() <= tol) { return y; }
      const Eigen::VectorXd step = jac.completeOrthogonalDecomposition().solve(r);
      if (!step.allFinite()) { return std::nullopt; }
      y -= step;
    }
  } catch (const DomainError &) {
    return std::nullopt;
  }
  return std::nullopt;
}

/// Uniform point in the Euclidean ball of radius r around c.
template<class Rng>
Point random_in_ball(const Point & c, double r, Rng & rng)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Point d(c.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) { d(i) = normal(rng); }
  const double nd = d.norm();
  if (nd == 0.0) { return c; }
  const double rad = r * std::pow(unif(rng), 1.0 / static_cast<double>(c.size()));
  return c + d * (rad / nd);
}

/**
 * @brief Sample up to `count` members of ball(center, r) ∩ S.
 *
 * Candidates are drawn uniformly in the ball and pulled onto each cell's
 * equality constraints, so lower-dimensional cells are hit with positive
 * probability. Cells are visited round-robin.
 */
template<class Rng>
std::vector<Point> sample_ball(const SubcartesianSpace & S, const Point & center, double r, int count, Rng & rng,
                               int max_attempts_factor = 40)
{
  std::vector<Point> out;
  const auto & cells = S.cells();
  if (cells.empty() || count <= 0) { return out; }
  const int attempts = count * max_attempts_factor;
  for (int a = 0; a < attempts && static_cast<int>(out.size()) < count; ++a) {
    const Cell & cell = cells[a % cells.size()];
    const Point cand = random_in_ball(center, r, rng);
    const auto proj = project_onto_cell(cell, cand, 0.1 * S.tol());
    if (!proj) { continue; }
    if ((*proj - center).norm() > r) { continue; }
    if (!S.contains(*proj)) { continue; }
    out.push_back(*proj);
  }
  return out;
}

}  // namespace subcart
