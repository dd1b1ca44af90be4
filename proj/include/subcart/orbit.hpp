#pragma once

/**
 * @file
 * @brief Orbits of finite families of vector fields: reachability by flow
 * words, pointwise span dimension, charts and completeness diagnostics.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "subcart/flow.hpp"

namespace subcart {

struct FieldFamily
{
  std::vector<TangentField> fields;
  SubcartesianSpace space;

  FieldFamily() = default;
  FieldFamily(std::vector<TangentField> f, SubcartesianSpace s) : fields(std::move(f)), space(std::move(s))
  {
    for (const auto & X : fields) {
      if (X.dim() != space.ambient_dim()) {
        throw DimensionError("field '" + X.label() + "' does not match the space's ambient dimension");
      }
    }
  }

  std::size_t size() const noexcept { return fields.size(); }
};

struct FlowStep
{
  int field{0};
  double t{0.0};
};

/// Composite flow φ_{t_m}^{X_m} ∘ ... ∘ φ_{t_1}^{X_1}; steps apply front to back.
struct FlowWord
{
  std::vector<FlowStep> steps;

  FlowWord then(int field, double t) const
  {
    FlowWord w = *this;
    w.steps.push_back({field, t});
    return w;
  }
};

/// A flow word left the space during segment `segment`.
class ReachError : public Error
{
public:
  ReachError(const std::string & msg, std::size_t segment, std::vector<Point> trajectory, double t_exit)
      : Error(msg), segment_(segment), trajectory_(std::move(trajectory)), t_exit_(t_exit)
  {}
  std::size_t segment() const noexcept { return segment_; }
  /// Points reached after each completed segment, starting with the seed.
  const std::vector<Point> & trajectory() const noexcept { return trajectory_; }
  double t_exit() const noexcept { return t_exit_; }

private:
  std::size_t segment_;
  std::vector<Point> trajectory_;
  double t_exit_;
};

struct OrbitOptions
{
  /// Candidates closer than this to an existing sample are merged into it.
  double merge_radius{1e-6};
  /// Random continuations drawn per frontier point and field.
  int branching{2};
  int max_rounds{10'000};
  /// Relative singular-value cutoff for span dimensions.
  double rank_tol{1e-8};
  /// Worker count for frontier expansion; results do not depend on it.
  int threads{1};
  FlowOptions flow{};
};

namespace detail {

template<class Fn>
void parallel_for(std::size_t n, int threads, Fn && fn)
{
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) { fn(i); }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) { fn(i); }
    });
  }
  for (auto & t : pool) { t.join(); }
}

}  // namespace detail

inline void check_field_index(const FieldFamily & F, int k)
{
  if (k < 0 || static_cast<std::size_t>(k) >= F.size()) {
    throw PreconditionError("field index " + std::to_string(k) + " outside family of size " +
                            std::to_string(F.size()));
  }
}

/// Replay `word` from x0.
inline Point reach(const FieldFamily & F, const Point & x0, const FlowWord & word, const FlowOptions & opt = {})
{
  detail::require_member(F.space, x0, "reach");
  std::vector<Point> traj{x0};
  Point x = x0;
  for (std::size_t k = 0; k < word.steps.size(); ++k) {
    const auto & s = word.steps[k];
    check_field_index(F, s.field);
    try {
      x = flow_map(F.space, F.fields[s.field], s.t, x, opt);
    } catch (const FlowExitError & e) {
      throw ReachError("segment " + std::to_string(k) + " exits the space at t = " +
                           detail::format_number(e.t_exit()) + " < " + detail::format_number(s.t),
                       k, traj, e.t_exit());
    }
    traj.push_back(x);
  }
  return x;
}

/// n × |F| matrix of field values at x.
inline Eigen::MatrixXd family_values(const FieldFamily & F, const Point & x)
{
  Eigen::MatrixXd m(F.space.ambient_dim(), static_cast<Eigen::Index>(F.size()));
  for (std::size_t k = 0; k < F.size(); ++k) { m.col(static_cast<Eigen::Index>(k)) = F.fields[k].value_at(x); }
  return m;
}

/// Numerical rank: singular values above tol_rank × the largest one.
inline int numerical_rank(const Eigen::MatrixXd & m, double tol_rank)
{
  if (m.size() == 0) { return 0; }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto & sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) { return 0; }
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol_rank * sv(0)) { ++r; }
  }
  return r;
}

/// dim span{X(x) : X ∈ F}.
inline int span_dimension(const FieldFamily & F, const Point & x, double tol_rank = 1e-8)
{
  F.space.check_dim(x);
  return numerical_rank(family_values(F, x), tol_rank);
}

/// Distance from v to the numerically significant column span of m.
inline double span_residual(const Eigen::MatrixXd & m, const Eigen::VectorXd & v, double tol_rank)
{
  const int r = numerical_rank(m, tol_rank);
  if (r == 0) { return v.norm(); }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  const Eigen::MatrixXd U = svd.matrixU().leftCols(r);
  return (v - U * (U.transpose() * v)).norm();
}

struct OrbitPoint
{
  Point point;
  FlowWord word;
};

struct OrbitDiagnostics
{
  int rounds{0};
  int candidates{0};
  int exits{0};
  int merged{0};
};

struct OrbitSample
{
  Point seed;
  std::vector<OrbitPoint> points;
  int est_dimension{0};
  OrbitDiagnostics diagnostics;
};

/**
 * @brief Breadth-first exploration of the orbit through x0 by random flow words.
 *
 * Each round extends every frontier point by `branching` random segments per
 * field, with durations uniform in [-step_scale, step_scale]. Candidates that
 * leave S are dropped; those within the merge radius of a known point are
 * merged. All random draws happen before the (optionally parallel) flows, and
 * candidates are merged in draw order, so the result depends only on rng_seed.
 */
inline OrbitSample sample_orbit(const FieldFamily & F, const Point & x0, int budget, double step_scale,
                                std::uint64_t rng_seed, const OrbitOptions & opt = {})
{
  if (budget <= 0) { throw PreconditionError("sample_orbit: budget must be positive"); }
  detail::require_member(F.space, x0, "sample_orbit");
  OrbitSample out;
  out.seed = x0;
  out.points.push_back({x0, {}});
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> dur(-step_scale, step_scale);
  std::vector<std::size_t> frontier{0};

  struct Candidate
  {
    std::size_t parent;
    int field;
    double t;
    std::optional<Point> image;
  };

  const double merge2 = opt.merge_radius * opt.merge_radius;
  while (!frontier.empty() && static_cast<int>(out.points.size()) < budget &&
         out.diagnostics.rounds < opt.max_rounds && !F.fields.empty()) {
    ++out.diagnostics.rounds;
    std::vector<Candidate> cand;
    for (std::size_t p : frontier) {
      for (int b = 0; b < opt.branching; ++b) {
        for (std::size_t k = 0; k < F.size(); ++k) { cand.push_back({p, static_cast<int>(k), dur(rng), {}}); }
      }
    }
    detail::parallel_for(cand.size(), opt.threads, [&](std::size_t i) {
      auto & c = cand[i];
      try {
        c.image = flow_map(F.space, F.fields[c.field], c.t, out.points[c.parent].point, opt.flow);
      } catch (const Error &) {
        c.image.reset();
      }
    });
    std::vector<std::size_t> next;
    for (auto & c : cand) {
      if (static_cast<int>(out.points.size()) >= budget) { break; }
      ++out.diagnostics.candidates;
      if (!c.image) {
        ++out.diagnostics.exits;
        continue;
      }
      bool dup = false;
      for (const auto & q : out.points) {
        if ((q.point - *c.image).squaredNorm() <= merge2) {
          dup = true;
          break;
        }
      }
      if (dup) {
        ++out.diagnostics.merged;
        continue;
      }
      out.points.push_back({std::move(*c.image), out.points[c.parent].word.then(c.field, c.t)});
      next.push_back(out.points.size() - 1);
    }
    frontier = std::move(next);
  }

  for (const auto & p : out.points) {
    out.est_dimension = std::max(out.est_dimension, span_dimension(F, p.point, opt.rank_tol));
  }
  return out;
}

/**
 * @brief Search for a flow word joining x to y. Returns the word of an orbit
 * sample within the merge radius of y, or nullopt ("unknown", never "different orbits").
 */
inline std::optional<FlowWord> orbit_connection(const FieldFamily & F, const Point & x, const Point & y, int budget,
                                                double step_scale, std::uint64_t rng_seed,
                                                const OrbitOptions & opt = {})
{
  const auto s = sample_orbit(F, x, budget, step_scale, rng_seed, opt);
  for (const auto & p : s.points) {
    if ((p.point - y).norm() <= opt.merge_radius) { return p.word; }
  }
  return std::nullopt;
}

/// Local parametrisation T ↦ ξ_T(x) of an orbit, certified at T = 0.
struct Chart
{
  std::vector<int> basis;
  Point basepoint;
  /// Parameter box [-box, box]^m on which the chart is meant to be used.
  double box{0.0};
  /// Central finite differences of T ↦ ξ_T(x) at T = 0.
  Eigen::MatrixXd jacobian_fd;
  /// Field values X^1(x), ..., X^m(x) stacked as columns.
  Eigen::MatrixXd jacobian_fields;
  double agreement{0.0};
  int rank{0};
};

/**
 * @brief Differential of the orbit chart ρ(T) = ξ_T(x) at T = 0, computed both
 * by finite differences of the composite flow and by stacking field values.
 */
inline Chart chart_jacobian(const FieldFamily & F, const std::vector<int> & basis, const Point & x,
                            double fd_step = 1e-6, const OrbitOptions & opt = {})
{
  detail::require_member(F.space, x, "chart_jacobian");
  const auto n = F.space.ambient_dim();
  const auto m = static_cast<Eigen::Index>(basis.size());
  Chart c;
  c.basis = basis;
  c.basepoint = x;
  c.box = fd_step;
  c.jacobian_fields.resize(n, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    check_field_index(F, basis[a]);
    c.jacobian_fields.col(a) = F.fields[basis[a]].value_at(x);
  }
  if (numerical_rank(c.jacobian_fields, opt.rank_tol) != m) {
    throw PreconditionError("chart_jacobian: basis fields are linearly dependent at " + detail::format_point(x));
  }
  c.jacobian_fd.resize(n, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    FlowWord fwd, bwd;
    for (Eigen::Index b = 0; b < m; ++b) {
      fwd.steps.push_back({basis[b], a == b ? fd_step : 0.0});
      bwd.steps.push_back({basis[b], a == b ? -fd_step : 0.0});
    }
    try {
      c.jacobian_fd.col(a) = (reach(F, x, fwd, opt.flow) - reach(F, x, bwd, opt.flow)) / (2.0 * fd_step);
    } catch (const ReachError & e) {
      throw PreconditionError(std::string("chart_jacobian: finite-difference probe left the space: ") + e.what());
    }
  }
  c.agreement = (c.jacobian_fd - c.jacobian_fields).cwiseAbs().maxCoeff();
  c.rank = numerical_rank(c.jacobian_fd, opt.rank_tol);
  return c;
}

struct DimensionReport
{
  std::set<int> dimensions;
  /// Span dimension at each sampled orbit point, in sample order.
  std::vector<int> per_point;
  OrbitSample sample;

  bool constant() const { return dimensions.size() == 1; }
};

/// Span dimensions along a sampled orbit; constant for locally complete families.
inline DimensionReport dimension_constancy_report(const FieldFamily & F, const Point & x0, int n_probes,
                                                  std::uint64_t rng_seed, double step_scale = 0.5,
                                                  const OrbitOptions & opt = {})
{
  DimensionReport r;
  r.sample = sample_orbit(F, x0, n_probes, step_scale, rng_seed, opt);
  for (const auto & p : r.sample.points) {
    const int d = span_dimension(F, p.point, opt.rank_tol);
    r.per_point.push_back(d);
    r.dimensions.insert(d);
  }
  return r;
}

struct CompletenessProbe
{
  /// Index of the flowing field X and of the transported field Y.
  int flow_field{0};
  int pushed_field{0};
  Point base;
  double t{0.0};
};

struct CompletenessResult
{
  CompletenessProbe probe;
  Point image;
  Eigen::VectorXd vector;
  double residual{0.0};
};

struct CompletenessSpec
{
  std::vector<CompletenessProbe> probes;
  /// Random probes drawn on top of the explicit ones.
  int random_probes{0};
  std::vector<Point> base_points;
  double t_scale{1.0};
  std::uint64_t rng_seed{0};
  double tol{1e-6};
};

struct CompletenessReport
{
  bool pass{true};
  int probes_run{0};
  int skipped{0};
  double max_residual{0.0};
  std::optional<CompletenessResult> witness;
  std::vector<CompletenessResult> results;
};

/**
 * @brief Test the pointwise necessary condition (φ_t^X)_* Y (φ_t x) ∈ span F(φ_t x)
 * for local completeness. Probes whose flow leaves S are skipped and counted.
 */
inline CompletenessReport local_completeness_probe(const FieldFamily & F, const CompletenessSpec & spec,
                                                   const OrbitOptions & opt = {})
{
  std::vector<CompletenessProbe> probes = spec.probes;
  if (spec.random_probes > 0) {
    if (spec.base_points.empty()) { throw PreconditionError("random completeness probes need base points"); }
    if (F.size() == 0) { throw PreconditionError("empty family"); }
    std::mt19937_64 rng(spec.rng_seed);
    std::uniform_int_distribution<std::size_t> pick_pt(0, spec.base_points.size() - 1);
    std::uniform_int_distribution<int> pick_f(0, static_cast<int>(F.size()) - 1);
    std::uniform_real_distribution<double> dur(-spec.t_scale, spec.t_scale);
    for (int i = 0; i < spec.random_probes; ++i) {
      CompletenessProbe p;
      p.flow_field = pick_f(rng);
      p.pushed_field = pick_f(rng);
      p.base = spec.base_points[pick_pt(rng)];
      p.t = dur(rng);
      probes.push_back(std::move(p));
    }
  }

  CompletenessReport rep;
  for (const auto & p : probes) {
    check_field_index(F, p.flow_field);
    check_field_index(F, p.pushed_field);
    Pushforward pf;
    try {
      pf = pushforward_at(F.space, F.fields[p.flow_field], p.t, F.fields[p.pushed_field], p.base, opt.flow);
    } catch (const Error &) {
      ++rep.skipped;
      continue;
    }
    ++rep.probes_run;
    CompletenessResult r{p, pf.image, pf.vector, span_residual(family_values(F, pf.image), pf.vector, opt.rank_tol)};
    if (r.residual > rep.max_residual) { rep.max_residual = r.residual; }
    if (r.residual > spec.tol && (!rep.witness || r.residual > rep.witness->residual)) {
      rep.pass = false;
      rep.witness = r;
    }
    rep.results.push_back(std::move(r));
  }
  return rep;
}

}  // namespace subcart
