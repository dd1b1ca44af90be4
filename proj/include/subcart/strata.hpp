#pragma once

/**
 * @file
 * @brief Declared stratifications: partition and frontier checks, strongly
 * stratified fields and the comparison of orbits with strata.
 *
 * Everything here is sampling based. Closures are estimated by local sampling
 * within a frontier tolerance, so reports are evidence on the sampled region,
 * not proofs. Local triviality is accepted as a declared flag.
 */

#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "subcart/orbit.hpp"

namespace subcart {

struct Stratum
{
  std::string name;
  /// The stratum as a subset of the ambient space.
  SubcartesianSpace set;
  int dim{0};
  /// Optional tangent frame used to check the declared dimension.
  std::vector<TangentField> frame;
};

struct StratifiedSpace
{
  SubcartesianSpace total;
  std::vector<Stratum> strata;
  bool locally_trivial{false};

  /// Index of the first stratum containing x.
  std::optional<int> stratum_of(const Point & x) const
  {
    for (std::size_t i = 0; i < strata.size(); ++i) {
      if (strata[i].set.contains(x)) { return static_cast<int>(i); }
    }
    return std::nullopt;
  }

  int index_of(const std::string & name) const
  {
    for (std::size_t i = 0; i < strata.size(); ++i) {
      if (strata[i].name == name) { return static_cast<int>(i); }
    }
    throw PreconditionError("unknown stratum '" + name + "'");
  }
};

/// Where and how densely strata are sampled.
struct StratumSampler
{
  Point center;
  double radius{1.0};
  int per_stratum{64};
  std::uint64_t seed{0};
};

namespace detail {

/// Per-stratum RNG seeded from the stratum name, so samples do not depend on declaration order.
inline std::mt19937_64 stratum_rng(const std::string & name, std::uint64_t seed)
{
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return std::mt19937_64(h ^ (seed * 0x9E3779B97F4A7C15ULL));
}

inline std::vector<Point> sample_stratum(const Stratum & s, const StratumSampler & sampler)
{
  auto rng = stratum_rng(s.name, sampler.seed);
  return sample_ball(s.set, sampler.center, sampler.radius, sampler.per_stratum, rng);
}

/// Points where one inequality of a cell is active and the rest hold non-strictly.
inline std::vector<Point> sample_boundary(const Stratum & s, const StratumSampler & sampler)
{
  auto rng = stratum_rng(s.name + "#boundary", sampler.seed);
  std::vector<Point> out;
  const auto & cells = s.set.cells();
  for (const auto & cell : cells) {
    for (std::size_t k = 0; k < cell.size(); ++k) {
      if (cell[k].rel == Relation::EqZero) { continue; }
      Cell relaxed;
      for (std::size_t j = 0; j < cell.size(); ++j) {
        Relation r = cell[j].rel;
        if (j == k) {
          r = Relation::EqZero;
        } else if (r == Relation::GtZero) {
          r = Relation::GeqZero;
        } else if (r == Relation::LtZero) {
          r = Relation::LeqZero;
        }
        relaxed.push_back({cell[j].g, r});
      }
      const SubcartesianSpace face(s.set.ambient_dim(), {relaxed}, s.set.tol());
      for (auto & p : sample_ball(face, sampler.center, sampler.radius, sampler.per_stratum, rng)) {
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

/// Amount by which x violates the stratum's constraints (0 inside), minimised over cells.
inline double stratum_violation(const SubcartesianSpace & s, const Point & x)
{
  double best = std::numeric_limits<double>::infinity();
  for (const auto & cell : s.cells()) {
    double worst = 0.0;
    try {
      for (const auto & c : cell) { worst = std::max(worst, std::max(0.0, -c.margin(c.g(x)))); }
    } catch (const DomainError &) {
      worst = std::numeric_limits<double>::infinity();
    }
    best = std::min(best, worst);
  }
  return best;
}

}  // namespace detail

struct StrataViolation
{
  /// "frontier", "coverage", "overlap", "outside_total" or "dimension".
  std::string kind;
  std::string stratum;
  std::string other;
  Point witness;
};

struct FrontierContact
{
  std::string stratum;  ///< M
  std::string closure_of;  ///< N, with M ∩ closure(N) ≠ ∅
  int contact_samples{0};
  int samples{0};
};

struct FrontierReport
{
  bool pass{true};
  std::vector<FrontierContact> contacts;
  std::vector<StrataViolation> violations;
  std::map<std::string, int> samples;
  bool locally_trivial_declared{false};
};

/**
 * @brief Check the partition and the frontier condition on samples.
 *
 * For each ordered pair (M, N) a sample m of M touches closure(N) when some
 * point of N lies within `frontier_tol` of m (found among the N samples or by
 * sampling N in the small ball around m). If any m touches, every M sample
 * must. Boundary faces of every stratum that lie in the total space must be
 * in some stratum, or within the same tolerance of another stratum.
 */
inline FrontierReport frontier_check(const StratifiedSpace & SS, const StratumSampler & sampler,
                                     double frontier_tol = 1e-4)
{
  FrontierReport rep;
  rep.locally_trivial_declared = SS.locally_trivial;
  const std::size_t k = SS.strata.size();
  std::vector<std::vector<Point>> samples(k);
  for (std::size_t i = 0; i < k; ++i) {
    samples[i] = detail::sample_stratum(SS.strata[i], sampler);
    if (samples[i].empty()) { throw PreconditionError("empty sample for stratum '" + SS.strata[i].name + "'"); }
    rep.samples[SS.strata[i].name] = static_cast<int>(samples[i].size());
  }

  auto add = [&](std::string kind, const std::string & a, const std::string & b, const Point & w) {
    rep.pass = false;
    rep.violations.push_back({std::move(kind), a, b, w});
  };

  for (std::size_t i = 0; i < k; ++i) {
    const auto & S = SS.strata[i];
    for (const auto & p : samples[i]) {
      if (!SS.total.contains(p)) {
        add("outside_total", S.name, "", p);
        break;
      }
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) { continue; }
      for (const auto & p : samples[i]) {
        if (SS.strata[j].set.contains(p)) {
          add("overlap", S.name, SS.strata[j].name, p);
          break;
        }
      }
    }
    if (!S.frame.empty()) {
      const FieldFamily frame(S.frame, S.set);
      for (const auto & p : samples[i]) {
        if (span_dimension(frame, p) != S.dim) {
          add("dimension", S.name, "", p);
          break;
        }
      }
    }
    auto cover_rng = detail::stratum_rng(S.name + "#cover", sampler.seed);
    auto covered = [&](const Point & b) {
      if (SS.stratum_of(b)) { return true; }
      for (std::size_t j = 0; j < k; ++j) {
        if (j == i) { continue; }
        if (!sample_ball(SS.strata[j].set, b, frontier_tol, 1, cover_rng, 20).empty()) { return true; }
      }
      return false;
    };
    for (const auto & b : detail::sample_boundary(S, sampler)) {
      if (SS.total.contains(b) && !covered(b)) {
        add("coverage", S.name, "", b);
        break;
      }
    }
  }

  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) { continue; }
      const auto & M = SS.strata[i];
      const auto & N = SS.strata[j];
      auto rng = detail::stratum_rng(M.name + "->" + N.name, sampler.seed);
      int touching = 0;
      std::optional<Point> apart;
      for (const auto & m : samples[i]) {
        bool near = false;
        for (const auto & q : samples[j]) {
          if ((q - m).norm() <= frontier_tol) {
            near = true;
            break;
          }
        }
        if (!near) { near = !sample_ball(N.set, m, frontier_tol, 4, rng, 10).empty(); }
        if (near) {
          ++touching;
        } else if (!apart) {
          apart = m;
        }
      }
      if (touching > 0) {
        rep.contacts.push_back({M.name, N.name, touching, static_cast<int>(samples[i].size())});
        if (apart) { add("frontier", M.name, N.name, *apart); }
      }
    }
  }

  auto by_name = [](const auto & a, const auto & b) {
    return std::tie(a.stratum, a.closure_of) < std::tie(b.stratum, b.closure_of);
  };
  std::sort(rep.contacts.begin(), rep.contacts.end(), by_name);
  std::sort(rep.violations.begin(), rep.violations.end(), [](const auto & a, const auto & b) {
    return std::tie(a.kind, a.stratum, a.other) < std::tie(b.kind, b.stratum, b.other);
  });
  return rep;
}

/**
 * @brief Extend a field on stratum M near x to a field on the whole space by a smooth bump.
 *
 * Returns b(|y - x|^2) X_M with b ≡ 1 for |y - x| ≤ r_inner and b ≡ 0 (exact
 * zeros) for |y - x| ≥ r_outer, where b is built from exp(-1/t). X_M must be
 * tangent to M near x; the equality constraints of M are checked at sampled points.
 */
inline TangentField extend_stratum_field(const StratifiedSpace & SS, int stratum, const TangentField & X_M,
                                         const Point & x, double r_inner, double r_outer,
                                         double tangency_tol = 1e-8, std::uint64_t seed = 0)
{
  if (stratum < 0 || static_cast<std::size_t>(stratum) >= SS.strata.size()) {
    throw PreconditionError("stratum index out of range");
  }
  const Stratum & M = SS.strata[stratum];
  if (X_M.dim() != M.set.ambient_dim()) { throw DimensionError("field and stratum dimensions differ"); }
  if (!M.set.contains(x)) { throw PreconditionError("extend_stratum_field: point is not in stratum '" + M.name + "'"); }
  if (!(r_inner > 0.0 && r_inner < r_outer)) {
    throw PreconditionError("extend_stratum_field: need 0 < r_inner < r_outer");
  }

  auto rng = detail::stratum_rng(M.name + "#tangency", seed);
  std::vector<Point> pts{x};
  for (auto & p : sample_ball(M.set, x, r_outer, 32, rng)) { pts.push_back(std::move(p)); }
  for (const auto & p : pts) {
    const Point v = X_M.value_at(p);
    for (int ci : M.set.membership(p).cells) {
      for (const auto & c : M.set.cells()[ci]) {
        if (c.rel != Relation::EqZero) { continue; }
        Eigen::VectorXd grad(v.size());
        for (int i = 0; i < v.size(); ++i) { grad(i) = diff(c.g, i)(p); }
        const double res = std::abs(grad.dot(v));
        if (res > tangency_tol * std::max(1.0, grad.norm() * v.norm())) {
          throw PreconditionError("extend_stratum_field: field '" + X_M.label() + "' is not tangent to '" + M.name +
                                  "' at " + detail::format_point(p) + " (residual " + detail::format_number(res) +
                                  ")");
        }
      }
    }
  }

  SmoothExpr s = constant(0.0);
  for (int i = 0; i < x.size(); ++i) { s = s + pow(var(i) - constant(x(i)), 2); }
  const SmoothExpr outer = psi(constant(r_outer * r_outer) - s);
  const SmoothExpr inner = psi(s - constant(r_inner * r_inner));
  const SmoothExpr bump = outer / (outer + inner);
  return (bump * X_M).relabeled("bump(" + X_M.label() + ")");
}

struct StratumDrift
{
  std::string stratum;
  int samples{0};
  double max_drift{0.0};
  std::optional<Point> witness;
};

struct TangencyReport
{
  bool pass{true};
  double horizon{0.0};
  double threshold{0.0};
  std::vector<StratumDrift> strata;
  std::vector<std::string> failures;
};

/**
 * @brief Flow X briefly from sampled points of each stratum and measure how far
 * the flow drifts off that stratum. Passes when every drift is ≤ tol·horizon.
 */
inline TangencyReport strongly_stratified_check(const StratifiedSpace & SS, const TangentField & X,
                                                const StratumSampler & sampler, double horizon = 0.1,
                                                double tol = 1e-6, const FlowOptions & opt = {})
{
  TangencyReport rep;
  rep.horizon = horizon;
  rep.threshold = tol * horizon;
  const auto ambient = SubcartesianSpace::euclidean(SS.total.ambient_dim());
  const auto rhs = detail::field_rhs(X);
  for (const auto & S : SS.strata) {
    StratumDrift d{S.name, 0, 0.0, std::nullopt};
    for (const auto & y : detail::sample_stratum(S, sampler)) {
      ++d.samples;
      const double base = detail::stratum_violation(S.set, y);
      for (double dir : {1.0, -1.0}) {
        double worst = 0.0;
        try {
          detail::propagate(rhs, ambient, ambient.ambient_dim(), y, dir * horizon, opt,
                            [&](double, const Eigen::VectorXd & p) {
                              worst = std::max(worst, detail::stratum_violation(S.set, p) - base);
                            });
        } catch (const Error & e) {
          rep.failures.push_back("integrator failure in '" + S.name + "': " + e.what());
          worst = std::numeric_limits<double>::infinity();
        }
        if (worst > d.max_drift) {
          d.max_drift = worst;
          d.witness = y;
        }
      }
    }
    if (d.max_drift > rep.threshold) { rep.pass = false; }
    rep.strata.push_back(std::move(d));
  }
  if (!rep.failures.empty()) { rep.pass = false; }
  return rep;
}

struct SeedOrbitReport
{
  Point seed;
  std::string stratum;
  int declared_dim{0};
  int points{0};
  /// Orbit points outside the seed's stratum.
  int escaped{0};
  std::optional<Point> escape_witness;
  int est_dimension{0};
  /// Fraction of stratum samples near the seed within coverage_radius of some orbit point.
  double coverage{0.0};
};

struct OrbitStrataReport
{
  bool pass{true};
  std::vector<SeedOrbitReport> seeds;
};

/**
 * @brief Compare orbits of a family of strongly stratified fields with strata.
 *
 * Every field must first pass strongly_stratified_check. Containment of each
 * orbit sample in the seed's stratum is a hard check; coverage of the stratum
 * and dimension agreement are reported as evidence only.
 */
inline OrbitStrataReport orbit_vs_strata(const StratifiedSpace & SS, const std::vector<TangentField> & fields,
                                         const std::vector<Point> & seeds, int budget, double step_scale,
                                         std::uint64_t rng_seed, const StratumSampler & sampler,
                                         double coverage_radius = 0.25, const OrbitOptions & opt = {})
{
  for (const auto & X : fields) {
    const auto t = strongly_stratified_check(SS, X, sampler, 0.1, 1e-6, opt.flow);
    if (!t.pass) {
      throw PreconditionError("orbit_vs_strata: field '" + X.label() + "' is not strongly stratified");
    }
  }
  const FieldFamily F(fields, SS.total);
  OrbitStrataReport rep;
  for (const auto & seed : seeds) {
    const auto si = SS.stratum_of(seed);
    if (!si) { throw PreconditionError("orbit_vs_strata: seed " + detail::format_point(seed) + " is in no stratum"); }
    const Stratum & M = SS.strata[*si];
    SeedOrbitReport r;
    r.seed = seed;
    r.stratum = M.name;
    r.declared_dim = M.dim;
    const auto orbit = sample_orbit(F, seed, budget, step_scale, rng_seed, opt);
    r.points = static_cast<int>(orbit.points.size());
    r.est_dimension = orbit.est_dimension;
    for (const auto & p : orbit.points) {
      if (!M.set.contains(p.point)) {
        if (!r.escape_witness) { r.escape_witness = p.point; }
        ++r.escaped;
      }
    }
    StratumSampler local = sampler;
    local.center = seed;
    local.radius = std::min(sampler.radius, step_scale);
    const auto near = detail::sample_stratum(M, local);
    int covered = 0;
    for (const auto & q : near) {
      for (const auto & p : orbit.points) {
        if ((p.point - q).norm() <= coverage_radius) {
          ++covered;
          break;
        }
      }
    }
    r.coverage = near.empty() ? 1.0 : static_cast<double>(covered) / static_cast<double>(near.size());
    if (r.escaped > 0) { rep.pass = false; }
    rep.seeds.push_back(std::move(r));
  }
  return rep;
}

}  // namespace subcart
