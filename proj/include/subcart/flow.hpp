#pragma once

/**
 * @file
 * @brief Integral curves of derivations on a subcartesian space.
 *
 * The ambient representative of a field is integrated with an adaptive
 * Dormand-Prince 5(4) scheme. After every accepted step the new point is
 * tested for membership; when it falls outside S the exit time is located by
 * bisection on the step length. The computed interval is therefore the
 * connected component of in-S times containing 0, clipped to the horizon.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "subcart/field.hpp"
#include "subcart/space.hpp"

namespace subcart {

struct FlowOptions
{
  double rtol{1e-9};
  double atol{1e-12};
  /// Exit times are located to this accuracy.
  double exit_tol{1e-12};
  /// Upper bound on the step, hence on the sample spacing of integral curves.
  double max_step{0.1};
  /// Guard-violation retries halve the step down to this size before declaring exit.
  double min_step{1e-14};
  double initial_step{1e-3};
  long max_steps{2'000'000};
};

/// Where and how an integral curve left the space.
struct ExitWitness
{
  /// Last parameter value known to be inside S, and the point there.
  double t_inside{0.0};
  Point inside;
  /// First parameter value known to be outside S (within exit_tol of t_inside).
  double t_outside{0.0};
  /// Point at t_outside; empty when the ambient field itself was undefined there.
  std::optional<Point> outside;
  /// Human readable account of the violated constraint or guard.
  std::string violated;
  /// True when the endpoint belongs to S: the curve reaches a point of S and
  /// cannot continue, so the maximal interval is closed at this end.
  bool closed_endpoint{false};
};

struct IntegralCurve
{
  Point basepoint;
  std::string field_label;
  double t_minus{0.0};
  double t_plus{0.0};
  bool clipped_minus{false};
  bool clipped_plus{false};
  /// Ordered by t; includes (0, basepoint).
  std::vector<std::pair<double, Point>> samples;
  std::optional<ExitWitness> exit_minus;
  std::optional<ExitWitness> exit_plus;
};

/// Integration could not proceed (step-size underflow or step budget). Carries the partial curve.
class IntegrationError : public Error
{
public:
  IntegrationError(const std::string & msg, IntegralCurve partial) : Error(msg), partial_(std::move(partial)) {}
  const IntegralCurve & partial() const noexcept { return partial_; }

private:
  IntegralCurve partial_;
};

/// The requested time lies outside the maximal interval of the integral curve.
class FlowExitError : public Error
{
public:
  FlowExitError(const std::string & msg, double t_exit, ExitWitness witness)
      : Error(msg), t_exit_(t_exit), witness_(std::move(witness))
  {}
  /// Estimated interval endpoint in the direction of the requested time.
  double t_exit() const noexcept { return t_exit_; }
  const ExitWitness & witness() const noexcept { return witness_; }

private:
  double t_exit_;
  ExitWitness witness_;
};

namespace detail {

using Rhs = std::function<void(const Eigen::VectorXd &, Eigen::VectorXd &)>;

/// One Dormand-Prince 5(4) step of signed size h. Writes the embedded error estimate to `err`.
inline Eigen::VectorXd dp45_step(const Rhs & f, const Eigen::VectorXd & y, double h, Eigen::VectorXd * err = nullptr)
{
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const auto n = y.size();
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  f(y, k1);
  f(y + h * (a21 * k1), k2);
  f(y + h * (a31 * k1 + a32 * k2), k3);
  f(y + h * (a41 * k1 + a42 * k2 + a43 * k3), k4);
  f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
  f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
  Eigen::VectorXd yn = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  if (err) {
    f(yn, k7);
    *err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  }
  return yn;
}

/// Right-hand side x' = X(x) for a field's ambient representative.
inline Rhs field_rhs(const TangentField & X)
{
  return [X](const Eigen::VectorXd & y, Eigen::VectorXd & dy) {
    dy.resize(y.size());
    for (int i = 0; i < X.dim(); ++i) { dy(i) = X[i](y); }
  };
}

/// Tangent-linear system (x, V) ↦ (X(x), DX(x) V) with V an n×m block stored column-major after x.
inline Rhs variational_rhs(const TangentField & X, int columns)
{
  auto jac = X.jacobian();
  const int n = X.dim();
  return [X, jac = std::move(jac), n, columns](const Eigen::VectorXd & y, Eigen::VectorXd & dy) {
    dy.resize(y.size());
    const Eigen::VectorXd x = y.head(n);
    Eigen::MatrixXd J(n, n);
    for (int i = 0; i < n; ++i) {
      dy(i) = X[i](x);
      for (int j = 0; j < n; ++j) { J(i, j) = jac[i][j].is_zero() ? 0.0 : jac[i][j](x); }
    }
    const Eigen::Map<const Eigen::MatrixXd> V(y.data() + n, n, columns);
    Eigen::Map<Eigen::MatrixXd> dV(dy.data() + n, n, columns);
    dV = J * V;
  };
}

/// True when the endpoint between `in` and `out` lies in S (only non-strict constraints break).
inline bool endpoint_in_space(const SubcartesianSpace & S, const Point & in, const std::optional<Point> & out)
{
  if (!out) { return false; }
  const Membership m = S.membership(in);
  for (int ci : m.cells) {
    bool closed = true;
    for (const auto & c : S.cells()[ci]) {
      try {
        if (!c.holds(c.g(*out), S.tol()) && is_strict(c.rel)) {
          closed = false;
          break;
        }
      } catch (const DomainError &) {
        closed = false;
        break;
      }
    }
    if (closed) { return true; }
  }
  return false;
}

inline std::string describe_exit(const SubcartesianSpace & S, const std::optional<Point> & out)
{
  if (!out) { return "field undefined beyond this point (domain guard)"; }
  const Membership m = S.membership(*out);
  std::string s;
  for (std::size_t ci = 0; ci < S.cells().size(); ++ci) {
    if (m.failing[ci] < 0) { continue; }
    if (!s.empty()) { s += "; "; }
    s += S.describe_failure(*out, static_cast<int>(ci));
  }
  for (const auto & d : m.diagnostics) { s += "; " + d; }
  return s;
}

struct Propagation
{
  Eigen::VectorXd y;
  double t_reached{0.0};
  std::optional<ExitWitness> exit;
};

/**
 * @brief Integrate y' = f(y) from 0 towards t_end while the first `n` state
 * entries stay in S. `on_sample(t, y)` sees every accepted state.
 */
template<class OnSample>
Propagation propagate(const Rhs & f, const SubcartesianSpace & S, int n, const Eigen::VectorXd & y0, double t_end,
                      const FlowOptions & opt, OnSample && on_sample)
{
  Propagation res{y0, 0.0, std::nullopt};
  if (t_end == 0.0) { return res; }
  const double dir = t_end > 0 ? 1.0 : -1.0;
  const double T = std::abs(t_end);
  double t = 0.0;  // |elapsed|
  Eigen::VectorXd y = y0;
  double h = std::min({opt.initial_step, opt.max_step, T});
  long steps = 0;

  auto member = [&](const Eigen::VectorXd & s) { return S.contains(Point(s.head(n))); };
  auto try_step = [&](double hh) -> std::optional<Eigen::VectorXd> {
    try {
      Eigen::VectorXd r = dp45_step(f, y, dir * hh);
      if (!r.allFinite()) { return std::nullopt; }
      return r;
    } catch (const DomainError &) {
      return std::nullopt;
    }
  };

  auto finish_exit = [&](double lo, const Eigen::VectorXd & y_lo, double hi, std::optional<Eigen::VectorXd> y_hi) {
    ExitWitness w;
    w.t_inside = dir * (t + lo);
    w.inside = y_lo.head(n);
    w.t_outside = dir * (t + hi);
    if (y_hi) { w.outside = Point(y_hi->head(n)); }
    w.violated = describe_exit(S, w.outside);
    w.closed_endpoint = endpoint_in_space(S, w.inside, w.outside);
    if (lo > 0.0) { on_sample(w.t_inside, y_lo); }
    res.y = y_lo;
    res.t_reached = w.t_inside;
    res.exit = std::move(w);
    return res;
  };

  while (t < T) {
    if (++steps > opt.max_steps) { throw Error("step budget exhausted at t = " + std::to_string(dir * t)); }
    const bool last = h >= T - t;
    if (last) { h = T - t; }

    Eigen::VectorXd err;
    std::optional<Eigen::VectorXd> yn;
    try {
      Eigen::VectorXd cand = dp45_step(f, y, dir * h, &err);
      if (cand.allFinite() && err.allFinite()) { yn = std::move(cand); }
    } catch (const DomainError &) {
    }
    if (!yn) {
      // Guard violation (or overflow) somewhere inside the step.
      if (h * 0.5 < opt.min_step) { return finish_exit(0.0, y, h, std::nullopt); }
      h *= 0.5;
      continue;
    }

    double e = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y(i)), std::abs((*yn)(i)));
      e = std::max(e, std::abs(err(i)) / sc);
    }
    if (e > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(e, -0.2));
      if (h < opt.min_step) { throw Error("step size underflow at t = " + std::to_string(dir * t)); }
      continue;
    }

    if (!member(*yn)) {
      double lo = 0.0, hi = h;
      Eigen::VectorXd y_lo = y;
      while (hi - lo > opt.exit_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) { break; }
        auto ym = try_step(mid);
        if (ym && member(*ym)) {
          lo = mid;
          y_lo = std::move(*ym);
        } else {
          hi = mid;
        }
      }
      return finish_exit(lo, y_lo, hi, try_step(hi));
    }

    t = last ? T : t + h;
    y = std::move(*yn);
    on_sample(dir * t, y);
    const double grow = e > 0.0 ? std::min(5.0, 0.9 * std::pow(e, -0.2)) : 5.0;
    h = std::min(opt.max_step, h * grow);
  }
  res.y = y;
  res.t_reached = dir * T;
  return res;
}

inline std::string format_point(const Point & x)
{
  std::string s = "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) { s += ", "; }
    s += format_number(x(i));
  }
  return s + ")";
}

/**
 * True when some constraint broken between `in` and `out` is crossed
 * transversally by X, which separates a genuine exit from slow numerical drift
 * off an equality constraint.
 */
inline bool transversal_exit(const SubcartesianSpace & S, const TangentField & X, const ExitWitness & w, double dir)
{
  if (!w.outside) { return false; }
  const Membership m = S.membership(w.inside);
  const Point v = X.value_at(w.inside) * dir;
  for (int ci : m.cells) {
    for (const auto & c : S.cells()[ci]) {
      Eigen::VectorXd grad(S.ambient_dim());
      try {
        if (c.holds(c.g(*w.outside), S.tol())) { continue; }
        for (int i = 0; i < S.ambient_dim(); ++i) { grad(i) = diff(c.g, i)(w.inside); }
      } catch (const DomainError &) {
        continue;
      }
      const double dg = grad.dot(v);
      const double scale = std::max(1.0, grad.norm() * v.norm());
      if (std::abs(dg) < 1e-6 * scale) { continue; }
      if (c.rel == Relation::EqZero || (c.margin(dg) < 0.0)) { return true; }
    }
  }
  return false;
}

inline void require_member(const SubcartesianSpace & S, const Point & x, const char * what)
{
  S.check_dim(x);
  if (!S.contains(x)) { throw PreconditionError(std::string(what) + ": point is not in the space"); }
}

}  // namespace detail

/**
 * @brief Maximal integral curve of X through x0, restricted to [-horizon, horizon].
 *
 * Throws PreconditionError if x0 ∉ S and IntegrationError (with the partial
 * curve) on step-size underflow.
 */
inline IntegralCurve integrate(const SubcartesianSpace & S, const TangentField & X, const Point & x0, double horizon,
                               const FlowOptions & opt = {})
{
  detail::require_member(S, x0, "integrate");
  if (X.dim() != S.ambient_dim()) { throw DimensionError("field and space dimensions differ"); }
  IntegralCurve c;
  c.basepoint = x0;
  c.field_label = X.label();
  const auto rhs = detail::field_rhs(X);
  const int n = S.ambient_dim();

  std::vector<std::pair<double, Point>> fwd, bwd;
  auto run = [&](double t_end, std::vector<std::pair<double, Point>> & out) {
    try {
      return detail::propagate(rhs, S, n, x0, t_end, opt,
                               [&](double t, const Eigen::VectorXd & y) { out.emplace_back(t, y); });
    } catch (const Error & e) {
      c.samples.assign(bwd.rbegin(), bwd.rend());
      c.samples.emplace_back(0.0, x0);
      c.samples.insert(c.samples.end(), fwd.begin(), fwd.end());
      throw IntegrationError(e.what(), c);
    }
  };
  const auto plus = run(horizon, fwd);
  const auto minus = run(-horizon, bwd);

  c.t_plus = plus.t_reached;
  c.t_minus = minus.t_reached;
  c.clipped_plus = !plus.exit;
  c.clipped_minus = !minus.exit;
  c.exit_plus = plus.exit;
  c.exit_minus = minus.exit;
  c.samples.assign(bwd.rbegin(), bwd.rend());
  c.samples.emplace_back(0.0, x0);
  c.samples.insert(c.samples.end(), fwd.begin(), fwd.end());
  return c;
}

/**
 * @brief φ_t(x). Throws FlowExitError carrying the estimated interval endpoint
 * when t lies outside the maximal interval.
 */
inline Point flow_map(const SubcartesianSpace & S, const TangentField & X, double t, const Point & x,
                      const FlowOptions & opt = {})
{
  detail::require_member(S, x, "flow_map");
  if (t == 0.0) { return x; }
  const auto p = detail::propagate(detail::field_rhs(X), S, S.ambient_dim(), x, t, opt, [](double, const auto &) {});
  if (p.exit) {
    throw FlowExitError("flow of '" + X.label() + "' leaves the space at t = " + detail::format_number(p.t_reached) +
                            " before reaching t = " + detail::format_number(t),
                        p.t_reached, *p.exit);
  }
  return p.y;
}

/// Image point and transported vector of a pushforward.
struct Pushforward
{
  Point image;
  Eigen::VectorXd vector;
};

/**
 * @brief (φ_t^X)_* Y at φ_t(x), i.e. Dφ_t(x)·Y(x), by integrating the
 * variational equation alongside the flow.
 */
inline Pushforward pushforward_at(const SubcartesianSpace & S, const TangentField & X, double t, const TangentField & Y,
                                  const Point & x, const FlowOptions & opt = {})
{
  detail::require_member(S, x, "pushforward_at");
  require_same_dim(X, Y);
  const int n = X.dim();
  Eigen::VectorXd y0(2 * n);
  y0.head(n) = x;
  y0.tail(n) = Y.value_at(x);
  if (t == 0.0) { return {x, y0.tail(n)}; }
  const auto p = detail::propagate(detail::variational_rhs(X, 1), S, n, y0, t, opt, [](double, const auto &) {});
  if (p.exit) {
    throw FlowExitError("pushforward: flow of '" + X.label() + "' leaves the space at t = " +
                            detail::format_number(p.t_reached),
                        p.t_reached, *p.exit);
  }
  return {p.y.head(n), p.y.tail(n)};
}

/// φ_t(x) together with the Jacobian Dφ_t(x).
struct FlowJacobian
{
  Point image;
  Eigen::MatrixXd jacobian;
};

inline FlowJacobian flow_jacobian(const SubcartesianSpace & S, const TangentField & X, double t, const Point & x,
                                  const FlowOptions & opt = {})
{
  detail::require_member(S, x, "flow_jacobian");
  const int n = X.dim();
  Eigen::VectorXd y0(n + n * n);
  y0.head(n) = x;
  Eigen::Map<Eigen::MatrixXd>(y0.data() + n, n, n).setIdentity();
  if (t == 0.0) { return {x, Eigen::MatrixXd::Identity(n, n)}; }
  const auto p = detail::propagate(detail::variational_rhs(X, n), S, n, y0, t, opt, [](double, const auto &) {});
  if (p.exit) { throw FlowExitError("flow_jacobian: flow leaves the space", p.t_reached, *p.exit); }
  return {p.y.head(n), Eigen::Map<const Eigen::MatrixXd>(p.y.data() + n, n, n)};
}

/// Time after which the curve through x leaves S in the given direction, if within `horizon`.
inline std::optional<double> escape_time(const SubcartesianSpace & S, const TangentField & X, const Point & x,
                                         double direction, double horizon, const FlowOptions & opt = {})
{
  detail::require_member(S, x, "escape_time");
  const auto p = detail::propagate(detail::field_rhs(X), S, S.ambient_dim(), x, direction >= 0 ? horizon : -horizon,
                                   opt, [](double, const auto &) {});
  if (!p.exit) { return std::nullopt; }
  return std::abs(p.t_reached);
}

// ---------------------------------------------------------------------------
// Vector-field classification
// ---------------------------------------------------------------------------

enum class Classification { VectorField, NotVectorField, Inconclusive };

inline const char * classification_name(Classification c)
{
  switch (c) {
  case Classification::VectorField: return "VectorField";
  case Classification::NotVectorField: return "NotVectorField";
  case Classification::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct VectorFieldWitness
{
  Point point;
  std::string description;
};

struct VectorFieldVerdict
{
  Classification classification{Classification::Inconclusive};
  std::optional<VectorFieldWitness> witness;
  int probes_run{0};
  /// Smallest sampled escape time at the finest radius, per seed.
  std::vector<double> finest_escape;
  std::vector<std::string> notes;
};

struct ProbeOptions
{
  std::vector<Point> seeds;
  /// Neighbourhood radii, refined from first to last.
  std::vector<double> radii{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  /// Candidate uniform time bounds.
  std::vector<double> eps{1e-1, 3e-2, 1e-2};
  int samples{16};
  std::uint64_t rng_seed{0};
  /// Lower bound on d(φ_t y_i, φ_t y_j) / d(y_i, y_j) over sampled pairs.
  double injectivity_bound{1e-3};
  FlowOptions flow{};
};

/**
 * @brief Probe whether X generates a local one-parameter group of local diffeomorphisms of S.
 *
 * Two probes run around every seed. On locally closed spaces, any sampled
 * integral curve whose interval is closed at an end (the curve reaches a point
 * of S and stops) certifies NotVectorField: at that endpoint the flow is
 * undefined for one sign of t arbitrarily close to 0. The direct probe samples
 * ball(seed, r) ∩ S for each radius and looks for one ε from the schedule such
 * that all sampled curves exist on (-ε, ε) and the time-ε maps stay injective.
 * If at the finest radius the sampled escape times fall below the smallest ε,
 * no uniform ε exists and the sample with the shortest escape is the witness.
 * Positives mean "passed every probe", never a proof.
 */
inline VectorFieldVerdict classify_vector_field(const SubcartesianSpace & S, const TangentField & X,
                                                const ProbeOptions & po)
{
  if (po.seeds.empty()) { throw PreconditionError("classify_vector_field: no seeds"); }
  if (po.radii.empty() || po.eps.empty()) { throw PreconditionError("classify_vector_field: empty schedule"); }
  VectorFieldVerdict v;
  const double eps_max = *std::max_element(po.eps.begin(), po.eps.end());
  const double eps_min = *std::min_element(po.eps.begin(), po.eps.end());
  std::vector<double> eps_sorted = po.eps;
  std::sort(eps_sorted.rbegin(), eps_sorted.rend());
  std::mt19937_64 rng(po.rng_seed);
  bool inconclusive = false;

  for (const Point & seed : po.seeds) {
    detail::require_member(S, seed, "classify_vector_field");
    double tau_finest = std::numeric_limits<double>::infinity();
    Point tau_point = seed;
    bool seed_passed_finest = false;

    for (std::size_t ri = 0; ri < po.radii.size(); ++ri) {
      const double r = po.radii[ri];
      std::vector<Point> pts{seed};
      for (auto & p : sample_ball(S, seed, r, po.samples, rng)) { pts.push_back(std::move(p)); }

      double tau = std::numeric_limits<double>::infinity();
      Point arg = seed;
      for (const Point & y : pts) {
        ++v.probes_run;
        for (double dir : {1.0, -1.0}) {
          detail::Propagation p;
          try {
            p = detail::propagate(detail::field_rhs(X), S, S.ambient_dim(), y, dir * eps_max, po.flow,
                                  [](double, const auto &) {});
          } catch (const Error & e) {
            inconclusive = true;
            v.notes.push_back(std::string("integrator failure: ") + e.what());
            continue;
          }
          if (!p.exit) { continue; }
          if (S.locally_closed() && p.exit->closed_endpoint && detail::transversal_exit(S, X, *p.exit, dir)) {
            v.classification = Classification::NotVectorField;
            v.witness = VectorFieldWitness{
                p.exit->inside, "maximal integral curve through " + detail::format_point(y) +
                                    " ends inside the space at t = " +
                                    detail::format_number(p.exit->t_inside) + " (" + p.exit->violated +
                                    "); the flow is undefined on one side of this point for all small t"};
            return v;
          }
          const double esc = std::abs(p.t_reached);
          if (esc < tau) {
            tau = esc;
            arg = y;
          }
        }
      }

      const bool finest = ri + 1 == po.radii.size();
      double eps_ok = 0.0;
      for (double e : eps_sorted) {
        if (e < tau) {
          eps_ok = e;
          break;
        }
      }
      if (eps_ok > 0.0 && pts.size() > 1) {
        // Injectivity of φ_{±ε} on the sample.
        double ratio = std::numeric_limits<double>::infinity();
        for (double sgn : {1.0, -1.0}) {
          std::vector<Point> img;
          try {
            for (const auto & y : pts) { img.push_back(flow_map(S, X, sgn * eps_ok, y, po.flow)); }
          } catch (const Error &) {
            inconclusive = true;
            break;
          }
          for (std::size_t i = 0; i < pts.size(); ++i) {
            for (std::size_t j = i + 1; j < pts.size(); ++j) {
              const double d0 = (pts[i] - pts[j]).norm();
              if (d0 > 0.0) { ratio = std::min(ratio, (img[i] - img[j]).norm() / d0); }
            }
          }
        }
        if (ratio < po.injectivity_bound) {
          inconclusive = true;
          v.notes.push_back("time-" + detail::format_number(eps_ok) + " map not injective on sample at radius " +
                            detail::format_number(r));
          eps_ok = 0.0;
        }
      }
      if (finest) {
        tau_finest = tau;
        tau_point = arg;
        seed_passed_finest = eps_ok > 0.0;
      }
    }

    v.finest_escape.push_back(tau_finest);
    if (tau_finest < eps_min) {
      v.classification = Classification::NotVectorField;
      v.witness = VectorFieldWitness{
          tau_point, "escape time " + detail::format_number(tau_finest) + " at distance " +
                         detail::format_number((tau_point - seed).norm()) +
                         " from the seed is below every candidate epsilon; no uniform time interval exists on the "
                         "neighbourhood"};
      return v;
    }
    if (!seed_passed_finest) { inconclusive = true; }
  }
  v.classification = inconclusive ? Classification::Inconclusive : Classification::VectorField;
  return v;
}

}  // namespace subcart
