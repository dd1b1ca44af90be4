#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "subcart/cli.hpp"

using namespace subcart;

namespace {

const std::string dir = SUBCART_SCENARIO_DIR;

Scenario load(const std::string & name) { return load_scenario(dir + "/" + name + ".json"); }

Point pt(std::initializer_list<double> v)
{
  Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double c : v) { p(i++) = c; }
  return p;
}

std::vector<Point> random_points(int n, int count, std::uint64_t seed, double lo = -1.0, double hi = 1.0)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Point> out;
  for (int k = 0; k < count; ++k) {
    Point x(n);
    for (int i = 0; i < n; ++i) { x(i) = u(rng); }
    out.push_back(x);
  }
  return out;
}

SmoothExpr random_polynomial(int n, std::mt19937_64 & rng)
{
  std::uniform_int_distribution<int> coef(-3, 3), expo(0, 2);
  SmoothExpr f = constant(0.0);
  for (int t = 0; t < 3; ++t) {
    SmoothExpr m = constant(coef(rng));
    for (int i = 0; i < n; ++i) { m = m * pow(var(i), expo(rng)); }
    f = f + m;
  }
  return f;
}

struct Outcome
{
  bool pass;
  std::string detail;
};

std::string fmt(const char * f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome example1()
{
  const Scenario sc = load("halfline");
  ProbeOptions po;
  po.seeds = {sc.seeds.at("origin"), sc.seeds.at("one")};
  po.flow = sc.tol.flow();
  const auto a = classify_vector_field(sc.space, sc.field("ddx"), po);
  const auto b = classify_vector_field(sc.space, sc.field("xddx"), po);
  const double w = a.witness ? std::abs(a.witness->point(0)) : 1.0;
  const bool ok = a.classification == Classification::NotVectorField && w <= 1e-9 &&
                  b.classification == Classification::VectorField && b.probes_run >= 100;
  return {ok, fmt("ddx %s witness |x|=%.3g; xddx %s after %d probes", classification_name(a.classification), w,
                  classification_name(b.classification), b.probes_run)};
}

Outcome example2()
{
  const Scenario sc = load("example2");
  ProbeOptions po;
  po.seeds = {sc.seeds.at("origin")};
  po.flow = sc.tol.flow();
  const auto v = classify_vector_field(sc.space, sc.field("d1"), po);
  bool ok = v.classification == Classification::NotVectorField;
  std::string d = std::string(classification_name(v.classification)) + " at (0,0);";
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const auto t = escape_time(sc.space, sc.field("d1"), pt({0, eps}), 1.0, 10.0, sc.tol.flow());
    const double bound = 2 * std::sqrt(2 * eps);
    ok = ok && t && *t <= bound;
    d += fmt(" eps=%g t_esc=%.6g<=%.6g", eps, t ? *t : -1.0, bound);
  }
  return {ok, d};
}

Outcome group_law()
{
  const Scenario sc = load("rotation");
  const TangentField & X = sc.field("rot");
  FlowOptions fo = sc.tol.flow();
  fo.rtol = 1e-9;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-3, 3), c(-2, 2);
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    const double t = u(rng), s = u(rng);
    const Point x = pt({c(rng), c(rng)});
    const Point a = flow_map(sc.space, X, t + s, x, fo);
    const Point b = flow_map(sc.space, X, t, flow_map(sc.space, X, s, x, fo), fo);
    worst = std::max(worst, (a - b).norm());
  }
  return {worst <= 1e-7, fmt("max residual %.3g over 100 samples", worst)};
}

Outcome chart()
{
  const Scenario sc = load("shear");
  const FieldFamily F(sc.family("F"), sc.space);
  OrbitOptions oo;
  oo.flow = sc.tol.flow();
  const Chart c = chart_jacobian(F, {0, 1}, pt({1, 0}), sc.tol["fd_step"], oo);
  return {c.agreement <= 1e-5 && c.rank == 2, fmt("agreement %.3g, rank %d", c.agreement, c.rank)};
}

std::string set_str(const std::set<int> & s)
{
  std::string r = "{";
  for (int v : s) { r += (r.size() > 1 ? "," : "") + std::to_string(v); }
  return r + "}";
}

Outcome dimension_reports()
{
  const Scenario rot = load("rotation"), shear = load("shear");
  const auto a = dimension_constancy_report(FieldFamily(rot.family("rotation"), rot.space), rot.seeds.at("p"), 50, 1);
  const auto b =
      dimension_constancy_report(FieldFamily(rot.family("rotation_radial"), rot.space), rot.seeds.at("p"), 50, 1);
  const auto c = dimension_constancy_report(FieldFamily(shear.family("F"), shear.space), shear.seeds.at("origin"), 50, 1);
  const bool ok = a.constant() && b.constant() && c.dimensions == std::set<int>{1, 2};
  return {ok, "rotation " + set_str(a.dimensions) + ", rotation+radial " + set_str(b.dimensions) + ", shear " +
                  set_str(c.dimensions)};
}

Outcome completeness()
{
  const Scenario rot = load("rotation"), shear = load("shear");
  CompletenessSpec s1;
  s1.base_points = {rot.seeds.at("p"), pt({0.3, -0.8})};
  s1.random_probes = 50;
  s1.t_scale = 1.0;
  s1.tol = rot.tol["completeness"];
  const auto a = local_completeness_probe(FieldFamily(rot.family("rotation"), rot.space), s1);
  CompletenessSpec s2;
  s2.probes = {{0, 1, pt({-1, 0}), 1.0}};
  s2.base_points = {shear.seeds.at("origin"), shear.seeds.at("p")};
  s2.random_probes = 50;
  s2.tol = shear.tol["completeness"];
  const auto b = local_completeness_probe(FieldFamily(shear.family("F"), shear.space), s2);
  const bool witness_ok = b.witness && b.witness->residual >= 0.5 && b.witness->image.norm() <= 1e-9;
  return {a.pass && !b.pass && witness_ok,
          fmt("singleton %s (max %.3g); shear %s, witness residual %.3g at (%.3g,%.3g)", a.pass ? "PASS" : "FAIL",
              a.max_residual, b.pass ? "PASS" : "FAIL", b.witness ? b.witness->residual : 0.0,
              b.witness ? b.witness->image(0) : NAN, b.witness ? b.witness->image(1) : NAN)};
}

Outcome reduction_table()
{
  const Scenario sc = load("reduction");
  const ReductionResult r = reduce(sc.reduction->setup);
  double table = 0;
  for (const auto & s : random_points(4, 200, 77, -2, 2)) {
    const Eigen::MatrixXd L = r.reduced.at(s);
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(4, 4);
    E(0, 1) = 4 * s(2);
    E(0, 2) = 2 * s(0);
    E(1, 2) = -2 * s(1);
    E = E - Eigen::MatrixXd(E.transpose());
    table = std::max(table, (L - E).cwiseAbs().maxCoeff());
  }
  const bool ok = table <= 1e-10 && r.certification_residual <= 1e-10 && r.certification_points >= 200;
  return {ok, fmt("table deviation %.3g, certification residual %.3g at %d points", table, r.certification_residual,
                  r.certification_points)};
}

Outcome casimir()
{
  const Scenario sc = load("reduction");
  const ReductionResult r = reduce(sc.reduction->setup);
  const SubcartesianSpace S = r.space.with_tol(sc.reduction->tol);
  const SmoothExpr C = parse("x1*x2 - x3^2 - x4^2", 4);
  const LeafSample L =
      leaf_sample(S, r.reduced, {var(0), var(1), var(2)}, sc.seeds.at("sigma0"), 500, 0.2, 1, {C});
  double min_s = 1e300, rel = 0;
  for (const auto & p : L.sample.points) {
    min_s = std::min({min_s, p.point(0), p.point(1)});
    rel = std::max(rel, std::abs(C(p.point)));
  }
  const double drift = L.casimirs.at(0).max_drift;
  const bool ok = L.sample.points.size() >= 500 && drift <= 1e-6 && min_s >= -sc.reduction->tol && rel <= 1e-6;
  return {ok, fmt("%zu points, drift %.3g, min(s1,s2) %.3g, relation residual %.3g", L.sample.points.size(), drift,
                  min_s, rel)};
}

Outcome invariance()
{
  const Scenario sc = load("rotation");
  const SmoothExpr h = parse("(x1^2 + x2^2)/2", 2);
  std::string d;
  bool ok = true;
  for (double t : {0.1, 1.0}) {
    const auto r = invariance_residual(*sc.poisson, h, var(0), var(1), t, sc.seeds.at("p"), sc.space, sc.tol.flow());
    ok = ok && r.residual <= 1e-6;
    d += fmt("t=%g residual %.3g (error bar %.3g); ", t, r.residual, r.error_bar);
  }
  return {ok, d};
}

Outcome jacobi()
{
  const Scenario can = load("rotation"), red = load("reduction"), broken = load("broken_bivector");
  const PoissonStructure P4 = *red.poisson;
  const PoissonStructure R = reduce(red.reduction->setup).reduced;
  std::mt19937_64 rng(99);
  double worst_can = 0, worst_red = 0;
  for (int k = 0; k < 50; ++k) {
    const auto f = random_polynomial(2, rng), g = random_polynomial(2, rng), h = random_polynomial(2, rng);
    worst_can = std::max(worst_can, jacobi_residual(*can.poisson, f, g, h, random_points(2, 5, k)));
    const auto f4 = random_polynomial(4, rng), g4 = random_polynomial(4, rng), h4 = random_polynomial(4, rng);
    worst_can = std::max(worst_can, jacobi_residual(P4, f4, g4, h4, random_points(4, 5, k)));
    worst_red = std::max(worst_red, jacobi_residual(R, f4, g4, h4, random_points(4, 5, k + 1000)));
  }
  const double neg = jacobi_residual(*broken.poisson, var(0), var(1), var(2), random_points(3, 20, 5));
  return {worst_can <= 1e-8 && worst_red <= 1e-8 && neg >= 0.1,
          fmt("canonical %.3g, reduced %.3g, broken control %.3g", worst_can, worst_red, neg)};
}

Outcome torsion_value()
{
  const Scenario sc = load("acs_r4");
  const Point x = sc.seeds.at("e1");
  const Point got = torsion(*sc.acs, sc.field("d1"), sc.field("d3")).value_at(x);
  const double a = 1 + x(0) * x(0);
  const Point oracle = pt({0, 0, -4 * x(0) / a, 0});
  const Point target = pt({0, 0, -2, 0});
  const double e = (got - target).norm();
  return {e <= 1e-8 && (oracle - target).norm() <= 1e-15,
          fmt("N(d1,d3)(1,0,0,0) = (%.3g,%.3g,%.3g,%.3g), deviation %.3g", got(0), got(1), got(2), got(3), e)};
}

Outcome lemma_suite()
{
  double tens = 0, eig = 0;
  for (const char * name : {"acs_plane", "acs_r4"}) {
    const Scenario sc = load(name);
    const auto pts = random_points(sc.dim, 50, 31);
    const auto F = sc.family("frame");
    const SmoothExpr f = parse("x1 + x2^2", sc.dim), h = parse("sin(x2) - x1*x2", sc.dim);
    for (const auto & X : F) {
      for (const auto & Y : F) {
        tens = std::max(tens, tensoriality_residual(*sc.acs, X, Y, f, h, pts));
        const TangentField N = torsion(*sc.acs, X, Y);
        for (const auto & p : pts) {
          eig = std::max(eig, std::abs(eigenspace_closure_residual(*sc.acs, X, Y, {p}) - N.value_at(p).norm() / 4));
        }
      }
    }
  }
  return {tens <= 1e-10 && eig <= 1e-10, fmt("tensoriality %.3g, |eigen - |N|/4| %.3g", tens, eig)};
}

Outcome strata()
{
  const Scenario sc = load("cone");
  const auto & SS = *sc.strata;
  const auto rep = orbit_vs_strata(SS, sc.family("stratified"), {sc.seeds.at("p")}, 1000, 0.3, 1, *sc.sampler);
  const auto fr = frontier_check(SS, *sc.sampler, sc.tol["frontier"]);
  const auto tz = strongly_stratified_check(SS, sc.field("dz"), *sc.sampler, sc.tol["horizon"], sc.tol["tangency"]);
  double drift = 0;
  for (const auto & d : tz.strata) { drift = std::max(drift, d.max_drift); }
  const auto & s = rep.seeds.at(0);
  const bool ok = s.points >= 1000 && s.escaped == 0 && fr.pass && !tz.pass && drift > tz.threshold;
  return {ok, fmt("%d orbit points, %d escaped; frontier %s; dz %s with drift %.3g > %.3g", s.points, s.escaped,
                  fr.pass ? "PASS" : "FAIL", tz.pass ? "PASS" : "FAIL", drift, tz.threshold)};
}

Outcome determinism()
{
  auto sc = [](const std::string & n) { return dir + "/" + n + ".json"; };
  const std::vector<std::vector<std::string>> cmds{
      {"flow", "--scenario", sc("rotation"), "--field", "rot", "--point", "p", "--t", "1"},
      {"classify", "--scenario", sc("halfline"), "--field", "ddx", "--seed", "1"},
      {"bracket", "--scenario", sc("shear"), "--fields", "dx,xdy", "--point", "p"},
      {"orbit", "--scenario", sc("rotation"), "--field", "rot", "--point", "1,0", "--budget", "200", "--seed", "7"},
      {"chart", "--scenario", sc("shear"), "--family", "F", "--point", "p"},
      {"complete-probe", "--scenario", sc("shear"), "--family", "F", "--point", "origin", "--seed", "3"},
      {"strata", "--scenario", sc("cone"), "--check", "frontier"},
      {"strata", "--scenario", sc("cone"), "--check", "orbits", "--family", "stratified", "--point", "p", "--budget",
       "200"},
      {"poisson", "--scenario", sc("rotation"), "--check", "jacobi", "--triples", "10", "--seed", "4"},
      {"reduce", "--scenario", sc("reduction")},
      {"leaf", "--scenario", sc("reduction"), "--reduced", "--generators", "s1;s2;s3", "--point", "sigma0",
       "--budget", "200", "--seed", "2"},
      {"acs", "--scenario", sc("acs_r4"), "--check", "torsion", "--fields", "d1,d3", "--point", "e1"},
      {"acs", "--scenario", sc("acs_plane"), "--check", "kahler", "--family", "frame", "--seed", "5"},
  };
  int identical = 0;
  std::string bad;
  for (const auto & c : cmds) {
    std::ostringstream o1, e1, o2, e2;
    const int r1 = run(c, o1, e1), r2 = run(c, o2, e2);
    if (r1 == r2 && r1 != 2 && !o1.str().empty() && o1.str() == o2.str()) {
      ++identical;
    } else {
      bad += " " + c[0] + "(exit " + std::to_string(r1) + ": " + e1.str() + ")";
    }
  }
  return {identical == static_cast<int>(cmds.size()),
          fmt("%d/%zu commands byte-identical", identical, cmds.size()) + bad};
}

}  // namespace

int main()
{
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"example 1 classification", example1},
      {"example 2 classification and escape times", example2},
      {"flow group law", group_law},
      {"chart jacobian", chart},
      {"dimension constancy reports", dimension_reports},
      {"local completeness probe", completeness},
      {"reduced bracket table", reduction_table},
      {"casimir conservation on leaf", casimir},
      {"bracket invariance under hamiltonian flow", invariance},
      {"jacobi residuals", jacobi},
      {"torsion value", torsion_value},
      {"tensoriality and eigenspace cross-check", lemma_suite},
      {"strata suite on the cone", strata},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o{false, ""};
    try {
      o = criteria[i].second();
    } catch (const std::exception & e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) { ++failures; }
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
