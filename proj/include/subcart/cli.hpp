#pragma once

/**
 * @file
 * @brief The `subcart` command line: scenario loading, command dispatch and
 * deterministic JSON reports.
 *
 * Exit codes: 0 when the report passes, 1 for a certified failure or witness,
 * 2 for usage, schema and I/O errors.
 */

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "subcart/scenario.hpp"

namespace subcart {

using ojson = nlohmann::ordered_json;

/// Serialise with 2-space indentation and numbers as %.17g; non-finite numbers become null.
inline void emit_json(const ojson & j, std::string & out, int indent = 0)
{
  const std::string pad(static_cast<std::size_t>(indent) + 2, ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
  case ojson::value_t::object: {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) { out += ",\n"; }
      first = false;
      out += pad + ojson(it.key()).dump() + ": ";
      emit_json(it.value(), out, indent + 2);
    }
    out += "\n" + close + "}";
    return;
  }
  case ojson::value_t::array: {
    if (j.empty()) {
      out += "[]";
      return;
    }
    const bool flat = std::all_of(j.begin(), j.end(), [](const ojson & e) { return e.is_primitive(); });
    if (flat) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) { out += ", "; }
        emit_json(j[i], out, indent + 2);
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) { out += ",\n"; }
      out += pad;
      emit_json(j[i], out, indent + 2);
    }
    out += "\n" + close + "]";
    return;
  }
  case ojson::value_t::number_float: {
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      out += "null";
      return;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
    return;
  }
  default: out += j.dump();
  }
}

inline std::string emit_json(const ojson & j)
{
  std::string s;
  emit_json(j, s);
  s += "\n";
  return s;
}

namespace cli_detail {

inline ojson to_json(const Point & x)
{
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) { a.push_back(x(i)); }
  return a;
}

inline ojson to_json(const Eigen::MatrixXd & m)
{
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) { row.push_back(m(i, k)); }
    a.push_back(row);
  }
  return a;
}

inline std::vector<std::string> split(const std::string & s, char sep)
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) { out.push_back(item); }
  }
  return out;
}

inline std::string csv_number(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shared state of one invocation.
struct Context
{
  Scenario sc;
  std::uint64_t seed{0};
  OrbitOptions orbit;
  std::string out_path;

  Point point(const std::string & spec, int dim = -1) const
  {
    const int n = dim < 0 ? sc.dim : dim;
    if (auto it = sc.seeds.find(spec); it != sc.seeds.end()) {
      if (it->second.size() != n) { throw UsageError("seed '" + spec + "' has the wrong dimension"); }
      return it->second;
    }
    const auto parts = split(spec, ',');
    if (static_cast<int>(parts.size()) != n) {
      throw UsageError("point '" + spec + "' needs " + std::to_string(n) + " coordinates");
    }
    Point x(n);
    for (int i = 0; i < n; ++i) {
      try {
        std::size_t used = 0;
        x(i) = std::stod(parts[i], &used);
        if (used != parts[i].size()) { throw std::invalid_argument("trailing"); }
      } catch (const std::exception &) {
        throw UsageError("point '" + spec + "': invalid coordinate '" + parts[i] + "'");
      }
    }
    return x;
  }

  std::vector<Point> points(const std::vector<std::string> & specs, int dim = -1) const
  {
    std::vector<Point> out;
    for (const auto & s : specs) { out.push_back(point(s, dim)); }
    return out;
  }

  std::vector<Point> seed_points() const
  {
    std::vector<Point> out;
    for (const auto & [k, v] : sc.seeds) { out.push_back(v); }
    return out;
  }

  /// Family from --family or a single --field.
  FieldFamily family(const std::string & fam, const std::string & field) const
  {
    if (!fam.empty()) { return FieldFamily(sc.family(fam), sc.space); }
    if (!field.empty()) { return FieldFamily({sc.field(field)}, sc.space); }
    throw UsageError("one of --family or --field is required");
  }

  SmoothExpr expr(const std::string & s, int dim = -1, const VariableNames & names = {}) const
  {
    try {
      return parse(s, dim < 0 ? sc.dim : dim, dim < 0 ? sc.names : names);
    } catch (const Error & e) {
      throw UsageError("expression '" + s + "': " + e.what());
    }
  }

  /// Paths of the report and of an optional CSV artefact derived from --out.
  std::pair<std::string, std::string> output_paths() const
  {
    if (out_path.empty()) { return {"", ""}; }
    const auto slash = out_path.find_last_of('/');
    auto dot = out_path.find_last_of('.');
    if (dot != std::string::npos && slash != std::string::npos && dot < slash) { dot = std::string::npos; }
    const std::string stem = dot == std::string::npos ? out_path : out_path.substr(0, dot);
    const std::string ext = dot == std::string::npos ? "" : out_path.substr(dot);
    if (ext == ".csv") { return {stem + ".json", out_path}; }
    return {out_path, stem + ".csv"};
  }
};

inline void write_file(const std::string & path, const std::string & content)
{
  std::ofstream f(path, std::ios::binary);
  if (!f) { throw std::ios_base::failure("cannot write '" + path + "'"); }
  f << content;
  if (!f) { throw std::ios_base::failure("cannot write '" + path + "'"); }
}

inline std::string csv_header(int n, const char * tail, bool leading_t = false)
{
  std::string h = leading_t ? "t," : "";
  for (int i = 1; i <= n; ++i) { h += "x" + std::to_string(i) + (i < n || tail ? "," : ""); }
  if (tail) { h += tail; }
  return h + "\n";
}

/// Cloud CSV and a words sidecar next to it.
inline void write_cloud(const Context & ctx, const OrbitSample & s, const FieldFamily & F, ojson & result)
{
  const auto [report, csv] = ctx.output_paths();
  if (csv.empty()) { return; }
  std::string body = csv_header(F.space.ambient_dim(), "word_id");
  ojson words = ojson::array();
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    for (Eigen::Index k = 0; k < s.points[i].point.size(); ++k) { body += csv_number(s.points[i].point(k)) + ","; }
    body += std::to_string(i) + "\n";
    ojson steps = ojson::array();
    for (const auto & st : s.points[i].word.steps) {
      steps.push_back(ojson{{"field", F.fields[st.field].label()}, {"t", st.t}});
    }
    words.push_back(ojson{{"id", i}, {"word", steps}});
  }
  const auto dot = csv.find_last_of('.');
  const std::string sidecar = csv.substr(0, dot) + ".words.json";
  write_file(csv, body);
  write_file(sidecar, emit_json(words));
  result["cloud_csv"] = csv;
  result["words_json"] = sidecar;
}

struct Outcome
{
  bool pass{true};
  ojson result = ojson::object();
};

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct FlowArgs
{
  std::string field, point;
  std::optional<double> t;
  double horizon{10.0};
};

inline Outcome cmd_flow(const Context & ctx, const FlowArgs & a)
{
  const TangentField & X = ctx.sc.field(a.field);
  const Point x = ctx.point(a.point);
  const auto opt = ctx.sc.tol.flow();
  Outcome o;
  o.result["field"] = a.field;
  o.result["basepoint"] = to_json(x);
  const IntegralCurve c = integrate(ctx.sc.space, X, x, a.horizon, opt);
  o.result["t_minus"] = c.t_minus;
  o.result["t_plus"] = c.t_plus;
  o.result["clipped_minus"] = c.clipped_minus;
  o.result["clipped_plus"] = c.clipped_plus;
  auto exit_json = [](const std::optional<ExitWitness> & w) -> ojson {
    if (!w) { return nullptr; }
    ojson e{{"t_inside", w->t_inside}, {"inside", to_json(w->inside)}, {"t_outside", w->t_outside}};
    e["outside"] = w->outside ? to_json(*w->outside) : ojson(nullptr);
    e["violated"] = w->violated;
    e["closed_endpoint"] = w->closed_endpoint;
    return e;
  };
  o.result["exit_minus"] = exit_json(c.exit_minus);
  o.result["exit_plus"] = exit_json(c.exit_plus);
  o.result["samples"] = c.samples.size();
  if (a.t) {
    try {
      o.result["image"] = to_json(flow_map(ctx.sc.space, X, *a.t, x, opt));
    } catch (const FlowExitError & e) {
      o.pass = false;
      o.result["image"] = nullptr;
      o.result["exit"] = e.what();
    }
  }
  const auto [report, csv] = ctx.output_paths();
  if (!csv.empty()) {
    std::string body = csv_header(ctx.sc.dim, nullptr, true);
    for (const auto & [t, p] : c.samples) {
      body += csv_number(t);
      for (Eigen::Index k = 0; k < p.size(); ++k) { body += "," + csv_number(p(k)); }
      body += "\n";
    }
    write_file(csv, body);
    o.result["curve_csv"] = csv;
  }
  return o;
}

struct ClassifyArgs
{
  std::string field;
  std::vector<std::string> points;
  int samples{16};
};

inline Outcome cmd_classify(const Context & ctx, const ClassifyArgs & a)
{
  ProbeOptions po;
  po.seeds = a.points.empty() ? ctx.seed_points() : ctx.points(a.points);
  if (po.seeds.empty()) { throw UsageError("classify needs --point or scenario seeds"); }
  po.samples = a.samples;
  po.rng_seed = ctx.seed;
  po.injectivity_bound = ctx.sc.tol["injectivity"];
  po.flow = ctx.sc.tol.flow();
  const auto v = classify_vector_field(ctx.sc.space, ctx.sc.field(a.field), po);
  Outcome o;
  o.pass = v.classification == Classification::VectorField;
  o.result["field"] = a.field;
  o.result["verdict"] = classification_name(v.classification);
  if (v.witness) {
    o.result["witness"] = ojson{{"point", to_json(v.witness->point)}, {"description", v.witness->description}};
  } else {
    o.result["witness"] = nullptr;
  }
  o.result["probes_run"] = v.probes_run;
  o.result["finest_escape"] = v.finest_escape;
  o.result["notes"] = v.notes;
  return o;
}

struct BracketArgs
{
  std::string fields;
  std::string functions;
  std::vector<std::string> points;
  bool reduced{false};
};

inline Outcome cmd_bracket(const Context & ctx, const BracketArgs & a)
{
  Outcome o;
  if (!a.functions.empty()) {
    const auto fs = split(a.functions, ';');
    if (fs.size() != 2) { throw UsageError("--functions needs two expressions separated by ';'"); }
    const PoissonStructure * P = nullptr;
    ReductionResult red;
    int dim = ctx.sc.dim;
    VariableNames names = ctx.sc.names;
    if (a.reduced) {
      if (!ctx.sc.reduction) { throw UsageError("scenario has no reduction"); }
      red = reduce(ctx.sc.reduction->setup);
      P = &red.reduced;
      dim = P->dim();
      names = ctx.sc.reduction->names;
    } else {
      if (!ctx.sc.poisson) { throw UsageError("scenario has no poisson structure"); }
      P = &*ctx.sc.poisson;
    }
    const SmoothExpr b = bracket(*P, ctx.expr(fs[0], dim, names), ctx.expr(fs[1], dim, names));
    o.result["kind"] = "poisson";
    o.result["f"] = fs[0];
    o.result["g"] = fs[1];
    o.result["bracket"] = b.str(names);
    ojson vals = ojson::array();
    for (const auto & x : ctx.points(a.points, dim)) { vals.push_back(ojson{{"point", to_json(x)}, {"value", b(x)}}); }
    o.result["values"] = vals;
    return o;
  }
  const auto fs = split(a.fields, ',');
  if (fs.size() != 2) { throw UsageError("bracket needs --fields A,B or --functions 'f;g'"); }
  const TangentField br = lie_bracket(ctx.sc.field(fs[0]), ctx.sc.field(fs[1]));
  o.result["kind"] = "lie";
  o.result["fields"] = fs;
  ojson comps = ojson::array();
  for (const auto & c : br.components()) { comps.push_back(c.str(ctx.sc.names)); }
  o.result["components"] = comps;
  ojson vals = ojson::array();
  for (const auto & x : ctx.points(a.points)) { vals.push_back(ojson{{"point", to_json(x)}, {"value", to_json(br.value_at(x))}}); }
  o.result["values"] = vals;
  return o;
}

struct OrbitArgs
{
  std::string family, field, point;
  int budget{200};
  double step_scale{0.5};
};

inline Outcome cmd_orbit(const Context & ctx, const OrbitArgs & a)
{
  const FieldFamily F = ctx.family(a.family, a.field);
  const Point x = ctx.point(a.point);
  const auto s = sample_orbit(F, x, a.budget, a.step_scale, ctx.seed, ctx.orbit);
  Outcome o;
  o.result["family"] = a.family.empty() ? a.field : a.family;
  o.result["seed_point"] = to_json(x);
  o.result["points"] = s.points.size();
  o.result["est_dimension"] = s.est_dimension;
  double resid = 0.0;
  for (const auto & p : s.points) { resid = std::max(resid, detail::stratum_violation(F.space, p.point)); }
  o.result["max_constraint_violation"] = resid;
  o.result["diagnostics"] = ojson{{"rounds", s.diagnostics.rounds},
                                  {"candidates", s.diagnostics.candidates},
                                  {"exits", s.diagnostics.exits},
                                  {"merged", s.diagnostics.merged}};
  write_cloud(ctx, s, F, o.result);
  return o;
}

struct ChartArgs
{
  std::string family, field, point, basis;
};

inline Outcome cmd_chart(const Context & ctx, const ChartArgs & a)
{
  const FieldFamily F = ctx.family(a.family, a.field);
  std::vector<int> basis;
  if (a.basis.empty()) {
    for (std::size_t i = 0; i < F.size(); ++i) { basis.push_back(static_cast<int>(i)); }
  } else {
    for (const auto & b : split(a.basis, ',')) {
      try {
        basis.push_back(std::stoi(b));
      } catch (const std::exception &) {
        throw UsageError("invalid basis index '" + b + "'");
      }
    }
  }
  for (int b : basis) {
    if (b < 0 || b >= static_cast<int>(F.size())) { throw UsageError("basis index out of range"); }
  }
  const Chart c = chart_jacobian(F, basis, ctx.point(a.point), ctx.sc.tol["fd_step"], ctx.orbit);
  Outcome o;
  o.result["basis"] = basis;
  o.result["basepoint"] = to_json(c.basepoint);
  o.result["jacobian_fd"] = to_json(c.jacobian_fd);
  o.result["jacobian_fields"] = to_json(c.jacobian_fields);
  o.result["agreement"] = c.agreement;
  o.result["rank"] = c.rank;
  o.pass = c.agreement <= ctx.sc.tol["chart"] && c.rank == static_cast<int>(basis.size());
  return o;
}

struct CompleteArgs
{
  std::string family, field;
  std::vector<std::string> points;
  int random{50};
  double t_scale{0.5};
  int dimension_probes{50};
};

inline Outcome cmd_complete(const Context & ctx, const CompleteArgs & a)
{
  const FieldFamily F = ctx.family(a.family, a.field);
  CompletenessSpec spec;
  spec.base_points = a.points.empty() ? ctx.seed_points() : ctx.points(a.points);
  if (spec.base_points.empty()) { throw UsageError("complete-probe needs --point or scenario seeds"); }
  spec.random_probes = a.random;
  spec.t_scale = a.t_scale;
  spec.rng_seed = ctx.seed;
  spec.tol = ctx.sc.tol["completeness"];
  const auto rep = local_completeness_probe(F, spec, ctx.orbit);
  Outcome o;
  o.pass = rep.pass;
  o.result["family"] = a.family.empty() ? a.field : a.family;
  o.result["probes_run"] = rep.probes_run;
  o.result["skipped"] = rep.skipped;
  o.result["max_residual"] = rep.max_residual;
  if (rep.witness) {
    const auto & w = *rep.witness;
    o.result["witness"] = ojson{{"flow_field", F.fields[w.probe.flow_field].label()},
                                {"pushed_field", F.fields[w.probe.pushed_field].label()},
                                {"base", to_json(w.probe.base)},
                                {"t", w.probe.t},
                                {"image", to_json(w.image)},
                                {"vector", to_json(w.vector)},
                                {"residual", w.residual}};
  } else {
    o.result["witness"] = nullptr;
  }
  ojson dims = ojson::array();
  for (const auto & x : spec.base_points) {
    const auto d = dimension_constancy_report(F, x, a.dimension_probes, ctx.seed, a.t_scale, ctx.orbit);
    dims.push_back(ojson{{"seed", to_json(x)},
                         {"dimensions", std::vector<int>(d.dimensions.begin(), d.dimensions.end())},
                         {"constant", d.constant()}});
  }
  o.result["dimension_reports"] = dims;
  return o;
}

struct StrataArgs
{
  std::string check{"frontier"};
  std::string field, family;
  std::vector<std::string> points;
  int budget{1000};
  double step_scale{0.3};
};

inline Outcome cmd_strata(const Context & ctx, const StrataArgs & a)
{
  if (!ctx.sc.strata || !ctx.sc.sampler) { throw UsageError("scenario has no strata"); }
  const StratifiedSpace & SS = *ctx.sc.strata;
  StratumSampler sm = *ctx.sc.sampler;
  sm.seed = ctx.seed;
  Outcome o;
  o.result["check"] = a.check;
  o.result["locally_trivial_declared"] = SS.locally_trivial;
  if (a.check == "frontier") {
    const auto rep = frontier_check(SS, sm, ctx.sc.tol["frontier"]);
    o.pass = rep.pass;
    ojson samples = ojson::object();
    for (const auto & [k, v] : rep.samples) { samples[k] = v; }
    o.result["samples"] = samples;
    ojson contacts = ojson::array();
    for (const auto & c : rep.contacts) {
      contacts.push_back(ojson{{"stratum", c.stratum}, {"closure_of", c.closure_of}, {"contact_samples", c.contact_samples}, {"samples", c.samples}});
    }
    o.result["contacts"] = contacts;
    ojson viol = ojson::array();
    for (const auto & v : rep.violations) {
      viol.push_back(ojson{{"kind", v.kind}, {"stratum", v.stratum}, {"other", v.other}, {"witness", to_json(v.witness)}});
    }
    o.result["violations"] = viol;
  } else if (a.check == "tangency") {
    const TangentField & X = ctx.sc.field(a.field);
    const auto rep = strongly_stratified_check(SS, X, sm, ctx.sc.tol["horizon"], ctx.sc.tol["tangency"], ctx.sc.tol.flow());
    o.pass = rep.pass;
    o.result["field"] = a.field;
    o.result["horizon"] = rep.horizon;
    o.result["threshold"] = rep.threshold;
    ojson st = ojson::array();
    for (const auto & d : rep.strata) {
      st.push_back(ojson{{"stratum", d.stratum},
                         {"samples", d.samples},
                         {"max_drift", d.max_drift},
                         {"witness", d.witness ? to_json(*d.witness) : ojson(nullptr)}});
    }
    o.result["strata"] = st;
    o.result["failures"] = rep.failures;
  } else if (a.check == "orbits") {
    const auto fields = a.family.empty() ? std::vector<TangentField>{ctx.sc.field(a.field)} : ctx.sc.family(a.family);
    const auto seeds = a.points.empty() ? ctx.seed_points() : ctx.points(a.points);
    o.result["family"] = a.family.empty() ? a.field : a.family;
    OrbitStrataReport rep;
    try {
      rep = orbit_vs_strata(SS, fields, seeds, a.budget, a.step_scale, ctx.seed, sm, 0.25, ctx.orbit);
    } catch (const PreconditionError & e) {
      o.pass = false;
      o.result["rejected"] = e.what();
      return o;
    }
    o.pass = rep.pass;
    ojson sj = ojson::array();
    for (const auto & r : rep.seeds) {
      sj.push_back(ojson{{"seed", to_json(r.seed)},
                         {"stratum", r.stratum},
                         {"declared_dim", r.declared_dim},
                         {"points", r.points},
                         {"escaped", r.escaped},
                         {"escape_witness", r.escape_witness ? to_json(*r.escape_witness) : ojson(nullptr)},
                         {"est_dimension", r.est_dimension},
                         {"coverage", r.coverage}});
    }
    o.result["seeds"] = sj;
  } else {
    throw UsageError("--check must be frontier, tangency or orbits");
  }
  return o;
}

/// Structure and space selected by --reduced.
struct PoissonTarget
{
  PoissonStructure P;
  SubcartesianSpace S;
  VariableNames names;
  std::vector<SmoothExpr> casimirs;
  std::optional<ReductionResult> reduction;
};

inline PoissonTarget poisson_target(const Context & ctx, bool reduced)
{
  if (reduced) {
    if (!ctx.sc.reduction) { throw UsageError("scenario has no reduction"); }
    auto r = reduce(ctx.sc.reduction->setup);
    PoissonTarget t{r.reduced, r.space.with_tol(ctx.sc.reduction->tol), ctx.sc.reduction->names, ctx.sc.reduction->casimirs, r};
    return t;
  }
  if (!ctx.sc.poisson) { throw UsageError("scenario has no poisson structure"); }
  return {*ctx.sc.poisson, ctx.sc.space, ctx.sc.names, ctx.sc.casimirs, std::nullopt};
}

/// Random polynomial of degree ≤ 2 with small integer coefficients.
template<class Rng>
SmoothExpr random_polynomial(int n, Rng & rng)
{
  std::uniform_int_distribution<int> coef(-3, 3);
  SmoothExpr p = constant(static_cast<double>(coef(rng)));
  for (int i = 0; i < n; ++i) {
    if (const int c = coef(rng)) { p = p + constant(c) * var(i); }
    for (int k = i; k < n; ++k) {
      if (const int c = coef(rng)) { p = p + constant(c) * var(i) * var(k); }
    }
  }
  return p;
}

struct PoissonArgs
{
  std::string check{"jacobi"};
  bool reduced{false};
  int triples{50};
  int samples{20};
  std::string function, h, f1, f2, point;
  std::vector<double> times{1.0};
};

inline Outcome cmd_poisson(const Context & ctx, const PoissonArgs & a)
{
  const PoissonTarget T = poisson_target(ctx, a.reduced);
  const int n = T.P.dim();
  Outcome o;
  o.result["check"] = a.check;
  o.result["structure"] = a.reduced ? "reduced" : "scenario";
  std::mt19937_64 rng(ctx.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<Point> pts;
  for (int i = 0; i < a.samples; ++i) {
    Point x(n);
    for (int k = 0; k < n; ++k) { x(k) = unif(rng); }
    pts.push_back(std::move(x));
  }
  if (a.check == "jacobi") {
    double worst = 0.0;
    ojson witness = nullptr;
    auto run = [&](const SmoothExpr & f1, const SmoothExpr & f2, const SmoothExpr & f3) {
      for (const auto & x : pts) {
        const double r = jacobi_residual(T.P, f1, f2, f3, {x});
        if (r > worst) {
          worst = r;
          witness = ojson{{"f1", f1.str(T.names)}, {"f2", f2.str(T.names)}, {"f3", f3.str(T.names)}, {"point", to_json(x)}};
        }
      }
    };
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (int k = j + 1; k < n; ++k) { run(var(i), var(j), var(k)); }
      }
    }
    for (int t = 0; t < a.triples; ++t) {
      const SmoothExpr f1 = random_polynomial(n, rng), f2 = random_polynomial(n, rng), f3 = random_polynomial(n, rng);
      run(f1, f2, f3);
    }
    o.result["triples"] = a.triples;
    o.result["points"] = pts.size();
    o.result["antisymmetry_residual"] = T.P.antisymmetry_residual(pts);
    o.result["max_residual"] = worst;
    o.result["witness"] = witness;
    o.pass = worst <= ctx.sc.tol["jacobi"];
  } else if (a.check == "hamiltonian") {
    const SmoothExpr f = ctx.expr(a.function, n, T.names);
    const TangentField X = hamiltonian_field(T.P, f);
    ojson comps = ojson::array();
    for (const auto & c : X.components()) { comps.push_back(c.str(T.names)); }
    double cert = 0.0;
    for (int i = 0; i < n; ++i) {
      const SmoothExpr d = apply(X, var(i)) - bracket(T.P, f, var(i));
      for (const auto & x : pts) { cert = std::max(cert, std::abs(d(x))); }
    }
    o.result["function"] = a.function;
    o.result["components"] = comps;
    o.result["certification_residual"] = cert;
    o.pass = cert <= 1e-12;
  } else if (a.check == "invariance") {
    const SmoothExpr h = ctx.expr(a.h, n, T.names), f1 = ctx.expr(a.f1, n, T.names), f2 = ctx.expr(a.f2, n, T.names);
    const Point x = ctx.point(a.point, n);
    ojson rows = ojson::array();
    double worst = 0.0;
    for (double t : a.times) {
      const auto r = invariance_residual(T.P, h, f1, f2, t, x, T.S, ctx.sc.tol.flow());
      worst = std::max(worst, r.residual);
      rows.push_back(ojson{{"t", t}, {"image", to_json(r.image)}, {"residual", r.residual}, {"error_bar", r.error_bar}});
    }
    o.result["h"] = a.h;
    o.result["f1"] = a.f1;
    o.result["f2"] = a.f2;
    o.result["point"] = to_json(x);
    o.result["results"] = rows;
    o.pass = worst <= ctx.sc.tol["completeness"];
  } else {
    throw UsageError("--check must be jacobi, hamiltonian or invariance");
  }
  return o;
}

inline Outcome cmd_reduce(const Context & ctx)
{
  if (!ctx.sc.reduction) { throw UsageError("scenario has no reduction"); }
  const auto & d = *ctx.sc.reduction;
  Outcome o;
  ojson inv = ojson::array();
  for (const auto & s : d.setup.invariants) { inv.push_back(s.str()); }
  o.result["invariants"] = inv;
  o.result["degree"] = d.setup.degree;
  try {
    const auto r = reduce(d.setup);
    ojson table = ojson::array();
    for (int a = 0; a < r.reduced.dim(); ++a) {
      for (int b = a + 1; b < r.reduced.dim(); ++b) {
        table.push_back(ojson{{"a", d.names[a]}, {"b", d.names[b]}, {"bracket", r.reduced(a, b).str(d.names)}});
      }
    }
    o.result["table"] = table;
    o.result["certification_points"] = r.certification_points;
    o.result["certification_residual"] = r.certification_residual;
  } catch (const ReductionError & e) {
    o.pass = false;
    o.result["rejected"] = e.what();
    if (e.pair().first >= 0) { o.result["pair"] = ojson::array({d.names[e.pair().first], d.names[e.pair().second]}); }
  }
  return o;
}

struct LeafArgs
{
  std::string generators, point;
  bool reduced{false};
  int budget{500};
  double step_scale{0.2};
};

inline Outcome cmd_leaf(const Context & ctx, const LeafArgs & a)
{
  const PoissonTarget T = poisson_target(ctx, a.reduced);
  const int n = T.P.dim();
  std::vector<SmoothExpr> gens;
  for (const auto & g : split(a.generators, ';')) { gens.push_back(ctx.expr(g, n, T.names)); }
  if (gens.empty()) { throw UsageError("--generators needs at least one expression"); }
  const Point x = ctx.point(a.point, n);
  const auto L = leaf_sample(T.S, T.P, gens, x, a.budget, a.step_scale, ctx.seed, T.casimirs, ctx.orbit);
  Outcome o;
  o.result["structure"] = a.reduced ? "reduced" : "scenario";
  o.result["seed_point"] = to_json(x);
  o.result["points"] = L.sample.points.size();
  o.result["est_dimension"] = L.sample.est_dimension;
  double resid = 0.0;
  for (const auto & p : L.sample.points) { resid = std::max(resid, detail::stratum_violation(T.S, p.point)); }
  o.result["max_constraint_violation"] = resid;
  ojson cas = ojson::array();
  double worst = 0.0;
  for (const auto & c : L.casimirs) {
    cas.push_back(ojson{{"casimir", c.casimir.str(T.names)}, {"max_drift", c.max_drift}});
    worst = std::max(worst, c.max_drift);
  }
  o.result["casimirs"] = cas;
  o.pass = worst <= ctx.sc.tol["casimir"] && resid <= ctx.sc.tol["casimir"];
  std::vector<TangentField> fields;
  for (const auto & g : gens) { fields.push_back(hamiltonian_field(T.P, g, g.str(T.names))); }
  write_cloud(ctx, L.sample, FieldFamily(fields, T.S), o.result);
  return o;
}

struct AcsArgs
{
  std::string check{"torsion"};
  std::string fields, family, f, h;
  std::vector<std::string> points;
  int samples{50};
};

inline Outcome cmd_acs(const Context & ctx, const AcsArgs & a)
{
  if (!ctx.sc.acs) { throw UsageError("scenario has no almost complex structure"); }
  const AlmostComplexStructure & J = *ctx.sc.acs;
  std::vector<Point> pts = ctx.points(a.points);
  if (pts.empty()) {
    std::mt19937_64 rng(ctx.seed);
    pts = sample_ball(ctx.sc.space, Point::Zero(ctx.sc.dim), 1.0, a.samples, rng);
  }
  if (pts.empty()) { throw UsageError("no sample points for acs"); }
  const double tol = ctx.sc.tol["acs"];
  Outcome o;
  o.result["check"] = a.check;
  o.result["points"] = pts.size();
  o.result["square_residual"] = J.square_residual(pts);
  auto pair = [&]() {
    const auto fs = split(a.fields, ',');
    if (fs.size() != 2) { throw UsageError("--fields needs A,B"); }
    return std::make_pair(ctx.sc.field(fs[0]), ctx.sc.field(fs[1]));
  };
  if (a.check == "torsion") {
    const auto [X, Y] = pair();
    const TangentField N = torsion(J, X, Y);
    ojson comps = ojson::array();
    for (const auto & c : N.components()) { comps.push_back(c.str(ctx.sc.names)); }
    o.result["components"] = comps;
    ojson vals = ojson::array();
    double worst = 0.0;
    for (const auto & x : pts) {
      const Point v = N.value_at(x);
      worst = std::max(worst, v.norm());
      vals.push_back(ojson{{"point", to_json(x)}, {"value", to_json(v)}});
    }
    o.result["values"] = vals;
    o.result["max_norm"] = worst;
    o.result["integrable_at_samples"] = worst <= tol;
    o.pass = worst <= tol;
  } else if (a.check == "tensor") {
    const auto [X, Y] = pair();
    const double r = tensoriality_residual(J, X, Y, ctx.expr(a.f), ctx.expr(a.h), pts);
    o.result["residual"] = r;
    o.pass = r <= tol;
  } else if (a.check == "eigen") {
    const auto [X, Y] = pair();
    const double r = eigenspace_closure_residual(J, X, Y, pts);
    const TangentField N = torsion(J, X, Y);
    double quarter = 0.0;
    for (const auto & x : pts) { quarter = std::max(quarter, N.value_at(x).norm() / 4.0); }
    o.result["eigenspace_residual"] = r;
    o.result["torsion_norm_quarter"] = quarter;
    o.result["agreement"] = std::abs(r - quarter);
    o.pass = std::abs(r - quarter) <= tol;
  } else if (a.check == "cr") {
    const FieldFamily F = ctx.family(a.family, "");
    const double r = cauchy_riemann_residual(J, F, ctx.expr(a.f), ctx.expr(a.h), pts);
    o.result["residual"] = r;
    o.pass = r <= tol;
  } else if (a.check == "kahler") {
    const FieldFamily F = ctx.family(a.family, "");
    ExprMatrix omega;
    if (ctx.sc.form) {
      omega = *ctx.sc.form;
    } else if (ctx.sc.poisson) {
      omega = form_from_constant_bivector(*ctx.sc.poisson);
    } else {
      throw UsageError("kahler needs acs.form or a constant poisson bivector");
    }
    const auto k = kahler_check(J, omega, F, pts, tol);
    o.result["compatibility"] = k.compatibility;
    o.result["symmetry"] = k.symmetry;
    o.result["min_eigenvalue"] = k.min_eigenvalue;
    o.result["positive"] = k.positive;
    o.result["torsion"] = k.torsion;
    o.result["verdict"] = k.verdict;
    o.pass = k.kahler;
  } else {
    throw UsageError("--check must be torsion, tensor, eigen, cr or kahler");
  }
  return o;
}

inline int worker_threads()
{
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char * env = std::getenv("SUBCART_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) { n = std::min(n, cap); }
  }
  return n;
}

}  // namespace cli_detail

/// Run the command line; returns the process exit code.
inline int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err)
{
  using namespace cli_detail;
  CLI::App app{"Executable constructions on subcartesian spaces", "subcart"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string scenario_path, out_path, tol_overrides;
  std::uint64_t seed = 0;
  app.add_option("--scenario", scenario_path, "Scenario JSON file")->required();
  app.add_option("--out", out_path, "Report path (a .csv path puts the point cloud there and the report next to it)");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--tol-overrides", tol_overrides, "Comma-separated name=value tolerance overrides");

  FlowArgs flow;
  auto * c_flow = app.add_subcommand("flow", "Integrate a field through a point");
  c_flow->add_option("--field", flow.field)->required();
  c_flow->add_option("--point", flow.point)->required();
  c_flow->add_option("--t", flow.t, "Evaluate the flow map at this time");
  c_flow->add_option("--horizon", flow.horizon);

  ClassifyArgs classify;
  auto * c_classify = app.add_subcommand("classify", "Decide whether a derivation is a vector field");
  c_classify->add_option("--field", classify.field)->required();
  c_classify->add_option("--point", classify.points);
  c_classify->add_option("--samples", classify.samples);

  BracketArgs bracket_args;
  auto * c_bracket = app.add_subcommand("bracket", "Lie bracket of two fields or Poisson bracket of two functions");
  c_bracket->add_option("--fields", bracket_args.fields);
  c_bracket->add_option("--functions", bracket_args.functions);
  c_bracket->add_option("--point", bracket_args.points);
  c_bracket->add_flag("--reduced", bracket_args.reduced);

  OrbitArgs orbit;
  auto * c_orbit = app.add_subcommand("orbit", "Sample the orbit of a family through a point");
  c_orbit->add_option("--family", orbit.family);
  c_orbit->add_option("--field", orbit.field);
  c_orbit->add_option("--point", orbit.point)->required();
  c_orbit->add_option("--budget", orbit.budget);
  c_orbit->add_option("--step-scale", orbit.step_scale);

  ChartArgs chart;
  auto * c_chart = app.add_subcommand("chart", "Certify the differential of an orbit chart");
  c_chart->add_option("--family", chart.family);
  c_chart->add_option("--field", chart.field);
  c_chart->add_option("--point", chart.point)->required();
  c_chart->add_option("--basis", chart.basis, "Comma-separated field indices");

  CompleteArgs complete;
  auto * c_complete = app.add_subcommand("complete-probe", "Probe local completeness and dimension constancy");
  c_complete->add_option("--family", complete.family);
  c_complete->add_option("--field", complete.field);
  c_complete->add_option("--point", complete.points);
  c_complete->add_option("--random", complete.random);
  c_complete->add_option("--t-scale", complete.t_scale);
  c_complete->add_option("--dimension-probes", complete.dimension_probes);

  StrataArgs strata;
  auto * c_strata = app.add_subcommand("strata", "Check a declared stratification");
  c_strata->add_option("--check", strata.check)->check(CLI::IsMember({"frontier", "tangency", "orbits"}));
  c_strata->add_option("--field", strata.field);
  c_strata->add_option("--family", strata.family);
  c_strata->add_option("--point", strata.points);
  c_strata->add_option("--budget", strata.budget);
  c_strata->add_option("--step-scale", strata.step_scale);

  PoissonArgs poisson;
  auto * c_poisson = app.add_subcommand("poisson", "Jacobi, Hamiltonian and invariance checks");
  c_poisson->add_option("--check", poisson.check)->check(CLI::IsMember({"jacobi", "hamiltonian", "invariance"}));
  c_poisson->add_flag("--reduce,--reduced", poisson.reduced, "Use the reduced structure");
  c_poisson->add_option("--triples", poisson.triples);
  c_poisson->add_option("--samples", poisson.samples);
  c_poisson->add_option("--function", poisson.function);
  c_poisson->add_option("--hamiltonian", poisson.h);
  c_poisson->add_option("--f1", poisson.f1);
  c_poisson->add_option("--f2", poisson.f2);
  c_poisson->add_option("--point", poisson.point);
  c_poisson->add_option("--t", poisson.times);

  auto * c_reduce = app.add_subcommand("reduce", "Reduced bracket table on invariant space");

  LeafArgs leaf;
  auto * c_leaf = app.add_subcommand("leaf", "Sample a symplectic leaf");
  c_leaf->add_option("--generators", leaf.generators, "Semicolon-separated functions")->required();
  c_leaf->add_option("--point", leaf.point)->required();
  c_leaf->add_flag("--reduced", leaf.reduced);
  c_leaf->add_option("--budget", leaf.budget);
  c_leaf->add_option("--step-scale", leaf.step_scale);

  AcsArgs acs;
  auto * c_acs = app.add_subcommand("acs", "Almost complex structure checks");
  c_acs->add_option("--check", acs.check)->check(CLI::IsMember({"torsion", "tensor", "eigen", "cr", "kahler"}));
  c_acs->add_option("--fields", acs.fields);
  c_acs->add_option("--family", acs.family);
  c_acs->add_option("--f", acs.f);
  c_acs->add_option("--g", acs.h);
  c_acs->add_option("--point", acs.points);
  c_acs->add_option("--samples", acs.samples);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError & e) {
    err << "subcart: " << e.what() << "\n";
    return 2;
  }

  Context ctx;
  ctx.seed = seed;
  ctx.out_path = out_path;
  std::string command;
  try {
    ctx.sc = load_scenario(scenario_path);
    if (!tol_overrides.empty()) { ctx.sc.tol.apply_overrides(tol_overrides); }
    ctx.orbit.flow = ctx.sc.tol.flow();
    ctx.orbit.merge_radius = ctx.sc.tol["merge_radius"];
    ctx.orbit.rank_tol = ctx.sc.tol["rank"];
    ctx.orbit.threads = worker_threads();

    Outcome o;
    CLI::App * sub = app.get_subcommands().front();
    command = sub->get_name();
    if (sub == c_flow) {
      o = cmd_flow(ctx, flow);
    } else if (sub == c_classify) {
      o = cmd_classify(ctx, classify);
    } else if (sub == c_bracket) {
      o = cmd_bracket(ctx, bracket_args);
    } else if (sub == c_orbit) {
      o = cmd_orbit(ctx, orbit);
    } else if (sub == c_chart) {
      o = cmd_chart(ctx, chart);
    } else if (sub == c_complete) {
      o = cmd_complete(ctx, complete);
    } else if (sub == c_strata) {
      o = cmd_strata(ctx, strata);
    } else if (sub == c_poisson) {
      o = cmd_poisson(ctx, poisson);
    } else if (sub == c_reduce) {
      o = cmd_reduce(ctx);
    } else if (sub == c_leaf) {
      o = cmd_leaf(ctx, leaf);
    } else {
      o = cmd_acs(ctx, acs);
    }

    ojson report;
    report["command"] = command;
    report["scenario"] = ojson{{"name", ctx.sc.name}, {"hash", ctx.sc.hash}};
    report["seed"] = seed;
    ojson tol = ojson::object();
    for (const auto & [k, v] : ctx.sc.tol.values) { tol[k] = v; }
    tol["membership"] = ctx.sc.space.tol();
    report["tolerances"] = tol;
    report["status"] = o.pass ? "PASS" : "FAIL";
    report["result"] = o.result;
    const std::string text = emit_json(report);
    const auto [report_path, csv] = ctx.output_paths();
    if (report_path.empty()) {
      out << text;
    } else {
      write_file(report_path, text);
    }
    return o.pass ? 0 : 1;
  } catch (const SchemaError & e) {
    err << "subcart: schema error at " << e.what() << "\n";
    return 2;
  } catch (const UsageError & e) {
    err << "subcart: " << e.what() << "\n";
    return 2;
  } catch (const std::ios_base::failure & e) {
    err << "subcart: " << e.what() << "\n";
    return 2;
  } catch (const Error & e) {
    if (command.empty()) {
      err << "subcart: " << e.what() << "\n";
      return 2;
    }
    ojson report;
    report["command"] = command;
    report["scenario"] = ojson{{"name", ctx.sc.name}, {"hash", ctx.sc.hash}};
    report["seed"] = seed;
    report["status"] = "FAIL";
    report["error"] = e.what();
    const std::string text = emit_json(report);
    const auto [report_path, csv] = ctx.output_paths();
    try {
      if (report_path.empty()) {
        out << text;
      } else {
        write_file(report_path, text);
      }
    } catch (const std::ios_base::failure & io) {
      err << "subcart: " << io.what() << "\n";
      return 2;
    }
    return 1;
  }
}

inline int run(int argc, char ** argv)
{
  return run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}

}  // namespace subcart
