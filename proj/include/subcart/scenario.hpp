#pragma once

/**
 * @file
 * @brief Scenario files: JSON description of a space, its fields, families,
 * strata, Poisson data and almost complex structure, validated at load time.
 */

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "subcart/almostcomplex.hpp"
#include "subcart/strata.hpp"

namespace subcart {

/// Named numeric tolerances used by the commands; all can be overridden.
struct Tolerances
{
  std::map<std::string, double> values{
      {"rtol", 1e-9},         {"atol", 1e-12},        {"max_step", 0.1},      {"exit_tol", 1e-12},
      {"rank", 1e-8},         {"merge_radius", 1e-6}, {"frontier", 1e-4},     {"tangency", 1e-6},
      {"horizon", 0.1},       {"fd_step", 1e-6},      {"completeness", 1e-6}, {"chart", 1e-5},
      {"casimir", 1e-6},      {"acs", 1e-10},         {"jacobi", 1e-8},       {"injectivity", 1e-3},
  };

  double operator[](const std::string & k) const
  {
    auto it = values.find(k);
    if (it == values.end()) { throw PreconditionError("unknown tolerance '" + k + "'"); }
    return it->second;
  }

  void set(const std::string & k, double v)
  {
    if (!values.count(k)) { throw UsageError("unknown tolerance '" + k + "'"); }
    if (!(v > 0.0)) { throw UsageError("tolerance '" + k + "' must be positive"); }
    values[k] = v;
  }

  /// Apply "name=value,name=value".
  void apply_overrides(const std::string & spec)
  {
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) { continue; }
      const auto eq = item.find('=');
      if (eq == std::string::npos) { throw UsageError("tolerance override '" + item + "' is not name=value"); }
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(item.substr(eq + 1), &used);
        if (used != item.size() - eq - 1) { throw std::invalid_argument("trailing"); }
      } catch (const std::exception &) {
        throw UsageError("tolerance override '" + item + "' has an invalid value");
      }
      set(item.substr(0, eq), v);
    }
  }

  FlowOptions flow() const
  {
    FlowOptions o;
    o.rtol = (*this)["rtol"];
    o.atol = (*this)["atol"];
    o.max_step = (*this)["max_step"];
    o.exit_tol = (*this)["exit_tol"];
    return o;
  }
};

struct ReductionData
{
  ReductionSetup setup;
  std::vector<SmoothExpr> casimirs;
  double tol{1e-7};
  VariableNames names;
};

struct Scenario
{
  std::string name;
  std::string hash;
  int dim{0};
  VariableNames names;
  SubcartesianSpace space;
  std::map<std::string, TangentField> fields;
  std::map<std::string, std::vector<std::string>> families;
  std::map<std::string, Point> seeds;
  std::optional<StratifiedSpace> strata;
  std::optional<StratumSampler> sampler;
  std::optional<PoissonStructure> poisson;
  std::vector<SmoothExpr> casimirs;
  std::optional<ReductionData> reduction;
  std::optional<AlmostComplexStructure> acs;
  std::optional<ExprMatrix> form;
  Tolerances tol;

  const TangentField & field(const std::string & n) const
  {
    auto it = fields.find(n);
    if (it == fields.end()) { throw UsageError("unknown field '" + n + "'"); }
    return it->second;
  }

  std::vector<TangentField> family(const std::string & n) const
  {
    auto it = families.find(n);
    if (it == families.end()) { throw UsageError("unknown family '" + n + "'"); }
    std::vector<TangentField> out;
    for (const auto & f : it->second) { out.push_back(field(f)); }
    return out;
  }
};

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
inline std::string fnv1a_hex(const std::string & bytes)
{
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

using json = nlohmann::json;

class Loader
{
public:
  explicit Loader(const json & root) : root_(root) {}

  Scenario load(const std::string & bytes)
  {
    Scenario sc;
    sc.hash = fnv1a_hex(bytes);
    require_object(root_, "");
    sc.name = root_.contains("name") ? str(root_["name"], "/name") : std::string("unnamed");
    sc.dim = integer(at(root_, "dim", ""), "/dim");
    if (sc.dim <= 0) { fail("/dim", "must be positive"); }
    if (root_.contains("variables")) {
      const auto & v = array(root_["variables"], "/variables");
      if (static_cast<int>(v.size()) != sc.dim) { fail("/variables", "needs one name per dimension"); }
      for (std::size_t i = 0; i < v.size(); ++i) { sc.names.push_back(str(v[i], "/variables/" + std::to_string(i))); }
    }
    names_ = sc.names;

    if (root_.contains("tolerances")) {
      const auto & t = root_["tolerances"];
      require_object(t, "/tolerances");
      for (auto it = t.begin(); it != t.end(); ++it) {
        const std::string p = "/tolerances/" + it.key();
        try {
          sc.tol.set(it.key(), number(it.value(), p));
        } catch (const UsageError & e) {
          fail(p, e.what());
        }
      }
    }

    const auto & sp = at(root_, "space", "");
    require_object(sp, "/space");
    const double mtol = sp.contains("tol") ? number(sp["tol"], "/space/tol") : 1e-9;
    const bool lc = sp.contains("locally_closed") ? boolean(sp["locally_closed"], "/space/locally_closed") : false;
    sc.space = SubcartesianSpace(sc.dim, cells(at(sp, "cells", "/space"), "/space/cells", sc.dim, names_), mtol, lc);

    if (root_.contains("fields")) {
      const auto & f = root_["fields"];
      require_object(f, "/fields");
      for (auto it = f.begin(); it != f.end(); ++it) {
        const std::string p = "/fields/" + it.key();
        if (it.value().is_object()) {
          deferred_.emplace_back(it.key(), p);
          continue;
        }
        const auto & comps = array(it.value(), p);
        if (static_cast<int>(comps.size()) != sc.dim) { fail(p, "needs " + std::to_string(sc.dim) + " components"); }
        std::vector<SmoothExpr> c;
        for (std::size_t i = 0; i < comps.size(); ++i) { c.push_back(expr(comps[i], p + "/" + std::to_string(i), sc.dim, names_)); }
        sc.fields.emplace(it.key(), TangentField(std::move(c), it.key()));
      }
    }

    if (root_.contains("seeds")) {
      const auto & s = root_["seeds"];
      require_object(s, "/seeds");
      for (auto it = s.begin(); it != s.end(); ++it) {
        sc.seeds.emplace(it.key(), point(it.value(), "/seeds/" + it.key(), sc.dim));
      }
    }

    if (root_.contains("strata")) { load_strata(sc); }
    for (const auto & [name, p] : deferred_) { load_extension(sc, name, p); }
    if (root_.contains("families")) {
      const auto & f = root_["families"];
      require_object(f, "/families");
      for (auto it = f.begin(); it != f.end(); ++it) {
        const std::string p = "/families/" + it.key();
        std::vector<std::string> members;
        const auto & arr = array(it.value(), p);
        for (std::size_t i = 0; i < arr.size(); ++i) {
          const std::string m = str(arr[i], p + "/" + std::to_string(i));
          if (!sc.fields.count(m)) { fail(p + "/" + std::to_string(i), "unknown field '" + m + "'"); }
          members.push_back(m);
        }
        sc.families.emplace(it.key(), std::move(members));
      }
    }
    if (root_.contains("poisson")) { load_poisson(sc); }
    if (root_.contains("reduction")) { load_reduction(sc); }
    if (root_.contains("acs")) { load_acs(sc); }
    return sc;
  }

private:
  [[noreturn]] static void fail(const std::string & path, const std::string & msg)
  {
    throw SchemaError(path.empty() ? "/" : path, msg);
  }

  static const json & at(const json & j, const char * key, const std::string & path)
  {
    if (!j.contains(key)) { fail(path + "/" + key, "missing required key"); }
    return j[key];
  }

  static void require_object(const json & j, const std::string & p)
  {
    if (!j.is_object()) { fail(p, "expected an object"); }
  }

  static const json & array(const json & j, const std::string & p)
  {
    if (!j.is_array()) { fail(p, "expected an array"); }
    return j;
  }

  static std::string str(const json & j, const std::string & p)
  {
    if (!j.is_string()) { fail(p, "expected a string"); }
    return j.get<std::string>();
  }

  static double number(const json & j, const std::string & p)
  {
    if (!j.is_number()) { fail(p, "expected a number"); }
    return j.get<double>();
  }

  static int integer(const json & j, const std::string & p)
  {
    if (!j.is_number_integer()) { fail(p, "expected an integer"); }
    return j.get<int>();
  }

  static bool boolean(const json & j, const std::string & p)
  {
    if (!j.is_boolean()) { fail(p, "expected a boolean"); }
    return j.get<bool>();
  }

  static SmoothExpr expr(const json & j, const std::string & p, int n, const VariableNames & names)
  {
    const std::string s = j.is_number() ? detail::format_number(j.get<double>()) : str(j, p);
    try {
      return parse(s, n, names);
    } catch (const Error & e) {
      fail(p, e.what());
    }
  }

  static Point point(const json & j, const std::string & p, int n)
  {
    const auto & a = array(j, p);
    if (static_cast<int>(a.size()) != n) { fail(p, "expected " + std::to_string(n) + " coordinates"); }
    Point x(n);
    for (int i = 0; i < n; ++i) { x(i) = number(a[i], p + "/" + std::to_string(i)); }
    return x;
  }

  static Constraint constraint(const json & j, const std::string & p, int n, const VariableNames & names)
  {
    require_object(j, p);
    const auto rel = relation_from_name(str(at(j, "rel", p), p + "/rel"));
    if (!rel) { fail(p + "/rel", "expected one of eq0, geq0, gt0, lt0, leq0"); }
    return {expr(at(j, "g", p), p + "/g", n, names), *rel};
  }

  static std::vector<Cell> cells(const json & j, const std::string & p, int n, const VariableNames & names)
  {
    std::vector<Cell> out;
    const auto & a = array(j, p);
    if (a.empty()) { fail(p, "needs at least one cell"); }
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string pc = p + "/" + std::to_string(i);
      Cell cell;
      const auto & c = array(a[i], pc);
      for (std::size_t k = 0; k < c.size(); ++k) { cell.push_back(constraint(c[k], pc + "/" + std::to_string(k), n, names)); }
      out.push_back(std::move(cell));
    }
    return out;
  }

  static ExprMatrix matrix(const json & j, const std::string & p, int n, const VariableNames & names)
  {
    const auto & rows = array(j, p);
    if (static_cast<int>(rows.size()) != n) { fail(p, "expected " + std::to_string(n) + " rows"); }
    ExprMatrix m;
    for (int i = 0; i < n; ++i) {
      const std::string pr = p + "/" + std::to_string(i);
      const auto & r = array(rows[i], pr);
      if (static_cast<int>(r.size()) != n) { fail(pr, "expected " + std::to_string(n) + " entries"); }
      std::vector<SmoothExpr> row;
      for (int k = 0; k < n; ++k) { row.push_back(expr(r[k], pr + "/" + std::to_string(k), n, names)); }
      m.push_back(std::move(row));
    }
    return m;
  }

  void load_strata(Scenario & sc)
  {
    StratifiedSpace ss;
    ss.total = sc.space;
    const auto & a = array(root_["strata"], "/strata");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string p = "/strata/" + std::to_string(i);
      require_object(a[i], p);
      Stratum s;
      s.name = str(at(a[i], "name", p), p + "/name");
      for (const auto & other : ss.strata) {
        if (other.name == s.name) { fail(p + "/name", "duplicate stratum name"); }
      }
      s.set = SubcartesianSpace(sc.dim, cells(at(a[i], "cells", p), p + "/cells", sc.dim, names_), sc.space.tol());
      s.dim = integer(at(a[i], "dim", p), p + "/dim");
      if (s.dim < 0 || s.dim > sc.dim) { fail(p + "/dim", "out of range"); }
      if (a[i].contains("frame")) {
        const auto & fr = array(a[i]["frame"], p + "/frame");
        for (std::size_t k = 0; k < fr.size(); ++k) {
          const std::string f = str(fr[k], p + "/frame/" + std::to_string(k));
          if (!sc.fields.count(f)) { fail(p + "/frame/" + std::to_string(k), "unknown field '" + f + "'"); }
          s.frame.push_back(sc.fields.at(f));
        }
      }
      ss.strata.push_back(std::move(s));
    }
    if (root_.contains("locally_trivial")) { ss.locally_trivial = boolean(root_["locally_trivial"], "/locally_trivial"); }
    StratumSampler sm;
    sm.center = Point::Zero(sc.dim);
    if (root_.contains("sampler")) {
      const auto & s = root_["sampler"];
      require_object(s, "/sampler");
      if (s.contains("center")) { sm.center = point(s["center"], "/sampler/center", sc.dim); }
      if (s.contains("radius")) { sm.radius = number(s["radius"], "/sampler/radius"); }
      if (s.contains("per_stratum")) { sm.per_stratum = integer(s["per_stratum"], "/sampler/per_stratum"); }
    }
    sc.strata = std::move(ss);
    sc.sampler = sm;
  }

  /// {"extend": {"stratum", "field", "center", "r_inner", "r_outer"}}: a bump-extended stratum field.
  void load_extension(Scenario & sc, const std::string & name, const std::string & p)
  {
    const auto & e = at(root_["fields"][name], "extend", p);
    const std::string pe = p + "/extend";
    require_object(e, pe);
    if (!sc.strata) { fail(pe, "extended fields need strata"); }
    const std::string stratum = str(at(e, "stratum", pe), pe + "/stratum");
    int idx = -1;
    for (std::size_t i = 0; i < sc.strata->strata.size(); ++i) {
      if (sc.strata->strata[i].name == stratum) { idx = static_cast<int>(i); }
    }
    if (idx < 0) { fail(pe + "/stratum", "unknown stratum '" + stratum + "'"); }
    const std::string base = str(at(e, "field", pe), pe + "/field");
    if (!sc.fields.count(base)) { fail(pe + "/field", "unknown or extended field '" + base + "'"); }
    const Point c = point(at(e, "center", pe), pe + "/center", sc.dim);
    const double ri = number(at(e, "r_inner", pe), pe + "/r_inner");
    const double ro = number(at(e, "r_outer", pe), pe + "/r_outer");
    try {
      sc.fields.emplace(name, extend_stratum_field(*sc.strata, idx, sc.fields.at(base), c, ri, ro).relabeled(name));
    } catch (const Error & ex) {
      fail(pe, ex.what());
    }
  }

  void load_poisson(Scenario & sc)
  {
    const auto & p = root_["poisson"];
    require_object(p, "/poisson");
    sc.poisson = PoissonStructure(matrix(at(p, "bivector", "/poisson"), "/poisson/bivector", sc.dim, names_), "poisson");
    if (p.contains("casimirs")) {
      const auto & c = array(p["casimirs"], "/poisson/casimirs");
      for (std::size_t i = 0; i < c.size(); ++i) {
        sc.casimirs.push_back(expr(c[i], "/poisson/casimirs/" + std::to_string(i), sc.dim, names_));
      }
    }
  }

  void load_reduction(Scenario & sc)
  {
    const auto & r = root_["reduction"];
    const std::string p = "/reduction";
    require_object(r, p);
    ReductionData d;
    const int n = integer(at(r, "ambient_dim", p), p + "/ambient_dim");
    if (n <= 0 || n % 2 != 0) { fail(p + "/ambient_dim", "must be a positive even integer"); }
    d.setup.ambient = PoissonStructure::canonical(n / 2);
    const auto & inv = array(at(r, "invariants", p), p + "/invariants");
    if (inv.empty()) { fail(p + "/invariants", "needs at least one invariant"); }
    for (std::size_t i = 0; i < inv.size(); ++i) {
      d.setup.invariants.push_back(expr(inv[i], p + "/invariants/" + std::to_string(i), n, {}));
    }
    const int k = static_cast<int>(inv.size());
    for (int i = 0; i < k; ++i) { d.names.push_back("s" + std::to_string(i + 1)); }
    if (r.contains("relations")) {
      const auto & rel = array(r["relations"], p + "/relations");
      for (std::size_t i = 0; i < rel.size(); ++i) {
        d.setup.relations.push_back(expr(rel[i], p + "/relations/" + std::to_string(i), k, d.names));
      }
    }
    if (r.contains("inequalities")) {
      const auto & in = array(r["inequalities"], p + "/inequalities");
      for (std::size_t i = 0; i < in.size(); ++i) {
        d.setup.inequalities.push_back(constraint(in[i], p + "/inequalities/" + std::to_string(i), k, d.names));
      }
    }
    if (r.contains("casimirs")) {
      const auto & c = array(r["casimirs"], p + "/casimirs");
      for (std::size_t i = 0; i < c.size(); ++i) {
        d.casimirs.push_back(expr(c[i], p + "/casimirs/" + std::to_string(i), k, d.names));
      }
    }
    if (r.contains("degree")) {
      d.setup.degree = integer(r["degree"], p + "/degree");
      if (d.setup.degree < 0) { fail(p + "/degree", "must be non-negative"); }
    }
    if (r.contains("samples")) { d.setup.samples = integer(r["samples"], p + "/samples"); }
    if (r.contains("tol")) { d.tol = number(r["tol"], p + "/tol"); }
    sc.reduction = std::move(d);
  }

  void load_acs(Scenario & sc)
  {
    const auto & a = root_["acs"];
    require_object(a, "/acs");
    sc.acs = AlmostComplexStructure(matrix(at(a, "matrix", "/acs"), "/acs/matrix", sc.dim, names_), "J");
    if (a.contains("form")) { sc.form = matrix(a["form"], "/acs/form", sc.dim, names_); }
  }

  const json & root_;
  VariableNames names_;
  std::vector<std::pair<std::string, std::string>> deferred_;
};

}  // namespace detail

/// Parse scenario text; schema violations throw SchemaError with a JSON pointer.
inline Scenario load_scenario_text(const std::string & text)
{
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error & e) {
    throw SchemaError("/", std::string("invalid JSON: ") + e.what());
  }
  return detail::Loader(root).load(text);
}

inline Scenario load_scenario(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw Error("cannot open scenario '" + path + "'"); }
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario_text(ss.str());
}

}  // namespace subcart
