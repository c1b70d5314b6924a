#include "scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "weyl/einstein.hpp"
#include "weyl/errors.hpp"
#include "weyl/hermitian.hpp"
#include "weyl/product.hpp"
#include "weyl/sampling.hpp"
#include "weyl/weyl.hpp"

namespace weylcli {

using nlohmann::json;
using namespace weyl;

namespace {

constexpr int kDefaultSamples = 100;
constexpr std::uint64_t kDefaultSeed = 1;
constexpr double kDefaultTol = 1e-8;
// Points where |F| is below this are skipped by the F-dependent checks.
constexpr double kMinFaraday = 1e-3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MathFailure : std::runtime_error {
  MathFailure(const std::string& what, std::string check, Point point)
      : std::runtime_error(what), check(std::move(check)), point(std::move(point)) {}
  std::string check;
  Point point;
};

json conventions() {
  return {
      {"curvature", "R(X,Y) = [D_X, D_Y] - D_[X,Y]; Ric(X,Y) = 1/2 sum_k (g(R(X,e_k)e_k, Y) - g(R(X,e_k)Y, e_k))"},
      {"laplacian", "D1 = d11 + d22, D2 = d33 + d44 (positive sum); scal = 2 D1 f - 2 e^{-2f} D2 f"},
      {"lee_form", "Dg = -2 theta g; gauge g' = e^{2u} g, theta' = theta - du"},
      {"orientation", "frame (Y1, I1 Y1, Y2, I2 Y2) positive; orientation = s1 s2"},
      {"wedge", "(a ^ b) = (k+l)!/(k! l!) Alt(a (x) b)"},
  };
}

// ---------------------------------------------------------------------------
// Config access

const json& require(const json& c, const char* key) {
  if (!c.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  return c.at(key);
}

template <typename T>
T get(const json& c, const char* key, T fallback) {
  if (!c.contains(key)) return fallback;
  try {
    return c.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

void check_keys(const json& c, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : c.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown field '" + key + "'");
  }
}

Chart read_box(const json& c, int dim) {
  std::vector<std::pair<double, double>> box(static_cast<std::size_t>(dim), {-1.0, 1.0});
  if (c.contains("box")) {
    const json& b = c.at("box");
    if (!b.is_array() || static_cast<int>(b.size()) != dim) {
      throw ConfigError("box must list " + std::to_string(dim) + " [lo, hi] pairs");
    }
    for (int i = 0; i < dim; ++i) {
      const json& e = b[static_cast<std::size_t>(i)];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        throw ConfigError("box entries must be [lo, hi] pairs");
      }
      const double lo = e[0].get<double>();
      const double hi = e[1].get<double>();
      if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) throw ConfigError("degenerate box axis");
      box[static_cast<std::size_t>(i)] = {lo, hi};
    }
  }
  return Chart(dim, std::move(box));
}

ScalarExpr read_expr(const json& v, const Chart& chart, const std::string& what) {
  if (v.is_number()) return ScalarExpr(v.get<double>());
  if (!v.is_string()) throw ConfigError(what + " must be an expression string");
  try {
    return parse_expr(v.get<std::string>(), chart);
  } catch (const ParseError& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

ExprMatrix read_matrix(const json& v, const Chart& chart, int n, const std::string& what) {
  if (!v.is_array() || static_cast<int>(v.size()) != n) throw ConfigError(what + " must be a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
  ExprMatrix m(static_cast<std::size_t>(n), ExprVector(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != n) throw ConfigError(what + " rows must have length " + std::to_string(n));
    for (int j = 0; j < n; ++j) {
      m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = read_expr(row[static_cast<std::size_t>(j)], chart, what);
    }
  }
  return m;
}

ExprMatrix identity_matrix(int n) {
  ExprMatrix m(static_cast<std::size_t>(n), ExprVector(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = ScalarExpr(1.0);
  return m;
}

HolomorphicFunction read_h(const json& v) {
  const json& terms = require(v, "terms");
  if (!terms.is_array() || terms.empty()) throw ConfigError("H.terms must be a non-empty array");
  std::vector<ComplexMonomial> out;
  for (const json& t : terms) {
    if (!t.is_array() || t.size() != 4) throw ConfigError("H terms are [p, q, re, im]");
    const int p = t[0].get<int>();
    const int q = t[1].get<int>();
    if (p < 0 || q < 0) throw ConfigError("H exponents must be non-negative");
    out.push_back({p, q, {t[2].get<double>(), t[3].get<double>()}});
  }
  return {ComplexPoly2(std::move(out)), get<bool>(v, "exp", false)};
}

// ---------------------------------------------------------------------------
// Check registry

struct Context {
  std::optional<WeylChart> W;
  std::optional<ProductWeylChart> P;
  std::optional<WeylChart> gauged;
  std::optional<FactorComplexStructures> S;
  std::optional<AlmostComplexField> J;
  std::optional<AlmostComplexField> K;
  std::vector<KFormField> volumes;
};

using CheckFn = std::function<std::optional<double>(const Context&, const Point&)>;

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Eigen::MatrixXd faraday_matrix(const WeylChart& W, const Point& p) {
  const KFormValue F = faraday(W, p);
  const int n = W.dim();
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = F({i, j});
  }
  return m;
}

const std::map<std::string, CheckFn>& chart_checks() {
  static const std::map<std::string, CheckFn> checks = {
      {"pair_symmetry", [](const Context& c, const Point& p) { return pair_symmetry_defect(*c.W, p); }},
      {"ricci_skew",
       [](const Context& c, const Point& p) {
         const Eigen::MatrixXd ric = weyl_ricci(*c.W, p);
         const double n = c.W->dim();
         return max_abs(0.5 * (ric - ric.transpose()) - (2.0 - n) / 2.0 * faraday_matrix(*c.W, p));
       }},
      {"gauge_covariance",
       [](const Context& c, const Point& p) {
         const double dF = (faraday(*c.gauged, p) - faraday(*c.W, p)).max_abs();
         return std::max(dF, max_abs(weyl_ricci(*c.gauged, p) - weyl_ricci(*c.W, p)));
       }},
      {"einstein_weyl_defect", [](const Context& c, const Point& p) { return einstein_weyl_defect(*c.W, p); }},
      {"scalar_flat", [](const Context& c, const Point& p) { return std::abs(weyl_scalar_curvature(*c.W, p)); }},
  };
  return checks;
}

const std::map<std::string, CheckFn>& product_checks() {
  static const std::map<std::string, CheckFn> checks = {
      {"adapted_parallel_volumes",
       [](const Context& c, const Point& p) {
         double worst = 0.0;
         for (const KFormField& w : c.volumes) worst = std::max(worst, covderiv_weightless_form(*c.W, w, p).max_abs());
         return worst;
       }},
      {"mixed_faraday",
       [](const Context& c, const Point& p) {
         const KFormValue F = faraday(*c.W, p);
         double worst = 0.0;
         for (int i = 0; i < c.P->dim(); ++i) {
           for (int j = i + 1; j < c.P->dim(); ++j) {
             if (c.P->factor_of(i) == c.P->factor_of(j)) worst = std::max(worst, std::abs(F({i, j})));
           }
         }
         return worst;
       }},
      {"ricci_decomposition", [](const Context& c, const Point& p) { return ricci_decomposition_defect(*c.P, p); }},
  };
  return checks;
}

std::optional<double> faraday_norm_if_large(const Context& c, const Point& p) {
  const KFormValue F = faraday(*c.W, p);
  const double norm = std::sqrt(inner(c.W->metric(p), F, F));
  if (norm <= kMinFaraday) return std::nullopt;
  return norm;
}

const std::map<std::string, CheckFn>& hyperhermitian_checks() {
  static const std::map<std::string, CheckFn> checks = {
      {"nijenhuis_zero",
       [](const Context& c, const Point& p) {
         return std::max({nijenhuis(c.S->I, p).max_abs(), nijenhuis(*c.J, p).max_abs(), nijenhuis(*c.K, p).max_abs()});
       }},
      {"parallel_triple",
       [](const Context& c, const Point& p) {
         return std::max({endomorphism_covariant_derivative(*c.W, c.S->I, p).max_abs(),
                          endomorphism_covariant_derivative(*c.W, *c.J, p).max_abs(),
                          endomorphism_covariant_derivative(*c.W, *c.K, p).max_abs()});
       }},
      {"asd_faraday",
       [](const Context& c, const Point& p) {
         return sd_asd_split(c.W->metric(p), c.S->orientation, faraday(*c.W, p)).first.max_abs();
       }},
      {"asd_identity", [](const Context& c, const Point& p) { return asd_identity_defect(*c.W, p); }},
      {"holonomy_rank_2",
       [](const Context& c, const Point& p) -> std::optional<double> {
         if (!faraday_norm_if_large(c, p)) return std::nullopt;
         return std::abs(holonomy_image_rank(*c.W, p) - 2.0);
       }},
      {"rd_on_F",
       [](const Context& c, const Point& p) -> std::optional<double> {
         if (!faraday_norm_if_large(c, p)) return std::nullopt;
         const MetricValue g = c.W->metric(p);
         const KFormValue F = faraday(*c.W, p);
         const Eigen::Matrix4d RF = curvature_operator(*c.W, p, raise_two_form(g, F));
         return max_abs(RF - inner(g, F, F) * Eigen::Matrix4d::Identity());
       }},
      {"rd_on_I",
       [](const Context& c, const Point& p) {
         const MetricValue g = c.W->metric(p);
         double worst = 0.0;
         for (const KFormField& w : c.volumes) {
           worst = std::max(worst, max_abs(curvature_operator(*c.W, p, raise_two_form(g, w.eval(p)))));
         }
         return worst;
       }},
      {"lck_lee_form",
       [](const Context& c, const Point& p) {
         const KFormValue theta = c.W->lee_form(p);
         double worst = 0.0;
         for (const AlmostComplexField* A : {&c.S->I, &*c.J}) {
           const KFormValue tau = lck_lee_form(*c.W, *A, p);
           worst = std::max({worst, (tau - theta).max_abs(), lck_equation_defect(*c.W, *A, p, tau)});
         }
         return worst;
       }},
  };
  return checks;
}

std::map<std::string, CheckFn> checks_for(std::string_view kind) {
  std::map<std::string, CheckFn> out;
  if (kind == "weyl_chart" || kind == "conformal_product" || kind == "hyperhermitian") out = chart_checks();
  if (kind == "conformal_product" || kind == "hyperhermitian") {
    for (const auto& [k, v] : product_checks()) out[k] = v;
  }
  if (kind == "hyperhermitian") {
    for (const auto& [k, v] : hyperhermitian_checks()) out[k] = v;
  }
  return out;
}

struct CheckRequest {
  std::string name;
  double tol;
};

std::vector<CheckRequest> read_checks(const json& config, const std::vector<std::string>& known,
                                      const Overrides& ov) {
  const json& list = require(config, "checks");
  if (!list.is_array() || list.empty()) throw ConfigError("checks must be a non-empty array");
  std::vector<CheckRequest> out;
  std::set<std::string> seen;
  for (const json& item : list) {
    CheckRequest r{"", kDefaultTol};
    if (item.is_string()) {
      r.name = item.get<std::string>();
    } else if (item.is_object()) {
      check_keys(item, {"name", "tol"});
      r.name = require(item, "name").get<std::string>();
      r.tol = get<double>(item, "tol", kDefaultTol);
    } else {
      throw ConfigError("checks entries are names or {name, tol} objects");
    }
    if (std::find(known.begin(), known.end(), r.name) == known.end()) throw ConfigError("unknown check '" + r.name + "'");
    if (!seen.insert(r.name).second) throw ConfigError("check '" + r.name + "' listed twice");
    if (ov.tol) r.tol = *ov.tol;
    if (!(r.tol >= 0.0) || !std::isfinite(r.tol)) throw ConfigError("tolerances must be finite and non-negative");
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const CheckRequest& a, const CheckRequest& b) { return a.name < b.name; });
  return out;
}

json check_record(const std::string& name, long points, double defect, double tol) {
  const bool pass = std::isfinite(defect) && defect <= tol;
  json r = {{"name", name}, {"points_evaluated", points}, {"tolerance", tol}, {"pass", pass}};
  r["max_defect"] = std::isfinite(defect) ? json(defect) : json(nullptr);
  return r;
}

const std::set<std::string> kCommonKeys = {"name", "kind", "description", "checks", "samples", "seed", "box"};

std::set<std::string> with_common(std::initializer_list<const char*> extra) {
  std::set<std::string> s = kCommonKeys;
  for (const char* e : extra) s.insert(e);
  return s;
}

// Builds the objects a sampled scenario needs. Construction failures are
// configuration errors.
Context build_context(const json& config, const std::string& kind) {
  Context c;
  if (kind == "weyl_chart") {
    check_keys(config, with_common({"dim", "g", "theta", "gauge_u"}));
    const int dim = get<int>(config, "dim", 0);
    if (dim < kMinDim || dim > kMaxDim) throw ConfigError("dim must be within 2..6");
    const Chart chart = read_box(config, dim);
    const ExprMatrix g = config.contains("g") ? read_matrix(config.at("g"), chart, dim, "g") : identity_matrix(dim);
    ExprVector theta(static_cast<std::size_t>(dim));
    if (config.contains("theta")) {
      const json& t = config.at("theta");
      if (!t.is_array() || static_cast<int>(t.size()) != dim) throw ConfigError("theta must have dim entries");
      for (int i = 0; i < dim; ++i) theta[static_cast<std::size_t>(i)] = read_expr(t[static_cast<std::size_t>(i)], chart, "theta");
    }
    c.W.emplace(chart, g, theta);
  } else if (kind == "conformal_product") {
    check_keys(config, with_common({"n1", "n2", "g1", "g2", "f1", "f2", "gauge_u"}));
    const int n1 = get<int>(config, "n1", 0);
    const int n2 = get<int>(config, "n2", 0);
    if (n1 < 1 || n1 > 3 || n2 < 1 || n2 > 3 || n1 + n2 < 2) throw ConfigError("factor dimensions must be within 1..3");
    const Chart chart = read_box(config, n1 + n2);
    const auto& box = chart.box();
    const Chart c1(n1, {box.begin(), box.begin() + n1});
    const Chart c2(n2, {box.begin() + n1, box.end()});
    // Factor metrics use factor-local coordinates x1..x_{n_i}.
    const ExprMatrix g1 = config.contains("g1") ? read_matrix(config.at("g1"), c1, n1, "g1") : identity_matrix(n1);
    const ExprMatrix g2 = config.contains("g2") ? read_matrix(config.at("g2"), c2, n2, "g2") : identity_matrix(n2);
    const ScalarExpr f1 = read_expr(config.value("f1", json(0.0)), chart, "f1");
    const ScalarExpr f2 = read_expr(config.value("f2", json(0.0)), chart, "f2");
    c.P.emplace(build_product(c1, g1, c2, g2, f1, f2));
  } else if (kind == "hyperhermitian") {
    check_keys(config, with_common({"H", "signs", "f", "gauge_u"}));
    const Chart chart = read_box(config, 4);
    const auto& box = chart.box();
    const HolomorphicFunction H = read_h(require(config, "H"));
    std::array<int, 2> signs{1, 1};
    if (config.contains("signs")) {
      const json& s = config.at("signs");
      if (!s.is_array() || s.size() != 2) throw ConfigError("signs must be [s1, s2]");
      signs = {s[0].get<int>(), s[1].get<int>()};
    }
    ScalarExpr f;
    if (config.contains("f")) {
      f = read_expr(config.at("f"), chart, "f");
    } else {
      const auto [a, b] = holomorphic_coefficients(H, signs);
      f = H.exponential ? -holomorphic_parts(H.poly, -signs[0], signs[1]).first : -0.5 * ln(a * a + b * b);
    }
    c.P.emplace(build_flat_product(Chart(2, {box[0], box[1]}), Chart(2, {box[2], box[3]}), ScalarExpr(0.0), 2.0 * f));
    c.S.emplace(factor_complex_structures(*c.P, signs));
    c.J.emplace(hyperhermitian_j_from_H(*c.P, H, signs));
    c.K.emplace(compose(c.S->I, *c.J));
  } else {
    throw ConfigError("unknown kind '" + kind + "'");
  }
  if (c.P) {
    c.W.emplace(c.P->weyl());
    c.volumes = {weightless_volume_form(*c.P, 1), weightless_volume_form(*c.P, 2)};
  }
  const ScalarExpr u = read_expr(config.value("gauge_u", json("x1*x2")), c.W->chart(), "gauge_u");
  c.gauged.emplace(gauge_transform(*c.W, u));
  return c;
}

json sampled_report(const json& config, const std::string& kind, const Overrides& ov) {
  const int samples = ov.samples ? *ov.samples : get<int>(config, "samples", kDefaultSamples);
  if (samples < 1) throw ConfigError("samples must be positive");
  const auto seed = ov.seed ? *ov.seed : get<std::uint64_t>(config, "seed", kDefaultSeed);
  const std::vector<std::string> known = known_checks(kind);
  const std::vector<CheckRequest> requests = read_checks(config, known, ov);

  Context ctx;
  try {
    ctx = build_context(config, kind);
  } catch (const ConfigError&) {
    throw;
  } catch (const weyl::Error& e) {
    throw ConfigError(e.what());
  }
  const std::map<std::string, CheckFn> fns = checks_for(kind);
  const std::vector<Point> points = QuasiRandomSampler::points(ctx.W->chart(), samples, seed);

  json records = json::array();
  bool all = true;
  for (const CheckRequest& r : requests) {
    const CheckFn& fn = fns.at(r.name);
    double worst = 0.0;
    long evaluated = 0;
    for (const Point& p : points) {
      std::optional<double> d;
      try {
        d = fn(ctx, p);
      } catch (const weyl::DomainError& e) {
        throw MathFailure(e.what(), r.name, p);
      } catch (const weyl::SingularMetricError& e) {
        throw MathFailure(e.what(), r.name, p);
      } catch (const weyl::InvalidArgument& e) {
        throw MathFailure(e.what(), r.name, p);
      }
      if (!d) continue;
      ++evaluated;
      worst = std::isnan(*d) || std::isnan(worst) ? std::nan("") : std::max(worst, *d);
    }
    json rec = check_record(r.name, evaluated, worst, r.tol);
    all = all && rec["pass"].get<bool>();
    records.push_back(std::move(rec));
  }
  return {{"checks", records}, {"pass", all}, {"samples", samples}, {"seed", seed}};
}

// ---------------------------------------------------------------------------
// Toda scenarios

struct TodaRun {
  json report;
  bool converged;
};

GridSpec read_grid_spec(const json& config) {
  const json& grid = require(config, "grid");
  check_keys(grid, {"n", "box"});
  std::array<int, 4> n{};
  const json& jn = require(grid, "n");
  if (jn.is_number_integer()) {
    n.fill(jn.get<int>());
  } else if (jn.is_array() && jn.size() == 4) {
    for (std::size_t a = 0; a < 4; ++a) n[a] = jn[a].get<int>();
  } else {
    throw ConfigError("grid.n must be an integer or four integers");
  }
  const Chart box = read_box(grid, 4);
  GridSpec spec;
  for (std::size_t a = 0; a < 4; ++a) {
    if (n[a] < 5 || n[a] > 33) throw ConfigError("grid sizes must be within 5..33");
    spec.n[a] = n[a];
    spec.x0[a] = box.box()[a].first;
    spec.h[a] = (box.box()[a].second - box.box()[a].first) / (n[a] - 1);
  }
  return spec;
}

TodaRun toda_report(const json& config, const Overrides& ov) {
  check_keys(config, {"name", "kind", "description", "checks", "grid", "boundary", "source", "manufactured",
                      "exact", "initial_guess", "max_iter", "solver_tol", "output"});
  const std::vector<CheckRequest> requests = read_checks(config, known_checks("toda_solve"), ov);
  const GridSpec spec = read_grid_spec(config);
  const Chart chart(4, {{spec.x0[0], spec.x0[0] + spec.h[0] * (spec.n[0] - 1)},
                        {spec.x0[1], spec.x0[1] + spec.h[1] * (spec.n[1] - 1)},
                        {spec.x0[2], spec.x0[2] + spec.h[2] * (spec.n[2] - 1)},
                        {spec.x0[3], spec.x0[3] + spec.h[3] * (spec.n[3] - 1)}});
  const int max_iter = get<int>(config, "max_iter", 30);
  const double solver_tol = get<double>(config, "solver_tol", 1e-10);
  if (max_iter < 1) throw ConfigError("max_iter must be positive");
  if (!(solver_tol > 0.0)) throw ConfigError("solver_tol must be positive");

  std::optional<GridField> exact;
  TodaProblem problem{GridField(spec), std::nullopt, std::nullopt};
  try {
    auto sample = [&](const char* key) { return GridField::sample(spec, read_expr(config.at(key), chart, key)); };
    if (config.contains("manufactured")) {
      if (config.contains("source")) throw ConfigError("give either source or manufactured, not both");
      exact = sample("manufactured");
      problem.source = toda_operator(*exact);
      problem.boundary = *exact;
    }
    if (config.contains("exact")) exact = sample("exact");
    if (config.contains("boundary")) {
      problem.boundary = sample("boundary");
    } else if (!config.contains("manufactured")) {
      throw ConfigError("missing field 'boundary'");
    }
    if (config.contains("source")) problem.source = sample("source");
    if (config.contains("initial_guess")) problem.initial_guess = sample("initial_guess");
  } catch (const ConfigError&) {
    throw;
  } catch (const weyl::Error& e) {
    throw ConfigError(e.what());
  }

  TodaResult result = toda_solve(problem, max_iter, solver_tol);

  json records = json::array();
  bool all = true;
  std::size_t interior = 0;
  for (std::size_t i = 0; i < result.solution.size(); ++i) interior += result.solution.is_interior(i) ? 1 : 0;
  for (const CheckRequest& r : requests) {
    double defect = 0.0;
    if (r.name == "residual") {
      defect = result.residual_history.back();
    } else {
      if (!exact) throw ConfigError("max_error needs 'exact' or 'manufactured'");
      for (std::size_t i = 0; i < exact->size(); ++i) defect = std::max(defect, std::abs(result.solution[i] - (*exact)[i]));
    }
    json rec = check_record(r.name, static_cast<long>(r.name == "residual" ? interior : result.solution.size()), defect, r.tol);
    all = all && rec["pass"].get<bool>();
    records.push_back(std::move(rec));
  }

  json solver = {{"converged", result.converged},
                 {"iterations", result.iterations},
                 {"residual_history", result.residual_history},
                 {"grid", {{"n", spec.n}, {"x0", spec.x0}, {"h", spec.h}}}};
  if (!result.failure.empty()) solver["failure"] = result.failure;
  if (config.contains("output")) {
    const std::string path = config.at("output").get<std::string>();
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write grid to '" + path + "'");
    write_grid(out, result.solution);
    solver["output"] = path;
  }
  return {{{"checks", records}, {"pass", all && result.converged}, {"solver", solver}}, result.converged};
}

json error_report(const char* kind, const std::string& message) {
  return {{"error", {{"kind", kind}, {"message", message}}}, {"pass", false}};
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> known_checks(std::string_view kind) {
  std::vector<std::string> out;
  if (kind == "toda_solve") return {"max_error", "residual"};
  for (const auto& [name, fn] : checks_for(kind)) out.push_back(name);
  return out;
}

const std::vector<BuiltinScenario>& builtin_scenarios() {
  static const std::vector<BuiltinScenario> all = {
      {"biharmonic-x1x3", "2+2 product g1 + e^{2 x1 x3} g2 (bi-harmonic f = x1 x3)",
       {{"name", "biharmonic-x1x3"},
        {"kind", "conformal_product"},
        {"n1", 2},
        {"n2", 2},
        {"box", {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}}},
        {"f1", "0"},
        {"f2", "2*x1*x3"},
        {"samples", 100},
        {"seed", 1},
        {"checks",
         {{{"name", "adapted_parallel_volumes"}, {"tol", 1e-8}},
          {{"name", "mixed_faraday"}, {"tol", 1e-8}},
          {{"name", "einstein_weyl_defect"}, {"tol", 1e-8}},
          {{"name", "scalar_flat"}, {"tol", 1e-8}},
          {{"name", "ricci_decomposition"}, {"tol", 1e-8}},
          {{"name", "pair_symmetry"}, {"tol", 1e-8}}}}}},
      {"flat-product", "flat 2+2 product, f1 = f2 = 0",
       {{"name", "flat-product"},
        {"kind", "conformal_product"},
        {"n1", 2},
        {"n2", 2},
        {"f1", "0"},
        {"f2", "0"},
        {"samples", 100},
        {"seed", 1},
        {"checks",
         {{{"name", "adapted_parallel_volumes"}, {"tol", 1e-8}},
          {{"name", "mixed_faraday"}, {"tol", 1e-8}},
          {{"name", "einstein_weyl_defect"}, {"tol", 1e-8}},
          {{"name", "scalar_flat"}, {"tol", 1e-8}},
          {{"name", "ricci_decomposition"}, {"tol", 1e-8}},
          {{"name", "pair_symmetry"}, {"tol", 1e-8}},
          {{"name", "gauge_covariance"}, {"tol", 1e-8}}}}}},
      {"hyperhermitian-rezw", "hyper-Hermitian product from H = exp(-z w), f = x1 x3 - x2 x4",
       {{"name", "hyperhermitian-rezw"},
        {"kind", "hyperhermitian"},
        {"H", {{"terms", {{1, 1, -1.0, 0.0}}}, {"exp", true}}},
        {"signs", {-1, 1}},
        {"samples", 100},
        {"seed", 1},
        {"checks",
         {{{"name", "nijenhuis_zero"}, {"tol", 1e-9}},
          {{"name", "asd_faraday"}, {"tol", 1e-10}},
          {{"name", "holonomy_rank_2"}, {"tol", 0}},
          {{"name", "rd_on_F"}, {"tol", 1e-9}},
          {{"name", "rd_on_I"}, {"tol", 1e-9}},
          {{"name", "parallel_triple"}, {"tol", 1e-9}},
          {{"name", "lck_lee_form"}, {"tol", 1e-9}},
          {{"name", "asd_identity"}, {"tol", 1e-9}},
          {{"name", "einstein_weyl_defect"}, {"tol", 1e-9}}}}}},
      {"toda-x1x3", "Toda solve on a 9^4 grid with boundary data x1 x3",
       {{"name", "toda-x1x3"},
        {"kind", "toda_solve"},
        {"grid", {{"n", 9}, {"box", {{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}}}}},
        {"boundary", "x1*x3"},
        {"exact", "x1*x3"},
        {"max_iter", 30},
        {"solver_tol", 1e-10},
        {"checks", {{{"name", "residual"}, {"tol", 1e-10}}, {{"name", "max_error"}, {"tol", 1e-9}}}}}},
      {"toda-manufactured", "Toda solve with manufactured solution x1^2 x3",
       {{"name", "toda-manufactured"},
        {"kind", "toda_solve"},
        {"grid", {{"n", 9}, {"box", {{-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}, {-0.5, 0.5}}}}},
        {"manufactured", "x1^2*x3"},
        {"max_iter", 30},
        {"solver_tol", 1e-12},
        {"checks", {{{"name", "residual"}, {"tol", 1e-12}}, {{"name", "max_error"}, {"tol", 1e-9}}}}}},
  };
  return all;
}

const BuiltinScenario* find_builtin(std::string_view name) {
  for (const BuiltinScenario& b : builtin_scenarios()) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

RunOutcome run_scenario(const json& config, const Overrides& overrides, bool solve_only) {
  RunOutcome out;
  try {
    if (!config.is_object()) throw ConfigError("scenario must be a JSON object");
    const std::string kind = get<std::string>(config, "kind", "");
    if (kind.empty()) throw ConfigError("missing field 'kind'");
    if (solve_only && kind != "toda_solve") throw ConfigError("solve-toda needs a toda_solve scenario");
    json report;
    bool converged = true;
    if (kind == "toda_solve") {
      TodaRun run = toda_report(config, overrides);
      report = std::move(run.report);
      converged = run.converged;
    } else {
      if (known_checks(kind).empty()) throw ConfigError("unknown kind '" + kind + "'");
      report = sampled_report(config, kind, overrides);
    }
    report["scenario"] = get<std::string>(config, "name", "");
    report["kind"] = kind;
    report["conventions"] = conventions();
    out.report = std::move(report);
    if (!converged) {
      out.exit_code = kNoConvergence;
    } else {
      out.exit_code = out.report["pass"].get<bool>() ? kPass : kCheckFailure;
    }
  } catch (const ConfigError& e) {
    out.exit_code = kConfigError;
    out.report = error_report("config", e.what());
  } catch (const json::exception& e) {
    out.exit_code = kConfigError;
    out.report = error_report("config", e.what());
  } catch (const MathFailure& e) {
    out.exit_code = kMathError;
    out.report = error_report("math", e.what());
    out.report["error"]["check"] = e.check;
    out.report["error"]["point"] = e.point;
  } catch (const weyl::Error& e) {
    out.exit_code = kMathError;
    out.report = error_report("math", e.what());
  }
  return out;
}

std::string report_csv(const json& report) {
  std::ostringstream out;
  out << "name,points_evaluated,max_defect,tolerance,pass\n";
  if (!report.contains("checks")) return out.str();
  char buf[64];
  for (const json& r : report.at("checks")) {
    out << r.at("name").get<std::string>() << ',' << r.at("points_evaluated").get<long>() << ',';
    if (r.at("max_defect").is_null()) {
      out << "nan";
    } else {
      std::snprintf(buf, sizeof buf, "%.17g", r.at("max_defect").get<double>());
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", r.at("tolerance").get<double>());
    out << ',' << buf << ',' << (r.at("pass").get<bool>() ? "true" : "false") << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

namespace {

std::optional<json> load_config(const std::string& source, std::string& error) {
  if (std::filesystem::is_regular_file(source)) {
    std::ifstream in(source);
    try {
      return json::parse(in);
    } catch (const json::parse_error& e) {
      error = std::string("invalid JSON: ") + e.what();
      return std::nullopt;
    }
  }
  if (const BuiltinScenario* b = find_builtin(source)) return b->config;
  error = "no scenario file or builtin named '" + source + "'";
  return std::nullopt;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical checks for Weyl structures on conformal products", "weylcheck"};
  app.require_subcommand(1);

  std::string source;
  std::string csv_path;
  Overrides ov;
  int samples = 0;
  std::uint64_t seed = 0;
  double tol = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", source, "scenario JSON file or builtin name")->required();
    sub->add_option("--samples", samples, "number of sample points")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "sampling seed");
    sub->add_option("--tol", tol, "override every check tolerance")->check(CLI::NonNegativeNumber);
    sub->add_option("--csv", csv_path, "also write the check table as CSV");
  };
  CLI::App* check = app.add_subcommand("check", "run the checks of a scenario");
  add_common(check);
  CLI::App* solve = app.add_subcommand("solve-toda", "solve a toda_solve scenario and write its grid");
  add_common(solve);
  CLI::App* list = app.add_subcommand("list-scenarios", "list builtin scenarios");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kConfigError;
  }

  if (list->parsed()) {
    for (const BuiltinScenario& b : builtin_scenarios()) {
      out << b.name << '\t' << b.config.at("kind").get<std::string>() << '\t' << b.description << '\n';
    }
    return kPass;
  }

  CLI::App* sub = check->parsed() ? check : solve;
  if (sub->count("--samples")) ov.samples = samples;
  if (sub->count("--seed")) ov.seed = seed;
  if (sub->count("--tol")) ov.tol = tol;

  std::string error;
  const std::optional<json> config = load_config(source, error);
  RunOutcome outcome;
  if (!config) {
    outcome.exit_code = kConfigError;
    outcome.report = error_report("config", error);
  } else {
    outcome = run_scenario(*config, ov, solve->parsed());
  }
  out << outcome.report.dump(2) << '\n';
  if (outcome.report.contains("error")) err << "weylcheck: " << outcome.report["error"]["message"].get<std::string>() << '\n';

  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) {
      err << "weylcheck: cannot write " << csv_path << '\n';
      return kConfigError;
    }
    csv << report_csv(outcome.report);
  }
  return outcome.exit_code;
}

}  // namespace weylcli
