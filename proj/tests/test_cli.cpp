#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "scenario.hpp"
#include "weyl/einstein.hpp"
#include "weyl/expr.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
  json report() const { return json::parse(out); }
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = weylcli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "weylcheck_tests";
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const std::string& name, const json& config) {
  const fs::path path = scratch_dir() / name;
  std::ofstream(path) << config.dump(2);
  return path;
}

json builtin(const char* name) { return weylcli::find_builtin(name)->config; }

}  // namespace

TEST_CASE("builtin scenarios pass") {
  for (const auto& b : weylcli::builtin_scenarios()) {
    const Result r = cli({"check", b.name});
    INFO(b.name << "\n" << r.out);
    CHECK(r.code == weylcli::kPass);
    const json rep = r.report();
    CHECK(rep["pass"] == true);
    CHECK(rep["scenario"] == b.name);
    CHECK(rep.contains("conventions"));
    for (const json& c : rep["checks"]) {
      CHECK(c["pass"] == true);
      CHECK(c["points_evaluated"].get<long>() > 0);
    }
  }
  // Hyper-Hermitian checks requested by name.
  const json rep = cli({"check", "hyperhermitian-rezw"}).report();
  std::vector<std::string> names;
  for (const json& c : rep["checks"]) names.push_back(c["name"]);
  for (const char* n : {"nijenhuis_zero", "asd_faraday", "holonomy_rank_2", "rd_on_F"}) {
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  }
  CHECK(std::is_sorted(names.begin(), names.end()));
}

TEST_CASE("shipped scenario files match the builtins") {
  for (const auto& b : weylcli::builtin_scenarios()) {
    std::ifstream in(fs::path(WEYL_SCENARIO_DIR) / (b.name + ".json"));
    REQUIRE(in.good());
    CHECK(json::parse(in) == b.config);
  }
  const Result r = cli({"check", std::string(WEYL_SCENARIO_DIR) + "/weyl-chart-example.json"});
  CHECK(r.code == weylcli::kPass);
}

TEST_CASE("reports are deterministic") {
  const Result a = cli({"check", "biharmonic-x1x3", "--seed", "42", "--samples", "30"});
  const Result b = cli({"check", "biharmonic-x1x3", "--seed", "42", "--samples", "30"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  const json rep = a.report();
  CHECK(rep["seed"] == 42);
  CHECK(rep["samples"] == 30);
  CHECK(rep["checks"][0]["points_evaluated"] == 30);
  CHECK(a.out.find("time") == std::string::npos);
  const Result c = cli({"check", "biharmonic-x1x3", "--seed", "43", "--samples", "30"});
  CHECK(c.out != a.out);
}

TEST_CASE("global pass is the conjunction of the checks") {
  // Tolerance 0 fails the checks with rounding-level defects only.
  const Result r = cli({"check", "biharmonic-x1x3", "--tol", "0"});
  CHECK(r.code == weylcli::kCheckFailure);
  const json rep = r.report();
  bool all = true;
  bool any_fail = false;
  for (const json& c : rep["checks"]) {
    all = all && c["pass"].get<bool>();
    any_fail = any_fail || !c["pass"].get<bool>();
    CHECK(c["tolerance"] == 0.0);
  }
  CHECK(any_fail);
  CHECK(rep["pass"] == all);

  // f = x1^2 is not Einstein-Weyl.
  json cfg = builtin("biharmonic-x1x3");
  cfg["f2"] = "2*x1^2";
  const Result s = cli({"check", write_config("x1sq.json", cfg).string()});
  CHECK(s.code == weylcli::kCheckFailure);
  for (const json& c : s.report()["checks"]) {
    if (c["name"] == "einstein_weyl_defect") CHECK(c["pass"] == false);
    if (c["name"] == "ricci_decomposition") CHECK(c["pass"] == true);
  }
}

TEST_CASE("config errors exit with 2") {
  CHECK(cli({"check", "no-such-scenario"}).code == weylcli::kConfigError);
  CHECK(cli({}).code == weylcli::kConfigError);
  CHECK(cli({"frobnicate"}).code == weylcli::kConfigError);
  CHECK(cli({"check", "flat-product", "--samples", "0"}).code == weylcli::kConfigError);

  const fs::path bad_json = scratch_dir() / "bad.json";
  std::ofstream(bad_json) << "{ \"kind\": ";
  const Result r = cli({"check", bad_json.string()});
  CHECK(r.code == weylcli::kConfigError);
  CHECK(r.report()["error"]["kind"] == "config");

  auto expect_config_error = [](json cfg, const char* tag) {
    INFO(tag);
    const Result res = cli({"check", write_config(std::string(tag) + ".json", cfg).string()});
    CHECK(res.code == weylcli::kConfigError);
    CHECK(!res.err.empty());
  };
  json cfg = builtin("flat-product");
  cfg["checks"].push_back({{"name", "no_such_check"}, {"tol", 1e-8}});
  expect_config_error(cfg, "unknown_check");
  cfg = builtin("flat-product");
  cfg["checks"].push_back({{"name", "nijenhuis_zero"}, {"tol", 1e-8}});
  expect_config_error(cfg, "check_for_other_kind");
  cfg = builtin("flat-product");
  cfg["kind"] = "kaehler";
  expect_config_error(cfg, "unknown_kind");
  cfg = builtin("flat-product");
  cfg["f2"] = "x1 +";
  expect_config_error(cfg, "parse_error");
  cfg = builtin("flat-product");
  cfg["f2"] = "x7";
  expect_config_error(cfg, "coordinate_out_of_range");
  cfg = builtin("flat-product");
  cfg["box"] = {{0, 0}, {-1, 1}, {-1, 1}, {-1, 1}};
  expect_config_error(cfg, "degenerate_box");
  cfg = builtin("flat-product");
  cfg["colour"] = "blue";
  expect_config_error(cfg, "unknown_field");
  cfg = builtin("flat-product");
  cfg["g1"] = json::array({json::array({"1", "0"}), json::array({"0", "-1"})});
  expect_config_error(cfg, "indefinite_metric");
  cfg = builtin("hyperhermitian-rezw");
  cfg["f"] = "x1*x3 + x2*x4";
  expect_config_error(cfg, "f_mismatch");
  cfg = builtin("toda-x1x3");
  cfg["grid"]["n"] = 4;
  expect_config_error(cfg, "small_grid");
}

TEST_CASE("math errors exit with 3 and name the point") {
  // The metric turns indefinite on a thin slab that chart validation misses.
  json cfg = {{"kind", "weyl_chart"},
              {"dim", 2},
              {"g", json::array({json::array({"1 - 2*exp(-1000000*(x1 - 0.3)^2)", "0"}), json::array({"0", "1"})})},
              {"samples", 20000},
              {"seed", 3},
              {"checks", {"einstein_weyl_defect"}}};
  const Result r = cli({"check", write_config("slab.json", cfg).string()});
  CHECK(r.code == weylcli::kMathError);
  const json rep = r.report();
  CHECK(rep["error"]["kind"] == "math");
  CHECK(rep["error"]["check"] == "einstein_weyl_defect");
  REQUIRE(rep["error"]["point"].size() == 2);
  CHECK(std::abs(rep["error"]["point"][0].get<double>() - 0.3) < 1e-2);
}

TEST_CASE("csv output") {
  const fs::path csv = scratch_dir() / "flat.csv";
  const Result r = cli({"check", "flat-product", "--csv", csv.string()});
  CHECK(r.code == 0);
  std::ifstream in(csv);
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "name,points_evaluated,max_defect,tolerance,pass");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.rfind(",true") == line.size() - 5);
  }
  CHECK(rows == static_cast<int>(r.report()["checks"].size()));
}

TEST_CASE("solve-toda writes the grid") {
  const fs::path grid = scratch_dir() / "manufactured.grid";
  json cfg = builtin("toda-manufactured");
  cfg["output"] = grid.string();
  const Result r = cli({"solve-toda", write_config("manufactured.json", cfg).string()});
  CHECK(r.code == weylcli::kPass);
  const json rep = r.report();
  CHECK(rep["solver"]["converged"] == true);
  CHECK(rep["solver"]["residual_history"].size() >= 2);

  std::ifstream in(grid);
  const weyl::GridField f = weyl::read_grid(in);
  const weyl::Chart chart = weyl::Chart::cube(4, -0.5, 0.5);
  const weyl::GridField exact = weyl::GridField::sample(f.spec(), weyl::parse_expr("x1^2*x3", chart));
  double err = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(f[i] - exact[i]));
  CHECK(err < 1e-9);

  // x1 x3 from a zero start.
  const Result t = cli({"solve-toda", "toda-x1x3"});
  CHECK(t.code == weylcli::kPass);
  MESSAGE("toda-x1x3 Newton iterations: " << t.report()["solver"]["iterations"]);

  // Zero data gives the zero field.
  json zero = builtin("toda-x1x3");
  zero["boundary"] = "0";
  zero["exact"] = "0";
  const Result z = cli({"solve-toda", write_config("zero.json", zero).string()});
  CHECK(z.code == weylcli::kPass);
  CHECK(z.report()["solver"]["iterations"].get<int>() <= 1);
}

TEST_CASE("solve-toda non-convergence exits with 4 and still writes the grid") {
  const fs::path grid = scratch_dir() / "partial.grid";
  fs::remove(grid);
  json cfg = builtin("toda-manufactured");
  cfg["max_iter"] = 1;
  cfg["output"] = grid.string();
  const Result r = cli({"solve-toda", write_config("partial.json", cfg).string()});
  CHECK(r.code == weylcli::kNoConvergence);
  CHECK(r.report()["solver"]["converged"] == false);
  CHECK(r.report()["solver"].contains("failure"));
  CHECK(fs::exists(grid));
  std::ifstream in(grid);
  CHECK_NOTHROW(weyl::read_grid(in));

  CHECK(cli({"solve-toda", "flat-product"}).code == weylcli::kConfigError);
}

TEST_CASE("list-scenarios") {
  const Result r = cli({"list-scenarios"});
  CHECK(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  CHECK(n == static_cast<int>(weylcli::builtin_scenarios().size()));
  CHECK(r.out.find("hyperhermitian-rezw") != std::string::npos);
}
