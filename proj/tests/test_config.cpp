#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "magedge/config.hpp"
#include "magedge/runner.hpp"
#include "support.hpp"

using namespace magedge;
using testing::error_kind;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("magedge_config_test_" + name);
  fs::remove_all(dir);
  return dir;
}

struct Run {
  int code;
  std::string err;
};

Run run(const std::string& command, const std::string& config, const fs::path& dir, RunOptions opts = {}) {
  opts.quiet = true;
  std::ostringstream log, err;
  const int code = run_command(command, config, dir.string(), opts, log, err);
  return {code, err.str()};
}

}  // namespace

TEST_CASE("shipped scenarios match their fixture files") {
  const auto names = scenario_names();
  CHECK(names.size() == 5);
  for (const auto& name : names) {
    const fs::path file = fs::path(MAGEDGE_SCENARIOS) / (name + ".json");
    REQUIRE(fs::exists(file));
    const Json fixture = Json::parse(slurp(file));
    CHECK(fixture == scenario_defaults(name));
    const RunConfig c = parse_config(fixture);
    CHECK(c.scenario == name);
    CHECK(c.eps_grid == dyadic_grid(3, 9));
    CHECK(c.tolerance == 1e-9);
    CHECK(c.seed == 42);
  }
  CHECK(error_kind([] { scenario_defaults("harper-quartic"); }) == ErrorKind::config);
}

TEST_CASE("scenario defaults resolve to the expected objects") {
  const auto general = parse_config(std::string(R"({"scenario": "harper-general-field"})"));
  CHECK(general.field.is_general());
  CHECK(general.field.bound() == 1.5);
  CHECK(general.regime == Regime::log);
  CHECK(general.quadrature_order == 64);
  CHECK(general.radius == 30);

  const auto slow = parse_config(std::string(R"({"scenario": "harper-slowly-varying"})"));
  CHECK(slow.field.is_slowly_varying());
  const Eigen::MatrixXd b = slow.field.evaluate(testing::pt({0, 0}));
  CHECK(b(0, 1) == doctest::Approx(1.0));

  const auto lr = parse_config(std::string(R"({"scenario": "longrange-alpha15"})"));
  CHECK(lr.regime == Regime::holder);
  CHECK(lr.alpha == 1.5);
  CHECK(lr.symbol.reach() == 12);

  const auto null = parse_config(std::string(R"({"scenario": "identity-null"})"));
  CHECK(null.radius == 10);
  CHECK(null.symbol.coefficients().size() == 1);

  // User keys override scenario defaults.
  const auto over = parse_config(std::string(R"({"scenario": "harper-constant", "radius": 7, "which": ["inf", "norm"]})"));
  CHECK(over.radius == 7);
  REQUIRE(over.which.size() == 2);
  CHECK(over.which[1] == EdgeKind::norm);
  CHECK(over.resolved["radius"] == 7);
  CHECK(over.resolved["which"] == Json::array({"inf", "norm"}));
}

TEST_CASE("grids, symbols and fields from JSON") {
  const auto lin = parse_config(std::string(R"({"eps_grid": {"linspace": [0.1, 0.5, 5]}})"));
  REQUIRE(lin.eps_grid.size() == 5);
  CHECK(lin.eps_grid[2] == doctest::Approx(0.3));
  const auto arr = parse_config(std::string(R"({"eps_grid": [0.125, 0.25]})"));
  CHECK(arr.eps_grid == std::vector<double>{0.125, 0.25});

  const auto inline_symbol = parse_config(std::string(
      R"({"symbol": {"dimension": 1, "coefficients": {"1": [0.5, 0], "-1": [0.5, 0]}}, "field": {"type": "unit", "dimension": 1}})"));
  CHECK(inline_symbol.symbol.dim() == 1);
  CHECK(inline_symbol.symbol.at({1}) == cplx(0.5, 0.0));

  const auto constant = field_from_json(Json::parse(R"({"type": "constant", "b": [[0, 2], [-2, 0]]})"));
  CHECK(constant.is_constant());
  CHECK(constant.bound() == doctest::Approx(2.0));

  const fs::path file = fs::temp_directory_path() / "magedge_symbol_fixture.json";
  std::ofstream(file) << symbol_to_json_text(HoppingSymbol::harper(2, 0.5));
  const auto loaded = symbol_from_json(Json(file.string()));
  CHECK(loaded.at({0, 1}) == cplx(0.5, 0.0));
}

TEST_CASE("config validation rejects bad input") {
  auto kind = [](const std::string& text) { return error_kind([&] { parse_config(text); }); };
  CHECK(kind(R"({"radius": 5, "colour": "red"})") == ErrorKind::config);
  CHECK(kind(R"({"field": {"type": "unit", "dimension": 2, "strength": 3}})") == ErrorKind::config);
  CHECK(kind(R"({"symbol": {"preset": "harper", "range": 2}})") == ErrorKind::config);
  CHECK(kind(R"({"harness": {"deltas": [0.5], "sigma": 1}})") == ErrorKind::config);
  CHECK(kind(R"({"fit": {"model": "cubic"}})") == ErrorKind::config);
  CHECK(kind(R"({"radius": 0})") == ErrorKind::config);
  CHECK(kind(R"({"radius": 2.5})") == ErrorKind::config);
  CHECK(kind(R"({"seed": -1})") == ErrorKind::config);
  CHECK(kind(R"({"tolerance": 0})") == ErrorKind::config);
  CHECK(kind(R"({"which": "max"})") == ErrorKind::config);
  CHECK(kind(R"({"regime": "smooth"})") == ErrorKind::config);
  CHECK(kind(R"({"scenario": "harper-quartic"})") == ErrorKind::config);
  CHECK(kind(R"({"field": {"type": "unit", "dimension": 3}})") == ErrorKind::config);
  CHECK(kind(R"({"eps_grid": {"geometric": [1, 2]}})") == ErrorKind::config);
  CHECK(kind(R"({"harness": {"dimensions": [3]}})") == ErrorKind::config);
  CHECK(kind(R"({"flux": {"triangles": [[[0, 0], [1, 0]]]}})") == ErrorKind::config);
  CHECK(kind("[1, 2") == ErrorKind::config);
  CHECK(error_kind([] { parse_config(std::string(R"({"symbol": "/nonexistent/symbol.json"})")); }) == ErrorKind::io);
}

TEST_CASE("runner: flux writes data and a manifest") {
  const auto dir = fresh_dir("flux");
  const auto r = run("flux", R"({"field": {"type": "unit", "dimension": 2}})", dir);
  CHECK(r.code == exit_ok);
  const std::string csv = slurp(dir / "flux.csv");
  CHECK(csv == "index,flux,phase_xy,phase_yz,phase_xz,cocycle_defect\n0,0.5,0,-0.5,0,0\n");

  const Json manifest = Json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["schema_version"] == 1);
  CHECK(manifest["command"] == "flux");
  CHECK(manifest["version"] == kVersion);
  CHECK(manifest["exit_code"] == 0);
  CHECK(manifest["outputs"] == Json::array({"flux.csv", "flux.json"}));
  CHECK(manifest["config"]["radius"] == 30);
  CHECK(manifest["timings"]["wall_seconds"].get<double>() >= 0.0);
}

TEST_CASE("runner: exit codes") {
  CHECK(run("flux", R"({"bogus": 1})", fresh_dir("bad_key")).code == exit_usage);
  CHECK(run("plot", "{}", fresh_dir("bad_command")).code == exit_usage);
  CHECK(run("flux", "not json", fresh_dir("bad_json")).code == exit_usage);
  const auto err = run("flux", R"({"bogus": 1})", fresh_dir("bad_key"));
  CHECK(err.err.find("unknown key 'bogus'") != std::string::npos);

  const auto dir = fresh_dir("verify_null");
  CHECK(run("verify", R"({"scenario": "identity-null", "radius": 3, "which": ["sup", "inf", "norm"]})", dir).code ==
        exit_ok);
  CHECK(fs::exists(dir / "certificate_norm.json"));
  CHECK(Json::parse(slurp(dir / "verify.json"))["passed"] == true);

  // An iteration cap that cannot be met leaves the sweep incomplete.
  const std::string capped =
      R"({"scenario": "harper-constant", "radius": 10, "tolerance": 1e-15, "max_iter": 2, "eps_grid": [0.125, 0.25]})";
  CHECK(run("sweep", capped, fresh_dir("capped_sweep")).code == exit_certificate);
  CHECK(run("verify", capped, fresh_dir("capped_verify")).code == exit_certificate);

  // Sweeps need eps in (0, 1/2].
  CHECK(run("sweep", R"({"scenario": "identity-null", "radius": 2, "eps_grid": [0.25, 0.75]})",
            fresh_dir("grid_domain"))
            .code == exit_usage);

  // A butterfly box above the dense cap is a usage error.
  CHECK(run("butterfly", R"({"scenario": "harper-constant", "radius": 30, "eps_grid": [0.5]})",
            fresh_dir("butterfly_cap"))
            .code == exit_usage);
}

TEST_CASE("runner: seed and worker overrides reach the resolved config") {
  const auto dir = fresh_dir("seed");
  RunOptions opts;
  opts.seed = 7;
  opts.workers = 1;
  CHECK(run("sweep", R"({"scenario": "identity-null", "radius": 2, "eps_grid": [0.25, 0.5]})", dir, opts).code ==
        exit_ok);
  const Json manifest = Json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["config"]["seed"] == 7);
  CHECK(manifest["config"]["workers"] == 1);
  CHECK(slurp(dir / "sweep_sup.csv") == "eps,edge,delta_edge,residual,flagged\n0,1,0,0,0\n0.25,1,0,0,1\n0.5,1,0,0,1\n");
}

TEST_CASE("runner: fit on synthetic data") {
  const auto dir = fresh_dir("fit");
  const auto r = run("fit", R"({"fit": {"data": {"eps": [0.001953125, 0.00390625, 0.0078125, 0.015625, 0.03125, 0.0625, 0.125],
                                           "delta": [0.00390625, 0.0078125, 0.015625, 0.03125, 0.0625, 0.125, 0.25]}}})",
                     dir);
  CHECK(r.code == exit_ok);
  const Json fit = Json::parse(slurp(dir / "fit.json"));
  CHECK(fit["power"]["p"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit["power"]["c"].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit["preferred"] == "power");
}

TEST_CASE("runner: harness") {
  const auto dir = fresh_dir("harness");
  const auto r = run("harness", R"({"harness": {"deltas": [0.5, 0.25, 0.125]}})", dir);
  CHECK(r.code == exit_ok);
  const Json report = Json::parse(slurp(dir / "harness.json"));
  CHECK(report["passed"] == true);
  CHECK(report["dimensions"].size() == 2);
  for (const auto& p : report["linear_term"]["points"]) CHECK(p["passed"] == true);
}
