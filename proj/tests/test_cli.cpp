#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "magedge_cli_test";

struct Result {
  int code;
  std::string out;
};

Result sh(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + std::string(MAGEDGE_CLI) + "' " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kRoot);
  const fs::path p = kRoot / (name + ".json");
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

Result run(const std::string& command, const fs::path& config, const fs::path& out, const std::string& extra = "",
           const std::string& env = "") {
  fs::remove_all(out);
  return sh(command + " --config '" + config.string() + "' --out '" + out.string() + "' --quiet " + extra, env);
}

}  // namespace

TEST_CASE("version and usage errors") {
  const auto v = sh("--version");
  CHECK(v.code == 0);
  CHECK(v.out.find("0.1.0") != std::string::npos);
  CHECK(sh("").code == 1);
  CHECK(sh("sweep --out /tmp/x").code == 1);
  CHECK(sh("sweep --config /nonexistent.json --out /tmp/x").code == 1);
  const auto cfg = write_config("plain", "{}");
  CHECK(sh("sweep --config '" + cfg.string() + "' --out /tmp/x --workers -2").code == 1);
}

TEST_CASE("config errors exit with 1") {
  const auto bad = write_config("bad_key", R"({"scenario": "harper-constant", "radus": 10})");
  const auto r = run("sweep", bad, kRoot / "bad_key_out");
  CHECK(r.code == 1);
  CHECK(r.out.find("unknown key 'radus'") != std::string::npos);
  const auto broken = write_config("broken", "{\"radius\": ");
  CHECK(run("flux", broken, kRoot / "broken_out").code == 1);
}

TEST_CASE("flux command on the unit triangle") {
  const auto cfg = write_config("flux", R"({"field": {"type": "unit", "dimension": 2},
    "flux": {"triangles": [[[0, 0], [1, 0], [0, 1]], [[0, 0], [1, 1], [2, 2]]]}})");
  const auto dir = kRoot / "flux_out";
  CHECK(run("flux", cfg, dir).code == 0);
  const auto rows = lines(slurp(dir / "flux.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].rfind("0,0.5,", 0) == 0);
  CHECK(rows[2] == "1,0,0,0,0,0");
  CHECK(Json::parse(slurp(dir / "flux.json"))["passed"] == true);

  const auto general = write_config("flux_general", R"({"field": {"type": "sine-modulated"}, "quadrature_order": 32,
    "flux": {"triangles": [[[-3, -3], [2.5, 1], [0.5, 3]], [[1, -2], [-2, 2.5], [3, 3]]]}})");
  CHECK(run("flux", general, kRoot / "flux_general_out").code == 0);
  CHECK(Json::parse(slurp(kRoot / "flux_general_out" / "flux.json"))["max_cocycle_defect"].get<double>() <= 1e-8);
}

TEST_CASE("butterfly row counts and the 3-site path") {
  const auto cfg = write_config("butterfly", R"({"scenario": "harper-constant", "radius": 10,
    "eps_grid": {"linspace": [0.01, 0.5, 50]}})");
  const auto dir = kRoot / "butterfly_out";
  CHECK(run("butterfly", cfg, dir).code == 0);
  const auto rows = lines(slurp(dir / "butterfly.csv"));
  CHECK(rows.front() == "eps,eigenvalue");
  CHECK(rows.size() == 1 + 50 * 441);
  CHECK(lines(slurp(dir / "gaps.csv")).front() == "eps,left,right");

  const auto path = write_config("path", R"({"symbol": {"preset": "harper", "dimension": 1},
    "field": {"type": "unit", "dimension": 1}, "radius": 1, "eps_grid": [0.25, 0.5]})");
  const auto pdir = kRoot / "path_out";
  CHECK(run("butterfly", path, pdir).code == 0);
  const auto prow = lines(slurp(pdir / "butterfly.csv"));
  REQUIRE(prow.size() == 7);
  for (int i = 0; i < 2; ++i) {
    const double expected[] = {-std::sqrt(2.0), 0.0, std::sqrt(2.0)};
    for (int k = 0; k < 3; ++k) {
      const std::string& row = prow[1 + 3 * i + k];
      const double v = std::stod(row.substr(row.find(',') + 1));
      CHECK(std::fabs(v - expected[k]) <= 1e-12);
    }
  }

  // The dense cap applies to the whole box.
  CHECK(run("butterfly", cfg, kRoot / "capped_out", "", "MAGEDGE_DENSE_CAP=100").code == 1);
}

TEST_CASE("single-worker runs are byte-identical") {
  const auto cfg = write_config("determinism", R"({"scenario": "harper-general-field", "radius": 8,
    "which": ["sup", "inf", "norm"], "eps_grid": {"dyadic": [3, 6]}})");
  const auto a = kRoot / "det_a", b = kRoot / "det_b";
  CHECK(run("verify", cfg, a, "--workers 1 --seed 5").code == 0);
  CHECK(run("verify", cfg, b, "--workers 1 --seed 5").code == 0);
  for (const char* name : {"sweep_sup.csv", "sweep_inf.csv", "sweep_norm.csv", "certificate_sup.json",
                           "certificate_inf.json", "certificate_norm.json", "verify.json"})
    CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name);
  Json ma = Json::parse(slurp(a / "manifest.json")), mb = Json::parse(slurp(b / "manifest.json"));
  CHECK(ma["config"]["seed"] == 5);
  ma.erase("timings");
  mb.erase("timings");
  CHECK(ma == mb);
}

TEST_CASE("sweep, fit and verify") {
  const auto null = write_config("null", R"({"scenario": "identity-null", "radius": 4})");
  const auto ndir = kRoot / "null_out";
  CHECK(run("sweep", null, ndir).code == 0);
  const auto rows = lines(slurp(ndir / "sweep_sup.csv"));
  REQUIRE(rows.size() == 9);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::vector<std::string> cols;
    std::istringstream in(rows[i]);
    for (std::string c; std::getline(in, c, ',');) cols.push_back(c);
    CHECK(cols[2] == "0");
  }

  const auto synth = write_config("synthetic", R"({"fit": {"model": "power", "data": {
    "eps": [0.015625, 0.03125, 0.0625, 0.125, 0.25], "delta": [0.03125, 0.0625, 0.125, 0.25, 0.5]}}})");
  const auto fdir = kRoot / "fit_out";
  CHECK(run("fit", synth, fdir).code == 0);
  const Json fit = Json::parse(slurp(fdir / "fit.json"));
  CHECK(fit["power"]["p"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(!fit.contains("power_log"));

  const auto harper = write_config("harper_verify", R"({"scenario": "harper-constant", "radius": 10})");
  const auto vdir = kRoot / "verify_out";
  CHECK(run("verify", harper, vdir).code == 0);
  const Json cert = Json::parse(slurp(vdir / "certificate_sup.json"));
  CHECK(cert["finite"] == true);
  CHECK(cert["schema_version"] == 1);
  const Json manifest = Json::parse(slurp(vdir / "manifest.json"));
  CHECK(manifest["outputs"] == Json::array({"sweep_sup.csv", "certificate_sup.json", "verify.json"}));
}
