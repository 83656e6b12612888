#include "magedge/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>

#include "magedge/config.hpp"
#include "magedge/error.hpp"
#include "magedge/numeric.hpp"

namespace magedge {

namespace {

namespace fs = std::filesystem;

constexpr double kCocycleLimit = 1e-8;
constexpr double kNormalizationLimit = 1e-10;
constexpr double kLinearTermLimit = 1e-8;
constexpr double kStabilityFactor = 2.0;

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write '" + (dir_ / name).string() + "'");
    out.imbue(std::locale::classic());
    body(out);
    if (!out) fail(ErrorKind::io, "write failed for '" + (dir_ / name).string() + "'");
    files_.push_back(name);
  }
  void write_json(const std::string& name, const Json& j) {
    write(name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  }
  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

struct Context {
  RunConfig config;
  Outputs& out;
  std::ostream& log;
  bool quiet;

  void say(const std::string& s) const {
    if (!quiet) log << s << '\n';
  }
};

Box config_box(const RunConfig& c) { return Box(c.symbol.dim(), c.radius); }

int cmd_flux(Context& ctx) {
  const RunConfig& c = ctx.config;
  const QuadratureRule rule(c.quadrature_order);
  std::vector<Triangle> tris = c.flux.triangles;
  if (tris.empty()) {
    if (c.field.dim() < 2) fail(ErrorKind::config, "flux.triangles must be given in dimension 1");
    Point o = Point::Zero(c.field.dim()), e1 = o, e2 = o;
    e1[0] = 1.0;
    e2[1] = 1.0;
    tris.push_back({o, e1, e2});
  }
  double worst = 0.0;
  ctx.out.write("flux.csv", [&](std::ostream& o) {
    o << "index,flux,phase_xy,phase_yz,phase_xz,cocycle_defect\n";
    for (std::size_t i = 0; i < tris.size(); ++i) {
      const Triangle& t = tris[i];
      const double defect = cocycle_defect(c.field, c.flux.eps, t.x, t.y, t.z, rule);
      worst = std::max(worst, std::abs(defect));
      o << i << ',' << format_double(flux_triangle(c.field, t, rule)) << ','
        << format_double(peierls_phase(c.field, c.flux.eps, t.x, t.y, rule)) << ','
        << format_double(peierls_phase(c.field, c.flux.eps, t.y, t.z, rule)) << ','
        << format_double(peierls_phase(c.field, c.flux.eps, t.x, t.z, rule)) << ',' << format_double(defect) << '\n';
    }
  });
  const bool passed = worst <= kCocycleLimit;
  ctx.out.write_json("flux.json", {{"schema_version", 1},
                                   {"triangles", tris.size()},
                                   {"max_cocycle_defect", worst},
                                   {"limit", kCocycleLimit},
                                   {"passed", passed}});
  ctx.say("flux: " + std::to_string(tris.size()) + " triangles, max cocycle defect " + format_double(worst));
  return passed ? exit_ok : exit_certificate;
}

int cmd_butterfly(Context& ctx) {
  const RunConfig& c = ctx.config;
  const Box box = config_box(c);
  const QuadratureRule rule(c.quadrature_order);
  if (box.size() > default_dense_cap())
    fail(ErrorKind::size_cap, "butterfly box has " + std::to_string(box.size()) + " sites, above the dense cap " +
                                  std::to_string(default_dense_cap()));
  std::vector<std::pair<double, SpectrumReport>> rows;
  for (double eps : c.eps_grid) {
    const auto m = build_peierls_matrix(c.symbol, c.field, eps, box, rule);
    rows.emplace_back(eps, full_spectrum(m, c.butterfly.gap_threshold));
  }
  ctx.out.write("butterfly.csv", [&](std::ostream& o) {
    o << "eps,eigenvalue\n";
    for (const auto& [eps, r] : rows)
      for (double e : r.eigenvalues) o << format_double(eps) << ',' << format_double(e) << '\n';
  });
  std::size_t gaps = 0;
  ctx.out.write("gaps.csv", [&](std::ostream& o) {
    o << "eps,left,right\n";
    for (const auto& [eps, r] : rows)
      for (const auto& g : r.gaps) {
        o << format_double(eps) << ',' << format_double(g.left) << ',' << format_double(g.right) << '\n';
        ++gaps;
      }
  });
  ctx.say("butterfly: " + std::to_string(rows.size()) + " flux values, " + std::to_string(box.size()) +
          " sites, " + std::to_string(gaps) + " gaps");
  return exit_ok;
}

std::vector<EdgeSweep> run_sweeps(Context& ctx) {
  const RunConfig& c = ctx.config;
  auto sweeps = sweep_edge_kinds(c.symbol, c.field, c.which, c.eps_grid, config_box(c), c.sweep_options());
  for (const auto& s : sweeps) {
    ctx.out.write("sweep_" + to_string(s.which) + ".csv", [&](std::ostream& o) { write_sweep_csv(s, o); });
    ctx.say("sweep " + to_string(s.which) + ": E(0) = " + format_double(s.edge0) + ", " +
            std::to_string(s.points.size()) + " points" + (s.complete ? "" : " (incomplete)"));
  }
  return sweeps;
}

int cmd_sweep(Context& ctx) {
  const auto sweeps = run_sweeps(ctx);
  Json summary = {{"schema_version", 1}, {"sweeps", Json::array()}};
  bool complete = true;
  for (const auto& s : sweeps) {
    complete = complete && s.complete;
    summary["sweeps"].push_back({{"which", to_string(s.which)},
                                 {"edge0", s.edge0},
                                 {"noise_floor", s.noise_floor},
                                 {"points", s.points.size()},
                                 {"complete", s.complete}});
  }
  ctx.out.write_json("sweep.json", summary);
  return complete ? exit_ok : exit_certificate;
}

int cmd_fit(Context& ctx) {
  const RunConfig& c = ctx.config;
  EdgeSweep sweep;
  if (!c.fit.data_eps.empty()) {
    sweep = sweep_from_data(c.fit.data_eps, c.fit.data_delta, c.noise_factor * c.tolerance);
  } else {
    auto sweeps = run_sweeps(ctx);
    sweep = sweeps.front();
    if (!sweep.complete) fail(ErrorKind::not_converged, "sweep did not converge at every grid point");
  }
  Json report = {{"schema_version", 1}};
  std::optional<FitReport> power, power_log;
  if (c.fit.model != "power_log") {
    power = fit_power(sweep);
    report["power"] = Json::parse(fit_to_json_text(*power));
    report["power"].erase("schema_version");
  }
  if (c.fit.model != "power") {
    power_log = fit_power_log(sweep);
    report["power_log"] = Json::parse(fit_to_json_text(*power_log));
    report["power_log"].erase("schema_version");
  }
  if (power && power_log)
    report["preferred"] = power->residual <= power_log->residual ? "power" : "power_log";
  ctx.out.write_json("fit.json", report);
  if (power) ctx.say("fit: p = " + format_double(power->p) + ", C = " + format_double(power->c));
  if (power_log) ctx.say("fit: C_log = " + format_double(power_log->c));
  return exit_ok;
}

int cmd_verify(Context& ctx) {
  const RunConfig& c = ctx.config;
  const auto sweeps = run_sweeps(ctx);
  const SchurNorms norms{schur_alpha_norm(c.symbol, c.alpha), schur_alpha_norm(c.symbol, 2.0)};
  bool all = true;
  Json summary = {{"schema_version", 1}, {"regime", to_string(c.regime)}, {"alpha", c.alpha}, {"certificates", Json::array()}};
  for (const auto& s : sweeps) {
    if (!s.complete) {
      all = false;
      summary["certificates"].push_back({{"which", to_string(s.which)}, {"passed", false}, {"reason", "incomplete sweep"}});
      continue;
    }
    const Certificate cert = verify_theorem_bound(s, c.alpha, norms, c.regime, c.field);
    ctx.out.write("certificate_" + to_string(s.which) + ".json",
                  [&](std::ostream& o) { o << certificate_to_json_text(cert, s) << '\n'; });
    all = all && cert.passed();
    summary["certificates"].push_back({{"which", to_string(s.which)},
                                       {"max_ratio", cert.max_ratio},
                                       {"diverges", cert.diverges},
                                       {"passed", cert.passed()}});
    ctx.say("verify " + to_string(s.which) + ": max ratio " + format_double(cert.max_ratio) +
            (cert.passed() ? ", pass" : ", FAIL"));
  }
  summary["passed"] = all;
  ctx.out.write_json("verify.json", summary);
  return all ? exit_ok : exit_certificate;
}

int cmd_harness(Context& ctx) {
  const RunConfig& c = ctx.config;
  const HarnessConfig& h = c.harness;
  const QuadratureRule rule(c.quadrature_order);
  Json report = {{"schema_version", 1}, {"alpha", h.alpha}, {"step", h.step}, {"dimensions", Json::array()}};
  bool all = true;

  for (int d : h.dimensions) {
    const HoppingSymbol symbol = c.symbol.dim() == d ? c.symbol : HoppingSymbol::harper(d);
    Json dj = {{"dimension", d}, {"symbol", symbol.name()}, {"deltas", Json::array()}};
    std::vector<double> c_alpha, c_one, ratios;
    bool normalization_ok = true, schur_ok = true;
    for (double delta : h.deltas) {
      const Mollifier moll(d, delta, h.step);
      const auto samples = axis_samples(moll);
      const double norm_defect = normalization_defect(moll);
      const double ca = mollifier_difference_bound(moll, std::clamp(h.alpha, 1.0, 2.0), samples);
      const double c1 = mollifier_difference_bound(moll, 1.0, samples);
      const SchurDifference sd = schur_difference_certificate(symbol, moll, std::max(h.alpha, 1.0));
      const double ratio = sd.lhs / std::pow(delta, sd.alpha);
      const bool annihilated = mollified_kernel(symbol, moll).off_diagonal_annihilated;
      c_alpha.push_back(ca);
      c_one.push_back(c1);
      ratios.push_back(ratio);
      normalization_ok = normalization_ok && std::abs(norm_defect) <= kNormalizationLimit;
      schur_ok = schur_ok && sd.holds() && std::isfinite(ratio);
      dj["deltas"].push_back({{"delta", delta},
                              {"normalization_defect", norm_defect},
                              {"difference_constant_alpha", ca},
                              {"difference_constant_1", c1},
                              {"schur_lhs", sd.lhs},
                              {"schur_rhs", sd.rhs},
                              {"schur_ratio", ratio},
                              {"off_diagonal_annihilated", annihilated}});
    }
    auto spread = [](const std::vector<double>& v) {
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      return *lo > 0.0 ? *hi / *lo : (*hi == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
    };
    const bool stable = spread(c_alpha) <= kStabilityFactor && spread(c_one) <= kStabilityFactor;
    const bool ratio_bounded = spread(ratios) <= kStabilityFactor;
    dj["normalization_ok"] = normalization_ok;
    dj["difference_constant_spread"] = std::max(spread(c_alpha), spread(c_one));
    dj["difference_constant_stable"] = stable;
    dj["schur_ratio_spread"] = spread(ratios);
    dj["schur_ok"] = schur_ok && ratio_bounded;
    all = all && normalization_ok && stable && schur_ok && ratio_bounded;
    report["dimensions"].push_back(dj);
  }

  // The zero-linear-term identity needs d = 2; a non-constant field is reported only.
  const FieldSpec field = c.field.dim() == 2 && !c.field.is_slowly_varying() ? c.field : FieldSpec::unit(2);
  std::vector<std::pair<Point, Point>> pairs = h.linear_pairs;
  if (pairs.empty()) pairs.emplace_back(Point::Zero(2), Point::Unit(2, 0));
  Json lj = Json::array();
  for (double delta : h.deltas) {
    const Mollifier moll(2, delta, h.step);
    for (const auto& [x, xp] : pairs) {
      if (x.size() != 2 || xp.size() != 2) fail(ErrorKind::config, "linear pairs must be points in d = 2");
      const double value = linear_term_integral(moll, field, x, xp, rule);
      const double scale = linear_term_scale(moll, x, xp);
      const bool ok = !field.is_constant() || std::abs(value) <= kLinearTermLimit * scale;
      if (field.is_constant()) all = all && ok;
      lj.push_back({{"delta", delta},
                    {"x", {x[0], x[1]}},
                    {"x_prime", {xp[0], xp[1]}},
                    {"value", value},
                    {"scale", scale},
                    {"checked", field.is_constant()},
                    {"passed", ok}});
    }
  }
  report["linear_term"] = {{"field", field.label()}, {"points", lj}};
  report["passed"] = all;
  ctx.out.write_json("harness.json", report);
  ctx.say(std::string("harness: ") + (all ? "pass" : "FAIL"));
  return all ? exit_ok : exit_certificate;
}

int dispatch(const std::string& command, Context& ctx) {
  if (command == "flux") return cmd_flux(ctx);
  if (command == "butterfly") return cmd_butterfly(ctx);
  if (command == "sweep") return cmd_sweep(ctx);
  if (command == "fit") return cmd_fit(ctx);
  if (command == "verify") return cmd_verify(ctx);
  if (command == "harness") return cmd_harness(ctx);
  fail(ErrorKind::config, "unknown command '" + command + "'");
}

bool is_usage_error(ErrorKind k) {
  switch (k) {
    case ErrorKind::not_converged:
      return false;
    default:
      return true;
  }
}

}  // namespace

std::vector<std::string> command_names() { return {"flux", "butterfly", "sweep", "fit", "verify", "harness"}; }

int run_command(const std::string& command, const std::string& config_text, const std::string& out_dir,
                const RunOptions& options, std::ostream& log, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto names = command_names();
    if (std::find(names.begin(), names.end(), command) == names.end())
      fail(ErrorKind::config, "unknown command '" + command + "'");
    if (out_dir.empty()) fail(ErrorKind::config, "output directory is required");

    Json user;
    try {
      user = Json::parse(config_text);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
    }
    if (!user.is_object()) fail(ErrorKind::config, "config must be a JSON object");
    if (options.seed) user["seed"] = *options.seed;
    if (options.workers) user["workers"] = *options.workers;

    Outputs out(out_dir);
    Context ctx{parse_config(user), out, log, options.quiet};
    const int code = dispatch(command, ctx);

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json manifest = {{"schema_version", 1},
                     {"command", command},
                     {"version", kVersion},
                     {"config", ctx.config.resolved},
                     {"outputs", out.files()},
                     {"exit_code", code},
                     {"timings", {{"wall_seconds", seconds}}}};
    out.write_json("manifest.json", manifest);
    return code;
  } catch (const Error& e) {
    err << "magedge " << command << ": " << e.what() << '\n';
    return is_usage_error(e.kind()) ? exit_usage : exit_certificate;
  } catch (const std::exception& e) {
    err << "magedge " << command << ": " << e.what() << '\n';
    return exit_usage;
  }
}

}  // namespace magedge
