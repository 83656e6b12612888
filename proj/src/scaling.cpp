#include "magedge/scaling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "magedge/error.hpp"
#include "magedge/numeric.hpp"

namespace magedge {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Usable {
  std::vector<double> eps, delta;
};

Usable usable_points(const EdgeSweep& sweep) {
  Usable u;
  for (const auto& p : sweep.points) {
    if (p.flagged || !p.converged || !(p.delta > 0.0)) continue;
    u.eps.push_back(p.eps);
    u.delta.push_back(p.delta);
  }
  if (u.eps.size() < 3)
    fail(ErrorKind::invalid_argument,
         "fit needs at least 3 points above the noise floor, got " + std::to_string(u.eps.size()));
  return u;
}

}  // namespace

std::vector<double> dyadic_grid(int kmin, int kmax) {
  if (kmin < 1 || kmax < kmin) fail(ErrorKind::invalid_argument, "dyadic grid needs 1 <= kmin <= kmax");
  std::vector<double> g;
  for (int k = kmax; k >= kmin; --k) g.push_back(std::ldexp(1.0, -k));
  return g;
}

void validate_eps_grid(std::span<const double> grid) {
  if (grid.empty()) fail(ErrorKind::invalid_argument, "eps grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] <= 0.5)) fail(ErrorKind::domain, "eps grid values must lie in (0, 1/2]");
    if (i > 0 && !(grid[i] > grid[i - 1])) fail(ErrorKind::invalid_argument, "eps grid must be strictly increasing");
  }
}

std::vector<EdgeSweep> sweep_edge_kinds(const HoppingSymbol& symbol, const FieldSpec& field,
                                        std::span<const EdgeKind> kinds, std::span<const double> eps_grid,
                                        const Box& box, const SweepOptions& opts) {
  validate_eps_grid(eps_grid);
  if (kinds.empty()) fail(ErrorKind::invalid_argument, "no edge kinds requested");
  if (opts.direction != 1.0 && opts.direction != -1.0)
    fail(ErrorKind::invalid_argument, "sweep direction must be +1 or -1");
  if (symbol.dim() != box.dim() || field.dim() != box.dim())
    fail(ErrorKind::dimension_mismatch, "symbol, field and box dimensions differ");

  bool need_sup = false, need_inf = false;
  for (EdgeKind k : kinds) {
    need_sup = need_sup || k != EdgeKind::inf;
    need_inf = need_inf || k != EdgeKind::sup;
  }

  // norm is assembled from the sup and inf solves exactly as edge() does.
  struct Solved {
    EdgeResult sup, inf;
    EdgeResult get(EdgeKind k) const {
      if (k == EdgeKind::sup) return sup;
      if (k == EdgeKind::inf) return inf;
      EdgeResult out = std::abs(sup.value) >= std::abs(inf.value) ? sup : inf;
      out.value = std::max(std::abs(sup.value), std::abs(inf.value));
      out.residual = std::max(sup.residual, inf.residual);
      out.iterations = sup.iterations + inf.iterations;
      out.converged = sup.converged && inf.converged;
      return out;
    }
  };
  auto solve = [&](double eps) {
    const auto m = build_peierls_matrix(symbol, field, eps, box, opts.rule);
    Solved s;
    if (need_sup) s.sup = edge_unchecked(m.matrix, EdgeKind::sup, opts.solver);
    if (need_inf) s.inf = edge_unchecked(m.matrix, EdgeKind::inf, opts.solver);
    return s;
  };

  const Solved bare = solve(0.0);
  const std::size_t n = eps_grid.size();
  std::vector<Solved> solved(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        solved[i] = solve(opts.direction * eps_grid[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };

  const int workers = std::clamp<int>(opts.workers, 1, static_cast<int>(n));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);

  std::vector<EdgeSweep> out;
  for (EdgeKind kind : kinds) {
    EdgeSweep sweep;
    sweep.which = kind;
    sweep.direction = opts.direction;
    sweep.noise_floor = opts.noise_factor * opts.solver.tol;
    const EdgeResult r0 = bare.get(kind);
    sweep.edge0 = r0.value;
    sweep.residual0 = r0.residual;
    sweep.complete = r0.converged;
    // Points past the first non-converged one are dropped so the sweep is a
    // clean prefix of the grid.
    for (std::size_t i = 0; i < n && sweep.complete; ++i) {
      const EdgeResult r = solved[i].get(kind);
      SweepPoint p;
      p.eps = eps_grid[i];
      p.edge = r.value;
      p.delta = std::abs(r.value - sweep.edge0);
      p.residual = r.residual;
      p.iterations = r.iterations;
      p.converged = r.converged;
      p.flagged = !r.converged || p.delta < sweep.noise_floor;
      sweep.points.push_back(p);
      sweep.complete = r.converged;
    }
    out.push_back(std::move(sweep));
  }
  return out;
}

EdgeSweep sweep_edges(const HoppingSymbol& symbol, const FieldSpec& field, EdgeKind which,
                      std::span<const double> eps_grid, const Box& box, const SweepOptions& opts) {
  const EdgeKind kinds[] = {which};
  return sweep_edge_kinds(symbol, field, kinds, eps_grid, box, opts).front();
}

EdgeSweep sweep_from_data(std::span<const double> eps, std::span<const double> delta, double noise_floor) {
  if (eps.size() != delta.size()) fail(ErrorKind::dimension_mismatch, "eps and delta lengths differ");
  validate_eps_grid(eps);
  EdgeSweep sweep;
  sweep.noise_floor = noise_floor;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!std::isfinite(delta[i]) || delta[i] < 0.0)
      fail(ErrorKind::not_finite, "delta values must be finite and non-negative");
    SweepPoint p;
    p.eps = eps[i];
    p.delta = delta[i];
    p.edge = delta[i];
    p.flagged = delta[i] < noise_floor;
    sweep.points.push_back(p);
  }
  return sweep;
}

FitReport fit_power(const EdgeSweep& sweep) {
  const Usable u = usable_points(sweep);
  const std::size_t n = u.eps.size();
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = std::log(u.eps[i]);
    y[i] = std::log(u.delta[i]);
  }
  const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(y);
  FitReport r;
  r.model = FitModel::power;
  r.c = std::exp(coef[0]);
  r.p = coef[1];
  r.residual = (a * coef - y).norm();
  r.points_used = static_cast<int>(n);
  return r;
}

FitReport fit_power_log(const EdgeSweep& sweep) {
  const Usable u = usable_points(sweep);
  const std::size_t n = u.eps.size();
  for (double e : u.eps)
    if (!(e < std::exp(-1.0))) fail(ErrorKind::domain, "eps ln(1/eps) model needs every eps < 1/e");
  // With the slope fixed, the least-squares intercept is the mean offset.
  std::vector<double> offsets(n);
  for (std::size_t i = 0; i < n; ++i)
    offsets[i] = std::log(u.delta[i]) - std::log(u.eps[i] * std::log(1.0 / u.eps[i]));
  const double lnc = exact_sum(offsets) / static_cast<double>(n);
  double ss = 0.0;
  for (double o : offsets) ss += (o - lnc) * (o - lnc);
  FitReport r;
  r.model = FitModel::power_log;
  r.c = std::exp(lnc);
  r.p = 1.0;
  r.residual = std::sqrt(ss);
  r.points_used = static_cast<int>(n);
  return r;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::holder: return "holder";
    case Regime::log: return "log";
    case Regime::lipschitz: return "lipschitz";
  }
  return "lipschitz";
}

Regime regime_from_string(const std::string& s) {
  if (s == "holder") return Regime::holder;
  if (s == "log") return Regime::log;
  if (s == "lipschitz") return Regime::lipschitz;
  fail(ErrorKind::config, "unknown regime '" + s + "' (expected holder, log or lipschitz)");
}

Certificate verify_theorem_bound(const EdgeSweep& sweep, double alpha, const SchurNorms& norms, Regime regime,
                                 const FieldSpec& field) {
  if (regime == Regime::holder && !(alpha >= 1.0 && alpha < 2.0))
    fail(ErrorKind::domain, "holder regime needs 1 <= alpha < 2");
  if (regime != Regime::holder && !(alpha >= 2.0))
    fail(ErrorKind::domain, to_string(regime) + " regime needs alpha >= 2");
  if (regime == Regime::lipschitz && field.is_general())
    fail(ErrorKind::invalid_argument, "lipschitz regime needs a constant or slowly varying field");
  if (!sweep.complete) fail(ErrorKind::not_converged, "sweep is incomplete");
  if (sweep.points.empty()) fail(ErrorKind::invalid_argument, "sweep has no points");

  const double norm = regime == Regime::holder ? norms.alpha_norm : norms.norm2;
  if (!(norm > 0.0) || !std::isfinite(norm)) fail(ErrorKind::domain, "Schur norm must be positive and finite");

  Certificate c;
  c.regime = regime;
  c.alpha = alpha;
  for (const auto& p : sweep.points) {
    double scale = 0.0;
    switch (regime) {
      case Regime::holder: scale = std::pow(p.eps, alpha / 2.0); break;
      case Regime::log: scale = p.eps * std::log(1.0 / p.eps); break;
      case Regime::lipschitz: scale = p.eps; break;
    }
    const double ratio = p.delta / (norm * scale);
    c.ratios.push_back(ratio);
    c.finite = c.finite && std::isfinite(ratio);
  }
  c.max_ratio = *std::max_element(c.ratios.begin(), c.ratios.end());
  c.median_ratio = median(c.ratios);
  const std::size_t third = (c.ratios.size() + 2) / 3;
  c.small_eps_max = *std::max_element(c.ratios.begin(), c.ratios.begin() + static_cast<std::ptrdiff_t>(third));
  c.diverges = c.small_eps_max > 2.0 * c.median_ratio;
  return c;
}

double midconvex_defect(std::span<const double> xs, std::span<const double> values, double beta) {
  if (xs.size() != values.size()) fail(ErrorKind::dimension_mismatch, "sample lengths differ");
  if (xs.size() < 5) fail(ErrorKind::invalid_argument, "mid-convexity needs at least 5 samples");
  if (!(beta > 0.0)) fail(ErrorKind::domain, "beta must be positive");
  const std::size_t n = xs.size();
  const double h = (xs[n - 1] - xs[0]) / static_cast<double>(n - 1);
  if (!(h > 0.0)) fail(ErrorKind::invalid_argument, "grid must be increasing");
  for (std::size_t i = 0; i < n; ++i) {
    const double expect = xs[0] + static_cast<double>(i) * h;
    if (std::abs(xs[i] - expect) > 1e-9 * std::max(std::abs(h), std::abs(expect)))
      fail(ErrorKind::invalid_argument, "mid-convexity needs a uniform grid");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; j += 2) {
      const std::size_t mid = (i + j) / 2;
      const double half = 0.5 * (xs[j] - xs[i]);
      const double d = (values[mid] - 0.5 * values[i] - 0.5 * values[j]) / std::pow(half, beta);
      worst = std::max(worst, d);
    }
  }
  return worst;
}

int nenciu_steps(double eta) {
  if (!(eta > 0.0 && eta < 0.5)) fail(ErrorKind::domain, "eta must lie in (0, 1/2)");
  int n = 0;
  while (!(std::ldexp(eta, n) > 1.0)) ++n;
  return n;
}

ModulusBound make_modulus_bound(double m, double s, double beta) {
  if (!(beta >= 0.5 && beta <= 1.0)) fail(ErrorKind::domain, "beta must lie in [1/2, 1]");
  if (!(m >= 0.0) || !std::isfinite(m)) fail(ErrorKind::domain, "M must be finite and non-negative");
  if (!(s >= 0.0) || !std::isfinite(s)) fail(ErrorKind::domain, "S must be finite and non-negative");
  ModulusBound b;
  b.beta = beta;
  b.m = m;
  b.s = s;
  if (beta < 1.0) b.c_beta = 2.0 * s + m / (1.0 - std::pow(2.0, beta - 1.0));
  return b;
}

double ModulusBound::operator()(double eta) const {
  if (!(eta > 0.0 && eta < 0.5)) fail(ErrorKind::domain, "eta must lie in (0, 1/2)");
  if (beta < 1.0) return c_beta * std::pow(eta, beta);
  return 2.0 * s * eta + m * eta * nenciu_steps(eta);
}

double nenciu_modulus(double m, double s, double beta, double eta) {
  return make_modulus_bound(m, s, beta)(eta);
}

InductionPoints induction_identity_check(double a, double b, int n) {
  if (!(a < b)) fail(ErrorKind::invalid_argument, "induction check needs a < b");
  if (n < 1) fail(ErrorKind::invalid_argument, "induction check needs n >= 1");
  // 2^-1 + ... + 2^-n = 1 - 2^-n, summed term by term as in the telescoping.
  double geometric = 0.0;
  for (int k = 1; k <= n; ++k) geometric += std::ldexp(1.0, -k);
  const double tail = std::ldexp(1.0, -n);
  InductionPoints p;
  p.left = geometric * a + tail * b;
  p.right = tail * a + geometric * b;
  // Bit-exact for dyadic inputs; otherwise rounding in the two forms differs.
  const double ulp = 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b));
  p.left_matches = std::abs(p.left - (a + tail * (b - a))) <= ulp;
  p.right_matches = std::abs(p.right - (b - tail * (b - a))) <= ulp;
  return p;
}

void write_sweep_csv(const EdgeSweep& sweep, std::ostream& out) {
  out << "eps,edge,delta_edge,residual,flagged\n";
  out << "0," << format_double(sweep.edge0) << ",0," << format_double(sweep.residual0) << ",0\n";
  for (const auto& p : sweep.points)
    out << format_double(sweep.direction * p.eps) << ',' << format_double(p.edge) << ',' << format_double(p.delta)
        << ',' << format_double(p.residual) << ',' << (p.flagged ? 1 : 0) << '\n';
}

std::string fit_to_json_text(const FitReport& fit) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["model"] = fit.model == FitModel::power ? "power" : "power_log";
  j["c"] = fit.c;
  j["p"] = fit.p;
  j["residual"] = fit.residual;
  j["points_used"] = fit.points_used;
  return j.dump(2);
}

std::string certificate_to_json_text(const Certificate& cert, const EdgeSweep& sweep) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["regime"] = to_string(cert.regime);
  j["alpha"] = cert.alpha;
  j["which"] = to_string(sweep.which);
  j["edge0"] = sweep.edge0;
  j["noise_floor"] = sweep.noise_floor;
  j["max_ratio"] = cert.max_ratio;
  j["median_ratio"] = cert.median_ratio;
  j["small_eps_max"] = cert.small_eps_max;
  j["finite"] = cert.finite;
  j["diverges"] = cert.diverges;
  j["passed"] = cert.passed();
  auto& pts = j["points"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < sweep.points.size(); ++i)
    pts.push_back({{"eps", sweep.points[i].eps}, {"delta", sweep.points[i].delta}, {"ratio", cert.ratios[i]}});
  return j.dump(2);
}

}  // namespace magedge
