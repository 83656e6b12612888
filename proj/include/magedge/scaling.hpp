#pragma once

// Edge sweeps over the field strength, scaling-law fits, the three
// regularity certificates, and the mid-convexity / modulus-of-continuity
// machinery that turns an almost mid-convex bound into a Hoelder or
// Lipschitz-log modulus.

#include <span>
#include <string>
#include <vector>

#include "magedge/spectral.hpp"

namespace magedge {

struct SweepPoint {
  double eps = 0.0;
  double edge = 0.0;
  double delta = 0.0;  // |E(eps) - E(0)|
  double residual = 0.0;
  int iterations = 0;
  bool converged = true;
  bool flagged = false;  // delta below the noise floor, excluded from fits
};

struct EdgeSweep {
  EdgeKind which = EdgeKind::sup;
  double edge0 = 0.0;
  double residual0 = 0.0;
  double noise_floor = 0.0;
  double direction = 1.0;  // +1 sweeps eps, -1 sweeps -eps
  std::vector<SweepPoint> points;
  bool complete = true;  // false when a point failed to converge; later points are missing
};

struct SweepOptions {
  EdgeOptions solver{};
  double noise_factor = 1e3;  // noise floor = noise_factor * solver.tol
  double direction = 1.0;
  int workers = 1;
  QuadratureRule rule{};
};

/// {2^-k : k = kmin..kmax}, increasing.
std::vector<double> dyadic_grid(int kmin, int kmax);

void validate_eps_grid(std::span<const double> grid);

EdgeSweep sweep_edges(const HoppingSymbol& symbol, const FieldSpec& field, EdgeKind which,
                      std::span<const double> eps_grid, const Box& box, const SweepOptions& opts = {});

/// One sweep per requested kind from a single pass over the grid: each
/// matrix is built once and sup/inf are solved at most once per point.
std::vector<EdgeSweep> sweep_edge_kinds(const HoppingSymbol& symbol, const FieldSpec& field,
                                        std::span<const EdgeKind> kinds, std::span<const double> eps_grid,
                                        const Box& box, const SweepOptions& opts = {});

/// Builds a sweep from precomputed (eps, delta) data, e.g. synthetic fixtures.
EdgeSweep sweep_from_data(std::span<const double> eps, std::span<const double> delta, double noise_floor = 0.0);

enum class FitModel { power, power_log };

struct FitReport {
  FitModel model = FitModel::power;
  double c = 0.0;
  double p = 1.0;
  double residual = 0.0;  // l2 norm of log-space residuals
  int points_used = 0;
};

/// Least squares of ln(delta) = ln C + p ln(eps) over unflagged points.
FitReport fit_power(const EdgeSweep& sweep);
/// Least squares of ln(delta) = ln C + ln(eps ln(1/eps)); needs eps < 1/e.
FitReport fit_power_log(const EdgeSweep& sweep);

enum class Regime { holder, log, lipschitz };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

struct SchurNorms {
  double alpha_norm = 0.0;  // ||T||_alpha, used by the Hoelder regime
  double norm2 = 0.0;       // ||T||_2
};

struct Certificate {
  Regime regime = Regime::lipschitz;
  double alpha = 2.0;
  std::vector<double> ratios;  // grid order
  double max_ratio = 0.0;
  double median_ratio = 0.0;
  double small_eps_max = 0.0;  // max over the third of the grid nearest eps -> 0
  bool finite = true;
  bool diverges = false;
  bool passed() const { return finite && !diverges; }
};

/// Ratios delta / (||T||_alpha eps^(alpha/2)), delta / (||T||_2 eps ln(1/eps)) or
/// delta / (||T||_2 eps), with the divergence diagnostic
/// small_eps_max > 2 * median.
Certificate verify_theorem_bound(const EdgeSweep& sweep, double alpha, const SchurNorms& norms, Regime regime,
                                 const FieldSpec& field);

/// Largest normalized mid-convexity defect
/// [E((a+b)/2) - E(a)/2 - E(b)/2] / |(b-a)/2|^beta over on-grid midpoints, floored at 0.
double midconvex_defect(std::span<const double> xs, std::span<const double> values, double beta);

/// N_eta = floor(ln(1/eta)/ln 2) + 1, computed so that 1 < eta 2^N <= 2 holds exactly.
int nenciu_steps(double eta);

struct ModulusBound {
  double beta = 1.0;
  double m = 0.0;
  double s = 0.0;
  double c_beta = 0.0;  // 2S + M/(1 - 2^(beta-1)) for beta < 1; unused for beta = 1

  /// Bound on |E(x+eta) - E(x)| for 0 < eta < 1/2.
  double operator()(double eta) const;
};

ModulusBound make_modulus_bound(double m, double s, double beta);

double nenciu_modulus(double m, double s, double beta, double eta);

struct InductionPoints {
  double left;   // (2^-1 + ... + 2^-n) a + 2^-n b
  double right;  // 2^-n a + (2^-1 + ... + 2^-n) b
  bool left_matches;   // equals a + 2^-n (b - a)
  bool right_matches;  // equals b - 2^-n (b - a)
};

InductionPoints induction_identity_check(double a, double b, int n);

void write_sweep_csv(const EdgeSweep& sweep, std::ostream& out);
std::string fit_to_json_text(const FitReport& fit);
std::string certificate_to_json_text(const Certificate& cert, const EdgeSweep& sweep);

}  // namespace magedge
