#pragma once

// Mollifier regularization of lattice kernels: the bump f, its scaled
// self-convolution f~_(delta) = f_delta * f_delta, the regularized kernel
// K_(delta) and the difference bounds that drive the regularity proof.
//
// All y-integrals are continuous quadratures on a uniform tensor grid,
// never lattice sums.

#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "magedge/lattice.hpp"

namespace magedge {

/// f(x) = exp(-1/(1-|x|^2)) for |x| < 1, else 0.
double bump(std::span<const double> x);

/// ||f||_2^2 by composite radial Gauss-Legendre, d in {1, 2}.
double bump_norm_squared(int dim);

class Mollifier {
 public:
  /// `step` is the grid spacing in units of 1/delta (spacing step/delta in y).
  Mollifier(int dim, double delta, double step = 0.01);

  int dim() const noexcept { return dim_; }
  double delta() const noexcept { return delta_; }
  double step() const noexcept { return step_; }

  /// f_delta(x) = f(delta x).
  double f_delta(std::span<const double> x) const;

  /// (f_delta * f_delta)(x); exactly 0 for |x| >= 2/delta.
  double tilde_f(std::span<const double> x) const;
  double tilde_f_at_origin() const { return tilde_f_radial(0.0); }

  /// delta^-d ||f||_2^2 with the reference norm.
  double norm_squared_delta() const;

  /// Uniform grid nodes z in [-1,1] (bump units); trapezoid weights equal
  /// the spacing because the integrands vanish at the ends.
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  double spacing() const noexcept { return h_; }

 private:
  double tilde_f_radial(double r2) const;  // |x|^2 in y units
  double g(std::span<const double> u) const;

  int dim_;
  double delta_;
  double step_;
  double h_;
  std::vector<double> nodes_;
  std::vector<double> f_nodes_;  // f on the tensor grid, row-major
  mutable std::mutex cache_mutex_;
  mutable std::unordered_map<double, double> cache_;  // keyed by |x|^2
};

/// f~_(delta)(0) / ||f_delta||_2^2 - 1 against the reference norm.
double normalization_defect(const Mollifier& moll);

struct MollifiedKernel {
  GeneralKernel kernel;
  HoppingSymbol symbol;  // same coefficients, translation invariant
  bool off_diagonal_annihilated = false;
};

/// K_(delta)(g,g') = lambda(g-g') f~(g-g') / f~(0). The ratio is clamped to
/// [0,1] so |K_(delta)| <= |K| survives rounding.
MollifiedKernel mollified_kernel(const HoppingSymbol& symbol, const Mollifier& moll);

/// max over samples of |f~(x) - f~(0)| / (|x|^alpha delta^(alpha-d)); x = 0 contributes 0.
/// Samples must lie in supp f~ (|x| < 2/delta).
double mollifier_difference_bound(const Mollifier& moll, double alpha, std::span<const Point> xs);

/// Lattice samples k e_1 for k = 1 .. ceil(2/delta) - 1.
std::vector<Point> axis_samples(const Mollifier& moll);

struct SchurDifference {
  double lhs = 0.0;  // sum |lambda(g)| |f~(g)/f~(0) - 1|
  double rhs = 0.0;  // C delta^a ||T||_a / ||f||_2^2 with a = min(alpha, 2)
  double constant = 0.0;  // measured C on the symbol's support
  double alpha = 0.0;
  bool holds() const { return lhs <= rhs; }
};

SchurDifference schur_difference_certificate(const HoppingSymbol& symbol, const Mollifier& moll, double alpha);

/// int f_delta(x-y) f_delta(y-x') Flux(x,y,x') dy over the support intersection.
/// Constant or General fields in d = 2 (the flux vanishes identically in d = 1).
double linear_term_integral(const Mollifier& moll, const FieldSpec& field, const Point& x, const Point& xp,
                            const QuadratureRule& rule = QuadratureRule{});

/// delta^-d ||f||_2^2 |x - x'|, the size the linear term is compared against.
double linear_term_scale(const Mollifier& moll, const Point& x, const Point& xp);

}  // namespace magedge
