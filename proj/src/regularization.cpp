#include "magedge/regularization.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "magedge/error.hpp"
#include "magedge/numeric.hpp"

namespace magedge {

namespace {

constexpr double kMaxStep = 0.05;

double bump_r2(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

double norm2_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace

double bump(std::span<const double> x) { return bump_r2(norm2_of(x)); }

double bump_norm_squared(int dim) {
  if (dim != 1 && dim != 2) fail(ErrorKind::invalid_argument, "mollifier dimension must be 1 or 2");
  // f^2 is flat to all orders at r = 1, so composite Gauss-Legendre converges fast.
  const int panels = 16;
  const auto [u, w] = gauss_legendre_unit(30);
  std::vector<double> terms;
  for (int p = 0; p < panels; ++p) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double r = (p + u[i]) / panels;
      const double f = bump_r2(r * r);
      const double radial = dim == 1 ? 2.0 : 2.0 * std::numbers::pi * r;
      terms.push_back(radial * f * f * w[i] / panels);
    }
  }
  return exact_sum(terms);
}

Mollifier::Mollifier(int dim, double delta, double step) : dim_(dim), delta_(delta), step_(step) {
  if (dim != 1 && dim != 2) fail(ErrorKind::invalid_argument, "mollifier dimension must be 1 or 2");
  if (!(delta > 0.0) || !std::isfinite(delta)) fail(ErrorKind::domain, "delta must be positive and finite");
  if (!(step > 0.0)) fail(ErrorKind::domain, "grid step must be positive");
  if (step > kMaxStep)
    fail(ErrorKind::domain, "quadrature grid under-resolved: step " + format_double(step) +
                                "/delta exceeds 0.05/delta");
  const int n = static_cast<int>(std::ceil(2.0 / step - 1e-9));
  h_ = 2.0 / n;
  for (int i = 0; i <= n; ++i) nodes_.push_back(-1.0 + i * h_);
  const std::size_t m = nodes_.size();
  if (dim_ == 1) {
    for (double z : nodes_) f_nodes_.push_back(bump_r2(z * z));
  } else {
    f_nodes_.reserve(m * m);
    for (double z1 : nodes_)
      for (double z2 : nodes_) f_nodes_.push_back(bump_r2(z1 * z1 + z2 * z2));
  }
}

double Mollifier::f_delta(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) fail(ErrorKind::dimension_mismatch, "point dimension mismatch");
  return bump_r2(delta_ * delta_ * norm2_of(x));
}

// g(u) = int f(u - z) f(z) dz on the tensor grid.
double Mollifier::g(std::span<const double> u) const {
  const std::size_t m = nodes_.size();
  double sum = 0.0;
  if (dim_ == 1) {
    for (std::size_t i = 0; i < m; ++i) {
      if (f_nodes_[i] == 0.0) continue;
      const double d = u[0] - nodes_[i];
      sum += bump_r2(d * d) * f_nodes_[i];
    }
    return sum * h_;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double d1 = u[0] - nodes_[i];
    if (d1 * d1 >= 1.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double fz = f_nodes_[i * m + j];
      if (fz == 0.0) continue;
      const double d2 = u[1] - nodes_[j];
      row += bump_r2(d1 * d1 + d2 * d2) * fz;
    }
    sum += row;
  }
  return sum * h_ * h_;
}

double Mollifier::tilde_f_radial(double r2) const {
  if (delta_ * delta_ * r2 >= 4.0) return 0.0;
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(r2); it != cache_.end()) return it->second;
  }
  // Always evaluated along the first axis so the result depends on |x| only.
  std::vector<double> u(static_cast<std::size_t>(dim_), 0.0);
  u[0] = delta_ * std::sqrt(r2);
  const double value = g(u) / std::pow(delta_, dim_);
  std::lock_guard lock(cache_mutex_);
  cache_.emplace(r2, value);
  return value;
}

double Mollifier::tilde_f(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) fail(ErrorKind::dimension_mismatch, "point dimension mismatch");
  for (double v : x)
    if (!std::isfinite(v)) fail(ErrorKind::not_finite, "non-finite point");
  return tilde_f_radial(norm2_of(x));
}

double Mollifier::norm_squared_delta() const { return bump_norm_squared(dim_) / std::pow(delta_, dim_); }

double normalization_defect(const Mollifier& moll) {
  return moll.tilde_f_at_origin() / moll.norm_squared_delta() - 1.0;
}

namespace {

double site_norm2(const Site& g) {
  double s = 0.0;
  for (int v : g) s += static_cast<double>(v) * v;
  return s;
}

double ratio_at(const Mollifier& moll, const Site& g) {
  std::vector<double> x(g.begin(), g.end());
  const double r = moll.tilde_f(x) / moll.tilde_f_at_origin();
  return std::clamp(r, 0.0, 1.0);
}

double difference_ratio(const Mollifier& moll, double alpha, std::span<const double> x) {
  const double r2 = norm2_of(x);
  if (r2 == 0.0) return 0.0;
  const double diff = std::abs(moll.tilde_f(x) - moll.tilde_f_at_origin());
  return diff / (std::pow(r2, alpha / 2.0) * std::pow(moll.delta(), alpha - moll.dim()));
}

}  // namespace

MollifiedKernel mollified_kernel(const HoppingSymbol& symbol, const Mollifier& moll) {
  if (symbol.dim() != moll.dim()) fail(ErrorKind::dimension_mismatch, "symbol and mollifier dimensions differ");
  std::map<Site, cplx> coeffs;
  bool had_off_diagonal = false, kept_off_diagonal = false;
  for (const auto& [g, v] : symbol.coefficients()) {
    const bool diagonal = site_norm2(g) == 0.0;
    const cplx w = diagonal ? v : v * ratio_at(moll, g);
    if (!diagonal && v != cplx(0.0)) {
      had_off_diagonal = true;
      kept_off_diagonal = kept_off_diagonal || w != cplx(0.0);
    }
    if (w != cplx(0.0)) coeffs.emplace(g, w);
  }
  HoppingSymbol mollified(symbol.dim(), coeffs, "mollified(" + symbol.name() + ")");
  MollifiedKernel out{as_kernel(mollified), mollified, had_off_diagonal && !kept_off_diagonal};
  return out;
}

double mollifier_difference_bound(const Mollifier& moll, double alpha, std::span<const Point> xs) {
  if (!(alpha >= 1.0 && alpha <= 2.0)) fail(ErrorKind::domain, "alpha must lie in [1, 2]");
  const double reach = 2.0 / moll.delta();
  double worst = 0.0;
  for (const auto& x : xs) {
    if (x.size() != moll.dim()) fail(ErrorKind::dimension_mismatch, "sample dimension mismatch");
    if (!(x.norm() < reach)) fail(ErrorKind::domain, "sample lies outside the support of f~");
    worst = std::max(worst, difference_ratio(moll, alpha, std::span<const double>(x.data(), x.size())));
  }
  return worst;
}

std::vector<Point> axis_samples(const Mollifier& moll) {
  std::vector<Point> out;
  const int last = static_cast<int>(std::ceil(2.0 / moll.delta())) - 1;
  for (int k = 1; k <= last; ++k) {
    Point p = Point::Zero(moll.dim());
    p[0] = k;
    out.push_back(p);
  }
  return out;
}

SchurDifference schur_difference_certificate(const HoppingSymbol& symbol, const Mollifier& moll, double alpha) {
  if (symbol.dim() != moll.dim()) fail(ErrorKind::dimension_mismatch, "symbol and mollifier dimensions differ");
  if (!(alpha >= 1.0)) fail(ErrorKind::domain, "alpha must be at least 1");
  SchurDifference out;
  out.alpha = std::min(alpha, 2.0);
  std::vector<double> lhs_terms;
  for (const auto& [g, v] : symbol.coefficients()) {
    if (site_norm2(g) == 0.0) continue;
    const std::vector<double> x(g.begin(), g.end());
    // Points outside supp f~ are included: there the ratio is 0 and the
    // constant must still cover |0 - f~(0)|.
    out.constant = std::max(out.constant, difference_ratio(moll, out.alpha, x));
    lhs_terms.push_back(std::abs(v) * std::abs(ratio_at(moll, g) - 1.0));
  }
  out.lhs = exact_sum(lhs_terms);
  // |f~(g)/f~(0) - 1| <= C |g|^a delta^(a-d) / f~(0), and |g|^a <= <g>^a.
  const double norm_f = moll.tilde_f_at_origin() * std::pow(moll.delta(), moll.dim());
  out.rhs = out.constant * std::pow(moll.delta(), out.alpha) * schur_alpha_norm(symbol, out.alpha) / norm_f;
  return out;
}

double linear_term_integral(const Mollifier& moll, const FieldSpec& field, const Point& x, const Point& xp,
                            const QuadratureRule& rule) {
  if (field.is_slowly_varying()) fail(ErrorKind::invalid_argument, "linear term needs a constant or general field");
  if (field.dim() != moll.dim() || x.size() != moll.dim() || xp.size() != moll.dim())
    fail(ErrorKind::dimension_mismatch, "field, mollifier and point dimensions differ");
  // The support intersection lies in the ball of radius 1/delta around the
  // midpoint, and a grid symmetric about it keeps the odd integrand odd.
  const Point mid = 0.5 * (x + xp);
  const double delta = moll.delta();
  const auto& z = moll.nodes();
  const int d = moll.dim();
  std::vector<double> terms;
  Point y(d);
  auto visit = [&] {
    const Point a = x - y, b = y - xp;
    const double w = moll.f_delta(std::span<const double>(a.data(), a.size())) *
                     moll.f_delta(std::span<const double>(b.data(), b.size()));
    if (w == 0.0) return;
    terms.push_back(w * flux_triangle(field, Triangle{x, y, xp}, rule));
  };
  if (d == 1) {
    for (double z1 : z) {
      y[0] = mid[0] + z1 / delta;
      visit();
    }
  } else {
    for (double z1 : z)
      for (double z2 : z) {
        y[0] = mid[0] + z1 / delta;
        y[1] = mid[1] + z2 / delta;
        visit();
      }
  }
  return exact_sum(terms) * std::pow(moll.spacing() / delta, d);
}

double linear_term_scale(const Mollifier& moll, const Point& x, const Point& xp) {
  return moll.norm_squared_delta() * (x - xp).norm();
}

}  // namespace magedge
