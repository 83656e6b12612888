#include <doctest.h>

#include <cmath>
#include <random>

#include "magedge/regularization.hpp"
#include "support.hpp"

using namespace magedge;
using testing::error_kind;
using testing::pt;

namespace {

// Reference values of ||f||_2^2 from adaptive quadrature (scipy.integrate.quad
// of 2 f(r)^2 and 2 pi r f(r)^2 on [0, 1]).
constexpr double kNorm1 = 0.13308612084499427;
constexpr double kNorm2 = 0.11791736119316863;

// (f_delta * f_delta)(x) in d = 1 by a fine trapezoid rule in y.
double convolution_oracle_1d(double delta, double x) {
  const int n = 40000;
  const double lo = -1.0 / delta, h = 2.0 / delta / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double y = lo + i * h;
    const double a = delta * (x - y), b = delta * y;
    const double fa = a * a < 1 ? std::exp(-1 / (1 - a * a)) : 0.0;
    const double fb = b * b < 1 ? std::exp(-1 / (1 - b * b)) : 0.0;
    sum += fa * fb;
  }
  return sum * h;
}

double ratio_spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

}  // namespace

TEST_CASE("bump and its L2 norm") {
  const double zero[] = {0.0};
  const double edge[] = {1.0};
  const double plane[] = {0.6, 0.8};
  CHECK(bump(zero) == doctest::Approx(std::exp(-1.0)));
  CHECK(bump(edge) == 0.0);
  CHECK(bump(plane) == 0.0);
  CHECK(std::fabs(bump_norm_squared(1) - kNorm1) <= 1e-14);
  CHECK(std::fabs(bump_norm_squared(2) - kNorm2) <= 1e-14);
  CHECK(error_kind([] { bump_norm_squared(3); }) == ErrorKind::invalid_argument);
}

TEST_CASE("normalization identity") {
  for (int d : {1, 2})
    for (double delta : {0.5, 0.25, 0.125}) {
      const Mollifier m(d, delta);
      CHECK(std::fabs(normalization_defect(m)) <= 1e-10);
      CHECK(m.tilde_f_at_origin() == doctest::Approx(m.norm_squared_delta()).epsilon(1e-10));
    }
  // delta = 1 in d = 1: the grid value agrees with a ten times finer grid.
  const Mollifier coarse(1, 1.0, 0.01), fine(1, 1.0, 0.001);
  CHECK(std::fabs(coarse.tilde_f_at_origin() - fine.tilde_f_at_origin()) <= 1e-12);
  CHECK(std::fabs(coarse.tilde_f_at_origin() - kNorm1) <= 1e-12);
}

TEST_CASE("convolution values, symmetry and support") {
  for (double delta : {0.5, 0.25}) {
    const Mollifier m(1, delta);
    for (double x : {0.3, 1.7, 2.5, 3.9 / delta / 2}) {
      const double v[] = {x};
      CHECK(m.tilde_f(v) == doctest::Approx(convolution_oracle_1d(delta, x)).epsilon(1e-9));
    }
    const double far[] = {2.0 / delta};
    CHECK(m.tilde_f(far) == 0.0);
  }

  const Mollifier m2(2, 0.5);
  std::mt19937_64 rng(29);
  for (int i = 0; i < 50; ++i) {
    const Point x = testing::random_point(rng, 2, -4, 4);
    const Point mx = -x;
    const double a = m2.tilde_f(std::span<const double>(x.data(), 2));
    const double b = m2.tilde_f(std::span<const double>(mx.data(), 2));
    CHECK(std::fabs(a - b) <= 1e-12);
    CHECK(a >= 0.0);
    CHECK(a <= m2.tilde_f_at_origin() * (1 + 1e-12));
  }
  const double outside[] = {3.0, 3.0};
  CHECK(m2.tilde_f(outside) == 0.0);
}

TEST_CASE("mollified kernels") {
  const auto pl = HoppingSymbol::power_law(2, 4.6, 4.0);
  double previous = INFINITY;
  for (double delta : {0.5, 0.25, 0.125, 0.0625}) {
    const Mollifier m(2, delta);
    const auto mk = mollified_kernel(pl, m);
    CHECK(!mk.off_diagonal_annihilated);
    CHECK(mk.symbol.at({0, 0}) == pl.at({0, 0}));
    double deviation = 0.0;
    for (const auto& [g, v] : pl.coefficients()) {
      CHECK(std::abs(mk.symbol.at(g)) <= std::abs(v));
      deviation = std::max(deviation, std::abs(mk.symbol.at(g) - v));
    }
    CHECK(deviation < previous);
    previous = deviation;
    for (double alpha : {0.0, 1.5, 2.0}) CHECK(schur_alpha_norm(mk.symbol, alpha) <= schur_alpha_norm(pl, alpha));
  }
  CHECK(previous < 0.05);

  const auto wide = mollified_kernel(HoppingSymbol::harper(1), Mollifier(1, 2.5));
  CHECK(wide.off_diagonal_annihilated);
  CHECK(wide.symbol.coefficients().empty());
}

TEST_CASE("grav2 constants are stable under delta halving") {
  for (int d : {1, 2}) {
    for (double alpha : {1.0, 2.0}) {
      std::vector<double> constants;
      for (double delta : {0.5, 0.25, 0.125}) {
        const Mollifier m(d, delta);
        const auto samples = axis_samples(m);
        CHECK(samples.size() == static_cast<std::size_t>(std::ceil(2 / delta) - 1));
        constants.push_back(mollifier_difference_bound(m, alpha, samples));
      }
      CHECK(ratio_spread(constants) <= 2.0);
    }
  }
  const Mollifier m(1, 0.5);
  const std::vector<Point> origin{pt({0.0})};
  CHECK(mollifier_difference_bound(m, 2.0, origin) == 0.0);
  const std::vector<Point> outside{pt({4.0})};
  CHECK(error_kind([&] { mollifier_difference_bound(m, 2.0, outside); }) == ErrorKind::domain);
  CHECK(error_kind([&] { mollifier_difference_bound(m, 2.5, origin); }) == ErrorKind::domain);
}

TEST_CASE("Schur difference certificates") {
  const auto id = schur_difference_certificate(HoppingSymbol::identity(2), Mollifier(2, 0.5), 2.0);
  CHECK(id.lhs == 0.0);
  CHECK(id.holds());

  for (int d : {1, 2}) {
    std::vector<double> scaled;
    for (double delta : {0.5, 0.25, 0.125}) {
      const auto c = schur_difference_certificate(HoppingSymbol::harper(d), Mollifier(d, delta), 2.0);
      CHECK(c.holds());
      CHECK(c.alpha == 2.0);
      scaled.push_back(c.lhs / (delta * delta));
    }
    CHECK(ratio_spread(scaled) <= 2.0);
  }

  std::vector<double> scaled;
  const auto pl = HoppingSymbol::power_law(2, 4.6, 12.0);
  for (double delta : {0.5, 0.25, 0.125}) {
    const auto c = schur_difference_certificate(pl, Mollifier(2, delta), 1.5);
    CHECK(c.holds());
    scaled.push_back(c.lhs / std::pow(delta, 1.5));
  }
  CHECK(ratio_spread(scaled) <= 2.0);

  CHECK(schur_difference_certificate(HoppingSymbol::harper(1), Mollifier(1, 0.5), 3.0).alpha == 2.0);
  CHECK(error_kind([] { schur_difference_certificate(HoppingSymbol::harper(2), Mollifier(1, 0.5), 2.0); }) ==
        ErrorKind::dimension_mismatch);
}

TEST_CASE("the first-order term vanishes for constant fields") {
  const Mollifier m(2, 0.5);
  const Point x = pt({0, 0}), xp = pt({1, 0});
  const double scale = linear_term_scale(m, x, xp);
  CHECK(scale == doctest::Approx(kNorm2 / 0.25));
  CHECK(std::fabs(linear_term_integral(m, FieldSpec::unit(2), x, xp)) <= 1e-8 * scale);

  std::mt19937_64 rng(31);
  for (int i = 0; i < 5; ++i) {
    const Point a = testing::random_point(rng, 2, -3, 3), b = testing::random_point(rng, 2, -3, 3);
    const auto field = FieldSpec::constant(testing::random_antisymmetric(rng, 2));
    CHECK(std::fabs(linear_term_integral(m, field, a, b)) <= 1e-8 * linear_term_scale(m, a, b));
  }

  CHECK(linear_term_integral(m, testing::sine_field(), x, x) == 0.0);
  CHECK(linear_term_integral(Mollifier(1, 0.5), FieldSpec::unit(1), pt({0}), pt({2})) == 0.0);

  // A nonconstant field breaks the symmetry, but the term stays within the natural scale.
  const double general = linear_term_integral(m, testing::sine_field(), x, xp);
  CHECK(std::fabs(general) > 1e-6 * scale);
  CHECK(std::fabs(general) <= scale);

  CHECK(error_kind([&] { linear_term_integral(m, testing::sine_potential(), x, xp); }) ==
        ErrorKind::invalid_argument);
}

TEST_CASE("mollifier errors") {
  CHECK(error_kind([] { Mollifier(3, 0.5); }) == ErrorKind::invalid_argument);
  CHECK(error_kind([] { Mollifier(1, 0.0); }) == ErrorKind::domain);
  CHECK(error_kind([] { Mollifier(1, 0.5, 0.1); }) == ErrorKind::domain);
  const Mollifier m(1, 0.5);
  const double two[] = {0.0, 1.0};
  CHECK(error_kind([&] { m.tilde_f(two); }) == ErrorKind::dimension_mismatch);
  const double bad[] = {NAN};
  CHECK(error_kind([&] { m.tilde_f(bad); }) == ErrorKind::not_finite);
}
