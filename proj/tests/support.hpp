#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <random>

#include "magedge/error.hpp"
#include "magedge/phase.hpp"

namespace testing {

inline std::optional<magedge::ErrorKind> error_kind(const std::function<void()>& body) {
  try {
    body();
  } catch (const magedge::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

inline magedge::Point random_point(std::mt19937_64& rng, int dim, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  magedge::Point p(dim);
  for (int i = 0; i < dim; ++i) p[i] = u(rng);
  return p;
}

inline magedge::Point pt(std::initializer_list<double> xs) {
  magedge::Point p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) p[i++] = x;
  return p;
}

// B_12(x) = 1 + sin(x_1) sin(x_2) / 2
inline magedge::FieldSpec sine_field() {
  return magedge::FieldSpec::general(
      2,
      [](std::span<const double> x, std::span<double> b) {
        const double v = 1.0 + 0.5 * std::sin(x[0]) * std::sin(x[1]);
        b[0] = 0.0;
        b[1] = v;
        b[2] = -v;
        b[3] = 0.0;
      },
      1.5);
}

// A(x) = (-sin x_2, sin x_1) / 2
inline magedge::FieldSpec sine_potential() {
  return magedge::FieldSpec::slowly_varying(
      2,
      [](std::span<const double> x, std::span<double> a) {
        a[0] = -0.5 * std::sin(x[1]);
        a[1] = 0.5 * std::sin(x[0]);
      },
      [](std::span<const double> x, std::span<double> j) {
        j[0] = 0.0;
        j[1] = -0.5 * std::cos(x[1]);
        j[2] = 0.5 * std::cos(x[0]);
        j[3] = 0.0;
      });
}

// A constant field wrapped as a general one, so fluxes go through quadrature.
inline magedge::FieldSpec as_general(const Eigen::MatrixXd& b) {
  const int d = static_cast<int>(b.rows());
  return magedge::FieldSpec::general(
      d,
      [b, d](std::span<const double>, std::span<double> out) {
        for (int r = 0; r < d; ++r)
          for (int c = 0; c < d; ++c) out[r * d + c] = b(r, c);
      },
      b.cwiseAbs().maxCoeff());
}

inline Eigen::MatrixXd random_antisymmetric(std::mt19937_64& rng, int d) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      b(j, k) = u(rng);
      b(k, j) = -b(j, k);
    }
  return b;
}

}  // namespace testing
