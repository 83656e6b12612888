#pragma once

// Magnetic fluxes through triangles and the Peierls phases built from them.
//
// Points are in lattice units. A field is a closed two-form B with
// components B_jk = -B_kj, stored row-major as a d x d matrix.

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace magedge {

using Point = Eigen::VectorXd;

/// Writes B(x) (row-major, d*d entries) into `out`.
using FieldEval = std::function<void(std::span<const double> x, std::span<double> out)>;
/// Writes A(x) (d entries) into `out`.
using PotentialEval = std::function<void(std::span<const double> x, std::span<double> out)>;
/// Writes the Jacobian J_kj = dA_k/dx_j (row-major) into `out`.
using JacobianEval = std::function<void(std::span<const double> x, std::span<double> out)>;

struct ConstantField {
  Eigen::MatrixXd b;
};

struct GeneralField {
  int dim = 0;
  FieldEval b;
  double bound = 0.0;  // sup_x max_jk |B_jk(x)|
};

struct SlowlyVaryingField {
  int dim = 0;
  PotentialEval a;
  JacobianEval jacobian;
};

class FieldSpec {
 public:
  using Variant = std::variant<ConstantField, GeneralField, SlowlyVaryingField>;

  static FieldSpec constant(Eigen::MatrixXd b, std::string label = "constant");
  /// Unit field B_jk = 1 for j < k.
  static FieldSpec unit(int dim);
  static FieldSpec general(int dim, FieldEval b, double bound, std::string label = "general");
  static FieldSpec slowly_varying(int dim, PotentialEval a, JacobianEval jacobian,
                                  std::string label = "slowly-varying");

  int dim() const noexcept { return dim_; }
  const Variant& variant() const noexcept { return field_; }
  const std::string& label() const noexcept { return label_; }

  bool is_constant() const noexcept { return std::holds_alternative<ConstantField>(field_); }
  bool is_general() const noexcept { return std::holds_alternative<GeneralField>(field_); }
  bool is_slowly_varying() const noexcept { return std::holds_alternative<SlowlyVaryingField>(field_); }

  /// Field bound C_B; for constant fields the spectral norm of B.
  double bound() const;

  /// B(x) for Constant/General fields, (dA)(x) for SlowlyVarying fields.
  /// Throws on non-finite or non-antisymmetric values.
  Eigen::MatrixXd evaluate(const Point& x) const;

 private:
  FieldSpec(int dim, Variant field, std::string label)
      : dim_(dim), field_(std::move(field)), label_(std::move(label)) {}

  int dim_;
  Variant field_;
  std::string label_;
};

struct Triangle {
  Point x, y, z;
};

/// Collapsed tensor rule on the simplex {0 <= s <= t <= 1}: Gauss-Jacobi(0,1)
/// in t absorbs the Jacobian of s = t*u, Gauss-Legendre in u.
class QuadratureRule {
 public:
  struct Node {
    double t, s, weight;
  };

  explicit QuadratureRule(int order = 20);

  int order() const noexcept { return order_; }
  std::span<const Node> nodes() const noexcept { return nodes_; }

 private:
  int order_;
  std::vector<Node> nodes_;
};

/// Gauss-Legendre nodes and weights on [0, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre_unit(int order);

/// Flux of B through <x,y,x'>. Constant fields use the closed form and ignore `rule`.
/// For SlowlyVarying fields the integrated two-form is dA.
double flux_triangle(const FieldSpec& field, const Triangle& tri, const QuadratureRule& rule);

/// phi^A(y,z) = -flux(0,y,z). Constant or General fields only.
double transverse_gauge_phase(const FieldSpec& field, const Point& y, const Point& z,
                              const QuadratureRule& rule);

/// phi^{A_eps}(x,x') = -eps * flux of (dA)(eps .) through <0,x,x'>.
double slowly_varying_phase(const FieldSpec& field, double eps, const Point& x, const Point& xp,
                            const QuadratureRule& rule);

/// phi(x,y) + phi(y,x') - phi(x,x') + flux(x,y,x') at field strength eps;
/// zero up to quadrature error.
double cocycle_defect(const FieldSpec& field, double eps, const Point& x, const Point& y,
                      const Point& xp, const QuadratureRule& rule);

struct AreaBound {
  double lhs;  // |flux of eps*B|
  double rhs;  // (C_B |eps| / 2) |x-x'| |x-y|^1/2 |y-x'|^1/2
};

AreaBound area_bound_certificate(const FieldSpec& field, double eps, const Point& x,
                                 const Point& y, const Point& xp,
                                 const QuadratureRule& rule = QuadratureRule{});

/// Max deviation between the analytic Jacobian of a SlowlyVarying field and
/// central differences of A at the given points.
double jacobian_mismatch(const FieldSpec& field, std::span<const Point> points, double h = 1e-5);

}  // namespace magedge
