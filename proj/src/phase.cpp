#include "magedge/phase.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "magedge/error.hpp"
#include "magedge/numeric.hpp"

namespace magedge {

namespace {

constexpr double kAntisymmetryTol = 1e-12;

void check_antisymmetric(const Eigen::MatrixXd& b, const char* what) {
  if (!b.allFinite()) fail(ErrorKind::not_finite, std::string(what) + ": non-finite field value");
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if ((b + b.transpose()).cwiseAbs().maxCoeff() > kAntisymmetryTol * scale)
    fail(ErrorKind::invalid_argument, std::string(what) + ": field is not antisymmetric");
}

void check_dim(const FieldSpec& field, const Point& p) {
  if (p.size() != field.dim()) {
    std::ostringstream msg;
    msg << "point dimension " << p.size() << " does not match field dimension " << field.dim();
    fail(ErrorKind::dimension_mismatch, msg.str());
  }
}

// b(p,q) = sum_{j<k} B_jk (p_j q_k - p_k q_j); b(q,p) == -b(p,q) bit for bit.
void push_bilinear_terms(const Eigen::MatrixXd& b, const Point& p, const Point& q,
                         std::vector<double>& terms) {
  const auto d = b.rows();
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = j + 1; k < d; ++k)
      if (b(j, k) != 0.0) terms.push_back(b(j, k) * (p[j] * q[k] - p[k] * q[j]));
}

double constant_flux(const Eigen::MatrixXd& b, const Point& x, const Point& y, const Point& xp) {
  std::vector<double> terms;
  terms.reserve(3 * b.size());
  push_bilinear_terms(b, x, y, terms);
  push_bilinear_terms(b, y, xp, terms);
  push_bilinear_terms(b, xp, x, terms);
  return 0.5 * exact_sum(terms);
}

// sum_jk u_j v_k int_0^1 dt int_0^t ds B_jk(x + t u + s v) where B(p) = field_at(p).
template <class FieldAt>
double integrate_flux(int d, const Point& x, const Point& u, const Point& v,
                      const QuadratureRule& rule, FieldAt&& field_at) {
  std::vector<double> p(d), bvals(d * d);
  double total = 0.0;
  for (const auto& node : rule.nodes()) {
    for (int i = 0; i < d; ++i) p[i] = x[i] + node.t * u[i] + node.s * v[i];
    field_at(std::span<const double>(p), std::span<double>(bvals));
    double contraction = 0.0;
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        const double bjk = bvals[j * d + k];
        if (!std::isfinite(bjk)) fail(ErrorKind::not_finite, "non-finite field evaluation");
        contraction += u[j] * v[k] * bjk;
      }
    total += node.weight * contraction;
  }
  return total;
}

void eval_general(const GeneralField& g, std::span<const double> p, std::span<double> out) {
  g.b(p, out);
  const int d = g.dim;
  for (int j = 0; j < d; ++j)
    for (int k = j; k < d; ++k) {
      const double s = out[j * d + k] + out[k * d + j];
      if (std::fabs(s) > kAntisymmetryTol * std::max(1.0, std::fabs(out[j * d + k])))
        fail(ErrorKind::invalid_argument, "general field is not antisymmetric");
    }
}

// (dA)_jk(p) = dA_k/dx_j - dA_j/dx_k from the Jacobian J_kj = dA_k/dx_j.
void eval_curl(const SlowlyVaryingField& s, std::span<const double> p, std::span<double> out,
               std::vector<double>& jac) {
  const int d = s.dim;
  jac.resize(d * d);
  s.jacobian(p, std::span<double>(jac));
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      const double v = jac[k * d + j] - jac[j * d + k];
      if (!std::isfinite(v)) fail(ErrorKind::not_finite, "non-finite Jacobian evaluation");
      out[j * d + k] = v;
    }
}

}  // namespace

FieldSpec FieldSpec::constant(Eigen::MatrixXd b, std::string label) {
  if (b.rows() != b.cols() || b.rows() < 1)
    fail(ErrorKind::dimension_mismatch, "constant field must be a square matrix");
  check_antisymmetric(b, "constant field");
  const int d = static_cast<int>(b.rows());
  return FieldSpec(d, ConstantField{std::move(b)}, std::move(label));
}

FieldSpec FieldSpec::unit(int dim) {
  if (dim < 1) fail(ErrorKind::invalid_argument, "dimension must be positive");
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int k = j + 1; k < dim; ++k) {
      b(j, k) = 1.0;
      b(k, j) = -1.0;
    }
  return constant(std::move(b), "constant-unit");
}

FieldSpec FieldSpec::general(int dim, FieldEval b, double bound, std::string label) {
  if (dim < 1) fail(ErrorKind::invalid_argument, "dimension must be positive");
  if (!b) fail(ErrorKind::invalid_argument, "general field needs an evaluator");
  if (!(std::isfinite(bound) && bound >= 0.0))
    fail(ErrorKind::invalid_argument, "general field needs a finite bound C_B");
  return FieldSpec(dim, GeneralField{dim, std::move(b), bound}, std::move(label));
}

FieldSpec FieldSpec::slowly_varying(int dim, PotentialEval a, JacobianEval jacobian,
                                    std::string label) {
  if (dim < 1) fail(ErrorKind::invalid_argument, "dimension must be positive");
  if (!a || !jacobian) fail(ErrorKind::invalid_argument, "slowly varying field needs A and its Jacobian");
  return FieldSpec(dim, SlowlyVaryingField{dim, std::move(a), std::move(jacobian)}, std::move(label));
}

double FieldSpec::bound() const {
  if (const auto* c = std::get_if<ConstantField>(&field_)) {
    // comass of a constant two-form: the spectral norm of B
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(c->b);
    return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  }
  if (const auto* g = std::get_if<GeneralField>(&field_)) return g->bound;
  fail(ErrorKind::invalid_argument, "slowly varying fields carry no bound C_B");
}

Eigen::MatrixXd FieldSpec::evaluate(const Point& x) const {
  check_dim(*this, x);
  Eigen::MatrixXd out(dim_, dim_);
  std::vector<double> buf(dim_ * dim_), jac;
  std::span<const double> p(x.data(), x.size());
  if (const auto* c = std::get_if<ConstantField>(&field_)) return c->b;
  if (const auto* g = std::get_if<GeneralField>(&field_))
    eval_general(*g, p, buf);
  else
    eval_curl(std::get<SlowlyVaryingField>(field_), p, buf, jac);
  for (int j = 0; j < dim_; ++j)
    for (int k = 0; k < dim_; ++k) out(j, k) = buf[j * dim_ + k];
  return out;
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre_unit(int order) {
  if (order < 1) fail(ErrorKind::invalid_argument, "quadrature order must be positive");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int n = 1; n < order; ++n) {
    const double b = n / std::sqrt(4.0 * n * n - 1.0);
    jacobi(n, n - 1) = jacobi(n - 1, n) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  std::vector<double> x(order), w(order);
  for (int i = 0; i < order; ++i) {
    const double v0 = eig.eigenvectors()(0, i);
    x[i] = 0.5 * (1.0 + eig.eigenvalues()[i]);
    w[i] = v0 * v0;  // mu_0 = 2, halved by the map to [0,1]
  }
  return {x, w};
}

QuadratureRule::QuadratureRule(int order) : order_(order) {
  if (order < 1) fail(ErrorKind::invalid_argument, "quadrature order must be positive");

  // Golub-Welsch for the weight (1+x) on [-1,1] (Jacobi alpha=0, beta=1),
  // mapped to t in [0,1] where it becomes the Jacobian t.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int n = 0; n < order; ++n) {
    jacobi(n, n) = 1.0 / ((2.0 * n + 1.0) * (2.0 * n + 3.0));
    if (n > 0) {
      const double b = std::sqrt(static_cast<double>(n) * (n + 1)) / (2.0 * n + 1.0);
      jacobi(n, n - 1) = jacobi(n - 1, n) = b;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  const auto [u, wu] = gauss_legendre_unit(order);

  nodes_.reserve(static_cast<std::size_t>(order) * order);
  for (int i = 0; i < order; ++i) {
    const double t = 0.5 * (1.0 + eig.eigenvalues()[i]);
    const double v0 = eig.eigenvectors()(0, i);
    const double wt = 0.5 * v0 * v0;  // (1/4) * mu_0 with mu_0 = 2
    for (int j = 0; j < order; ++j) nodes_.push_back({t, t * u[j], wt * wu[j]});
  }
}

double flux_triangle(const FieldSpec& field, const Triangle& tri, const QuadratureRule& rule) {
  check_dim(field, tri.x);
  check_dim(field, tri.y);
  check_dim(field, tri.z);
  const int d = field.dim();

  if (const auto* c = std::get_if<ConstantField>(&field.variant()))
    return constant_flux(c->b, tri.x, tri.y, tri.z);

  const Point u = tri.y - tri.x;
  const Point v = tri.z - tri.y;
  if (u.isZero(0.0) || v.isZero(0.0)) return 0.0;

  if (const auto* g = std::get_if<GeneralField>(&field.variant()))
    return integrate_flux(d, tri.x, u, v, rule,
                          [g](std::span<const double> p, std::span<double> out) { eval_general(*g, p, out); });

  const auto& s = std::get<SlowlyVaryingField>(field.variant());
  std::vector<double> jac;
  return integrate_flux(d, tri.x, u, v, rule,
                        [&s, &jac](std::span<const double> p, std::span<double> out) { eval_curl(s, p, out, jac); });
}

double transverse_gauge_phase(const FieldSpec& field, const Point& y, const Point& z,
                              const QuadratureRule& rule) {
  if (field.is_slowly_varying())
    fail(ErrorKind::invalid_argument, "transverse gauge phase needs a Constant or General field");
  check_dim(field, y);
  return -flux_triangle(field, Triangle{Point::Zero(field.dim()), y, z}, rule);
}

double slowly_varying_phase(const FieldSpec& field, double eps, const Point& x, const Point& xp,
                            const QuadratureRule& rule) {
  const auto* s = std::get_if<SlowlyVaryingField>(&field.variant());
  if (!s) fail(ErrorKind::invalid_argument, "slowly varying phase needs a SlowlyVarying field");
  check_dim(field, x);
  check_dim(field, xp);
  if (eps == 0.0) return 0.0;

  const int d = field.dim();
  const Point origin = Point::Zero(d);
  const Point v = xp - x;
  if (x.isZero(0.0) || v.isZero(0.0)) return 0.0;

  std::vector<double> scaled(d), jac;
  const double flux = integrate_flux(
      d, origin, x, v, rule, [&](std::span<const double> p, std::span<double> out) {
        for (int i = 0; i < d; ++i) scaled[i] = eps * p[i];
        eval_curl(*s, scaled, out, jac);
      });
  return -eps * flux;
}

double cocycle_defect(const FieldSpec& field, double eps, const Point& x, const Point& y,
                      const Point& xp, const QuadratureRule& rule) {
  if (field.is_slowly_varying())
    fail(ErrorKind::invalid_argument, "cocycle defect needs a Constant or General field");
  if (eps == 0.0) return 0.0;
  const double terms[] = {
      eps * transverse_gauge_phase(field, x, y, rule),
      eps * transverse_gauge_phase(field, y, xp, rule),
      -eps * transverse_gauge_phase(field, x, xp, rule),
      eps * flux_triangle(field, Triangle{x, y, xp}, rule),
  };
  return exact_sum(terms);
}

AreaBound area_bound_certificate(const FieldSpec& field, double eps, const Point& x,
                                 const Point& y, const Point& xp, const QuadratureRule& rule) {
  const double cb = field.bound();
  const double lhs = std::fabs(eps * flux_triangle(field, Triangle{x, y, xp}, rule));
  const double rhs = 0.5 * cb * std::fabs(eps) * (x - xp).norm() * std::sqrt((x - y).norm()) *
                     std::sqrt((y - xp).norm());
  return {lhs, rhs};
}

double jacobian_mismatch(const FieldSpec& field, std::span<const Point> points, double h) {
  const auto* s = std::get_if<SlowlyVaryingField>(&field.variant());
  if (!s) fail(ErrorKind::invalid_argument, "Jacobian check needs a SlowlyVarying field");
  const int d = field.dim();
  std::vector<double> jac(d * d), ap(d), am(d), q(d);
  double worst = 0.0;
  for (const auto& x : points) {
    check_dim(field, x);
    s->jacobian(std::span<const double>(x.data(), d), jac);
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i < d; ++i) q[i] = x[i];
      q[j] = x[j] + h;
      s->a(q, ap);
      q[j] = x[j] - h;
      s->a(q, am);
      for (int k = 0; k < d; ++k)
        worst = std::max(worst, std::fabs((ap[k] - am[k]) / (2.0 * h) - jac[k * d + j]));
    }
  }
  return worst;
}

}  // namespace magedge
