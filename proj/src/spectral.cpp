#include "magedge/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <random>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "magedge/error.hpp"
#include "magedge/numeric.hpp"

namespace magedge {

namespace {

EdgeResult dense_sup(const SparseMatrix& m, double sign) {
  const Eigen::MatrixXcd a = sign * Eigen::MatrixXcd(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(a);
  if (eig.info() != Eigen::Success) fail(ErrorKind::not_converged, "dense Hermitian solver failed");
  const auto last = a.rows() - 1;
  const double theta = eig.eigenvalues()[last];
  const Eigen::VectorXcd x = eig.eigenvectors().col(last);
  EdgeResult r;
  r.value = theta;
  r.residual = (a * x - theta * x).norm();
  r.iterations = 0;
  r.method = SolverMethod::dense;
  return r;
}

// Largest eigenvalue of sign*m by thick-restarted Lanczos with full
// reorthogonalization (Rayleigh-Ritz on the stored basis).
EdgeResult iterative_sup(const SparseMatrix& m, double sign, const EdgeOptions& opts) {
  const Eigen::Index n = m.rows();
  const double scale = std::max(matrix_schur0(m), std::numeric_limits<double>::min());
  const double tol_abs = opts.tol * scale;
  const Eigen::Index basis = std::min<Eigen::Index>(std::max(opts.basis, 2), n);
  const Eigen::Index keep = std::clamp<Eigen::Index>(opts.keep, 1, basis - 1);

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(normal(rng), normal(rng));
  v.normalize();

  Eigen::MatrixXcd V(n, basis), AV(n, basis);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(basis, basis);
  Eigen::Index k = 0;
  int matvecs = 0;
  EdgeResult best;
  best.method = SolverMethod::iterative;
  best.residual = std::numeric_limits<double>::infinity();

  while (true) {
    bool exhausted = false;
    while (k < basis) {
      V.col(k) = v;
      AV.col(k).noalias() = sign * (m * v);
      ++matvecs;
      ++k;
      Eigen::VectorXcd r = AV.col(k - 1);
      const Eigen::VectorXcd h = V.leftCols(k).adjoint() * r;
      r.noalias() -= V.leftCols(k) * h;
      const Eigen::VectorXcd h2 = V.leftCols(k).adjoint() * r;
      r.noalias() -= V.leftCols(k) * h2;
      H.block(0, k - 1, k, 1) = h;
      H.block(k - 1, 0, 1, k) = h.adjoint();
      const double beta = r.norm();
      if (k == n || beta <= 1e-13 * scale) {
        exhausted = true;
        break;
      }
      v = r / beta;
      if (matvecs >= opts.max_iter) break;
    }

    const Eigen::MatrixXcd hk = 0.5 * (H.topLeftCorner(k, k) + H.topLeftCorner(k, k).adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(hk);
    const double theta = eig.eigenvalues()[k - 1];
    const Eigen::VectorXcd y = eig.eigenvectors().col(k - 1);
    const Eigen::VectorXcd x = V.leftCols(k) * y;
    const Eigen::VectorXcd ax = AV.leftCols(k) * y;
    const double residual = (ax - theta * x).norm();
    if (residual < best.residual || !std::isfinite(best.residual)) {
      best.value = theta;
      best.residual = residual;
    }
    best.iterations = matvecs;

    if (residual <= tol_abs || exhausted) {
      best.value = theta;
      best.residual = residual;
      best.converged = residual <= tol_abs || exhausted;
      return best;
    }
    if (matvecs >= opts.max_iter) {
      best.converged = false;
      return best;
    }

    const Eigen::MatrixXcd y_keep = eig.eigenvectors().rightCols(keep);
    const Eigen::MatrixXcd v_keep = V.leftCols(k) * y_keep;
    const Eigen::MatrixXcd av_keep = AV.leftCols(k) * y_keep;
    V.leftCols(keep) = v_keep;
    AV.leftCols(keep) = av_keep;
    H.setZero();
    for (Eigen::Index i = 0; i < keep; ++i) H(i, i) = eig.eigenvalues()[k - keep + i];
    k = keep;
  }
}

EdgeResult sup_of(const SparseMatrix& m, double sign, const EdgeOptions& opts) {
  const auto n = static_cast<std::size_t>(m.rows());
  SolverMethod method = opts.method;
  if (method == SolverMethod::automatic)
    method = n <= opts.dense_below ? SolverMethod::dense : SolverMethod::iterative;
  if (method == SolverMethod::dense) {
    if (n > opts.dense_cap) fail(ErrorKind::size_cap, "matrix exceeds the dense solver cap");
    return dense_sup(m, sign);
  }
  return iterative_sup(m, sign, opts);
}

}  // namespace

std::string to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::sup: return "sup";
    case EdgeKind::inf: return "inf";
    case EdgeKind::norm: return "norm";
  }
  return "sup";
}

EdgeKind edge_kind_from_string(const std::string& s) {
  if (s == "sup") return EdgeKind::sup;
  if (s == "inf") return EdgeKind::inf;
  if (s == "norm") return EdgeKind::norm;
  fail(ErrorKind::config, "unknown edge kind '" + s + "' (expected sup, inf or norm)");
}

std::size_t default_dense_cap() {
  if (const char* env = std::getenv("MAGEDGE_DENSE_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return 3000;
}

double matrix_schur0(const SparseMatrix& m) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    double row = 0.0;
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) row += std::abs(it.value());
    worst = std::max(worst, row);
  }
  return worst;
}

EdgeResult edge_unchecked(const SparseMatrix& m, EdgeKind which, const EdgeOptions& opts) {
  if (m.rows() == 0 || m.rows() != m.cols()) fail(ErrorKind::invalid_argument, "edge needs a non-empty square matrix");
  if (!(opts.tol > 0.0)) fail(ErrorKind::invalid_argument, "solver tolerance must be positive");

  EdgeResult out;
  switch (which) {
    case EdgeKind::sup:
      out = sup_of(m, 1.0, opts);
      break;
    case EdgeKind::inf:
      out = sup_of(m, -1.0, opts);
      out.value = -out.value;
      break;
    case EdgeKind::norm: {
      const EdgeResult hi = sup_of(m, 1.0, opts);
      const EdgeResult lo = sup_of(m, -1.0, opts);
      out = std::abs(hi.value) >= std::abs(lo.value) ? hi : lo;
      out.value = std::max(std::abs(hi.value), std::abs(lo.value));
      out.residual = std::max(hi.residual, lo.residual);
      out.iterations = hi.iterations + lo.iterations;
      out.converged = hi.converged && lo.converged;
      break;
    }
  }
  out.which = which;
  return out;
}

EdgeResult edge(const SparseMatrix& m, EdgeKind which, const EdgeOptions& opts) {
  EdgeResult r = edge_unchecked(m, which, opts);
  if (!r.converged)
    fail(ErrorKind::not_converged, "edge solver hit the iteration cap (best value " + format_double(r.value) +
                                       ", residual " + format_double(r.residual) + ")");
  return r;
}

EdgeResult edge(const PeierlsMatrix& m, EdgeKind which, const EdgeOptions& opts) {
  return edge(m.matrix, which, opts);
}

SpectrumReport full_spectrum(const SparseMatrix& m, double gap_threshold, std::size_t dense_cap) {
  if (static_cast<std::size_t>(m.rows()) > dense_cap)
    fail(ErrorKind::size_cap, "matrix exceeds the dense solver cap");
  if (!(gap_threshold > 0.0)) fail(ErrorKind::invalid_argument, "gap threshold must be positive");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(Eigen::MatrixXcd(m), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) fail(ErrorKind::not_converged, "dense Hermitian solver failed");

  SpectrumReport report;
  report.threshold = gap_threshold;
  report.eigenvalues.assign(eig.eigenvalues().data(), eig.eigenvalues().data() + eig.eigenvalues().size());
  for (std::size_t i = 1; i < report.eigenvalues.size(); ++i) {
    const double left = report.eigenvalues[i - 1], right = report.eigenvalues[i];
    if (right - left >= gap_threshold) report.gaps.push_back({left, right});
  }
  return report;
}

SpectrumReport full_spectrum(const PeierlsMatrix& m, double gap_threshold, std::size_t dense_cap) {
  return full_spectrum(m.matrix, gap_threshold, dense_cap);
}

std::vector<TruncationPoint> truncation_study(const HoppingSymbol& symbol, const FieldSpec& field,
                                              double eps, const std::vector<int>& radii, EdgeKind which,
                                              const EdgeOptions& opts, const QuadratureRule& rule) {
  if (radii.empty()) fail(ErrorKind::invalid_argument, "truncation study needs at least one radius");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (radii[i] <= radii[i - 1]) fail(ErrorKind::invalid_argument, "radii must be strictly increasing");
  std::vector<TruncationPoint> out;
  for (int r : radii) {
    const auto m = build_peierls_matrix(symbol, field, eps, Box(symbol.dim(), r), rule);
    out.push_back({r, edge(m, which, opts)});
  }
  return out;
}

void write_spectrum_csv(const SpectrumReport& report, std::ostream& out) {
  out << "index,eigenvalue\n";
  for (std::size_t i = 0; i < report.eigenvalues.size(); ++i)
    out << i << ',' << format_double(report.eigenvalues[i]) << '\n';
}

std::string gaps_to_json_text(const SpectrumReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["threshold"] = report.threshold;
  j["gaps"] = nlohmann::ordered_json::array();
  for (const auto& g : report.gaps) j["gaps"].push_back({{"left", g.left}, {"right", g.right}});
  return j.dump(2);
}

}  // namespace magedge
