#pragma once

// Extremal eigenvalues, norms and full spectra of finite Hermitian matrices.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "magedge/lattice.hpp"

namespace magedge {

enum class EdgeKind { sup, inf, norm };
enum class SolverMethod { automatic, iterative, dense };

std::string to_string(EdgeKind kind);
EdgeKind edge_kind_from_string(const std::string& s);

/// Site count above which dense solves are refused. MAGEDGE_DENSE_CAP
/// overrides the default of 3000.
std::size_t default_dense_cap();

struct EdgeOptions {
  double tol = 1e-10;          // residual <= tol * (Schur 0-norm of the matrix)
  std::uint64_t seed = 42;
  int max_iter = 5000;         // matrix-vector products
  SolverMethod method = SolverMethod::automatic;
  std::size_t dense_below = 64;  // automatic picks dense at or below this size
  std::size_t dense_cap = default_dense_cap();
  int basis = 120;             // Krylov basis size before a thick restart
  int keep = 40;               // Ritz vectors retained across a restart
};

struct EdgeResult {
  double value = 0.0;
  EdgeKind which = EdgeKind::sup;
  double residual = 0.0;
  int iterations = 0;
  SolverMethod method = SolverMethod::iterative;
  bool converged = true;
};

/// Max absolute row sum, the Schur 0-norm of a Hermitian matrix.
double matrix_schur0(const SparseMatrix& m);

/// sup/inf/norm of the spectrum. inf is -sup of the negated matrix, norm is
/// max(|sup|, |inf|). Throws Error(not_converged) when the iteration cap is hit;
/// `edge_unchecked` returns the best Ritz pair instead.
EdgeResult edge(const SparseMatrix& m, EdgeKind which, const EdgeOptions& opts = {});
EdgeResult edge(const PeierlsMatrix& m, EdgeKind which, const EdgeOptions& opts = {});
EdgeResult edge_unchecked(const SparseMatrix& m, EdgeKind which, const EdgeOptions& opts = {});

struct Gap {
  double left;
  double right;
};

struct SpectrumReport {
  std::vector<double> eigenvalues;  // nondecreasing
  std::vector<Gap> gaps;            // right - left >= threshold
  double threshold = 0.0;
};

SpectrumReport full_spectrum(const SparseMatrix& m, double gap_threshold = 1e-3,
                             std::size_t dense_cap = default_dense_cap());
SpectrumReport full_spectrum(const PeierlsMatrix& m, double gap_threshold = 1e-3,
                             std::size_t dense_cap = default_dense_cap());

struct TruncationPoint {
  int radius;
  EdgeResult edge;
};

/// Edges of nested box compressions; radii must be strictly increasing.
std::vector<TruncationPoint> truncation_study(const HoppingSymbol& symbol, const FieldSpec& field,
                                              double eps, const std::vector<int>& radii, EdgeKind which,
                                              const EdgeOptions& opts = {},
                                              const QuadratureRule& rule = QuadratureRule{});

void write_spectrum_csv(const SpectrumReport& report, std::ostream& out);
std::string gaps_to_json_text(const SpectrumReport& report);

}  // namespace magedge
