#pragma once

// Lattice kernel operators on Z^d and their Peierls-transformed compressions
// to finite boxes.

#include <complex>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "magedge/phase.hpp"

namespace magedge {

using cplx = std::complex<double>;
using Site = std::vector<int>;
using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// <g> = (1 + |g|^2)^(1/2)
double japanese_bracket(std::span<const int> g);

/// Analytic tail amplitude * <g>^-rate of a symbol beyond its stored support.
struct TailModel {
  double rate = 0.0;
  double amplitude = 1.0;
  double truncation_radius = 0.0;  // coefficients with |g| > radius were discarded
};

/// Finitely supported lattice Fourier coefficients lambda(g) with
/// lambda(-g) = conj(lambda(g)).
class HoppingSymbol {
 public:
  HoppingSymbol(int dim, std::map<Site, cplx> coefficients, std::string name = "symbol",
                std::optional<TailModel> tail = std::nullopt);

  static HoppingSymbol identity(int dim);
  /// Nearest-neighbour hops lambda(+-e_j) = hop.
  static HoppingSymbol harper(int dim, double hop = 1.0);
  /// lambda(g) = <g>^-rate for |g| <= radius (including g = 0).
  static HoppingSymbol power_law(int dim, double rate, double radius);

  int dim() const noexcept { return dim_; }
  const std::string& name() const noexcept { return name_; }
  const std::map<Site, cplx>& coefficients() const noexcept { return coeffs_; }
  const std::optional<TailModel>& tail() const noexcept { return tail_; }

  cplx at(const Site& g) const;
  /// Largest |g|_inf in the support.
  int reach() const;
  HoppingSymbol negated() const;

  /// Upper bound on the discarded mass sum_{|g|>r} amplitude <g>^(alpha-rate); 0 without a tail model.
  double tail_bound(double alpha) const;

 private:
  int dim_;
  std::map<Site, cplx> coeffs_;
  std::string name_;
  std::optional<TailModel> tail_;
};

/// Kernel K(g, g') on Z^d. `offsets` lists every g - g' where K may be
/// nonzero; empty means no structural zeros.
struct GeneralKernel {
  int dim = 0;
  std::function<cplx(const Site&, const Site&)> entry;
  std::vector<Site> offsets;
  std::string name = "kernel";
};

GeneralKernel as_kernel(const HoppingSymbol& symbol);

/// Max deviation |K(g,g') - conj K(g',g)| over all pairs of `sites` within the kernel support.
double kernel_hermiticity_defect(const GeneralKernel& kernel, std::span<const Site> sites);

class Box {
 public:
  Box(int dim, int radius);

  int dim() const noexcept { return dim_; }
  int radius() const noexcept { return radius_; }
  int side() const noexcept { return 2 * radius_ + 1; }
  std::size_t size() const noexcept { return size_; }

  /// Lexicographic order, last coordinate fastest.
  Site site(std::size_t index) const;
  std::optional<std::size_t> index(std::span<const int> site) const;
  std::vector<Site> sites() const;

 private:
  int dim_;
  int radius_;
  std::size_t size_;
};

enum class PhaseVariant { transverse, slowly_varying };
std::string to_string(PhaseVariant v);

struct Provenance {
  std::string source;
  std::string field;
  double eps = 0.0;
  int radius = 0;
  PhaseVariant variant = PhaseVariant::transverse;
};

struct PeierlsMatrix {
  SparseMatrix matrix;
  Box box;
  Provenance provenance;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(matrix); }
};

/// Sum |lambda(g)| <g>^alpha.
double schur_alpha_norm(const HoppingSymbol& symbol, double alpha);

/// Row/column suprema of |K| <g-g'>^alpha over the rows of `box`.
double schur_alpha_norm(const GeneralKernel& kernel, const Box& box, double alpha);

/// Row sums of |M_ab| <a-b>^alpha for every row of a Peierls matrix.
std::vector<double> matrix_row_schur_sums(const PeierlsMatrix& m, double alpha);

enum class L1Weight { norm, bracket_squared };

/// Sum |lambda(g)| |g| or sum |lambda(g)| <g>^2.
double weighted_l1(const HoppingSymbol& symbol, L1Weight weight);

/// Phase attached to entry (row g, column g'): eps * phi^A(g,g') for
/// Constant/General fields, phi^{A_eps}(g,g') for SlowlyVarying fields.
double peierls_phase(const FieldSpec& field, double eps, const Point& g, const Point& gp,
                     const QuadratureRule& rule);

PeierlsMatrix build_peierls_matrix(const HoppingSymbol& symbol, const FieldSpec& field, double eps,
                                   const Box& box, const QuadratureRule& rule = QuadratureRule{});
PeierlsMatrix build_peierls_matrix(const GeneralKernel& kernel, const FieldSpec& field, double eps,
                                   const Box& box, const QuadratureRule& rule = QuadratureRule{});

/// K'(g,g') = exp(i eps0 phi^A(g,g')) lambda(g-g').
GeneralKernel recenter_kernel(const HoppingSymbol& symbol, const FieldSpec& field, double eps0,
                              const QuadratureRule& rule = QuadratureRule{});

/// Max distance between sorted spectra of M and D M D*, D = diag(exp(i chi)).
double gauge_conjugation_check(const PeierlsMatrix& m, const std::function<double(const Site&)>& chi);

double hermiticity_defect(const SparseMatrix& m);

// JSON map "i,j,..." -> [re, im] plus "dimension".
HoppingSymbol symbol_from_json_text(const std::string& text);
HoppingSymbol load_symbol(const std::string& path);
std::string symbol_to_json_text(const HoppingSymbol& symbol);

/// Coordinate triplets "row,col,re,im" with a header line.
void write_triplet_csv(const PeierlsMatrix& m, std::ostream& out);

}  // namespace magedge
