#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "magedge/spectral.hpp"
#include "support.hpp"

using namespace magedge;
using testing::error_kind;

namespace {

SparseMatrix diagonal(std::initializer_list<double> values) {
  SparseMatrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) {
    m.insert(i, i) = v;
    ++i;
  }
  m.makeCompressed();
  return m;
}

EdgeOptions forced(SolverMethod method, double tol = 1e-10) {
  EdgeOptions o;
  o.method = method;
  o.tol = tol;
  return o;
}

}  // namespace

TEST_CASE("edges of a diagonal matrix") {
  const auto m = diagonal({1.0, 2.0, -3.0});
  CHECK(edge(m, EdgeKind::sup).value == 2.0);
  CHECK(edge(m, EdgeKind::inf).value == -3.0);
  CHECK(edge(m, EdgeKind::norm).value == 3.0);
  const auto d = diagonal({1.0, 2.0, 3.0});
  CHECK(edge(d, EdgeKind::sup).value == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(edge(d, EdgeKind::inf).value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(edge(d, EdgeKind::sup).method == SolverMethod::dense);
  CHECK(edge(d, EdgeKind::sup, forced(SolverMethod::iterative)).value == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(matrix_schur0(m) == 3.0);
}

TEST_CASE("path graphs match the open-chain closed form") {
  // Eigenvalues of the n-site path are 2 cos(pi k / (n + 1)).
  const auto path = build_peierls_matrix(HoppingSymbol::harper(1), FieldSpec::unit(1), 0.0, Box(1, 1));
  CHECK(std::fabs(edge(path, EdgeKind::sup).value - std::sqrt(2.0)) <= 1e-10);
  CHECK(std::fabs(edge(path, EdgeKind::inf).value + std::sqrt(2.0)) <= 1e-10);
  CHECK(std::fabs(edge(path, EdgeKind::sup, forced(SolverMethod::iterative)).value - std::sqrt(2.0)) <= 1e-10);

  const auto long_path = build_peierls_matrix(HoppingSymbol::harper(1), FieldSpec::unit(1), 0.0, Box(1, 200));
  const double expected = 2.0 * std::cos(std::numbers::pi / 402.0);
  CHECK(std::fabs(edge(long_path, EdgeKind::sup).value - expected) <= 1e-9);
}

TEST_CASE("Harper baseline at eps = 0") {
  const auto h = HoppingSymbol::harper(2);
  EdgeOptions opts;
  opts.tol = 1e-10;
  const auto study = truncation_study(h, FieldSpec::unit(2), 0.0, {5, 10, 20, 40}, EdgeKind::sup, opts);
  REQUIRE(study.size() == 4);
  for (std::size_t i = 1; i < study.size(); ++i) CHECK(study[i].edge.value >= study[i - 1].edge.value);
  const double sup40 = study.back().edge.value;
  CHECK(sup40 >= 3.9);
  CHECK(sup40 <= 4.0);
  // The separable open box has sup 4 cos(pi / (2R + 2)).
  for (const auto& p : study)
    CHECK(std::fabs(p.edge.value - 4.0 * std::cos(std::numbers::pi / (2.0 * p.radius + 2.0))) <= 1e-8);
  CHECK(error_kind([&] { truncation_study(h, FieldSpec::unit(2), 0.0, {5, 5}, EdgeKind::sup); }) ==
        ErrorKind::invalid_argument);
}

TEST_CASE("dense and iterative solvers agree") {
  const double tol = 1e-10;
  const auto h = HoppingSymbol::harper(2);
  const auto pl = HoppingSymbol::power_law(2, 4.6, 3.0);
  const PeierlsMatrix fixtures[] = {
      build_peierls_matrix(h, FieldSpec::unit(2), 0.3, Box(2, 10)),
      build_peierls_matrix(h, testing::sine_field(), 0.2, Box(2, 8)),
      build_peierls_matrix(h, testing::sine_potential(), 0.25, Box(2, 8)),
      build_peierls_matrix(pl, FieldSpec::unit(2), 0.125, Box(2, 6)),
      build_peierls_matrix(HoppingSymbol::identity(2), FieldSpec::unit(2), 0.5, Box(2, 4)),
  };
  for (const auto& m : fixtures)
    for (EdgeKind which : {EdgeKind::sup, EdgeKind::inf, EdgeKind::norm}) {
      const auto d = edge(m, which, forced(SolverMethod::dense, tol));
      const auto it = edge(m, which, forced(SolverMethod::iterative, tol));
      CHECK(it.method == SolverMethod::iterative);
      CHECK(it.converged);
      CHECK(std::fabs(d.value - it.value) <= 10 * tol);
    }
}

TEST_CASE("edge kinds relate through negation and symmetry") {
  const auto h = HoppingSymbol::power_law(2, 4.6, 2.5);
  const Box box(2, 9);
  const auto m = build_peierls_matrix(h, FieldSpec::unit(2), 0.3, box);
  const auto neg = build_peierls_matrix(h.negated(), FieldSpec::unit(2), 0.3, box);
  const double sup = edge(m, EdgeKind::sup).value, inf = edge(m, EdgeKind::inf).value;
  CHECK(std::fabs(inf + edge(neg, EdgeKind::sup).value) <= 1e-9);
  CHECK(edge(m, EdgeKind::norm).value == doctest::Approx(std::max(std::fabs(sup), std::fabs(inf))).epsilon(1e-9));

  // Real symbol, constant field: eps and -eps give conjugate matrices.
  const auto mm = build_peierls_matrix(h, FieldSpec::unit(2), -0.3, box);
  CHECK(std::fabs(edge(mm, EdgeKind::sup).value - sup) <= 1e-9);

  // ||M|| <= sum |lambda(g)|.
  CHECK(edge(m, EdgeKind::norm).value <= schur_alpha_norm(h, 0.0) * (1 + 1e-12));

  const auto id = build_peierls_matrix(HoppingSymbol::identity(2), FieldSpec::unit(2), 0.4, Box(2, 10));
  CHECK(edge(id, EdgeKind::sup).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(edge(id, EdgeKind::inf).value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the iterative solver is deterministic for a fixed seed") {
  const auto m = build_peierls_matrix(HoppingSymbol::harper(2), testing::sine_field(), 0.3, Box(2, 12));
  const auto a = edge(m, EdgeKind::sup, forced(SolverMethod::iterative));
  const auto b = edge(m, EdgeKind::sup, forced(SolverMethod::iterative));
  CHECK(a.value == b.value);
  CHECK(a.iterations == b.iterations);
  CHECK(a.residual <= 1e-10 * matrix_schur0(m.matrix));
}

TEST_CASE("iteration cap") {
  const auto m = build_peierls_matrix(HoppingSymbol::harper(2), FieldSpec::unit(2), 0.3, Box(2, 20));
  EdgeOptions o = forced(SolverMethod::iterative, 1e-14);
  o.max_iter = 5;
  o.basis = 4;
  o.keep = 2;
  CHECK(error_kind([&] { edge(m, EdgeKind::sup, o); }) == ErrorKind::not_converged);
  const auto r = edge_unchecked(m.matrix, EdgeKind::sup, o);
  CHECK(!r.converged);
  CHECK(std::isfinite(r.value));
  CHECK(error_kind([&] { o.tol = 0.0; edge(m, EdgeKind::sup, o); }) == ErrorKind::invalid_argument);
}

TEST_CASE("full spectrum and gaps") {
  const auto report = full_spectrum(diagonal({3.0, 1.0, 0.0, 1.0005}), 1e-3);
  REQUIRE(report.eigenvalues.size() == 4);
  CHECK(report.eigenvalues.front() == doctest::Approx(0.0));
  CHECK(report.eigenvalues.back() == doctest::Approx(3.0));
  REQUIRE(report.gaps.size() == 2);
  CHECK(report.gaps[0].left == doctest::Approx(0.0));
  CHECK(report.gaps[0].right == doctest::Approx(1.0));
  CHECK(report.gaps[1].left == doctest::Approx(1.0005));
  CHECK(report.gaps[1].right == doctest::Approx(3.0));

  std::ostringstream csv;
  write_spectrum_csv(full_spectrum(diagonal({2.0, -1.0})), csv);
  CHECK(csv.str() == "index,eigenvalue\n0,-1\n1,2\n");
  CHECK(gaps_to_json_text(report).find("\"schema_version\": 1") != std::string::npos);

  // Harper at flux 1/2 per plaquette has a gap at zero energy on moderate boxes.
  const auto half = build_peierls_matrix(HoppingSymbol::harper(2), FieldSpec::unit(2), std::numbers::pi, Box(2, 6));
  CHECK(!full_spectrum(half, 1e-3).gaps.empty());

  CHECK(error_kind([] { full_spectrum(diagonal({1.0, 2.0, 3.0}), 1e-3, 2); }) == ErrorKind::size_cap);
  CHECK(error_kind([] { full_spectrum(diagonal({1.0}), 0.0); }) == ErrorKind::invalid_argument);
  EdgeOptions capped = forced(SolverMethod::dense);
  capped.dense_cap = 2;
  CHECK(error_kind([&] { edge(diagonal({1.0, 2.0, 3.0}), EdgeKind::sup, capped); }) == ErrorKind::size_cap);
}

TEST_CASE("edge kind names") {
  for (EdgeKind k : {EdgeKind::sup, EdgeKind::inf, EdgeKind::norm}) CHECK(edge_kind_from_string(to_string(k)) == k);
  CHECK(error_kind([] { edge_kind_from_string("max"); }) == ErrorKind::config);
}
