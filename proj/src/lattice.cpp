#include "magedge/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "magedge/error.hpp"
#include "magedge/numeric.hpp"

namespace magedge {

namespace {

constexpr double kSymbolHermitianTol = 1e-12;

Site negate(const Site& g) {
  Site out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = -g[i];
  return out;
}

Point to_point(const Site& g) {
  Point p(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) p[static_cast<Eigen::Index>(i)] = g[i];
  return p;
}

double euclid(std::span<const int> g) {
  double s = 0.0;
  for (int v : g) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

Site difference(const Site& a, const Site& b) {
  Site out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

// -eps * flux(0,g,g') for a constant field, summed exactly like flux_triangle.
class ConstantPhase {
 public:
  explicit ConstantPhase(const Eigen::MatrixXd& b) : b_(b) { terms_.reserve(b.size()); }

  double operator()(double eps, const Site& g, const Site& gp) {
    terms_.clear();
    const auto d = b_.rows();
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = j + 1; k < d; ++k)
        if (b_(j, k) != 0.0)
          terms_.push_back(b_(j, k) * (static_cast<double>(g[j]) * gp[k] - static_cast<double>(g[k]) * gp[j]));
    return -eps * (0.5 * exact_sum(terms_));
  }

 private:
  const Eigen::MatrixXd& b_;
  std::vector<double> terms_;
};

}  // namespace

std::string to_string(PhaseVariant v) {
  return v == PhaseVariant::transverse ? "transverse" : "slowly-varying";
}

double japanese_bracket(std::span<const int> g) {
  double s = 1.0;
  for (int v : g) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

HoppingSymbol::HoppingSymbol(int dim, std::map<Site, cplx> coefficients, std::string name,
                             std::optional<TailModel> tail)
    : dim_(dim), coeffs_(std::move(coefficients)), name_(std::move(name)), tail_(tail) {
  if (dim_ < 1) fail(ErrorKind::invalid_argument, "symbol dimension must be positive");
  double scale = 0.0;
  for (const auto& [g, v] : coeffs_) {
    if (static_cast<int>(g.size()) != dim_)
      fail(ErrorKind::dimension_mismatch, "symbol key dimension does not match symbol dimension");
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      fail(ErrorKind::not_finite, "non-finite symbol coefficient");
    scale = std::max(scale, std::abs(v));
  }
  for (const auto& [g, v] : coeffs_) {
    if (std::abs(v - std::conj(at(negate(g)))) > kSymbolHermitianTol * std::max(1.0, scale))
      fail(ErrorKind::not_hermitian, "symbol violates lambda(-g) = conj(lambda(g))");
  }
}

HoppingSymbol HoppingSymbol::identity(int dim) {
  return HoppingSymbol(dim, {{Site(dim, 0), cplx(1.0, 0.0)}}, "identity");
}

HoppingSymbol HoppingSymbol::harper(int dim, double hop) {
  std::map<Site, cplx> c;
  for (int j = 0; j < dim; ++j) {
    Site e(dim, 0);
    e[j] = 1;
    c[e] = hop;
    e[j] = -1;
    c[e] = hop;
  }
  return HoppingSymbol(dim, std::move(c), "harper");
}

HoppingSymbol HoppingSymbol::power_law(int dim, double rate, double radius) {
  const int reach = static_cast<int>(std::floor(radius));
  std::map<Site, cplx> c;
  Site g(dim, -reach);
  while (true) {
    if (euclid(g) <= radius) c[g] = std::pow(japanese_bracket(g), -rate);
    int i = dim - 1;
    while (i >= 0 && g[i] == reach) g[i--] = -reach;
    if (i < 0) break;
    ++g[i];
  }
  std::ostringstream name;
  name << "power-law(rate=" << rate << ",radius=" << radius << ")";
  return HoppingSymbol(dim, std::move(c), name.str(), TailModel{rate, 1.0, radius});
}

cplx HoppingSymbol::at(const Site& g) const {
  auto it = coeffs_.find(g);
  return it == coeffs_.end() ? cplx{} : it->second;
}

int HoppingSymbol::reach() const {
  int r = 0;
  for (const auto& [g, v] : coeffs_)
    for (int c : g) r = std::max(r, std::abs(c));
  return r;
}

HoppingSymbol HoppingSymbol::negated() const {
  std::map<Site, cplx> c;
  for (const auto& [g, v] : coeffs_) c[g] = -v;
  return HoppingSymbol(dim_, std::move(c), "-" + name_, tail_);
}

double HoppingSymbol::tail_bound(double alpha) const {
  if (!tail_) return 0.0;
  const double s = tail_->rate - alpha;
  const double d = dim_;
  if (s <= d) return std::numeric_limits<double>::infinity();

  // Exact lattice sum over r < |g| <= far, then a continuum bound beyond:
  // each unit cell of a site with |g| > far lies outside |x| > far - sqrt(d)/2,
  // and |g|^-s <= (1 + sqrt(d)/(2 far))^s * integral of |x|^-s over the cell.
  const double r = tail_->truncation_radius;
  const double far = std::max(4.0 * r, r + 8.0);
  const int reach = static_cast<int>(std::ceil(far));
  double shell = 0.0;
  Site g(dim_, -reach);
  while (true) {
    const double n = euclid(g);
    if (n > r && n <= far) shell += std::pow(japanese_bracket(g), -s);
    int i = dim_ - 1;
    while (i >= 0 && g[i] == reach) g[i--] = -reach;
    if (i < 0) break;
    ++g[i];
  }
  const double half_diag = 0.5 * std::sqrt(d);
  const double sphere = 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
  const double inner = far - half_diag;
  const double beyond = std::pow(1.0 + half_diag / far, s) * sphere * std::pow(inner, d - s) / (s - d);
  return tail_->amplitude * (shell + beyond);
}

GeneralKernel as_kernel(const HoppingSymbol& symbol) {
  GeneralKernel k;
  k.dim = symbol.dim();
  k.name = symbol.name();
  for (const auto& [g, v] : symbol.coefficients()) k.offsets.push_back(g);
  auto coeffs = symbol.coefficients();
  k.entry = [coeffs = std::move(coeffs)](const Site& a, const Site& b) {
    auto it = coeffs.find(difference(a, b));
    return it == coeffs.end() ? cplx{} : it->second;
  };
  return k;
}

double kernel_hermiticity_defect(const GeneralKernel& kernel, std::span<const Site> sites) {
  double worst = 0.0;
  for (const auto& a : sites)
    for (const auto& b : sites)
      worst = std::max(worst, std::abs(kernel.entry(a, b) - std::conj(kernel.entry(b, a))));
  return worst;
}

Box::Box(int dim, int radius) : dim_(dim), radius_(radius), size_(1) {
  if (dim < 1) fail(ErrorKind::invalid_argument, "box dimension must be positive");
  if (radius < 1) fail(ErrorKind::invalid_argument, "box radius must be a positive integer");
  for (int i = 0; i < dim; ++i) size_ *= static_cast<std::size_t>(side());
}

Site Box::site(std::size_t index) const {
  Site g(dim_);
  for (int i = dim_ - 1; i >= 0; --i) {
    g[i] = static_cast<int>(index % side()) - radius_;
    index /= side();
  }
  return g;
}

std::optional<std::size_t> Box::index(std::span<const int> site) const {
  if (static_cast<int>(site.size()) != dim_) return std::nullopt;
  std::size_t idx = 0;
  for (int c : site) {
    if (c < -radius_ || c > radius_) return std::nullopt;
    idx = idx * side() + static_cast<std::size_t>(c + radius_);
  }
  return idx;
}

std::vector<Site> Box::sites() const {
  std::vector<Site> out;
  out.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) out.push_back(site(i));
  return out;
}

double schur_alpha_norm(const HoppingSymbol& symbol, double alpha) {
  if (!std::isfinite(alpha)) fail(ErrorKind::invalid_argument, "alpha must be finite");
  double total = 0.0;
  for (const auto& [g, v] : symbol.coefficients()) total += std::abs(v) * std::pow(japanese_bracket(g), alpha);
  return total;
}

double schur_alpha_norm(const GeneralKernel& kernel, const Box& box, double alpha) {
  if (kernel.dim != box.dim()) fail(ErrorKind::dimension_mismatch, "kernel and box dimensions differ");
  double worst = 0.0;
  const auto sites = box.sites();
  for (const auto& a : sites) {
    double row = 0.0, col = 0.0;
    auto visit = [&](const Site& b) {
      const Site diff = difference(a, b);
      const double w = std::pow(japanese_bracket(diff), alpha);
      row += std::abs(kernel.entry(a, b)) * w;
      col += std::abs(kernel.entry(b, a)) * w;
    };
    if (kernel.offsets.empty()) {
      for (const auto& b : sites) visit(b);
    } else {
      for (const auto& o : kernel.offsets) {
        const Site b = difference(a, o);
        if (box.index(b)) visit(b);
      }
    }
    worst = std::max({worst, row, col});
  }
  return worst;
}

std::vector<double> matrix_row_schur_sums(const PeierlsMatrix& m, double alpha) {
  std::vector<double> sums(m.size(), 0.0);
  for (Eigen::Index r = 0; r < m.matrix.outerSize(); ++r) {
    const Site a = m.box.site(static_cast<std::size_t>(r));
    for (SparseMatrix::InnerIterator it(m.matrix, r); it; ++it) {
      const Site b = m.box.site(static_cast<std::size_t>(it.col()));
      sums[r] += std::abs(it.value()) * std::pow(japanese_bracket(difference(a, b)), alpha);
    }
  }
  return sums;
}

double weighted_l1(const HoppingSymbol& symbol, L1Weight weight) {
  double total = 0.0;
  for (const auto& [g, v] : symbol.coefficients()) {
    const double w = weight == L1Weight::norm ? euclid(g) : 1.0 + euclid(g) * euclid(g);
    total += std::abs(v) * w;
  }
  return total;
}

double peierls_phase(const FieldSpec& field, double eps, const Point& g, const Point& gp,
                     const QuadratureRule& rule) {
  if (eps == 0.0) return 0.0;
  if (field.is_slowly_varying()) return slowly_varying_phase(field, eps, g, gp, rule);
  return eps * transverse_gauge_phase(field, g, gp, rule);
}

namespace {

// `offset_values`, when given, holds lambda(offset) for each kernel offset
// and replaces calls to kernel.entry.
PeierlsMatrix assemble(const GeneralKernel& kernel, const std::vector<cplx>* offset_values,
                       const FieldSpec& field, double eps, const Box& box, const QuadratureRule& rule) {
  if (kernel.dim != box.dim() || field.dim() != box.dim())
    fail(ErrorKind::dimension_mismatch, "kernel, field and box dimensions must agree");
  if (!std::isfinite(eps)) fail(ErrorKind::invalid_argument, "eps must be finite");

  const auto n = box.size();
  const auto* constant = std::get_if<ConstantField>(&field.variant());
  std::optional<ConstantPhase> fast;
  if (constant) fast.emplace(constant->b);

  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(n * std::max<std::size_t>(kernel.offsets.size(), 1));
  double scale = 0.0, defect = 0.0;

  auto add = [&](std::size_t a, const Site& ga, std::size_t b, const Site& gb, const cplx* known) {
    if (b < a) return;
    cplx k;
    if (known) {
      k = *known;
    } else {
      k = kernel.entry(ga, gb);
      const cplx kt = kernel.entry(gb, ga);
      defect = std::max(defect, std::abs(k - std::conj(kt)));
      scale = std::max(scale, std::abs(k));
    }
    if (k == cplx{}) return;
    if (a == b) {
      triplets.emplace_back(a, a, cplx(k.real(), 0.0));
      return;
    }
    double phi = 0.0;
    if (eps != 0.0)
      phi = fast ? (*fast)(eps, ga, gb) : peierls_phase(field, eps, to_point(ga), to_point(gb), rule);
    const cplx v = std::polar(1.0, phi) * k;
    triplets.emplace_back(a, b, v);
    triplets.emplace_back(b, a, std::conj(v));
  };

  for (std::size_t a = 0; a < n; ++a) {
    const Site ga = box.site(a);
    if (kernel.offsets.empty()) {
      for (std::size_t b = a; b < n; ++b) add(a, ga, b, box.site(b), nullptr);
    } else {
      for (std::size_t i = 0; i < kernel.offsets.size(); ++i) {
        const Site gb = difference(ga, kernel.offsets[i]);
        if (auto b = box.index(gb)) add(a, ga, *b, gb, offset_values ? &(*offset_values)[i] : nullptr);
      }
    }
  }
  if (defect > kSymbolHermitianTol * std::max(1.0, scale))
    fail(ErrorKind::not_hermitian, "source kernel is not Hermitian");

  PeierlsMatrix out{SparseMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), box,
                    Provenance{kernel.name, field.label(), eps, box.radius(),
                               field.is_slowly_varying() ? PhaseVariant::slowly_varying
                                                         : PhaseVariant::transverse}};
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.matrix.makeCompressed();
  return out;
}

}  // namespace

PeierlsMatrix build_peierls_matrix(const HoppingSymbol& symbol, const FieldSpec& field, double eps,
                                   const Box& box, const QuadratureRule& rule) {
  const GeneralKernel kernel = as_kernel(symbol);
  std::vector<cplx> values;
  for (const auto& o : kernel.offsets) values.push_back(symbol.at(o));
  return assemble(kernel, &values, field, eps, box, rule);
}

PeierlsMatrix build_peierls_matrix(const GeneralKernel& kernel, const FieldSpec& field, double eps,
                                   const Box& box, const QuadratureRule& rule) {
  return assemble(kernel, nullptr, field, eps, box, rule);
}

GeneralKernel recenter_kernel(const HoppingSymbol& symbol, const FieldSpec& field, double eps0,
                              const QuadratureRule& rule) {
  if (field.is_slowly_varying())
    fail(ErrorKind::invalid_argument,
         "recentering is not defined for slowly varying fields (the phase is nonlinear in eps)");
  GeneralKernel k = as_kernel(symbol);
  std::ostringstream name;
  name << symbol.name() << "@eps0=" << format_double(eps0);
  k.name = name.str();
  if (eps0 == 0.0) return k;

  auto base = k.entry;
  k.entry = [base, field, eps0, rule](const Site& a, const Site& b) {
    const cplx v = base(a, b);
    if (v == cplx{} || a == b) return v;
    return std::polar(1.0, peierls_phase(field, eps0, to_point(a), to_point(b), rule)) * v;
  };
  return k;
}

double hermiticity_defect(const SparseMatrix& m) {
  const SparseMatrix adj = m.adjoint();
  const SparseMatrix diff = m - adj;
  double worst = 0.0;
  for (Eigen::Index r = 0; r < diff.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(diff, r); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

double gauge_conjugation_check(const PeierlsMatrix& m, const std::function<double(const Site&)>& chi) {
  const Eigen::MatrixXcd dense = m.dense();
  Eigen::VectorXcd phases(dense.rows());
  for (Eigen::Index i = 0; i < dense.rows(); ++i) {
    const double c = chi(m.box.site(static_cast<std::size_t>(i)));
    if (!std::isfinite(c)) fail(ErrorKind::not_finite, "gauge function is not finite on the box");
    phases[i] = std::polar(1.0, c);
  }
  const Eigen::MatrixXcd conj = phases.asDiagonal() * dense * phases.conjugate().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e1(dense, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e2(conj, Eigen::EigenvaluesOnly);
  return (e1.eigenvalues() - e2.eigenvalues()).cwiseAbs().maxCoeff();
}

HoppingSymbol symbol_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("symbol JSON: ") + e.what());
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "dimension" && key != "coefficients" && key != "name" && key != "tail")
      fail(ErrorKind::config, "symbol JSON: unknown key '" + key + "'");
  }
  if (!j.contains("dimension") || !j["dimension"].is_number_integer())
    fail(ErrorKind::config, "symbol JSON: missing integer 'dimension'");
  if (!j.contains("coefficients") || !j["coefficients"].is_object())
    fail(ErrorKind::config, "symbol JSON: missing object 'coefficients'");
  const int dim = j["dimension"].get<int>();

  std::map<Site, cplx> coeffs;
  for (const auto& [key, value] : j["coefficients"].items()) {
    Site g;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, ',')) {
      try {
        std::size_t used = 0;
        g.push_back(std::stoi(part, &used));
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        fail(ErrorKind::config, "symbol JSON: bad lattice key '" + key + "'");
      }
    }
    if (static_cast<int>(g.size()) != dim)
      fail(ErrorKind::config, "symbol JSON: key '" + key + "' has wrong dimension");
    if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number())
      fail(ErrorKind::config, "symbol JSON: value for '" + key + "' must be [re, im]");
    coeffs[g] = cplx(value[0].get<double>(), value[1].get<double>());
  }

  std::optional<TailModel> tail;
  if (j.contains("tail")) {
    const auto& t = j["tail"];
    TailModel m;
    m.rate = t.at("rate").get<double>();
    m.amplitude = t.value("amplitude", 1.0);
    m.truncation_radius = t.at("truncation_radius").get<double>();
    tail = m;
  }
  return HoppingSymbol(dim, std::move(coeffs), j.value("name", std::string("symbol")), tail);
}

HoppingSymbol load_symbol(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open symbol file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return symbol_from_json_text(buf.str());
}

std::string symbol_to_json_text(const HoppingSymbol& symbol) {
  nlohmann::ordered_json j;
  j["dimension"] = symbol.dim();
  j["name"] = symbol.name();
  nlohmann::ordered_json coeffs = nlohmann::ordered_json::object();
  for (const auto& [g, v] : symbol.coefficients()) {
    std::string key;
    for (std::size_t i = 0; i < g.size(); ++i) key += (i ? "," : "") + std::to_string(g[i]);
    coeffs[key] = {v.real(), v.imag()};
  }
  j["coefficients"] = coeffs;
  if (const auto& t = symbol.tail())
    j["tail"] = {{"rate", t->rate}, {"amplitude", t->amplitude}, {"truncation_radius", t->truncation_radius}};
  return j.dump(2);
}

void write_triplet_csv(const PeierlsMatrix& m, std::ostream& out) {
  out << "row,col,re,im\n";
  for (Eigen::Index r = 0; r < m.matrix.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m.matrix, r); it; ++it)
      out << r << ',' << it.col() << ',' << format_double(it.value().real()) << ','
          << format_double(it.value().imag()) << '\n';
}

}  // namespace magedge
