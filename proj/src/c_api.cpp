#include "magedge/magedge.h"

#include <iostream>
#include <sstream>
#include <string>

#include "magedge/config.hpp"
#include "magedge/error.hpp"
#include "magedge/runner.hpp"

struct magedge_symbol {
  magedge::HoppingSymbol value;
};

struct magedge_field {
  magedge::FieldSpec value;
};

struct magedge_matrix {
  magedge::PeierlsMatrix value;
};

namespace {

thread_local std::string last_error;

magedge_status status_of(magedge::ErrorKind kind) {
  using magedge::ErrorKind;
  switch (kind) {
    case ErrorKind::invalid_argument: return MAGEDGE_ERR_INVALID_ARGUMENT;
    case ErrorKind::dimension_mismatch: return MAGEDGE_ERR_DIMENSION;
    case ErrorKind::domain: return MAGEDGE_ERR_DOMAIN;
    case ErrorKind::not_finite: return MAGEDGE_ERR_NOT_FINITE;
    case ErrorKind::not_hermitian: return MAGEDGE_ERR_NOT_HERMITIAN;
    case ErrorKind::not_converged: return MAGEDGE_ERR_NOT_CONVERGED;
    case ErrorKind::size_cap: return MAGEDGE_ERR_SIZE_CAP;
    case ErrorKind::io: return MAGEDGE_ERR_IO;
    case ErrorKind::config: return MAGEDGE_ERR_CONFIG;
  }
  return MAGEDGE_ERR_INTERNAL;
}

template <class F>
magedge_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return MAGEDGE_OK;
  } catch (const magedge::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    last_error = e.what();
    return MAGEDGE_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return MAGEDGE_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) magedge::fail(magedge::ErrorKind::invalid_argument, what);
}

magedge::Point point(const double* p, int dim) {
  require(p != nullptr, "null point");
  return Eigen::Map<const Eigen::VectorXd>(p, dim);
}

}  // namespace

extern "C" {

const char* magedge_version(void) { return magedge::kVersion; }

const char* magedge_last_error(void) { return last_error.c_str(); }

const char* magedge_status_string(magedge_status status) {
  switch (status) {
    case MAGEDGE_OK: return "ok";
    case MAGEDGE_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MAGEDGE_ERR_DIMENSION: return "dimension mismatch";
    case MAGEDGE_ERR_DOMAIN: return "domain error";
    case MAGEDGE_ERR_NOT_FINITE: return "non-finite value";
    case MAGEDGE_ERR_NOT_HERMITIAN: return "not Hermitian";
    case MAGEDGE_ERR_NOT_CONVERGED: return "not converged";
    case MAGEDGE_ERR_SIZE_CAP: return "size cap exceeded";
    case MAGEDGE_ERR_IO: return "i/o error";
    case MAGEDGE_ERR_CONFIG: return "configuration error";
    case MAGEDGE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

magedge_status magedge_symbol_identity(int dim, magedge_symbol** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    *out = new magedge_symbol{magedge::HoppingSymbol::identity(dim)};
  });
}

magedge_status magedge_symbol_harper(int dim, double hop, magedge_symbol** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    *out = new magedge_symbol{magedge::HoppingSymbol::harper(dim, hop)};
  });
}

magedge_status magedge_symbol_power_law(int dim, double rate, double radius, magedge_symbol** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    *out = new magedge_symbol{magedge::HoppingSymbol::power_law(dim, rate, radius)};
  });
}

magedge_status magedge_symbol_from_json(const char* json, magedge_symbol** out) {
  return guarded([&] {
    require(out != nullptr && json != nullptr, "null argument");
    *out = new magedge_symbol{magedge::symbol_from_json_text(json)};
  });
}

magedge_status magedge_symbol_load(const char* path, magedge_symbol** out) {
  return guarded([&] {
    require(out != nullptr && path != nullptr, "null argument");
    *out = new magedge_symbol{magedge::load_symbol(path)};
  });
}

magedge_status magedge_symbol_schur_norm(const magedge_symbol* symbol, double alpha, double* out) {
  return guarded([&] {
    require(symbol != nullptr && out != nullptr, "null argument");
    *out = magedge::schur_alpha_norm(symbol->value, alpha);
  });
}

void magedge_symbol_free(magedge_symbol* symbol) { delete symbol; }

magedge_status magedge_field_unit(int dim, magedge_field** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    *out = new magedge_field{magedge::FieldSpec::unit(dim)};
  });
}

magedge_status magedge_field_constant(int dim, const double* b, magedge_field** out) {
  return guarded([&] {
    require(out != nullptr && b != nullptr, "null argument");
    require(dim >= 1, "dimension must be positive");
    const Eigen::MatrixXd m = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        b, dim, dim);
    *out = new magedge_field{magedge::FieldSpec::constant(m)};
  });
}

magedge_status magedge_field_from_json(const char* json, magedge_field** out) {
  return guarded([&] {
    require(out != nullptr && json != nullptr, "null argument");
    magedge::Json j;
    try {
      j = magedge::Json::parse(json);
    } catch (const nlohmann::json::exception& e) {
      magedge::fail(magedge::ErrorKind::config, std::string("field JSON: ") + e.what());
    }
    *out = new magedge_field{magedge::field_from_json(j)};
  });
}

magedge_status magedge_field_flux(const magedge_field* field, const double* x, const double* y, const double* z,
                                  int quadrature_order, double* out) {
  return guarded([&] {
    require(field != nullptr && out != nullptr, "null argument");
    const int d = field->value.dim();
    *out = magedge::flux_triangle(field->value, {point(x, d), point(y, d), point(z, d)},
                                  magedge::QuadratureRule(quadrature_order));
  });
}

magedge_status magedge_field_phase(const magedge_field* field, double eps, const double* x, const double* y,
                                   int quadrature_order, double* out) {
  return guarded([&] {
    require(field != nullptr && out != nullptr, "null argument");
    const int d = field->value.dim();
    *out = magedge::peierls_phase(field->value, eps, point(x, d), point(y, d),
                                  magedge::QuadratureRule(quadrature_order));
  });
}

void magedge_field_free(magedge_field* field) { delete field; }

magedge_status magedge_matrix_build(const magedge_symbol* symbol, const magedge_field* field, double eps,
                                    int radius, int quadrature_order, magedge_matrix** out) {
  return guarded([&] {
    require(symbol != nullptr && field != nullptr && out != nullptr, "null argument");
    const magedge::Box box(symbol->value.dim(), radius);
    *out = new magedge_matrix{magedge::build_peierls_matrix(symbol->value, field->value, eps, box,
                                                            magedge::QuadratureRule(quadrature_order))};
  });
}

magedge_status magedge_matrix_size(const magedge_matrix* matrix, size_t* out) {
  return guarded([&] {
    require(matrix != nullptr && out != nullptr, "null argument");
    *out = matrix->value.size();
  });
}

magedge_status magedge_matrix_entry(const magedge_matrix* matrix, size_t row, size_t col, double* re, double* im) {
  return guarded([&] {
    require(matrix != nullptr && re != nullptr && im != nullptr, "null argument");
    require(row < matrix->value.size() && col < matrix->value.size(), "index out of range");
    const auto v = matrix->value.matrix.coeff(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    *re = v.real();
    *im = v.imag();
  });
}

magedge_status magedge_matrix_edge(const magedge_matrix* matrix, magedge_edge_kind which, double tol, uint64_t seed,
                                   double* value, double* residual) {
  return guarded([&] {
    require(matrix != nullptr && value != nullptr, "null argument");
    magedge::EdgeKind kind = magedge::EdgeKind::sup;
    switch (which) {
      case MAGEDGE_EDGE_SUP: kind = magedge::EdgeKind::sup; break;
      case MAGEDGE_EDGE_INF: kind = magedge::EdgeKind::inf; break;
      case MAGEDGE_EDGE_NORM: kind = magedge::EdgeKind::norm; break;
      default: magedge::fail(magedge::ErrorKind::invalid_argument, "unknown edge kind");
    }
    magedge::EdgeOptions opts;
    opts.tol = tol;
    opts.seed = seed;
    const auto r = magedge::edge(matrix->value, kind, opts);
    *value = r.value;
    if (residual) *residual = r.residual;
  });
}

magedge_status magedge_matrix_spectrum(const magedge_matrix* matrix, double* values, size_t capacity,
                                       size_t* count) {
  return guarded([&] {
    require(matrix != nullptr && count != nullptr, "null argument");
    require(values != nullptr || capacity == 0, "null value buffer");
    const auto report = magedge::full_spectrum(matrix->value);
    *count = report.eigenvalues.size();
    for (size_t i = 0; i < capacity && i < report.eigenvalues.size(); ++i) values[i] = report.eigenvalues[i];
  });
}

void magedge_matrix_free(magedge_matrix* matrix) { delete matrix; }

magedge_status magedge_run(const char* command, const char* config_json, const char* out_dir,
                           const magedge_run_options* options, int* exit_code) {
  return guarded([&] {
    require(command != nullptr && config_json != nullptr && out_dir != nullptr && exit_code != nullptr,
            "null argument");
    magedge::RunOptions opts;
    if (options) {
      if (options->has_seed) opts.seed = options->seed;
      if (options->has_workers) opts.workers = options->workers;
      opts.quiet = options->quiet != 0;
    }
    std::ostringstream err;
    *exit_code = magedge::run_command(command, config_json, out_dir, opts, std::cout, err);
    last_error = err.str();
    if (!last_error.empty()) std::cerr << last_error;
  });
}

}  // extern "C"
