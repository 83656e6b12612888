#ifndef MAGEDGE_H
#define MAGEDGE_H

/* C interface to the magnetic edge laboratory. Every call returns a status
   code; on failure magedge_last_error() describes the problem for the
   calling thread. Handles are opaque and owned by the caller. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MAGEDGE_API __declspec(dllexport)
#else
#define MAGEDGE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  MAGEDGE_OK = 0,
  MAGEDGE_ERR_INVALID_ARGUMENT = 1,
  MAGEDGE_ERR_DIMENSION = 2,
  MAGEDGE_ERR_DOMAIN = 3,
  MAGEDGE_ERR_NOT_FINITE = 4,
  MAGEDGE_ERR_NOT_HERMITIAN = 5,
  MAGEDGE_ERR_NOT_CONVERGED = 6,
  MAGEDGE_ERR_SIZE_CAP = 7,
  MAGEDGE_ERR_IO = 8,
  MAGEDGE_ERR_CONFIG = 9,
  MAGEDGE_ERR_INTERNAL = 10
} magedge_status;

typedef enum { MAGEDGE_EDGE_SUP = 0, MAGEDGE_EDGE_INF = 1, MAGEDGE_EDGE_NORM = 2 } magedge_edge_kind;

typedef struct magedge_symbol magedge_symbol;
typedef struct magedge_field magedge_field;
typedef struct magedge_matrix magedge_matrix;

typedef struct {
  int has_seed;
  uint64_t seed;
  int has_workers;
  int workers; /* 0 = available parallelism */
  int quiet;
} magedge_run_options;

MAGEDGE_API const char* magedge_version(void);
MAGEDGE_API const char* magedge_last_error(void);
MAGEDGE_API const char* magedge_status_string(magedge_status status);

/* Symbols: lattice Fourier coefficients of a translation-invariant kernel. */
MAGEDGE_API magedge_status magedge_symbol_identity(int dim, magedge_symbol** out);
MAGEDGE_API magedge_status magedge_symbol_harper(int dim, double hop, magedge_symbol** out);
MAGEDGE_API magedge_status magedge_symbol_power_law(int dim, double rate, double radius, magedge_symbol** out);
MAGEDGE_API magedge_status magedge_symbol_from_json(const char* json, magedge_symbol** out);
MAGEDGE_API magedge_status magedge_symbol_load(const char* path, magedge_symbol** out);
MAGEDGE_API magedge_status magedge_symbol_schur_norm(const magedge_symbol* symbol, double alpha, double* out);
MAGEDGE_API void magedge_symbol_free(magedge_symbol* symbol);

/* Fields: constant two-forms (row-major d x d, antisymmetric) or JSON specs. */
MAGEDGE_API magedge_status magedge_field_unit(int dim, magedge_field** out);
MAGEDGE_API magedge_status magedge_field_constant(int dim, const double* b, magedge_field** out);
MAGEDGE_API magedge_status magedge_field_from_json(const char* json, magedge_field** out);
MAGEDGE_API magedge_status magedge_field_flux(const magedge_field* field, const double* x, const double* y,
                                              const double* z, int quadrature_order, double* out);
MAGEDGE_API magedge_status magedge_field_phase(const magedge_field* field, double eps, const double* x,
                                               const double* y, int quadrature_order, double* out);
MAGEDGE_API void magedge_field_free(magedge_field* field);

/* Peierls matrices on the box {-R..R}^d, sites in lexicographic order. */
MAGEDGE_API magedge_status magedge_matrix_build(const magedge_symbol* symbol, const magedge_field* field,
                                                double eps, int radius, int quadrature_order,
                                                magedge_matrix** out);
MAGEDGE_API magedge_status magedge_matrix_size(const magedge_matrix* matrix, size_t* out);
MAGEDGE_API magedge_status magedge_matrix_entry(const magedge_matrix* matrix, size_t row, size_t col, double* re,
                                                double* im);
MAGEDGE_API magedge_status magedge_matrix_edge(const magedge_matrix* matrix, magedge_edge_kind which, double tol,
                                               uint64_t seed, double* value, double* residual);
/* Writes up to `capacity` eigenvalues in increasing order; `count` receives the matrix size. */
MAGEDGE_API magedge_status magedge_matrix_spectrum(const magedge_matrix* matrix, double* values, size_t capacity,
                                                   size_t* count);
MAGEDGE_API void magedge_matrix_free(magedge_matrix* matrix);

/* Runs a command (flux, butterfly, sweep, fit, verify, harness) on a JSON
   config, writing outputs into out_dir. exit_code receives 0 (pass),
   1 (usage or config error) or 2 (certificate failure). options may be NULL. */
MAGEDGE_API magedge_status magedge_run(const char* command, const char* config_json, const char* out_dir,
                                       const magedge_run_options* options, int* exit_code);

#ifdef __cplusplus
}
#endif

#endif
