#ifndef COHERENT_TORUS_H
#define COHERENT_TORUS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call. Values 1 to 6 match the command-line exit codes.
 */
typedef enum CtStatus {
  CT_STATUS_OK = 0,
  /**
   * I/O or cache failure.
   */
  CT_STATUS_IO = 1,
  /**
   * Invalid argument, size mismatch, non-finite value or insufficient band limit.
   */
  CT_STATUS_INVALID = 2,
  /**
   * A resource cap would be exceeded.
   */
  CT_STATUS_RESOURCE_CAP = 3,
  /**
   * The tolerance lies below the frame defect.
   */
  CT_STATUS_UNATTAINABLE = 4,
  /**
   * Malformed or unsupported symbol, or a non-Hermitian operator.
   */
  CT_STATUS_SYMBOL = 5,
  /**
   * Eigensolver failure or unstable state count.
   */
  CT_STATUS_SOLVER = 6,
  /**
   * A required pointer argument was null.
   */
  CT_STATUS_NULL_POINTER = 7,
  /**
   * A panic was caught at the boundary.
   */
  CT_STATUS_PANIC = 8,
} CtStatus;

/**
 * Band-limited function given by its Fourier coefficients.
 */
typedef struct CtField CtField;

/**
 * Discretization grid.
 */
typedef struct CtGrid CtGrid;

/**
 * Quantized operator matrix.
 */
typedef struct CtOperator CtOperator;

/**
 * Eigendecomposition of a Hermitian operator.
 */
typedef struct CtSpectrum CtSpectrum;

/**
 * Phase-space symbol.
 */
typedef struct CtSymbol CtSymbol;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ct_version(void);

/**
 * Message of the last failed call on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *ct_last_error_message(void);

/**
 * Creates a grid of dimension `n`, band limit `band_limit` and semiclassical
 * parameter `h`. `samples_per_dim = 0` selects the default sample count.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum CtStatus ct_grid_new(size_t n,
                          size_t band_limit,
                          size_t samples_per_dim,
                          double h,
                          struct CtGrid **out_grid);

/**
 * # Safety
 * `grid` must be null or a handle from [`ct_grid_new`] not yet freed.
 */
void ct_grid_free(struct CtGrid *grid);

/**
 * Number of retained Fourier modes `(2K+1)^n`; zero for a null handle.
 *
 * # Safety
 * `grid` must be null or a live grid handle.
 */
size_t ct_grid_num_modes(const struct CtGrid *grid);

/**
 * Writes the `n` integer components of mode `index` (lexicographic order,
 * first component slowest) to `out_mode`.
 *
 * # Safety
 * `grid` must be a live grid handle and `out_mode` must hold `n` values.
 */
enum CtStatus ct_grid_mode(const struct CtGrid *grid, size_t index, int64_t *out_mode);

/**
 * Builds a field from `len` coefficients in mode order, split into real
 * and imaginary parts. `len` must equal [`ct_grid_num_modes`].
 *
 * # Safety
 * `re` and `im` must each hold `len` values; `out_field` must be writable.
 */
enum CtStatus ct_field_new(const struct CtGrid *grid,
                           const double *re,
                           const double *im,
                           size_t len,
                           struct CtField **out_field);

/**
 * The plane wave `e^{ik·y}` (norm `(2π)^{n/2}`); `k` holds `n` components.
 *
 * # Safety
 * `k` must hold `n` values; `out_field` must be writable.
 */
enum CtStatus ct_field_plane_wave(const struct CtGrid *grid,
                                  const int64_t *k,
                                  struct CtField **out_field);

/**
 * # Safety
 * `field` must be null or a live field handle.
 */
void ct_field_free(struct CtField *field);

/**
 * Copies the coefficients into `re` and `im`, each of length `len`.
 *
 * # Safety
 * `re` and `im` must each have room for `len` values.
 */
enum CtStatus ct_field_coeffs(const struct CtField *field, double *re, double *im, size_t len);

/**
 * `L²(T^n)` norm of the field.
 *
 * # Safety
 * `field` must be a live handle; `out_norm` must be writable.
 */
enum CtStatus ct_field_norm(const struct CtField *field, double *out_norm);

/**
 * `⟨a, b⟩ = ∫ conj(a) b`, conjugate-linear in `a`.
 *
 * # Safety
 * Both fields must be live handles; `out_re` and `out_im` must be writable.
 */
enum CtStatus ct_inner_product(const struct CtField *a,
                               const struct CtField *b,
                               double *out_re,
                               double *out_im);

/**
 * Normalization constant of the Gaussian coherent state.
 *
 * # Safety
 * `out_value` must be writable.
 */
enum CtStatus ct_alpha(size_t n, double h, double *out_value);

/**
 * Tight-frame constant `c̃(h)`.
 *
 * # Safety
 * `out_value` must be writable.
 */
enum CtStatus ct_frame_constant(size_t n, double h, double *out_value);

/**
 * `c̃(h) − 1`, computed without cancellation.
 *
 * # Safety
 * `out_value` must be writable.
 */
enum CtStatus ct_frame_defect(size_t n, double h, double *out_value);

/**
 * Frame multiplier `m_R(k)` for the momentum ball of radius `radius`;
 * an infinite radius yields `c̃(h)`.
 *
 * # Safety
 * `k` must hold `n` values; `out_value` must be writable.
 */
enum CtStatus ct_frame_multiplier(const struct CtGrid *grid,
                                  const int64_t *k,
                                  double radius,
                                  double *out_value);

/**
 * Relative error of the truncated analysis/synthesis round trip.
 *
 * # Safety
 * `field` must be a live handle; `out_value` must be writable.
 */
enum CtStatus ct_reconstruct_error(const struct CtField *field, double radius, double *out_value);

/**
 * Smallest multiple of `h` at which the reconstruction error is at most `tol`.
 *
 * # Safety
 * `field` must be a live handle; `out_value` must be writable.
 */
enum CtStatus ct_truncation_radius(const struct CtField *field, double tol, double *out_value);

/**
 * Periodized coherent state centred at position `x` with momentum
 * `h·lattice`; both arrays hold `n` values.
 *
 * # Safety
 * `x` and `lattice` must hold `n` values; `out_field` must be writable.
 */
enum CtStatus ct_coherent_state(const struct CtGrid *grid,
                                const double *x,
                                const int64_t *lattice,
                                struct CtField **out_field);

/**
 * Parses a JSON symbol definition.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_symbol` must be writable.
 */
enum CtStatus ct_symbol_from_json(const char *json, struct CtSymbol **out_symbol);

/**
 * Built-in symbol: `free`, `pendulum` or `identity`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out_symbol` must be writable.
 */
enum CtStatus ct_symbol_builtin(const char *name, size_t n, struct CtSymbol **out_symbol);

/**
 * # Safety
 * `symbol` must be null or a live symbol handle.
 */
void ct_symbol_free(struct CtSymbol *symbol);

/**
 * Quantizes `symbol` on `grid`: Weyl when `weyl` is true, Kohn–Nirenberg otherwise.
 *
 * # Safety
 * Handles must be live; `out_operator` must be writable.
 */
enum CtStatus ct_operator_new(const struct CtSymbol *symbol,
                              const struct CtGrid *grid,
                              bool weyl,
                              struct CtOperator **out_operator);

/**
 * # Safety
 * `operator` must be null or a live operator handle.
 */
void ct_operator_free(struct CtOperator *operator_);

/**
 * Whether the matrix is Hermitian to within 1e-12; false for a null handle.
 *
 * # Safety
 * `operator` must be null or a live operator handle.
 */
bool ct_operator_is_hermitian(const struct CtOperator *operator_);

/**
 * `A ψ` projected onto the band.
 *
 * # Safety
 * Handles must be live; `out_field` must be writable.
 */
enum CtStatus ct_operator_apply(const struct CtOperator *operator_,
                                const struct CtField *field,
                                struct CtField **out_field);

/**
 * Full eigendecomposition of a Hermitian operator.
 *
 * # Safety
 * `operator` must be live; `out_spectrum` must be writable.
 */
enum CtStatus ct_spectrum_new(const struct CtOperator *operator_, struct CtSpectrum **out_spectrum);

/**
 * # Safety
 * `spectrum` must be null or a live spectrum handle.
 */
void ct_spectrum_free(struct CtSpectrum *spectrum);

/**
 * Number of eigenpairs; zero for a null handle.
 *
 * # Safety
 * `spectrum` must be null or a live spectrum handle.
 */
size_t ct_spectrum_len(const struct CtSpectrum *spectrum);

/**
 * Copies the ascending eigenvalues into `out_values` (length `len`).
 *
 * # Safety
 * `out_values` must have room for `len` values.
 */
enum CtStatus ct_spectrum_eigenvalues(const struct CtSpectrum *spectrum,
                                      double *out_values,
                                      size_t len);

/**
 * Eigenfunction `j`, normalized in `L²(T^n)`.
 *
 * # Safety
 * `spectrum` must be live; `out_field` must be writable.
 */
enum CtStatus ct_spectrum_eigenfunction(const struct CtSpectrum *spectrum,
                                        size_t j,
                                        struct CtField **out_field);

/**
 * `#{j : E_j ≤ energy}`.
 *
 * # Safety
 * `spectrum` must be live; `out_count` must be writable.
 */
enum CtStatus ct_count_states(const struct CtSpectrum *spectrum, double energy, size_t *out_count);

/**
 * Propagates the superposition `Σ c_j ψ_j` (normalized) to time `t`.
 * `indices`, `re` and `im` each hold `count` values.
 *
 * # Safety
 * Arrays must hold `count` values; `out_field` must be writable.
 */
enum CtStatus ct_propagate(const struct CtSpectrum *spectrum,
                           const size_t *indices,
                           const double *re,
                           const double *im,
                           size_t count,
                           double t,
                           struct CtField **out_field);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COHERENT_TORUS_H */
