#ifndef PTWELL_H
#define PTWELL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PtwStatus {
  PtwStatus_Ok = 0,
  PtwStatus_InvalidArgument = 1,
  PtwStatus_NumericFailure = 2,
  PtwStatus_NullPointer = 3,
  PtwStatus_Panic = 4,
} PtwStatus;

typedef enum PtwStability {
  PtwStability_Unknown = 0,
  PtwStability_Robust = 1,
  PtwStability_Fragile = 2,
} PtwStability;

typedef enum PtwParameter {
  PtwParameter_Z = 0,
  PtwParameter_Lambda = 1,
} PtwParameter;

/**
 * Opaque list of real roots.
 */
typedef struct PtwSpectrum PtwSpectrum;

typedef struct PtwRoot {
  size_t index;
  double r;
  double sigma;
  double tau;
  double energy;
  double residual;
  enum PtwStability stability;
  /**
   * NaN unless the level is fragile.
   */
  double critical_z;
} PtwRoot;

typedef struct PtwExceptional {
  double lambda;
  double z;
  double r_double;
  double residual_value;
  double residual_derivative;
  /**
   * -1 when the pair is real below the critical value, +1 above.
   */
  double real_side;
  size_t iterations;
} PtwExceptional;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. The pointer stays
 * valid until the next call into this library on the same thread.
 */
const char *ptw_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ptw_version(void);

/**
 * Real roots for scaled parameters. `r_max = 0` selects the default window.
 *
 * # Safety
 * `out` must be valid for writing a pointer.
 */
enum PtwStatus ptw_spectrum_scan(double lambda,
                                 double z,
                                 double scale,
                                 double r_max,
                                 struct PtwSpectrum **out);

/**
 * As [`ptw_spectrum_scan`] from the well half-width `L`, step `ell` and height `g`.
 *
 * # Safety
 * `out` must be valid for writing a pointer.
 */
enum PtwStatus ptw_spectrum_scan_physical(double l,
                                          double ell,
                                          double g,
                                          double r_max,
                                          struct PtwSpectrum **out);

/**
 * Real roots with robust/fragile flags from continuation in `Z` up to `z_cap`.
 *
 * # Safety
 * `out` must be valid for writing a pointer.
 */
enum PtwStatus ptw_classify(double lambda,
                            double z,
                            double z_cap,
                            double r_max,
                            struct PtwSpectrum **out);

/**
 * Number of roots; 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live handle from this library.
 */
size_t ptw_spectrum_len(const struct PtwSpectrum *s);

/**
 * Copies root `i` (0-based) into `out`.
 *
 * # Safety
 * `s` must be a live handle and `out` valid for writing.
 */
enum PtwStatus ptw_spectrum_root(const struct PtwSpectrum *s, size_t i, struct PtwRoot *out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `s` must be null or a handle not yet freed.
 */
void ptw_spectrum_free(struct PtwSpectrum *s);

/**
 * Scaled secular function at `R` for unit scale.
 *
 * # Safety
 * `out` must be valid for writing.
 */
enum PtwStatus ptw_secular_det(double lambda, double z, double r, double *out);

/**
 * Newton search for a double real root starting at `(lambda, z, r_hint)`.
 *
 * # Safety
 * `out` must be valid for writing.
 */
enum PtwStatus ptw_find_exceptional(double lambda,
                                    double z,
                                    double r_hint,
                                    enum PtwParameter free,
                                    struct PtwExceptional *out);

/**
 * Finite-difference eigenvalues below `e_max` on `n` nodes, with Richardson
 * extrapolation when `extrapolate` is nonzero. Writes at most `cap` values to
 * `buf` and the total count to `len`; `buf` may be null when `cap` is 0.
 *
 * # Safety
 * `buf` must hold `cap` doubles and `len` must be valid for writing.
 */
enum PtwStatus ptw_oracle_eigenvalues(double l,
                                      double ell,
                                      double g,
                                      size_t n,
                                      double e_max,
                                      int32_t extrapolate,
                                      double *buf,
                                      size_t cap,
                                      size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PTWELL_H */
