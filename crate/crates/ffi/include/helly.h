#ifndef HELLY_H
#define HELLY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum HellyStatus {
  HELLY_STATUS_OK = 0,
  // The certificate was read but at least one check failed.
  HELLY_STATUS_CHECK_FAILED = 1,
  // Malformed document, bad dimensions or a cap exceeded.
  HELLY_STATUS_INVALID_INPUT = 2,
  // The computation broke down numerically or the family is unbounded.
  HELLY_STATUS_NUMERIC = 3,
  HELLY_STATUS_NULL_POINTER = 4,
  // A Rust panic was caught at the boundary.
  HELLY_STATUS_INTERNAL = 5,
} HellyStatus;

typedef enum HellySelector {
  HELLY_SELECTOR_DR = 0,
  HELLY_SELECTOR_PIVOVAROV = 1,
} HellySelector;

// A selection certificate.
typedef struct HellyCertificate HellyCertificate;

// A validated family of half-spaces.
typedef struct HellyInstance HellyInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into the library on the same thread.
const char *helly_last_error(void);

// Library version, a static string.
const char *helly_version(void);

// `d^d (d+1)^((3d+1)/2) / sqrt(d!)`; NaN for `d = 0`.
double helly_explicit_bound(size_t d);

// Parses an instance document `{"dim", "halfspaces": [{"a", "b"}], "meta"}`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum HellyStatus helly_instance_from_json(const char *json, struct HellyInstance **out);

// Builds an instance from `m` rows: `a` is row-major `m x dim`, `b` has length `m`.
//
// # Safety
// `a` must point to `m * dim` doubles, `b` to `m` doubles, `out` must be valid.
enum HellyStatus helly_instance_from_rows(size_t dim,
                                          size_t m,
                                          const double *a,
                                          const double *b,
                                          struct HellyInstance **out);

// # Safety
// `inst` must be null or a handle from this library, not yet freed.
void helly_instance_free(struct HellyInstance *inst);

// Dimension of the instance, 0 for null.
//
// # Safety
// `inst` must be null or a live handle.
size_t helly_instance_dim(const struct HellyInstance *inst);

// Number of half-spaces, 0 for null.
//
// # Safety
// `inst` must be null or a live handle.
size_t helly_instance_len(const struct HellyInstance *inst);

// Runs the selection. `seed` only matters for the randomized selector;
// `tol_scale` multiplies every default tolerance (pass 1.0 for defaults).
//
// # Safety
// `inst` must be a live handle and `out` a valid pointer.
enum HellyStatus helly_select(const struct HellyInstance *inst,
                              enum HellySelector selector,
                              uint64_t seed,
                              double tol_scale,
                              struct HellyCertificate **out);

// # Safety
// `cert` must be null or a handle from this library, not yet freed.
void helly_certificate_free(struct HellyCertificate *cert);

// Parses a certificate document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum HellyStatus helly_certificate_from_json(const char *json, struct HellyCertificate **out);

// Serializes the certificate; free the string with [`helly_string_free`].
//
// # Safety
// `cert` must be a live handle and `out` a valid pointer.
enum HellyStatus helly_certificate_to_json(const struct HellyCertificate *cert, char **out);

// `vol(G) / vol(F)`; NaN for null.
//
// # Safety
// `cert` must be null or a live handle.
double helly_certificate_ratio(const struct HellyCertificate *cert);

// Copies the selected half-space indices into `buf` (capacity `cap`) and
// stores the count in `len`. Fails with `InvalidInput` when `cap` is too small,
// leaving the required size in `len`.
//
// # Safety
// `cert` must be a live handle, `buf` must hold `cap` entries, `len` must be valid.
enum HellyStatus helly_certificate_subfamily(const struct HellyCertificate *cert,
                                             size_t *buf,
                                             size_t cap,
                                             size_t *len);

// Re-checks the certificate with its recorded checker tolerances times
// `tol_scale`. Returns `Ok` when every check passes and `CheckFailed`
// otherwise. If `report` is non-null it receives the report as JSON.
//
// # Safety
// `cert` must be a live handle; `report` must be null or a valid pointer.
enum HellyStatus helly_verify(const struct HellyCertificate *cert, double tol_scale, char **report);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a string from this library, not yet freed.
void helly_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HELLY_H */
