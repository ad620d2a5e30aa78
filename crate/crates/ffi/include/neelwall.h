#ifndef NEELWALL_H
#define NEELWALL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NwInit {
  NW_INIT_TEMPLATE = 0,
  NW_INIT_KINK = 1,
} NwInit;

typedef enum NwStatus {
  NW_STATUS_OK = 0,
  NW_STATUS_NULL_POINTER = 1,
  NW_STATUS_INVALID_ARGUMENT = 2,
  NW_STATUS_NOT_CONVERGED = 3,
  NW_STATUS_IO = 4,
  NW_STATUS_PARSE = 5,
  NW_STATUS_INCOMPATIBLE = 6,
  NW_STATUS_NUMERICAL = 7,
  NW_STATUS_PANIC = 8,
} NwStatus;

typedef enum NwVerdict {
  NW_VERDICT_COINCIDE = 0,
  NW_VERDICT_NOT_BOTH_SOLUTIONS = 1,
  NW_VERDICT_CONTRADICTION = 2,
  NW_VERDICT_NON_CONVEX = 3,
} NwVerdict;

// Symmetric uniform grid.
typedef struct NwGrid NwGrid;

// Material parameters `nu` and `h`.
typedef struct NwParams NwParams;

// Wall profile on a grid.
typedef struct NwProfile NwProfile;

typedef struct NwEnergy {
  double exchange;
  double potential;
  double stray;
  double total;
} NwEnergy;

typedef struct NwSolveSummary {
  uintptr_t iterations;
  double grad_norm;
  bool converged;
  struct NwEnergy energy;
} NwSolveSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message from the last fallible call on this thread if it failed, else null.
//
// The pointer stays valid until the next call into this library.
const char *nw_last_error(void);

// Library version as a static nul-terminated string.
const char *nw_version(void);

// # Safety
// `out` must be a valid pointer to writable storage.
enum NwStatus nw_params_new(double nu, double h, struct NwParams **out);

// # Safety
// `params` must be null or come from `nw_params_new` and not be freed twice.
void nw_params_free(struct NwParams *params);

// # Safety
// `out` must be a valid pointer to writable storage.
enum NwStatus nw_grid_new(uintptr_t n, double half_width, struct NwGrid **out);

// Number of nodes, or 0 for a null grid.
//
// # Safety
// `grid` must be null or a live grid handle.
uintptr_t nw_grid_len(const struct NwGrid *grid);

// # Safety
// `grid` must be null or come from `nw_grid_new` and not be freed twice.
void nw_grid_free(struct NwGrid *grid);

// Builds a starting profile. `width` is ignored for the template.
//
// # Safety
// `grid` and `params` must be live handles; `out` must be writable.
enum NwStatus nw_profile_initial(const struct NwGrid *grid,
                                 const struct NwParams *params,
                                 enum NwInit init,
                                 double width,
                                 struct NwProfile **out);

// Wraps caller-supplied samples; `len` must equal the grid length.
//
// # Safety
// `theta` must point to `len` readable doubles.
enum NwStatus nw_profile_from_theta(const struct NwGrid *grid,
                                    const struct NwParams *params,
                                    const double *theta,
                                    uintptr_t len,
                                    struct NwProfile **out);

// Number of samples, or 0 for a null profile.
//
// # Safety
// `profile` must be null or a live profile handle.
uintptr_t nw_profile_len(const struct NwProfile *profile);

// Copies the samples into `buf`, which must hold at least the profile length.
//
// # Safety
// `buf` must point to `len` writable doubles.
enum NwStatus nw_profile_theta(const struct NwProfile *profile, double *buf, uintptr_t len);

// # Safety
// `profile` must be null or come from this library and not be freed twice.
void nw_profile_free(struct NwProfile *profile);

// # Safety
// `path` must be a nul-terminated string; `out` must be writable.
enum NwStatus nw_profile_read(const char *path, struct NwProfile **out);

// # Safety
// `profile` must be a live handle; `path` a nul-terminated string.
enum NwStatus nw_profile_write(const struct NwProfile *profile, const char *path);

// # Safety
// `profile` must be a live handle; `out` must be writable.
enum NwStatus nw_profile_energy(const struct NwProfile *profile, struct NwEnergy *out);

// Minimizes from `start` with the default quasi-Newton method.
//
// A result is stored in `out` even when the iteration budget runs out, in
// which case the status is `NotConverged`. `summary` may be null.
//
// # Safety
// `start` must be a live handle; `out` must be writable.
enum NwStatus nw_minimize(const struct NwProfile *start,
                          double grad_tol,
                          uintptr_t max_iter,
                          struct NwProfile **out,
                          struct NwSolveSummary *summary);

// Runs the convexity certificate along the arcsin path between two profiles.
//
// # Safety
// `first` and `second` must be live handles; `out` must be writable.
enum NwStatus nw_certificate(const struct NwProfile *first,
                             const struct NwProfile *second,
                             enum NwVerdict *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEELWALL_H */
