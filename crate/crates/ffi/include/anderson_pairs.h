#ifndef ANDERSON_PAIRS_H
#define ANDERSON_PAIRS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ApStatus {
  AP_STATUS_OK = 0,
  /*
   Null pointer, bad UTF-8, index out of range or a buffer of the wrong length.
   */
  AP_STATUS_INVALID_ARGUMENT = 1,
  /*
   The experiment definition was rejected.
   */
  AP_STATUS_INVALID_CONFIG = 2,
  /*
   Memory budget, I/O, or an oracle size beyond its limit.
   */
  AP_STATUS_RESOURCE = 3,
  /*
   The oracle disagreed with the closed-form correlations.
   */
  AP_STATUS_ORACLE_MISMATCH = 4,
  /*
   The requested quantity does not exist for this run.
   */
  AP_STATUS_UNAVAILABLE = 5,
  /*
   A Rust panic was caught at the boundary.
   */
  AP_STATUS_INTERNAL = 6,
} ApStatus;

typedef struct ApConfig ApConfig;

typedef struct ApResult ApResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the last error message of this thread into `buf` as a
 NUL-terminated string, truncating if needed. Returns the full message
 length in bytes, excluding the terminator; 0 when there is no error.

 # Safety
 `buf` must be null or valid for `len` bytes.
 */
size_t ap_last_error(char *buf, size_t len);

/*
 Library version as a static NUL-terminated string.
 */
const char *ap_version(void);

/*
 Parses a TOML run configuration, the same format the CLI reads.

 # Safety
 `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ApStatus ap_config_from_toml(const char *toml, struct ApConfig **out);

/*
 # Safety
 `config` must be null or a handle from [`ap_config_from_toml`] not yet freed.
 */
void ap_config_free(struct ApConfig *config);

/*
 Overrides the master seed.

 # Safety
 `config` must be a live handle.
 */
enum ApStatus ap_config_set_seed(struct ApConfig *config, uint64_t seed);

/*
 Sets the worker thread count; 0 picks the machine default. Results do
 not depend on it.

 # Safety
 `config` must be a live handle.
 */
enum ApStatus ap_config_set_workers(struct ApConfig *config, size_t workers);

/*
 # Safety
 `config` must be a live handle.
 */
enum ApStatus ap_config_set_realizations(struct ApConfig *config, size_t realizations);

/*
 Runs the ensemble. The config handle stays owned by the caller.

 # Safety
 `config` must be a live handle and `out` a valid pointer.
 */
enum ApStatus ap_run(const struct ApConfig *config, struct ApResult **out);

/*
 # Safety
 `result` must be null or a handle from [`ap_run`] not yet freed.
 */
void ap_result_free(struct ApResult *result);

/*
 Number of lattice sites, or 0 for a null handle.

 # Safety
 `result` must be null or a live handle.
 */
size_t ap_result_num_sites(const struct ApResult *result);

/*
 Number of time slices, or 0 for a null handle.

 # Safety
 `result` must be null or a live handle.
 */
size_t ap_result_num_times(const struct ApResult *result);

/*
 # Safety
 `result` must be a live handle and `time` a valid pointer.
 */
enum ApStatus ap_result_time(const struct ApResult *result, size_t index, double *time);

/*
 Copies the averaged density of slice `index`; `len` must equal the
 number of sites.

 # Safety
 `result` must be a live handle and `buf` valid for `len` doubles.
 */
enum ApStatus ap_result_density(const struct ApResult *result,
                                size_t index,
                                double *buf,
                                size_t len);

/*
 Copies the averaged Γ of slice `index` in row-major order; `len` must
 be sites². Single-particle runs return `Unavailable`.

 # Safety
 `result` must be a live handle and `buf` valid for `len` doubles.
 */
enum ApStatus ap_result_correlation(const struct ApResult *result,
                                    size_t index,
                                    double *buf,
                                    size_t len);

/*
 Compares the closed-form correlations with exact two-particle evolution
 on random lattices of `size` sites. `max_error` may be null.

 # Safety
 `max_error` must be null or a valid pointer.
 */
enum ApStatus ap_oracle_check(size_t size, size_t trials, uint64_t seed, double *max_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANDERSON_PAIRS_H */
