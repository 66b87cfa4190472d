#ifndef MUBSEARCH_H
#define MUBSEARCH_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum MubStatus {
  MUB_STATUS_OK = 0,
  // A required pointer argument was null.
  MUB_STATUS_NULL_POINTER = 1,
  // An argument is out of range or inconsistent with the others.
  MUB_STATUS_INVALID_ARGUMENT = 2,
  // Input matrices are not unitary within tolerance.
  MUB_STATUS_NOT_UNITARY = 3,
  // A numerical routine failed.
  MUB_STATUS_NUMERICAL = 4,
  // Reading or writing a file failed.
  MUB_STATUS_IO = 5,
  // Internal error; the library state is unaffected.
  MUB_STATUS_PANIC = 6,
} MubStatus;

// Opaque set of `n_bases` unitaries in dimension `d`, with the standard
// basis implied.
typedef struct MubBasisSet MubBasisSet;

// Opaque aggregate of a finished search.
typedef struct MubSearchReport MubSearchReport;

// Plain-data search settings. Obtain defaults from
// [`mub_search_options_default`] and adjust fields as needed.
typedef struct MubSearchOptions {
  size_t d;
  size_t n_bases;
  size_t trials;
  uint64_t base_seed;
  double success_threshold;
  double func_change_tol;
  size_t max_iterations;
  size_t parallelism;
  double bin_width;
} MubSearchOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`). Returns the full message length
// excluding the terminator.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t mub_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *mub_version(void);

// Builds a basis set from `n_bases` matrices of dimension `d`, packed as
// `n_bases · d · d` row-major complex entries (`2·n_bases·d²` doubles).
//
// # Safety
// `data` must point to `2·n_bases·d²` readable doubles and `out` must be
// writable.
enum MubStatus mub_basis_set_new(size_t d,
                                 size_t n_bases,
                                 const double *data,
                                 struct MubBasisSet **out);

// The `d + 1` bases of the standard construction for prime `d` (returned
// as `d` explicit bases plus the implied standard basis).
//
// # Safety
// `out` must be writable.
enum MubStatus mub_prime_construction(size_t d, struct MubBasisSet **out);

// # Safety
// `set` must be null or a handle from this library not yet freed.
void mub_basis_set_free(struct MubBasisSet *set);

// Dimension of the set, or 0 for a null handle.
//
// # Safety
// `set` must be null or a live handle.
size_t mub_basis_set_dim(const struct MubBasisSet *set);

// Number of explicit bases, or 0 for a null handle.
//
// # Safety
// `set` must be null or a live handle.
size_t mub_basis_set_n_bases(const struct MubBasisSet *set);

// Copies basis `k` into `out` as `2·d²` interleaved doubles.
//
// # Safety
// `set` must be a live handle and `out` must point to `len` writable doubles.
enum MubStatus mub_basis_set_copy_basis(const struct MubBasisSet *set,
                                        size_t k,
                                        double *out,
                                        size_t len);

// Objective value of the set; zero exactly for mutually unbiased bases.
//
// # Safety
// `set` must be a live handle and `out` writable.
enum MubStatus mub_basis_set_objective(const struct MubBasisSet *set, double *out);

// Classifies the set against `threshold`. Any of the output pointers may
// be null.
//
// # Safety
// `set` must be a live handle; non-null outputs must be writable.
enum MubStatus mub_basis_set_verify(const struct MubBasisSet *set,
                                    double threshold,
                                    bool *is_mub,
                                    double *objective,
                                    double *worst_deviation);

// Default settings for a search of `n_bases` unitaries in dimension `d`.
struct MubSearchOptions mub_search_options_default(size_t d,
                                                   size_t n_bases,
                                                   size_t trials,
                                                   uint64_t base_seed);

// Runs a multi-start search. Blocks until every trial has finished.
//
// # Safety
// `options` must be readable and `out` writable.
enum MubStatus mub_search_run(const struct MubSearchOptions *options, struct MubSearchReport **out);

// # Safety
// `report` must be null or a handle from this library not yet freed.
void mub_search_report_free(struct MubSearchReport *report);

// # Safety
// `report` must be null or a live handle.
size_t mub_search_report_trials(const struct MubSearchReport *report);

// # Safety
// `report` must be null or a live handle.
size_t mub_search_report_success_count(const struct MubSearchReport *report);

// Smallest finite final objective; infinity if there is none or the
// handle is null.
//
// # Safety
// `report` must be null or a live handle.
double mub_search_report_min_objective(const struct MubSearchReport *report);

// Final objective of trial `trial_id`.
//
// # Safety
// `report` must be a live handle and `out` writable.
enum MubStatus mub_search_report_trial_objective(const struct MubSearchReport *report,
                                                 size_t trial_id,
                                                 double *out);

// Writes `PREFIX.trials.csv` and `PREFIX.summary.json`, the same files the
// command line `search` produces.
//
// # Safety
// `report` must be a live handle and `prefix` a NUL-terminated UTF-8 path.
enum MubStatus mub_search_report_write(const struct MubSearchReport *report, const char *prefix);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MUBSEARCH_H */
