#ifndef NHQC_H
#define NHQC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NhqcStatus {
  NHQC_STATUS_OK = 0,
  NHQC_STATUS_NULL_POINTER = 1,
  NHQC_STATUS_INVALID_ARGUMENT = 2,
  NHQC_STATUS_OUT_OF_RANGE = 3,
  NHQC_STATUS_NON_CONVERGENT = 4,
  NHQC_STATUS_IO = 5,
  NHQC_STATUS_PARSE = 6,
  NHQC_STATUS_BUFFER_TOO_SMALL = 7,
  NHQC_STATUS_INTERNAL = 8,
  NHQC_STATUS_PANIC = 9,
} NhqcStatus;

typedef enum NhqcScheme {
  NHQC_SCHEME_HOLONOMIC = 0,
  // `gamma` is ignored and set to −2π·eta.
  NHQC_SCHEME_DYNAMICAL = 1,
} NhqcScheme;

// Opaque sampled two-tone pulse schedule.
typedef struct NhqcSchedule NhqcSchedule;

typedef struct NhqcGateSpec {
  double theta;
  double phi;
  double gamma;
  double eta;
  enum NhqcScheme scheme;
} NhqcGateSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *nhqc_version(void);

// Message of the last failed call on this thread; empty if none. Valid until
// the next failing call on the same thread.
const char *nhqc_last_error(void);

// Gate duration in seconds for a peak Rabi rate `omega_max` (rad/s).
//
// # Safety
// `spec` and `out_duration` must be valid pointers or null.
enum NhqcStatus nhqc_compute_duration(const struct NhqcGateSpec *spec,
                                      double omega_max,
                                      double *out_duration);

// Synthesize a schedule with `n_samples` uniform intervals.
//
// # Safety
// `spec` and `out` must be valid pointers or null. On success `*out` owns a
// handle that must be released with `nhqc_schedule_free`.
enum NhqcStatus nhqc_schedule_synthesize(const struct NhqcGateSpec *spec,
                                         double omega_max,
                                         size_t n_samples,
                                         struct NhqcSchedule **out);

// Load a schedule from a tone descriptor file.
//
// # Safety
// `path` must be a NUL-terminated string or null; `out` as for
// `nhqc_schedule_synthesize`.
enum NhqcStatus nhqc_schedule_read(const char *path, struct NhqcSchedule **out);

// Release a schedule. Null is ignored.
//
// # Safety
// `schedule` must come from this library and not be used afterwards.
void nhqc_schedule_free(struct NhqcSchedule *schedule);

// Number of samples (n_samples + 1); 0 for null.
//
// # Safety
// `schedule` must be a live handle or null.
size_t nhqc_schedule_len(const struct NhqcSchedule *schedule);

// # Safety
// `schedule` must be a live handle or null; `out_duration` valid or null.
enum NhqcStatus nhqc_schedule_duration(const struct NhqcSchedule *schedule, double *out_duration);

// Copy sample columns into caller buffers of `capacity` doubles each. Any
// buffer may be null to skip that column.
//
// # Safety
// Each non-null buffer must hold at least `capacity` doubles.
enum NhqcStatus nhqc_schedule_copy_samples(const struct NhqcSchedule *schedule,
                                           double *times,
                                           double *omega0,
                                           double *phi0,
                                           double *omega1,
                                           double *phi1,
                                           size_t capacity);

// Write the schedule as a tone descriptor file.
//
// # Safety
// `schedule` must be a live handle or null; `path` a NUL-terminated string or null.
enum NhqcStatus nhqc_schedule_export(const struct NhqcSchedule *schedule, const char *path);

// Propagator under amplitude error `epsilon`, written row-major as 9 real and
// 9 imaginary parts in basis order (|0⟩, |1⟩, |a⟩).
//
// # Safety
// `out_re` and `out_im` must each hold 9 doubles.
enum NhqcStatus nhqc_propagate(const struct NhqcSchedule *schedule,
                               double epsilon,
                               size_t steps,
                               double *out_re,
                               double *out_im);

// Qubit-subspace fidelity against the ideal target and leakage out of it.
//
// # Safety
// Output pointers must be valid or null.
enum NhqcStatus nhqc_gate_fidelity(const struct NhqcSchedule *schedule,
                                   double epsilon,
                                   size_t steps,
                                   double *out_fidelity,
                                   double *out_leakage);

// Overlap of the bright-state image at T/2 with and without error `epsilon`.
//
// # Safety
// `out` must be valid or null.
enum NhqcStatus nhqc_survival_probability(const struct NhqcSchedule *schedule,
                                          double epsilon,
                                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NHQC_H */
