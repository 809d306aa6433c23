/* SPDX-License-Identifier: Apache-2.0 */

#ifndef QDEMON_H
#define QDEMON_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum QdStatus {
  QD_STATUS_OK = 0,
  QD_STATUS_NULL_POINTER = 1,
  QD_STATUS_INVALID_ARGUMENT = 2,
  QD_STATUS_PARSE = 3,
  QD_STATUS_CALIBRATION = 4,
  QD_STATUS_PHYSICS = 5,
  QD_STATUS_BUFFER_TOO_SMALL = 6,
  QD_STATUS_PANIC = 7,
} QdStatus;

typedef enum QdProtocol {
  QD_PROTOCOL_SEQUENTIAL = 0,
  QD_PROTOCOL_CONTINUOUS = 1,
} QdProtocol;

// Initial preparation; `Thermal` reads the temperature argument (K,
// `INFINITY` for the maximally mixed state).
typedef enum QdPrep {
  QD_PREP_EQUILIBRIUM = 0,
  QD_PREP_THERMAL = 1,
  QD_PREP_SUPERPOSITION = 2,
  QD_PREP_EXCITED = 3,
} QdPrep;

// Per-step series of a scenario trajectory.
typedef enum QdSeries {
  // Seconds.
  QD_SERIES_TIME = 0,
  QD_SERIES_SX = 1,
  QD_SERIES_SY = 2,
  QD_SERIES_SZ = 3,
  // Mean cavity photon number.
  QD_SERIES_NBAR = 4,
  // Extracted power in units of hf_S per second.
  QD_SERIES_POWER = 5,
} QdSeries;

// π-pulse and drive calibration for one device.
typedef struct QdCalibration QdCalibration;

// Device parameters.
typedef struct QdDevice QdDevice;

// Result of one demon scenario.
typedef struct QdResult QdResult;

// Scalar outcome of a scenario. Energies are in units of hf_S, entropies in nats.
typedef struct QdSummary {
  double nbar;
  double work;
  double heat;
  double delta_u;
  double energy_residual;
  double final_pe;
  double s_s_prep;
  double s_s_work;
  double s_d_work;
  double s_s_reset;
} QdSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *qd_version(void);

// Copies the last error message of this thread into `buf` (NUL-terminated)
// and returns the full message length without the terminator. With a null
// or short buffer only the length is meaningful. Returns 0 when no error is
// recorded.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
uintptr_t qd_last_error_message(char *buf, uintptr_t len);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from a `qd_*` function returning an owned string, or be null.
void qd_string_free(char *s);

// Default device parameters.
//
// # Safety
// `out` must be valid for writes.
enum QdStatus qd_device_new_default(struct QdDevice **out);

// Parses device parameters from JSON; every key is required.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be valid for writes.
enum QdStatus qd_device_from_json(const char *json, struct QdDevice **out);

// Serializes the device to JSON; release with [`qd_string_free`].
//
// # Safety
// `device` must be a live handle; `out` must be valid for writes.
enum QdStatus qd_device_to_json(const struct QdDevice *device, char **out);

// Sets the cavity truncation (highest Fock level kept).
//
// # Safety
// `device` must be a live handle.
enum QdStatus qd_device_set_n_trunc(struct QdDevice *device, uintptr_t n_trunc);

// Switches every dissipative channel off.
//
// # Safety
// `device` must be a live handle.
enum QdStatus qd_device_disable_decoherence(struct QdDevice *device);

// # Safety
// `device` must be null or a handle not yet freed.
void qd_device_free(struct QdDevice *device);

// Calibrates the π-pulse for `device`.
//
// # Safety
// `device` must be a live handle; `out` must be valid for writes.
enum QdStatus qd_calibration_new(const struct QdDevice *device, struct QdCalibration **out);

// Calibrated π-pulse peak Rabi frequency, rad/s.
//
// # Safety
// `calibration` must be a live handle; `out` must be valid for writes.
enum QdStatus qd_calibration_pi_amplitude(const struct QdCalibration *calibration, double *out);

// # Safety
// `calibration` must be null or a handle not yet freed.
void qd_calibration_free(struct QdCalibration *calibration);

// Runs one demon scenario from equilibrium. `fixed_step` > 0 selects the
// fixed-step integrator; 0 keeps adaptive stepping.
//
// # Safety
// `device` and `calibration` must be live handles; `out` must be valid for writes.
enum QdStatus qd_run_scenario(const struct QdDevice *device,
                              const struct QdCalibration *calibration,
                              enum QdProtocol protocol,
                              enum QdPrep prep,
                              double temperature,
                              double alpha_in,
                              double fixed_step,
                              struct QdResult **out);

// # Safety
// `result` must be a live handle; `out` must be valid for writes.
enum QdStatus qd_result_summary(const struct QdResult *result, struct QdSummary *out);

// Copies one trajectory series into `buf`. `len_out` receives the series
// length; when `capacity` is smaller nothing is copied and
// `QD_STATUS_BUFFER_TOO_SMALL` is returned.
//
// # Safety
// `result` must be a live handle; `buf` valid for `capacity` doubles or
// null with `capacity` 0; `len_out` valid for writes.
enum QdStatus qd_result_series(const struct QdResult *result,
                               enum QdSeries series,
                               double *buf,
                               uintptr_t capacity,
                               uintptr_t *len_out);

// # Safety
// `result` must be null or a handle not yet freed.
void qd_result_free(struct QdResult *result);

// Probability of the preparation π-pulse realizing `t_target` from the
// equilibrium temperature `t0`.
//
// # Safety
// `out` must be valid for writes.
enum QdStatus qd_thermal_prep_probability(double t_target,
                                          double t0,
                                          double f_pi,
                                          double f_s,
                                          double *out);

// Effective temperature of a two-level system with excited population `p_e`.
//
// # Safety
// `out` must be valid for writes.
enum QdStatus qd_temperature_from_population(double p_e, double f, double *out);

// Cavity temperature from the one-photon population.
//
// # Safety
// `out` must be valid for writes.
enum QdStatus qd_demon_temperature_from_p1(double p1, double f_d, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QDEMON_H */
