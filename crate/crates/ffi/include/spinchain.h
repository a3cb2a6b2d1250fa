#ifndef SPINCHAIN_H
#define SPINCHAIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpinchainMode {
  SPINCHAIN_MODE_MARKOVIAN = 0,
  SPINCHAIN_MODE_QUASI_NON_MARKOVIAN = 1,
} SpinchainMode;

typedef enum SpinchainPreset {
  SPINCHAIN_PRESET_LO = 0,
  SPINCHAIN_PRESET_HI = 1,
} SpinchainPreset;

typedef enum SpinchainStatus {
  SPINCHAIN_STATUS_OK = 0,
  SPINCHAIN_STATUS_NULL_POINTER = 1,
  SPINCHAIN_STATUS_INVALID_ARGUMENT = 2,
  SPINCHAIN_STATUS_CONFIG = 3,
  SPINCHAIN_STATUS_NUMERICAL = 4,
  SPINCHAIN_STATUS_INTEGRITY = 5,
  SPINCHAIN_STATUS_IO = 6,
  SPINCHAIN_STATUS_OUT_OF_RANGE = 7,
  SPINCHAIN_STATUS_PANIC = 8,
} SpinchainStatus;

// Opaque scenario under construction.
typedef struct SpinchainScenario SpinchainScenario;

// Opaque result of a run.
typedef struct SpinchainTrajectory SpinchainTrajectory;

// One sampled point of a trajectory.
typedef struct SpinchainSample {
  // us
  double t;
  // |rho_13|, |rho_14|, |rho_34|
  double coherences[3];
  double purity;
  double trace_dev;
  double herm_dev;
  double min_eig;
} SpinchainSample;

// Worst monitor values over a whole run.
typedef struct SpinchainPeak {
  double trace_dev;
  double herm_dev;
  double min_eig;
} SpinchainPeak;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL after a success.
// The pointer stays valid until the next call on the same thread.
const char *spinchain_last_error(void);

// Library version as a static NUL-terminated string.
const char *spinchain_version(void);

// Creates a scenario with every setting at its default.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum SpinchainStatus spinchain_scenario_new(struct SpinchainScenario **out);

// Parses a TOML scenario.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` writable.
enum SpinchainStatus spinchain_scenario_from_toml(const char *toml, struct SpinchainScenario **out);

// # Safety
// `scenario` must come from this library and not be freed twice. NULL is ignored.
void spinchain_scenario_free(struct SpinchainScenario *scenario);

// # Safety
// `scenario` must be a live handle.
enum SpinchainStatus spinchain_scenario_set_mode(struct SpinchainScenario *scenario,
                                                 enum SpinchainMode mode);

// Bath temperature in kelvin.
//
// # Safety
// `scenario` must be a live handle.
enum SpinchainStatus spinchain_scenario_set_temperature(struct SpinchainScenario *scenario,
                                                        double kelvin);

// Dissipation rate in MHz; replaces any preset.
//
// # Safety
// `scenario` must be a live handle.
enum SpinchainStatus spinchain_scenario_set_gamma_mhz(struct SpinchainScenario *scenario,
                                                      double gamma);

// # Safety
// `scenario` must be a live handle.
enum SpinchainStatus spinchain_scenario_set_preset(struct SpinchainScenario *scenario,
                                                   enum SpinchainPreset preset);

// Rabi frequency in MHz.
//
// # Safety
// `scenario` must be a live handle.
enum SpinchainStatus spinchain_scenario_set_rabi_mhz(struct SpinchainScenario *scenario,
                                                     double rabi);

// Couplings J and J' in MHz.
//
// # Safety
// `scenario` must be a live handle.
enum SpinchainStatus spinchain_scenario_set_couplings_mhz(struct SpinchainScenario *scenario,
                                                          double j1,
                                                          double j2);

// End time in us.
//
// # Safety
// `scenario` must be a live handle.
enum SpinchainStatus spinchain_scenario_set_horizon(struct SpinchainScenario *scenario,
                                                    double horizon_us);

// Number of trailing pi pulses after the CNOT pair (may be fractional).
//
// # Safety
// `scenario` must be a live handle.
enum SpinchainStatus spinchain_scenario_set_trailing_pulses(struct SpinchainScenario *scenario,
                                                            double count);

// Integration step in us and sampling stride in steps. A zero argument keeps
// the current value.
//
// # Safety
// `scenario` must be a live handle.
enum SpinchainStatus spinchain_scenario_set_integrator(struct SpinchainScenario *scenario,
                                                       double dt_us,
                                                       size_t sample_stride);

// Resolves and integrates the scenario from |000>.
//
// # Safety
// `scenario` must be a live handle and `out` writable.
enum SpinchainStatus spinchain_scenario_run(const struct SpinchainScenario *scenario,
                                            struct SpinchainTrajectory **out);

// # Safety
// `trajectory` must come from this library and not be freed twice. NULL is ignored.
void spinchain_trajectory_free(struct SpinchainTrajectory *trajectory);

// Number of samples; 0 for NULL.
//
// # Safety
// `trajectory` must be a live handle or NULL.
size_t spinchain_trajectory_len(const struct SpinchainTrajectory *trajectory);

// Hilbert-space dimension; 0 for NULL.
//
// # Safety
// `trajectory` must be a live handle or NULL.
size_t spinchain_trajectory_dim(const struct SpinchainTrajectory *trajectory);

// # Safety
// `trajectory` must be a live handle and `out` writable.
enum SpinchainStatus spinchain_trajectory_sample(const struct SpinchainTrajectory *trajectory,
                                                 size_t index,
                                                 struct SpinchainSample *out);

// Copies the populations of sample `index` into `buf`, which must hold
// `dim` values.
//
// # Safety
// `trajectory` must be a live handle and `buf` valid for `len` writes.
enum SpinchainStatus spinchain_trajectory_populations(const struct SpinchainTrajectory *trajectory,
                                                      size_t index,
                                                      double *buf,
                                                      size_t len);

// Final density matrix, row-major, split into real and imaginary parts.
// Both buffers must hold `dim * dim` values.
//
// # Safety
// `trajectory` must be a live handle and both buffers valid for `len` writes.
enum SpinchainStatus spinchain_trajectory_final_state(const struct SpinchainTrajectory *trajectory,
                                                      double *re,
                                                      double *im,
                                                      size_t len);

// # Safety
// `trajectory` must be a live handle and `out` writable.
enum SpinchainStatus spinchain_trajectory_peak(const struct SpinchainTrajectory *trajectory,
                                               struct SpinchainPeak *out);

// Writes the trajectory in the CLI's CSV layout.
//
// # Safety
// `trajectory` must be a live handle and `path` a NUL-terminated string.
enum SpinchainStatus spinchain_trajectory_write_csv(const struct SpinchainTrajectory *trajectory,
                                                    const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPINCHAIN_H */
