/* C interface to the opmag magnetometer simulation library. */

#ifndef OPMAG_H
#define OPMAG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Call succeeded; out-parameters are valid.
#define OPMAG_OK 0

// A required pointer was NULL or a string was not valid UTF-8.
#define OPMAG_BAD_ARGUMENT 1

// The scenario was rejected (unknown preset, JSON or physics validation).
#define OPMAG_CONFIG_ERROR 2

// The solver did not converge or the resonance was not contained.
#define OPMAG_SOLVER_ERROR 3

// An I/O error surfaced from the library.
#define OPMAG_IO_ERROR 4

// The caller's buffer is too small; nothing was written.
#define OPMAG_BUFFER_TOO_SMALL 5

// Scenario handle: a validated configuration plus solver options.
typedef struct OpmagConfig OpmagConfig;

// Solved steady state: scalars and the ground-level populations.
typedef struct OpmagSteady OpmagSteady;

// Result of a resonance extraction.
typedef struct OpmagResonance {
  // Zero crossing of the dispersive response (Hz).
  double omega0_hz;
  // Half separation of the dispersive lobes, the HWHM (Hz).
  double linewidth_hz;
  // omega0 minus the Larmor reference, calibrated if the scenario asks
  // for it (Hz).
  double light_shift_hz;
  // Longitudinal electron polarization of the underlying steady state.
  double mean_sz;
} OpmagResonance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, NUL-terminated.
//
// The pointer stays valid until the next failing opmag call on the same
// thread; copy it if you need it longer. Never NULL; empty before the
// first failure.
const char *opmag_last_error(void);

// Library version as a static NUL-terminated string.
const char *opmag_version(void);

// Build a scenario from an embedded preset name (see `opmag presets`).
//
// On success writes a new handle to `*out`; free it with
// [`opmag_config_free`].
//
// # Safety
// `name` must be NULL or point to a NUL-terminated string; `out` must be a
// valid, writable pointer.
int32_t opmag_config_preset(const char *name, struct OpmagConfig **out);

// Build a scenario from a JSON document (same schema as `--config` files).
//
// On success writes a new handle to `*out`; free it with
// [`opmag_config_free`].
//
// # Safety
// `json` must be NULL or point to a NUL-terminated string; `out` must be a
// valid, writable pointer.
int32_t opmag_config_from_json(const char *json, struct OpmagConfig **out);

// Override the pump detuning (Hz) of an existing scenario.
//
// # Safety
// `config` must be a live handle from one of the constructors.
int32_t opmag_config_set_detuning(struct OpmagConfig *config, double delta_hz);

// Release a scenario handle. NULL is a no-op.
//
// # Safety
// `config` must be NULL or a handle from one of the constructors, not yet
// freed.
void opmag_config_free(struct OpmagConfig *config);

// Solve the self-consistent steady state of the scenario.
//
// On success writes a new handle to `*out`; free it with
// [`opmag_steady_free`].
//
// # Safety
// `config` must be a live scenario handle; `out` must be a valid, writable
// pointer.
int32_t opmag_steady_solve(const struct OpmagConfig *config, struct OpmagSteady **out);

// Longitudinal electron polarization ⟨S_z⟩; NaN on a NULL handle.
//
// # Safety
// `steady` must be NULL or a live handle from [`opmag_steady_solve`].
double opmag_steady_mean_sz(const struct OpmagSteady *steady);

// Damped-iteration count of the solve; 0 on a NULL handle.
//
// # Safety
// `steady` must be NULL or a live handle from [`opmag_steady_solve`].
size_t opmag_steady_iterations(const struct OpmagSteady *steady);

// Final self-consistency residual; NaN on a NULL handle.
//
// # Safety
// `steady` must be NULL or a live handle from [`opmag_steady_solve`].
double opmag_steady_residual(const struct OpmagSteady *steady);

// Number of ground-level populations (4I+2); 0 on a NULL handle.
//
// # Safety
// `steady` must be NULL or a live handle from [`opmag_steady_solve`].
size_t opmag_steady_population_count(const struct OpmagSteady *steady);

// Copy the ground-level populations (basis order: F = I+1/2 with M
// descending, then F = I−1/2 with M descending) into `out`.
//
// `len` is the capacity of `out` in doubles; it must be at least
// [`opmag_steady_population_count`].
//
// # Safety
// `steady` must be a live handle; `out` must point to at least `len`
// writable doubles.
int32_t opmag_steady_populations(const struct OpmagSteady *steady, double *out, size_t len);

// Release a steady-state handle. NULL is a no-op.
//
// # Safety
// `steady` must be NULL or a handle from [`opmag_steady_solve`], not yet
// freed.
void opmag_steady_free(struct OpmagSteady *steady);

// Solve the steady state and extract the magnetic resonance at the
// scenario's pump detuning, applying the scenario's calibration mode.
//
// # Safety
// `config` must be a live scenario handle; `out` must be a valid, writable
// pointer.
int32_t opmag_resonance(const struct OpmagConfig *config, struct OpmagResonance *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPMAG_H */
