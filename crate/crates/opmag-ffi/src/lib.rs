//! C ABI for the opmag simulation library.
//!
//! The surface is deliberately small: build a scenario (from an embedded
//! preset or a JSON document), optionally override the pump detuning, then
//! either solve the steady state and read scalars/populations off the
//! handle, or run the full resonance extraction in one call. Handles are
//! opaque; every constructor has a matching `_free`, and NULL is always
//! accepted there.
//!
//! All fallible entry points return an `int32_t` status. `OPMAG_OK` (0)
//! means the out-parameters were written; anything else leaves them
//! untouched and stores a message retrievable with [`opmag_last_error`].
//! The nonzero codes match the CLI's exit codes (2 config, 3 solver, 4 I/O)
//! plus FFI-only codes for NULL/invalid arguments (1) and undersized
//! buffers (5).
//!
//! Frequencies are Hz, fields Gauss, matching the JSON schema.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use opmag::config::{Calibration, ScenarioConfig};
use opmag::effective::EffectiveSystem;
use opmag::response::extract_resonance;
use opmag::sweep::resonance_at;
use opmag::Error;

/// Call succeeded; out-parameters are valid.
pub const OPMAG_OK: i32 = 0;
/// A required pointer was NULL or a string was not valid UTF-8.
pub const OPMAG_BAD_ARGUMENT: i32 = 1;
/// The scenario was rejected (unknown preset, JSON or physics validation).
pub const OPMAG_CONFIG_ERROR: i32 = 2;
/// The solver did not converge or the resonance was not contained.
pub const OPMAG_SOLVER_ERROR: i32 = 3;
/// An I/O error surfaced from the library.
pub const OPMAG_IO_ERROR: i32 = 4;
/// The caller's buffer is too small; nothing was written.
pub const OPMAG_BUFFER_TOO_SMALL: i32 = 5;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn stash_error(message: &str) {
    // NUL bytes cannot appear in our error strings, but don't panic if one
    // ever does: truncate at it instead.
    let cleaned = message.split('\0').next().unwrap_or_default();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> i32 {
    stash_error(&err.to_string());
    i32::from(err.exit_code())
}

fn bad_argument(message: &str) -> i32 {
    stash_error(message);
    OPMAG_BAD_ARGUMENT
}

/// Scenario handle: a validated configuration plus solver options.
pub struct OpmagConfig {
    scenario: ScenarioConfig,
}

/// Solved steady state: scalars and the ground-level populations.
pub struct OpmagSteady {
    mean_sz: f64,
    iterations: usize,
    residual: f64,
    populations: Vec<f64>,
}

/// Result of a resonance extraction.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct OpmagResonance {
    /// Zero crossing of the dispersive response (Hz).
    pub omega0_hz: f64,
    /// Half separation of the dispersive lobes, the HWHM (Hz).
    pub linewidth_hz: f64,
    /// omega0 minus the Larmor reference, calibrated if the scenario asks
    /// for it (Hz).
    pub light_shift_hz: f64,
    /// Longitudinal electron polarization of the underlying steady state.
    pub mean_sz: f64,
}

/// Message for the most recent failure on this thread, NUL-terminated.
///
/// The pointer stays valid until the next failing opmag call on the same
/// thread; copy it if you need it longer. Never NULL; empty before the
/// first failure.
#[no_mangle]
pub extern "C" fn opmag_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn opmag_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn utf8_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, i32> {
    if ptr.is_null() {
        return Err(bad_argument(&format!("{name} is NULL")));
    }
    // SAFETY: checked non-NULL; caller promised a NUL-terminated string.
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| bad_argument(&format!("{name} is not valid UTF-8")))
}

fn emit_config(scenario: ScenarioConfig, out: *mut *mut OpmagConfig) -> i32 {
    let handle = Box::new(OpmagConfig { scenario });
    // SAFETY: `out` was checked non-NULL by the caller.
    unsafe { ptr::write(out, Box::into_raw(handle)) };
    OPMAG_OK
}

/// Build a scenario from an embedded preset name (see `opmag presets`).
///
/// On success writes a new handle to `*out`; free it with
/// [`opmag_config_free`].
///
/// # Safety
/// `name` must be NULL or point to a NUL-terminated string; `out` must be a
/// valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn opmag_config_preset(
    name: *const c_char,
    out: *mut *mut OpmagConfig,
) -> i32 {
    if out.is_null() {
        return bad_argument("out is NULL");
    }
    let name = match unsafe { utf8_arg(name, "name") } {
        Ok(s) => s,
        Err(code) => return code,
    };
    match ScenarioConfig::preset(name) {
        Ok(scenario) => emit_config(scenario, out),
        Err(e) => status_of(&e),
    }
}

/// Build a scenario from a JSON document (same schema as `--config` files).
///
/// On success writes a new handle to `*out`; free it with
/// [`opmag_config_free`].
///
/// # Safety
/// `json` must be NULL or point to a NUL-terminated string; `out` must be a
/// valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn opmag_config_from_json(
    json: *const c_char,
    out: *mut *mut OpmagConfig,
) -> i32 {
    if out.is_null() {
        return bad_argument("out is NULL");
    }
    let json = match unsafe { utf8_arg(json, "json") } {
        Ok(s) => s,
        Err(code) => return code,
    };
    match ScenarioConfig::from_json_str(json) {
        Ok(scenario) => emit_config(scenario, out),
        Err(e) => status_of(&e),
    }
}

/// Override the pump detuning (Hz) of an existing scenario.
///
/// # Safety
/// `config` must be a live handle from one of the constructors.
#[no_mangle]
pub unsafe extern "C" fn opmag_config_set_detuning(
    config: *mut OpmagConfig,
    delta_hz: f64,
) -> i32 {
    let Some(config) = (unsafe { config.as_mut() }) else {
        return bad_argument("config is NULL");
    };
    if !delta_hz.is_finite() {
        return bad_argument("delta_hz must be finite");
    }
    config.scenario.params.pump_detuning_hz = delta_hz;
    OPMAG_OK
}

/// Release a scenario handle. NULL is a no-op.
///
/// # Safety
/// `config` must be NULL or a handle from one of the constructors, not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn opmag_config_free(config: *mut OpmagConfig) {
    if !config.is_null() {
        // SAFETY: caller guarantees this is an unfreed constructor result.
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Solve the self-consistent steady state of the scenario.
///
/// On success writes a new handle to `*out`; free it with
/// [`opmag_steady_free`].
///
/// # Safety
/// `config` must be a live scenario handle; `out` must be a valid, writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn opmag_steady_solve(
    config: *const OpmagConfig,
    out: *mut *mut OpmagSteady,
) -> i32 {
    if out.is_null() {
        return bad_argument("out is NULL");
    }
    let Some(config) = (unsafe { config.as_ref() }) else {
        return bad_argument("config is NULL");
    };
    let solved = config.scenario.to_params().and_then(|params| {
        let system = EffectiveSystem::build(params)?;
        system.steady_state(&config.scenario.steady_options())
    });
    match solved {
        Ok(steady) => {
            let handle = Box::new(OpmagSteady {
                mean_sz: steady.mean_sz,
                iterations: steady.iterations,
                residual: steady.residual,
                populations: steady.populations(),
            });
            unsafe { ptr::write(out, Box::into_raw(handle)) };
            OPMAG_OK
        }
        Err(e) => status_of(&e),
    }
}

/// Longitudinal electron polarization ⟨S_z⟩; NaN on a NULL handle.
///
/// # Safety
/// `steady` must be NULL or a live handle from [`opmag_steady_solve`].
#[no_mangle]
pub unsafe extern "C" fn opmag_steady_mean_sz(steady: *const OpmagSteady) -> f64 {
    unsafe { steady.as_ref() }.map_or(f64::NAN, |s| s.mean_sz)
}

/// Damped-iteration count of the solve; 0 on a NULL handle.
///
/// # Safety
/// `steady` must be NULL or a live handle from [`opmag_steady_solve`].
#[no_mangle]
pub unsafe extern "C" fn opmag_steady_iterations(steady: *const OpmagSteady) -> usize {
    unsafe { steady.as_ref() }.map_or(0, |s| s.iterations)
}

/// Final self-consistency residual; NaN on a NULL handle.
///
/// # Safety
/// `steady` must be NULL or a live handle from [`opmag_steady_solve`].
#[no_mangle]
pub unsafe extern "C" fn opmag_steady_residual(steady: *const OpmagSteady) -> f64 {
    unsafe { steady.as_ref() }.map_or(f64::NAN, |s| s.residual)
}

/// Number of ground-level populations (4I+2); 0 on a NULL handle.
///
/// # Safety
/// `steady` must be NULL or a live handle from [`opmag_steady_solve`].
#[no_mangle]
pub unsafe extern "C" fn opmag_steady_population_count(steady: *const OpmagSteady) -> usize {
    unsafe { steady.as_ref() }.map_or(0, |s| s.populations.len())
}

/// Copy the ground-level populations (basis order: F = I+1/2 with M
/// descending, then F = I−1/2 with M descending) into `out`.
///
/// `len` is the capacity of `out` in doubles; it must be at least
/// [`opmag_steady_population_count`].
///
/// # Safety
/// `steady` must be a live handle; `out` must point to at least `len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn opmag_steady_populations(
    steady: *const OpmagSteady,
    out: *mut f64,
    len: usize,
) -> i32 {
    let Some(steady) = (unsafe { steady.as_ref() }) else {
        return bad_argument("steady is NULL");
    };
    if out.is_null() {
        return bad_argument("out is NULL");
    }
    if len < steady.populations.len() {
        stash_error(&format!(
            "need room for {} populations, got {len}",
            steady.populations.len()
        ));
        return OPMAG_BUFFER_TOO_SMALL;
    }
    // SAFETY: checked non-NULL and capacity; caller guarantees writability.
    unsafe { ptr::copy_nonoverlapping(steady.populations.as_ptr(), out, steady.populations.len()) };
    OPMAG_OK
}

/// Release a steady-state handle. NULL is a no-op.
///
/// # Safety
/// `steady` must be NULL or a handle from [`opmag_steady_solve`], not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn opmag_steady_free(steady: *mut OpmagSteady) {
    if !steady.is_null() {
        // SAFETY: caller guarantees this is an unfreed solve result.
        drop(unsafe { Box::from_raw(steady) });
    }
}

/// Solve the steady state and extract the magnetic resonance at the
/// scenario's pump detuning, applying the scenario's calibration mode.
///
/// # Safety
/// `config` must be a live scenario handle; `out` must be a valid, writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn opmag_resonance(
    config: *const OpmagConfig,
    out: *mut OpmagResonance,
) -> i32 {
    if out.is_null() {
        return bad_argument("out is NULL");
    }
    let Some(config) = (unsafe { config.as_ref() }) else {
        return bad_argument("config is NULL");
    };
    let opts = config.scenario.steady_options();
    let extracted = config.scenario.to_params().and_then(|params| {
        let system = EffectiveSystem::build(params)?;
        let steady = system.steady_state(&opts)?;
        let mut summary = extract_resonance(&system, &steady)?;
        if let Calibration::FarDetunedReference { delta_ref_hz } = config.scenario.calibration {
            let reference = resonance_at(&params, delta_ref_hz, &opts)?;
            summary.light_shift_hz -= reference.light_shift_hz;
        }
        Ok((summary, steady.mean_sz))
    });
    match extracted {
        Ok((summary, mean_sz)) => {
            unsafe {
                ptr::write(
                    out,
                    OpmagResonance {
                        omega0_hz: summary.omega0_hz,
                        linewidth_hz: summary.linewidth_hz,
                        light_shift_hz: summary.light_shift_hz,
                        mean_sz,
                    },
                )
            };
            OPMAG_OK
        }
        Err(e) => status_of(&e),
    }
}
