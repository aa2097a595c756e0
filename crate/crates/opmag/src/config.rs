//! Scenario files: a versioned JSON schema describing one experiment, the
//! detuning sweep to run over it, and what to emit.
//!
//! All frequencies in scenario files are plain Hz and fields are Gauss; the
//! angular-frequency convention stays inside the solvers. Deserialized
//! scenarios pass through full validation before anything runs, so a config
//! accepted here is a config the solvers will take.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::{AtomSpec, HalfInt};
use crate::error::{io_err, Error, Result};
use crate::params::ExperimentParams;
use crate::steady::SteadyOptions;

/// Current scenario schema. Bump on breaking layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Names of the scenarios that ship embedded.
pub const PRESET_NAMES: [&str; 3] = ["cs-100torr", "cs-700torr", "fig5"];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    /// Nuclear spin as a decimal (0.5, 1.0, 1.5, …).
    pub nuclear_spin: f64,
    /// Ground-state hyperfine splitting, Hz.
    pub hyperfine_splitting_ground_hz: f64,
    /// Excited-state hyperfine splitting, Hz.
    pub hyperfine_splitting_excited_hz: f64,
    /// Electron gyromagnetic ratio, Hz per Gauss.
    pub gyromagnetic_ratio_hz_per_gauss: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    /// Optical Rabi frequency Ω′ of the σ⁺ pump, Hz.
    pub pump_rabi_hz: f64,
    /// Pump detuning Δ from the lower-ground → upper-excited line, Hz.
    pub pump_detuning_hz: f64,
    /// +1 pumps along B_z, −1 against it.
    pub pump_sign: i8,
    /// Spin-exchange collision rate, Hz.
    pub spin_exchange_hz: f64,
    /// Spin-destruction collision rate, Hz.
    pub spin_destruction_hz: f64,
    /// Excited-state spontaneous decay rate, Hz.
    pub spontaneous_decay_hz: f64,
    /// Pressure broadening Γ of the optical line (buffer-gas quenching
    /// empties the excited state at 2Γ), Hz.
    pub pressure_broadening_hz: f64,
    /// Static longitudinal field, Gauss.
    pub b_z_gauss: f64,
    /// Transverse RF amplitude, Gauss.
    pub b_x_gauss: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    /// Evenly spaced detunings.
    Linear,
    /// Denser near zero detuning, symmetric log-like tails (an asinh grid);
    /// useful when features crowd the line centers.
    LogSymmetric,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub delta_min_hz: f64,
    pub delta_max_hz: f64,
    pub npoints: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::Linear
}

impl SweepConfig {
    /// The detuning grid this sweep covers, ordered ascending, endpoints
    /// exactly as configured.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.npoints;
        let (lo, hi) = (self.delta_min_hz, self.delta_max_hz);
        let mut grid: Vec<f64> = match self.spacing {
            Spacing::Linear => (0..n)
                .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
                .collect(),
            Spacing::LogSymmetric => {
                // Uniform in asinh(Δ/s): logarithmic tails, linear core.
                let scale = lo.abs().max(hi.abs()) / 1.0e3;
                let (ta, tb) = ((lo / scale).asinh(), (hi / scale).asinh());
                (0..n)
                    .map(|k| scale * (ta + (tb - ta) * k as f64 / (n - 1) as f64).sinh())
                    .collect()
            }
        };
        grid[0] = lo;
        grid[n - 1] = hi;
        grid
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsConfig {
    /// Plot the steady polarization panel.
    pub sz: bool,
    /// Emit per-point ground populations (populations.csv).
    pub populations: bool,
    /// Plot the light-shift curve.
    pub light_shift: bool,
    /// Plot the linewidth curve.
    pub linewidth: bool,
    /// Emit the frequency scan behind each point (response_<delta>.csv).
    pub response_curve: bool,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig {
            sz: true,
            populations: false,
            light_shift: true,
            linewidth: true,
            response_curve: false,
        }
    }
}

impl OutputsConfig {
    /// Nothing selected at all — plot generation is skipped in that case.
    pub fn is_empty(&self) -> bool {
        !(self.sz || self.populations || self.light_shift || self.linewidth || self.response_curve)
    }
}

/// Default far-detuned calibration reference: 10³ GHz.
pub const DEFAULT_CALIBRATION_REFERENCE_HZ: f64 = 1.0e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Calibration {
    /// Report light shifts directly against the Larmor reference.
    None,
    /// Subtract the light shift measured at a far-detuned reference point,
    /// so the curve vanishes at large |Δ| like the experimental one.
    FarDetunedReference {
        #[serde(default = "default_calibration_reference")]
        delta_ref_hz: f64,
    },
}

fn default_calibration_reference() -> f64 {
    DEFAULT_CALIBRATION_REFERENCE_HZ
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration::None
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Mean-field damping factor α ∈ (0, 1].
    pub damping: f64,
    /// Fixed-point tolerance on ⟨S_z⟩.
    pub tolerance: f64,
    /// Damped-iteration budget before bisection fallback.
    pub max_iterations: usize,
    /// Acceptable relative residual of the returned state.
    pub residual_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let opts = SteadyOptions::default();
        SolverConfig {
            damping: opts.damping,
            tolerance: opts.tol,
            max_iterations: opts.max_damped_iterations,
            residual_tolerance: opts.residual_tol,
        }
    }
}

impl SolverConfig {
    pub fn steady_options(&self) -> SteadyOptions {
        SteadyOptions {
            damping: self.damping,
            tol: self.tolerance,
            max_damped_iterations: self.max_iterations,
            residual_tol: self.residual_tolerance,
        }
    }
}

/// A complete scenario: one atom and pump configuration plus the sweep,
/// output, calibration, and solver settings around it.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub atom: AtomConfig,
    pub params: ParamsConfig,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub calibration: Calibration,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl ScenarioConfig {
    /// Parse and validate a scenario from JSON text.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("scenario JSON does not parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Load a scenario file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json_str(&text)
    }

    /// Pretty JSON for display and preset export.
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    /// Check every invariant the solvers rely on.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (this build reads version {})",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        self.to_params()?.validate()?;
        let s = &self.sweep;
        if !(s.delta_min_hz.is_finite() && s.delta_max_hz.is_finite()) {
            return Err(Error::Config("sweep endpoints must be finite".into()));
        }
        if s.delta_min_hz >= s.delta_max_hz {
            return Err(Error::Config(format!(
                "sweep range is empty: delta_min_hz = {} must be below delta_max_hz = {}",
                s.delta_min_hz, s.delta_max_hz
            )));
        }
        if s.npoints < 2 {
            return Err(Error::Config(format!(
                "sweep needs at least 2 points, got {}",
                s.npoints
            )));
        }
        let solver = &self.solver;
        if !(solver.damping > 0.0 && solver.damping <= 1.0) {
            return Err(Error::Config(format!(
                "solver damping must lie in (0, 1], got {}",
                solver.damping
            )));
        }
        if !(solver.tolerance > 0.0 && solver.residual_tolerance > 0.0) {
            return Err(Error::Config(
                "solver tolerances must be positive".into(),
            ));
        }
        if let Calibration::FarDetunedReference { delta_ref_hz } = self.calibration {
            if !delta_ref_hz.is_finite() {
                return Err(Error::Config(
                    "calibration reference detuning must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    /// The experiment parameters this scenario describes.
    pub fn to_params(&self) -> Result<ExperimentParams> {
        let a = &self.atom;
        let atom = AtomSpec::new(
            HalfInt::try_from_f64(a.nuclear_spin)?,
            a.hyperfine_splitting_ground_hz,
            a.hyperfine_splitting_excited_hz,
            a.gyromagnetic_ratio_hz_per_gauss,
        )?;
        let p = &self.params;
        let params = ExperimentParams {
            atom,
            pump_rabi_hz: p.pump_rabi_hz,
            pump_detuning_hz: p.pump_detuning_hz,
            pump_sign: p.pump_sign,
            spin_exchange_hz: p.spin_exchange_hz,
            spin_destruction_hz: p.spin_destruction_hz,
            spontaneous_decay_hz: p.spontaneous_decay_hz,
            quench_hz: p.pressure_broadening_hz,
            b_z_gauss: p.b_z_gauss,
            b_x_gauss: p.b_x_gauss,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn steady_options(&self) -> SteadyOptions {
        self.solver.steady_options()
    }

    /// One of the embedded scenarios by name.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "cs-100torr" => Ok(cesium_preset(0.6e9, 2.2e2, 4.1e6)),
            "cs-700torr" => Ok(cesium_preset(4.2e9, 3.4e2, 4.1e6)),
            "fig5" => Ok(cesium_preset(0.2e9, 2.2e2, 0.5e6)),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

/// The cesium scenarios differ only in pressure broadening, spin
/// destruction, and pump strength; everything else is the shared cell.
/// `pump_hz` is the projected coupling Ω = √(2/3)·Ω′.
fn cesium_preset(pressure_broadening_hz: f64, spin_destruction_hz: f64, pump_hz: f64) -> ScenarioConfig {
    let atom = AtomSpec::cesium();
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        atom: AtomConfig {
            nuclear_spin: atom.nuclear_spin().as_f64(),
            hyperfine_splitting_ground_hz: atom.delta_s_hz(),
            hyperfine_splitting_excited_hz: atom.delta_p_hz(),
            gyromagnetic_ratio_hz_per_gauss: atom.gyromagnetic_ratio_e_hz_per_g(),
        },
        params: ParamsConfig {
            pump_rabi_hz: pump_hz / crate::params::RABI_PROJECTION,
            pump_detuning_hz: 0.0,
            pump_sign: -1,
            spin_exchange_hz: 1.31e3,
            spin_destruction_hz,
            spontaneous_decay_hz: 4.56e6,
            pressure_broadening_hz,
            b_z_gauss: 0.1,
            b_x_gauss: 3.0e-5,
        },
        sweep: SweepConfig {
            delta_min_hz: -5.0e9,
            delta_max_hz: 15.0e9,
            npoints: 60,
            spacing: Spacing::Linear,
        },
        outputs: OutputsConfig::default(),
        calibration: Calibration::None,
        solver: SolverConfig::default(),
    }
}
