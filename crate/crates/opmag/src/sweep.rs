//! Detuning sweeps, the full-vs-effective validation run, and the text
//! artifacts both produce.
//!
//! A sweep solves one steady state plus one magnetic-resonance line per
//! detuning. Points are independent, so they parallelize trivially; results
//! are collected back in grid order and every float is written with 17
//! significant digits, which makes repeated runs byte-identical whether or
//! not they ran on the same number of threads.
//!
//! A point that fails keeps its row: the `status` column records which stage
//! gave up (solver, window, …) and the numeric fields it never produced stay
//! NaN. Only failures that poison the whole run — a bad scenario, or a
//! calibration reference that will not converge — abort the sweep itself.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{AtomSpec, HalfInt, HyperfineBasis};
use crate::config::{Calibration, OutputsConfig, ScenarioConfig};
use crate::effective::EffectiveSystem;
use crate::error::{io_err, Error, Result};
use crate::full::FullSystem;
use crate::params::{ExperimentParams, RABI_PROJECTION};
use crate::response::{extract_resonance, ResonanceSummary, ScanPoint};
use crate::steady::SteadyOptions;

/// One row of a sweep.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub delta_hz: f64,
    /// Steady ⟨S_z⟩.
    pub sz: f64,
    /// Resonance centre minus the Larmor reference (calibrated if the
    /// scenario asked for it).
    pub light_shift_hz: f64,
    /// HWHM of the magnetic-resonance line.
    pub linewidth_hz: f64,
    /// Kernel solves spent on the steady state.
    pub iterations: usize,
    /// Relative residual of the steady state.
    pub residual: f64,
    /// `"ok"`, or the tag of the error that stopped this point.
    pub status: &'static str,
    /// Ground-level populations, in basis order; empty if the steady state
    /// was never reached.
    pub populations: Vec<f64>,
    /// Susceptibility scan behind the resonance fit; empty on failure.
    pub scan: Vec<ScanPoint>,
}

impl SweepPoint {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn failed(delta_hz: f64, status: &'static str) -> Self {
        SweepPoint {
            delta_hz,
            sz: f64::NAN,
            light_shift_hz: f64::NAN,
            linewidth_hz: f64::NAN,
            iterations: 0,
            residual: f64::NAN,
            status,
            populations: Vec::new(),
            scan: Vec::new(),
        }
    }
}

/// Solve one sweep point: the steady state at this detuning, then the
/// resonance line on top of it. Failures land in `status`.
pub fn evaluate_detuning(
    base: &ExperimentParams,
    delta_hz: f64,
    opts: &SteadyOptions,
) -> SweepPoint {
    let mut params = *base;
    params.pump_detuning_hz = delta_hz;
    let system = match EffectiveSystem::build(params) {
        Ok(s) => s,
        Err(e) => return SweepPoint::failed(delta_hz, e.status_tag()),
    };
    let steady = match system.steady_state(opts) {
        Ok(s) => s,
        Err(e) => return SweepPoint::failed(delta_hz, e.status_tag()),
    };
    let n_g = params.atom.ground_dim();
    let mut point = SweepPoint {
        delta_hz,
        sz: steady.mean_sz,
        light_shift_hz: f64::NAN,
        linewidth_hz: f64::NAN,
        iterations: steady.iterations,
        residual: steady.residual,
        status: "ok",
        populations: (0..n_g).map(|i| steady.rho[(i, i)].re).collect(),
        scan: Vec::new(),
    };
    match extract_resonance(&system, &steady) {
        Ok(summary) => {
            point.light_shift_hz = summary.light_shift_hz;
            point.linewidth_hz = summary.linewidth_hz;
            point.scan = summary.scan;
        }
        Err(e) => point.status = e.status_tag(),
    }
    point
}

/// Steady state plus resonance at a single detuning, with errors propagated
/// instead of recorded — used for calibration references and one-shot runs.
pub fn resonance_at(
    base: &ExperimentParams,
    delta_hz: f64,
    opts: &SteadyOptions,
) -> Result<ResonanceSummary> {
    let mut params = *base;
    params.pump_detuning_hz = delta_hz;
    let system = EffectiveSystem::build(params)?;
    let steady = system.steady_state(opts)?;
    extract_resonance(&system, &steady)
}

/// Run the configured sweep, optionally on a dedicated pool of `threads`
/// workers. Rows come back in grid order regardless of scheduling.
pub fn run_sweep(config: &ScenarioConfig, threads: Option<usize>) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    let params = config.to_params()?;
    let opts = config.steady_options();

    // A calibration reference that cannot be measured poisons every row, so
    // settle it first and let its error abort the run.
    let reference_shift = match config.calibration {
        Calibration::None => None,
        Calibration::FarDetunedReference { delta_ref_hz } => {
            Some(resonance_at(&params, delta_ref_hz, &opts)?.light_shift_hz)
        }
    };

    let grid = config.sweep.grid();
    let evaluate_all =
        || -> Vec<SweepPoint> {
            grid.par_iter()
                .map(|&delta| evaluate_detuning(&params, delta, &opts))
                .collect()
        };
    let mut points = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot build a {n}-thread pool: {e}")))?
            .install(evaluate_all),
        None => evaluate_all(),
    };

    if let Some(shift) = reference_shift {
        for point in points.iter_mut().filter(|p| p.is_ok()) {
            point.light_shift_hz -= shift;
        }
    }
    Ok(points)
}

// ---------------------------------------------------------------------------
// Writers. All of them use `\n` endings and `{:.16e}` floats so identical
// runs produce identical bytes.
// ---------------------------------------------------------------------------

pub fn write_sweep_csv(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let mut text = String::from("delta_hz,sz,light_shift_hz,linewidth_hz,iterations,residual,status\n");
    for p in points {
        text.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{}\n",
            p.delta_hz, p.sz, p.light_shift_hz, p.linewidth_hz, p.iterations, p.residual, p.status
        ));
    }
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_populations_csv(
    path: &Path,
    basis: &HyperfineBasis,
    points: &[SweepPoint],
) -> Result<()> {
    let ground = basis.ground_levels();
    let mut text = String::from("delta_hz");
    for level in ground {
        text.push_str(&format!(",p_f{}_m{}", level.f, level.m));
    }
    text.push('\n');
    for p in points {
        text.push_str(&format!("{:.16e}", p.delta_hz));
        if p.populations.len() == ground.len() {
            for v in &p.populations {
                text.push_str(&format!(",{v:.16e}"));
            }
        } else {
            for _ in ground {
                text.push_str(",NaN");
            }
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_response_csv(path: &Path, scan: &[ScanPoint]) -> Result<()> {
    let mut text = String::from("omega_hz,re_sx,im_sx\n");
    for pt in scan {
        text.push_str(&format!(
            "{:.16e},{:.16e},{:.16e}\n",
            pt.omega_hz, pt.chi.re, pt.chi.im
        ));
    }
    fs::write(path, text).map_err(io_err(path))
}

/// File name for the scan behind one sweep point, keyed by its detuning.
pub fn response_file_name(delta_hz: f64) -> String {
    format!("response_{delta_hz:+.6e}.csv")
}

/// Emit a gnuplot script for the selected panels. Callers skip this when the
/// output selection is empty.
pub fn write_plot_script(path: &Path, outputs: &OutputsConfig, sweep_csv: &str) -> Result<()> {
    let want_line = outputs.light_shift || outputs.linewidth;
    let two_panels = outputs.sz && want_line;
    let mut s = String::from("# Render with: gnuplot -persist plot.gp\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set grid\n");
    s.push_str("set xlabel 'pump detuning (Hz)'\n");
    if two_panels {
        s.push_str("set multiplot layout 2,1\n");
    }
    if outputs.sz {
        s.push_str("set ylabel 'steady <S_z>'\n");
        s.push_str(&format!(
            "plot '{sweep_csv}' using 1:2 with linespoints pt 7 ps 0.5 title 'polarization'\n"
        ));
    }
    match (outputs.light_shift, outputs.linewidth) {
        (true, true) => {
            s.push_str("set ylabel 'light shift (Hz)'\n");
            s.push_str("set y2label 'linewidth (Hz)'\n");
            s.push_str("set ytics nomirror\nset y2tics\n");
            s.push_str(&format!(
                "plot '{sweep_csv}' using 1:3 with linespoints pt 7 ps 0.5 axes x1y1 title 'light shift', \\\n     '{sweep_csv}' using 1:4 with linespoints pt 5 ps 0.5 axes x1y2 title 'linewidth'\n"
            ));
        }
        (true, false) => {
            s.push_str("set ylabel 'light shift (Hz)'\n");
            s.push_str(&format!(
                "plot '{sweep_csv}' using 1:3 with linespoints pt 7 ps 0.5 title 'light shift'\n"
            ));
        }
        (false, true) => {
            s.push_str("set ylabel 'linewidth (Hz)'\n");
            s.push_str(&format!(
                "plot '{sweep_csv}' using 1:4 with linespoints pt 7 ps 0.5 title 'linewidth'\n"
            ));
        }
        (false, false) => {}
    }
    if two_panels {
        s.push_str("unset multiplot\n");
    }
    fs::write(path, s).map_err(io_err(path))
}

// ---------------------------------------------------------------------------
// Validation: unreduced equation vs adiabatically eliminated one.
// ---------------------------------------------------------------------------

/// Weak-driving rungs (Ω/Γ) the validation run measures by default.
pub const VALIDATION_RATIOS: [f64; 3] = [1.0e-2, 3.0e-3, 1.0e-3];

/// The oracle scenario: a spin-3/2 atom small enough that the unreduced
/// equation is cheap. Spontaneous decay is set to zero — it is immaterial
/// next to the quenching rate and the eliminated model has no channel for
/// it, so leaving it out isolates the error actually under test.
///
/// Spin destruction is deliberately fast (0.5 MHz): the elimination error
/// scales as Ω² only while pumping stays below saturation. At cell-realistic
/// collision rates even per-mille driving pins the vapor to the dark
/// stretched state, and there the disagreement is bottlenecked by spin
/// relaxation — flat in Ω — which would leave nothing for the scaling
/// measurement to see.
pub fn validation_params(omega_ratio: f64) -> ExperimentParams {
    let atom = AtomSpec::new(HalfInt::from_twice(3), 2.0e9, 0.3e9, 2.802_495_3e6)
        .expect("the validation atom is well formed");
    let quench = 0.6e9;
    ExperimentParams {
        atom,
        pump_rabi_hz: omega_ratio * quench / RABI_PROJECTION,
        pump_detuning_hz: 0.0,
        pump_sign: -1,
        spin_exchange_hz: 1.31e3,
        spin_destruction_hz: 5.0e5,
        spontaneous_decay_hz: 0.0,
        quench_hz: quench,
        b_z_gauss: 0.05,
        b_x_gauss: 3.0e-9,
    }
}

/// Both models solved at one pump strength.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationRung {
    /// Ω/Γ for this rung.
    pub omega_ratio: f64,
    /// Projected pump coupling Ω, Hz.
    pub omega_hz: f64,
    pub sz_full: f64,
    pub sz_effective: f64,
    /// |⟨S_z⟩_full − ⟨S_z⟩_eff|.
    pub abs_error: f64,
    /// Worst ground-population disagreement.
    pub max_population_error: f64,
    /// Total excited-manifold population of the unreduced steady state.
    pub excited_population: f64,
    pub full_iterations: usize,
    pub full_residual: f64,
    pub effective_iterations: usize,
    pub effective_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub schema_version: u32,
    /// Log-log slope of |⟨S_z⟩| disagreement against Ω; adiabatic
    /// elimination drops terms of relative order (Ω/Γ)², so this should
    /// sit near 2.
    pub error_slope: f64,
    /// Log-log slope of the excited population against Ω; also 2.
    pub excited_population_slope: f64,
    /// Disagreement on the weakest rung.
    pub smallest_rung_error: f64,
    /// Disagreement with the pump off entirely (both models must relax to
    /// the same unpolarized state).
    pub zero_drive_error: f64,
    pub elapsed_seconds: f64,
    pub rungs: Vec<ValidationRung>,
}

fn validation_rung(omega_ratio: f64, opts: &SteadyOptions) -> Result<ValidationRung> {
    let params = validation_params(omega_ratio);
    let full_steady = FullSystem::build(params)?.steady_state(opts)?;
    let eff_steady = EffectiveSystem::build(params)?.steady_state(opts)?;
    let n_g = params.atom.ground_dim();
    let max_population_error = (0..n_g)
        .map(|i| (full_steady.rho[(i, i)].re - eff_steady.rho[(i, i)].re).abs())
        .fold(0.0f64, f64::max);
    let excited_population = (n_g..2 * n_g).map(|i| full_steady.rho[(i, i)].re).sum();
    Ok(ValidationRung {
        omega_ratio,
        omega_hz: params.pump_coupling_hz(),
        sz_full: full_steady.mean_sz,
        sz_effective: eff_steady.mean_sz,
        abs_error: (full_steady.mean_sz - eff_steady.mean_sz).abs(),
        max_population_error,
        excited_population,
        full_iterations: full_steady.iterations,
        full_residual: full_steady.residual,
        effective_iterations: eff_steady.iterations,
        effective_residual: eff_steady.residual,
    })
}

/// Solve every rung (plus a pump-off one) with both models and fit the
/// scaling of their disagreement.
pub fn run_validation(opts: &SteadyOptions, ratios: &[f64]) -> Result<ValidationReport> {
    let start = Instant::now();
    let mut rungs = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        rungs.push(validation_rung(ratio, opts)?);
    }
    let zero = validation_rung(0.0, opts)?;

    let error_points: Vec<(f64, f64)> = rungs
        .iter()
        .filter(|r| r.abs_error > 0.0 && r.omega_hz > 0.0)
        .map(|r| (r.omega_hz.ln(), r.abs_error.ln()))
        .collect();
    let excited_points: Vec<(f64, f64)> = rungs
        .iter()
        .filter(|r| r.excited_population > 0.0 && r.omega_hz > 0.0)
        .map(|r| (r.omega_hz.ln(), r.excited_population.ln()))
        .collect();
    let smallest_rung_error = rungs
        .iter()
        .filter(|r| r.omega_hz > 0.0)
        .min_by(|a, b| a.omega_hz.total_cmp(&b.omega_hz))
        .map_or(f64::NAN, |r| r.abs_error);

    Ok(ValidationReport {
        schema_version: crate::config::SCHEMA_VERSION,
        error_slope: least_squares_slope(&error_points),
        excited_population_slope: least_squares_slope(&excited_points),
        smallest_rung_error,
        zero_drive_error: zero.abs_error,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        rungs,
    })
}

pub fn write_report_json(path: &Path, report: &ValidationReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = points.iter().fold((0.0, 0.0), |(num, den), (x, y)| {
        (num + (x - mx) * (y - my), den + (x - mx) * (x - mx))
    });
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ScenarioConfig, SweepConfig};

    fn tiny_scenario() -> ScenarioConfig {
        let mut config = ScenarioConfig::preset("fig5").unwrap();
        config.sweep = SweepConfig {
            delta_min_hz: -1.0e9,
            delta_max_hz: 1.0e9,
            npoints: 3,
            spacing: crate::config::Spacing::Linear,
        };
        config
    }

    #[test]
    fn sweep_rows_agree_with_single_point_runs_and_threading_is_immaterial() {
        let config = tiny_scenario();
        let serial = run_sweep(&config, Some(1)).unwrap();
        let parallel = run_sweep(&config, Some(3)).unwrap();
        assert_eq!(serial.len(), 3);
        for (s, p) in serial.iter().zip(&parallel) {
            assert_eq!(s.delta_hz, p.delta_hz);
            assert_eq!(s.sz.to_bits(), p.sz.to_bits());
            assert_eq!(s.light_shift_hz.to_bits(), p.light_shift_hz.to_bits());
            assert_eq!(s.linewidth_hz.to_bits(), p.linewidth_hz.to_bits());
            assert_eq!(s.status, "ok");
        }
        let lone = evaluate_detuning(
            &config.to_params().unwrap(),
            serial[1].delta_hz,
            &config.steady_options(),
        );
        assert_eq!(lone.sz.to_bits(), serial[1].sz.to_bits());
        assert_eq!(
            lone.light_shift_hz.to_bits(),
            serial[1].light_shift_hz.to_bits()
        );
    }

    #[test]
    fn calibration_subtracts_the_reference_shift() {
        let mut config = tiny_scenario();
        let raw = run_sweep(&config, Some(1)).unwrap();
        config.calibration = Calibration::FarDetunedReference { delta_ref_hz: 1.0e12 };
        let calibrated = run_sweep(&config, Some(1)).unwrap();
        let reference = resonance_at(
            &config.to_params().unwrap(),
            1.0e12,
            &config.steady_options(),
        )
        .unwrap();
        for (r, c) in raw.iter().zip(&calibrated) {
            let expect = r.light_shift_hz - reference.light_shift_hz;
            assert!((c.light_shift_hz - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_layouts_are_fixed() {
        let dir = tempfile::tempdir().unwrap();
        let ok = SweepPoint {
            delta_hz: 1.5e9,
            sz: -0.25,
            light_shift_hz: 12.5,
            linewidth_hz: 200.0,
            iterations: 7,
            residual: 1e-14,
            status: "ok",
            populations: vec![0.5, 0.5],
            scan: vec![ScanPoint {
                omega_hz: 3.0e4,
                chi: num_complex::Complex64::new(1.0, -2.0),
            }],
        };
        let bad = SweepPoint::failed(2.0e9, "non_convergence");
        let sweep_path = dir.path().join("sweep.csv");
        write_sweep_csv(&sweep_path, &[ok.clone(), bad]).unwrap();
        let text = fs::read_to_string(&sweep_path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "delta_hz,sz,light_shift_hz,linewidth_hz,iterations,residual,status"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("1.5000000000000000e9,-2.5000000000000000e-1,"));
        assert!(row.ends_with(",ok"));
        let failed_row = lines.next().unwrap();
        assert!(failed_row.contains("NaN"));
        assert!(failed_row.ends_with(",non_convergence"));
        assert!(text.ends_with('\n') && !text.contains('\r'));

        let resp_path = dir.path().join(response_file_name(ok.delta_hz));
        assert_eq!(
            resp_path.file_name().unwrap().to_str().unwrap(),
            "response_+1.500000e9.csv"
        );
        write_response_csv(&resp_path, &ok.scan).unwrap();
        let text = fs::read_to_string(&resp_path).unwrap();
        assert!(text.starts_with("omega_hz,re_sx,im_sx\n"));
        assert!(text.contains("3.0000000000000000e4,1.0000000000000000e0,-2.0000000000000000e0"));
    }

    #[test]
    fn plot_script_panels_follow_the_selection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.gp");
        let outputs = OutputsConfig::default();
        write_plot_script(&path, &outputs, "sweep.csv").unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("set multiplot layout 2,1"));
        assert!(text.contains("axes x1y2"));
        assert!(text.contains("set y2label 'linewidth (Hz)'"));

        let only_width = OutputsConfig {
            sz: false,
            light_shift: false,
            ..outputs
        };
        write_plot_script(&path, &only_width, "sweep.csv").unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(!text.contains("multiplot"));
        assert!(text.contains("using 1:4"));
        assert!(!text.contains("using 1:3"));
    }

    #[test]
    fn one_validation_rung_shows_weak_driving_agreement() {
        let opts = SteadyOptions::default();
        let rung = validation_rung(1.0e-2, &opts).unwrap();
        assert!(rung.abs_error < 1.0e-3, "error {:.3e}", rung.abs_error);
        assert!(rung.excited_population > 0.0);
        assert!(rung.excited_population < 1.0e-3);
        assert!(rung.sz_full.abs() > 1.0e-3, "pumping should polarize");
    }
}
