//! The frequency-domain response solver, cross-checked against direct time
//! integration of the driven master equation and against the behaviour a
//! lock-in experiment relies on: amplitude-independent line shapes and a
//! resonance that tracks the slowed-down Larmor frequency.

use num_complex::Complex64;

use opmag::basis::{AtomSpec, HalfInt};
use opmag::effective::EffectiveSystem;
use opmag::full::{FullSystem, RfDrive};
use opmag::params::{ExperimentParams, RABI_PROJECTION};
use opmag::response::{extract_resonance, ResponseSolver};
use opmag::steady::SteadyOptions;
use opmag::units::to_angular;

fn preset_params(name: &str) -> ExperimentParams {
    opmag::config::ScenarioConfig::preset(name)
        .unwrap()
        .to_params()
        .unwrap()
}

/// Least-squares fit of y(t) ≈ a·cos(ωt) + b·sin(ωt) + c on scattered
/// samples; returns (a, b).
fn fit_quadratures(samples: &[(f64, f64)], omega_angular: f64) -> (f64, f64) {
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    let mut rhs = nalgebra::Vector3::<f64>::zeros();
    for &(t, y) in samples {
        let row = nalgebra::Vector3::new((omega_angular * t).cos(), (omega_angular * t).sin(), 1.0);
        m += row * row.transpose();
        rhs += row * y;
    }
    let sol = m.lu().solve(&rhs).expect("fit system is well-conditioned");
    (sol[0], sol[1])
}

/// Drive the full master equation with a real oscillating field and compare
/// the settled ⟨S_x⟩(t) quadratures with the solver's χ(ω), at resonance and
/// off it. The atom is kept small (I = 1/2) and its splittings mild so the
/// integration is cheap, but nothing is approximated: this checks the
/// convention χ = a + ib against ⟨S_x⟩(t) = Re χ·cos(ωt) + Im χ·sin(ωt).
#[test]
fn susceptibility_matches_driven_time_evolution() {
    let atom = AtomSpec::new(HalfInt::HALF, 1.0e6, 0.3e6, 2.802_495_3e6).unwrap();
    let params = ExperimentParams {
        atom,
        pump_rabi_hz: 6.0e4 / RABI_PROJECTION,
        pump_detuning_hz: 0.0,
        pump_sign: -1,
        spin_exchange_hz: 1.0e2,
        spin_destruction_hz: 2.0e3,
        spontaneous_decay_hz: 0.0,
        quench_hz: 1.0e6,
        b_z_gauss: 0.02,
        b_x_gauss: 2.0e-6,
    };

    let system = FullSystem::build(params).unwrap();
    let steady = system.steady_state(&SteadyOptions::default()).unwrap();
    let solver = ResponseSolver::new(&system, &steady).unwrap();
    assert!(
        !solver.rf_capped(),
        "the test drive must sit inside the linear window so both routes use the same amplitude"
    );

    let line = extract_resonance(&system, &steady).unwrap();
    let larmor = params.larmor_reference_hz();
    assert!(
        (line.omega0_hz - larmor).abs() < 0.2 * larmor,
        "resonance {} Hz strayed from the Larmor reference {} Hz",
        line.omega0_hz,
        larmor
    );

    let peak = solver.susceptibility(line.omega0_hz).unwrap().norm();
    assert!(peak > 1.0e-6, "response too small to test against: {peak:.3e}");

    // Let the switch-on transient die over many linewidths, then fit whole
    // periods of the settled oscillation.
    let settle = 12.0 / to_angular(line.linewidth_hz);
    let window = 8.0 / line.omega0_hz;
    for omega_hz in [
        line.omega0_hz,
        line.omega0_hz + 0.7 * line.linewidth_hz,
        line.omega0_hz - 1.3 * line.linewidth_hz,
    ] {
        let chi = solver.susceptibility(omega_hz).unwrap();
        let spin = system.spin_functionals();
        let mut samples = Vec::new();
        system
            .evolve(
                &steady.rho,
                settle + window,
                Some(RfDrive { frequency_hz: omega_hz }),
                &Default::default(),
                |t, v| {
                    if t >= settle {
                        let sx = 0.5 * (spin.sp.dot(v) + spin.sm.dot(v)).re;
                        samples.push((t, sx));
                    }
                },
            )
            .unwrap();
        assert!(samples.len() > 50, "only {} settled samples", samples.len());

        let (a, b) = fit_quadratures(&samples, to_angular(omega_hz));
        let err = (Complex64::new(a, b) - chi).norm() / peak;
        assert!(
            err < 0.03,
            "at {omega_hz:.1} Hz: time domain ({a:.4e}, {b:.4e}) vs χ ({:.4e}, {:.4e}), \
             mismatch {err:.2e} of peak",
            chi.re,
            chi.im
        );
    }
}

/// χ scales exactly linearly in the drive, so the extracted line must not
/// move when B_x changes — including across the amplitude cap, which only
/// rescales the reported signal.
#[test]
fn line_shape_ignores_the_rf_amplitude() {
    let mut params = preset_params("cs-100torr");
    let opts = SteadyOptions::default();

    params.b_x_gauss = 3.0e-5;
    let system = EffectiveSystem::build(params).unwrap();
    let steady = system.steady_state(&opts).unwrap();
    let strong = extract_resonance(&system, &steady).unwrap();
    assert!(strong.rf_capped, "the preset drive should exceed the linear cap");

    params.b_x_gauss = 3.0e-6;
    let system = EffectiveSystem::build(params).unwrap();
    let steady = system.steady_state(&opts).unwrap();
    let weak = extract_resonance(&system, &steady).unwrap();
    assert!(!weak.rf_capped);

    assert!(
        (strong.omega0_hz - weak.omega0_hz).abs() < 1.0e-6 * weak.omega0_hz,
        "centre moved with amplitude: {} vs {}",
        strong.omega0_hz,
        weak.omega0_hz
    );
    assert!(
        (strong.linewidth_hz - weak.linewidth_hz).abs() < 1.0e-4 * weak.linewidth_hz,
        "width moved with amplitude: {} vs {}",
        strong.linewidth_hz,
        weak.linewidth_hz
    );
}

/// With the pump detuned far off every optical line the light shift is gone
/// and the resonance sits at γ_e·B_z/(2I+1), scaling linearly with the
/// field, with a field-independent width.
#[test]
fn resonance_tracks_the_slowed_larmor_frequency() {
    let opts = SteadyOptions::default();
    let mut widths = Vec::new();
    for b_z in [0.05, 0.1, 0.2] {
        let mut params = preset_params("cs-100torr");
        params.pump_detuning_hz = 4.6e11;
        params.b_z_gauss = b_z;
        let system = EffectiveSystem::build(params).unwrap();
        let steady = system.steady_state(&opts).unwrap();
        let line = extract_resonance(&system, &steady).unwrap();

        let reference = params.larmor_reference_hz();
        let pull = (line.omega0_hz - reference).abs() / reference;
        assert!(
            pull < 5.0e-3,
            "B_z = {b_z} G: centre {} Hz vs reference {} Hz",
            line.omega0_hz,
            reference
        );
        widths.push(line.linewidth_hz);
    }
    let (lo, hi) = (
        widths.iter().cloned().fold(f64::INFINITY, f64::min),
        widths.iter().cloned().fold(0.0f64, f64::max),
    );
    assert!(
        (hi - lo) / lo < 0.02,
        "far-detuned width should not depend on the field: {widths:?}"
    );
}

/// In the weak-pumping regime the eliminated ground-state equation carries
/// the same linear response as the unreduced two-manifold equation.
#[test]
fn effective_and_full_susceptibilities_agree_when_pumping_is_weak() {
    let params = opmag::sweep::validation_params(1.0e-3);
    let opts = SteadyOptions::default();

    let effective = EffectiveSystem::build(params).unwrap();
    let eff_steady = effective.steady_state(&opts).unwrap();
    let eff_solver = ResponseSolver::new(&effective, &eff_steady).unwrap();

    let full = FullSystem::build(params).unwrap();
    let full_steady = full.steady_state(&opts).unwrap();
    let full_solver = ResponseSolver::new(&full, &full_steady).unwrap();

    let larmor = params.larmor_reference_hz();
    let scale = eff_solver.susceptibility(larmor).unwrap().norm();
    for omega_hz in [0.97 * larmor, larmor, 1.03 * larmor] {
        let a = eff_solver.susceptibility(omega_hz).unwrap();
        let b = full_solver.susceptibility(omega_hz).unwrap();
        let err = (a - b).norm() / scale;
        assert!(
            err < 1.0e-2,
            "χ disagrees by {err:.2e} at {omega_hz:.1} Hz: {a} vs {b}"
        );
    }
}
