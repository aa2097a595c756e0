//! Closed-form estimates for the driven resonance: where it sits, how wide
//! it is, and how both move with pump detuning.
//!
//! These formulas come from the rotating-wave analysis of the eliminated
//! equation near full polarization. They serve two purposes: seeding search
//! windows for the numerical resonance extraction, and acting as independent
//! cross-checks the numerics must reproduce in their regime of validity.
//!
//! Every function takes and returns plain Hz. All expressions are ratios of
//! quadratic frequency forms (degree one overall), so evaluating them with
//! Hz inputs yields the same number as evaluating in angular units and
//! dividing by 2π.

use crate::basis::HyperfineBasis;
use crate::params::ExperimentParams;

/// 2I + 1: the slowing-down factor mapping electron-spin rates onto the
/// coupled hyperfine ladder.
fn ladder(params: &ExperimentParams) -> f64 {
    f64::from(params.atom.nuclear_spin().twice()) + 1.0
}

/// Shift of the Zeeman precession frequency produced by the pump's light
/// shift, for a left-handed pump on +B_z:
///
/// pull(Δ) = Ω²·Δ_aa / ((2I+1)·(Γ² + Δ_aa²)),   Δ_aa = Δ − Δ_S.
///
/// Only the upper-ground → upper-excited line contributes appreciably when
/// the vapor is pumped into the upper multiplet; the measured resonance sits
/// at |ω_L ± pull| depending on the pump handedness.
pub fn pump_frequency_pull_hz(params: &ExperimentParams) -> f64 {
    let omega = params.pump_coupling_hz();
    let delta_aa = params.pump_detuning_hz - params.atom.delta_s_hz();
    let gamma = params.quench_hz;
    omega * omega * delta_aa / (ladder(params) * (gamma * gamma + delta_aa * delta_aa))
}

/// Light shift reported against the undisturbed Larmor frequency,
/// `resonance − γ_e|B_z|/(2I+1)`, as the analytic model predicts it.
///
/// The stretched coherence precesses at the signed frequency ω_L + pull,
/// where ω_L carries the pump handedness (pumping against the field flips
/// it negative); the scan measures |ω_L + pull|, so the reported shift is
/// ±pull according to that handedness.
pub fn expected_light_shift_hz(params: &ExperimentParams) -> f64 {
    f64::from(params.pump_sign) * pump_frequency_pull_hz(params)
}

/// Near Δ = 0 the measured light shift is linear in the detuning with slope
///
/// dδω/dΔ = Ω² / ((2I+1)·(Γ² + Δ_S²))
///
/// for the usual pump-against-the-field arrangement (the Lorentzian
/// denominator frozen at its Δ = 0 value; the true derivative differs by
/// a relative 2Γ²/(Γ² + Δ_S²)). This is the small-shift form quoted for
/// magnetometer calibration; with the opposite handedness it flips sign
/// along with [`expected_light_shift_hz`].
pub fn light_shift_slope(params: &ExperimentParams) -> f64 {
    let omega = params.pump_coupling_hz();
    let delta_s = params.atom.delta_s_hz();
    let gamma = params.quench_hz;
    f64::from(-params.pump_sign) * omega * omega
        / (ladder(params) * (gamma * gamma + delta_s * delta_s))
}

/// Resonance half-width (HWHM) of the driven Zeeman line:
///
/// γ̃ = Ω²Γ/((2I+1)(Γ²+Δ_aa²)) + (I+1)γ/(2I+1) − γ_se/(2I+1)
///     − 2I·γ_se·⟨S_z⟩/(2I+1),
///
/// with γ = γ_se + γ_sd the total ground relaxation. The last two terms are
/// the spin-exchange narrowing: exchange collisions with a polarized vapor
/// return coherence instead of destroying it, so the line narrows as |⟨S_z⟩|
/// grows.
pub fn line_broadening_hz(params: &ExperimentParams, mean_sz: f64) -> f64 {
    let omega = params.pump_coupling_hz();
    let delta_aa = params.pump_detuning_hz - params.atom.delta_s_hz();
    let gamma_opt = params.quench_hz;
    let n = ladder(params);
    let i = params.atom.nuclear_spin().as_f64();
    let pumping = omega * omega * gamma_opt / (n * (gamma_opt * gamma_opt + delta_aa * delta_aa));
    let relaxation = (i + 1.0) * params.gamma_total_hz() / n;
    let narrowing =
        -(params.spin_exchange_hz + 2.0 * i * params.spin_exchange_hz * mean_sz.abs()) / n;
    pumping + relaxation + narrowing
}

/// The fully polarized limit of [`line_broadening_hz`] (|⟨S_z⟩| = 1/2):
/// spin exchange drops out entirely and only pumping and spin destruction
/// broaden the line,
///
/// γ̃ = Ω²Γ/((2I+1)(Γ²+Δ_aa²)) + (I+1)·γ_sd/(2I+1).
pub fn line_broadening_polarized_hz(params: &ExperimentParams) -> f64 {
    let omega = params.pump_coupling_hz();
    let delta_aa = params.pump_detuning_hz - params.atom.delta_s_hz();
    let gamma_opt = params.quench_hz;
    let n = ladder(params);
    let i = params.atom.nuclear_spin().as_f64();
    omega * omega * gamma_opt / (n * (gamma_opt * gamma_opt + delta_aa * delta_aa))
        + (i + 1.0) * params.spin_destruction_hz / n
}

/// Optical pumping rate of the unresolved-hyperfine (compact) model,
/// Γ_OP = Ω²Γ/(Γ² + Δ²).
pub fn compact_pumping_rate_hz(params: &ExperimentParams) -> f64 {
    let omega = params.pump_coupling_hz();
    let gamma = params.quench_hz;
    let delta = params.pump_detuning_hz;
    omega * omega * gamma / (gamma * gamma + delta * delta)
}

/// Light-shift coefficient of the compact model, Δ_LS = −Ω²Δ/(Γ² + Δ²);
/// enters the generator as −i·Δ_LS·[S_z, ρ].
pub fn compact_light_shift_hz(params: &ExperimentParams) -> f64 {
    let omega = params.pump_coupling_hz();
    let gamma = params.quench_hz;
    let delta = params.pump_detuning_hz;
    -omega * omega * delta / (gamma * gamma + delta * delta)
}

/// Precession-frequency shift the compact model predicts for the measured
/// resonance: the electron-spin light shift slowed by the hyperfine ladder,
/// −Δ_LS/(2I+1), flipping with the pump handedness exactly like
/// [`expected_light_shift_hz`].
pub fn compact_precession_shift_hz(params: &ExperimentParams) -> f64 {
    f64::from(-params.pump_sign) * compact_light_shift_hz(params) / ladder(params)
}

/// How close a set of ground-manifold populations is to a spin-temperature
/// distribution.
#[derive(Clone, Debug)]
pub struct SpinTemperatureReport {
    /// Largest relative mismatch between p(a, M) and p(b, M) at magnetic
    /// numbers present in both multiplets.
    pub max_cross_multiplet_deviation: f64,
    /// Magnetic number where that worst mismatch occurs.
    pub worst_m: f64,
    /// Spread of ln(p(M+1)/p(M)) across the upper multiplet — zero for an
    /// exact exponential profile.
    pub ratio_spread: f64,
    /// Exponential slope β estimated from the stretched end of the ladder.
    pub beta: f64,
}

/// Analyze ground-manifold populations (basis order) for the spin-temperature
/// shape p(F, M) ∝ exp(βM): same-M populations equal across multiplets and a
/// common exponential profile in M.
pub fn spin_temperature_report(
    basis: &HyperfineBasis,
    populations: &[f64],
) -> SpinTemperatureReport {
    let atom = basis.atom();
    let levels = basis.ground_levels();
    assert!(populations.len() >= levels.len());

    let mut max_dev = 0.0f64;
    let mut worst_m = f64::NAN;
    for (k, level) in levels.iter().enumerate() {
        if level.f != atom.f_upper() {
            continue;
        }
        let Some(partner) = basis.ground_index(atom.f_lower(), level.m) else {
            continue;
        };
        let (pa, pb) = (populations[k], populations[partner]);
        let scale = pa.abs().max(pb.abs()).max(f64::MIN_POSITIVE);
        let dev = (pa - pb).abs() / scale;
        if dev > max_dev {
            max_dev = dev;
            worst_m = level.m.as_f64();
        }
    }

    // Log-ratios along the upper multiplet (enumerated M-descending).
    let upper: Vec<f64> = levels
        .iter()
        .zip(populations)
        .filter(|(l, _)| l.f == atom.f_upper())
        .map(|(_, &p)| p)
        .collect();
    let ratios: Vec<f64> = upper
        .windows(2)
        .filter(|w| w[0] > 0.0 && w[1] > 0.0)
        .map(|w| (w[0] / w[1]).ln()) // ln p(M+1)/p(M), M descending order
        .collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &r in &ratios {
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let (ratio_spread, beta) = if ratios.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (hi - lo, ratios.iter().sum::<f64>() / ratios.len() as f64)
    };

    SpinTemperatureReport {
        max_cross_multiplet_deviation: max_dev,
        worst_m,
        ratio_spread,
        beta,
    }
}
