//! Linear response of the pumped steady state to a weak transverse RF field.
//!
//! The RF Hamiltonian γ_e·B_x·cos(ωt)·S_x drives the self-consistent steady
//! state ρ⁰ into a small oscillation ρ(t) = ρ⁰ + X e^{iωt} + X† e^{−iωt}.
//! Linearizing the mean-field equation around ρ⁰ (the feedback means acquire
//! first-order oscillations too, handled exactly as rank-one updates) and
//! matching the e^{−iωt} coefficient gives one linear solve per frequency:
//!
//! (Ľ + iω)·X† = −(A/2)·(−i[S_x, ρ⁰]),
//!
//! with Ľ the linearized generator and A the (possibly capped) RF amplitude
//! in angular units. The reported susceptibility χ(ω) = 2·Tr[S_x X†] gives
//! the lab-frame transverse spin directly:
//!
//! ⟨S_x⟩(t) = Re χ·cos(ωt) + Im χ·sin(ωt),
//!
//! so Re χ is the in-phase (dispersive) quadrature and Im χ the out-of-phase
//! (absorptive) one.
//!
//! Every operator in the generator changes the coherence order M_i − M_j by
//! a fixed amount (optical coherences are graded by m̃ = M − 1 on the excited
//! manifold, which every pump, decay, and quench process preserves), so the
//! solve decomposes exactly: the drive populates only the ΔM̃ = ±1 sectors,
//! each coupled to a single exchange-feedback channel (⟨S₊⟩ reads ΔM̃ = −1,
//! ⟨S₋⟩ its mirror). The solver extracts the two sector blocks once per
//! configuration and solves a small bordered system per frequency.
//!
//! Resonance extraction scans Re χ over a window centered on the Larmor
//! reference and bisects the sign change nearest that reference — the same
//! crossing a lock-in servo referenced to the Larmor frequency would settle
//! on. That choice matters when two shifted hyperfine lines overlap: the
//! folded response then crosses zero several times inside one window, and
//! the nearest crossing moves continuously with detuning where a global
//! search would jump between lines. The dispersive lobes flanking the chosen
//! crossing are refined by golden-section search; half their separation is
//! the half-width at half-maximum of the matching absorptive line.

use num_complex::Complex64;

use crate::analytics;
use crate::basis::{HyperfineBasis, Level, Manifold};
use crate::effective::EffectiveSystem;
use crate::error::{Error, Result};
use crate::full::FullSystem;
use crate::params::ExperimentParams;
use crate::steady::{SpinFunctionals, SteadyOptions, SteadyState};
use crate::superop::{submatrix, subvector, CSuper, CVector, StateSpace};
use crate::units::{to_angular, to_hz};

/// Anything the response machinery can drive: both the full optical equation
/// and the eliminated ground-manifold equation expose the same surface.
pub trait DrivenSystem {
    fn params(&self) -> &ExperimentParams;
    fn basis(&self) -> &HyperfineBasis;
    fn space(&self) -> &StateSpace;
    fn liouvillian(&self) -> &crate::superop::MeanFieldLiouvillian;
    fn spin_functionals(&self) -> &SpinFunctionals;
    /// Unit drive generator −i[S_x, ·] on this system's coordinates.
    fn drive_generator(&self) -> &CSuper;
    fn steady_state(&self, opts: &SteadyOptions) -> Result<SteadyState>;
}

impl DrivenSystem for FullSystem {
    fn params(&self) -> &ExperimentParams {
        FullSystem::params(self)
    }
    fn basis(&self) -> &HyperfineBasis {
        FullSystem::basis(self)
    }
    fn space(&self) -> &StateSpace {
        FullSystem::space(self)
    }
    fn liouvillian(&self) -> &crate::superop::MeanFieldLiouvillian {
        FullSystem::liouvillian(self)
    }
    fn spin_functionals(&self) -> &SpinFunctionals {
        FullSystem::spin_functionals(self)
    }
    fn drive_generator(&self) -> &CSuper {
        FullSystem::drive_generator(self)
    }
    fn steady_state(&self, opts: &SteadyOptions) -> Result<SteadyState> {
        FullSystem::steady_state(self, opts)
    }
}

impl DrivenSystem for EffectiveSystem {
    fn params(&self) -> &ExperimentParams {
        EffectiveSystem::params(self)
    }
    fn basis(&self) -> &HyperfineBasis {
        EffectiveSystem::basis(self)
    }
    fn space(&self) -> &StateSpace {
        EffectiveSystem::space(self)
    }
    fn liouvillian(&self) -> &crate::superop::MeanFieldLiouvillian {
        EffectiveSystem::liouvillian(self)
    }
    fn spin_functionals(&self) -> &SpinFunctionals {
        EffectiveSystem::spin_functionals(self)
    }
    fn drive_generator(&self) -> &CSuper {
        EffectiveSystem::drive_generator(self)
    }
    fn steady_state(&self, opts: &SteadyOptions) -> Result<SteadyState> {
        EffectiveSystem::steady_state(self, opts)
    }
}

/// Doubled m̃ of a level: its magnetic number, shifted down by one on the
/// excited manifold so that every coherent or dissipative process preserves
/// differences of m̃ exactly.
fn two_m_tilde(level: &Level) -> i32 {
    level.m.twice()
        - match level.manifold {
            Manifold::Ground => 0,
            Manifold::Excited => 2,
        }
}

/// Coherence order (m̃_i − m̃_j) of every kept coordinate slot.
pub fn coherence_orders(basis: &HyperfineBasis, space: &StateSpace) -> Vec<i32> {
    let levels = basis.levels();
    space
        .pairs()
        .iter()
        .map(|&(i, j)| {
            let d = two_m_tilde(&levels[i]) - two_m_tilde(&levels[j]);
            debug_assert!(d % 2 == 0);
            d / 2
        })
        .collect()
}

/// How weakly the RF may drive before the linearization is suspect, as a
/// fraction of the slowest relaxation scale.
const RF_LINEAR_FRACTION: f64 = 0.01;

/// One ΔM̃ sector of the linearized, driven problem.
struct SectorProblem {
    /// Linearized generator restricted to the sector (feedback not included).
    frozen: CSuper,
    /// Rank-one feedback terms (weight, image) living inside this sector.
    feedback: Vec<(CVector, CVector)>,
    /// Drive vector −(A/2)·(−i[S_x, ρ⁰]) restricted to the sector.
    drive: CVector,
    /// Readout functional: this sector's share of 2·Tr[S_x ·].
    readout: CVector,
}

impl SectorProblem {
    /// Solve (Ľ_σ + iω)x = b through the bordered form and return the
    /// readout value.
    fn solve(&self, omega_angular: f64) -> Result<Complex64> {
        let n = self.frozen.nrows();
        let k = self.feedback.len();
        let mut m = CSuper::zeros(n + k, n + k);
        m.view_mut((0, 0), (n, n)).copy_from(&self.frozen);
        for i in 0..n {
            m[(i, i)] += Complex64::new(0.0, omega_angular);
        }
        for (c, (weight, image)) in self.feedback.iter().enumerate() {
            m.view_mut((0, n + c), (n, 1)).copy_from(image);
            m.view_mut((n + c, 0), (1, n))
                .copy_from(&weight.transpose());
            m[(n + c, n + c)] = Complex64::new(-1.0, 0.0);
        }
        let mut rhs = CVector::zeros(n + k);
        rhs.rows_mut(0, n).copy_from(&self.drive);

        let x = m.lu().solve(&rhs).ok_or_else(|| {
            Error::LinearSolve(format!(
                "driven-response sector solve is singular at {} Hz",
                to_hz(omega_angular)
            ))
        })?;
        Ok(self.readout.dot(&x.rows(0, n).into_owned()))
    }
}

/// Frequency-domain response of a given steady state, reduced to its two
/// driven coherence sectors.
pub struct ResponseSolver {
    sectors: [SectorProblem; 2],
    rf_amplitude: f64,
    rf_capped: bool,
}

impl ResponseSolver {
    /// Linearize `system` around `steady` and prepare the sector problems.
    pub fn new<S: DrivenSystem + ?Sized>(system: &S, steady: &SteadyState) -> Result<Self> {
        let params = system.params();
        if params.b_x_gauss == 0.0 {
            return Err(Error::InvalidParameter {
                name: "b_x_gauss",
                reason: "the transverse drive is zero, so the linear response vanishes \
                         identically"
                    .into(),
            });
        }
        let ang = params.angular();

        // Keep the drive inside the linear regime: the response scales
        // exactly linearly in the amplitude anyway, so capping only affects
        // the reported signal size, never the line shape.
        let cap = RF_LINEAR_FRACTION * to_angular(params.gamma_total_hz());
        let rf_capped = ang.rf_drive > cap;
        let rf_amplitude = if rf_capped { cap } else { ang.rf_drive };

        let (frozen, rank_one) = system.liouvillian().linearization_parts(&steady.vec);
        let drive_full =
            (system.drive_generator() * &steady.vec) * Complex64::new(-0.5 * rf_amplitude, 0.0);

        let orders = coherence_orders(system.basis(), system.space());
        let labels: Vec<&'static str> = system
            .liouvillian()
            .channels
            .iter()
            .map(|ch| ch.label)
            .collect();
        let spin = system.spin_functionals();

        let build_sector = |order: i32, readout_full: &CVector| -> SectorProblem {
            let slots: Vec<usize> = (0..orders.len()).filter(|&s| orders[s] == order).collect();
            // The exchange channel whose weight reads this sector: ⟨S₊⟩ is
            // supported on ΔM̃ = −1 coordinates, ⟨S₋⟩ on +1; ⟨S_z⟩ reads the
            // undriven diagonal sector and never enters.
            let feedback = rank_one
                .iter()
                .zip(&labels)
                .filter(|(_, label)| {
                    matches!(
                        (order, **label),
                        (-1, "s+") | (1, "s-")
                    )
                })
                .map(|((weight, image), _)| {
                    (subvector(weight, &slots), subvector(image, &slots))
                })
                .collect();
            SectorProblem {
                frozen: submatrix(&frozen, &slots),
                feedback,
                drive: subvector(&drive_full, &slots),
                readout: subvector(readout_full, &slots),
            }
        };

        Ok(ResponseSolver {
            sectors: [build_sector(-1, &spin.sp), build_sector(1, &spin.sm)],
            rf_amplitude,
            rf_capped,
        })
    }

    /// RF amplitude actually applied, in angular units.
    pub fn rf_amplitude_angular(&self) -> f64 {
        self.rf_amplitude
    }

    /// Whether the configured B_x exceeded the linear-regime cap.
    pub fn rf_capped(&self) -> bool {
        self.rf_capped
    }

    /// χ(ω) at a drive frequency in Hz.
    pub fn susceptibility(&self, omega_hz: f64) -> Result<Complex64> {
        let omega = to_angular(omega_hz);
        let mut chi = Complex64::ZERO;
        for sector in &self.sectors {
            chi += sector.solve(omega)?;
        }
        Ok(chi)
    }
}

/// One point of a frequency scan.
#[derive(Clone, Copy, Debug)]
pub struct ScanPoint {
    pub omega_hz: f64,
    pub chi: Complex64,
}

/// Located magnetic-resonance line.
#[derive(Clone, Debug)]
pub struct ResonanceSummary {
    /// Zero crossing of the dispersive quadrature nearest the Larmor
    /// reference.
    pub omega0_hz: f64,
    /// Half separation of the dispersive lobes flanking the crossing (HWHM
    /// of the line).
    pub linewidth_hz: f64,
    /// omega0 minus the undisturbed Larmor reference.
    pub light_shift_hz: f64,
    /// Whether the RF amplitude was capped to stay linear.
    pub rf_capped: bool,
    /// The coarse scan the extraction worked from.
    pub scan: Vec<ScanPoint>,
}

const SCAN_POINTS: usize = 161;
const BISECT_TOL_HZ: f64 = 1.0e-4;
const REFINE_TOL_HZ: f64 = 1.0e-3;

/// Locate the magnetic resonance of `system` around its Larmor reference.
///
/// The window half-width is sized from the analytic broadening and pull
/// estimates (with generous margins), then clamped to keep the scan away
/// from zero frequency. Among the zero crossings of Re χ inside the window
/// the one nearest the Larmor reference is reported, with the linewidth read
/// off the dispersive lobes immediately flanking it. If the window contains
/// no crossing, or a flanking lobe runs into the window edge, the line was
/// not contained and the scan is returned as an error.
pub fn extract_resonance<S: DrivenSystem + ?Sized>(
    system: &S,
    steady: &SteadyState,
) -> Result<ResonanceSummary> {
    let solver = ResponseSolver::new(system, steady)?;
    let params = system.params();
    let center = params.larmor_reference_hz();
    if center <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "b_z_gauss",
            reason: "the static field is zero, so there is no Larmor line to locate".into(),
        });
    }

    let width_guess = analytics::line_broadening_hz(params, steady.mean_sz).abs();
    let pull_guess = analytics::pump_frequency_pull_hz(params).abs();
    let half_width = (10.0 * width_guess)
        .max(50.0 * pull_guess)
        .max(1.0)
        .min(0.95 * center);
    let lo = center - half_width;
    let hi = center + half_width;

    let mut scan = Vec::with_capacity(SCAN_POINTS);
    for k in 0..SCAN_POINTS {
        let omega_hz = lo + (hi - lo) * k as f64 / (SCAN_POINTS - 1) as f64;
        scan.push(ScanPoint {
            omega_hz,
            chi: solver.susceptibility(omega_hz)?,
        });
    }

    let window_error = |scan: &[ScanPoint]| Error::WindowTooSmall {
        lo_hz: lo,
        hi_hz: hi,
        scan: scan.iter().map(|p| (p.omega_hz, p.chi.re)).collect(),
    };

    // Overlapping shifted lines can fold Re χ into several zero crossings
    // inside one window. A lock-in servo referenced to the Larmor frequency
    // settles on the nearest one, and only that choice moves continuously
    // with detuning, so pick the sign change whose midpoint is closest to
    // the reference.
    let mut chosen = None;
    let mut best_dist = f64::INFINITY;
    for k in 0..SCAN_POINTS - 1 {
        let (ra, rb) = (scan[k].chi.re, scan[k + 1].chi.re);
        if ra == 0.0 || ra.signum() != rb.signum() {
            let mid = 0.5 * (scan[k].omega_hz + scan[k + 1].omega_hz);
            let dist = (mid - center).abs();
            if dist < best_dist {
                best_dist = dist;
                chosen = Some(k);
            }
        }
    }
    let k0 = chosen.ok_or_else(|| window_error(&scan))?;

    let dispersive = |omega_hz: f64| solver.susceptibility(omega_hz).map(|chi| chi.re);
    let omega0_hz = bisect_zero(
        dispersive,
        scan[k0].omega_hz,
        scan[k0 + 1].omega_hz,
        BISECT_TOL_HZ,
    )?
    .ok_or_else(|| window_error(&scan))?;

    // Walk outward from the crossing to the first magnitude turn on each
    // side: those are the lobes belonging to this line. The global extrema
    // would do under a lone line but belong to the wrong feature once two
    // lines overlap. A lobe keeps one sign, so the walk also stops at the
    // next sign change (overlapping lines can pinch a lobe to a single
    // sample).
    let climbs = |from: usize, to: usize| {
        scan[to].chi.re * scan[from].chi.re > 0.0
            && scan[to].chi.re.abs() > scan[from].chi.re.abs()
    };
    let mut lobe_left = k0;
    while lobe_left > 0 && climbs(lobe_left, lobe_left - 1) {
        lobe_left -= 1;
    }
    let mut lobe_right = k0 + 1;
    while lobe_right + 1 < SCAN_POINTS && climbs(lobe_right, lobe_right + 1) {
        lobe_right += 1;
    }
    if lobe_left == 0 || lobe_right == SCAN_POINTS - 1 {
        return Err(window_error(&scan));
    }

    let refine = |idx: usize, sign: f64| -> Result<(f64, f64)> {
        let a = scan[idx - 1].omega_hz;
        let b = scan[idx + 1].omega_hz;
        let (omega, value) = golden_section_max(|w| dispersive(w).map(|r| sign * r), a, b, REFINE_TOL_HZ)?;
        Ok((omega, sign * value))
    };
    let (omega_left, re_left) = refine(lobe_left, scan[lobe_left].chi.re.signum())?;
    let (omega_right, re_right) = refine(lobe_right, scan[lobe_right].chi.re.signum())?;

    // A genuine dispersive feature has a positive lobe on one side of the
    // crossing and a negative lobe on the other.
    if !(re_left * re_right < 0.0) {
        return Err(window_error(&scan));
    }

    Ok(ResonanceSummary {
        omega0_hz,
        linewidth_hz: 0.5 * (omega_right - omega_left).abs(),
        light_shift_hz: omega0_hz - center,
        rf_capped: solver.rf_capped(),
        scan,
    })
}

/// Golden-section search for the maximum of `f` on [a, b].
fn golden_section_max(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    if b < a {
        std::mem::swap(&mut a, &mut b);
    }
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Bisection for a zero of `f` between two points of opposite sign; `None`
/// when the bracket does not straddle a sign change.
fn bisect_zero(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<Option<f64>> {
    if b < a {
        std::mem::swap(&mut a, &mut b);
    }
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(Some(a));
    }
    if fb == 0.0 {
        return Ok(Some(b));
    }
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(Some(mid));
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(Some(0.5 * (a + b)))
}
