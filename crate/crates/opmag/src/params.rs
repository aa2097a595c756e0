//! Experiment parameters: pump, fields, and collision rates.
//!
//! All fields are user-facing, so they are ordinary frequencies in Hz and
//! magnetic fields in gauss. Solver modules never touch these directly;
//! they consume the [`AngularParams`] view, which multiplies every rate and
//! frequency by 2π once, at one place. See [`crate::units`] for why the two
//! systems must not be mixed.

use crate::basis::AtomSpec;
use crate::error::{Error, Result};
use crate::units::to_angular;

/// Ratio between the effective pump coupling Ω and the bare optical Rabi
/// frequency Ω′: a circularly polarized beam reaches the J = 1/2 excited
/// level only through the |m_l = 1, m_s = −1/2⟩ component, whose weight in
/// |J = 1/2, m_J = 1/2⟩ is √(2/3).
pub const RABI_PROJECTION: f64 = 0.816_496_580_927_726; // √(2/3)

/// Complete physical configuration of a pump-probe run.
///
/// JSON (de)serialization lives in [`crate::config`], which validates on the
/// way in; this struct is the already-checked in-memory form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentParams {
    /// Atom species (nuclear spin, hyperfine splittings, gyromagnetic ratio).
    pub atom: AtomSpec,
    /// Bare optical Rabi frequency Ω′ of the pump beam (Hz, ≥ 0).
    pub pump_rabi_hz: f64,
    /// Pump detuning Δ (Hz) measured from the lower-ground → upper-excited
    /// hyperfine transition; the other three lines then sit at Δ − Δ_S,
    /// Δ − Δ_P and Δ − Δ_S − Δ_P.
    pub pump_detuning_hz: f64,
    /// Handedness of the circular pump polarization: +1 pumps atoms toward
    /// the high-M stretched state, −1 toward low M. Internally a flipped
    /// handedness is equivalent to reversing the static field.
    pub pump_sign: i8,
    /// Spin-exchange collision rate γ_se (Hz).
    pub spin_exchange_hz: f64,
    /// Ground-state spin-destruction collision rate γ_sd (Hz).
    pub spin_destruction_hz: f64,
    /// Spontaneous optical decay rate of the excited level (Hz). Small next
    /// to quenching in buffered cells; set to zero for idealized runs.
    pub spontaneous_decay_hz: f64,
    /// Collisional quench rate Γ of the excited level (Hz). Doubles as the
    /// pressure-broadened optical half-width entering every detuning
    /// denominator.
    pub quench_hz: f64,
    /// Static longitudinal field (gauss).
    pub b_z_gauss: f64,
    /// Transverse RF drive amplitude (gauss).
    pub b_x_gauss: f64,
}

impl ExperimentParams {
    /// Validate ranges and cross-field consistency.
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("pump_rabi_hz", self.pump_rabi_hz),
            ("spin_exchange_hz", self.spin_exchange_hz),
            ("spin_destruction_hz", self.spin_destruction_hz),
            ("spontaneous_decay_hz", self.spontaneous_decay_hz),
            ("quench_hz", self.quench_hz),
            ("b_x_gauss", self.b_x_gauss),
        ];
        for (name, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and non-negative, got {v}"),
                });
            }
        }
        for (name, v) in [
            ("pump_detuning_hz", self.pump_detuning_hz),
            ("b_z_gauss", self.b_z_gauss),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        if self.pump_sign != 1 && self.pump_sign != -1 {
            return Err(Error::InvalidParameter {
                name: "pump_sign",
                reason: format!("must be +1 or -1, got {}", self.pump_sign),
            });
        }
        if self.spin_exchange_hz + self.spin_destruction_hz <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "spin_exchange_hz",
                reason: "ground relaxation must be positive: a vapor with neither spin \
                         exchange nor spin destruction has no resonance linewidth"
                    .into(),
            });
        }
        Ok(())
    }

    /// Total ground relaxation rate γ = γ_se + γ_sd (Hz).
    pub fn gamma_total_hz(&self) -> f64 {
        self.spin_exchange_hz + self.spin_destruction_hz
    }

    /// Effective pump coupling Ω = √(2/3)·Ω′ (Hz); this is the quantity all
    /// eliminated rates and analytic estimates are written in.
    pub fn pump_coupling_hz(&self) -> f64 {
        RABI_PROJECTION * self.pump_rabi_hz
    }

    /// Longitudinal field after absorbing the pump handedness. All internal
    /// algebra drives with a fixed-helicity beam; a right-handed pump on
    /// field +B_z behaves exactly like a left-handed pump on −B_z.
    pub fn effective_b_z_gauss(&self) -> f64 {
        f64::from(self.pump_sign) * self.b_z_gauss
    }

    /// Unsigned Larmor frequency γ_e|B_z|/(2I+1) in Hz — the reference
    /// against which resonance shifts are reported.
    pub fn larmor_reference_hz(&self) -> f64 {
        self.atom.larmor_hz(self.b_z_gauss.abs())
    }

    /// Whether the pump is weak enough for the adiabatic elimination to be
    /// trustworthy: Ω well under the excited-state width.
    pub fn weak_pumping(&self) -> bool {
        let width = self.quench_hz + 0.5 * self.spontaneous_decay_hz;
        self.pump_coupling_hz() <= 0.1 * width
    }

    /// Convert to angular frequencies for the solvers.
    pub fn angular(&self) -> AngularParams {
        let atom = &self.atom;
        AngularParams {
            rabi_prime: to_angular(self.pump_rabi_hz),
            rabi: to_angular(self.pump_coupling_hz()),
            detuning: to_angular(self.pump_detuning_hz),
            delta_s: to_angular(atom.delta_s_hz()),
            delta_p: to_angular(atom.delta_p_hz()),
            gamma_se: to_angular(self.spin_exchange_hz),
            gamma_sd: to_angular(self.spin_destruction_hz),
            gamma: to_angular(self.gamma_total_hz()),
            decay: to_angular(self.spontaneous_decay_hz),
            quench: to_angular(self.quench_hz),
            larmor: to_angular(atom.larmor_hz(self.effective_b_z_gauss())),
            rf_drive: to_angular(
                atom.gyromagnetic_ratio_e_hz_per_g() * self.b_x_gauss,
            ),
        }
    }
}

/// The same physics in angular units (rad/s), ready for generator assembly.
/// Produced by [`ExperimentParams::angular`]; solver code takes this and
/// never converts units itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngularParams {
    /// Bare optical Rabi frequency Ω′.
    pub rabi_prime: f64,
    /// Effective pump coupling Ω = √(2/3)·Ω′.
    pub rabi: f64,
    /// Pump detuning Δ.
    pub detuning: f64,
    /// Ground hyperfine splitting Δ_S.
    pub delta_s: f64,
    /// Excited hyperfine splitting Δ_P.
    pub delta_p: f64,
    /// Spin-exchange rate γ_se.
    pub gamma_se: f64,
    /// Ground spin-destruction rate γ_sd.
    pub gamma_sd: f64,
    /// Total ground relaxation γ = γ_se + γ_sd.
    pub gamma: f64,
    /// Spontaneous optical decay rate of the excited level.
    pub decay: f64,
    /// Collisional quench rate Γ (also the optical half-width).
    pub quench: f64,
    /// Signed ground Larmor frequency ω_L = γ_e·B_z·sign/(2I+1).
    pub larmor: f64,
    /// RF Rabi frequency γ_e·B_x of the bare electron.
    pub rf_drive: f64,
}

impl AngularParams {
    /// Optical detuning of the line from ground multiplet F to excited
    /// multiplet F′, relative to the pump frequency. `upper_*` flags select
    /// the multiplets: true = F = I + 1/2.
    pub fn line_detuning(&self, ground_upper: bool, excited_upper: bool) -> f64 {
        let mut d = self.detuning;
        if ground_upper {
            d -= self.delta_s;
        }
        if !excited_upper {
            d -= self.delta_p;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentParams {
        ExperimentParams {
            atom: AtomSpec::cesium(),
            pump_rabi_hz: 5.0e6,
            pump_detuning_hz: 0.0,
            pump_sign: -1,
            spin_exchange_hz: 1.31e3,
            spin_destruction_hz: 2.2e2,
            spontaneous_decay_hz: 4.56e6,
            quench_hz: 0.6e9,
            b_z_gauss: 0.1,
            b_x_gauss: 3.0e-5,
        }
    }

    #[test]
    fn validates_and_converts() {
        let p = base();
        p.validate().unwrap();
        let a = p.angular();
        assert!((a.rabi / a.rabi_prime - RABI_PROJECTION).abs() < 1e-15);
        // Right-handed pump flips the sign of the internal Larmor frequency.
        assert!(a.larmor < 0.0);
        assert!(p.larmor_reference_hz() > 0.0);
    }

    #[test]
    fn line_detunings_span_all_four_transitions() {
        let p = base();
        let a = p.angular();
        assert_eq!(a.line_detuning(false, true), a.detuning);
        assert_eq!(a.line_detuning(true, true), a.detuning - a.delta_s);
        assert_eq!(a.line_detuning(false, false), a.detuning - a.delta_p);
        assert_eq!(
            a.line_detuning(true, false),
            a.detuning - a.delta_s - a.delta_p
        );
    }

    #[test]
    fn rejects_bad_sign_and_negative_rates() {
        let mut p = base();
        p.pump_sign = 0;
        assert!(p.validate().is_err());
        let mut p = base();
        p.quench_hz = -1.0;
        assert!(p.validate().is_err());
    }
}
