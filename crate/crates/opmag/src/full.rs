//! The full master equation on the combined ²S₁/₂ ⊕ ²P₁/₂ hyperfine space.
//!
//! In the frame rotating at the pump frequency the generator collects
//!
//! * the coherent part −i[H, ρ] with
//!   H = Δ_S·P(s_a) − Δ_P·P(p_b) + Δ·P(excited)           (optical detunings)
//!     + ω_L·Σ_M M·(P(s_a,M) − P(s_b,M))                  (ground Zeeman)
//!     + Ω′·(D₊ + D₊†)                                    (σ⁺ pump),
//!   where P(·) are projectors and D₊ is the l = +1 decay channel, so the
//!   pump connects |s_F, M⟩ ↔ |p_F′, M+1⟩ with amplitude
//!   √(2/3)·Ω′·⟨I,M+½;½,−½|F M⟩·⟨I,M+½;½,+½|F′ M+1⟩;
//! * spontaneous decay: Γ_decay·Σ_l D[D_l];
//! * collisional quenching: Γ·Σ_m D[A_m]. The three channels resolve the
//!   identity on the excited manifold twice over (Σ A_m†A_m = 2·P_exc), so
//!   quenching empties the excited level at rate 2Γ while the optical
//!   coherences relax at Γ — the same Γ that pressure-broadens every
//!   detuning denominator of the eliminated equation;
//! * ground spin relaxation: γ·(S·ρ·S − ½{S², ρ}) with γ = γ_se + γ_sd;
//! * mean-field spin exchange (see [`crate::superop::spin_exchange_channels`]).
//!
//! A transverse RF drive −i·γ_e·B_x·cos(ωt)·[S_x, ρ] can be attached during
//! time evolution; the linear-response module instead treats it
//! perturbatively.
//!
//! Everything here is exact at any pump strength (no adiabatic elimination);
//! it is the reference the eliminated ground-manifold equation is validated
//! against.

use num_complex::Complex64;

use crate::basis::{AtomSpec, CMatrix, HyperfineBasis, Manifold, SpinOps};
use crate::error::Result;
use crate::ode::{self, OdeOptions};
use crate::params::ExperimentParams;
use crate::steady::{
    degenerate_representative, solve_self_consistent, SpinFunctionals, SteadyOptions, SteadyState,
};
use crate::superop::{spin_exchange_channels, CSuper, CVector, MeanFieldLiouvillian, StateSpace};

/// Transverse RF drive attached to a time evolution. The amplitude comes
/// from the experiment's `b_x_gauss`; only the frequency varies per run.
#[derive(Clone, Copy, Debug)]
pub struct RfDrive {
    pub frequency_hz: f64,
}

/// The assembled full-space system.
pub struct FullSystem {
    params: ExperimentParams,
    basis: HyperfineBasis,
    space: StateSpace,
    liouvillian: MeanFieldLiouvillian,
    spin: SpinFunctionals,
    /// Embedded ground-manifold electron-spin operators on the full space.
    spin_ops: SpinOps,
    /// −i[S_x, ·] at unit amplitude; scale by γ_e·B_x·cos(ωt) to drive.
    drive_generator: CSuper,
}

impl FullSystem {
    pub fn build(params: ExperimentParams) -> Result<Self> {
        params.validate()?;
        let ang = params.angular();
        let basis = HyperfineBasis::build(params.atom);
        let atom = params.atom;
        let n = atom.full_dim();
        let space = StateSpace::full(n);

        // --- Hamiltonian --------------------------------------------------
        let mut h = CMatrix::zeros(n, n);
        for (k, level) in basis.levels().iter().enumerate() {
            let upper = level.f == atom.f_upper();
            let m = level.m.as_f64();
            let energy = match level.manifold {
                Manifold::Ground => {
                    let hyperfine = if upper { ang.delta_s } else { 0.0 };
                    let zeeman = ang.larmor * m * if upper { 1.0 } else { -1.0 };
                    hyperfine + zeeman
                }
                Manifold::Excited => {
                    ang.detuning - if upper { 0.0 } else { ang.delta_p }
                }
            };
            h[(k, k)] = Complex64::new(energy, 0.0);
        }
        let optical = basis.optical_jump_ops();
        let pump = (&optical.d_plus + optical.d_plus.adjoint()) * Complex64::new(ang.rabi_prime, 0.0);
        h += pump;

        let mut fixed = space.commutator(&h);

        // --- Dissipators ---------------------------------------------------
        if ang.decay > 0.0 {
            for d in optical.iter() {
                fixed += space.dissipator(d) * Complex64::new(ang.decay, 0.0);
            }
        }
        if ang.quench > 0.0 {
            for a in basis.quench_jump_ops().iter() {
                fixed += space.dissipator(a) * Complex64::new(ang.quench, 0.0);
            }
        }

        let ground = basis.electron_spin_ops();
        let spin_ops = SpinOps {
            sx: basis.embed_ground(&ground.sx),
            sy: basis.embed_ground(&ground.sy),
            sz: basis.embed_ground(&ground.sz),
            sp: basis.embed_ground(&ground.sp),
            sm: basis.embed_ground(&ground.sm),
        };
        for s in [&spin_ops.sx, &spin_ops.sy, &spin_ops.sz] {
            fixed += space.dissipator(s) * Complex64::new(ang.gamma, 0.0);
        }

        let channels = if ang.gamma_se > 0.0 {
            spin_exchange_channels(&space, &spin_ops, ang.gamma_se)
        } else {
            Vec::new()
        };

        let spin = SpinFunctionals {
            sz: space.functional(&spin_ops.sz),
            sp: space.functional(&spin_ops.sp),
            sm: space.functional(&spin_ops.sm),
        };
        let drive_generator = space.commutator(&spin_ops.sx);

        Ok(FullSystem {
            params,
            basis,
            liouvillian: MeanFieldLiouvillian {
                space: space.clone(),
                fixed,
                channels,
            },
            space,
            spin,
            spin_ops,
            drive_generator,
        })
    }

    pub fn params(&self) -> &ExperimentParams {
        &self.params
    }

    pub fn basis(&self) -> &HyperfineBasis {
        &self.basis
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn liouvillian(&self) -> &MeanFieldLiouvillian {
        &self.liouvillian
    }

    pub fn spin_functionals(&self) -> &SpinFunctionals {
        &self.spin
    }

    /// Embedded ground-manifold spin operators (handy for expectations).
    pub fn spin_ops(&self) -> &SpinOps {
        &self.spin_ops
    }

    /// Unit-amplitude RF generator −i[S_x, ·].
    pub fn drive_generator(&self) -> &CSuper {
        &self.drive_generator
    }

    /// The unpolarized ground-manifold state (uniform populations, empty
    /// excited level) — the natural initial condition, and the degenerate
    /// steady state when the pump is off.
    pub fn unpolarized_ground(&self) -> CMatrix {
        let atom = self.params.atom;
        let n = atom.full_dim();
        let p = 1.0 / atom.ground_dim() as f64;
        let mut rho = CMatrix::zeros(n, n);
        for k in 0..atom.ground_dim() {
            rho[(k, k)] = Complex64::new(p, 0.0);
        }
        rho
    }

    /// Self-consistent steady state. With the pump off the stationary family
    /// is degenerate (relaxation conserves ⟨I_z⟩) and the unpolarized ground
    /// state is returned as its representative, flagged accordingly.
    pub fn steady_state(&self, opts: &SteadyOptions) -> Result<SteadyState> {
        if self.params.pump_rabi_hz == 0.0 {
            return Ok(degenerate_representative(
                &self.liouvillian,
                &self.spin,
                self.unpolarized_ground(),
            ));
        }
        solve_self_consistent(&self.liouvillian, &self.spin, opts)
    }

    /// Integrate the (possibly driven) master equation from `rho0` for
    /// `duration_s`. The mean-field scalars are re-measured at every stage
    /// evaluation. `on_step` sees every accepted step.
    pub fn evolve(
        &self,
        rho0: &CMatrix,
        duration_s: f64,
        rf: Option<RfDrive>,
        opts: &OdeOptions,
        mut on_step: impl FnMut(f64, &CVector),
    ) -> Result<(CMatrix, ode::OdeSolution)> {
        let ang = self.params.angular();
        let y0 = self.space.vectorize(rho0);
        let rhs = |t: f64, v: &CVector| -> CVector {
            let mut out = self.liouvillian.apply(v);
            if let Some(drive) = rf {
                let omega = crate::units::to_angular(drive.frequency_hz);
                let amp = ang.rf_drive * (omega * t).cos();
                if amp != 0.0 {
                    out += (&self.drive_generator * v) * Complex64::new(amp, 0.0);
                }
            }
            out
        };
        let sol = ode::integrate(rhs, 0.0, y0, duration_s, opts, |t, v| on_step(t, v))?;
        Ok((self.space.unvectorize(&sol.y), sol))
    }

    /// Stationarity certificate: evolve the candidate state for a few
    /// excited-state lifetimes (undriven) and report how far it moved,
    /// ‖ρ(τ) − ρ(0)‖_F. A genuine steady state drifts only at integrator
    /// tolerance level.
    pub fn stationarity_drift(&self, rho: &CMatrix, lifetimes: f64) -> Result<f64> {
        let ang = self.params.angular();
        // The slowest relevant scale is ground relaxation; the fastest is
        // quenching. A handful of excited lifetimes already exposes any
        // population imbalance between the manifolds, which is the failure
        // mode a wrong kernel would produce.
        let width = (2.0 * ang.quench + ang.decay).max(ang.gamma);
        let tau = lifetimes / width;
        let (rho_t, _) = self.evolve(rho, tau, None, &OdeOptions::default(), |_, _| {})?;
        Ok((rho_t - rho).norm())
    }
}

/// Convenience: expectation value Tr[O·ρ].
pub fn expectation(op: &CMatrix, rho: &CMatrix) -> Complex64 {
    (op * rho).diagonal().iter().sum()
}

/// Parameters for the small-atom regression fixtures used across the test
/// suite: hydrogen-like I = 1/2 keeps full-space objects 8-dimensional.
pub fn tiny_atom() -> AtomSpec {
    AtomSpec::new(
        crate::basis::HalfInt::HALF,
        1.0e9,
        0.1e9,
        2.802_495_3e6,
    )
    .expect("valid test atom")
}
