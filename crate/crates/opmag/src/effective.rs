//! The eliminated (ground-manifold) master equation.
//!
//! When the pump coupling Ω is small against the pressure-broadened optical
//! width Γ, the excited manifold follows the ground state adiabatically and
//! can be removed. What remains acts on the 4I + 2 ground states alone, with
//! hyperfine (a↔b) coherences dropped — they precess at Δ_S, far faster than
//! any remaining rate — so states live on the block-diagonal coordinate set
//! {(i, j) : F_i = F_j}.
//!
//! Pumping then appears as three families of incoherent ground↔ground
//! transfer channels, classified by how much magnetic quantum number the
//! atom keeps from the absorbed σ⁺ photon:
//!
//! * raise-by-one: absorb σ⁺, quench without electron spin transfer
//!   (|F′, M+1⟩⟨F, M|; the target multiplet F′ equals the intermediate
//!   excited multiplet since that quench channel is multiplet-diagonal);
//! * keep: absorb σ⁺, hand one unit to the collision partner
//!   (|F′, M⟩⟨F, M|);
//! * raise-by-two: absorb σ⁺ and take another unit from the partner
//!   (|F′, M+2⟩⟨F, M|).
//!
//! Each family's rate matrix over source magnetic numbers (M, M′) is an
//! exact rank-one Gram matrix v·v† — the second-order amplitudes factor per
//! sandwich side — which this module exploits: it stores the complex
//! amplitude vectors
//!
//! v⁽¹⁾_{F F′}(M) = Ω√Γ·c_F(M)·a_{F′}(M+1)·|Δ̃_{F F′}|⁻¹,
//! v⁽²⁾_{F F′}(M) = Ω√Γ·c_F(M)·c_{F′}(M)·Σ_{F₁} a_{F₁}(M+1)²/Δ̃_{F F₁},
//! v⁽³⁾_{F F′}(M) = Ω√Γ·c_F(M)·a_{F′}(M+2)·Σ_{F₁} a_{F₁}(M+1)·c_{F₁}(M+1)/Δ̃_{F F₁},
//!
//! with a_F(M) = ⟨I, M−½; ½, +½|F M⟩, c_F(M) = ⟨I, M+½; ½, −½|F M⟩, and
//! Δ̃_{F F′} = Δ_{F F′} − iΓ the complex line detuning. The transfer rates
//! are v(M)·conj(v(M′)). Alongside them comes the complex depletion
//!
//! Γ_{F M} = −i·Ω²·c_F(M)²·Σ_{F′} a_{F′}(M+1)²/Δ̃_{F F′},
//!
//! whose real part removes the population fed into the transfer channels
//! (2·Re Γ_{F M} equals the total outflow — trace preservation is exact, not
//! approximate) and whose imaginary part is the light shift of each Zeeman
//! level.
//!
//! A `compact` variant replaces the per-line structure by its unresolved
//! limit (valid when Δ_S, Δ_P ≪ Γ): a single pumping dissipator
//! Γ_OP·(D[S₊] + D[S_z]) and a scalar light shift −i·Δ_LS·[S_z, ρ].

use num_complex::Complex64;

use crate::analytics;
use crate::basis::{clebsch_gordan, CMatrix, HalfInt, HyperfineBasis, SpinOps};
use crate::error::{Error, Result};
use crate::params::ExperimentParams;
use crate::steady::{
    degenerate_representative, solve_self_consistent, SpinFunctionals, SteadyOptions, SteadyState,
};
use crate::superop::{
    spin_exchange_channels, submatrix, subvector, CSuper, MeanFieldLiouvillian, StateSpace,
};
use crate::units::to_angular;

/// The three eliminated pump channel families, tagged by how the source
/// magnetic number maps to the target.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum JumpKind {
    /// |F′, M+1⟩⟨F, M| — quench preserves the electron magnetic number.
    RaiseOne,
    /// |F′, M⟩⟨F, M| — one unit handed to the collision partner.
    Keep,
    /// |F′, M+2⟩⟨F, M| — one unit taken from the collision partner.
    RaiseTwo,
}

impl JumpKind {
    pub const ALL: [JumpKind; 3] = [JumpKind::RaiseOne, JumpKind::Keep, JumpKind::RaiseTwo];

    /// Target M minus source M, in doubled units.
    fn two_m_shift(self) -> i32 {
        match self {
            JumpKind::RaiseOne => 2,
            JumpKind::Keep => 0,
            JumpKind::RaiseTwo => 4,
        }
    }

    fn index(self) -> usize {
        match self {
            JumpKind::RaiseOne => 0,
            JumpKind::Keep => 1,
            JumpKind::RaiseTwo => 2,
        }
    }
}

/// ⟨I, M−½; ½, +½ | F M⟩ — the spin-up amplitude of |F M⟩.
fn cg_up(two_i: i32, two_f: i32, two_m: i32) -> f64 {
    clebsch_gordan(
        HalfInt::from_twice(two_i),
        HalfInt::from_twice(two_m - 1),
        HalfInt::HALF,
        HalfInt::HALF,
        HalfInt::from_twice(two_f),
        HalfInt::from_twice(two_m),
    )
}

/// ⟨I, M+½; ½, −½ | F M⟩ — the spin-down amplitude of |F M⟩.
fn cg_down(two_i: i32, two_f: i32, two_m: i32) -> f64 {
    clebsch_gordan(
        HalfInt::from_twice(two_i),
        HalfInt::from_twice(two_m + 1),
        HalfInt::HALF,
        HalfInt::from_twice(-1),
        HalfInt::from_twice(two_f),
        HalfInt::from_twice(two_m),
    )
}

/// Frequency-dependent pump rate tables of the eliminated equation, in
/// angular units.
#[derive(Clone, Debug)]
pub struct EffectiveRates {
    two_i: i32,
    /// Amplitude vectors over source magnetic slots (M descending), indexed
    /// `[kind][src_upper][tgt_upper]`.
    amplitudes: [[[Vec<Complex64>; 2]; 2]; 3],
    /// Complex depletion Γ_{F M} over magnetic slots, indexed `[src_upper]`.
    depletion: [Vec<Complex64>; 2],
}

fn multiplet(two_i: i32, upper: bool) -> i32 {
    if upper {
        two_i + 1
    } else {
        two_i - 1
    }
}

fn slot(two_f: i32, two_m: i32) -> usize {
    debug_assert!((two_f - two_m) % 2 == 0 && two_m.abs() <= two_f);
    ((two_f - two_m) / 2) as usize
}

impl EffectiveRates {
    /// Evaluate the tables for the given pump configuration.
    pub fn compute(params: &ExperimentParams) -> Result<Self> {
        params.validate()?;
        let ang = params.angular();
        let two_i = params.atom.nuclear_spin().twice();

        // Complex inverse line detunings 1/Δ̃, indexed [src_upper][exc_upper].
        let mut inv_detuning = [[Complex64::ZERO; 2]; 2];
        for (si, src_upper) in [false, true].into_iter().enumerate() {
            for (ei, exc_upper) in [false, true].into_iter().enumerate() {
                let delta = ang.line_detuning(src_upper, exc_upper);
                if delta == 0.0 && ang.quench == 0.0 && ang.rabi != 0.0 {
                    return Err(Error::SingularDetuning {
                        ground: if src_upper { 'a' } else { 'b' },
                        excited: if exc_upper { 'a' } else { 'b' },
                    });
                }
                inv_detuning[si][ei] = Complex64::new(delta, -ang.quench).finv();
            }
        }

        let coupling = ang.rabi; // Ω = √(2/3)·Ω′
        let sqrt_quench = ang.quench.sqrt();

        let mut amplitudes: [[[Vec<Complex64>; 2]; 2]; 3] = Default::default();
        let mut depletion: [Vec<Complex64>; 2] = Default::default();

        for (si, src_upper) in [false, true].into_iter().enumerate() {
            let two_f = multiplet(two_i, src_upper);
            let n_m = (two_f + 1) as usize;

            depletion[si] = (0..n_m)
                .map(|s| {
                    let two_m = two_f - 2 * s as i32;
                    let c = cg_down(two_i, two_f, two_m);
                    let sum: Complex64 = [false, true]
                        .into_iter()
                        .enumerate()
                        .map(|(ei, exc_upper)| {
                            let a = cg_up(two_i, multiplet(two_i, exc_upper), two_m + 2);
                            inv_detuning[si][ei] * (a * a)
                        })
                        .sum();
                    Complex64::new(0.0, -1.0) * coupling * coupling * (c * c) * sum
                })
                .collect();

            for (ti, tgt_upper) in [false, true].into_iter().enumerate() {
                let two_ft = multiplet(two_i, tgt_upper);
                for kind in JumpKind::ALL {
                    let amp = &mut amplitudes[kind.index()][si][ti];
                    *amp = (0..n_m)
                        .map(|s| {
                            let two_m = two_f - 2 * s as i32;
                            let c_src = cg_down(two_i, two_f, two_m);
                            let v = match kind {
                                JumpKind::RaiseOne => {
                                    // Target multiplet doubles as intermediate.
                                    let a = cg_up(two_i, two_ft, two_m + 2);
                                    Complex64::new(
                                        c_src * a * inv_detuning[si][ti].norm(),
                                        0.0,
                                    )
                                }
                                JumpKind::Keep => {
                                    let c_tgt = cg_down(two_i, two_ft, two_m);
                                    let sum: Complex64 = [false, true]
                                        .into_iter()
                                        .enumerate()
                                        .map(|(ei, exc_upper)| {
                                            let a = cg_up(
                                                two_i,
                                                multiplet(two_i, exc_upper),
                                                two_m + 2,
                                            );
                                            inv_detuning[si][ei] * (a * a)
                                        })
                                        .sum();
                                    sum * (c_src * c_tgt)
                                }
                                JumpKind::RaiseTwo => {
                                    let a_tgt = cg_up(two_i, two_ft, two_m + 4);
                                    let sum: Complex64 = [false, true]
                                        .into_iter()
                                        .enumerate()
                                        .map(|(ei, exc_upper)| {
                                            let two_fe = multiplet(two_i, exc_upper);
                                            let a = cg_up(two_i, two_fe, two_m + 2);
                                            let c = cg_down(two_i, two_fe, two_m + 2);
                                            inv_detuning[si][ei] * (a * c)
                                        })
                                        .sum();
                                    sum * (c_src * a_tgt)
                                }
                            };
                            v * (coupling * sqrt_quench)
                        })
                        .collect();
                }
            }
        }

        Ok(EffectiveRates {
            two_i,
            amplitudes,
            depletion,
        })
    }

    /// Transfer rate Γ⁽ᵏ⁾ between sandwich sides at source magnetic numbers
    /// (M, M′), for source multiplet F and target multiplet F′ (doubled
    /// quantum numbers). Out-of-range magnetic numbers give zero.
    pub fn transfer(
        &self,
        kind: JumpKind,
        src_upper: bool,
        tgt_upper: bool,
        two_m: i32,
        two_m_prime: i32,
    ) -> Complex64 {
        let two_f = multiplet(self.two_i, src_upper);
        if two_m.abs() > two_f || two_m_prime.abs() > two_f {
            return Complex64::ZERO;
        }
        let amp = &self.amplitudes[kind.index()][usize::from(src_upper)][usize::from(tgt_upper)];
        amp[slot(two_f, two_m)] * amp[slot(two_f, two_m_prime)].conj()
    }

    /// Complex depletion rate Γ_{F M}; Re ≥ 0 is loss, Im is the light shift
    /// of the level.
    pub fn depletion(&self, src_upper: bool, two_m: i32) -> Complex64 {
        let two_f = multiplet(self.two_i, src_upper);
        if two_m.abs() > two_f {
            return Complex64::ZERO;
        }
        self.depletion[usize::from(src_upper)][slot(two_f, two_m)]
    }

    pub fn nuclear_spin(&self) -> HalfInt {
        HalfInt::from_twice(self.two_i)
    }
}

/// Which pump description a ground-manifold system carries.
#[derive(Clone, Debug)]
pub enum PumpModel {
    /// Frequency-resolved eliminated rates.
    Resolved(EffectiveRates),
    /// Unresolved-hyperfine compact form (Γ_OP, Δ_LS).
    Compact { pumping_rate: f64, light_shift: f64 },
    /// No pump (Ω = 0).
    Off,
}

/// The assembled ground-manifold system (eliminated or compact).
pub struct EffectiveSystem {
    params: ExperimentParams,
    basis: HyperfineBasis,
    space: StateSpace,
    liouvillian: MeanFieldLiouvillian,
    spin: SpinFunctionals,
    spin_ops: SpinOps,
    drive_generator: CSuper,
    pump: PumpModel,
}

impl EffectiveSystem {
    /// Assemble the eliminated equation at the detuning in `params`.
    pub fn build(params: ExperimentParams) -> Result<Self> {
        let pump = if params.pump_rabi_hz == 0.0 {
            PumpModel::Off
        } else {
            PumpModel::Resolved(EffectiveRates::compute(&params)?)
        };
        Self::assemble(params, pump)
    }

    /// Assemble the compact (unresolved hyperfine) variant.
    pub fn build_compact(params: ExperimentParams) -> Result<Self> {
        params.validate()?;
        let pump = if params.pump_rabi_hz == 0.0 {
            PumpModel::Off
        } else {
            PumpModel::Compact {
                pumping_rate: to_angular(analytics::compact_pumping_rate_hz(&params)),
                light_shift: to_angular(analytics::compact_light_shift_hz(&params)),
            }
        };
        Self::assemble(params, pump)
    }

    fn assemble(params: ExperimentParams, pump: PumpModel) -> Result<Self> {
        params.validate()?;
        let ang = params.angular();
        let atom = params.atom;
        let basis = HyperfineBasis::build(atom);
        let n_g = atom.ground_dim();

        let levels = basis.ground_levels().to_vec();
        let space = StateSpace::restricted(n_g, |i, j| levels[i].f == levels[j].f);

        // Ground Hamiltonian: hyperfine offset on the upper multiplet (only
        // felt by the dropped a–b coherences, kept for exactness) plus the
        // Zeeman ladders ω_a = −ω_b = ω_L.
        let mut h = CMatrix::zeros(n_g, n_g);
        for (k, level) in levels.iter().enumerate() {
            let upper = level.f == atom.f_upper();
            let m = level.m.as_f64();
            let e = if upper { ang.delta_s } else { 0.0 }
                + ang.larmor * m * if upper { 1.0 } else { -1.0 };
            h[(k, k)] = Complex64::new(e, 0.0);
        }
        let mut fixed = space.commutator(&h);

        let spin_ops = basis.electron_spin_ops();
        for s in [&spin_ops.sx, &spin_ops.sy, &spin_ops.sz] {
            fixed += space.dissipator(s) * Complex64::new(ang.gamma, 0.0);
        }

        match &pump {
            PumpModel::Resolved(rates) => {
                add_pump_terms(&mut fixed, &space, &basis, rates);
            }
            PumpModel::Compact {
                pumping_rate,
                light_shift,
            } => {
                fixed += (space.dissipator(&spin_ops.sp) + space.dissipator(&spin_ops.sz))
                    * Complex64::new(*pumping_rate, 0.0);
                // Δ_LS is quoted in the spin-precession convention where blue
                // detuning raises the measured frequency. The ladder above is
                // written +ω_L·m on the upper multiplet, which precesses the
                // opposite way, so the light shift enters negated here — the
                // unreduced equation fixes this sign.
                fixed += space
                    .commutator(&(spin_ops.sz.clone() * Complex64::new(-*light_shift, 0.0)));
            }
            PumpModel::Off => {}
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

        Ok(EffectiveSystem {
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
            pump,
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

    pub fn spin_ops(&self) -> &SpinOps {
        &self.spin_ops
    }

    pub fn drive_generator(&self) -> &CSuper {
        &self.drive_generator
    }

    pub fn pump_model(&self) -> &PumpModel {
        &self.pump
    }

    /// The unpolarized ground state 1/(4I+2).
    pub fn unpolarized(&self) -> CMatrix {
        let n = self.params.atom.ground_dim();
        CMatrix::identity(n, n).scale(1.0 / n as f64)
    }

    /// Self-consistent steady state (degenerate representative when the
    /// pump is off — see [`crate::full::FullSystem::steady_state`]).
    pub fn steady_state(&self, opts: &SteadyOptions) -> Result<SteadyState> {
        if matches!(self.pump, PumpModel::Off) {
            return Ok(degenerate_representative(
                &self.liouvillian,
                &self.spin,
                self.unpolarized(),
            ));
        }
        solve_self_consistent(&self.liouvillian, &self.spin, opts)
    }

    /// The population (rate-equation) subsystem: the exact restriction of
    /// this generator and its feedback to the diagonal sector. Magnetic
    /// grading makes the restriction closed — populations evolve among
    /// themselves once coherences start at zero.
    pub fn rate_equation_system(&self) -> (MeanFieldLiouvillian, SpinFunctionals) {
        let diag = self.space.diagonal_slots();
        let n_g = self.params.atom.ground_dim();
        let pop_space = StateSpace::restricted(n_g, |i, j| i == j);

        let fixed = submatrix(&self.liouvillian.fixed, &diag);
        // Only the ⟨S_z⟩ channel survives: S_± read coherence sectors that
        // are empty here.
        let channels = self
            .liouvillian
            .channels
            .iter()
            .filter(|ch| ch.label == "sz")
            .map(|ch| crate::superop::FeedbackChannel {
                label: ch.label,
                weight: subvector(&ch.weight, &diag),
                generator: submatrix(&ch.generator, &diag),
            })
            .collect();
        let spin = SpinFunctionals {
            sz: subvector(&self.spin.sz, &diag),
            sp: subvector(&self.spin.sp, &diag),
            sm: subvector(&self.spin.sm, &diag),
        };
        (
            MeanFieldLiouvillian {
                space: pop_space,
                fixed,
                channels,
            },
            spin,
        )
    }
}

/// Insert the pump transfer sandwiches and depletion terms directly into the
/// fixed generator (entries indexed by the restricted coordinate slots).
fn add_pump_terms(
    fixed: &mut CSuper,
    space: &StateSpace,
    basis: &HyperfineBasis,
    rates: &EffectiveRates,
) {
    let atom = basis.atom();
    let two_i = atom.nuclear_spin().twice();

    let ground_idx = |upper: bool, two_m: i32| -> Option<usize> {
        let two_f = multiplet(two_i, upper);
        if two_m.abs() > two_f {
            return None;
        }
        basis.ground_index(HalfInt::from_twice(two_f), HalfInt::from_twice(two_m))
    };

    for src_upper in [false, true] {
        let two_f = multiplet(two_i, src_upper);

        // Transfer gains: Γ⁽ᵏ⁾(M, M′)·|F′,M+k⟩⟨F,M| ρ |F,M′⟩⟨F′,M′+k|.
        for tgt_upper in [false, true] {
            for kind in JumpKind::ALL {
                let shift = kind.two_m_shift();
                for two_m in (-two_f..=two_f).step_by(2) {
                    for two_mp in (-two_f..=two_f).step_by(2) {
                        let rate = rates.transfer(kind, src_upper, tgt_upper, two_m, two_mp);
                        if rate == Complex64::ZERO {
                            continue;
                        }
                        let (Some(si), Some(sj)) = (
                            ground_idx(src_upper, two_m),
                            ground_idx(src_upper, two_mp),
                        ) else {
                            continue;
                        };
                        let (Some(ti), Some(tj)) = (
                            ground_idx(tgt_upper, two_m + shift),
                            ground_idx(tgt_upper, two_mp + shift),
                        ) else {
                            continue;
                        };
                        let (Some(row), Some(col)) =
                            (space.slot(ti, tj), space.slot(si, sj))
                        else {
                            continue;
                        };
                        fixed[(row, col)] += rate;
                    }
                }
            }
        }

        // Depletion and light shift: −(Γ_{FM} + Γ*_{FM′}) on each kept
        // coherence of the source multiplet.
        for two_m in (-two_f..=two_f).step_by(2) {
            for two_mp in (-two_f..=two_f).step_by(2) {
                let loss =
                    rates.depletion(src_upper, two_m) + rates.depletion(src_upper, two_mp).conj();
                if loss == Complex64::ZERO {
                    continue;
                }
                let (Some(i), Some(j)) =
                    (ground_idx(src_upper, two_m), ground_idx(src_upper, two_mp))
                else {
                    continue;
                };
                if let Some(slot) = space.slot(i, j) {
                    fixed[(slot, slot)] -= loss;
                }
            }
        }
    }
}
