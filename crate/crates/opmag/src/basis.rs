//! Hyperfine bases, angular-momentum algebra, and the operator zoo shared by
//! the full and eliminated master equations.
//!
//! # State spaces
//!
//! A single alkali atom on its D1 line carries a nuclear spin I coupled to one
//! valence electron. The electronic ground level (²S₁/₂) splits into two
//! hyperfine multiplets with total angular momentum F = a ≡ I + 1/2 and
//! F = b ≡ I − 1/2, for 4I + 2 ground states; the first excited level (²P₁/₂)
//! contributes another 4I + 2, so the full D1 space has dimension 8I + 4. The
//! ²P₃/₂ fine-structure partner (the D2 line) is outside the model and is
//! projected away during construction.
//!
//! # Conventions (load-bearing, do not change silently)
//!
//! * Clebsch-Gordan coefficients follow the Condon-Shortley phase convention.
//!   Several eliminated rates are built from *products* of CG coefficients and
//!   are sign-sensitive; everything in this crate must agree on the phases.
//! * Basis ordering is deterministic: ground manifold before excited, F
//!   descending (a before b), M descending within a multiplet. Serialized
//!   matrices are therefore comparable across runs and platforms.
//! * Uncoupled tensor factors are ordered nucleus ⊗ electron, with magnetic
//!   quantum numbers enumerated in descending order in each factor.
//! * The excited manifold is built in two coupling steps: orbital L = 1 with
//!   electron spin 1/2 into fine-structure J (keeping only J = 1/2), then
//!   nucleus with J into hyperfine F.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix; the working currency of every operator here.
pub type CMatrix = DMatrix<Complex64>;

#[inline]
pub(crate) fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

// ---------------------------------------------------------------------------
// Half-integers
// ---------------------------------------------------------------------------

/// An angular-momentum quantum number (j or m), stored exactly as 2×value.
///
/// Keeping the doubled value in an integer makes loops over magnetic numbers
/// and triangle checks exact; the float view is only for display and algebra
/// that genuinely needs reals.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct HalfInt {
    twice: i32,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };
    pub const HALF: HalfInt = HalfInt { twice: 1 };

    /// Construct from 2×value (so `from_twice(7)` is 7/2).
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt { twice }
    }

    /// Construct from an integer value.
    pub const fn from_int(value: i32) -> Self {
        HalfInt { twice: 2 * value }
    }

    /// Validating conversion from a float (config files carry spins as JSON
    /// numbers). Accepts values within 1e-9 of a half-integer.
    pub fn try_from_f64(value: f64) -> Result<Self> {
        let twice = (2.0 * value).round();
        if !value.is_finite() || (2.0 * value - twice).abs() > 1e-9 {
            return Err(Error::InvalidNuclearSpin(value));
        }
        Ok(HalfInt {
            twice: twice as i32,
        })
    }

    pub const fn twice(self) -> i32 {
        self.twice
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

// ---------------------------------------------------------------------------
// Clebsch-Gordan coefficients
// ---------------------------------------------------------------------------

/// Exact-enough factorial for the small arguments appearing in CG algebra.
///
/// Arguments stay below ~2(j₁+j₂)+1; u128 keeps the product exact up to 33!
/// and the final conversion to f64 rounds once.
fn factorial(n: i32) -> f64 {
    debug_assert!((0..=33).contains(&n), "factorial: argument {n} out of range");
    let mut acc: u128 = 1;
    for k in 2..=n as u128 {
        acc *= k;
    }
    acc as f64
}

/// ⟨j₁ m₁; j₂ m₂ | J M⟩ in the Condon-Shortley convention (Racah's closed
/// form). Invalid quantum numbers — broken triangle inequality, m₁+m₂ ≠ M,
/// |m| > j, mismatched integer/half-integer character — give 0 rather than an
/// error, which lets selection rules fall out of plain arithmetic.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> f64 {
    let (tj1, tm1) = (j1.twice(), m1.twice());
    let (tj2, tm2) = (j2.twice(), m2.twice());
    let (tj, tm) = (j.twice(), m.twice());

    // Selection rules. Everything below assumes these hold, so bail early.
    if tm1 + tm2 != tm {
        return 0.0;
    }
    if tj1 < 0 || tj2 < 0 || tj < 0 {
        return 0.0;
    }
    if tm1.abs() > tj1 || tm2.abs() > tj2 || tm.abs() > tj {
        return 0.0;
    }
    // m and j must have the same parity (both integer or both half-odd).
    if (tj1 - tm1) % 2 != 0 || (tj2 - tm2) % 2 != 0 || (tj - tm) % 2 != 0 {
        return 0.0;
    }
    // Triangle inequality and integer coupling: j ∈ {|j1−j2|, …, j1+j2}.
    if tj < (tj1 - tj2).abs() || tj > tj1 + tj2 || (tj1 + tj2 - tj) % 2 != 0 {
        return 0.0;
    }

    // All of the following are guaranteed integral by the parity checks.
    let half = |t: i32| -> i32 {
        debug_assert!(t % 2 == 0);
        t / 2
    };
    let p1 = half(tj1 + tj2 - tj); // j1 + j2 − J
    let p2 = half(tj1 - tj2 + tj); // j1 − j2 + J
    let p3 = half(-tj1 + tj2 + tj); // −j1 + j2 + J
    let p4 = half(tj1 + tj2 + tj) + 1; // j1 + j2 + J + 1

    let q1 = half(tj + tm); // J + M
    let q2 = half(tj - tm); // J − M
    let q3 = half(tj1 - tm1); // j1 − m1
    let q4 = half(tj1 + tm1); // j1 + m1
    let q5 = half(tj2 - tm2); // j2 − m2
    let q6 = half(tj2 + tm2); // j2 + m2

    let prefactor = f64::from(tj + 1)
        * factorial(p1)
        * factorial(p2)
        * factorial(p3)
        / factorial(p4)
        * factorial(q1)
        * factorial(q2)
        * factorial(q3)
        * factorial(q4)
        * factorial(q5)
        * factorial(q6);

    // Summation bounds keep every factorial argument non-negative.
    let r1 = half(tj - tj2 + tm1); // J − j2 + m1
    let r2 = half(tj - tj1 - tm2); // J − j1 − m2
    let k_min = 0.max(-r1).max(-r2);
    let k_max = p1.min(q3).min(q6);

    let mut sum = 0.0;
    for k in k_min..=k_max {
        let term = factorial(k)
            * factorial(p1 - k)
            * factorial(q3 - k)
            * factorial(q6 - k)
            * factorial(r1 + k)
            * factorial(r2 + k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / term;
    }

    prefactor.sqrt() * sum
}

// ---------------------------------------------------------------------------
// Atom specification
// ---------------------------------------------------------------------------

/// Nuclear spin and hyperfine splittings defining the single-atom Hilbert
/// space, plus the electron gyromagnetic ratio that converts fields to
/// frequencies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtomSpec {
    nuclear_spin: HalfInt,
    delta_s_hz: f64,
    delta_p_hz: f64,
    gyromagnetic_ratio_e_hz_per_g: f64,
}

impl AtomSpec {
    /// Build a validated atom. `delta_s_hz`/`delta_p_hz` are the ground and
    /// excited hyperfine splittings (Hz, positive); the gyromagnetic ratio is
    /// in Hz per gauss.
    pub fn new(
        nuclear_spin: HalfInt,
        delta_s_hz: f64,
        delta_p_hz: f64,
        gyromagnetic_ratio_e_hz_per_g: f64,
    ) -> Result<Self> {
        if nuclear_spin.twice() < 1 {
            return Err(Error::InvalidNuclearSpin(nuclear_spin.as_f64()));
        }
        for (name, v) in [("delta_s_hz", delta_s_hz), ("delta_p_hz", delta_p_hz)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be a positive finite frequency, got {v}"),
                });
            }
        }
        if !(gyromagnetic_ratio_e_hz_per_g > 0.0) || !gyromagnetic_ratio_e_hz_per_g.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gyromagnetic_ratio_e_hz_per_g",
                reason: format!(
                    "must be a positive finite ratio, got {gyromagnetic_ratio_e_hz_per_g}"
                ),
            });
        }
        Ok(AtomSpec {
            nuclear_spin,
            delta_s_hz,
            delta_p_hz,
            gyromagnetic_ratio_e_hz_per_g,
        })
    }

    /// Cesium-133: I = 7/2, ground splitting 9.193 GHz, excited (²P₁/₂)
    /// splitting 1.168 GHz, electron gyromagnetic ratio 2.8025 MHz/G.
    pub fn cesium() -> Self {
        AtomSpec::new(HalfInt::from_twice(7), 9.193e9, 1.168e9, 2.802_495_3e6)
            .expect("cesium constants are valid")
    }

    pub fn nuclear_spin(&self) -> HalfInt {
        self.nuclear_spin
    }

    pub fn delta_s_hz(&self) -> f64 {
        self.delta_s_hz
    }

    pub fn delta_p_hz(&self) -> f64 {
        self.delta_p_hz
    }

    pub fn gyromagnetic_ratio_e_hz_per_g(&self) -> f64 {
        self.gyromagnetic_ratio_e_hz_per_g
    }

    /// Upper hyperfine multiplet a = I + 1/2.
    pub fn f_upper(&self) -> HalfInt {
        HalfInt::from_twice(self.nuclear_spin.twice() + 1)
    }

    /// Lower hyperfine multiplet b = I − 1/2.
    pub fn f_lower(&self) -> HalfInt {
        HalfInt::from_twice(self.nuclear_spin.twice() - 1)
    }

    /// Ground-manifold dimension 4I + 2.
    pub fn ground_dim(&self) -> usize {
        (2 * self.nuclear_spin.twice() + 2) as usize
    }

    /// Full D1 dimension 8I + 4.
    pub fn full_dim(&self) -> usize {
        2 * self.ground_dim()
    }

    /// Number of ground Zeeman ladders, 2I + 1; the Larmor frequency of the
    /// coupled atom is the electron value divided by this.
    pub fn slowing_factor(&self) -> f64 {
        f64::from(self.nuclear_spin.twice()) + 1.0
    }

    /// Signed Larmor frequency γ_e·B_z/(2I+1) in Hz for a field in gauss.
    pub fn larmor_hz(&self, b_z_gauss: f64) -> f64 {
        self.gyromagnetic_ratio_e_hz_per_g * b_z_gauss / self.slowing_factor()
    }
}

// ---------------------------------------------------------------------------
// Level bookkeeping
// ---------------------------------------------------------------------------

/// Which electronic level a hyperfine state belongs to.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Manifold {
    /// ²S₁/₂ ground states.
    Ground,
    /// ²P₁/₂ excited states (D1 only; the J = 3/2 partner is projected out).
    Excited,
}

/// One hyperfine level |F, M⟩ in a given electronic manifold.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Level {
    pub manifold: Manifold,
    pub f: HalfInt,
    pub m: HalfInt,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.manifold {
            Manifold::Ground => 's',
            Manifold::Excited => 'p',
        };
        write!(f, "|{}_{},{}⟩", tag, self.f, self.m)
    }
}

/// The set of electron-spin operators on the ground manifold, expressed in
/// the coupled |F, M⟩ basis. S_± = S_x ± iS_y.
#[derive(Clone, Debug)]
pub struct SpinOps {
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
    pub sp: CMatrix,
    pub sm: CMatrix,
}

/// Collisional de-excitation (quench) channels. Each maps ²P₁/₂ → ²S₁/₂ with
/// the nucleus as a spectator; indices are the electron angular-momentum
/// transfer m ∈ {0, ±1}.
#[derive(Clone, Debug)]
pub struct QuenchOps {
    pub a_zero: CMatrix,
    pub a_plus: CMatrix,
    pub a_minus: CMatrix,
}

impl QuenchOps {
    pub fn iter(&self) -> impl Iterator<Item = &CMatrix> {
        [&self.a_zero, &self.a_plus, &self.a_minus].into_iter()
    }
}

/// Spontaneous-decay channels |s⟩⟨p_l| ⊗ 1 for the three orbital components
/// l ∈ {+1, 0, −1} of the p shell, restricted to the J = 1/2 block.
/// `d_plus` doubles as the pump coupling: a left-circularly polarized beam
/// propagating along z drives Ω′(D₊ + D₊†).
#[derive(Clone, Debug)]
pub struct OpticalOps {
    pub d_plus: CMatrix,
    pub d_zero: CMatrix,
    pub d_minus: CMatrix,
}

impl OpticalOps {
    pub fn iter(&self) -> impl Iterator<Item = &CMatrix> {
        [&self.d_plus, &self.d_zero, &self.d_minus].into_iter()
    }
}

// ---------------------------------------------------------------------------
// The basis itself
// ---------------------------------------------------------------------------

/// Hyperfine level enumeration plus the unitary coupling tables needed to
/// express spin and jump operators in the coupled basis.
///
/// All matrices are immutable after construction; a basis can be shared
/// freely across threads.
#[derive(Clone, Debug)]
pub struct HyperfineBasis {
    atom: AtomSpec,
    levels: Vec<Level>,
    /// (4I+2)×(4I+2) unitary; column k is the coupled ground level
    /// `levels[k]` expanded over nucleus ⊗ electron-spin product states.
    ground_coupling: CMatrix,
    /// Same shape for the excited manifold, expanded over nucleus ⊗ |J=1/2, m_J⟩.
    excited_coupling: CMatrix,
    /// 6×2 isometry embedding |J=1/2, m_J⟩ into orbital ⊗ spin (m_l, m_s)
    /// product states; columns ordered m_J = +1/2, −1/2.
    fine_isometry: CMatrix,
}

/// Magnetic numbers of a factor space in descending order, as 2m values.
fn descending_two_m(two_j: i32) -> impl Iterator<Item = i32> {
    (-two_j..=two_j).rev().step_by(2)
}

impl HyperfineBasis {
    /// Enumerate the hyperfine levels and build the coupling tables.
    pub fn build(atom: AtomSpec) -> Self {
        let two_i = atom.nuclear_spin().twice();
        let n_g = atom.ground_dim();

        let mut levels = Vec::with_capacity(2 * n_g);
        for manifold in [Manifold::Ground, Manifold::Excited] {
            for two_f in [two_i + 1, two_i - 1] {
                for two_m in descending_two_m(two_f) {
                    levels.push(Level {
                        manifold,
                        f: HalfInt::from_twice(two_f),
                        m: HalfInt::from_twice(two_m),
                    });
                }
            }
        }

        // Ground coupling: |F M⟩ = Σ ⟨I m_I; 1/2 m_s | F M⟩ |m_I⟩⊗|m_s⟩.
        let half = HalfInt::HALF;
        let nuclear: Vec<i32> = descending_two_m(two_i).collect();
        let spin: Vec<i32> = vec![1, -1];
        let mut ground_coupling = CMatrix::zeros(n_g, n_g);
        for (col, level) in levels[..n_g].iter().enumerate() {
            for (ni, &two_mi) in nuclear.iter().enumerate() {
                for (si, &two_ms) in spin.iter().enumerate() {
                    let c = clebsch_gordan(
                        atom.nuclear_spin(),
                        HalfInt::from_twice(two_mi),
                        half,
                        HalfInt::from_twice(two_ms),
                        level.f,
                        level.m,
                    );
                    ground_coupling[(ni * 2 + si, col)] = re(c);
                }
            }
        }

        // Fine structure: couple orbital L = 1 to electron spin 1/2; keep the
        // two J = 1/2 columns. Rows run over (m_l, m_s) with m_l = +1, 0, −1.
        let one = HalfInt::from_int(1);
        let orbital: Vec<i32> = vec![2, 0, -2];
        let mut fine_isometry = CMatrix::zeros(6, 2);
        for (col, &two_mj) in spin.iter().enumerate() {
            for (oi, &two_ml) in orbital.iter().enumerate() {
                for (si, &two_ms) in spin.iter().enumerate() {
                    let c = clebsch_gordan(
                        one,
                        HalfInt::from_twice(two_ml),
                        half,
                        HalfInt::from_twice(two_ms),
                        half,
                        HalfInt::from_twice(two_mj),
                    );
                    fine_isometry[(oi * 2 + si, col)] = re(c);
                }
            }
        }

        // Excited hyperfine coupling: |F M⟩ = Σ ⟨I m_I; 1/2 m_J | F M⟩
        // over nucleus ⊗ |J=1/2, m_J⟩ rows. Same shape as the ground table.
        let mut excited_coupling = CMatrix::zeros(n_g, n_g);
        for (col, level) in levels[n_g..].iter().enumerate() {
            for (ni, &two_mi) in nuclear.iter().enumerate() {
                for (ji, &two_mj) in spin.iter().enumerate() {
                    let c = clebsch_gordan(
                        atom.nuclear_spin(),
                        HalfInt::from_twice(two_mi),
                        half,
                        HalfInt::from_twice(two_mj),
                        level.f,
                        level.m,
                    );
                    excited_coupling[(ni * 2 + ji, col)] = re(c);
                }
            }
        }

        HyperfineBasis {
            atom,
            levels,
            ground_coupling,
            excited_coupling,
            fine_isometry,
        }
    }

    pub fn atom(&self) -> &AtomSpec {
        &self.atom
    }

    /// All levels, ground block first; within each manifold F descending then
    /// M descending.
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn ground_levels(&self) -> &[Level] {
        &self.levels[..self.atom.ground_dim()]
    }

    pub fn excited_levels(&self) -> &[Level] {
        &self.levels[self.atom.ground_dim()..]
    }

    /// Position of a level in the full enumeration.
    pub fn level_index(&self, level: Level) -> Option<usize> {
        self.levels.iter().position(|&l| l == level)
    }

    /// Position of |F M⟩ within the ground manifold (also its row/column in
    /// ground-space operators).
    pub fn ground_index(&self, f: HalfInt, m: HalfInt) -> Option<usize> {
        self.levels[..self.atom.ground_dim()]
            .iter()
            .position(|l| l.f == f && l.m == m)
    }

    pub fn ground_coupling(&self) -> &CMatrix {
        &self.ground_coupling
    }

    pub fn excited_coupling(&self) -> &CMatrix {
        &self.excited_coupling
    }

    pub fn fine_isometry(&self) -> &CMatrix {
        &self.fine_isometry
    }

    /// Express an operator given in the uncoupled nucleus ⊗ electron basis in
    /// the coupled ground basis: U† X U.
    fn to_coupled_ground(&self, x: &CMatrix) -> CMatrix {
        self.ground_coupling.adjoint() * x * &self.ground_coupling
    }

    /// Electron-spin operators on the ground manifold in the coupled basis.
    pub fn electron_spin_ops(&self) -> SpinOps {
        let n_i = self.atom.nuclear_spin().twice() as usize + 1;
        let eye_n = CMatrix::identity(n_i, n_i);

        // Spin-1/2 ladder in the (+1/2, −1/2) ordering.
        let mut sp2 = CMatrix::zeros(2, 2);
        sp2[(0, 1)] = re(1.0);
        let sm2 = sp2.adjoint();
        let sz2 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![re(0.5), re(-0.5)]));

        let sp = self.to_coupled_ground(&eye_n.kronecker(&sp2));
        let sm = self.to_coupled_ground(&eye_n.kronecker(&sm2));
        let sz = self.to_coupled_ground(&eye_n.kronecker(&sz2));
        let sx = (&sp + &sm).scale(0.5);
        let sy = (&sp - &sm) * Complex64::new(0.0, -0.5);
        SpinOps { sx, sy, sz, sp, sm }
    }

    /// Total angular momentum F = I + S on the ground manifold, built directly
    /// from the coupled enumeration (diagonal F_z, in-multiplet ladders).
    /// Used as an independent cross-check of the coupling tables.
    pub fn total_f_ops(&self) -> SpinOps {
        let n = self.atom.ground_dim();
        let mut fz = CMatrix::zeros(n, n);
        let mut fp = CMatrix::zeros(n, n);
        for (k, level) in self.ground_levels().iter().enumerate() {
            fz[(k, k)] = re(level.m.as_f64());
            // F₊|F,M⟩ = √(F(F+1) − M(M+1)) |F,M+1⟩; target is one slot up in
            // the M-descending enumeration, when it exists.
            if level.m < level.f {
                let f = level.f.as_f64();
                let m = level.m.as_f64();
                fp[(k - 1, k)] = re((f * (f + 1.0) - m * (m + 1.0)).sqrt());
            }
        }
        let fm = fp.adjoint();
        let fx = (&fp + &fm).scale(0.5);
        let fy = (&fp - &fm) * Complex64::new(0.0, -0.5);
        SpinOps {
            sx: fx,
            sy: fy,
            sz: fz,
            sp: fp,
            sm: fm,
        }
    }

    /// Ground ← excited block of a full-space operator whose electron part is
    /// the 2×(J=1/2-block) matrix `electron` and whose nuclear part is the
    /// identity.
    fn ground_from_excited_block(&self, electron: &CMatrix) -> CMatrix {
        let n_i = self.atom.nuclear_spin().twice() as usize + 1;
        let eye_n = CMatrix::identity(n_i, n_i);
        self.ground_coupling.adjoint() * eye_n.kronecker(electron) * &self.excited_coupling
    }

    /// Assemble a full-space (8I+4) matrix with the given ground←excited block.
    fn promote_block(&self, block: CMatrix) -> CMatrix {
        let n_g = self.atom.ground_dim();
        let mut full = CMatrix::zeros(2 * n_g, 2 * n_g);
        full.view_mut((0, n_g), (n_g, n_g)).copy_from(&block);
        full
    }

    /// Quench jump operators A_m.
    ///
    /// A₀ = Σ_m |²S₁/₂, m⟩⟨²P₁/₂, m| preserves the electron magnetic number;
    /// A_{±1} = |²S₁/₂, ∓1/2⟩⟨²P₁/₂, ±1/2| transfer one unit to the collision
    /// partner. Together they de-excite every ²P₁/₂ state:
    /// Σ_m A_m†A_m = 2·(excited projector) — the m = 0 channel contributes one
    /// unit and the m = ±1 pair the second.
    pub fn quench_jump_ops(&self) -> QuenchOps {
        // Electron parts in the (m = +1/2, −1/2) ordering, rows = ground spin,
        // columns = excited J = 1/2.
        let mut k0 = CMatrix::zeros(2, 2);
        k0[(0, 0)] = re(1.0);
        k0[(1, 1)] = re(1.0);
        let mut kp = CMatrix::zeros(2, 2);
        kp[(1, 0)] = re(1.0); // |−1/2⟩⟨+1/2|
        let mut km = CMatrix::zeros(2, 2);
        km[(0, 1)] = re(1.0); // |+1/2⟩⟨−1/2|

        QuenchOps {
            a_zero: self.promote_block(self.ground_from_excited_block(&k0)),
            a_plus: self.promote_block(self.ground_from_excited_block(&kp)),
            a_minus: self.promote_block(self.ground_from_excited_block(&km)),
        }
    }

    /// Spontaneous-decay channels D_l = |s⟩⟨p_l| ⊗ 1_spin ⊗ 1_nucleus,
    /// restricted to the J = 1/2 excited block. They satisfy
    /// Σ_l D_l†D_l = excited projector (isotropic emission), and each channel
    /// annihilates the ground manifold and conserves m_I.
    pub fn optical_jump_ops(&self) -> OpticalOps {
        // E_l: 2×6 orbital projection (m_s rows; (m_l, m_s) columns with
        // m_l = +1, 0, −1 blocks of two).
        let channel = |l_slot: usize| -> CMatrix {
            let mut e = CMatrix::zeros(2, 6);
            e[(0, l_slot * 2)] = re(1.0);
            e[(1, l_slot * 2 + 1)] = re(1.0);
            let electron = e * &self.fine_isometry; // 2×2 on the J = 1/2 block
            self.promote_block(self.ground_from_excited_block(&electron))
        };
        OpticalOps {
            d_plus: channel(0),
            d_zero: channel(1),
            d_minus: channel(2),
        }
    }

    /// Projector onto the ground manifold in the full space.
    pub fn ground_projector(&self) -> CMatrix {
        let n_g = self.atom.ground_dim();
        let mut p = CMatrix::zeros(2 * n_g, 2 * n_g);
        for k in 0..n_g {
            p[(k, k)] = re(1.0);
        }
        p
    }

    /// Projector onto the excited manifold in the full space.
    pub fn excited_projector(&self) -> CMatrix {
        let n_g = self.atom.ground_dim();
        let mut p = CMatrix::zeros(2 * n_g, 2 * n_g);
        for k in n_g..2 * n_g {
            p[(k, k)] = re(1.0);
        }
        p
    }

    /// Embed a ground-manifold operator into the full space (zero on and
    /// between excited states).
    pub fn embed_ground(&self, op: &CMatrix) -> CMatrix {
        let n_g = self.atom.ground_dim();
        assert_eq!(op.nrows(), n_g, "embed_ground: operator is not ground-sized");
        let mut full = CMatrix::zeros(2 * n_g, 2 * n_g);
        full.view_mut((0, 0), (n_g, n_g)).copy_from(op);
        full
    }
}
