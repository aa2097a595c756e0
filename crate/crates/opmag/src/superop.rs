//! Vectorized operator spaces and superoperator assembly.
//!
//! Density matrices are flattened to vectors so that master-equation
//! generators become ordinary matrices ("superoperators") amenable to dense
//! linear algebra. Two kinds of spaces appear:
//!
//! * the **full** space of an n-dimensional Hilbert space keeps all n²
//!   matrix entries;
//! * a **restricted** space keeps a chosen subset of entries (i, j). The
//!   eliminated ground-manifold equation drops coherences between the two
//!   hyperfine multiplets — they precess at the hyperfine splitting, orders
//!   of magnitude faster than every relaxation rate, and average away — so
//!   its generator acts on the kept coordinates only. Assembly on a
//!   restricted space projects both the domain and the image onto the kept
//!   set, which implements exactly that secular truncation.
//!
//! Coordinates are ordered by the pair list; for full spaces this is
//! row-major (i·n + j). The flattening convention is fixed by
//! [`StateSpace::vectorize`] and every builder here agrees with it.
//!
//! Spin-exchange makes the master equation quadratic in the state: the
//! generator contains terms weighted by ⟨S_z⟩ and ⟨S_±⟩ of the state itself.
//! [`MeanFieldLiouvillian`] captures this shape — a fixed linear part plus
//! feedback channels, each a scalar functional paired with the superoperator
//! it multiplies.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::basis::CMatrix;
use crate::error::{Error, Result};

/// Flattened operator (density-matrix) vector.
pub type CVector = DVector<Complex64>;
/// Superoperator matrix acting on [`CVector`]s.
pub type CSuper = DMatrix<Complex64>;

const I_UNIT: Complex64 = Complex64::new(0.0, 1.0);

// ---------------------------------------------------------------------------
// State spaces
// ---------------------------------------------------------------------------

/// A set of kept matrix coordinates (i, j) of an n×n operator space, with the
/// machinery to move between matrices and flat vectors and to assemble
/// superoperators directly on the kept set.
#[derive(Clone, Debug)]
pub struct StateSpace {
    hilbert_dim: usize,
    pairs: Vec<(usize, usize)>,
    /// Flat n² lookup from (i, j) to coordinate slot.
    index: Vec<Option<usize>>,
}

impl StateSpace {
    /// Keep every coordinate of an n×n operator space.
    pub fn full(n: usize) -> Self {
        let mut pairs = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                pairs.push((i, j));
            }
        }
        StateSpace::from_pairs(n, pairs)
    }

    /// Keep the coordinates selected by the predicate. The kept set must be
    /// closed under conjugation, (i, j) kept ⇔ (j, i) kept, so that Hermitian
    /// states stay representable; this is asserted.
    pub fn restricted(n: usize, mut keep: impl FnMut(usize, usize) -> bool) -> Self {
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if keep(i, j) {
                    pairs.push((i, j));
                }
            }
        }
        let space = StateSpace::from_pairs(n, pairs);
        for &(i, j) in &space.pairs {
            assert!(
                space.slot(j, i).is_some(),
                "kept coordinate set is not conjugation-symmetric: ({i},{j}) without ({j},{i})"
            );
        }
        space
    }

    fn from_pairs(n: usize, pairs: Vec<(usize, usize)>) -> Self {
        let mut index = vec![None; n * n];
        for (slot, &(i, j)) in pairs.iter().enumerate() {
            index[i * n + j] = Some(slot);
        }
        StateSpace {
            hilbert_dim: n,
            pairs,
            index,
        }
    }

    /// Dimension of the underlying Hilbert space.
    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    /// Number of kept coordinates — the superoperator dimension.
    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    /// Kept coordinates in slot order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Slot of matrix entry (i, j), if kept.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        self.index[i * self.hilbert_dim + j]
    }

    /// Slots of the diagonal coordinates (populations), in basis order.
    /// Diagonals are always kept by the restrictions used in this crate.
    pub fn diagonal_slots(&self) -> Vec<usize> {
        (0..self.hilbert_dim)
            .filter_map(|i| self.slot(i, i))
            .collect()
    }

    /// Flatten a matrix, dropping entries outside the kept set.
    pub fn vectorize(&self, m: &CMatrix) -> CVector {
        debug_assert_eq!(m.nrows(), self.hilbert_dim);
        CVector::from_iterator(self.dim(), self.pairs.iter().map(|&(i, j)| m[(i, j)]))
    }

    /// Expand a flat vector back to a matrix; dropped entries become zero.
    pub fn unvectorize(&self, v: &CVector) -> CMatrix {
        debug_assert_eq!(v.len(), self.dim());
        let n = self.hilbert_dim;
        let mut m = CMatrix::zeros(n, n);
        for (slot, &(i, j)) in self.pairs.iter().enumerate() {
            m[(i, j)] = v[slot];
        }
        m
    }

    /// Linear functional f with f ⋅ vec(X) = Tr[W·X] for kept X (use the
    /// unconjugated [`DVector::dot`]). Contributions of W through dropped
    /// coordinates are absent, consistent with states living in this space.
    pub fn functional(&self, w: &CMatrix) -> CVector {
        CVector::from_iterator(self.dim(), self.pairs.iter().map(|&(i, j)| w[(j, i)]))
    }

    /// The trace functional: f ⋅ vec(X) = Tr X.
    pub fn trace_functional(&self) -> CVector {
        CVector::from_iterator(
            self.dim(),
            self.pairs
                .iter()
                .map(|&(i, j)| if i == j { Complex64::ONE } else { Complex64::ZERO }),
        )
    }

    // -- superoperator builders --------------------------------------------

    /// X ↦ A·X.
    pub fn left_mult(&self, a: &CMatrix) -> CSuper {
        let mut s = CSuper::zeros(self.dim(), self.dim());
        for (col, &(k, l)) in self.pairs.iter().enumerate() {
            for i in 0..self.hilbert_dim {
                let v = a[(i, k)];
                if v != Complex64::ZERO {
                    if let Some(row) = self.slot(i, l) {
                        s[(row, col)] += v;
                    }
                }
            }
        }
        s
    }

    /// X ↦ X·B.
    pub fn right_mult(&self, b: &CMatrix) -> CSuper {
        let mut s = CSuper::zeros(self.dim(), self.dim());
        for (col, &(k, l)) in self.pairs.iter().enumerate() {
            for j in 0..self.hilbert_dim {
                let v = b[(l, j)];
                if v != Complex64::ZERO {
                    if let Some(row) = self.slot(k, j) {
                        s[(row, col)] += v;
                    }
                }
            }
        }
        s
    }

    /// X ↦ A·X·B.
    pub fn sandwich(&self, a: &CMatrix, b: &CMatrix) -> CSuper {
        let mut s = CSuper::zeros(self.dim(), self.dim());
        for (col, &(k, l)) in self.pairs.iter().enumerate() {
            for (row, &(i, j)) in self.pairs.iter().enumerate() {
                let v = a[(i, k)] * b[(l, j)];
                if v != Complex64::ZERO {
                    s[(row, col)] = v;
                }
            }
        }
        s
    }

    /// Hamiltonian part: X ↦ −i[H, X].
    pub fn commutator(&self, h: &CMatrix) -> CSuper {
        (self.left_mult(h) - self.right_mult(h)) * (-I_UNIT)
    }

    /// Lindblad dissipator: X ↦ L·X·L† − ½{L†L, X}.
    pub fn dissipator(&self, l: &CMatrix) -> CSuper {
        let ldl = l.adjoint() * l;
        self.sandwich(l, &l.adjoint())
            - (self.left_mult(&ldl) + self.right_mult(&ldl)).scale(0.5)
    }
}

// ---------------------------------------------------------------------------
// Sector extraction
// ---------------------------------------------------------------------------

/// Submatrix of a superoperator on a coordinate subset. Exact when the
/// generator maps the subset into itself (the caller's responsibility; the
/// magnetic-number grading proved elsewhere guarantees it for the sectors
/// used in this crate).
pub fn submatrix(m: &CSuper, coords: &[usize]) -> CSuper {
    CSuper::from_fn(coords.len(), coords.len(), |r, c| m[(coords[r], coords[c])])
}

/// Gather a sub-vector on a coordinate subset.
pub fn subvector(v: &CVector, coords: &[usize]) -> CVector {
    CVector::from_iterator(coords.len(), coords.iter().map(|&c| v[c]))
}

/// Scatter a sub-vector back into a zero vector of the ambient dimension.
pub fn scatter(sub: &CVector, coords: &[usize], dim: usize) -> CVector {
    let mut out = CVector::zeros(dim);
    for (k, &c) in coords.iter().enumerate() {
        out[c] = sub[k];
    }
    out
}

// ---------------------------------------------------------------------------
// Kernel extraction (steady states of a frozen generator)
// ---------------------------------------------------------------------------

/// Solve L·v = 0 with Tr v = 1 by replacing one row of L with the trace
/// functional. A trace-preserving generator annihilates the trace from the
/// left, so its kernel is generically one-dimensional and this bordered
/// system is regular; if the first choice of row happens to be degenerate,
/// a few other population rows are tried. Returns the solution and the
/// relative residual ‖L·v‖ / (‖L‖_F·‖v‖).
pub fn steady_vector(space: &StateSpace, gen: &CSuper) -> Result<(CVector, f64)> {
    let trace = space.trace_functional();
    let gen_norm = gen.norm();
    if gen_norm == 0.0 {
        return Err(Error::LinearSolve(
            "zero generator has no preferred steady state".into(),
        ));
    }

    let mut best: Option<(CVector, f64)> = None;
    for &row in space.diagonal_slots().iter().take(4) {
        let mut bordered = gen.clone();
        for col in 0..space.dim() {
            bordered[(row, col)] = trace[col];
        }
        let mut rhs = CVector::zeros(space.dim());
        rhs[row] = Complex64::ONE;
        let Some(sol) = bordered.lu().solve(&rhs) else {
            continue;
        };
        let residual = (gen * &sol).norm() / (gen_norm * sol.norm().max(f64::MIN_POSITIVE));
        if best.as_ref().is_none_or(|(_, r)| residual < *r) {
            let good_enough = residual < 1e-12;
            best = Some((sol, residual));
            if good_enough {
                break;
            }
        }
    }
    best.ok_or_else(|| {
        Error::LinearSolve("all bordered kernel systems were singular".into())
    })
}

/// Clean up a numerically extracted density matrix: make it exactly
/// Hermitian and unit-trace. Returns the cleaned matrix together with how
/// far the input was from Hermitian (useful as a sanity metric).
pub fn hermitize(rho: &CMatrix) -> (CMatrix, f64) {
    let adj = rho.adjoint();
    let defect = (rho - &adj).norm();
    let mut h = (rho + adj).scale(0.5);
    let tr: Complex64 = h.diagonal().iter().sum();
    if tr.re != 0.0 {
        h.scale_mut(1.0 / tr.re);
    }
    (h, defect)
}

// ---------------------------------------------------------------------------
// Mean-field generators
// ---------------------------------------------------------------------------

/// One nonlinear feedback channel: the state-dependent scalar ⟨W⟩ and the
/// superoperator it multiplies (rate coefficients already folded in).
#[derive(Clone, Debug)]
pub struct FeedbackChannel {
    pub label: &'static str,
    /// ⟨W⟩ = weight ⋅ vec(ρ), unconjugated dot.
    pub weight: CVector,
    pub generator: CSuper,
}

/// Build the three spin-exchange feedback channels on a given space.
///
/// Exchange collisions with the surrounding (identically prepared) vapor
/// enter in mean field as
///
/// dρ/dt ⊇ γ_se( ⟨S_z⟩·K_z[ρ] + ⟨S₊⟩·K₊[ρ] + ⟨S₋⟩·K₋[ρ] ),
///
/// with
///
/// K_z[X] = S₊XS₋ − S₋XS₊ + {X, S_z},
/// K₊[X] = S₋XS_z − S_zXS₋ + ½{X, S₋},
/// K₋[X] = S_zXS₊ − S₊XS_z + ½{X, S₊}.
///
/// Together with the isotropic part γ_se·Σ_α D[S_α] (which callers add into
/// the fixed generator via the total γ), these coefficients make exchange
/// conserve total spin exactly: under exchange alone d⟨S⟩/dt = 0. The
/// channel order ⟨S_z⟩, ⟨S₊⟩, ⟨S₋⟩ is relied on elsewhere.
pub fn spin_exchange_channels(
    space: &StateSpace,
    ops: &crate::basis::SpinOps,
    gamma_se: f64,
) -> Vec<FeedbackChannel> {
    let half = Complex64::new(0.5, 0.0);
    let k_z = space.sandwich(&ops.sp, &ops.sm) - space.sandwich(&ops.sm, &ops.sp)
        + space.left_mult(&ops.sz)
        + space.right_mult(&ops.sz);
    let k_p = space.sandwich(&ops.sm, &ops.sz) - space.sandwich(&ops.sz, &ops.sm)
        + (space.left_mult(&ops.sm) + space.right_mult(&ops.sm)) * half;
    let k_m = space.sandwich(&ops.sz, &ops.sp) - space.sandwich(&ops.sp, &ops.sz)
        + (space.left_mult(&ops.sp) + space.right_mult(&ops.sp)) * half;

    let rate = Complex64::new(gamma_se, 0.0);
    vec![
        FeedbackChannel {
            label: "sz",
            weight: space.functional(&ops.sz),
            generator: k_z * rate,
        },
        FeedbackChannel {
            label: "s+",
            weight: space.functional(&ops.sp),
            generator: k_p * rate,
        },
        FeedbackChannel {
            label: "s-",
            weight: space.functional(&ops.sm),
            generator: k_m * rate,
        },
    ]
}

/// A master-equation generator of the form
/// dρ/dt = L₀·ρ + Σ_c ⟨W_c⟩(ρ) · G_c·ρ,
/// the shape produced by mean-field spin-exchange.
#[derive(Clone, Debug)]
pub struct MeanFieldLiouvillian {
    pub space: StateSpace,
    pub fixed: CSuper,
    /// Feedback channels in a fixed order: ⟨S_z⟩, ⟨S₊⟩, ⟨S₋⟩ when present.
    pub channels: Vec<FeedbackChannel>,
}

impl MeanFieldLiouvillian {
    pub fn dim(&self) -> usize {
        self.fixed.nrows()
    }

    /// Full nonlinear right-hand side at state v.
    pub fn apply(&self, v: &CVector) -> CVector {
        let mut out = &self.fixed * v;
        for ch in &self.channels {
            let w = ch.weight.dot(v);
            if w != Complex64::ZERO {
                out += (&ch.generator * v) * w;
            }
        }
        out
    }

    /// Linear generator with the feedback scalars frozen at the given values
    /// (ordered as [`MeanFieldLiouvillian::channels`]).
    pub fn frozen(&self, means: &[Complex64]) -> CSuper {
        assert_eq!(means.len(), self.channels.len());
        let mut m = self.fixed.clone();
        for (ch, &w) in self.channels.iter().zip(means) {
            if w != Complex64::ZERO {
                m += &ch.generator * w;
            }
        }
        m
    }

    /// Exact linearization around a reference state v₀:
    /// δρ ↦ L(⟨W⟩(v₀))·δρ + Σ_c (weight_c ⋅ δρ)·G_c·v₀.
    /// The second piece is returned implicitly by providing, per channel, the
    /// column G_c·v₀ and the weight functional; callers assemble the rank-one
    /// updates in whatever sector structure suits them.
    pub fn linearization_parts(&self, v0: &CVector) -> (CSuper, Vec<(CVector, CVector)>) {
        let means: Vec<Complex64> = self.channels.iter().map(|ch| ch.weight.dot(v0)).collect();
        let frozen = self.frozen(&means);
        let rank_one = self
            .channels
            .iter()
            .map(|ch| (ch.weight.clone(), &ch.generator * v0))
            .collect();
        (frozen, rank_one)
    }
}
