//! Self-consistent steady states of mean-field master equations.
//!
//! Spin exchange makes the generator depend on ⟨S_z⟩ (and ⟨S_±⟩) of the
//! state itself, so "solve L·ρ = 0" becomes a fixed-point problem: freeze
//! the mean fields, extract the kernel of the frozen generator, re-measure
//! the means, repeat. Transverse means stay exactly zero along the way —
//! every term of the generator shifts the magnetic coherence order by a
//! fixed amount, so a state with only order-zero coherences can never
//! develop ⟨S_±⟩ — which reduces the iteration to a single real scalar
//! s = ⟨S_z⟩.
//!
//! The damped update s ← s + α(m(s) − s) converges quickly for every
//! parameter set in range; if it fails to settle, the solver falls back to
//! bisection of g(s) = m(s) − s on the physical interval [−1/2, 1/2], where
//! a sign change is guaranteed because |m| ≤ 1/2.

use num_complex::Complex64;

use crate::basis::CMatrix;
use crate::error::{Error, Result};
use crate::superop::{hermitize, steady_vector, CVector, MeanFieldLiouvillian};

/// Spin expectation functionals on the solver's state space; built once by
/// whoever assembles the generator (they know the operators and the space).
#[derive(Clone, Debug)]
pub struct SpinFunctionals {
    pub sz: CVector,
    pub sp: CVector,
    pub sm: CVector,
}

impl SpinFunctionals {
    pub fn mean_sz(&self, v: &CVector) -> f64 {
        self.sz.dot(v).re
    }

    /// Largest transverse spin magnitude — should vanish at a steady state.
    pub fn transverse_magnitude(&self, v: &CVector) -> f64 {
        self.sp.dot(v).norm().max(self.sm.dot(v).norm())
    }
}

/// Controls for [`solve_self_consistent`].
#[derive(Clone, Copy, Debug)]
pub struct SteadyOptions {
    /// Damping factor α of the fixed-point update.
    pub damping: f64,
    /// Convergence threshold on |m(s) − s|.
    pub tol: f64,
    /// Damped iterations before switching to bisection.
    pub max_damped_iterations: usize,
    /// Acceptable relative residual ‖L·v‖/(‖L‖·‖v‖) of the final kernel.
    pub residual_tol: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions {
            damping: 0.5,
            tol: 1e-12,
            max_damped_iterations: 80,
            residual_tol: 1e-10,
        }
    }
}

/// A converged steady state.
#[derive(Clone, Debug)]
pub struct SteadyState {
    /// Unit-trace Hermitian density matrix (in the solver's state space).
    pub rho: CMatrix,
    /// Flattened form of `rho` on the same space.
    pub vec: CVector,
    /// Self-consistent ⟨S_z⟩.
    pub mean_sz: f64,
    /// Residual transverse spin |⟨S_±⟩| (a numerical-zero check).
    pub transverse: f64,
    /// Kernel solves performed.
    pub iterations: usize,
    /// Relative residual of the final linear solve.
    pub residual: f64,
    /// True when the generator had no pumping and the steady state was
    /// chosen as a representative of a degenerate stationary family.
    pub degenerate: bool,
}

impl SteadyState {
    /// Diagonal of ρ in basis order.
    pub fn populations(&self) -> Vec<f64> {
        self.rho.diagonal().iter().map(|p| p.re).collect()
    }
}

fn frozen_means(s: f64, n_channels: usize) -> Vec<Complex64> {
    // Mean-field channels are ordered [⟨S_z⟩, ⟨S₊⟩, ⟨S₋⟩]; transverse means
    // are pinned to zero throughout (see module docs).
    let mut means = vec![Complex64::ZERO; n_channels];
    if n_channels > 0 {
        means[0] = Complex64::new(s, 0.0);
    }
    means
}

/// Kernel of the generator frozen at ⟨S_z⟩ = s, and the measured mean.
fn measure(
    lv: &MeanFieldLiouvillian,
    spin: &SpinFunctionals,
    s: f64,
) -> Result<(CVector, f64, f64)> {
    let gen = lv.frozen(&frozen_means(s, lv.channels.len()));
    let (v, residual) = steady_vector(&lv.space, &gen)?;
    let m = spin.mean_sz(&v);
    Ok((v, m, residual))
}

/// Find the self-consistent steady state of a mean-field generator.
pub fn solve_self_consistent(
    lv: &MeanFieldLiouvillian,
    spin: &SpinFunctionals,
    opts: &SteadyOptions,
) -> Result<SteadyState> {
    let mut iterations = 0usize;
    let mut history: Vec<f64> = Vec::new();

    // No feedback channels: one linear solve and we are done.
    if lv.channels.is_empty() {
        let (v, _m, residual) = measure_with(lv, spin, 0.0, &mut iterations)?;
        return finish(lv, spin, v, iterations, residual, opts);
    }

    let mut s = 0.0f64;
    for _ in 0..opts.max_damped_iterations {
        let (v, m, residual) = measure_with(lv, spin, s, &mut iterations)?;
        let delta = m - s;
        history.push(delta);
        if delta.abs() < opts.tol {
            return finish(lv, spin, v, iterations, residual, opts);
        }
        s += opts.damping * delta;
    }

    // Damped iteration did not settle (it can cycle when the feedback is
    // strong); bisect g(s) = m(s) − s instead. |m| ≤ 1/2 guarantees
    // g(−1/2) ≥ 0 ≥ g(+1/2), so the root is bracketed from the start.
    let (mut lo, mut hi) = (-0.5f64, 0.5f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let (v, m, residual) = measure_with(lv, spin, mid, &mut iterations)?;
        let g = m - mid;
        history.push(g);
        if g.abs() < opts.tol || hi - lo < f64::EPSILON {
            return finish(lv, spin, v, iterations, residual, opts);
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    Err(Error::NonConvergence {
        iterations,
        last_step: history.last().copied().unwrap_or(f64::NAN),
        residual: f64::NAN,
        history,
    })
}

fn measure_with(
    lv: &MeanFieldLiouvillian,
    spin: &SpinFunctionals,
    s: f64,
    iterations: &mut usize,
) -> Result<(CVector, f64, f64)> {
    *iterations += 1;
    measure(lv, spin, s)
}

fn finish(
    lv: &MeanFieldLiouvillian,
    spin: &SpinFunctionals,
    v: CVector,
    iterations: usize,
    residual: f64,
    opts: &SteadyOptions,
) -> Result<SteadyState> {
    if residual > opts.residual_tol {
        return Err(Error::NonConvergence {
            iterations,
            last_step: 0.0,
            residual,
            history: vec![],
        });
    }
    let (rho, _defect) = hermitize(&lv.space.unvectorize(&v));
    let vec = lv.space.vectorize(&rho);
    let mean_sz = spin.mean_sz(&vec);
    let transverse = spin.transverse_magnitude(&vec);
    Ok(SteadyState {
        rho,
        vec,
        mean_sz,
        transverse,
        iterations,
        residual,
        degenerate: false,
    })
}

/// Package a known stationary state (used when the pump is off and the
/// stationary family is degenerate: relaxation alone conserves ⟨I_z⟩, so
/// there is a continuum of steady states and the unpolarized one is the
/// physically distinguished representative).
pub fn degenerate_representative(
    lv: &MeanFieldLiouvillian,
    spin: &SpinFunctionals,
    rho: CMatrix,
) -> SteadyState {
    let vec = lv.space.vectorize(&rho);
    let residual = {
        let out = lv.apply(&vec);
        out.norm() / (lv.fixed.norm() * vec.norm()).max(f64::MIN_POSITIVE)
    };
    SteadyState {
        mean_sz: spin.mean_sz(&vec),
        transverse: spin.transverse_magnitude(&vec),
        rho,
        vec,
        iterations: 0,
        residual,
        degenerate: true,
    }
}

/// Smallest eigenvalue of a Hermitian matrix — positivity diagnostic for
/// density matrices (tiny negative values are numerical noise).
pub fn min_eigenvalue(rho: &CMatrix) -> f64 {
    let eig = rho.clone().symmetric_eigen();
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}
