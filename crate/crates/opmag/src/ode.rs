//! Adaptive Dormand-Prince 5(4) integration for vectorized master equations.
//!
//! The right-hand side is an arbitrary closure over flattened states, which
//! lets callers rebuild state-dependent (mean-field) generators at every
//! stage evaluation instead of freezing them across a step — the feedback
//! scalars ⟨S_z⟩, ⟨S_±⟩ are cheap dot products, and evaluating them exactly
//! keeps conservation-law tests honest at tight tolerances.
//!
//! Error control uses the weighted rms norm
//! `err = sqrt(mean(|e_i| / (atol + rtol·max(|y_i|, |ŷ_i|)))²)`, accepting a
//! step when err ≤ 1, with the usual fifth-order step-size update clamped to
//! [0.2, 5]. The scheme is FSAL: the last stage of an accepted step is the
//! first stage of the next.

use crate::error::{Error, Result};
use crate::superop::CVector;

/// Dormand-Prince coefficient tableau (the classic DOPRI5 pair).
mod tableau {
    pub const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    pub const A: [&[f64]; 7] = [
        &[],
        &[0.2],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
        ],
        &[
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
        ],
        &[
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    /// Fifth-order weights (row 7 of A — FSAL).
    pub const B: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    /// B minus the embedded fourth-order weights: the error estimator.
    pub const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
}

/// Integration controls. The defaults suit master-equation work where state
/// entries are populations and coherences of order ≤ 1.
#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First step size; estimated from the initial slope when `None`.
    pub h_initial: Option<f64>,
    /// Hard cap on accepted+rejected steps before giving up.
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-8,
            atol: 1e-10,
            h_initial: None,
            max_steps: 2_000_000,
        }
    }
}

/// Outcome of a successful integration.
#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub t: f64,
    pub y: CVector,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

fn weighted_rms(err: &CVector, y_old: &CVector, y_new: &CVector, opts: &OdeOptions) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y_old.iter().zip(y_new.iter()))
        .map(|(e, (a, b))| {
            let scale = opts.atol + opts.rtol * a.norm().max(b.norm());
            let r = e.norm() / scale;
            r * r
        })
        .sum();
    (sum / n).sqrt()
}

/// Integrate dy/dt = f(t, y) from `t0` to `t_end` (forward in time).
/// `on_step` fires after every accepted step, including the final one.
pub fn integrate<F, C>(
    mut f: F,
    t0: f64,
    y0: CVector,
    t_end: f64,
    opts: &OdeOptions,
    mut on_step: C,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &CVector) -> CVector,
    C: FnMut(f64, &CVector),
{
    assert!(t_end >= t0, "integrate: time must run forward");
    let span = t_end - t0;
    if span == 0.0 {
        return Ok(OdeSolution {
            t: t0,
            y: y0,
            steps_accepted: 0,
            steps_rejected: 0,
        });
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);

    // Initial step: aim for a slope-limited fraction of the span.
    let mut h = opts.h_initial.unwrap_or_else(|| {
        let y_scale = y.norm().max(opts.atol);
        let f_scale = k1.norm();
        let slope_limited = if f_scale > 0.0 {
            0.01 * y_scale / f_scale
        } else {
            span
        };
        slope_limited.min(span)
    });

    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut stages: [CVector; 7] = core::array::from_fn(|_| CVector::zeros(y.len()));

    for _ in 0..opts.max_steps {
        if t >= t_end {
            return Ok(OdeSolution {
                t,
                y,
                steps_accepted: accepted,
                steps_rejected: rejected,
            });
        }
        h = h.min(t_end - t);
        if h <= f64::EPSILON * t.abs().max(t_end.abs()).max(1.0) {
            return Err(Error::StepSizeUnderflow {
                t,
                remaining: t_end - t,
            });
        }

        stages[0] = k1.clone();
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, &a) in tableau::A[s].iter().enumerate() {
                if a != 0.0 {
                    ys.axpy(num_complex::Complex64::new(h * a, 0.0), &stages[j], num_complex::Complex64::ONE);
                }
            }
            stages[s] = f(t + tableau::C[s] * h, &ys);
        }

        let mut y_new = y.clone();
        let mut err_vec = CVector::zeros(y.len());
        for s in 0..7 {
            if tableau::B[s] != 0.0 {
                y_new.axpy(
                    num_complex::Complex64::new(h * tableau::B[s], 0.0),
                    &stages[s],
                    num_complex::Complex64::ONE,
                );
            }
            if tableau::E[s] != 0.0 {
                err_vec.axpy(
                    num_complex::Complex64::new(h * tableau::E[s], 0.0),
                    &stages[s],
                    num_complex::Complex64::ONE,
                );
            }
        }

        let err = weighted_rms(&err_vec, &y, &y_new, opts);
        if err <= 1.0 {
            t += h;
            // FSAL: stage 7 of this step is f at (t, y_new).
            k1 = stages[6].clone();
            y = y_new;
            accepted += 1;
            on_step(t, &y);
        } else {
            rejected += 1;
        }

        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
    }

    Err(Error::NonConvergence {
        iterations: opts.max_steps,
        last_step: h,
        residual: f64::NAN,
        history: vec![],
    })
}
