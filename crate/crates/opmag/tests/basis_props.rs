//! Angular-momentum bookkeeping checked against an independent oracle: the
//! coupling coefficients are rebuilt here by the textbook ladder
//! construction (stretched state, Gram–Schmidt, lowering operators) and the
//! operator sets are held to the su(2) algebra they claim to represent.

use std::collections::HashMap;

use num_complex::Complex64;
use proptest::prelude::*;

use opmag::basis::{clebsch_gordan, AtomSpec, CMatrix, HalfInt, HyperfineBasis};

/// Coupling table built from first principles, keyed by doubled quantum
/// numbers (2F, 2m₁, 2m₂). Top of each F ladder comes from orthogonalizing
/// against the higher-F tops in the same magnetic subspace (sign fixed by
/// the convention that the m₁ = j₁ coefficient is positive); the rest of the
/// ladder follows by applying J₋ = J₁₋ + J₂₋.
fn oracle_table(two_j1: i32, two_j2: i32) -> HashMap<(i32, i32, i32), f64> {
    let j1 = two_j1 as f64 / 2.0;
    let j2 = two_j2 as f64 / 2.0;

    // states[two_f][two_m] = coefficients over (two_m1, two_m2).
    let mut table: HashMap<(i32, i32, i32), f64> = HashMap::new();
    let mut tops: Vec<(i32, HashMap<(i32, i32), f64>)> = Vec::new();

    let mut two_f = two_j1 + two_j2;
    while two_f >= (two_j1 - two_j2).abs() {
        // Seed in the M = F product subspace, then strip the higher-F tops
        // lowered down to this M.
        let mut state: HashMap<(i32, i32), f64> = HashMap::new();
        state.insert((two_j1, two_f - two_j1), 1.0);
        for (two_f_hi, top) in &tops {
            // Lower |F_hi, F_hi⟩ to M = two_f/2.
            let mut cur = top.clone();
            let mut two_m = *two_f_hi;
            while two_m > two_f {
                cur = lower_state(&cur, j1, j2, *two_f_hi as f64 / 2.0, two_m as f64 / 2.0);
                two_m -= 2;
            }
            let overlap: f64 = cur
                .iter()
                .map(|(k, &c)| c * state.get(k).copied().unwrap_or(0.0))
                .sum();
            for (k, c) in &cur {
                *state.entry(*k).or_insert(0.0) -= overlap * c;
            }
        }
        let norm: f64 = state.values().map(|c| c * c).sum::<f64>().sqrt();
        for c in state.values_mut() {
            *c /= norm;
        }
        if state.get(&(two_j1, two_f - two_j1)).copied().unwrap_or(0.0) < 0.0 {
            for c in state.values_mut() {
                *c = -*c;
            }
        }

        // Walk the ladder down, recording every rung.
        let mut cur = state.clone();
        let mut two_m = two_f;
        loop {
            for (&(two_m1, two_m2), &c) in &cur {
                if c.abs() > 1e-15 {
                    table.insert((two_f, two_m1, two_m2), c);
                }
            }
            if two_m == -two_f {
                break;
            }
            cur = lower_state(&cur, j1, j2, two_f as f64 / 2.0, two_m as f64 / 2.0);
            two_m -= 2;
        }

        tops.push((two_f, state));
        two_f -= 2;
    }
    table
}

/// One application of J₋ = J₁₋ + J₂₋ to a normalized |F, M⟩ expansion,
/// renormalized by √(F(F+1) − M(M−1)).
fn lower_state(
    state: &HashMap<(i32, i32), f64>,
    j1: f64,
    j2: f64,
    f: f64,
    m: f64,
) -> HashMap<(i32, i32), f64> {
    let mut out: HashMap<(i32, i32), f64> = HashMap::new();
    let denom = (f * (f + 1.0) - m * (m - 1.0)).sqrt();
    for (&(two_m1, two_m2), &c) in state {
        let m1 = two_m1 as f64 / 2.0;
        let m2 = two_m2 as f64 / 2.0;
        let a1 = (j1 * (j1 + 1.0) - m1 * (m1 - 1.0)).max(0.0).sqrt();
        if a1 > 0.0 {
            *out.entry((two_m1 - 2, two_m2)).or_insert(0.0) += c * a1 / denom;
        }
        let a2 = (j2 * (j2 + 1.0) - m2 * (m2 - 1.0)).max(0.0).sqrt();
        if a2 > 0.0 {
            *out.entry((two_m1, two_m2 - 2)).or_insert(0.0) += c * a2 / denom;
        }
    }
    out
}

#[test]
fn coupling_coefficients_match_the_ladder_construction() {
    for (two_j1, two_j2) in [(1, 1), (3, 1), (7, 1), (2, 2), (3, 2), (6, 4)] {
        let oracle = oracle_table(two_j1, two_j2);
        for two_f in ((two_j1 - two_j2).abs()..=two_j1 + two_j2).step_by(2) {
            for two_m in (-two_f..=two_f).step_by(2) {
                for two_m1 in (-two_j1..=two_j1).step_by(2) {
                    let two_m2 = two_m - two_m1;
                    if two_m2.abs() > two_j2 {
                        continue;
                    }
                    let got = clebsch_gordan(
                        HalfInt::from_twice(two_j1),
                        HalfInt::from_twice(two_m1),
                        HalfInt::from_twice(two_j2),
                        HalfInt::from_twice(two_m2),
                        HalfInt::from_twice(two_f),
                        HalfInt::from_twice(two_m),
                    );
                    let want = oracle.get(&(two_f, two_m1, two_m2)).copied().unwrap_or(0.0);
                    assert!(
                        (got - want).abs() < 1e-12,
                        "⟨{two_j1}/2 {two_m1}/2; {two_j2}/2 {two_m2}/2 | {two_f}/2 {two_m}/2⟩: got {got}, ladder says {want}"
                    );
                }
            }
        }
    }
}

proptest! {
    /// The coupling matrix is orthogonal: rows (fixed F, M) are orthonormal
    /// across product states, and columns (fixed m₁, m₂) have unit weight
    /// across the F ladder.
    #[test]
    fn coupling_is_orthonormal_and_complete(two_j1 in 1i32..=8, two_j2 in 1i32..=4) {
        prop_assume!(two_j2 <= two_j1);
        let coeff = |two_f: i32, two_m: i32, two_m1: i32| {
            let two_m2 = two_m - two_m1;
            if two_m1.abs() > two_j1 || two_m2.abs() > two_j2 {
                0.0
            } else {
                clebsch_gordan(
                    HalfInt::from_twice(two_j1),
                    HalfInt::from_twice(two_m1),
                    HalfInt::from_twice(two_j2),
                    HalfInt::from_twice(two_m2),
                    HalfInt::from_twice(two_f),
                    HalfInt::from_twice(two_m),
                )
            }
        };

        for two_m in (-(two_j1 + two_j2)..=two_j1 + two_j2).step_by(2) {
            for two_f in ((two_j1 - two_j2).abs()..=two_j1 + two_j2).step_by(2) {
                if two_m.abs() > two_f { continue; }
                for two_f2 in ((two_j1 - two_j2).abs()..=two_j1 + two_j2).step_by(2) {
                    if two_m.abs() > two_f2 { continue; }
                    let dot: f64 = (-two_j1..=two_j1)
                        .step_by(2)
                        .map(|two_m1| coeff(two_f, two_m, two_m1) * coeff(two_f2, two_m, two_m1))
                        .sum();
                    let want = if two_f == two_f2 { 1.0 } else { 0.0 };
                    prop_assert!((dot - want).abs() < 1e-12);
                }
            }
        }

        for two_m1 in (-two_j1..=two_j1).step_by(2) {
            for two_m2 in (-two_j2..=two_j2).step_by(2) {
                let total: f64 = ((two_j1 - two_j2).abs()..=two_j1 + two_j2)
                    .step_by(2)
                    .map(|two_f| {
                        let c = coeff(two_f, two_m1 + two_m2, two_m1);
                        c * c
                    })
                    .sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn half_integers_round_trip(twice in -64i32..=64) {
        let h = HalfInt::from_twice(twice);
        prop_assert_eq!(h.twice(), twice);
        prop_assert_eq!(HalfInt::try_from_f64(h.as_f64()).unwrap(), h);
        prop_assert_eq!(h.is_integer(), twice % 2 == 0);
        // Values off the half-integer grid are rejected.
        prop_assert!(HalfInt::try_from_f64(h.as_f64() + 0.21).is_err());
    }
}

fn commutator_defect(a: &CMatrix, b: &CMatrix, c: &CMatrix) -> f64 {
    ((a * b - b * a) - c * Complex64::I).norm()
}

#[test]
fn spin_operator_sets_close_under_su2() {
    for atom in [
        AtomSpec::cesium(),
        AtomSpec::new(HalfInt::from_twice(3), 2.0e9, 0.3e9, 2.802_495_3e6).unwrap(),
    ] {
        let basis = HyperfineBasis::build(atom);
        let n = atom.ground_dim();

        let s = basis.electron_spin_ops();
        assert!(commutator_defect(&s.sx, &s.sy, &s.sz) < 1e-12);
        assert!(commutator_defect(&s.sy, &s.sz, &s.sx) < 1e-12);
        assert!(commutator_defect(&s.sz, &s.sx, &s.sy) < 1e-12);
        assert!((&s.sp - (&s.sx + &s.sy * Complex64::I)).norm() < 1e-12);
        // The electron is spin-1/2 regardless of the nucleus it rides on:
        // S² = 3/4 on the whole ground manifold.
        let s2 = &s.sx * &s.sx + &s.sy * &s.sy + &s.sz * &s.sz;
        assert!((s2 - CMatrix::identity(n, n) * Complex64::new(0.75, 0.0)).norm() < 1e-12);

        let f = basis.total_f_ops();
        assert!(commutator_defect(&f.sx, &f.sy, &f.sz) < 1e-12);
        // F² is f(f+1) on each multiplet.
        let f2 = &f.sx * &f.sx + &f.sy * &f.sy + &f.sz * &f.sz;
        for (k, level) in basis.ground_levels().iter().enumerate() {
            let want = level.f.as_f64() * (level.f.as_f64() + 1.0);
            assert!((f2[(k, k)].re - want).abs() < 1e-12);
        }

        // F − S acts as the nuclear spin: its Casimir is I(I+1).
        let ix = &f.sx - &s.sx;
        let iy = &f.sy - &s.sy;
        let iz = &f.sz - &s.sz;
        let i2 = &ix * &ix + &iy * &iy + &iz * &iz;
        let want = atom.nuclear_spin().as_f64() * (atom.nuclear_spin().as_f64() + 1.0);
        assert!((i2 - CMatrix::identity(n, n) * Complex64::new(want, 0.0)).norm() < 1e-11);
    }
}

#[test]
fn coupling_matrices_are_unitary() {
    let basis = HyperfineBasis::build(AtomSpec::cesium());
    for u in [basis.ground_coupling(), basis.excited_coupling(), basis.fine_isometry()] {
        let n = u.ncols();
        let defect = (u.adjoint() * u - CMatrix::identity(n, n)).norm();
        assert!(defect < 1e-12, "coupling defect {defect:.3e}");
    }
}
