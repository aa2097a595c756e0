//! Algebraic ground rules of the collision terms, checked on random states:
//! spin exchange conserves the electron spin exactly, isotropic spin
//! destruction relaxes it at precisely its rate, and every generator this
//! library assembles annihilates the trace and preserves Hermiticity.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use opmag::basis::{AtomSpec, CMatrix, HalfInt, HyperfineBasis, Level};
use opmag::effective::EffectiveSystem;
use opmag::full::FullSystem;
use opmag::params::ExperimentParams;
use opmag::steady::SpinFunctionals;
use opmag::superop::{spin_exchange_channels, CVector, MeanFieldLiouvillian, StateSpace};
use opmag::units::to_angular;

/// A random density matrix: Hermitian, positive, unit trace.
fn random_density(n: usize, rng: &mut StdRng) -> CMatrix {
    let a = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let mut rho = &a * a.adjoint();
    let trace: Complex64 = rho.diagonal().iter().sum();
    rho /= trace;
    rho
}

/// Zero every element of `rho` that connects levels in different blocks.
/// Pinching a density matrix this way keeps it Hermitian, positive, and
/// unit-trace.
fn pinch_blocks(rho: &mut CMatrix, block: &[i32]) {
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            if block[i] != block[j] {
                rho[(i, j)] = Complex64::ZERO;
            }
        }
    }
}

/// Multiplet tag of each level: the hyperfine Hamiltonian is a scalar inside
/// every block, so block-diagonal states are blind to it and expose the
/// collision terms alone.
fn multiplet_blocks(levels: &[Level]) -> Vec<i32> {
    levels
        .iter()
        .map(|level| {
            let ground = matches!(level.manifold, opmag::basis::Manifold::Ground);
            level.f.twice() + if ground { 0 } else { 1000 }
        })
        .collect()
}

fn spin_rate_of_change(
    lv: &MeanFieldLiouvillian,
    spin: &SpinFunctionals,
    v: &CVector,
) -> [Complex64; 3] {
    let out = lv.apply(v);
    [spin.sz.dot(&out), spin.sp.dot(&out), spin.sm.dot(&out)]
}

fn norm3(x: &[Complex64; 3]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// The exchange generator in isolation, assembled from the same primitives
/// the system builders use: the isotropic dissipator plus the three
/// mean-field feedback channels, all at the same rate.
fn exchange_only(basis: &HyperfineBasis, gamma_se_hz: f64) -> (MeanFieldLiouvillian, SpinFunctionals) {
    let ops = basis.electron_spin_ops();
    let space = StateSpace::full(basis.atom().ground_dim());
    let gamma = to_angular(gamma_se_hz);
    let mut fixed = space.dissipator(&ops.sx) * Complex64::new(gamma, 0.0);
    fixed += space.dissipator(&ops.sy) * Complex64::new(gamma, 0.0);
    fixed += space.dissipator(&ops.sz) * Complex64::new(gamma, 0.0);
    let channels = spin_exchange_channels(&space, &ops, gamma);
    let spin = SpinFunctionals {
        sz: space.functional(&ops.sz),
        sp: space.functional(&ops.sp),
        sm: space.functional(&ops.sm),
    };
    (MeanFieldLiouvillian { space, fixed, channels }, spin)
}

#[test]
fn exchange_alone_conserves_the_electron_spin() {
    let basis = HyperfineBasis::build(AtomSpec::cesium());
    let (lv, spin) = exchange_only(&basis, 1.0);
    let mut rng = StdRng::seed_from_u64(2026);

    let mut largest_drift = 0.0f64;
    let mut largest_spin = 0.0f64;
    for _ in 0..100 {
        let rho = random_density(basis.atom().ground_dim(), &mut rng);
        let v = lv.space.vectorize(&rho);
        let ds = spin_rate_of_change(&lv, &spin, &v);
        largest_drift = largest_drift.max(norm3(&ds));
        largest_spin = largest_spin.max(spin.sz.dot(&v).norm());
    }
    assert!(
        largest_drift < 1e-12,
        "exchange moved the spin: ‖d<S>/dt‖ up to {largest_drift:.3e}"
    );
    // The states must actually carry spin, or the check above is vacuous.
    assert!(largest_spin > 1e-2);
}

#[test]
fn destruction_alone_relaxes_the_spin_at_its_rate() {
    let basis = HyperfineBasis::build(AtomSpec::cesium());
    let ops = basis.electron_spin_ops();
    let space = StateSpace::full(basis.atom().ground_dim());
    for gamma_sd_hz in [1.0, 0.37] {
        let gamma = to_angular(gamma_sd_hz);
        let mut fixed = space.dissipator(&ops.sx) * Complex64::new(gamma, 0.0);
        fixed += space.dissipator(&ops.sy) * Complex64::new(gamma, 0.0);
        fixed += space.dissipator(&ops.sz) * Complex64::new(gamma, 0.0);
        let spin = SpinFunctionals {
            sz: space.functional(&ops.sz),
            sp: space.functional(&ops.sp),
            sm: space.functional(&ops.sm),
        };
        let lv = MeanFieldLiouvillian {
            space: space.clone(),
            fixed,
            channels: Vec::new(),
        };

        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let rho = random_density(basis.atom().ground_dim(), &mut rng);
            let v = lv.space.vectorize(&rho);
            let ds = spin_rate_of_change(&lv, &spin, &v);
            let expected = [
                spin.sz.dot(&v) * (-gamma),
                spin.sp.dot(&v) * (-gamma),
                spin.sm.dot(&v) * (-gamma),
            ];
            let err = [
                ds[0] - expected[0],
                ds[1] - expected[1],
                ds[2] - expected[2],
            ];
            assert!(
                norm3(&err) < 1e-12,
                "destruction at {gamma_sd_hz} Hz should give d<S>/dt = -γ_sd<S>, off by {:.3e}",
                norm3(&err)
            );
        }
    }
}

/// The eliminated equation keeps only the coherence sectors inside each
/// ground multiplet, so its collision terms are the projections of the
/// unrestricted generators onto those slots. Verify the assembly is exactly
/// that projection — isotropic part at γ_se + γ_sd, feedback channels at
/// γ_se — by rebuilding both from primitives and comparing entry for entry.
#[test]
fn ground_equation_collision_terms_are_the_projected_generators() {
    let base = ExperimentParams {
        atom: AtomSpec::cesium(),
        pump_rabi_hz: 0.0,
        pump_detuning_hz: 0.0,
        pump_sign: -1,
        spin_exchange_hz: 1.0,
        spin_destruction_hz: 0.37,
        spontaneous_decay_hz: 0.0,
        quench_hz: 0.6e9,
        b_z_gauss: 0.0,
        b_x_gauss: 3.0e-9,
    };
    // A vapor with no ground relaxation at all is rejected by validation, so
    // compare two legal rate settings: their difference isolates the
    // collision terms exactly (everything else in the generator is shared).
    let mut weaker = base;
    weaker.spin_exchange_hz = 0.25;
    weaker.spin_destruction_hz = 0.05;

    let system = EffectiveSystem::build(base).unwrap();
    let reference = EffectiveSystem::build(weaker).unwrap();
    let collision_fixed = system.liouvillian().fixed.clone() - &reference.liouvillian().fixed;

    // The same terms on the unrestricted ground space.
    let basis = HyperfineBasis::build(base.atom);
    let ops = basis.electron_spin_ops();
    let ambient = StateSpace::full(base.atom.ground_dim());
    let gamma = to_angular(
        base.spin_exchange_hz + base.spin_destruction_hz
            - weaker.spin_exchange_hz
            - weaker.spin_destruction_hz,
    );
    let mut iso = ambient.dissipator(&ops.sx) * Complex64::new(gamma, 0.0);
    iso += ambient.dissipator(&ops.sy) * Complex64::new(gamma, 0.0);
    iso += ambient.dissipator(&ops.sz) * Complex64::new(gamma, 0.0);
    let channels = spin_exchange_channels(&ambient, &ops, to_angular(base.spin_exchange_hz));

    // Kept slots of the restricted space, as coordinates in the ambient one.
    let coords: Vec<usize> = system
        .space()
        .pairs()
        .iter()
        .map(|&(i, j)| ambient.slot(i, j).unwrap())
        .collect();

    let scale = collision_fixed.norm();
    assert!((collision_fixed - opmag::superop::submatrix(&iso, &coords)).norm() / scale < 1e-12);

    assert_eq!(system.liouvillian().channels.len(), channels.len());
    for (kept, full) in system.liouvillian().channels.iter().zip(&channels) {
        assert_eq!(kept.label, full.label);
        let gen_err = (kept.generator.clone()
            - opmag::superop::submatrix(&full.generator, &coords))
        .norm()
            / full.generator.norm();
        assert!(gen_err < 1e-12, "channel {} generator differs: {gen_err:.3e}", kept.label);
        let w_err = (kept.weight.clone() - opmag::superop::subvector(&full.weight, &coords)).norm();
        assert!(w_err < 1e-12, "channel {} weight differs: {w_err:.3e}", kept.label);
    }
}

/// Exchange conservation on the unreduced two-manifold equation. The
/// mean-field coefficients are written for a vapor of ground-state atoms, so
/// the statement is exact on states supported on the ground manifold;
/// pinching away the a–b coherences silences the (multiplet-scalar)
/// hyperfine commutator, which moves ⟨S⟩ on its own.
#[test]
fn assembled_full_equation_keeps_exchange_conservation() {
    let small = AtomSpec::new(HalfInt::from_twice(3), 2.0e9, 0.3e9, 2.802_495_3e6).unwrap();
    for atom in [small, AtomSpec::cesium()] {
        let params = ExperimentParams {
            atom,
            pump_rabi_hz: 0.0,
            pump_detuning_hz: 0.0,
            pump_sign: 1,
            spin_exchange_hz: 1.0,
            spin_destruction_hz: 0.0,
            spontaneous_decay_hz: 0.0,
            quench_hz: 0.0,
            b_z_gauss: 0.0,
            b_x_gauss: 3.0e-9,
        };
        let system = FullSystem::build(params).unwrap();
        let blocks = multiplet_blocks(system.basis().ground_levels());
        let n_g = atom.ground_dim();
        let mut rng = StdRng::seed_from_u64(17);

        for _ in 0..25 {
            let mut ground = random_density(n_g, &mut rng);
            pinch_blocks(&mut ground, &blocks);
            let mut rho = CMatrix::zeros(atom.full_dim(), atom.full_dim());
            rho.view_mut((0, 0), (n_g, n_g)).copy_from(&ground);
            let v = system.space().vectorize(&rho);
            let ds = spin_rate_of_change(system.liouvillian(), system.spin_functionals(), &v);
            assert!(
                norm3(&ds) < 1e-12,
                "full-equation exchange leaked spin: {:.3e}",
                norm3(&ds)
            );
        }
    }
}

/// The isotropic-destruction identity d⟨S⟩/dt = −γ_sd⟨S⟩ holds on the
/// unreduced equation for any state, excited population included; only the
/// hyperfine commutator needs the multiplet pinch.
#[test]
fn assembled_destruction_matches_its_rate() {
    let atom = AtomSpec::new(HalfInt::from_twice(3), 2.0e9, 0.3e9, 2.802_495_3e6).unwrap();
    let params = ExperimentParams {
        atom,
        pump_rabi_hz: 0.0,
        pump_detuning_hz: 0.0,
        pump_sign: -1,
        spin_exchange_hz: 0.0,
        spin_destruction_hz: 0.73,
        spontaneous_decay_hz: 0.0,
        quench_hz: 0.0,
        b_z_gauss: 0.0,
        b_x_gauss: 3.0e-9,
    };
    let system = FullSystem::build(params).unwrap();
    let gamma = to_angular(params.spin_destruction_hz);
    let blocks = multiplet_blocks(system.basis().levels());
    let spin = system.spin_functionals();
    let mut rng = StdRng::seed_from_u64(23);

    for _ in 0..50 {
        let mut rho = random_density(atom.full_dim(), &mut rng);
        pinch_blocks(&mut rho, &blocks);
        let v = system.space().vectorize(&rho);
        let ds = spin_rate_of_change(system.liouvillian(), spin, &v);
        let err = [
            ds[0] + spin.sz.dot(&v) * gamma,
            ds[1] + spin.sp.dot(&v) * gamma,
            ds[2] + spin.sm.dot(&v) * gamma,
        ];
        assert!(norm3(&err) < 1e-12, "assembled destruction rate is off by {:.3e}", norm3(&err));
    }
}

/// Every generator the library assembles, applied to random Hermitian
/// states. The nonlinear right-hand side must keep Tr ρ constant and ρ
/// Hermitian no matter how the feedback weights come out.
#[test]
fn assembled_generators_annihilate_trace_and_preserve_hermiticity() {
    let cs = opmag::config::ScenarioConfig::preset("cs-100torr")
        .unwrap()
        .to_params()
        .unwrap();
    let mut cs_detuned = opmag::config::ScenarioConfig::preset("cs-700torr")
        .unwrap()
        .to_params()
        .unwrap();
    cs_detuned.pump_detuning_hz = 9.2e9;
    let small = opmag::sweep::validation_params(3.0e-3);
    let tiny = ExperimentParams {
        atom: opmag::full::tiny_atom(),
        pump_rabi_hz: 1.0e4,
        pump_detuning_hz: 3.0e8,
        pump_sign: 1,
        spin_exchange_hz: 100.0,
        spin_destruction_hz: 50.0,
        spontaneous_decay_hz: 1.0e6,
        quench_hz: 1.0e6,
        b_z_gauss: 0.01,
        b_x_gauss: 3.0e-9,
    };

    let mut cases: Vec<(String, MeanFieldLiouvillian)> = Vec::new();
    for (name, params) in [("cs-100torr", cs), ("cs-700torr @ 9.2 GHz", cs_detuned), ("small atom", small), ("tiny atom", tiny)] {
        let eff = EffectiveSystem::build(params).unwrap();
        cases.push((format!("eliminated {name}"), eff.liouvillian().clone()));
        let full = FullSystem::build(params).unwrap();
        cases.push((format!("unreduced {name}"), full.liouvillian().clone()));
    }
    let compact = EffectiveSystem::build_compact(cs).unwrap();
    cases.push(("compact cs-100torr".into(), compact.liouvillian().clone()));

    let mut rng = StdRng::seed_from_u64(31);
    for (name, lv) in &cases {
        let n = lv.space.hilbert_dim();
        let trace = lv.space.trace_functional();
        for _ in 0..8 {
            let rho = random_density(n, &mut rng);
            let v = lv.space.vectorize(&rho);
            let out = lv.apply(&v);
            let scale = out.norm().max(f64::MIN_POSITIVE);

            let trace_leak = trace.dot(&out).norm() / scale;
            assert!(trace_leak < 1e-12, "{name}: trace drifts at relative rate {trace_leak:.3e}");

            let m = lv.space.unvectorize(&out);
            let herm = (&m - m.adjoint()).norm() / scale;
            assert!(herm < 1e-12, "{name}: output not Hermitian, defect {herm:.3e}");
        }
    }
}

/// The diagonal-sector rate equations are a real, trace-free flow on
/// populations.
#[test]
fn rate_equations_are_real_and_trace_free() {
    let params = opmag::config::ScenarioConfig::preset("cs-100torr")
        .unwrap()
        .to_params()
        .unwrap();
    let system = EffectiveSystem::build(params).unwrap();
    let (rates, _spin) = system.rate_equation_system();
    let trace = rates.space.trace_functional();
    let mut rng = StdRng::seed_from_u64(41);

    for _ in 0..20 {
        let mut p: Vec<f64> = (0..rates.space.dim()).map(|_| rng.random::<f64>()).collect();
        let total: f64 = p.iter().sum();
        for x in &mut p {
            *x /= total;
        }
        let v = CVector::from_iterator(p.len(), p.iter().map(|&x| Complex64::new(x, 0.0)));
        let out = rates.apply(&v);
        let scale = out.norm().max(f64::MIN_POSITIVE);
        assert!(trace.dot(&out).norm() / scale < 1e-12);
        let imag = out.iter().map(|c| c.im.abs()).fold(0.0f64, f64::max);
        assert!(imag / scale < 1e-12, "population flow grew an imaginary part: {imag:.3e}");
    }
}
