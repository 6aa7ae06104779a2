use lightcone::audit::{inequality_audit, AuditOptions};
use lightcone::conformal::{obata_field, ObataParameters};
use lightcone::embedding::Immersion;
use lightcone::solver::{
    classification_rule, classify, independent_residual, kernel_spectrum, random_initial, solve_e, solve_seed,
    SolverConfig, SweepConfig,
};
use lightcone::{Error, LorentzVector, ScalarField, SpectralField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn field(text: &str) -> ScalarField {
    ScalarField::parse(text, 2).unwrap()
}

#[test]
fn zero_is_a_fixed_point() {
    let (f, d) = solve_e(&SolverConfig::default(), &ScalarField::constant(0.0, 2).unwrap()).unwrap();
    assert!(d.converged);
    assert!(d.iterations <= 1);
    assert!(f.l2_norm() < 1e-14);
}

#[test]
fn tilted_start_converges_into_the_family() {
    let (f, d) = solve_e(&SolverConfig::default(), &field("0.3*x3")).unwrap();
    assert!(d.converged, "{d:?}");
    assert!(d.residual_max < 1e-10);
    assert!(independent_residual(&f, 1.0, 300, 4).unwrap() < 1e-10);
    let c = classify(&ScalarField::Spectral(f), &classification_rule()).unwrap();
    assert!(c.in_family, "{c:?}");
    assert!((c.k_hat - 1.0).abs() < 1e-6);
}

#[test]
fn accepted_steps_decrease_the_residual() {
    for (k, text) in [(4.0, "0.4*x1*x2 - 0.2*x3"), (0.5, "0.5*x3^2")] {
        let (_, d) = solve_e(&SolverConfig::default().with_k(k), &field(text)).unwrap();
        assert!(d.l2_history.windows(2).all(|w| w[1] < w[0]), "{d:?}");
        assert_eq!(d.lambda_history.len(), d.iterations);
        assert_eq!(d.residual_history.len(), d.iterations + 1);
    }
}

#[test]
fn seeds_classify_in_family() {
    let cfg = SweepConfig::default();
    for (k, seed) in [(0.5, 3), (1.0, 7), (4.0, 11)] {
        let r = solve_seed(&cfg, k, seed).unwrap();
        if r.converged {
            assert!(r.independent_residual.unwrap() < 1e-9);
            let c = r.classification.unwrap();
            assert!(c.in_family && (c.k_hat - k).abs() < 1e-6, "{c:?}");
        }
    }
}

#[test]
fn band_limit_is_required() {
    let cfg = SolverConfig::default().with_lmax(4);
    let err = solve_e(&cfg, &field("exp(x3)")).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)), "{err:?}");
    let err = solve_e(&cfg, &ScalarField::parse("x4", 3).unwrap()).unwrap_err();
    assert!(matches!(err, Error::Unsupported(_)));
}

#[test]
fn stiff_start_is_reported_not_thrown() {
    let mut cfg = SolverConfig::default().with_lmax(8);
    cfg.max_iter = 3;
    let (_, d) = solve_e(&cfg, &field("3*x1*x2*x3 + 2*x3")).unwrap();
    assert!(!d.converged);
    assert!(!d.message.is_empty());
}

#[test]
fn classify_reproduces_family_members() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rule = classification_rule();
    for _ in 0..100 {
        let p = ObataParameters::random(2, 1.5, (0.2, 5.0), &mut rng);
        let c = classify(&obata_field(p.clone()), &rule).unwrap();
        assert!(c.in_family);
        assert!((c.k_hat - p.k()).abs() < 1e-8 * p.k().max(1.0));
        let v = c.v.unwrap();
        for (a, b) in v.iter().zip(p.v().as_slice()) {
            assert!((a - b).abs() < 1e-8, "{v:?} vs {:?}", p.v());
        }
        assert!(c.rho < 1e-10);
        let norm = LorentzVector::new(v.clone()).unwrap().norm_sq();
        assert!((norm + 1.0).abs() < 1e-8 && v[0] < 0.0);
    }
}

#[test]
fn classify_trivial_and_outside() {
    let rule = classification_rule();
    let c = classify(&ScalarField::constant(0.0, 2).unwrap(), &rule).unwrap();
    assert!(c.in_family);
    assert!((c.k_hat - 1.0).abs() < 1e-14);
    let v = c.v.unwrap();
    assert!((v[0] + 1.0).abs() < 1e-14 && v[1..].iter().all(|x| x.abs() < 1e-14));
    let c = classify(&field("x3"), &rule).unwrap();
    assert!(!c.in_family && c.rho > 1e-2, "{c:?}");
    // e^{-f} = x₃ changes sign, k̂ = −1 ≤ 0: no fit vector
    let c = classify(&field("-log(x3^2 + 0.001)"), &rule).unwrap();
    assert!(!c.in_family);
}

#[test]
fn spectrum_at_the_round_solution() {
    let s = kernel_spectrum(&SpectralField::zeros(12), 1.0).unwrap();
    assert_eq!(s.count_below(1e-8), 3);
    assert!((s.eigenvalues[3] - 2.0).abs() < 1e-8);
    assert!((s.eigenvalues[4] + 4.0).abs() < 1e-8);
}

#[test]
fn spectrum_at_a_generic_family_member() {
    let (f, d) = solve_e(&SolverConfig::default().with_lmax(24), &field("0.3*x3 - 0.2*x1")).unwrap();
    assert!(d.converged);
    let s = kernel_spectrum(&f, 1.0).unwrap();
    assert!(s.smallest(3).iter().all(|l| l.abs() < 1e-6), "{:?}", s.smallest(6));
    assert!(s.eigenvalues[3].abs() > 0.5);
}

#[test]
fn solutions_satisfy_the_equality_audit() {
    let (f, d) = solve_e(&SolverConfig::default().with_lmax(24), &field("0.25*x2 + 0.1*x1*x3")).unwrap();
    assert!(d.converged);
    let im = Immersion::graph(ScalarField::Spectral(f));
    let r = inequality_audit(&im, &LorentzVector::e0(4), &AuditOptions::new(24)).unwrap();
    assert!(r.value.abs() < 1e-7, "{r:?}");
    assert!(r.pointwise[0].value < 1e-6);
}

fn rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let q: [f64; 4] = [0, 1, 2, 3].map(|_| rng.gen_range(-1.0..1.0));
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|c| c / n);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

#[test]
fn solver_is_rotation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rule = classification_rule();
    let cfg = SolverConfig::default().with_lmax(20);
    for _ in 0..3 {
        let f0 = random_initial(3, 0.4, &mut rng);
        let r = rotation(&mut rng);
        let (f, d) = solve_e(&cfg, &ScalarField::Spectral(f0.clone())).unwrap();
        let (g, e) = solve_e(&cfg, &ScalarField::Spectral(f0.rotated(&r).unwrap())).unwrap();
        assert!(d.converged && e.converged);
        let cf = classify(&ScalarField::Spectral(f), &rule).unwrap();
        let cg = classify(&ScalarField::Spectral(g), &rule).unwrap();
        assert!((cf.k_hat - cg.k_hat).abs() < 1e-6);
        let (vf, vg) = (cf.v.unwrap(), cg.v.unwrap());
        for i in 0..3 {
            let rotated: f64 = (0..3).map(|j| r[i][j] * vf[j + 1]).sum();
            assert!((rotated - vg[i + 1]).abs() < 1e-6, "{vf:?} {vg:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_initial_respects_amplitude(seed in 0u64..10_000, amp in 0.05f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_initial(3, amp, &mut rng);
        prop_assert_eq!(f.lmax(), 3);
        let tr = lightcone::ShTransform::with_lmax(12).unwrap();
        let peak = tr.synthesize(&f.with_lmax(12)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(peak <= amp * 1.05 && peak >= 0.15 * amp, "{} {}", peak, amp);
    }

    #[test]
    fn classification_is_consistent(space in prop::collection::vec(-1.5f64..1.5, 3), k in 0.1f64..8.0) {
        let p = ObataParameters::from_spatial(&space, k).unwrap();
        let c = classify(&obata_field(p.clone()), &classification_rule()).unwrap();
        prop_assert!(c.in_family);
        prop_assert!((c.k_hat - k).abs() < 1e-8 * k.max(1.0));
    }
}
