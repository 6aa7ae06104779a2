use lightcone::conformal::ObataParameters;
use lightcone::embedding::*;
use lightcone::expr::parse_chart_function;
use lightcone::minkowski::{minkowski_dot_slices as dot, LorentzVector};
use lightcone::spectral::SpectralField;
use lightcone::{Error, ScalarField, SpherePoint};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_snvr(rng: &mut ChaCha8Rng) -> (LorentzVector, f64, Immersion) {
    let p = ObataParameters::random(2, 1.5, (1.0, 1.0), rng);
    let r = rng.gen_range(0.3..3.0);
    let v = p.v().clone();
    (v.clone(), r, Immersion::snvr(v, r).unwrap())
}

fn random_spectral(rng: &mut ChaCha8Rng, lmax: usize, amp: f64) -> ScalarField {
    let mut f = SpectralField::zeros(lmax);
    for c in f.coeffs_mut().iter_mut() {
        *c = amp * rng.gen_range(-1.0..1.0);
    }
    ScalarField::Spectral(f)
}

fn max_dev(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

#[test]
fn snvr_is_totally_umbilical() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let (v, r, im) = random_snvr(&mut rng);
        let frame = Frame::LightCone;
        for _ in 0..5 {
            let u = im.chart().sample(&mut rng);
            let sd = shape_data(&im, &frame, &u).unwrap();
            let id = DMatrix::identity(2, 2);
            assert!(max_dev(&sd.a_xi, &(-&id)) < 1e-6);
            assert!(max_dev(&sd.a_eta, &(&id * (-0.5 / (r * r)))) < 1e-6);
            // η = (1/2r²) ψ + (1/r) v.
            for (a, e) in sd.eta.iter().enumerate() {
                let expect = sd.psi()[a] / (2.0 * r * r) + v[a] / r;
                assert!((e - expect).abs() < 1e-9);
            }
            // ⟨v, ψ⟩ = r.
            assert!((dot(v.as_slice(), sd.psi()) + 0.0 - r).abs() < 1e-12);
            let k = sd.sectional_curvature(&[1.0, 0.3], &[-0.2, 1.0]).unwrap();
            assert!((k - 1.0 / (r * r)).abs() < 1e-6);
            assert!((sd.mean_curvature_sq() - 1.0 / (r * r)).abs() < 1e-6);
            assert!(sd.umbilicity_defect().abs() < 1e-8);
            let h = sd.mean_curvature();
            for a in 0..4 {
                let expect = -sd.xi[a] / (2.0 * r * r) - sd.eta[a];
                assert!((h[a] - expect).abs() < 1e-6);
            }
            let nabla = nabla_a_eta(&im, &frame, &u).unwrap();
            assert!(nabla.iter().all(|m| m.amax() < 1e-8));
        }
    }
}

#[test]
fn flat_cylinder() {
    let im = Immersion::FlatCylinder;
    let frame = Frame::LightCone;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let u = im.chart().sample(&mut rng);
        let sd = shape_data(&im, &frame, &u).unwrap();
        assert!(max_dev(&sd.metric, &DMatrix::identity(2, 2)) < 1e-8);
        assert!(sd.mean_curvature_sq().abs() < 1e-8);
        let eig = sd.a_eta.clone().symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        assert!((lo + 0.5).abs() < 1e-6 && (hi - 0.5).abs() < 1e-6, "{eig}");
        assert!((sd.umbilicity_defect() - 0.5).abs() < 1e-6);
        assert!(sd.sectional_curvature(&[1.0, 0.0], &[0.0, 1.0]).unwrap().abs() < 1e-6);
        assert!(sd.eta[0] < 0.0);
    }
}

#[test]
fn poincare_half_plane() {
    let im = Immersion::PoincareHalfPlane;
    let frame = Frame::LightCone;
    for x in [0.5, 1.0, 2.0] {
        let u = [x, 0.4];
        let sd = shape_data(&im, &frame, &u).unwrap();
        let k = sd.sectional_curvature(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((k + 1.0).abs() < 1e-5, "K = {k}");
        assert!((sd.mean_curvature_sq() + 1.0).abs() < 1e-5);
        // With ψ₀ = cosh x / x the light-cone frame gives
        // A_η = diag((1 + x²)/2, (1 − x²)/2), hence (∇_∂x A_η)∂y = −x ∂y.
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5 * (1.0 + x * x), 0.5 * (1.0 - x * x)]));
        assert!(max_dev(&sd.a_eta, &expect) < 1e-6);
        let d = covariant_shape_derivative(&im, &frame, &u, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let diff = [d[0], d[1] + x];
        assert!(sd.norm(&diff) < 1e-6, "{d:?} at x = {x}");
        let nabla = nabla_a_eta(&im, &frame, &u).unwrap();
        assert!(nabla.iter().map(|m| m.amax()).fold(0.0, f64::max) > 0.1);
    }
}

#[test]
fn euclidean_graph() {
    let im = Immersion::euclid_graph(2).unwrap();
    let frame = Frame::LightCone;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let u = im.chart().sample(&mut rng);
        let sd = shape_data(&im, &frame, &u).unwrap();
        assert!(sd.a_eta.amax() < 1e-8, "{}", sd.a_eta);
        assert!(sd.mean_curvature_sq().abs() < 1e-8);
        let h = sd.mean_curvature();
        assert!(h.iter().zip(&sd.eta).all(|(a, b)| (a + b).abs() < 1e-8));
    }
}

#[test]
fn torus_curvature_and_codazzi() {
    let im = Immersion::torus(2.0, 0.7).unwrap();
    let parallel = Frame::Hyperplane;
    let rescaled = Frame::Hyperplane.rescaled(parse_chart_function("1 + 0.5*sin(u)").unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let u = im.chart().sample(&mut rng);
        let expect = u[0].cos() / (0.7 * (2.0 + 0.7 * u[0].cos()));
        for frame in [&parallel, &rescaled] {
            let sd = shape_data(&im, frame, &u).unwrap();
            assert!(sd.frame_defect() < 1e-12);
            let k = sd.sectional_curvature(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
            assert!((k - expect).abs() < 1e-6);
            let d = codazzi_defect(&im, frame, &u, &[1.0, 0.2], &[-0.3, 1.0]).unwrap();
            assert!(d < 1e-4, "codazzi {d}");
        }
        let s = intrinsic_scalar_curvature(&im, &u).unwrap();
        assert!((s - 2.0 * expect).abs() < 1e-6, "{s} vs {}", 2.0 * expect);
        let sd = shape_data(&im, &parallel, &u).unwrap();
        assert!(sd.alpha.iter().all(|a| a.abs() < 1e-9));
    }
}

#[test]
fn random_graphs_satisfy_the_identity_lattice() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..4 {
        let im = Immersion::graph(random_spectral(&mut rng, 4, 0.15));
        let frame = Frame::LightCone;
        for _ in 0..10 {
            let u = im.chart().sample(&mut rng);
            let rep = invariants_report(&im, &frame, &u).unwrap();
            assert!(rep.h_sq_spread() < 1e-5, "{rep:?}");
            assert!(rep.a_xi_identity_defect.unwrap() < 1e-6);
            assert!((rep.trace_a_xi + 2.0).abs() < 1e-6);
            assert!((rep.scalar_curvature_intrinsic - 2.0 * rep.h_sq_trace).abs() < 1e-5);
            assert!((rep.n_h_sq - rep.ii_sq).abs() < 1e-5);
            assert!(rep.frame_defect < 1e-9);
            assert!(rep.route_defect < 1e-6, "{}", rep.route_defect);
            assert!(rep.umbilicity_defect > -1e-8);
            let sd = shape_data(&im, &frame, &u).unwrap();
            assert!(max_dev(&sd.a_eta, &sd.a_eta_from_hessian()) < 1e-6);
            let d = codazzi_defect(&im, &frame, &u, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
            assert!(d < 1e-4);
        }
    }
}

#[test]
fn graph_metric_is_conformal() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let field = random_spectral(&mut rng, 3, 0.3);
    let im = Immersion::graph(field.clone());
    for _ in 0..20 {
        let u = im.chart().sample(&mut rng);
        let jet = im.chart_jet(&u).unwrap();
        let x = SpherePoint::from_chart(&u);
        let e2f = (2.0 * field.value(&x).unwrap()).exp();
        let g0 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, u[0].sin().powi(2)]));
        assert!(max_dev(&jet.metric(), &(g0 * e2f)) < 1e-8);
        let (xi, eta) = Frame::LightCone.at(&im, &u).unwrap();
        assert!((dot(&xi, &eta) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn round_graph_frame() {
    let im = Immersion::round_graph(2).unwrap();
    let u = [0.8, 1.9];
    let (xi, eta) = Frame::LightCone.at(&im, &u).unwrap();
    let x = SpherePoint::from_chart(&u);
    assert!((xi[0] - 1.0).abs() < 1e-15);
    assert!((eta[0] + 0.5).abs() < 1e-15);
    for a in 0..3 {
        assert!((eta[a + 1] - 0.5 * x.coords()[a]).abs() < 1e-15);
    }
}

#[test]
fn factorization_recovers_field_and_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let field = random_spectral(&mut rng, 3, 0.3);
    let (c, s) = (0.6f64, 0.8f64);
    let rot = vec![vec![c, -s, 0.0], vec![s, c, 0.0], vec![0.0, 0.0, 1.0]];
    let plain = Immersion::graph(field.clone());
    let rotated = Immersion::rotated_graph(field.clone(), rot.clone()).unwrap();
    for _ in 0..10 {
        let u = plain.chart().sample(&mut rng);
        let x = SpherePoint::from_chart(&u);
        let fp = graph_factorization(&plain).unwrap().at(&u).unwrap();
        assert!((fp.f - field.value(&x).unwrap()).abs() < 1e-12);
        assert!(fp.phi.iter().zip(x.coords()).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(fp.metric_defect < 1e-8 && fp.sphere_defect < 1e-12);
        let fr = graph_factorization(&rotated).unwrap().at(&u).unwrap();
        let rx: Vec<f64> = rot.iter().map(|r| r.iter().zip(x.coords()).map(|(a, b)| a * b).sum()).collect();
        assert!(fr.phi.iter().zip(&rx).all(|(a, b)| (a - b).abs() < 1e-12));
        let frx = field.value(&SpherePoint::normalized(rx).unwrap()).unwrap();
        assert!((fr.f - frx).abs() < 1e-12);
        assert!(fr.metric_defect < 1e-8);
    }
    let (v, r, snvr) = random_snvr(&mut rng);
    let u = snvr.chart().sample(&mut rng);
    let x = SpherePoint::from_chart(&u);
    let d = -v.time() + v.space().iter().zip(x.coords()).map(|(a, b)| a * b).sum::<f64>();
    let fp = graph_factorization(&snvr).unwrap().at(&u).unwrap();
    assert!((fp.f - (r / d).ln()).abs() < 1e-12);
    assert!(matches!(graph_factorization(&Immersion::torus(2.0, 0.5).unwrap()), Err(Error::NotLightCone(_))));
}

#[test]
fn christoffel_symbols_agree_with_metric_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let im = Immersion::graph(random_spectral(&mut rng, 3, 0.3));
    for _ in 0..5 {
        let u = im.chart().sample(&mut rng);
        let sd = shape_data(&im, &Frame::LightCone, &u).unwrap();
        let fd = christoffel_from_metric_fd(&im, &u, 1e-5).unwrap();
        for k in 0..2 {
            assert!(max_dev(&sd.christoffel[k], &fd[k]) < 1e-6);
        }
    }
}

#[test]
fn chart_singularities_are_reported() {
    let im = Immersion::round_graph(2).unwrap();
    assert!(matches!(shape_data(&im, &Frame::LightCone, &[0.0, 1.0]), Err(Error::ChartSingularity(_))));
    assert!(matches!(Frame::LightCone.at(&Immersion::torus(2.0, 0.7).unwrap(), &[0.1, 0.2]), Err(Error::NotLightCone(_))));
}
