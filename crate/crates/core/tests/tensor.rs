use proptest::prelude::*;
use sphere_ricci::spectral::*;
use sphere_ricci::tensor::*;

fn x3(g: &std::sync::Arc<SphereGrid>) -> ScalarField {
    ScalarField::from_cartesian(g, |_, _, z| z)
}

#[test]
fn gradient_and_hessian_of_x3() {
    let g = build_grid(16, 2).unwrap();
    let v = x3(&g);
    let dv = gradient(&v);
    let expect = ScalarField::from_fn(&g, |t, _| -t.sin());
    assert!((dv.component(&[0]) - &expect).sup_norm() < 1e-12);
    assert!(dv.component(&[1]).sup_norm() < 1e-12);

    let hess = covariant_derivative(&dv).unwrap();
    assert!((hess.component(&[0, 1]) - hess.component(&[1, 0])).sup_norm() < 1e-12);
    // Hess x₃ = -x₃ g
    let expect = FrameTensor::metric(&g).mul_field(&v).scale(-1.0);
    assert!(hess.sub(&expect).sup_norm() < 1e-11);
}

#[test]
fn hessian_is_symmetric_for_random_data() {
    let g = build_grid(32, 2).unwrap();
    let v = random_band_limited(3, 8, 2.0, 1.0, &g).unwrap();
    let hess = iterated_derivative(&v, 2).unwrap();
    assert!(hess.asymmetry() <= 1e-10 * hess.sup_norm());
}

#[test]
fn symmetrize_examples() {
    let g = build_grid(24, 2).unwrap();
    let v = random_band_limited(2, 6, 2.0, 1.0, &g).unwrap();
    let d3 = iterated_derivative(&v, 3).unwrap();
    let scale = d3.sup_norm();

    let b = symmetrize3(&d3).unwrap();
    assert!(b.asymmetry() <= 1e-9 * scale);
    // fixed point on symmetric input
    let again = symmetrize3(&b).unwrap();
    assert!(again.sub(&b).sup_norm() <= 1e-14 * scale);
    // alternating part in the first two slots is annihilated
    let alt = d3.sub(&d3.permuted(&[1, 0, 2]));
    assert!(symmetrize3(&alt).unwrap().sup_norm() <= 1e-9 * scale);
}

#[test]
fn trace_examples() {
    let g = build_grid(32, 2).unwrap();
    let metric = FrameTensor::metric(&g);
    let t = trace_pair(&metric, 0, 1, Metric::Round).unwrap();
    assert!(t.as_scalar().values().iter().all(|&x| x == 2.0));

    let v = random_band_limited(4, 8, 2.0, 1.0, &g).unwrap();
    let t = trace_pair(&metric, 0, 1, Metric::Evolving(&v)).unwrap();
    assert!((t.as_scalar() - &v.scale(2.0)).sup_norm() == 0.0);

    let hess = iterated_derivative(&v, 2).unwrap();
    let tr = trace_pair(&hess, 0, 1, Metric::Round).unwrap();
    assert!((tr.as_scalar() - &laplacian(&v)).sup_norm() <= 1e-8);
}

#[test]
fn conformal_trace_law_is_exact() {
    let g = build_grid(16, 2).unwrap();
    let v = random_band_limited(9, 4, 2.0, 1.0, &g).unwrap();
    let d3 = iterated_derivative(&v, 3).unwrap();
    for (p, q) in [(0, 1), (0, 2), (1, 2)] {
        let round = trace_pair(&d3, p, q, Metric::Round).unwrap();
        let evolving = trace_pair(&d3, p, q, Metric::Evolving(&v)).unwrap();
        for (a, b) in round.components().iter().zip(evolving.components()) {
            let prod = a * &v;
            assert!(prod
                .values()
                .iter()
                .zip(b.values())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}

fn b_of(v: &ScalarField) -> FrameTensor {
    symmetrize3(&iterated_derivative(v, 3).unwrap()).unwrap()
}

#[test]
fn tf3_examples() {
    let g = build_grid(32, 2).unwrap();
    let (tfb, z) = tf3_with(&b_of(&ScalarField::constant(&g, 2.0)), 0.25, 2.0).unwrap();
    assert!(tfb.sup_norm() < 1e-8 * 2.0 && z.sup_norm() < 1e-8 * 2.0);

    // degree ≤ 1: TF(b) = 0
    let v = ScalarField::from_cartesian(&g, |x, y, z| 3.0 + 0.4 * z - 0.2 * x + 0.1 * y);
    let b = b_of(&v);
    let (tfb, _) = tf3(&b).unwrap();
    assert!(tfb.sup_norm() <= 1e-9 * b.sup_norm().max(1.0));

    // v = Re Y_{3,1}: z = -(17/6) dv
    let (y31, _) = spherical_harmonic(&g, 3, 1);
    let (tfb, z) = tf3(&b_of(&y31)).unwrap();
    let expect = gradient(&y31).scale(-17.0 / 6.0);
    assert!(z.sub(&expect).sup_norm() <= 1e-9 * expect.sup_norm());
    assert!(tfb.max_trace() <= 1e-9 * tfb.sup_norm());
    assert!(tfb.asymmetry() <= 1e-9 * tfb.sup_norm());
}

#[test]
fn tf3_rejects_nonsymmetric_input() {
    let g = build_grid(16, 2).unwrap();
    let v = random_band_limited(2, 4, 2.0, 1.0, &g).unwrap();
    let d3 = iterated_derivative(&v, 3).unwrap();
    let alt = d3.sub(&d3.permuted(&[1, 0, 2])).add(&d3);
    assert!(tf3(&alt).is_err());
}

#[test]
fn tf2_examples() {
    let g = build_grid(16, 2).unwrap();
    let metric = FrameTensor::metric(&g);
    assert!(tf2(&metric).unwrap().sup_norm() == 0.0);

    let hess = iterated_derivative(&x3(&g), 2).unwrap();
    assert!(tf2(&hess).unwrap().sup_norm() < 1e-11);

    let v = random_band_limited(5, 4, 2.0, 1.0, &g).unwrap();
    let a = tf2(&iterated_derivative(&v, 2).unwrap()).unwrap();
    let tr = trace_pair(&a, 0, 1, Metric::Round).unwrap();
    assert!(tr.sup_norm() <= 1e-10 * a.sup_norm());
    assert!(tf2(&a).unwrap().sub(&a).sup_norm() <= 1e-14 * a.sup_norm());
}

#[test]
fn decompose4_examples() {
    let g = build_grid(32, 2).unwrap();
    let d = decompose4(&FrameTensor::zeros(&g, 4)).unwrap();
    assert_eq!(d.chat.sup_norm() + d.e.sup_norm() + d.f.sup_norm(), 0.0);

    let tfb = tf3_with(&b_of(&ScalarField::constant(&g, 1.5)), 0.25, 1.5)
        .unwrap()
        .0;
    let c = covariant_derivative(&tfb).unwrap();
    let d = decompose4_with(&c, 1.5).unwrap();
    assert!(d.chat.sup_norm() + d.e.sup_norm() < 1e-6 * 1.5);

    let v = random_band_limited(8, 6, 2.0, 1.0, &g).unwrap();
    let (tfb, _) = tf3(&b_of(&v)).unwrap();
    let c = covariant_derivative(&tfb)
        .unwrap()
        .mul_field(&v)
        .add(&tensor_product(&gradient(&v), &tfb).unwrap().scale(2.0));
    let scale = c.sup_norm();
    let d = decompose4(&c).unwrap();
    assert!(d.chat.max_trace() <= 1e-8 * scale);
    assert!(trace_pair(&d.f, 0, 1, Metric::Round).unwrap().sup_norm() <= 1e-10 * scale);
    assert!(reconstruct4(&d).sub(&c).sup_norm() <= 1e-10 * scale);
    for (e, f) in d.e.components().iter().zip(d.f.components()) {
        assert!(e.values().iter().zip(f.values()).all(|(e, f)| *f == -0.5 * e));
    }
    assert!(d.e.asymmetry() <= 1e-10 * scale);
}

#[test]
fn decompose4_rejects_non_trace_free_input() {
    let g = build_grid(16, 2).unwrap();
    let v = random_band_limited(1, 4, 2.0, 1.0, &g).unwrap();
    let c = iterated_derivative(&v, 4).unwrap();
    assert!(decompose4(&c).is_err());
}

#[test]
fn norm_and_inner_examples() {
    let g = build_grid(16, 2).unwrap();
    let metric = FrameTensor::metric(&g);
    assert!(norm_sq(&metric, Metric::Round).values().iter().all(|&x| x == 2.0));

    let v = x3(&g);
    let dv = gradient(&v);
    let n = norm_sq(&dv, Metric::Round);
    assert_eq!(n.values(), inner(&dv, &dv, Metric::Round).unwrap().values());
    assert!((&n - &v.map(|z| 1.0 - z * z)).sup_norm() < 1e-12);

    let w = random_band_limited(2, 4, 2.0, 1.0, &g).unwrap();
    let ev = norm_sq(&dv, Metric::Evolving(&w));
    assert!((&ev - &(&n * &w)).sup_norm() < 1e-14);
    assert!(inner(&dv, &metric, Metric::Round).is_err());
}

#[test]
fn commutator_defect_examples() {
    let g = build_grid(32, 2).unwrap();
    let d = commutator_defect(&gradient(&ScalarField::constant(&g, 4.0))).unwrap();
    assert!(d.sup_norm() < 1e-8 * 4.0);

    let d = commutator_defect(&gradient(&x3(&g))).unwrap();
    assert!(d.sup_norm() < 1e-10);

    let v = random_band_limited(6, 8, 2.0, 1.0, &g).unwrap();
    let omega = gradient(&v);
    let d = commutator_defect(&omega).unwrap();
    let scale = iterated_derivative(&v, 3).unwrap().sup_norm();
    assert!(d.sup_norm() <= 1e-7 * scale, "{} vs {}", d.sup_norm(), scale);
}

#[test]
fn z_identity_on_random_data() {
    let g = build_grid(32, 2).unwrap();
    for seed in [1, 2, 3] {
        let v = random_band_limited(seed, 6, 2.0, 1.0, &g).unwrap();
        let tr = trace_pair(&b_of(&v), 1, 2, Metric::Round).unwrap();
        let expect = gradient(&laplacian(&v)).add(&gradient(&v).scale(2.0 / 3.0));
        assert!(tr.sub(&expect).sup_norm() <= 1e-7 * expect.sup_norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn tfb_is_symmetric_and_trace_free(seed in 0u64..500) {
        let g = build_grid(24, 2).unwrap();
        let v = random_band_limited(seed, 6, 2.0, 1.0, &g).unwrap();
        let (tfb, _) = tf3(&b_of(&v)).unwrap();
        let scale = tfb.sup_norm();
        prop_assert!(tfb.asymmetry() <= 1e-9 * scale);
        prop_assert!(tfb.max_trace() <= 1e-9 * scale);
    }
}

#[test]
fn ambient_and_frame_routes_agree() {
    let g = build_grid(16, 2).unwrap();
    let v = random_band_limited(12, 4, 2.0, 1.0, &g).unwrap();
    let mut t = FrameTensor::scalar(v);
    for _ in 0..3 {
        let a = covariant_derivative(&t).unwrap();
        let b = covariant_derivative_frame(&t).unwrap();
        assert!(a.sub(&b).sup_norm() <= 1e-7 * a.sup_norm(), "rank {}", a.rank());
        t = a;
    }
}

#[test]
fn frame_derivatives_match_collocation_and_fourier() {
    let g = build_grid(24, 2).unwrap();
    let v = random_band_limited(2, 6, 2.0, 1.0, &g).unwrap();
    let (dth, dphs) = frame_derivatives(&v);
    let inv_sin: Vec<f64> = g.sin_theta().iter().map(|s| 1.0 / s).collect();
    assert!((&dth - &d_theta(&v)).sup_norm() <= 1e-11 * dth.sup_norm());
    assert!((&dphs - &d_phi(&v).scale_rows(&inv_sin)).sup_norm() <= 1e-10 * dphs.sup_norm());
}
