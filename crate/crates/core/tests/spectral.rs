use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use sphere_ricci::spectral::*;

fn rel_sup(a: &ScalarField, b: &ScalarField) -> f64 {
    (a - b).sup_norm() / b.sup_norm().max(1e-300)
}

#[test]
fn real_part_of_y21_analyzes_to_one_pair() {
    let g = build_grid(16, 2).unwrap();
    let (re, _) = spherical_harmonic(&g, 2, 1);
    let c = analyze(&re);
    for (l, m, a) in c.iter() {
        if l == 2 && m.abs() == 1 {
            // Re Y = (Y_{2,1} - Y_{2,-1}) / 2
            let expect = if m == 1 { 0.5 } else { -0.5 };
            assert!((a - Complex64::new(expect, 0.0)).norm() < 1e-12, "{l} {m} {a}");
        } else {
            assert!(a.norm() < 1e-12, "{l} {m} {a}");
        }
    }
}

#[test]
fn round_trip_random_coefficients() {
    for band in [8, 16, 32] {
        let g = build_grid(band, 2).unwrap();
        let c = random_coefficients(11, band, band);
        let f = synthesize(&c, &g).unwrap();
        let back = analyze(&f);
        assert!(back.max_abs_diff(&c) <= 1e-12 * c.max_abs(), "L = {band}");
    }
}

#[test]
fn constant_has_only_the_mean_coefficient() {
    let g = build_grid(16, 2).unwrap();
    let c = analyze(&ScalarField::constant(&g, 1.0));
    assert!((c.get(0, 0).re - (4.0 * PI).sqrt()).abs() < 1e-13);
    for (l, _, a) in c.iter() {
        if l > 0 {
            assert!(a.norm() < 1e-13);
        }
    }
}

#[test]
fn synthesize_rejects_larger_band() {
    let g = build_grid(8, 2).unwrap();
    assert!(synthesize(&SpectralCoeffs::zeros(9), &g).is_err());
}

#[test]
fn laplacian_examples() {
    let g = build_grid(16, 2).unwrap();
    for m in 0..=2 {
        let (y, _) = spherical_harmonic(&g, 2, m);
        assert!(rel_sup(&laplacian(&y), &y.scale(-6.0)) < 1e-12);
    }
    let lc = laplacian(&ScalarField::constant(&g, 3.0)).sup_norm();
    assert!(lc < 3e-11, "{lc}");
    let x3 = ScalarField::from_cartesian(&g, |_, _, z| z);
    assert!(rel_sup(&laplacian(&x3), &x3.scale(-2.0)) < 1e-11);
}

#[test]
fn laplacian_eigenvalues_up_to_degree_eight() {
    let g = build_grid(32, 2).unwrap();
    for l in 0..=8usize {
        for m in -(l as i64)..=l as i64 {
            let (re, im) = spherical_harmonic(&g, l, m);
            let k = -((l * (l + 1)) as f64);
            for y in [re, im] {
                if y.sup_norm() == 0.0 {
                    continue;
                }
                assert!(
                    rel_sup(&laplacian(&y), &y.scale(k)) < 1e-10 || l == 0,
                    "l={l} m={m}"
                );
            }
        }
    }
}

#[test]
fn derivative_examples() {
    let g = build_grid(16, 2).unwrap();
    let f = ScalarField::from_fn(&g, |t, _| t.cos());
    let expect = ScalarField::from_fn(&g, |t, _| -t.sin());
    assert!((d_theta(&f) - expect).sup_norm() <= 1e-11);

    let f = ScalarField::from_fn(&g, |t, p| p.sin() * t.sin());
    let expect = ScalarField::from_fn(&g, |t, p| p.cos() * t.sin());
    assert!((d_phi(&f) - expect).sup_norm() <= 1e-13);

    let one = ScalarField::constant(&g, 1.0);
    assert!(d_theta(&one).sup_norm() < 1e-12);
    assert!(d_phi(&one).sup_norm() < 1e-13);
}

#[test]
fn d_theta_handles_odd_modes() {
    // sinθ cosθ cosφ = x₁ x₃ has an odd longitudinal mode.
    let g = build_grid(16, 2).unwrap();
    let f = ScalarField::from_fn(&g, |t, p| t.sin() * t.cos() * p.cos());
    let expect = ScalarField::from_fn(&g, |t, p| (2.0 * t).cos() * p.cos());
    assert!((d_theta(&f) - expect).sup_norm() < 1e-11);
    // A rank-1 component: ∂θ(x₃) = -sinθ is a polynomial profile times sinθ.
    let f = ScalarField::from_fn(&g, |t, _| -t.sin());
    let expect = ScalarField::from_fn(&g, |t, _| -t.cos());
    assert!((d_theta_with_parity(&f, Parity::Odd) - expect).sup_norm() < 1e-11);
}

#[test]
fn integration_examples() {
    let g = build_grid(16, 2).unwrap();
    assert!((integrate(&ScalarField::constant(&g, 1.0)) - 4.0 * PI).abs() < 1e-12);
    let x3 = ScalarField::from_cartesian(&g, |_, _, z| z);
    assert!(integrate(&x3).abs() < 1e-13);
    // 1D oracle: ∫ x² dμ = 2π ∫_{-1}^{1} x² dx by Simpson's rule.
    let n = 2000;
    let h = 2.0 / n as f64;
    let simpson: f64 = (0..=n)
        .map(|k| {
            let x = -1.0 + k as f64 * h;
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * x * x
        })
        .sum::<f64>()
        * h
        / 3.0
        * 2.0
        * PI;
    let x3sq = x3.map(|z| z * z);
    assert!((integrate(&x3sq) - simpson).abs() < 1e-10);
    assert!((integrate(&x3sq) - 4.188790205).abs() < 1e-9);
}

#[test]
fn harmonics_are_orthonormal_under_quadrature() {
    let band = 12;
    let g = build_grid(band, 2).unwrap();
    let degrees: Vec<(usize, i64)> = (0..=6usize)
        .flat_map(|l| (-(l as i64)..=l as i64).map(move |m| (l, m)))
        .collect();
    for &(l, m) in &degrees {
        let (ar, ai) = spherical_harmonic(&g, l, m);
        for &(lp, mp) in &degrees {
            let (br, bi) = spherical_harmonic(&g, lp, mp);
            // Re ∫ Y conj(Y')
            let re = integrate(&(&(&ar * &br) + &(&ai * &bi)));
            let im = integrate(&(&(&ai * &br) - &(&ar * &bi)));
            let expect = if l == lp && m == mp { 1.0 } else { 0.0 };
            assert!((re - expect).abs() < 1e-12 && im.abs() < 1e-12);
        }
    }
}

#[test]
fn coefficient_file_round_trip_and_rejection() {
    let text = r#"[{"l": 0, "m": 0, "re": 3.5449077018110318, "im": 0.0},
                   {"l": 2, "m": 1, "re": 0.1, "im": -0.2}]"#;
    let c = SpectralCoeffs::from_json(text, 8).unwrap();
    assert_eq!(c.get(2, 1), Complex64::new(0.1, -0.2));
    assert_eq!(c.get(2, -1), Complex64::new(0.0, 0.0));
    let back = SpectralCoeffs::from_records(&c.to_records(), 8).unwrap();
    assert_eq!(back, c);

    assert!(SpectralCoeffs::from_json(r#"[{"l": 9, "m": 0, "re": 1, "im": 0}]"#, 8).is_err());
    assert!(SpectralCoeffs::from_json(r#"[{"l": 2, "m": 3, "re": 1, "im": 0}]"#, 8).is_err());
    assert!(SpectralCoeffs::from_json(r#"[{"l": 2, "m": 1, "re": 1, "im": 0, "x": 1}]"#, 8).is_err());
}

#[test]
fn low_pass_keeps_band_limited_fields() {
    let g = build_grid(24, 2).unwrap();
    let v = random_band_limited(5, 6, 2.0, 1.0, &g).unwrap();
    assert!((low_pass(&v) - v.clone()).sup_norm() < 1e-13 * v.sup_norm());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn greens_identity(seed_f in 0u64..1000, seed_h in 0u64..1000) {
        let g = build_grid(24, 2).unwrap();
        let f = random_band_limited(seed_f, 6, 2.0, 1.0, &g).unwrap();
        let h = random_band_limited(seed_h, 6, 2.0, 1.0, &g).unwrap();
        let a = integrate(&(&f * &laplacian(&h)));
        let b = integrate(&(&h * &laplacian(&f)));
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0));
    }

    #[test]
    fn round_trip_any_seed(seed in 0u64..10_000) {
        let g = build_grid(16, 2).unwrap();
        let c = random_coefficients(seed, 16, 16);
        let back = analyze(&synthesize(&c, &g).unwrap());
        prop_assert!(back.max_abs_diff(&c) <= 1e-12 * c.max_abs());
    }
}

#[test]
fn chop_removes_only_the_round_off_tail() {
    let mut c = random_coefficients(3, 5, 16);
    c.set_real_pair(3, 1, Complex64::new(1e-17, 0.0));
    c.set_real_pair(10, 2, Complex64::new(1e-16, 0.0));
    let before = c.clone();
    assert_eq!(chop(&mut c, 1.0), 5);
    assert_eq!(c.get(10, 2), Complex64::new(0.0, 0.0));
    // Small coefficients below the last retained degree survive.
    assert_eq!(c.get(3, 1), before.get(3, 1));
    for l in 0..=5 {
        for m in -(l as i64)..=l as i64 {
            assert_eq!(c.get(l, m), before.get(l, m));
        }
    }
}

#[test]
fn chop_cutoff_follows_the_reference() {
    let mut c = SpectralCoeffs::zeros(16);
    c.set_real_pair(7, 0, Complex64::new(1e-3, 0.0));
    let mut kept = c.clone();
    assert_eq!(chop(&mut kept, 1.0), 7);
    assert_eq!(chop(&mut c, 1e12), 0);
    assert_eq!(c.max_abs(), 0.0);
}

#[test]
fn chopped_laplacian_keeps_high_degree_harmonics() {
    let g = build_grid(48, 2).unwrap();
    let (re, _) = spherical_harmonic(&g, 40, 3);
    let expected = re.scale(-(40.0 * 41.0));
    assert!(rel_sup(&laplacian(&re), &expected) < 1e-10);
}
