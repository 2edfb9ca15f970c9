use std::f64::consts::PI;

use sphere_ricci::flow::*;
use sphere_ricci::identities::*;
use sphere_ricci::spectral::*;
use sphere_ricci::tensor::*;

fn kr(a: f64, b: f64, band: usize) -> ScalarField {
    kr_field(KrParams::new(a, b).unwrap(), &build_grid(band, 2).unwrap())
}

fn natural_q_scale(v: &ScalarField) -> f64 {
    v.sup_norm() * iterated_derivative(v, 3).unwrap().sup_norm().powi(2)
}

#[test]
fn b_operator_examples() {
    let g = build_grid(24, 2).unwrap();
    let (b, tfb, z) = b_operator(&ScalarField::constant(&g, 2.0)).unwrap();
    assert_eq!(b.sup_norm() + tfb.sup_norm() + z.sup_norm(), 0.0);

    let v = ScalarField::from_cartesian(&g, |x, _, z| 2.0 + 0.4 * x - 0.3 * z);
    let (b, tfb, _) = b_operator(&v).unwrap();
    assert!(tfb.sup_norm() <= 1e-9 * b.sup_norm());

    let v = kr(1.0, 0.5, 24);
    let (b, tfb, _) = b_operator(&v).unwrap();
    assert!(tfb.sup_norm() <= 1e-8 * b.sup_norm());
}

#[test]
fn q_field_examples() {
    let g = build_grid(24, 2).unwrap();
    assert_eq!(q_field(&ScalarField::constant(&g, 1.0)).unwrap().sup_norm(), 0.0);

    let v = kr(1.0, 0.5, 24);
    let kr_level = q_field(&v).unwrap().sup_norm();
    assert!(kr_level <= 1e-14 * natural_q_scale(&v));

    let (y31, _) = spherical_harmonic(&g, 3, 1);
    let v = y31.map(|y| 2.0 + 0.25 * y);
    let q = q_field(&v).unwrap();
    assert!(q.min() >= 0.0);
    assert!(q.max() > 1e3 * kr_level.max(1e-300));
    assert!(q.max() > 1e-3);

    assert!(q_field(&ScalarField::from_cartesian(&g, |_, _, z| z)).is_err());
}

#[test]
fn q_lhs_matches_time_difference_of_q() {
    let g = build_grid(32, 2).unwrap();
    let v = random_band_limited(4, 6, 2.0, 1.0, &g).unwrap();
    let w = flow_rhs(&v).unwrap();
    let eps = 1e-5 * v.sup_norm() / w.sup_norm();
    let plus = q_field(&(&v + &w.scale(eps))).unwrap();
    let minus = q_field(&(&v - &w.scale(eps))).unwrap();
    let fd = (&plus - &minus).scale(0.5 / eps);
    let lhs = q_lhs(&v).unwrap();
    assert!((&fd - &lhs).sup_norm() <= 1e-6 * lhs.sup_norm());
}

#[test]
fn q_equation_trivial_cases() {
    let g = build_grid(24, 2).unwrap();
    let c = ScalarField::constant(&g, 3.0);
    assert_eq!(q_lhs(&c).unwrap().sup_norm(), 0.0);
    assert_eq!(q_rhs(&c).unwrap().sup_norm(), 0.0);

    for (a, b) in KR_CASES {
        let v = kr(a, b, 24);
        let scale = natural_q_scale(&v) * v.sup_norm();
        let terms = q_rhs_terms(&v).unwrap();
        assert!(q_lhs(&v).unwrap().sup_norm() <= 1e-9 * scale);
        assert!(terms.total().sup_norm() <= 1e-9 * scale);
        assert!(terms.chat_term.sup_norm() <= 1e-9 * scale);
        assert!(terms.trace_term.sup_norm() <= 1e-9 * scale);
    }
}

#[test]
fn kr_makes_laplacian_plus_six_constant() {
    // Δ(x₃²) = 2 - 6x₃², so Δv + 6v = 2b + 6a.
    let v = kr(1.0, 0.5, 16);
    let u = &laplacian(&v) + &v.scale(6.0);
    assert!(u.values().iter().all(|&x| (x - 7.0).abs() < 1e-11));
}

#[test]
fn q_equation_holds_on_random_data() {
    let g = build_grid(32, 2).unwrap();
    for seed in [1, 2, 3] {
        let v = random_band_limited(seed, 6, 2.0, 1.0, &g).unwrap();
        let r = q_residual(&v, 6, 1e-6).unwrap();
        assert!(r.passed, "{r:?}");
    }
}

#[test]
fn evolving_trace_reading_leaves_a_persistent_residual() {
    let opts = QOptions {
        trace: TraceReading::Evolving,
        ..QOptions::default()
    };
    for band in [24, 32] {
        let g = build_grid(band, 2).unwrap();
        let v = random_band_limited(1, 6, 2.0, 1.0, &g).unwrap();
        let r = q_residual_with(&v, 6, 1e-6, opts, "evolving").unwrap();
        assert!(r.rel_residual > 1e-3, "{r:?}");
    }
}

#[test]
fn q_equation_converges_on_smooth_data() {
    let reports = convergence_sweep(3, &[16, 24, 32], 2, 2.0, 1.0, 1e-6).unwrap();
    assert!(strictly_decreasing(&reports), "{reports:?}");
    assert!(reports[2].rel_residual < 1e-7);
}

#[test]
fn harnack_a_examples() {
    let g = build_grid(24, 2).unwrap();
    let a = harnack_a(&ScalarField::constant(&g, 1.5)).unwrap();
    assert!(a.values().iter().all(|&x| (x - 9.0).abs() < 1e-10));

    for (p, q) in KR_CASES {
        let v = kr(p, q, 24);
        let a = harnack_a(&v).unwrap();
        assert!(a.min() >= -1e-9 * v.sup_norm().powi(2));
        let vd = &v * &fourth_order_d(&v);
        assert!((&a - &vd).sup_norm() <= 1e-7 * a.sup_norm());
    }

    // R = 2(a+b)(a - b x₃²)/v is negative at the poles when b > a.
    match harnack_a(&kr(1.0, 2.0, 16)) {
        Err(sphere_ricci::Error::NonPositiveCurvature { value, .. }) => assert!(value < 0.0),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn remark_identity_examples() {
    let g = build_grid(32, 2).unwrap();
    let r = remark_identity_residual(&ScalarField::constant(&g, 2.0), 0, 1e-12).unwrap();
    assert!(r.passed, "{r:?}");

    let v = random_band_limited(3, 6, 2.0, 0.5, &g).unwrap();
    assert!(scalar_curvature(&v).unwrap().min() > 0.0);
    assert!(remark_identity_residual(&v, 6, 1e-7).unwrap().passed);
    assert!(sentinel_residual(&v, 6, 1e-8).unwrap().passed);
    assert!(a_reduction_residual(&v, 6, 1e-7).unwrap().passed);

    let v = kr(1.0, 0.5, 32);
    assert!(remark_identity_residual(&v, 2, 1e-8).unwrap().passed);
}

#[test]
fn sentinel_holds_without_curvature_sign() {
    let g = build_grid(32, 2).unwrap();
    let v = random_band_limited(1, 6, 2.0, 1.0, &g).unwrap();
    assert!(scalar_curvature(&v).unwrap().min() < 0.0);
    assert!(sentinel_residual(&v, 6, 1e-8).unwrap().passed);
    assert!(remark_identity_residual(&v, 6, 1e-7).is_err());
}

#[test]
fn fourth_order_examples() {
    let g = build_grid(24, 2).unwrap();
    let (d, report) = fourth_order_check(&ScalarField::constant(&g, 2.5), 0, 1e-7).unwrap();
    assert!((d - 10.0).abs() < 1e-10);
    assert!(report.unwrap().passed);

    let v = kr(1.0, -0.5, 24);
    let (d, _) = fourth_order_check(&v, 2, 1e-7).unwrap();
    assert!(d >= -1e-9 * v.sup_norm());

    // Off the ancient class only the numbers are reported.
    let (y40, _) = spherical_harmonic(&g, 4, 0);
    let v = y40.map(|y| 2.0 + y);
    let (d, _) = fourth_order_check(&v, 4, 1e-7).unwrap();
    assert!(d.is_finite());
}

#[test]
fn j_alpha_examples() {
    let g = build_grid(16, 2).unwrap();
    let one = ScalarField::constant(&g, 1.0);
    assert!((j_alpha(&one, 1.0).unwrap() + 16.0 * PI).abs() < 1e-12);
    assert!(j_alpha(&one, 2.0).unwrap().abs() < 1e-14);
    let c = ScalarField::constant(&g, 1.7);
    assert!((j_alpha(&c, 0.0).unwrap() + 8.0 * PI * 1.7 * 1.7).abs() < 1e-11);
    assert!(j_alpha(&ScalarField::from_cartesian(&g, |_, _, z| z), 1.0).is_err());
}

#[test]
fn dj_formula_on_constants() {
    let g = build_grid(16, 2).unwrap();
    for a in [0.5, 1.0, 2.0] {
        let v = ScalarField::constant(&g, a);
        for alpha in [0.0, 0.5, 1.0, 2.0] {
            let exact = -32.0 * PI * f64::powf(a, 3.0 - alpha);
            let got = dj_alpha_formula(&v, alpha).unwrap();
            assert!((got - exact).abs() <= 1e-12 * exact.abs(), "a = {a}, α = {alpha}");
        }
    }
}

#[test]
fn j_table_along_kr_flow() {
    let v = kr(1.0, 0.5, 24);
    let s0 = FlowState::new(0.0, v).unwrap();
    let dt = 0.5 * DtPolicy::Auto.step_for(&s0.v);
    let states = run_flow(&s0, 0.05, DtPolicy::Fixed(dt), 1).unwrap();
    let table = j_monotonicity_report(&states, &[0.0, 1.0, 2.0]).unwrap();
    assert!(table.max_rel_mismatch().iter().all(|&m| m <= 1e-5));
    assert!(table.max_rate().iter().all(|&r| r <= 0.0));
    let csv = table.to_csv();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "t,J_0,J_1,J_2,dJ_0_formula,dJ_1_formula,dJ_2_formula");
    assert_eq!(csv.lines().count(), states.len() + 1);

    assert!(matches!(
        j_monotonicity_report(&states[..2], &[1.0]),
        Err(sphere_ricci::Error::TooFewStates(2))
    ));
}

#[test]
fn polyakov_energy_on_round_flow() {
    let g = build_grid(16, 2).unwrap();
    let s0 = FlowState::new(0.0, ScalarField::constant(&g, 1.0)).unwrap();
    for s in run_flow(&s0, 0.1, DtPolicy::Auto, 10).unwrap().iter().skip(1) {
        let a = 1.0 / (1.0 - 2.0 * s.t);
        let exact = -16.0 * PI * a.ln();
        assert!((j_alpha(&s.v, 2.0).unwrap() - exact).abs() <= 1e-8 * exact.abs());
        assert!(dj_alpha_formula(&s.v, 2.0).unwrap() < 0.0);
    }
}

#[test]
fn battery_passes_and_control_fails() {
    let cfg = BatteryConfig {
        band_limit: 24,
        l_max_data: 6,
        ..BatteryConfig::default()
    };
    let out = run_battery(&cfg).unwrap();
    let failed: Vec<_> = out.failures().map(|r| r.name.clone()).collect();
    assert!(out.passed(), "{failed:?}");
    assert!(out.reports.windows(2).all(|w| w[0].name < w[1].name));
    assert!(out.diagnostics.iter().all(|r| !r.passed));

    let bugged = run_battery(&BatteryConfig {
        inject_z_bug: true,
        ..cfg.clone()
    })
    .unwrap();
    let failing = |prefix: &str| bugged.failures().any(|r| r.name.starts_with(prefix));
    assert!(failing("z_identity") && failing("q_equation_seed"));

    let bad = BatteryConfig {
        band_limit: 16,
        ..cfg
    };
    assert!(run_battery(&bad).is_err());
}
