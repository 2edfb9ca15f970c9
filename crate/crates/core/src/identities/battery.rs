//! The verification battery behind `ricci-lab verify`, and the frozen-data
//! refinement sweep behind `ricci-lab convergence`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::flow::{kr_field, run_flow, scalar_curvature, DtPolicy, FlowState, KrParams};
use crate::par;
use crate::spectral::{build_grid, laplacian, random_band_limited, random_smooth, ScalarField, SphereGrid};
use crate::tensor::{
    commutator_defect, covariant_derivative, decompose4, gradient, iterated_derivative, reconstruct4,
    symmetrize3, tensor_product, tf3_with, trace_pair, Metric,
};

use super::energy::{j_alpha, j_monotonicity_report};
use super::harnack::{
    a_reduction_residual, fourth_order_d, harnack_a, remark_identity_residual, sentinel_residual,
};
use super::qequation::{q_field_with, q_lhs_with, q_residual_with, q_rhs_terms_with, QOptions, TraceReading};
use super::report::{sorted_by_name, ResidualReport};

/// Kernel radius of the frozen smooth data used for refinement sweeps.
pub const FROZEN_RADIUS: f64 = 0.5;

/// King–Rosenau parameters exercised by the battery; all have `b < a`, so
/// `R > 0`, and one has `b < 0`.
pub const KR_CASES: [(f64, f64); 3] = [(1.0, 0.5), (1.0, -0.5), (3.0, -2.0)];

/// Length of the KR flow window used for the energy checks.
const KR_WINDOW: f64 = 0.05;

const Z_TOL: f64 = 1e-7;
const TRACE_TOL: f64 = 1e-9;
const COMMUTATOR_TOL: f64 = 1e-7;
const DECOMPOSE_TOL: f64 = 1e-10;
const VANISH_TOL: f64 = 1e-9;
const REMARK_TOL: f64 = 1e-7;
const REMARK_KR_TOL: f64 = 1e-8;
const SENTINEL_TOL: f64 = 1e-8;
const A_TOL: f64 = 1e-7;
const SIGN_TOL: f64 = 1e-9;
const J_FORMULA_TOL: f64 = 1e-5;
const J_SIGN_TOL: f64 = 1e-12;
const J_ROUND_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct BatteryConfig {
    pub band_limit: usize,
    pub oversample: usize,
    /// Random checks use `seed`, `seed + 1` and `seed + 2`.
    pub seed: u64,
    pub l_max_data: usize,
    pub floor: f64,
    pub amplitude: f64,
    /// Tolerance of the Q-equation on random data; every other check carries
    /// its own fixed tolerance.
    pub tol: f64,
    /// Negative control: use `z = (1/3) tr b` in place of `(1/4) tr b`.
    pub inject_z_bug: bool,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            band_limit: 32,
            oversample: 2,
            seed: 1,
            l_max_data: 6,
            floor: 2.0,
            amplitude: 1.0,
            tol: 1e-6,
            inject_z_bug: false,
        }
    }
}

impl BatteryConfig {
    fn q_options(&self) -> QOptions {
        QOptions {
            z_factor: if self.inject_z_bug { 1.0 / 3.0 } else { 0.25 },
            trace: TraceReading::Round,
        }
    }

    fn seeds(&self) -> [u64; 3] {
        [self.seed, self.seed + 1, self.seed + 2]
    }
}

/// Reports that decide pass/fail, and side-by-side diagnostics that do not.
#[derive(Clone, Debug, Serialize)]
pub struct BatteryOutcome {
    pub reports: Vec<ResidualReport>,
    pub diagnostics: Vec<ResidualReport>,
}

impl BatteryOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ResidualReport> {
        self.reports.iter().filter(|r| !r.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

type Check<'a> = Box<dyn Fn() -> Vec<ResidualReport> + Send + Sync + 'a>;

struct Ctx {
    cfg: BatteryConfig,
    grid: Arc<SphereGrid>,
}

impl Ctx {
    fn random(&self, seed: u64) -> Result<ScalarField> {
        random_band_limited(
            seed,
            self.cfg.l_max_data,
            self.cfg.floor,
            self.cfg.amplitude,
            &self.grid,
        )
    }

    /// Random data with the amplitude halved until `R > 0` everywhere, for
    /// the quantities that divide by `R`.
    fn random_positive_curvature(&self, seed: u64) -> Result<ScalarField> {
        let mut amplitude = self.cfg.amplitude;
        loop {
            let v = random_band_limited(seed, self.cfg.l_max_data, self.cfg.floor, amplitude, &self.grid)?;
            if scalar_curvature(&v)?.min() > 0.0 || amplitude < 1e-6 {
                return Ok(v);
            }
            amplitude /= 2.0;
        }
    }

    fn kr(&self, (a, b): (f64, f64)) -> Result<ScalarField> {
        Ok(kr_field(KrParams::new(a, b)?, &self.grid))
    }

    fn report(&self, name: &str, l: usize, sup: f64, norm: f64, tol: f64) -> ResidualReport {
        ResidualReport::from_residual(name, self.cfg.band_limit, l, sup, norm, tol)
    }

    /// Runs `f`, turning an error into one failed report named `name`.
    fn guard(
        &self,
        name: &str,
        l: usize,
        f: impl FnOnce() -> Result<Vec<ResidualReport>>,
    ) -> Vec<ResidualReport> {
        f().unwrap_or_else(|e| vec![ResidualReport::failed(name, self.cfg.band_limit, l, e)])
    }
}

fn kr_label((a, b): (f64, f64)) -> String {
    format!("kr_a{a}_b{b}")
}

/// `sup v · sup|∇³v|²`, floored by `(sup v)³` so constant data has a scale.
fn q_scale(v: &ScalarField) -> Result<f64> {
    let s = v.sup_norm();
    Ok(s * iterated_derivative(v, 3)?.sup_norm().powi(2) + s.powi(3))
}

fn tensor_checks(ctx: &Ctx, seed: u64) -> Vec<ResidualReport> {
    let l = ctx.cfg.l_max_data;
    let z_factor = ctx.cfg.q_options().z_factor;
    let mut out = ctx.guard(&format!("z_identity_seed{seed}"), l, || {
        let v = ctx.random(seed)?;
        let d3 = iterated_derivative(&v, 3)?;
        let b = symmetrize3(&d3)?;
        let (tfb, z) = tf3_with(&b, z_factor, 0.0)?;
        let expected = gradient(&laplacian(&v))
            .add(&gradient(&v).scale(2.0 / 3.0))
            .scale(0.25);
        Ok(vec![
            ctx.report(
                &format!("z_identity_seed{seed}"),
                l,
                z.sub(&expected).sup_norm(),
                expected.sup_norm(),
                Z_TOL,
            ),
            ctx.report(
                &format!("tf_traces_seed{seed}"),
                l,
                tfb.max_trace(),
                b.sup_norm(),
                TRACE_TOL,
            ),
        ])
    });
    out.extend(ctx.guard(&format!("commutator_defect_seed{seed}"), l, || {
        let v = ctx.random(seed)?;
        let omega = gradient(&v);
        let scale = iterated_derivative(&v, 3)?.sup_norm();
        let defect = commutator_defect(&omega)?.sup_norm();
        Ok(vec![ctx.report(
            &format!("commutator_defect_seed{seed}"),
            l,
            defect,
            scale,
            COMMUTATOR_TOL,
        )])
    }));
    out.extend(ctx.guard(&format!("decompose4_seed{seed}"), l, || {
        let v = ctx.random(seed)?;
        let b = symmetrize3(&iterated_derivative(&v, 3)?)?;
        let (tfb, _) = tf3_with(&b, z_factor, 0.0)?;
        let c = covariant_derivative(&tfb)?
            .mul_field(&v)
            .add(&tensor_product(&gradient(&v), &tfb)?.scale(2.0));
        let d = decompose4(&c)?;
        let defect = reconstruct4(&d)
            .sub(&c)
            .sup_norm()
            .max(d.f.add(&d.e.scale(0.5)).sup_norm())
            .max(trace_pair(&d.e, 0, 1, Metric::Round)?.sup_norm());
        Ok(vec![ctx.report(
            &format!("decompose4_seed{seed}"),
            l,
            defect,
            c.sup_norm(),
            DECOMPOSE_TOL,
        )])
    }));
    out
}

/// Q-equation residual plus, on data where `Q ≡ 0`, absolute bounds on `Q`,
/// the residual and both squared terms.
fn q_checks(ctx: &Ctx, name: &str, l: usize, v: Result<ScalarField>, vanishing: bool) -> Vec<ResidualReport> {
    let opts = ctx.cfg.q_options();
    ctx.guard(&format!("q_equation_{name}"), l, || {
        let v = v?;
        let mut out = vec![q_residual_with(
            &v,
            l,
            ctx.cfg.tol,
            opts,
            &format!("q_equation_{name}"),
        )?];
        if vanishing {
            let scale = q_scale(&v)?;
            let rate_scale = scale * v.sup_norm();
            let q = q_field_with(&v, opts)?.sup_norm();
            out.push(ctx.report(&format!("q_vanishing_{name}"), l, q, scale, VANISH_TOL));
            let terms = q_rhs_terms_with(&v, opts)?;
            let lhs = q_lhs_with(&v, opts)?;
            let sup = terms
                .chat_term
                .sup_norm()
                .max(terms.trace_term.sup_norm())
                .max((&lhs - &terms.total()).sup_norm());
            out.push(ctx.report(
                &format!("q_terms_vanishing_{name}"),
                l,
                sup,
                rate_scale,
                VANISH_TOL,
            ));
        }
        Ok(out)
    })
}

fn harnack_checks(ctx: &Ctx, name: &str, l: usize, v: Result<ScalarField>, kr: bool) -> Vec<ResidualReport> {
    ctx.guard(&format!("remark_identity_{name}"), l, || {
        let v = v?;
        let tol = if kr { REMARK_KR_TOL } else { REMARK_TOL };
        let mut remark = remark_identity_residual(&v, l, tol)?;
        remark.name = format!("remark_identity_{name}");
        let mut a_red = a_reduction_residual(&v, l, A_TOL)?;
        a_red.name = format!("a_reduction_{name}");
        let mut out = vec![remark, a_red];
        if kr {
            // Both A and D = Δ(Δv + 6v) + 4v must be non-negative.
            let scale = v.sup_norm().powi(2);
            let a = harnack_a(&v)?;
            let d = fourth_order_d(&v);
            out.push(ctx.report(
                &format!("harnack_a_sign_{name}"),
                l,
                (-a.min()).max(0.0),
                scale,
                SIGN_TOL,
            ));
            out.push(ctx.report(
                &format!("fourth_order_{name}"),
                l,
                (-d.min()).max(0.0),
                v.sup_norm(),
                SIGN_TOL,
            ));
        } else {
            let mut s = sentinel_residual(&v, l, SENTINEL_TOL)?;
            s.name = format!("sentinel_{name}");
            out.push(s);
        }
        Ok(out)
    })
}

fn energy_checks(ctx: &Ctx) -> Vec<ResidualReport> {
    let mut out = ctx.guard("j_formula_kr", 2, || {
        let (a, b) = KR_CASES[0];
        let s0 = FlowState::new(0.0, ctx.kr((a, b))?)?;
        // Half the automatic step keeps the O(dt²) difference error well
        // inside the tolerance.
        let dt = 0.5 * DtPolicy::Auto.step_for(&s0.v);
        let states = run_flow(&s0, KR_WINDOW, DtPolicy::Fixed(dt), 1)?;
        let alphas = [0.0, 1.0, 2.0];
        let table = j_monotonicity_report(&states, &alphas)?;
        let mismatch = table.max_rel_mismatch();
        let rates = table.max_rate();
        let mut out = Vec::new();
        for (k, alpha) in alphas.iter().enumerate() {
            let j_size = table.rows.iter().map(|r| r.j[k].abs()).fold(0.0, f64::max);
            out.push(ctx.report(
                &format!("j_formula_kr_alpha{alpha}"),
                2,
                mismatch[k],
                1.0,
                J_FORMULA_TOL,
            ));
            out.push(ctx.report(
                &format!("j_sign_kr_alpha{alpha}"),
                2,
                rates[k].max(0.0),
                j_size + 1.0,
                J_SIGN_TOL,
            ));
        }
        Ok(out)
    });
    out.extend(ctx.guard("j2_round", 0, || {
        let s0 = FlowState::new(0.0, ScalarField::constant(&ctx.grid, 1.0))?;
        let states = run_flow(&s0, 0.1, DtPolicy::Auto, 1)?;
        let mut worst: f64 = 0.0;
        for s in states.iter().filter(|s| s.t > 0.0) {
            let a = 1.0 / (1.0 - 2.0 * s.t);
            let exact = -16.0 * std::f64::consts::PI * a.ln();
            worst = worst.max((j_alpha(&s.v, 2.0)? - exact).abs() / exact.abs());
        }
        Ok(vec![ctx.report("j2_round", 0, worst, 1.0, J_ROUND_TOL)])
    }));
    out
}

/// Runs every check at the configured band limit. Checks run concurrently;
/// the output is ordered by report name.
pub fn run_battery(cfg: &BatteryConfig) -> Result<BatteryOutcome> {
    let grid = build_grid(cfg.band_limit, cfg.oversample)?;
    // Surface configuration errors before any check swallows them.
    random_band_limited(cfg.seed, cfg.l_max_data, cfg.floor, cfg.amplitude, &grid)?;
    let ctx = Ctx {
        cfg: cfg.clone(),
        grid,
    };
    let ctx = &ctx;
    let l = cfg.l_max_data;

    let mut checks: Vec<Check> = Vec::new();
    for seed in cfg.seeds() {
        checks.push(Box::new(move || tensor_checks(ctx, seed)));
        checks.push(Box::new(move || {
            q_checks(ctx, &format!("seed{seed}"), l, ctx.random(seed), false)
        }));
        checks.push(Box::new(move || {
            harnack_checks(
                ctx,
                &format!("seed{seed}"),
                l,
                ctx.random_positive_curvature(seed),
                false,
            )
        }));
    }
    checks.push(Box::new(move || {
        q_checks(
            ctx,
            "constant",
            0,
            Ok(ScalarField::constant(&ctx.grid, ctx.cfg.floor)),
            true,
        )
    }));
    checks.push(Box::new(move || {
        let v = ScalarField::from_cartesian(&ctx.grid, |x, y, z| 2.0 + 0.3 * x - 0.2 * y + 0.5 * z);
        q_checks(ctx, "degree1", 1, Ok(v), true)
    }));
    for case in KR_CASES {
        checks.push(Box::new(move || {
            q_checks(ctx, &kr_label(case), 2, ctx.kr(case), true)
        }));
        checks.push(Box::new(move || {
            harnack_checks(ctx, &kr_label(case), 2, ctx.kr(case), true)
        }));
    }
    checks.push(Box::new(move || energy_checks(ctx)));

    let reports: Vec<ResidualReport> = par::map_range(checks.len(), |i| checks[i]())
        .into_iter()
        .flatten()
        .collect();

    let diag_opts = QOptions {
        trace: TraceReading::Evolving,
        ..cfg.q_options()
    };
    let diagnostics = par::map_range(3, |k| {
        let seed = cfg.seeds()[k];
        let name = format!("q_equation_evolving_trace_seed{seed}");
        ctx.guard(&name, l, || {
            Ok(vec![q_residual_with(
                &ctx.random(seed)?,
                l,
                cfg.tol,
                diag_opts,
                &name,
            )?])
        })
    })
    .into_iter()
    .flatten()
    .collect::<Vec<_>>();

    Ok(BatteryOutcome {
        reports: sorted_by_name(&reports),
        diagnostics: sorted_by_name(&diagnostics),
    })
}

/// Q-equation residual of one frozen smooth field at each band limit in
/// `bands`, in the given order.
pub fn convergence_sweep(
    seed: u64,
    bands: &[usize],
    oversample: usize,
    floor: f64,
    amplitude: f64,
    tol: f64,
) -> Result<Vec<ResidualReport>> {
    let results = par::map_range(bands.len(), |k| -> Result<ResidualReport> {
        let grid = build_grid(bands[k], oversample)?;
        let v = random_smooth(seed, FROZEN_RADIUS, floor, amplitude, &grid)?;
        q_residual_with(&v, 0, tol, QOptions::default(), "q_equation_frozen")
    });
    results.into_iter().collect()
}

/// `true` when every entry is strictly smaller than the one before.
pub fn strictly_decreasing(reports: &[ResidualReport]) -> bool {
    reports.windows(2).all(|w| w[1].rel_residual < w[0].rel_residual)
}
