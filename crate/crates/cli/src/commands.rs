//! The four subcommands. Each returns an [`Exit`] code; files are written
//! once, atomically, after the computation finishes.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use sphere_ricci::flow::{kr_evolve, kr_field, run_flow, scalar_curvature, DtPolicy};
use sphere_ricci::identities::{
    convergence_sweep, csv_number, j_alpha, q_field, q_residual, q_scale, run_battery, strictly_decreasing,
    write_atomic, BatteryOutcome, ResidualReport,
};
use sphere_ricci::spectral::{build_grid, field_from_coefficient_file, random_band_limited};
use sphere_ricci::{Error, FlowState, KrParams, ScalarField, SphereGrid};

use crate::config::{Dt, Init, RunConfig};

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Failed = 1,
    Config = 2,
    BlowUp = 3,
}

const KR_DISTANCE_TOL: f64 = 1e-6;
const KR_VANISH_TOL: f64 = 1e-9;

/// Maps a library error onto the exit-code contract.
pub fn classify(e: &Error) -> Exit {
    match e {
        Error::BlowUp { .. } => Exit::BlowUp,
        Error::BandLimitTooSmall(_)
        | Error::OversampleTooSmall(_)
        | Error::CoefficientOutOfRange { .. }
        | Error::InvalidRandomField(_)
        | Error::InvalidStep(_)
        | Error::InvalidKr { .. }
        | Error::NonPositive { .. }
        | Error::CoefficientFile(_)
        | Error::Io(_)
        | Error::Json(_) => Exit::Config,
        _ => Exit::Failed,
    }
}

fn policy(cfg: &RunConfig) -> DtPolicy {
    match cfg.dt {
        Dt::Auto => DtPolicy::Auto,
        Dt::Fixed(dt) => DtPolicy::Fixed(dt),
    }
}

fn initial_data(cfg: &RunConfig, grid: &Arc<SphereGrid>) -> Result<ScalarField, Error> {
    match &cfg.init {
        Init::Round => Ok(ScalarField::constant(grid, cfg.a0)),
        Init::Kr => Ok(kr_field(KrParams::new(cfg.a0, cfg.b0)?, grid)),
        Init::Random => random_band_limited(cfg.seed, cfg.l_max_data, cfg.floor, cfg.amplitude, grid),
        Init::File(path) => field_from_coefficient_file(path, grid),
    }
}

fn write_or_print(path: Option<&Path>, contents: &str) -> Result<(), Error> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

/// Writes the report document when a path is configured.
fn emit_report(cfg: &RunConfig, outcome: &BatteryOutcome) -> Result<(), Error> {
    if let Some(p) = &cfg.report {
        write_atomic(p, &outcome.to_json()?)?;
    }
    Ok(())
}

fn summarize(outcome: &BatteryOutcome) {
    for r in outcome.failures() {
        match &r.error {
            Some(e) => eprintln!("FAIL {}: {e}", r.name),
            None => eprintln!(
                "FAIL {}: rel_residual {:e} > {:e}",
                r.name, r.rel_residual, r.tolerance
            ),
        }
    }
    let passed = outcome.reports.iter().filter(|r| r.passed).count();
    eprintln!("{passed}/{} reports passed", outcome.reports.len());
}

fn positivity_report(cfg: &RunConfig, error: Option<&Error>) -> ResidualReport {
    let l = cfg.l_max_data;
    match error {
        Some(e) => ResidualReport::failed("flow_positivity", cfg.band_limit, l, e.to_string()),
        None => ResidualReport::new("flow_positivity", cfg.band_limit, l, 0.0, 0.0, 0.0),
    }
}

/// Runs the residual battery; the JSON goes to `--report` or stdout.
pub fn cmd_verify(cfg: &RunConfig) -> Result<Exit, Error> {
    let outcome = run_battery(&cfg.battery())?;
    match &cfg.report {
        Some(_) => emit_report(cfg, &outcome)?,
        None => print!("{}", outcome.to_json()?),
    }
    summarize(&outcome);
    Ok(if outcome.passed() { Exit::Ok } else { Exit::Failed })
}

/// Integrates the flow and writes one CSV row per recorded state.
pub fn cmd_flow(cfg: &RunConfig) -> Result<Exit, Error> {
    let grid = build_grid(cfg.band_limit, cfg.oversample)?;
    let s0 = FlowState::new(0.0, initial_data(cfg, &grid)?)?;
    let states = match run_flow(&s0, cfg.t_end, policy(cfg), cfg.stride) {
        Ok(s) => s,
        Err(e @ Error::BlowUp { .. }) => {
            let outcome = BatteryOutcome {
                reports: vec![positivity_report(cfg, Some(&e))],
                diagnostics: vec![],
            };
            emit_report(cfg, &outcome)?;
            eprintln!("{e}");
            return Ok(Exit::BlowUp);
        }
        Err(e) => return Err(e),
    };

    let mut csv = String::from("t,v_min,v_max,R_min,R_max,Q_sup");
    for a in &cfg.alphas {
        write!(csv, ",J_{a}").unwrap();
    }
    csv.push_str(",q_rel_residual\n");
    let mut worst = ResidualReport::new(
        "q_equation_along_flow",
        cfg.band_limit,
        cfg.l_max_data,
        0.0,
        0.0,
        cfg.tol,
    );
    for s in &states {
        let r = scalar_curvature(&s.v)?;
        let mut row = vec![
            s.t,
            s.v.min(),
            s.v.max(),
            r.min(),
            r.max(),
            q_field(&s.v)?.sup_norm(),
        ];
        for &a in &cfg.alphas {
            row.push(j_alpha(&s.v, a)?);
        }
        let q = q_residual(&s.v, cfg.l_max_data, cfg.tol)?;
        row.push(q.rel_residual);
        if q.rel_residual >= worst.rel_residual {
            worst = ResidualReport {
                name: worst.name.clone(),
                ..q
            };
        }
        csv.push_str(&row.iter().map(|x| csv_number(*x)).collect::<Vec<_>>().join(","));
        csv.push('\n');
    }
    write_or_print(cfg.csv.as_deref(), &csv)?;
    let outcome = BatteryOutcome {
        reports: vec![positivity_report(cfg, None)],
        diagnostics: vec![worst],
    };
    emit_report(cfg, &outcome)?;
    let last = states.last().expect("run_flow records the initial state");
    eprintln!("t = {}: v in [{:e}, {:e}]", last.t, last.v.min(), last.v.max());
    Ok(Exit::Ok)
}

/// Flows King–Rosenau data and compares against the coefficient ODE; `Q`
/// must vanish along the way.
pub fn cmd_kr(cfg: &RunConfig) -> Result<Exit, Error> {
    let grid = build_grid(cfg.band_limit, cfg.oversample)?;
    let p0 = KrParams::new(cfg.a0, cfg.b0)?;
    let s0 = FlowState::new(0.0, kr_field(p0, &grid))?;
    let states = match run_flow(&s0, cfg.t_end, policy(cfg), cfg.stride) {
        Ok(s) => s,
        Err(e @ Error::BlowUp { .. }) => {
            let outcome = BatteryOutcome {
                reports: vec![positivity_report(cfg, Some(&e))],
                diagnostics: vec![],
            };
            emit_report(cfg, &outcome)?;
            eprintln!("{e}");
            return Ok(Exit::BlowUp);
        }
        Err(e) => return Err(e),
    };

    let mut csv = String::from("t,a,b,pde_ode_distance,Q_sup,Q_scale\n");
    let (mut distance, mut vanish) = (0.0f64, 0.0f64);
    for s in &states {
        let p = kr_evolve(p0, s.t)?;
        let d = (&s.v - &kr_field(p, &grid)).sup_norm();
        let q = q_field(&s.v)?.sup_norm();
        // The guard keeps the ratio finite on round data, where ∇³v = 0.
        let scale = q_scale(&s.v)? + s.v.sup_norm().powi(3);
        distance = distance.max(d);
        vanish = vanish.max(q / scale);
        let row = [s.t, p.a, p.b, d, q, scale];
        csv.push_str(&row.iter().map(|x| csv_number(*x)).collect::<Vec<_>>().join(","));
        csv.push('\n');
    }
    write_or_print(cfg.csv.as_deref(), &csv)?;
    let (l, band) = (2, cfg.band_limit);
    let outcome = BatteryOutcome {
        reports: vec![
            positivity_report(cfg, None),
            ResidualReport::new("kr_pde_vs_ode", band, l, distance, distance, KR_DISTANCE_TOL),
            ResidualReport::new("kr_q_vanishing", band, l, vanish, vanish, KR_VANISH_TOL),
        ],
        diagnostics: vec![],
    };
    emit_report(cfg, &outcome)?;
    summarize(&outcome);
    Ok(if outcome.passed() { Exit::Ok } else { Exit::Failed })
}

/// Q-equation residual of frozen smooth data over `--lmax-list`; the column
/// must decrease strictly.
pub fn cmd_convergence(cfg: &RunConfig) -> Result<Exit, Error> {
    let sweep = convergence_sweep(
        cfg.seed,
        &cfg.lmax_list,
        cfg.oversample,
        cfg.floor,
        cfg.amplitude,
        cfg.tol,
    )?;
    let mut csv = String::from("L,rel_residual\n");
    for r in &sweep {
        writeln!(csv, "{},{}", r.band_limit, csv_number(r.rel_residual)).unwrap();
    }
    write_or_print(cfg.csv.as_deref(), &csv)?;

    let monotone = strictly_decreasing(&sweep);
    let last = sweep.last().map_or(0.0, |r| r.rel_residual);
    let band = cfg.lmax_list.iter().copied().max().unwrap_or(0);
    let mut verdict = ResidualReport::new("convergence_monotone", band, 0, last, last, f64::INFINITY);
    verdict.passed = monotone;
    let diagnostics = sweep
        .into_iter()
        .map(|r| ResidualReport {
            name: format!("q_equation_frozen_L{}", r.band_limit),
            ..r
        })
        .collect();
    let outcome = BatteryOutcome {
        reports: vec![verdict],
        diagnostics,
    };
    emit_report(cfg, &outcome)?;
    if !monotone {
        eprintln!(
            "rel_residual is not strictly decreasing over L = {:?}",
            cfg.lmax_list
        );
    }
    Ok(if monotone { Exit::Ok } else { Exit::Failed })
}
