//! Ricci flow of the pressure `v` (metric `g = g_{S²}/v`), which obeys
//! `∂v/∂t = vR = vΔv - |∇v|² + 2v²`, together with exact-solution oracles.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::{frame_derivatives, laplacian, low_pass, ScalarField, SphereGrid};

/// A snapshot of the flow.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub v: ScalarField,
}

impl FlowState {
    /// Rejects states whose pressure is not strictly positive.
    pub fn new(t: f64, v: ScalarField) -> Result<Self> {
        v.require_positive()?;
        Ok(Self { t, v })
    }
}

/// Coefficients of the King–Rosenau family `v = a + b x₃²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrParams {
    pub a: f64,
    pub b: f64,
}

impl KrParams {
    /// `v > 0` on the sphere iff `a > 0` and `a + b > 0`.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a > 0.0 && a + b > 0.0 && a.is_finite() && b.is_finite() {
            Ok(Self { a, b })
        } else {
            Err(Error::InvalidKr { a, b })
        }
    }

    /// Right-hand side of the coefficient system `a' = 2a(a+b)`,
    /// `b' = -2b(a+b)`.
    pub fn derivative(&self) -> (f64, f64) {
        let s = self.a + self.b;
        (2.0 * self.a * s, -2.0 * self.b * s)
    }
}

/// `|∇v|²` with respect to the round metric.
pub fn grad_norm_sq(v: &ScalarField) -> ScalarField {
    let (d1, d2) = frame_derivatives(v);
    d1.zip_map(&d2, |a, b| a * a + b * b)
}

/// `R = Δv - |∇v|²/v + 2v`.
pub fn scalar_curvature(v: &ScalarField) -> Result<ScalarField> {
    v.require_positive()?;
    let lap = laplacian(v);
    let grad = grad_norm_sq(v);
    let mut out = lap;
    for ((r, &g), &v) in out.values_mut().iter_mut().zip(grad.values()).zip(v.values()) {
        *r = *r - g / v + 2.0 * v;
    }
    Ok(out)
}

/// `∂v/∂t = vΔv - |∇v|² + 2v²`.
pub fn flow_rhs(v: &ScalarField) -> Result<ScalarField> {
    v.require_positive()?;
    let lap = laplacian(v);
    let grad = grad_norm_sq(v);
    let mut out = lap;
    for ((r, &g), &v) in out.values_mut().iter_mut().zip(grad.values()).zip(v.values()) {
        *r = v * *r - g + 2.0 * v * v;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtPolicy {
    /// `dt = 1 / (max v · L(L+1))`, re-evaluated every step.
    Auto,
    Fixed(f64),
}

impl DtPolicy {
    pub fn step_for(&self, v: &ScalarField) -> f64 {
        match *self {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Auto => {
                let l = v.grid().band_limit() as f64;
                1.0 / (v.max() * l * (l + 1.0))
            }
        }
    }
}

/// One classical RK4 step followed by the degree-`L` low-pass filter.
pub fn rk4_step(s: &FlowState, dt: f64) -> Result<FlowState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidStep(dt));
    }
    let stage = |t: f64, v: &ScalarField| -> Result<ScalarField> {
        flow_rhs(v).map_err(|e| match e {
            Error::NonPositive { .. } => Error::BlowUp { t },
            other => other,
        })
    };
    let v = &s.v;
    let k1 = stage(s.t, v)?;
    let v2 = v.zip_map(&k1, |v, k| v + 0.5 * dt * k);
    let k2 = stage(s.t + 0.5 * dt, &v2)?;
    let v3 = v.zip_map(&k2, |v, k| v + 0.5 * dt * k);
    let k3 = stage(s.t + 0.5 * dt, &v3)?;
    let v4 = v.zip_map(&k3, |v, k| v + dt * k);
    let k4 = stage(s.t + dt, &v4)?;

    let mut next = v.clone();
    for (i, x) in next.values_mut().iter_mut().enumerate() {
        let incr = k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i];
        *x += dt / 6.0 * incr;
    }
    let next = low_pass(&next);
    let t = s.t + dt;
    if next.require_positive().is_err() {
        return Err(Error::BlowUp { t });
    }
    Ok(FlowState { t, v: next })
}

/// Integrates to `t_end`, recording the initial state, every `stride`-th
/// state and the final state. The last step is shortened to land on `t_end`.
pub fn run_flow(s0: &FlowState, t_end: f64, policy: DtPolicy, stride: usize) -> Result<Vec<FlowState>> {
    s0.v.require_positive()?;
    let stride = stride.max(1);
    let mut out = vec![s0.clone()];
    let mut state = s0.clone();
    let mut steps = 0usize;
    let eps = 1e-13 * t_end.abs().max(1.0);
    while state.t < t_end - eps {
        let mut dt = policy.step_for(&state.v);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidStep(dt));
        }
        let last = state.t + dt >= t_end - eps;
        if last {
            dt = t_end - state.t;
        }
        state = rk4_step(&state, dt)?;
        if last {
            state.t = t_end;
        }
        steps += 1;
        if last || steps.is_multiple_of(stride) {
            out.push(state.clone());
        }
    }
    Ok(out)
}

/// `a + b x₃²` sampled on the grid.
pub fn kr_field(p: KrParams, grid: &Arc<SphereGrid>) -> ScalarField {
    ScalarField::from_cartesian(grid, |_, _, z| p.a + p.b * z * z)
}

/// Sup-norm distance of `v` from `span{1, x₃²}` after an `L²` fit.
pub fn distance_from_kr_family(v: &ScalarField) -> f64 {
    use crate::spectral::integrate;
    let grid = v.grid();
    let one = ScalarField::constant(grid, 1.0);
    let q = ScalarField::from_cartesian(grid, |_, _, z| z * z);
    let (g11, g12, g22) = (integrate(&one), integrate(&q), integrate(&(&q * &q)));
    let (r1, r2) = (integrate(v), integrate(&(v * &q)));
    let det = g11 * g22 - g12 * g12;
    let a = (r1 * g22 - r2 * g12) / det;
    let b = (g11 * r2 - g12 * r1) / det;
    v.zip_map(&q, |v, q| v - a - b * q).sup_norm()
}

/// Integrates the King–Rosenau coefficient system to time `t` with an
/// adaptive Dormand–Prince 5(4) pair at tolerance `1e-12`.
pub fn kr_evolve(p0: KrParams, t: f64) -> Result<KrParams> {
    let p0 = KrParams::new(p0.a, p0.b)?;
    if t == 0.0 {
        return Ok(p0);
    }
    let f = |y: [f64; 2]| -> [f64; 2] {
        let s = y[0] + y[1];
        [2.0 * y[0] * s, -2.0 * y[1] * s]
    };
    let y = dopri5(f, [p0.a, p0.b], t, 1e-12)?;
    KrParams::new(y[0], y[1])
}

const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dopri5(f: impl Fn([f64; 2]) -> [f64; 2], y0: [f64; 2], t_end: f64, tol: f64) -> Result<[f64; 2]> {
    let dir = t_end.signum();
    let mut t = 0.0f64;
    let mut y = y0;
    let mut h = dir * (t_end.abs() * 1e-3).min(1e-3);
    let mut guard = 0usize;
    while (t_end - t) * dir > 0.0 {
        guard += 1;
        if guard > 10_000_000 {
            return Err(Error::InvalidStep(h));
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        let mut k = [[0.0; 2]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                ys[0] += h * DP_A[s][j] * kj[0];
                ys[1] += h * DP_A[s][j] * kj[1];
            }
            k[s] = f(ys);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for d in 0..2 {
            let mut e = 0.0;
            for s in 0..7 {
                y5[d] += h * DP_B5[s] * k[s][d];
                e += h * (DP_B5[s] - DP_B4[s]) * k[s][d];
            }
            let sc = tol * (1.0 + y[d].abs().max(y5[d].abs()));
            err = err.max((e / sc).abs());
        }
        if !y5.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidKr { a: y5[0], b: y5[1] });
        }
        if err <= 1.0 {
            t += h;
            y = y5;
            if !(y[0] > 0.0 && y[0] + y[1] > 0.0) {
                return Err(Error::InvalidKr { a: y[0], b: y[1] });
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kr_params_validation() {
        assert!(KrParams::new(1.0, -0.5).is_ok());
        assert!(KrParams::new(0.0, 1.0).is_err());
        assert!(KrParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn dopri_matches_exponential() {
        // y' = -y on both components
        let y = dopri5(|y| [-y[0], -y[1]], [1.0, 2.0], 1.0, 1e-12).unwrap();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-11);
        assert!((y[1] - 2.0 * (-1.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_steps() {
        let g = SphereGrid::new(8, 2).unwrap();
        let s = FlowState::new(0.0, ScalarField::constant(&g, 1.0)).unwrap();
        assert!(rk4_step(&s, 0.0).is_err());
        assert!(rk4_step(&s, f64::NAN).is_err());
        assert!(FlowState::new(0.0, ScalarField::constant(&g, 0.0)).is_err());
    }
}
