//! The energies `J_α = ∫(|∇v|²/v^α + F_α(v)) dμ` and their rate along the flow.

use crate::error::{Error, Result};
use crate::flow::{flow_rhs, grad_norm_sq, FlowState};
use crate::spectral::{integrate, ScalarField};

use super::report::csv_number;

/// `F_α(v) = -4/(2-α) v^{2-α}`, and `F₂(v) = -4 log v`.
pub fn f_alpha(v: f64, alpha: f64) -> f64 {
    if alpha == 2.0 {
        -4.0 * v.ln()
    } else {
        -4.0 / (2.0 - alpha) * v.powf(2.0 - alpha)
    }
}

pub fn j_alpha(v: &ScalarField, alpha: f64) -> Result<f64> {
    v.require_positive()?;
    let grad = grad_norm_sq(v);
    let integrand = grad.zip_map(v, |g, v| g / v.powf(alpha) + f_alpha(v, alpha));
    Ok(integrate(&integrand))
}

/// `dJ_α/dt = ∫(-2v_t - (2-α)|∇v|²) v_t / v^{α+1} dμ` with `v_t` from the flow.
pub fn dj_alpha_formula(v: &ScalarField, alpha: f64) -> Result<f64> {
    let vt = flow_rhs(v)?;
    let grad = grad_norm_sq(v);
    let factor = vt.zip_map(&grad, |vt, g| -2.0 * vt - (2.0 - alpha) * g);
    let weight = vt.zip_map(v, |vt, v| vt / v.powf(alpha + 1.0));
    Ok(integrate(&(&factor * &weight)))
}

/// One row of the energy table.
#[derive(Clone, Debug, PartialEq)]
pub struct JRow {
    pub t: f64,
    pub j: Vec<f64>,
    pub dj_formula: Vec<f64>,
    /// Centered difference of `J` in time; absent at the first and last state.
    pub dj_difference: Option<Vec<f64>>,
}

/// `J_α` and its rate along a sequence of flow states.
#[derive(Clone, Debug, PartialEq)]
pub struct JTable {
    pub alphas: Vec<f64>,
    pub rows: Vec<JRow>,
}

impl JTable {
    /// Largest `|difference - formula| / |formula|` over interior rows, per α.
    pub fn max_rel_mismatch(&self) -> Vec<f64> {
        (0..self.alphas.len())
            .map(|k| {
                self.rows
                    .iter()
                    .filter_map(|r| {
                        let fd = r.dj_difference.as_ref()?[k];
                        let f = r.dj_formula[k];
                        Some((fd - f).abs() / f.abs().max(f64::MIN_POSITIVE))
                    })
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    /// Largest sampled rate (formula or difference), per α.
    pub fn max_rate(&self) -> Vec<f64> {
        (0..self.alphas.len())
            .map(|k| {
                self.rows
                    .iter()
                    .flat_map(|r| {
                        let fd = r.dj_difference.as_ref().map(|d| d[k]);
                        std::iter::once(r.dj_formula[k]).chain(fd)
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    /// Columns `t, J_α…, dJ_α_formula…`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for a in &self.alphas {
            out += &format!(",J_{a}");
        }
        for a in &self.alphas {
            out += &format!(",dJ_{a}_formula");
        }
        out.push('\n');
        for r in &self.rows {
            out += &csv_number(r.t);
            for x in r.j.iter().chain(&r.dj_formula) {
                out.push(',');
                out += &csv_number(*x);
            }
            out.push('\n');
        }
        out
    }
}

/// Centered derivative on a non-uniform grid: exact for quadratics.
fn centered(t: [f64; 3], f: [f64; 3]) -> f64 {
    let h1 = t[1] - t[0];
    let h2 = t[2] - t[1];
    -h2 / (h1 * (h1 + h2)) * f[0] + (h2 - h1) / (h1 * h2) * f[1] + h1 / (h2 * (h1 + h2)) * f[2]
}

pub fn j_monotonicity_report(states: &[FlowState], alphas: &[f64]) -> Result<JTable> {
    if states.len() < 3 {
        return Err(Error::TooFewStates(states.len()));
    }
    let mut rows = Vec::with_capacity(states.len());
    for s in states {
        let j = alphas
            .iter()
            .map(|&a| j_alpha(&s.v, a))
            .collect::<Result<Vec<_>>>()?;
        let dj_formula = alphas
            .iter()
            .map(|&a| dj_alpha_formula(&s.v, a))
            .collect::<Result<Vec<_>>>()?;
        rows.push(JRow {
            t: s.t,
            j,
            dj_formula,
            dj_difference: None,
        });
    }
    for i in 1..rows.len() - 1 {
        let t = [rows[i - 1].t, rows[i].t, rows[i + 1].t];
        let d = (0..alphas.len())
            .map(|k| centered(t, [rows[i - 1].j[k], rows[i].j[k], rows[i + 1].j[k]]))
            .collect();
        rows[i].dj_difference = Some(d);
    }
    Ok(JTable {
        alphas: alphas.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_is_exact_for_quadratics() {
        let f = |t: f64| 3.0 * t * t - 2.0 * t + 1.0;
        let t = [0.1, 0.13, 0.2];
        let d = centered(t, [f(t[0]), f(t[1]), f(t[2])]);
        assert!((d - (6.0 * 0.13 - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn f_alpha_values() {
        assert_eq!(f_alpha(1.0, 1.0), -4.0);
        assert_eq!(f_alpha(1.0, 2.0), 0.0);
        assert_eq!(f_alpha(3.0, 0.0), -18.0);
    }
}
