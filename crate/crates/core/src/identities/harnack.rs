//! The Harnack quantity `A` for `g = g_{S²}/v`, `φ = log v`, and the identities
//! around it. Conformal rules: `Δ_g = vΔ`, `|ω|²_g = v|ω|²` for 1-forms and
//! `|β|²_g = v²|β|²` for 2-tensors.

use crate::error::{Error, Result};
use crate::flow::scalar_curvature;
use crate::spectral::{laplacian, ScalarField};
use crate::tensor::{gradient, inner, iterated_derivative, norm_sq, tensor_product, FrameTensor, Metric};

use super::report::ResidualReport;

/// Fails with the first grid point where `R <= 0`.
fn require_positive_curvature(r: &ScalarField) -> Result<()> {
    let (value, i, j) = r.argmin();
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveCurvature { value, i, j })
    }
}

/// Hessian of `f` for `g = e^{2u} g_{S²}`:
/// `Hess f - du⊗df - df⊗du + ⟨∇u, ∇f⟩ g_{S²}`.
fn conformal_hessian(f: &ScalarField, u: &ScalarField) -> Result<FrameTensor> {
    let df = gradient(f);
    let du = gradient(u);
    let dot = inner(&du, &df, Metric::Round)?;
    let cross = tensor_product(&du, &df)?;
    let sym = cross.add(&cross.permuted(&[1, 0]));
    let metric = FrameTensor::metric(f.grid()).mul_field(&dot);
    Ok(iterated_derivative(f, 2)?.sub(&sym).add(&metric))
}

/// Ingredients shared by [`harnack_a`] and [`remark_identity_residual`].
struct Ingredients {
    r: ScalarField,
    phi: ScalarField,
    dphi: FrameTensor,
    dr: FrameTensor,
    lap_g_phi: ScalarField,
}

fn ingredients(v: &ScalarField) -> Result<Ingredients> {
    v.require_positive()?;
    let r = scalar_curvature(v)?;
    require_positive_curvature(&r)?;
    let phi = v.map(f64::ln);
    let dphi = gradient(&phi);
    let dr = gradient(&r);
    let lap_g_phi = v * &laplacian(&phi);
    Ok(Ingredients {
        r,
        phi,
        dphi,
        dr,
        lap_g_phi,
    })
}

fn a_from(v: &ScalarField, ing: &Ingredients) -> Result<ScalarField> {
    let Ingredients {
        r,
        phi,
        dphi,
        dr,
        lap_g_phi,
    } = ing;
    let lap_g_r = v * &laplacian(r);
    let grad_r_sq = norm_sq(dr, Metric::Evolving(v));
    let shifted = dr.add(&dphi.mul_field(r));
    let shifted_sq = norm_sq(&shifted, Metric::Evolving(v));

    // ∇²_gφ - (1/2)Δ_gφ g, with g = g_{S²}/v, i.e. u = -(1/2) log v.
    let u = phi.scale(-0.5);
    let half_lap = (lap_g_phi / v).scale(0.5);
    let hess_tf = conformal_hessian(phi, &u)?.sub(&FrameTensor::metric(v.grid()).mul_field(&half_lap));
    let hess_sq = norm_sq(&hess_tf, Metric::Evolving(v));

    let mut out = &lap_g_r + &(r * r);
    out = &out + &(&(&shifted_sq - &grad_r_sq) / r);
    Ok(&out + &hess_sq.scale(2.0))
}

/// `A = Δ_g R + R² - |∇R|²_g/R + |∇R + R∇φ|²_g/R + 2|∇²_gφ - (1/2)Δ_gφ g|²_g`.
pub fn harnack_a(v: &ScalarField) -> Result<ScalarField> {
    a_from(v, &ingredients(v)?)
}

/// `D = Δ(Δv + 6v) + 4v`, with `A = vD` whenever `R > 0`.
pub fn fourth_order_d(v: &ScalarField) -> ScalarField {
    let u = &laplacian(v) + &v.scale(6.0);
    &laplacian(&u) + &v.scale(4.0)
}

/// Residual of `Δ_g(R + |∇φ|²_g) = A + 2g(∇(Δ_gφ - R), ∇φ) + (Δ_gφ)² - R²`,
/// both sides built independently.
pub fn remark_identity_residual(v: &ScalarField, l_max_data: usize, tol: f64) -> Result<ResidualReport> {
    let ing = ingredients(v)?;
    let a = a_from(v, &ing)?;
    let Ingredients {
        r, dphi, lap_g_phi, ..
    } = &ing;

    let lhs = v * &laplacian(&(r + &norm_sq(dphi, Metric::Evolving(v))));

    let sentinel = lap_g_phi - r;
    let cross = inner(&gradient(&sentinel), dphi, Metric::Evolving(v))?.scale(2.0);
    let squares = &(lap_g_phi * lap_g_phi) - &(r * r);
    let rhs = &(&a + &cross) + &squares;

    let terms = [lhs.sup_norm(), a.sup_norm(), cross.sup_norm(), squares.sup_norm()];
    Ok(ResidualReport::from_residual(
        "remark_identity",
        v.grid().band_limit(),
        l_max_data,
        (&lhs - &rhs).sup_norm(),
        top_two(terms) + v.sup_norm().powi(2),
        tol,
    ))
}

/// Residual of the sentinel `Δ_gφ - R = -2v`.
pub fn sentinel_residual(v: &ScalarField, l_max_data: usize, tol: f64) -> Result<ResidualReport> {
    v.require_positive()?;
    let r = scalar_curvature(v)?;
    let lap_g_phi = v * &laplacian(&v.map(f64::ln));
    let lhs = &lap_g_phi - &r;
    let sup = (&lhs + &v.scale(2.0)).sup_norm();
    let normalizer = top_two([lap_g_phi.sup_norm(), r.sup_norm(), 2.0 * v.sup_norm()]);
    Ok(ResidualReport::from_residual(
        "sentinel",
        v.grid().band_limit(),
        l_max_data,
        sup,
        normalizer,
        tol,
    ))
}

/// Residual of `A = v(Δ(Δv + 6v) + 4v)`.
pub fn a_reduction_residual(v: &ScalarField, l_max_data: usize, tol: f64) -> Result<ResidualReport> {
    let a = harnack_a(v)?;
    let vd = v * &fourth_order_d(v);
    Ok(ResidualReport::from_residual(
        "a_reduction",
        v.grid().band_limit(),
        l_max_data,
        (&a - &vd).sup_norm(),
        a.sup_norm().max(vd.sup_norm()) + v.sup_norm().powi(2),
        tol,
    ))
}

/// Minimum of `D = Δ(Δv + 6v) + 4v` over the grid, and the `A = vD` residual
/// when `R > 0` everywhere.
pub fn fourth_order_check(
    v: &ScalarField,
    l_max_data: usize,
    tol: f64,
) -> Result<(f64, Option<ResidualReport>)> {
    v.require_positive()?;
    let d_min = fourth_order_d(v).min();
    let report = match a_reduction_residual(v, l_max_data, tol) {
        Ok(r) => Some(r),
        Err(Error::NonPositiveCurvature { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok((d_min, report))
}

pub(crate) fn top_two<const N: usize>(mut sizes: [f64; N]) -> f64 {
    sizes.sort_by(|a, b| b.total_cmp(a));
    sizes.iter().take(2).sum()
}
