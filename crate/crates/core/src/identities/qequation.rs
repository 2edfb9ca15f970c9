//! The evolution equation of `Q = v|TF(b)|²`, `b = S(∇³v)`.

use crate::error::Result;
use crate::flow::{flow_rhs, scalar_curvature};
use crate::spectral::{laplacian, ScalarField};
use crate::tensor::{
    covariant_derivative, decompose4_with, gradient, inner, iterated_derivative, norm_sq, symmetrize3,
    tensor_product, tf2_with, tf3_with, trace_pair, FrameTensor, Metric,
};

use super::report::ResidualReport;

/// Which metric contracts `dv⊗TF(b)` in the last term of the right-hand side.
///
/// The display tags this one trace with the evolving metric, but only the
/// round contraction makes the equation hold (the other reading leaves an
/// O(1) residual that does not shrink under refinement). Both are kept so the
/// two can be reported side by side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TraceReading {
    #[default]
    Round,
    Evolving,
}

/// Options shared by the Q-equation evaluators. `z_factor` is `1/4` except in
/// negative controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QOptions {
    pub z_factor: f64,
    pub trace: TraceReading,
}

impl Default for QOptions {
    fn default() -> Self {
        Self {
            z_factor: 0.25,
            trace: TraceReading::Round,
        }
    }
}

/// Magnitude that round-off in the derivative stack is measured against:
/// `sup v · (sup|∇³v| + sup v)`.
fn reference_scale(v: &ScalarField, d3: &FrameTensor) -> f64 {
    let s = v.sup_norm();
    s * (d3.sup_norm() + s)
}

/// `(b, TF(b), z)` for `b = S(∇³v)`.
pub fn b_operator(v: &ScalarField) -> Result<(FrameTensor, FrameTensor, FrameTensor)> {
    b_operator_with(v, QOptions::default())
}

pub fn b_operator_with(v: &ScalarField, opts: QOptions) -> Result<(FrameTensor, FrameTensor, FrameTensor)> {
    let d3 = iterated_derivative(v, 3)?;
    let b = symmetrize3(&d3)?;
    let (tfb, z) = tf3_with(&b, opts.z_factor, reference_scale(v, &d3))?;
    Ok((b, tfb, z))
}

/// `Q = v |TF(b)|²`.
pub fn q_field(v: &ScalarField) -> Result<ScalarField> {
    q_field_with(v, QOptions::default())
}

pub fn q_field_with(v: &ScalarField, opts: QOptions) -> Result<ScalarField> {
    v.require_positive()?;
    let (_, tfb, _) = b_operator_with(v, opts)?;
    Ok(v * &norm_sq(&tfb, Metric::Round))
}

/// `∂Q/∂t` by linearity: with `w = ∂v/∂t` and `B = TF∘S∘∇³`,
/// `w|B v|² + 2v⟨B w, B v⟩`.
pub fn q_lhs(v: &ScalarField) -> Result<ScalarField> {
    q_lhs_with(v, QOptions::default())
}

pub fn q_lhs_with(v: &ScalarField, opts: QOptions) -> Result<ScalarField> {
    let w = flow_rhs(v)?;
    let (_, bv, _) = b_operator_with(v, opts)?;
    let (_, bw, _) = b_operator_with(&w, opts)?;
    let cross = inner(&bw, &bv, Metric::Round)?;
    Ok(&(&w * &norm_sq(&bv, Metric::Round)) + &(v * &cross).scale(2.0))
}

/// The four terms of the right-hand side, kept apart for normalization and
/// diagnostics.
#[derive(Clone, Debug)]
pub struct QRhsTerms {
    /// `vΔQ`
    pub diffusion: ScalarField,
    /// `-4RQ`
    pub reaction: ScalarField,
    /// `-2|ĉ(v∇TF(b) + 2 dv⊗TF(b))|²`
    pub chat_term: ScalarField,
    /// `-(1/2)|v TF(∇²(Δv + 6v)) - 2 tr^{1,2}(dv⊗TF(b))|²`
    pub trace_term: ScalarField,
}

impl QRhsTerms {
    pub fn total(&self) -> ScalarField {
        &(&(&self.diffusion + &self.reaction) + &self.chat_term) + &self.trace_term
    }
}

pub fn q_rhs_terms(v: &ScalarField) -> Result<QRhsTerms> {
    q_rhs_terms_with(v, QOptions::default())
}

pub fn q_rhs_terms_with(v: &ScalarField, opts: QOptions) -> Result<QRhsTerms> {
    v.require_positive()?;
    let d3 = iterated_derivative(v, 3)?;
    let reference = reference_scale(v, &d3);
    let b = symmetrize3(&d3)?;
    let (tfb, _) = tf3_with(&b, opts.z_factor, reference)?;
    let q = v * &norm_sq(&tfb, Metric::Round);
    let r = scalar_curvature(v)?;

    let diffusion = v * &laplacian(&q);
    let reaction = (&r * &q).scale(-4.0);

    let dv = gradient(v);
    let dv_tfb = tensor_product(&dv, &tfb)?;
    let c = covariant_derivative(&tfb)?.mul_field(v).add(&dv_tfb.scale(2.0));
    let dec = decompose4_with(&c, reference * v.sup_norm())?;
    let chat_term = norm_sq(&dec.chat, Metric::Round).scale(-2.0);

    let lap = laplacian(v);
    let u = &lap + &v.scale(6.0);
    let hess_u = iterated_derivative(&u, 2)?;
    let tf_hess = tf2_with(&hess_u, reference)?.mul_field(v);
    let metric = match opts.trace {
        TraceReading::Round => Metric::Round,
        TraceReading::Evolving => Metric::Evolving(v),
    };
    let tr = trace_pair(&dv_tfb, 0, 1, metric)?;
    let inside = tf_hess.sub(&tr.scale(2.0));
    let trace_term = norm_sq(&inside, Metric::Round).scale(-0.5);

    Ok(QRhsTerms {
        diffusion,
        reaction,
        chat_term,
        trace_term,
    })
}

/// `vΔQ - 4RQ - 2|ĉ(…)|² - (1/2)|…|²`.
pub fn q_rhs(v: &ScalarField) -> Result<ScalarField> {
    Ok(q_rhs_terms(v)?.total())
}

/// `sup v · sup|∇³v|²`, the size of `Q` for generic data.
pub fn q_scale(v: &ScalarField) -> Result<f64> {
    let d3 = iterated_derivative(v, 3)?;
    Ok(v.sup_norm() * d3.sup_norm().powi(2))
}

/// Residual of the Q-equation at `v`, relative to the two largest of
/// `q_lhs` and the right-hand terms plus a guard `(sup v)⁴`.
pub fn q_residual(v: &ScalarField, l_max_data: usize, tol: f64) -> Result<ResidualReport> {
    q_residual_with(v, l_max_data, tol, QOptions::default(), "q_equation")
}

pub fn q_residual_with(
    v: &ScalarField,
    l_max_data: usize,
    tol: f64,
    opts: QOptions,
    name: &str,
) -> Result<ResidualReport> {
    let lhs = q_lhs_with(v, opts)?;
    let terms = q_rhs_terms_with(v, opts)?;
    let rhs = terms.total();
    let sup = (&lhs - &rhs).sup_norm();
    let mut sizes = [
        lhs.sup_norm(),
        terms.diffusion.sup_norm(),
        terms.reaction.sup_norm(),
        terms.chat_term.sup_norm(),
        terms.trace_term.sup_norm(),
    ];
    sizes.sort_by(|a, b| b.total_cmp(a));
    let guard = v.sup_norm().powi(4);
    let normalizer = sizes[0] + sizes[1] + guard;
    Ok(ResidualReport::from_residual(
        name,
        v.grid().band_limit(),
        l_max_data,
        sup,
        normalizer,
        tol,
    ))
}
