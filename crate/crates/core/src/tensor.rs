//! Covariant tensor calculus on the unit round sphere in the orthonormal frame
//! `e₁ = ∂θ`, `e₂ = (1/sinθ) ∂φ`.
//!
//! A rank-`k` tensor stores all `2^k` frame components; component
//! `(i₁, …, i_k)` (each index 0 or 1) sits at position `Σ i_r 2^{k-1-r}`, so the
//! first slot is the most significant bit. Round-metric norms and traces are
//! plain component sums in this frame.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::par;
use crate::spectral::{d_phi, d_theta_with_parity, frame_derivatives, Parity, ScalarField, SphereGrid};

/// Relative tolerance for symmetry and trace-freeness preconditions.
pub const PRECONDITION_TOL: f64 = 1e-6;

pub const MAX_RANK: usize = 4;

/// Metric used for traces and norms.
#[derive(Clone, Copy, Debug)]
pub enum Metric<'a> {
    /// The unit round metric `g_{S²}`.
    Round,
    /// The evolving metric `g = g_{S²} / v`, given `v`.
    Evolving(&'a ScalarField),
}

#[derive(Clone, Debug)]
pub struct FrameTensor {
    rank: usize,
    components: Vec<ScalarField>,
}

fn multi_index(mut flat: usize, rank: usize) -> [usize; MAX_RANK + 1] {
    let mut idx = [0; MAX_RANK + 1];
    for r in (0..rank).rev() {
        idx[r] = flat & 1;
        flat >>= 1;
    }
    idx
}

fn flat_index(idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| (acc << 1) | i)
}

impl FrameTensor {
    pub fn new(rank: usize, components: Vec<ScalarField>) -> Result<Self> {
        if rank > MAX_RANK {
            return Err(Error::Rank(format!("rank {rank} exceeds {MAX_RANK}")));
        }
        if components.len() != 1 << rank {
            return Err(Error::Rank(format!(
                "rank {rank} needs {} components, got {}",
                1 << rank,
                components.len()
            )));
        }
        for c in &components[1..] {
            components[0].check_grid(c)?;
        }
        Ok(Self { rank, components })
    }

    pub fn scalar(f: ScalarField) -> Self {
        Self {
            rank: 0,
            components: vec![f],
        }
    }

    pub fn zeros(grid: &Arc<SphereGrid>, rank: usize) -> Self {
        assert!(rank <= MAX_RANK);
        Self {
            rank,
            components: vec![ScalarField::zeros(grid); 1 << rank],
        }
    }

    /// Builds a tensor from a function of the multi-index.
    pub fn from_fn(rank: usize, f: impl Fn(&[usize]) -> ScalarField) -> Self {
        assert!(rank <= MAX_RANK);
        let components = (0..1usize << rank)
            .map(|k| f(&multi_index(k, rank)[..rank]))
            .collect();
        Self { rank, components }
    }

    fn from_fn_par(rank: usize, f: impl Fn(&[usize]) -> ScalarField + Sync + Send) -> Self {
        let components = par::map_range(1 << rank, |k| f(&multi_index(k, rank)[..rank]));
        Self { rank, components }
    }

    /// The round metric `g_{S²}`: the identity in the frame.
    pub fn metric(grid: &Arc<SphereGrid>) -> Self {
        Self::from_fn(2, |i| {
            ScalarField::constant(grid, if i[0] == i[1] { 1.0 } else { 0.0 })
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        self.components[0].grid()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, idx: &[usize]) -> &ScalarField {
        assert_eq!(idx.len(), self.rank, "index length must equal rank");
        &self.components[flat_index(idx)]
    }

    /// The scalar of a rank-0 tensor.
    pub fn as_scalar(&self) -> &ScalarField {
        assert_eq!(self.rank, 0);
        &self.components[0]
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            rank: self.rank,
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_components(|x| x.scale(c))
    }

    /// Pointwise product with a scalar field.
    pub fn mul_field(&self, f: &ScalarField) -> Self {
        self.map_components(|x| x * f)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Self, f: impl Fn(&ScalarField, &ScalarField) -> ScalarField) -> Self {
        assert_eq!(self.rank, other.rank, "rank mismatch");
        Self {
            rank: self.rank,
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    /// Sup-norm over all components; the tensor's "scale".
    pub fn sup_norm(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.sup_norm()))
    }

    /// `U(i_0, …, i_{k-1}) = T(i_{order[0]}, …, i_{order[k-1]})`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.rank);
        let rank = self.rank;
        Self::from_fn(rank, |i| {
            let mut src = [0; MAX_RANK];
            for (r, &o) in order.iter().enumerate() {
                src[r] = i[o];
            }
            self.component(&src[..rank]).clone()
        })
    }

    /// Largest sup-norm difference between `T` and any slot permutation of it
    /// that only moves slots `first..rank`.
    pub fn asymmetry_from(&self, first: usize) -> f64 {
        let rank = self.rank;
        let mut worst: f64 = 0.0;
        for order in permutations(rank) {
            if (0..first).any(|r| order[r] != r) {
                continue;
            }
            worst = worst.max(self.sub(&self.permuted(&order)).sup_norm());
        }
        worst
    }

    /// Total asymmetry: largest difference from any slot permutation.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry_from(0)
    }

    /// Largest sup-norm of a round trace over any slot pair.
    pub fn max_trace(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for p in 0..self.rank {
            for q in (p + 1)..self.rank {
                let t = trace_pair(self, p, q, Metric::Round).expect("valid slots");
                worst = worst.max(t.sup_norm());
            }
        }
        worst
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn check(what: &str, defect: f64, scale: f64) -> Result<()> {
    let bound = PRECONDITION_TOL * scale;
    if defect <= bound {
        Ok(())
    } else {
        Err(Error::Precondition {
            what: what.to_string(),
            defect,
            bound,
        })
    }
}

/// `(∇T)(W, X₁…X_k) = (∇_W T)(X₁…X_k)`; the new slot is first.
///
/// The tensor is lifted to its Cartesian components in `R³` (smooth scalar
/// functions on the sphere), each component is differentiated along `e₁` and
/// `e₂` with [`frame_derivatives`], and the old slots are projected back onto
/// the frame. Tangential projection of the ambient derivative is the
/// Levi-Civita connection of the unit sphere.
pub fn covariant_derivative(t: &FrameTensor) -> Result<FrameTensor> {
    let k = t.rank;
    if k >= MAX_RANK {
        return Err(Error::Rank(format!("cannot differentiate a rank-{k} tensor")));
    }
    let grid = Arc::clone(t.grid());
    let frame = FrameVectors::new(&grid);

    let mut dims = vec![2; k];
    let mut ambient = t.components.clone();
    for slot in 0..k {
        ambient = change_slot(&ambient, &dims, slot, 3, |a, i| frame.get(i, a));
        dims[slot] = 3;
    }

    let derivs = par::map_range(ambient.len(), |b| frame_derivatives(&ambient[b]));
    let (along_e1, along_e2): (Vec<_>, Vec<_>) = derivs.into_iter().unzip();
    let mut comps = along_e1;
    comps.extend(along_e2);

    let mut dims: Vec<usize> = std::iter::once(2).chain(dims).collect();
    for slot in 1..=k {
        comps = change_slot(&comps, &dims, slot, 2, |i, a| frame.get(i, a));
        dims[slot] = 2;
    }
    Ok(FrameTensor {
        rank: k + 1,
        components: comps,
    })
}

/// Ambient components of the frame: `e₁ = (cosθ cosφ, cosθ sinφ, -sinθ)`,
/// `e₂ = (-sinφ, cosφ, 0)`.
struct FrameVectors {
    e: [[Option<ScalarField>; 3]; 2],
}

impl FrameVectors {
    fn new(grid: &Arc<SphereGrid>) -> Self {
        let f = |h: fn(f64, f64) -> f64| Some(ScalarField::from_fn(grid, h));
        Self {
            e: [
                [
                    f(|t, p| t.cos() * p.cos()),
                    f(|t, p| t.cos() * p.sin()),
                    f(|t, _| -t.sin()),
                ],
                [f(|_, p| -p.sin()), f(|_, p| p.cos()), None],
            ],
        }
    }

    /// Component `a` of frame vector `i`; `None` when identically zero.
    fn get(&self, i: usize, a: usize) -> Option<&ScalarField> {
        self.e[i][a].as_ref()
    }
}

/// Re-expresses one slot of a component array in a new basis:
/// `out[.., n, ..] = Σ_o coef(n, o) · comps[.., o, ..]`.
fn change_slot<'a>(
    comps: &[ScalarField],
    dims: &[usize],
    slot: usize,
    new_dim: usize,
    coef: impl Fn(usize, usize) -> Option<&'a ScalarField> + Sync + Send,
) -> Vec<ScalarField> {
    let old_dim = dims[slot];
    let inner: usize = dims[slot + 1..].iter().product();
    let outer: usize = dims[..slot].iter().product();
    let grid = Arc::clone(comps[0].grid());
    par::map_range(outer * new_dim * inner, |flat| {
        let lo = flat % inner;
        let n = (flat / inner) % new_dim;
        let hi = flat / (inner * new_dim);
        let mut acc: Option<ScalarField> = None;
        for o in 0..old_dim {
            if let Some(c) = coef(n, o) {
                let src = &comps[(hi * old_dim + o) * inner + lo];
                let term = src * c;
                acc = Some(match acc {
                    None => term,
                    Some(a) => &a + &term,
                });
            }
        }
        acc.unwrap_or_else(|| ScalarField::zeros(&grid))
    })
}

/// Covariant derivative from frame derivatives plus connection terms.
///
/// With `∇_{e₁}e₁ = ∇_{e₁}e₂ = 0`, `∇_{e₂}e₁ = cotθ e₂`, `∇_{e₂}e₂ = -cotθ e₁`:
/// `(∇T)(e₁, I) = ∂θ T_I` and
/// `(∇T)(e₂, I) = (1/sinθ) ∂φ T_I - cotθ Σ_r ±T(I with slot r flipped)`,
/// `+` for `i_r = 1 → 2`, `-` for `i_r = 2 → 1`. `∂θ` is the collocation
/// derivative and `∂φ` the Fourier one.
///
/// Kept as an independent route for cross-checks: roundoff in high
/// longitudinal modes is amplified by `m / sinθ` near the poles at every
/// application, so third and higher derivatives lose several digits there.
pub fn covariant_derivative_frame(t: &FrameTensor) -> Result<FrameTensor> {
    let k = t.rank;
    if k >= MAX_RANK {
        return Err(Error::Rank(format!("cannot differentiate a rank-{k} tensor")));
    }
    let grid = Arc::clone(t.grid());
    let parity = Parity::of_rank(k);
    let derivs = par::map_range(1 << k, |flat| {
        let c = &t.components[flat];
        (d_theta_with_parity(c, parity), d_phi(c))
    });
    let inv_sin: Vec<f64> = grid.sin_theta().iter().map(|s| 1.0 / s).collect();
    let cot = grid.cot_theta();

    let mut components = Vec::with_capacity(2 << k);
    let mut e2_parts = Vec::with_capacity(1 << k);
    for (flat, (dth, dph)) in derivs.into_iter().enumerate() {
        components.push(dth);
        let idx = multi_index(flat, k);
        let mut conn = ScalarField::zeros(&grid);
        for r in 0..k {
            let mut flipped = idx;
            flipped[r] ^= 1;
            let other = &t.components[flat_index(&flipped[..k])];
            conn = if idx[r] == 0 { &conn + other } else { &conn - other };
        }
        e2_parts.push(&dph.scale_rows(&inv_sin) - &conn.scale_rows(cot));
    }
    components.extend(e2_parts);
    Ok(FrameTensor {
        rank: k + 1,
        components,
    })
}

/// `∇f` of a scalar field as a rank-1 frame tensor.
pub fn gradient(f: &ScalarField) -> FrameTensor {
    covariant_derivative(&FrameTensor::scalar(f.clone())).expect("rank 0")
}

/// `∇^n f` of a scalar field.
pub fn iterated_derivative(f: &ScalarField, n: usize) -> Result<FrameTensor> {
    let mut t = FrameTensor::scalar(f.clone());
    for _ in 0..n {
        t = covariant_derivative(&t)?;
    }
    Ok(t)
}

/// Cyclic average `S(α)(X,Y,Z) = (α(X,Y,Z) + α(Y,Z,X) + α(Z,X,Y)) / 3`.
pub fn symmetrize3(alpha: &FrameTensor) -> Result<FrameTensor> {
    if alpha.rank != 3 {
        return Err(Error::Rank(format!(
            "symmetrize3 needs rank 3, got {}",
            alpha.rank
        )));
    }
    let a = alpha.permuted(&[1, 2, 0]);
    let b = alpha.permuted(&[2, 0, 1]);
    Ok(alpha.add(&a).add(&b).scale(1.0 / 3.0))
}

/// Contraction of slots `p` and `q` (0-based) with the inverse metric. The
/// evolving metric `g_{S²}/v` has inverse `v g_{S²}⁻¹`, so its trace is `v`
/// times the round trace.
pub fn trace_pair(t: &FrameTensor, p: usize, q: usize, metric: Metric<'_>) -> Result<FrameTensor> {
    let k = t.rank;
    if k < 2 || p == q || p >= k || q >= k {
        return Err(Error::InvalidSlots(p, q, k));
    }
    let (p, q) = (p.min(q), p.max(q));
    let out_rank = k - 2;
    let round = FrameTensor::from_fn(out_rank, |j| {
        let mut full = [0; MAX_RANK];
        let mut src = j.iter();
        let mut sum: Option<ScalarField> = None;
        for i in 0..2 {
            for (r, slot) in full.iter_mut().enumerate().take(k) {
                *slot = if r == p || r == q { i } else { *src.next().unwrap() };
            }
            src = j.iter();
            let c = t.component(&full[..k]);
            sum = Some(match sum {
                None => c.clone(),
                Some(s) => &s + c,
            });
        }
        sum.unwrap()
    });
    Ok(match metric {
        Metric::Round => round,
        Metric::Evolving(v) => round.mul_field(v),
    })
}

/// Trace-free part of a totally symmetric 3-tensor, with
/// `z = (1/4) tr^{2,3} b` and `TF(b) = b - (z⊗g + cyclic)`.
pub fn tf3(b: &FrameTensor) -> Result<(FrameTensor, FrameTensor)> {
    tf3_with(b, 0.25, 0.0)
}

/// [`tf3`] with an arbitrary trace factor in place of `1/4` and a reference
/// scale for the symmetry precondition (the bound is relative to the larger
/// of `reference_scale` and `sup |b|`, so round-off-sized inputs pass). Only
/// `1/4` makes the result trace-free in two dimensions; other factors exist
/// for negative controls.
pub fn tf3_with(b: &FrameTensor, z_factor: f64, reference_scale: f64) -> Result<(FrameTensor, FrameTensor)> {
    if b.rank != 3 {
        return Err(Error::Rank(format!("tf3 needs rank 3, got {}", b.rank)));
    }
    let scale = b.sup_norm().max(reference_scale);
    check("tf3 input is totally symmetric", b.asymmetry(), scale)?;
    let z = trace_pair(b, 1, 2, Metric::Round)?.scale(z_factor);
    let tfb = FrameTensor::from_fn(3, |i| {
        let mut c = b.component(i).clone();
        for (a, x, y) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            if i[x] == i[y] {
                c = &c - z.component(&[i[a]]);
            }
        }
        c
    });
    Ok((tfb, z))
}

/// `TF(α) = α - (1/2)(tr α) g_{S²}` for a symmetric 2-tensor.
pub fn tf2(alpha: &FrameTensor) -> Result<FrameTensor> {
    tf2_with(alpha, 0.0)
}

/// [`tf2`] with a reference scale for the symmetry precondition.
pub fn tf2_with(alpha: &FrameTensor, reference_scale: f64) -> Result<FrameTensor> {
    if alpha.rank != 2 {
        return Err(Error::Rank(format!("tf2 needs rank 2, got {}", alpha.rank)));
    }
    let scale = alpha.sup_norm().max(reference_scale);
    check("tf2 input is symmetric", alpha.asymmetry(), scale)?;
    let half_trace = trace_pair(alpha, 0, 1, Metric::Round)?.as_scalar().scale(0.5);
    Ok(FrameTensor::from_fn(2, |i| {
        if i[0] == i[1] {
            alpha.component(i) - &half_trace
        } else {
            alpha.component(i).clone()
        }
    }))
}

/// Splitting of a 4-tensor that is symmetric and trace-free in its last three
/// slots.
#[derive(Clone, Debug)]
pub struct Decomposition4 {
    /// Totally trace-free remainder.
    pub chat: FrameTensor,
    /// `e = (1/3) tr^{1,2} c`.
    pub e: FrameTensor,
    /// `f = -e/2`.
    pub f: FrameTensor,
}

/// The six metric terms
/// `⟨W,X⟩e(Y,Z) + ⟨W,Y⟩e(Z,X) + ⟨W,Z⟩e(X,Y) + ⟨Y,Z⟩f(X,W) + ⟨Z,X⟩f(Y,W) + ⟨X,Y⟩f(Z,W)`.
pub fn metric_terms4(e: &FrameTensor, f: &FrameTensor) -> FrameTensor {
    let grid = Arc::clone(e.grid());
    FrameTensor::from_fn(4, |i| {
        let (w, x, y, z) = (i[0], i[1], i[2], i[3]);
        let mut acc = ScalarField::zeros(&grid);
        let terms = [
            (w == x, e.component(&[y, z])),
            (w == y, e.component(&[z, x])),
            (w == z, e.component(&[x, y])),
            (y == z, f.component(&[x, w])),
            (z == x, f.component(&[y, w])),
            (x == y, f.component(&[z, w])),
        ];
        for (on, c) in terms {
            if on {
                acc = &acc + c;
            }
        }
        acc
    })
}

pub fn decompose4(c: &FrameTensor) -> Result<Decomposition4> {
    decompose4_with(c, 0.0)
}

/// [`decompose4`] with a reference scale for the preconditions.
pub fn decompose4_with(c: &FrameTensor, reference_scale: f64) -> Result<Decomposition4> {
    if c.rank != 4 {
        return Err(Error::Rank(format!("decompose4 needs rank 4, got {}", c.rank)));
    }
    let scale = c.sup_norm().max(reference_scale);
    check(
        "decompose4 input is symmetric in its last 3 slots",
        c.asymmetry_from(1),
        scale,
    )?;
    for (p, q) in [(1, 2), (1, 3), (2, 3)] {
        let t = trace_pair(c, p, q, Metric::Round)?.sup_norm();
        check("decompose4 input is trace-free in its last 3 slots", t, scale)?;
    }
    let e = trace_pair(c, 0, 1, Metric::Round)?.scale(1.0 / 3.0);
    let f = e.scale(-0.5);
    let chat = c.sub(&metric_terms4(&e, &f));
    Ok(Decomposition4 { chat, e, f })
}

/// Inverse of [`decompose4`].
pub fn reconstruct4(d: &Decomposition4) -> FrameTensor {
    d.chat.add(&metric_terms4(&d.e, &d.f))
}

/// `(S⊗T)(I, J) = S(I) T(J)`.
pub fn tensor_product(s: &FrameTensor, t: &FrameTensor) -> Result<FrameTensor> {
    let rank = s.rank + t.rank;
    if rank > MAX_RANK {
        return Err(Error::Rank(format!("product rank {rank} exceeds {MAX_RANK}")));
    }
    s.components[0].check_grid(&t.components[0])?;
    let tk = t.rank;
    Ok(FrameTensor::from_fn_par(rank, |i| {
        s.component(&i[..s.rank]) * t.component(&i[s.rank..s.rank + tk])
    }))
}

/// Full contraction `⟨S, T⟩`. For the evolving metric a rank-`k` covariant
/// tensor picks up `v^k`.
pub fn inner(s: &FrameTensor, t: &FrameTensor, metric: Metric<'_>) -> Result<ScalarField> {
    if s.rank != t.rank {
        return Err(Error::Rank(format!("inner of ranks {} and {}", s.rank, t.rank)));
    }
    s.components[0].check_grid(&t.components[0])?;
    let mut acc = ScalarField::zeros(s.grid());
    for (a, b) in s.components.iter().zip(&t.components) {
        acc = &acc + &(a * b);
    }
    Ok(match metric {
        Metric::Round => acc,
        Metric::Evolving(v) => {
            let k = s.rank as i32;
            acc.zip_map(v, |x, v| x * v.powi(k))
        }
    })
}

pub fn norm_sq(t: &FrameTensor, metric: Metric<'_>) -> ScalarField {
    inner(t, t, metric).expect("same tensor")
}

/// Ricci-identity sentinel for a 1-form `ω` on the unit sphere:
/// `∇_a∇_b ω_c - ∇_b∇_a ω_c - (g_ac ω_b - g_bc ω_a)`, which is zero exactly.
pub fn commutator_defect(omega: &FrameTensor) -> Result<FrameTensor> {
    if omega.rank != 1 {
        return Err(Error::Rank(format!(
            "commutator_defect needs rank 1, got {}",
            omega.rank
        )));
    }
    let h = covariant_derivative(&covariant_derivative(omega)?)?;
    let anti = h.sub(&h.permuted(&[1, 0, 2]));
    let grid = Arc::clone(omega.grid());
    let curvature = FrameTensor::from_fn(3, |i| {
        let (a, b, c) = (i[0], i[1], i[2]);
        let mut acc = ScalarField::zeros(&grid);
        if a == c {
            acc = &acc + omega.component(&[b]);
        }
        if b == c {
            acc = &acc - omega.component(&[a]);
        }
        acc
    });
    Ok(anti.sub(&curvature))
}
