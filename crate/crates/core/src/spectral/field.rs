use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use super::SphereGrid;
use crate::error::{Error, Result};

/// Real function sampled on a [`SphereGrid`], stored row-major with one row
/// per colatitude: `values[i * n_phi + j] = f(θ_i, φ_j)`.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_values(grid: &Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn constant(grid: &Arc<SphereGrid>, c: f64) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: &Arc<SphereGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f(θ, φ)` at every node.
    pub fn from_fn(grid: &Arc<SphereGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &t in grid.theta() {
            for &p in grid.phi() {
                values.push(f(t, p));
            }
        }
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    /// Samples `f(x₁, x₂, x₃)` through the standard embedding.
    pub fn from_cartesian(grid: &Arc<SphereGrid>, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        Self::from_fn(grid, |t, p| {
            let s = t.sin();
            f(s * p.cos(), s * p.sin(), t.cos())
        })
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_phi() + j]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        self.assert_same_grid(other);
        Self {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Multiplies row `i` by `row_factor[i]` (a function of colatitude only).
    pub fn scale_rows(&self, row_factor: &[f64]) -> Self {
        let n_phi = self.grid.n_phi();
        let mut out = self.clone();
        for (row, &s) in out.values.chunks_mut(n_phi).zip(row_factor) {
            row.iter_mut().for_each(|v| *v *= s);
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Minimum value and its `(i, j)` grid position.
    pub fn argmin(&self) -> (f64, usize, usize) {
        let n_phi = self.grid.n_phi();
        let (k, v) = self
            .values
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (k, v)| if v < acc.1 { (k, v) } else { acc },
            );
        (v, k / n_phi, k % n_phi)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Errors unless every sample is strictly positive.
    pub fn require_positive(&self) -> Result<()> {
        let (min, i, j) = self.argmin();
        if min > 0.0 && min.is_finite() {
            Ok(())
        } else {
            Err(Error::NonPositive { min, i, j })
        }
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )))
        }
    }

    fn assert_same_grid(&self, other: &Self) {
        assert!(
            self.grid.same_as(&other.grid),
            "field grid mismatch: {:?} vs {:?}",
            self.grid,
            other.grid
        );
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Div for &ScalarField {
    type Output = ScalarField;
    fn div(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a / b)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.scale(rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|v| -v)
    }
}

impl Add for ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: ScalarField) -> ScalarField {
        &self + &rhs
    }
}

impl Sub for ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: ScalarField) -> ScalarField {
        &self - &rhs
    }
}

impl Mul for ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: ScalarField) -> ScalarField {
        &self * &rhs
    }
}
