use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::legendre::{differentiation_matrix, gauss_legendre, normalized_legendre, tri_len};
use crate::error::{Error, Result};

/// Gauss–Legendre colatitudes × equispaced longitudes on the unit sphere.
///
/// Poles are never grid points, so `1/sinθ` and `cotθ` are finite at every
/// node. Built once and shared behind an [`Arc`].
pub struct SphereGrid {
    band_limit: usize,
    transform_limit: usize,
    oversample: usize,
    n_theta: usize,
    n_phi: usize,
    theta: Vec<f64>,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    cot_theta: Vec<f64>,
    weights: Vec<f64>,
    phi: Vec<f64>,
    /// `P̄_l^m(x_i)` packed as `[i * tri_len + tri_index(l, m)]`.
    legendre: Vec<f64>,
    /// `d/dx` collocation matrix at the nodes, row-major.
    diff_x: Vec<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

impl SphereGrid {
    pub const MIN_BAND_LIMIT: usize = 4;
    pub const MIN_OVERSAMPLE: usize = 2;

    /// Builds the grid for band limit `band_limit` with
    /// `n_theta = oversample (L+1)` and `n_phi = oversample (2L+1)` rounded up
    /// to an even count.
    pub fn new(band_limit: usize, oversample: usize) -> Result<Arc<Self>> {
        if band_limit < Self::MIN_BAND_LIMIT {
            return Err(Error::BandLimitTooSmall(band_limit));
        }
        if oversample < Self::MIN_OVERSAMPLE {
            return Err(Error::OversampleTooSmall(oversample));
        }
        let n_theta = oversample * (band_limit + 1);
        let mut n_phi = oversample * (2 * band_limit + 1);
        n_phi += n_phi % 2;

        let (cos_theta, weights) = gauss_legendre(n_theta);
        let theta: Vec<f64> = cos_theta.iter().map(|x| x.acos()).collect();
        let sin_theta: Vec<f64> = cos_theta.iter().map(|x| (1.0 - x * x).sqrt()).collect();
        let cot_theta = cos_theta.iter().zip(&sin_theta).map(|(c, s)| c / s).collect();
        let phi = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();

        // Highest degree the quadrature and the longitude sampling resolve.
        let transform_limit = (n_theta - 1).min(n_phi / 2 - 1);
        let nlm = tri_len(transform_limit);
        let mut legendre = vec![0.0; n_theta * nlm];
        for (i, x) in cos_theta.iter().enumerate() {
            normalized_legendre(transform_limit, *x, &mut legendre[i * nlm..(i + 1) * nlm]);
        }
        let diff_x = differentiation_matrix(&cos_theta);

        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(n_phi);
        let fft_inverse = planner.plan_fft_inverse(n_phi);

        Ok(Arc::new(Self {
            band_limit,
            transform_limit,
            oversample,
            n_theta,
            n_phi,
            theta,
            cos_theta,
            sin_theta,
            cot_theta,
            weights,
            phi,
            legendre,
            diff_x,
            fft_forward,
            fft_inverse,
        }))
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    /// Highest degree that analysis on this grid resolves exactly (about
    /// `2L` at the default oversampling). Used by the Laplacian, whose inputs
    /// are frequently products and quotients that are not limited to `L`.
    pub fn transform_limit(&self) -> usize {
        self.transform_limit
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Colatitudes, increasing, strictly inside `(0, π)`.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn sin_theta(&self) -> &[f64] {
        &self.sin_theta
    }

    pub fn cot_theta(&self) -> &[f64] {
        &self.cot_theta
    }

    /// Gauss–Legendre weights for `∫_{-1}^{1} dx`; they sum to 2.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub(crate) fn legendre_row(&self, i: usize) -> &[f64] {
        let nlm = tri_len(self.transform_limit);
        &self.legendre[i * nlm..(i + 1) * nlm]
    }

    pub(crate) fn diff_x(&self) -> &[f64] {
        &self.diff_x
    }

    pub(crate) fn fft_forward(&self, row: &mut [Complex64]) {
        self.fft_forward.process(row);
    }

    pub(crate) fn fft_inverse(&self, row: &mut [Complex64]) {
        self.fft_inverse.process(row);
    }

    /// Same discretization (band limit and node counts).
    pub fn same_as(&self, other: &SphereGrid) -> bool {
        std::ptr::eq(self, other)
            || (self.band_limit == other.band_limit
                && self.n_theta == other.n_theta
                && self.n_phi == other.n_phi)
    }

    /// Signed longitudinal wavenumber stored at FFT bin `k`.
    #[inline]
    pub(crate) fn wavenumber(&self, k: usize) -> i64 {
        if k <= self.n_phi / 2 {
            k as i64
        } else {
            k as i64 - self.n_phi as i64
        }
    }
}

impl fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereGrid")
            .field("band_limit", &self.band_limit)
            .field("oversample", &self.oversample)
            .field("n_theta", &self.n_theta)
            .field("n_phi", &self.n_phi)
            .finish_non_exhaustive()
    }
}
