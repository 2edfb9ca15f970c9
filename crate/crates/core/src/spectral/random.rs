use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{synthesize, ScalarField, SpectralCoeffs, SphereGrid};
use crate::error::{Error, Result};

/// Deterministic positive test field `floor + p`, where `p` has pseudorandom
/// coefficients on degrees `1..=l_max` with magnitude `~ l⁻²`, rescaled so
/// that `max |p| = amplitude` on the grid.
pub fn random_band_limited(
    seed: u64,
    l_max: usize,
    floor: f64,
    amplitude: f64,
    grid: &Arc<SphereGrid>,
) -> Result<ScalarField> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::InvalidRandomField(format!(
            "floor {floor} must be positive"
        )));
    }
    if !(amplitude >= 0.0 && amplitude < floor) {
        return Err(Error::InvalidRandomField(format!(
            "amplitude {amplitude} must lie in [0, floor = {floor})"
        )));
    }
    if 4 * l_max > grid.band_limit() {
        return Err(Error::InvalidRandomField(format!(
            "l_max = {l_max} exceeds L/4 for L = {}",
            grid.band_limit()
        )));
    }
    let perturbation = random_coefficients(seed, l_max, grid.band_limit());
    let p = synthesize(&perturbation, grid)?;
    let peak = p.sup_norm();
    let scale = if l_max == 0 || amplitude == 0.0 || peak == 0.0 {
        0.0
    } else {
        amplitude / peak
    };
    Ok(p.map(|x| floor + scale * x))
}

/// Number of kernel centres in [`random_smooth`].
const SMOOTH_CENTRES: usize = 4;

/// Deterministic positive field that is smooth but not band-limited, so that
/// its discretization error decays with the band limit:
/// `floor + amplitude · Σ c_k (K(x·n_k) - 1) / Σ|c_k| · (1 - r)/r` with the
/// Poisson-type kernel `K(t) = 1/√(1 - 2rt + r²)`, whose degree-`l` content is
/// `r^l P_l(t)`. The sum is bounded by `amplitude` analytically, so the field
/// is the same function of position on every grid.
pub fn random_smooth(
    seed: u64,
    radius: f64,
    floor: f64,
    amplitude: f64,
    grid: &Arc<SphereGrid>,
) -> Result<ScalarField> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::InvalidRandomField(format!(
            "floor {floor} must be positive"
        )));
    }
    if !(amplitude >= 0.0 && amplitude < floor) {
        return Err(Error::InvalidRandomField(format!(
            "amplitude {amplitude} must lie in [0, floor = {floor})"
        )));
    }
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::InvalidRandomField(format!(
            "radius {radius} must lie in (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<([f64; 3], f64)> = (0..SMOOTH_CENTRES)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - z * z).sqrt();
            let c: f64 = rng.random_range(-1.0..1.0);
            ([s * phi.cos(), s * phi.sin(), z], c)
        })
        .collect();
    let total: f64 = centres.iter().map(|(_, c)| c.abs()).sum();
    let scale = amplitude * (1.0 - radius) / (radius * total);
    let r2 = 1.0 + radius * radius;
    Ok(ScalarField::from_cartesian(grid, |x, y, z| {
        let p: f64 = centres
            .iter()
            .map(|(n, c)| {
                let t = x * n[0] + y * n[1] + z * n[2];
                c * (1.0 / (r2 - 2.0 * radius * t).sqrt() - 1.0)
            })
            .sum();
        floor + scale * p
    }))
}

/// Conjugate-symmetric coefficients with `|a_{l,m}| ≲ l⁻²` on `1 <= l <= l_max`.
pub fn random_coefficients(seed: u64, l_max: usize, band_limit: usize) -> SpectralCoeffs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = SpectralCoeffs::zeros(band_limit);
    for l in 1..=l_max.min(band_limit) {
        let decay = 1.0 / (l * l) as f64;
        for m in 0..=l as i64 {
            let re: f64 = rng.random_range(-1.0..1.0);
            let im: f64 = rng.random_range(-1.0..1.0);
            c.set_real_pair(l, m, Complex64::new(re, im) * decay);
        }
    }
    c
}
