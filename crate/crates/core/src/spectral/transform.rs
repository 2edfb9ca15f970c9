use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::legendre::{normalized_legendre, tri_index, tri_len};
use super::{ScalarField, SphereGrid};
use crate::error::{Error, Result};
use crate::par;

/// Spherical-harmonic coefficients `a_{l,m}`, `0 <= l <= L`, `|m| <= l`, in
/// the orthonormal convention `∫ Y_{l,m} conj(Y_{l',m'}) dμ = δ δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCoeffs {
    band_limit: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralCoeffs {
    pub fn zeros(band_limit: usize) -> Self {
        Self {
            band_limit,
            coeffs: vec![Complex64::new(0.0, 0.0); (band_limit + 1) * (band_limit + 1)],
        }
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    fn index(&self, l: usize, m: i64) -> usize {
        assert!(
            l <= self.band_limit && m.unsigned_abs() as usize <= l,
            "({l}, {m}) out of range"
        );
        ((l * l + l) as i64 + m) as usize
    }

    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        self.coeffs[self.index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, value: Complex64) {
        let k = self.index(l, m);
        self.coeffs[k] = value;
    }

    /// Sets `a_{l,m}` and its partner `a_{l,-m} = (-1)^m conj(a_{l,m})`, so the
    /// synthesized field is real.
    pub fn set_real_pair(&mut self, l: usize, m: i64, value: Complex64) {
        if m == 0 {
            self.set(l, 0, Complex64::new(value.re, 0.0));
        } else {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            self.set(l, m, value);
            self.set(l, -m, value.conj() * sign);
        }
    }

    /// `(l, m, a_{l,m})` in order of increasing `l`, then `m`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        (0..=self.band_limit).flat_map(move |l| (-(l as i64)..=l as i64).map(move |m| (l, m, self.get(l, m))))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, c| a.max(c.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let lmax = self.band_limit.max(other.band_limit);
        let mut worst: f64 = 0.0;
        for l in 0..=lmax {
            for m in -(l as i64)..=l as i64 {
                let a = if l <= self.band_limit {
                    self.get(l, m)
                } else {
                    Complex64::default()
                };
                let b = if l <= other.band_limit {
                    other.get(l, m)
                } else {
                    Complex64::default()
                };
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }

    /// Multiplies every `a_{l,m}` by `f(l)`.
    pub fn scale_by_degree(&mut self, f: impl Fn(usize) -> f64) {
        for l in 0..=self.band_limit {
            let s = f(l);
            for m in -(l as i64)..=l as i64 {
                let k = self.index(l, m);
                self.coeffs[k] *= s;
            }
        }
    }

    /// Parses the coefficient JSON format: an array of `{l, m, re, im}`
    /// records. Unlisted coefficients are zero.
    pub fn from_json(text: &str, band_limit: usize) -> Result<Self> {
        let records: Vec<CoeffRecord> = serde_json::from_str(text)?;
        Self::from_records(&records, band_limit)
    }

    pub fn from_records(records: &[CoeffRecord], band_limit: usize) -> Result<Self> {
        let mut out = Self::zeros(band_limit);
        for r in records {
            if r.l < 0 || r.l as usize > band_limit || r.m.abs() > r.l {
                return Err(Error::CoefficientOutOfRange {
                    l: r.l,
                    m: r.m,
                    band_limit,
                });
            }
            if !(r.re.is_finite() && r.im.is_finite()) {
                return Err(Error::CoefficientFile(format!(
                    "non-finite value at (l = {}, m = {})",
                    r.l, r.m
                )));
            }
            out.set(r.l as usize, r.m, Complex64::new(r.re, r.im));
        }
        Ok(out)
    }

    /// Non-zero coefficients as records.
    pub fn to_records(&self) -> Vec<CoeffRecord> {
        self.iter()
            .filter(|(_, _, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(l, m, c)| CoeffRecord {
                l: l as i64,
                m,
                re: c.re,
                im: c.im,
            })
            .collect()
    }
}

/// One entry of the coefficient JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffRecord {
    pub l: i64,
    pub m: i64,
    pub re: f64,
    pub im: f64,
}

/// Which polynomial structure the longitudinal modes of a field have near the
/// poles. Frame components of a rank-`k` tensor have mode-`m` profiles that
/// are polynomials in `x = cosθ` when `m + k` is even and `sinθ` times a
/// polynomial when `m + k` is odd.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_rank(rank: usize) -> Self {
        if rank.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn flips(self, m: u64) -> bool {
        (m % 2 == 1) != (self == Parity::Odd)
    }
}

/// Row-wise forward FFTs: `out[i * n_phi + k] = Σ_j f_ij e^{-2πi jk/n_phi}`.
pub(crate) fn row_spectra(f: &ScalarField) -> Vec<Complex64> {
    let grid = f.grid();
    let n_phi = grid.n_phi();
    let vals = f.values();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    par::for_each_chunk(&mut out, n_phi, |i, row| {
        for (c, &v) in row.iter_mut().zip(&vals[i * n_phi..(i + 1) * n_phi]) {
            *c = Complex64::new(v, 0.0);
        }
        grid.fft_forward(row);
    });
    out
}

/// Inverse of [`row_spectra`], keeping the real part.
pub(crate) fn field_from_spectra(grid: &Arc<SphereGrid>, mut spectra: Vec<Complex64>) -> ScalarField {
    let n_phi = grid.n_phi();
    par::for_each_chunk(&mut spectra, n_phi, |_, row| grid.fft_inverse(row));
    let scale = 1.0 / n_phi as f64;
    let values = spectra.iter().map(|c| c.re * scale).collect();
    ScalarField::from_values(grid, values).expect("spectra sized to grid")
}

/// Spherical-harmonic analysis by Gauss–Legendre quadrature in θ and discrete
/// Fourier summation in φ, up to the grid's band limit.
pub fn analyze(f: &ScalarField) -> SpectralCoeffs {
    analyze_to(f, f.grid().band_limit())
}

/// Analysis up to degree `band <= grid.transform_limit()`.
pub fn analyze_to(f: &ScalarField, band: usize) -> SpectralCoeffs {
    let grid = f.grid();
    assert!(
        band <= grid.transform_limit(),
        "band {band} beyond transform limit"
    );
    let n_phi = grid.n_phi();
    let n_theta = grid.n_theta();
    let spectra = row_spectra(f);
    let dphi = 2.0 * PI / n_phi as f64;

    let per_m = par::map_range(2 * band + 1, |k| {
        let m = k as i64 - band as i64;
        let ma = m.unsigned_abs() as usize;
        let bin = m.rem_euclid(n_phi as i64) as usize;
        let sign = if m < 0 && ma % 2 == 1 { -1.0 } else { 1.0 };
        let mut acc = vec![Complex64::new(0.0, 0.0); band + 1 - ma];
        for i in 0..n_theta {
            let fm = spectra[i * n_phi + bin] * (dphi * grid.weights()[i] * sign);
            let plm = grid.legendre_row(i);
            for (l, a) in (ma..=band).zip(acc.iter_mut()) {
                *a += fm * plm[tri_index(l, ma)];
            }
        }
        acc
    });

    let mut out = SpectralCoeffs::zeros(band);
    for (k, acc) in per_m.into_iter().enumerate() {
        let m = k as i64 - band as i64;
        let ma = m.unsigned_abs() as usize;
        for (l, a) in (ma..=band).zip(acc) {
            out.set(l, m, a);
        }
    }
    out
}

/// `Re Σ a_{l,m} Y_{l,m}` on the grid. For conjugate-symmetric coefficients
/// the imaginary part vanishes identically.
pub fn synthesize(c: &SpectralCoeffs, grid: &Arc<SphereGrid>) -> Result<ScalarField> {
    let band = c.band_limit();
    if band > grid.band_limit() {
        return Err(Error::GridMismatch(format!(
            "coefficients up to l = {band} exceed grid band limit {}",
            grid.band_limit()
        )));
    }
    Ok(synthesize_any(c, grid))
}

/// Synthesis for any `c.band_limit() <= grid.transform_limit()`.
pub(crate) fn synthesize_any(c: &SpectralCoeffs, grid: &Arc<SphereGrid>) -> ScalarField {
    let band = c.band_limit();
    assert!(
        band <= grid.transform_limit(),
        "band {band} beyond transform limit"
    );
    let n_phi = grid.n_phi();
    let mut spectra = vec![Complex64::new(0.0, 0.0); grid.len()];
    par::for_each_chunk(&mut spectra, n_phi, |i, row| {
        let plm = grid.legendre_row(i);
        for m in -(band as i64)..=band as i64 {
            let ma = m.unsigned_abs() as usize;
            let sign = if m < 0 && ma % 2 == 1 { -1.0 } else { 1.0 };
            let mut g = Complex64::new(0.0, 0.0);
            for l in ma..=band {
                g += c.get(l, m) * plm[tri_index(l, ma)];
            }
            row[m.rem_euclid(n_phi as i64) as usize] = g * sign * n_phi as f64;
        }
    });
    field_from_spectra(grid, spectra)
}

/// Projection onto degrees `l <= L` (analysis followed by synthesis).
pub fn low_pass(f: &ScalarField) -> ScalarField {
    synthesize(&analyze(f), f.grid()).expect("analysis matches grid")
}

/// Relative level below which a degree's coefficients count as round-off.
pub const CHOP_TOLERANCE: f64 = 1e-14;

/// Zeroes every degree above the last one whose coefficient norm exceeds
/// `CHOP_TOLERANCE · reference`, where `reference` bounds the size of the
/// field the coefficients came from. Differentiation multiplies degree `l` by
/// roughly `l` per order, so without this the round-off plateau at high
/// degree would dominate repeated derivatives on fine grids. Returns the
/// retained degree.
pub fn chop(c: &mut SpectralCoeffs, reference: f64) -> usize {
    let band = c.band_limit();
    let envelope: Vec<f64> = (0..=band)
        .map(|l| {
            let li = l as i64;
            (-li..=li).map(|m| c.get(l, m).norm_sqr()).sum::<f64>().sqrt()
        })
        .collect();
    let peak = envelope.iter().copied().fold(reference, f64::max);
    let cutoff = CHOP_TOLERANCE * peak;
    let keep = envelope.iter().rposition(|&e| e > cutoff).unwrap_or(0);
    c.scale_by_degree(|l| if l > keep { 0.0 } else { 1.0 });
    keep
}

/// Analysis to the transform limit followed by [`chop`].
fn analyze_chopped(f: &ScalarField, reference: f64) -> SpectralCoeffs {
    let mut c = analyze_to(f, f.grid().transform_limit());
    chop(&mut c, reference);
    c
}

/// Spectral Laplacian of the round metric: `a_{l,m} ↦ -l(l+1) a_{l,m}`,
/// taken over every degree the grid resolves above the round-off plateau.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let mut c = analyze_chopped(f, f.sup_norm() * (4.0 * PI).sqrt());
    c.scale_by_degree(|l| -((l * (l + 1)) as f64));
    synthesize_any(&c, grid)
}

/// `∂f/∂φ`, exact for every resolved longitudinal mode. The Nyquist mode is
/// dropped.
pub fn d_phi(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let n_phi = grid.n_phi();
    let mut spectra = row_spectra(f);
    par::for_each_chunk(&mut spectra, n_phi, |_, row| {
        for (k, c) in row.iter_mut().enumerate() {
            if 2 * k == n_phi {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= Complex64::new(0.0, grid.wavenumber(k) as f64);
            }
        }
    });
    field_from_spectra(grid, spectra)
}

/// `∂f/∂θ` for a scalar function on the sphere.
pub fn d_theta(f: &ScalarField) -> ScalarField {
    d_theta_with_parity(f, Parity::Even)
}

/// `∂f/∂θ = -sinθ d/dx` with `d/dx` from polynomial collocation at the
/// Gauss–Legendre nodes, applied mode by mode in longitude. Modes whose
/// profile carries a `sinθ` factor (see [`Parity`]) have it divided out before
/// differentiation and restored by the product rule.
pub fn d_theta_with_parity(f: &ScalarField, parity: Parity) -> ScalarField {
    let grid = f.grid();
    let n_phi = grid.n_phi();
    let n = grid.n_theta();
    let spectra = row_spectra(f);
    let d = grid.diff_x();
    let (cos, sin) = (grid.cos_theta(), grid.sin_theta());

    let columns = par::map_range(n_phi, |k| {
        let m = grid.wavenumber(k).unsigned_abs();
        let flips = parity.flips(m);
        let col: Vec<Complex64> = (0..n)
            .map(|i| {
                let c = spectra[i * n_phi + k];
                if flips {
                    c / sin[i]
                } else {
                    c
                }
            })
            .collect();
        (0..n)
            .map(|i| {
                let row = &d[i * n..(i + 1) * n];
                let mut dx = Complex64::new(0.0, 0.0);
                for (dij, cj) in row.iter().zip(&col) {
                    dx += cj * *dij;
                }
                if flips {
                    col[i] * cos[i] - dx * (sin[i] * sin[i])
                } else {
                    -dx * sin[i]
                }
            })
            .collect::<Vec<_>>()
    });

    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (k, col) in columns.into_iter().enumerate() {
        for (i, c) in col.into_iter().enumerate() {
            out[i * n_phi + k] = c;
        }
    }
    field_from_spectra(grid, out)
}

/// `∫_{S²} f dμ = Σ_{i,j} w_i (2π / n_phi) f_ij`.
pub fn integrate(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let n_phi = grid.n_phi();
    let dphi = 2.0 * PI / n_phi as f64;
    f.values()
        .chunks(n_phi)
        .zip(grid.weights())
        .map(|(row, w)| w * row.iter().sum::<f64>())
        .sum::<f64>()
        * dphi
}

/// Samples `Y_{l,m}` (orthonormal, Condon–Shortley phase) on the grid,
/// returning its real and imaginary parts. `l` may exceed the band limit.
pub fn spherical_harmonic(grid: &Arc<SphereGrid>, l: usize, m: i64) -> (ScalarField, ScalarField) {
    let ma = m.unsigned_abs() as usize;
    assert!(ma <= l, "|m| > l");
    let mut table = vec![0.0; tri_len(l)];
    let sign = if m < 0 && ma % 2 == 1 { -1.0 } else { 1.0 };
    let n_phi = grid.n_phi();
    let mut re = Vec::with_capacity(grid.len());
    let mut im = Vec::with_capacity(grid.len());
    for &x in grid.cos_theta() {
        normalized_legendre(l, x, &mut table);
        let p = table[tri_index(l, ma)] * sign;
        for &phi in grid.phi() {
            let arg = m as f64 * phi;
            re.push(p * arg.cos());
            im.push(p * arg.sin());
        }
    }
    debug_assert_eq!(re.len(), grid.n_theta() * n_phi);
    (
        ScalarField::from_values(grid, re).expect("sized"),
        ScalarField::from_values(grid, im).expect("sized"),
    )
}

/// Components `(J_x f, J_y f, J_z f)` of `J = x × ∇`, the generators of
/// rotations, applied to a scalar field. Computed on the coefficients up to
/// the grid's transform limit, so no `1/sinθ` factor ever appears.
pub fn angular_momentum(f: &ScalarField) -> [ScalarField; 3] {
    let grid = f.grid();
    let band = grid.transform_limit();
    // J annihilates constants; removing the mean first keeps the roundoff of
    // a large constant out of the l > 0 coefficients.
    let mean = integrate(f) / (4.0 * PI);
    let a = analyze_chopped(&f.map(|x| x - mean), f.sup_norm() * (4.0 * PI).sqrt());
    let mut jx = SpectralCoeffs::zeros(band);
    let mut jy = SpectralCoeffs::zeros(band);
    let mut jz = SpectralCoeffs::zeros(band);
    let i = Complex64::new(0.0, 1.0);
    for l in 0..=band {
        let ll = (l * (l + 1)) as f64;
        let li = l as i64;
        for m in -li..=li {
            let mf = m as f64;
            // L₊ raises m, L₋ lowers it (Condon–Shortley phase).
            let raised = if m > -li {
                let mp = mf - 1.0;
                a.get(l, m - 1) * (ll - mp * (mp + 1.0)).sqrt()
            } else {
                Complex64::new(0.0, 0.0)
            };
            let lowered = if m < li {
                let mp = mf + 1.0;
                a.get(l, m + 1) * (ll - mp * (mp - 1.0)).sqrt()
            } else {
                Complex64::new(0.0, 0.0)
            };
            jx.set(l, m, i * (raised + lowered) * 0.5);
            jy.set(l, m, (raised - lowered) * 0.5);
            jz.set(l, m, i * mf * a.get(l, m));
        }
    }
    [
        synthesize_any(&jx, grid),
        synthesize_any(&jy, grid),
        synthesize_any(&jz, grid),
    ]
}

/// Frame derivatives `(∂θ f, (1/sinθ) ∂φ f)` from [`angular_momentum`]:
/// `∂θ f = J·e_φ` and `(1/sinθ) ∂φ f = -J·e_θ`.
pub fn frame_derivatives(f: &ScalarField) -> (ScalarField, ScalarField) {
    let grid = f.grid();
    let [jx, jy, jz] = angular_momentum(f);
    let n_phi = grid.n_phi();
    let mut d1 = Vec::with_capacity(grid.len());
    let mut d2 = Vec::with_capacity(grid.len());
    for (i, (&ct, &st)) in grid.cos_theta().iter().zip(grid.sin_theta()).enumerate() {
        for (j, &p) in grid.phi().iter().enumerate() {
            let k = i * n_phi + j;
            let (sp, cp) = p.sin_cos();
            let (x, y, z) = (jx.values()[k], jy.values()[k], jz.values()[k]);
            d1.push(-x * sp + y * cp);
            d2.push(-(x * ct * cp + y * ct * sp - z * st));
        }
    }
    (
        ScalarField::from_values(grid, d1).expect("sized"),
        ScalarField::from_values(grid, d2).expect("sized"),
    )
}
