//! Gauss–Legendre nodes and orthonormal associated Legendre functions.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes in decreasing order
/// (increasing colatitude when read as `x = cos θ`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                dp = legendre_and_derivative(n, x).1;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        weights[i] = w;
        nodes[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Index of `(l, m)`, `0 <= m <= l`, in a packed triangular table.
#[inline]
pub fn tri_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

pub fn tri_len(band_limit: usize) -> usize {
    (band_limit + 1) * (band_limit + 2) / 2
}

/// Orthonormal associated Legendre functions `P̄_l^m(cos θ)` for
/// `0 <= m <= l <= band_limit`, Condon–Shortley phase included, normalised so
/// that `P̄_l^m(cos θ) e^{imφ}` has unit `L²` norm on the unit sphere.
///
/// The sectoral terms are built with the running product
/// `sqrt((2k+1)/(2k))`, then the standard three-term recurrence in `l`.
pub fn normalized_legendre(band_limit: usize, x: f64, out: &mut [f64]) {
    debug_assert!(out.len() >= tri_len(band_limit));
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=band_limit {
        if m > 0 {
            let mf = m as f64;
            pmm *= -s * ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt();
        }
        out[tri_index(m, m)] = pmm;
        if m == band_limit {
            break;
        }
        let mf = m as f64;
        let mut p_prev = pmm;
        let mut p_cur = x * (2.0 * mf + 3.0).sqrt() * pmm;
        out[tri_index(m + 1, m)] = p_cur;
        for l in (m + 2)..=band_limit {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let lm1 = lf - 1.0;
            let b = ((lm1 * lm1 - mf * mf) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
            let p_next = a * (x * p_cur - b * p_prev);
            p_prev = p_cur;
            p_cur = p_next;
            out[tri_index(l, m)] = p_cur;
        }
    }
}

/// Barycentric differentiation matrix (row-major, `n × n`) for polynomial
/// interpolation at `nodes`, `d/dx`.
pub fn differentiation_matrix(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    // Barycentric weights, scaled per factor to stay in range.
    let mut lambda = vec![1.0; n];
    for j in 0..n {
        let mut prod = 1.0;
        for k in 0..n {
            if k != j {
                prod *= 2.0 * (nodes[j] - nodes[k]);
            }
        }
        lambda[j] = 1.0 / prod;
    }
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = lambda[j] / lambda[i] / (nodes[i] - nodes[j]);
                d[i * n + j] = v;
                diag -= v;
            }
        }
        d[i * n + i] = diag;
    }
    d
}
