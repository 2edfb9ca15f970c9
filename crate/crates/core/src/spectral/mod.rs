//! Grid construction, spherical-harmonic analysis/synthesis, derivatives and
//! quadrature on the unit round sphere.

mod field;
mod grid;
pub mod legendre;
mod random;
mod transform;

pub use field::ScalarField;
pub use grid::SphereGrid;
pub use random::{random_band_limited, random_coefficients, random_smooth};
pub use transform::{
    analyze, analyze_to, angular_momentum, chop, d_phi, d_theta, d_theta_with_parity, frame_derivatives,
    integrate, laplacian, low_pass, spherical_harmonic, synthesize, CoeffRecord, Parity, SpectralCoeffs,
    CHOP_TOLERANCE,
};

use std::sync::Arc;

/// Spectral-core entry point kept under its conventional name.
pub fn build_grid(band_limit: usize, oversample: usize) -> crate::Result<Arc<SphereGrid>> {
    SphereGrid::new(band_limit, oversample)
}

/// Reads a coefficient JSON file and synthesizes it on `grid`.
pub fn field_from_coefficient_file(
    path: &std::path::Path,
    grid: &Arc<SphereGrid>,
) -> crate::Result<ScalarField> {
    let text = std::fs::read_to_string(path)?;
    let c = SpectralCoeffs::from_json(&text, grid.band_limit())?;
    synthesize(&c, grid)
}
