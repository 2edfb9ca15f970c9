//! Pseudospectral laboratory for Ricci flow on the round 2-sphere.
//!
//! The flow is written through its pressure function `v`, with the evolving
//! metric `g = g_round / v`. Scalars live on a Gauss–Legendre × equispaced
//! longitude grid; tensors are stored by their components in the orthonormal
//! frame `(∂θ, ∂φ / sinθ)`.
//!
//! Modules:
//! - [`spectral`]: grid, spherical-harmonic transforms, derivatives, quadrature.
//! - [`tensor`]: covariant derivatives, symmetrization, traces and trace-free parts.
//! - [`flow`]: the pressure equation, RK4 driver and exact-solution oracles.
//! - [`identities`]: residuals of the tensor identities and the `J_α` energies.

pub mod error;
pub mod flow;
pub mod identities;
mod par;
pub mod spectral;
pub mod tensor;

pub use error::{Error, Result};

pub use flow::{FlowState, KrParams};
pub use spectral::{ScalarField, SpectralCoeffs, SphereGrid};
pub use tensor::{FrameTensor, Metric};
