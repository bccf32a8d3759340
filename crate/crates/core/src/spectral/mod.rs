//! Exact arithmetic on band-limited periodic fields.
//!
//! Everything downstream (operator calculus, Galerkin dynamics, the
//! verification suite) reduces to the primitives here: spectral
//! derivatives, exact dealiased products, Parseval inner products and
//! Sobolev norm evaluation. The torus is [0, 2pi)^N with unit-coefficient
//! modes e^{ik.x}; fields are immutable values and all operations are pure.

mod fft;
mod scalar;
mod vector;

pub use fft::fast_size;
pub use scalar::{pairwise_sum, SpectralScalarField, WaveVector};
pub use vector::{
    default_sup_resolution, divergence, gradient, l2_inner, laplacian, multi_indices,
    sobolev_norm_sq, sup_norm_estimate, sup_norm_estimate_at, volume, GridSample, SobolevIndex,
    SpectralVectorField, MAX_SOBOLEV_ORDER,
};
