//! Seeded random band-limited fields.
//!
//! Used to build noise correlations and the ensembles behind the
//! fitted-constant probes. Amplitudes decay as (1 + |k|^2)^(-decay/2),
//! which keeps every Sobolev norm the probes touch dominated by resolved
//! scales, so fitted constants stabilise as the cutoff grows.

use crate::operators::leray_project;
use crate::rng::SplitMix64;
use crate::spectral::{SpectralScalarField, SpectralVectorField};
use num_complex::Complex64;

/// Smoothness exponent that keeps W^{3,2}-level quantities convergent in K
/// for both N = 2 and N = 3.
pub const DEFAULT_DECAY: f64 = 5.0;

/// Random real scalar field with the given spectral decay. Zero mean.
pub fn random_scalar(dim: usize, cutoff: i64, decay: f64, rng: &mut SplitMix64) -> SpectralScalarField {
    let mut f = SpectralScalarField::zero(dim, cutoff);
    let kvecs: Vec<_> = f.wavevectors().collect();
    for k in kvecs {
        if k.is_zero() {
            continue;
        }
        // draw once per conjugate pair: canonical representative only
        if !is_canonical(k.components()) {
            continue;
        }
        let amp = (1.0 + k.norm_sq() as f64).powf(-decay / 2.0);
        let c = Complex64::new(rng.next_normal(), rng.next_normal()) * (0.5 * amp);
        f.set(&k, c);
        f.set(&k.negate(), c.conj());
    }
    f
}

/// Random real vector field, zero mean, no divergence constraint.
pub fn random_vector(dim: usize, cutoff: i64, decay: f64, rng: &mut SplitMix64) -> SpectralVectorField {
    SpectralVectorField::new((0..dim).map(|_| random_scalar(dim, cutoff, decay, rng)).collect())
}

/// Random divergence-free zero-average field (Leray projection of a draw).
pub fn random_solenoidal(dim: usize, cutoff: i64, decay: f64, rng: &mut SplitMix64) -> SpectralVectorField {
    leray_project(&random_vector(dim, cutoff, decay, rng)).solenoidal
}

/// First nonzero component positive: picks one of each {k, -k} pair.
pub fn is_canonical(comps: &[i64]) -> bool {
    for &c in comps {
        if c > 0 {
            return true;
        }
        if c < 0 {
            return false;
        }
    }
    false
}
