//! Vector fields, Sobolev norms and inner products.

use super::scalar::{pairwise_sum, SpectralScalarField, WaveVector};
use crate::error::{Result, SaltError};
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Highest Sobolev order the norm machinery supports.
pub const MAX_SOBOLEV_ORDER: usize = 4;

/// A non-negative integer Sobolev order m <= 4.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SobolevIndex(usize);

impl SobolevIndex {
    pub fn new(m: usize) -> Result<Self> {
        if m > MAX_SOBOLEV_ORDER {
            return Err(SaltError::UnsupportedOrder { m, max: MAX_SOBOLEV_ORDER });
        }
        Ok(Self(m))
    }

    pub fn order(&self) -> usize {
        self.0
    }
}

/// Real grid samples of one scalar quantity over the uniform grid
/// (2 pi j / R)_j, row-major.
#[derive(Clone, Debug)]
pub struct GridSample {
    pub resolution: usize,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl GridSample {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// An N-component band-limited real vector field; the carrier for
/// velocities, vorticities and noise correlations alike.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVectorField {
    components: Vec<SpectralScalarField>,
}

impl SpectralVectorField {
    pub fn new(components: Vec<SpectralScalarField>) -> Self {
        assert!(!components.is_empty());
        let dim = components[0].dim();
        let cutoff = components[0].cutoff();
        assert_eq!(components.len(), dim, "component count must equal dimension");
        for c in &components {
            assert_eq!(c.dim(), dim);
            assert_eq!(c.cutoff(), cutoff);
        }
        Self { components }
    }

    pub fn zero(dim: usize, cutoff: i64) -> Self {
        Self::new((0..dim).map(|_| SpectralScalarField::zero(dim, cutoff)).collect())
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn cutoff(&self) -> i64 {
        self.components[0].cutoff()
    }

    pub fn component(&self, l: usize) -> &SpectralScalarField {
        &self.components[l]
    }

    pub fn component_mut(&mut self, l: usize) -> &mut SpectralScalarField {
        &mut self.components[l]
    }

    pub fn components(&self) -> &[SpectralScalarField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<SpectralScalarField> {
        self.components
    }

    /// Coefficient vector (f_k^1, ..., f_k^N) at one mode.
    pub fn coeff_at(&self, k: &WaveVector) -> Vec<Complex64> {
        self.components.iter().map(|c| c.get(k)).collect()
    }

    pub fn map_components<F>(&self, f: F) -> Self
    where
        F: Fn(&SpectralScalarField) -> SpectralScalarField,
    {
        Self::new(self.components.iter().map(f).collect())
    }

    pub fn try_map_components<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&SpectralScalarField) -> Result<SpectralScalarField>,
    {
        Ok(Self::new(
            self.components.iter().map(f).collect::<Result<Vec<_>>>()?,
        ))
    }

    pub fn with_cutoff(&self, cutoff: i64) -> Self {
        self.map_components(|c| c.with_cutoff(cutoff))
    }

    pub fn scale(&mut self, factor: f64) {
        for c in &mut self.components {
            c.scale(factor);
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.dim(), other.dim());
        for (a, b) in self.components.iter_mut().zip(other.components.iter()) {
            a.add_assign(b);
        }
    }

    pub fn added(&self, other: &Self) -> Self {
        let target = self.cutoff().max(other.cutoff());
        let mut out = self.with_cutoff(target);
        out.add_assign(&other.with_cutoff(target));
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.added(&other.scaled(-1.0))
    }

    pub fn hermitian_violation(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.hermitian_violation())
            .fold(0.0, f64::max)
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.max_coeff_abs())
            .fold(0.0, f64::max)
    }

    /// Largest |k . f_k| over the band; zero iff divergence-free.
    pub fn divergence_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (k, _) in self.components[0].iter() {
            let mut dot = Complex64::default();
            for (j, comp) in self.components.iter().enumerate() {
                dot += Complex64::new(k.component(j) as f64, 0.0) * comp.get(&k);
            }
            worst = worst.max(dot.norm());
        }
        worst
    }

    pub fn is_divergence_free(&self, tol: f64) -> bool {
        self.divergence_residual() <= tol
    }

    /// Magnitude of the k = 0 amplitude (all components).
    pub fn mean_magnitude(&self) -> f64 {
        let zero = WaveVector::new(&vec![0; self.dim()]);
        self.components
            .iter()
            .map(|c| c.get(&zero).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_zero_average(&self, tol: f64) -> bool {
        self.mean_magnitude() <= tol
    }

    /// Fail unless the field is divergence-free and zero-average to within
    /// a round-off budget proportional to its largest coefficient.
    pub fn require_solenoidal(&self) -> Result<()> {
        let scale = self.max_coeff_abs().max(1.0) * self.cutoff().max(1) as f64;
        let div = self.divergence_residual();
        if div > 1e-10 * scale {
            return Err(SaltError::NotDivergenceFree { max_residual: div });
        }
        let mean = self.mean_magnitude();
        if mean > 1e-12 * self.max_coeff_abs().max(1.0) {
            return Err(SaltError::NonZeroMean { magnitude: mean });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.coeffs().iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// grad f for a scalar f: components d f / d x_j.
pub fn gradient(f: &SpectralScalarField) -> SpectralVectorField {
    SpectralVectorField::new(
        (1..=f.dim())
            .map(|j| f.partial_derivative(j).expect("axis within dimension"))
            .collect(),
    )
}

/// div v = sum_j d v^j / d x_j.
pub fn divergence(v: &SpectralVectorField) -> SpectralScalarField {
    let mut out = SpectralScalarField::zero(v.dim(), v.cutoff());
    for j in 0..v.dim() {
        let d = v.component(j).partial_derivative(j + 1).expect("axis ok");
        out.add_assign(&d);
    }
    out
}

/// Componentwise Laplacian: mode k scaled by -|k|^2.
pub fn laplacian(v: &SpectralVectorField) -> SpectralVectorField {
    v.map_components(|c| c.laplacian())
}

/// L^2 inner product by Parseval: (2 pi)^N sum_k f_k . conj(g_k).
///
/// Cutoffs may differ; absent modes count as zero, so the sum runs over
/// the smaller band. Terms are accumulated in lexicographic order and
/// reduced pairwise for determinism.
pub fn l2_inner(f: &SpectralVectorField, g: &SpectralVectorField) -> Result<f64> {
    if f.dim() != g.dim() {
        return Err(SaltError::DimensionMismatch { expected: f.dim(), got: g.dim() });
    }
    let (small, large) = if f.cutoff() <= g.cutoff() { (f, g) } else { (g, f) };
    let mut terms = Vec::with_capacity(small.component(0).coeffs().len());
    for (k, _) in small.component(0).iter() {
        let mut dot = 0.0;
        for l in 0..f.dim() {
            let a = small.component(l).get(&k);
            let b = large.component(l).get(&k);
            dot += a.re * b.re + a.im * b.im;
        }
        terms.push(dot);
    }
    Ok(volume(f.dim()) * pairwise_sum(&terms))
}

/// (2 pi)^N, the measure of the torus.
pub fn volume(dim: usize) -> f64 {
    TAU.powi(dim as i32)
}

/// All multi-indices alpha with |alpha| <= m in dimension N.
pub fn multi_indices(dim: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut alpha = vec![0usize; dim];
    loop {
        if alpha.iter().sum::<usize>() <= m {
            out.push(alpha.clone());
        }
        // odometer over 0..=m per slot
        let mut j = 0;
        loop {
            if j == dim {
                return out;
            }
            alpha[j] += 1;
            if alpha[j] > m {
                alpha[j] = 0;
                j += 1;
            } else {
                break;
            }
        }
    }
}

/// Spectral weight sum_{|alpha| <= m} k^{2 alpha} of the W^{m,2} norm.
fn sobolev_weight(k: &WaveVector, indices: &[Vec<usize>]) -> f64 {
    let mut w = 0.0;
    for alpha in indices {
        let mut term = 1.0f64;
        for (j, &a) in alpha.iter().enumerate() {
            let kj = k.component(j) as f64;
            for _ in 0..a {
                term *= kj * kj;
            }
        }
        w += term;
    }
    w
}

/// Squared W^{m,2} norm: (2 pi)^N sum_k (sum_{|alpha|<=m} k^{2 alpha}) |f_k|^2.
pub fn sobolev_norm_sq(f: &SpectralVectorField, m: SobolevIndex) -> f64 {
    let indices = multi_indices(f.dim(), m.order());
    let mut terms = Vec::with_capacity(f.component(0).coeffs().len());
    for (k, _) in f.component(0).iter() {
        let w = sobolev_weight(&k, &indices);
        let mut mag = 0.0;
        for l in 0..f.dim() {
            mag += f.component(l).get(&k).norm_sqr();
        }
        terms.push(w * mag);
    }
    volume(f.dim()) * pairwise_sum(&terms)
}

/// Grid-sampled estimate of the W^{m,infty} norm: the max of |D^alpha f^l|
/// over |alpha| <= m and components l, taken over the sample grid and then
/// polished by local parabolic ascent with exact point evaluations.
///
/// Always a lower bound on the true sup (every reported value is |f| at
/// an actual point) and converges from below as the resolution grows;
/// the default resolution is max(4K+1, 64) per axis.
pub fn sup_norm_estimate(f: &SpectralVectorField, m: usize) -> Result<f64> {
    let r = default_sup_resolution(f.cutoff());
    sup_norm_estimate_at(f, m, r)
}

pub fn default_sup_resolution(cutoff: i64) -> usize {
    ((4 * cutoff + 1) as usize).max(64)
}

pub fn sup_norm_estimate_at(f: &SpectralVectorField, m: usize, r: usize) -> Result<f64> {
    if m > 3 {
        return Err(SaltError::UnsupportedOrder { m, max: 3 });
    }
    let mut worst = 0.0f64;
    for alpha in multi_indices(f.dim(), m) {
        for l in 0..f.dim() {
            let d = f.component(l).derivative_multi(&alpha)?;
            worst = worst.max(scalar_sup_estimate(&d, r)?);
        }
    }
    Ok(worst)
}

/// Grid max of |g| followed by a few rounds of coordinatewise parabolic
/// interpolation around the argmax.
fn scalar_sup_estimate(g: &SpectralScalarField, r: usize) -> Result<f64> {
    let samples = g.sample_grid(r)?;
    let (mut best_idx, mut best) = (0usize, 0.0f64);
    for (i, v) in samples.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            best_idx = i;
        }
    }
    if best == 0.0 {
        return Ok(0.0);
    }
    let dim = g.dim();
    let h = TAU / r as f64;
    // argmax grid coordinates
    let mut x = vec![0.0f64; dim];
    let mut idx = best_idx;
    for j in (0..dim).rev() {
        x[j] = (idx % r) as f64 * h;
        idx /= r;
    }
    let sign = samples[best_idx].signum();
    let mut val = best;
    let mut delta = 0.5 * h;
    for _ in 0..3 {
        for j in 0..dim {
            let g0 = sign * g.eval_at(&x);
            x[j] += delta;
            let gp = sign * g.eval_at(&x);
            x[j] -= 2.0 * delta;
            let gm = sign * g.eval_at(&x);
            x[j] += delta;
            let denom = gm - 2.0 * g0 + gp;
            if denom < 0.0 {
                let step = (0.5 * delta * (gm - gp) / denom).clamp(-delta, delta);
                x[j] += step;
            }
            val = val.max(sign * g.eval_at(&x));
        }
        delta *= 0.5;
    }
    Ok(val.max(best))
}
