//! Noise correlations and truncated cylindrical Brownian motion.
//!
//! The correlation fields xi_i are divergence-free, zero-average and come
//! with per-element W^{3,infty} estimates whose squares must be summable;
//! the set records that certificate. Brownian increments are counter-keyed
//! by (seed, noise index, step), so a path is reproducible and its first
//! M columns never change when more columns are added.

use crate::ensemble::random_solenoidal;
use crate::error::{Result, SaltError};
use crate::operators::ito_correction;
use crate::rng::{standard_normal, SplitMix64};
use crate::spectral::{sup_norm_estimate, SpectralVectorField};

const CORRELATION_STREAM_TAG: u64 = 0x5a4c54c0;
const PATH_STREAM_TAG: u64 = 0x5a4c549a;

/// The sequence (xi_i) with its summability certificate.
#[derive(Clone, Debug)]
pub struct CorrelationSet {
    xis: Vec<SpectralVectorField>,
    norms3inf: Vec<f64>,
    summability: f64,
}

impl CorrelationSet {
    /// No noise: deterministic Navier-Stokes.
    pub fn empty() -> Self {
        Self { xis: Vec::new(), norms3inf: Vec::new(), summability: 0.0 }
    }

    /// Wrap explicit correlation fields, measuring their norms.
    pub fn from_fields(xis: Vec<SpectralVectorField>) -> Result<Self> {
        let mut norms = Vec::with_capacity(xis.len());
        for xi in &xis {
            xi.require_solenoidal()?;
            norms.push(sup_norm_estimate(xi, 3)?);
        }
        let summability = norms.iter().map(|n| n * n).sum();
        Ok(Self { xis, norms3inf: norms, summability })
    }

    /// Build M correlations: xi_i = i^(-gamma) times a seeded random
    /// divergence-free field normalised to unit W^{3,infty} estimate.
    ///
    /// The summability certificate is then exactly sum_i i^(-2 gamma).
    pub fn build(dim: usize, m: usize, gamma: f64, cutoff: i64, seed: u64) -> Result<Self> {
        if gamma <= 0.0 {
            return Err(SaltError::InvalidArgument(format!(
                "decay rate gamma = {gamma} must be positive"
            )));
        }
        if m > 0 && cutoff < 1 {
            return Err(SaltError::InvalidArgument(
                "correlation cutoff must be at least 1".into(),
            ));
        }
        let mut xis = Vec::with_capacity(m);
        let mut norms = Vec::with_capacity(m);
        let mut summability = 0.0;
        for i in 1..=m {
            let mut rng = SplitMix64::from_key(&[seed, CORRELATION_STREAM_TAG, i as u64]);
            let raw = random_solenoidal(dim, cutoff, 2.0, &mut rng);
            let norm = sup_norm_estimate(&raw, 3)?;
            if norm == 0.0 {
                return Err(SaltError::InvalidArgument(format!(
                    "degenerate zero draw for correlation {i}"
                )));
            }
            let amplitude = (i as f64).powf(-gamma);
            xis.push(raw.scaled(amplitude / norm));
            norms.push(amplitude);
            summability += amplitude * amplitude;
        }
        Ok(Self { xis, norms3inf: norms, summability })
    }

    pub fn len(&self) -> usize {
        self.xis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xis.is_empty()
    }

    pub fn xis(&self) -> &[SpectralVectorField] {
        &self.xis
    }

    pub fn norms3inf(&self) -> &[f64] {
        &self.norms3inf
    }

    /// Sum of squared W^{3,infty} estimates.
    pub fn summability(&self) -> f64 {
        self.summability
    }

    pub fn dim(&self) -> Option<usize> {
        self.xis.first().map(|x| x.dim())
    }

    /// (1/2) sum_i P B_i^2 f for this set.
    pub fn ito_correction(&self, f: &SpectralVectorField) -> Result<SpectralVectorField> {
        ito_correction(&self.xis, f)
    }
}

/// Tail of the truncated sum sum_{i > m} i^(-2 gamma), bounded by the
/// integral m^(1-2 gamma)/(2 gamma - 1). Infinite for gamma <= 1/2.
pub fn summability_tail_bound(m: usize, gamma: f64) -> f64 {
    if gamma <= 0.5 {
        return f64::INFINITY;
    }
    (m.max(1) as f64).powf(1.0 - 2.0 * gamma) / (2.0 * gamma - 1.0)
}

/// Seeded Brownian increments, steps x M row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePath {
    seed: u64,
    dt: f64,
    steps: usize,
    columns: usize,
    increments: Vec<f64>,
}

impl NoisePath {
    /// Draw N(0, dt) increments keyed by (seed, column, step).
    pub fn generate(seed: u64, dt: f64, steps: usize, columns: usize) -> Result<Self> {
        if dt <= 0.0 {
            return Err(SaltError::InvalidArgument("dt must be positive".into()));
        }
        let sqrt_dt = dt.sqrt();
        let mut increments = Vec::with_capacity(steps * columns);
        for step in 0..steps {
            for col in 0..columns {
                increments.push(
                    sqrt_dt * standard_normal(&[seed, PATH_STREAM_TAG, col as u64, step as u64]),
                );
            }
        }
        Ok(Self { seed, dt, steps, columns, increments })
    }

    pub(crate) fn from_parts(
        seed: u64,
        dt: f64,
        steps: usize,
        columns: usize,
        increments: Vec<f64>,
    ) -> Result<Self> {
        if increments.len() != steps * columns {
            return Err(SaltError::FormatViolation(format!(
                "expected {} increments, found {}",
                steps * columns,
                increments.len()
            )));
        }
        Ok(Self { seed, dt, steps, columns, increments })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// The M increments of one time step.
    pub fn row(&self, step: usize) -> &[f64] {
        &self.increments[step * self.columns..(step + 1) * self.columns]
    }

    /// Check per-column mean and variance sit within 5 sigma of (0, dt).
    pub fn sanity_check(&self) -> Result<()> {
        if self.steps < 2 {
            return Ok(());
        }
        let n = self.steps as f64;
        for col in 0..self.columns {
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for step in 0..self.steps {
                let x = self.increments[step * self.columns + col];
                sum += x;
                sumsq += x * x;
            }
            let mean = sum / n;
            let var = sumsq / n - mean * mean;
            let mean_tol = 5.0 * (self.dt / n).sqrt();
            let var_tol = 5.0 * self.dt * (2.0 / n).sqrt();
            if mean.abs() > mean_tol || (var - self.dt).abs() > var_tol {
                return Err(SaltError::InvalidArgument(format!(
                    "column {col} fails 5-sigma sanity: mean {mean:.3e}, var {var:.3e} vs dt {:.3e}",
                    self.dt
                )));
            }
        }
        Ok(())
    }
}

/// Time stepping scheme.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Scheme {
    EulerMaruyama,
    HeunStratonovich,
    ImplicitMidpointTransport,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::EulerMaruyama => "euler-maruyama",
            Scheme::HeunStratonovich => "heun-stratonovich",
            Scheme::ImplicitMidpointTransport => "implicit-midpoint-transport",
        }
    }
}

/// Step size, horizon and the blow-up stop threshold.
#[derive(Clone, Copy, Debug)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub blowup_threshold: f64,
}

impl IntegratorConfig {
    pub fn new(scheme: Scheme, dt: f64, t_end: f64, blowup_threshold: f64) -> Result<Self> {
        if dt <= 0.0 {
            return Err(SaltError::InvalidArgument("dt must be positive".into()));
        }
        if t_end < dt {
            return Err(SaltError::InvalidArgument("t_end must be at least dt".into()));
        }
        Ok(Self { scheme, dt, t_end, blowup_threshold })
    }

    pub fn step_count(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}
