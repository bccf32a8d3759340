//! Canned experiments shared by the CLI and the acceptance suite.

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Result, SaltError};
use crate::galerkin::{enumerate_basis, GalerkinSystem, SimState, SystemForm};
use crate::noise::{CorrelationSet, IntegratorConfig, NoisePath, Scheme};
use crate::rng::SplitMix64;
use crate::sde::{integrate, Outcome};
use crate::spectral::{SpectralScalarField, SpectralVectorField, WaveVector};
use num_complex::Complex64;
use std::io::Write;

/// The 2D Taylor-Green cell (sin x1 cos x2, -cos x1 sin x2): divergence
/// free, and its self-advection is a pure gradient, so the projected
/// dynamics reduce to viscous decay of the |k|^2 = 2 shell.
pub fn taylor_green_initial(cutoff: i64) -> SpectralVectorField {
    assert!(cutoff >= 1);
    let sin = |axis: usize| {
        let mut f = SpectralScalarField::zero(2, cutoff);
        let mut comps = [0i64; 2];
        comps[axis - 1] = 1;
        let k = WaveVector::new(&comps);
        f.set(&k, Complex64::new(0.0, -0.5));
        f.set(&k.negate(), Complex64::new(0.0, 0.5));
        f
    };
    let cos = |axis: usize| {
        let mut f = SpectralScalarField::zero(2, cutoff);
        let mut comps = [0i64; 2];
        comps[axis - 1] = 1;
        let k = WaveVector::new(&comps);
        f.set(&k, Complex64::new(0.5, 0.0));
        f.set(&k.negate(), Complex64::new(0.5, 0.0));
        f
    };
    let u1 = sin(1).multiply(&cos(2), Some(cutoff)).expect("same dim");
    let mut u2 = cos(1).multiply(&sin(2), Some(cutoff)).expect("same dim");
    u2.scale(-1.0);
    SpectralVectorField::new(vec![u1, u2])
}

pub struct TaylorGreenRun {
    pub fitted_rate: f64,
    pub expected_rate: f64,
    pub records: Vec<DiagnosticsRecord>,
    pub outcome: Outcome,
}

/// Integrate the Taylor-Green cell with no noise and fit the exponential
/// decay rate of ||u||^2 (expected: 4 nu).
pub fn taylor_green_run(
    nu: f64,
    dt: f64,
    t_end: f64,
    blowup_threshold: f64,
) -> Result<TaylorGreenRun> {
    let cutoff = 2i64;
    let rank = enumerate_basis(2, cutoff).len();
    let system = GalerkinSystem::new(
        2,
        cutoff,
        rank,
        SystemForm::VelocityIto,
        nu,
        CorrelationSet::empty(),
    )?;
    let u0 = taylor_green_initial(cutoff);
    let initial = SimState { t: 0.0, coeffs: system.field_to_coeffs(&u0) };
    let config = IntegratorConfig::new(Scheme::EulerMaruyama, dt, t_end, blowup_threshold)?;
    let path = NoisePath::generate(0, dt, config.step_count(), 0)?;
    let trajectory = integrate(&initial, &system, &config, &path)?;
    let fitted_rate = fit_exponential_rate(&trajectory.records)?;
    Ok(TaylorGreenRun {
        fitted_rate,
        expected_rate: 4.0 * nu,
        records: trajectory.records,
        outcome: trajectory.outcome,
    })
}

/// Least-squares slope of -ln(l2_sq) against t.
pub fn fit_exponential_rate(records: &[DiagnosticsRecord]) -> Result<f64> {
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.l2_sq > 0.0)
        .map(|r| (r.t, r.l2_sq.ln()))
        .collect();
    if points.len() < 2 {
        return Err(SaltError::InvalidArgument(
            "need at least two positive-energy records to fit a rate".into(),
        ));
    }
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in points {
        num += (t - mean_t) * (y - mean_y);
        den += (t - mean_t) * (t - mean_t);
    }
    Ok(-num / den)
}

/// Parameters of the Ito-Stratonovich comparison. The two schemes see the
/// same Brownian path at each resolution; their terminal disagreement
/// should shrink roughly first-order in dt.
#[derive(Clone, Debug)]
pub struct ConsistencyParams {
    pub dim: usize,
    pub cutoff: i64,
    pub rank: usize,
    pub nu: f64,
    pub noise_count: usize,
    pub noise_gamma: f64,
    pub noise_cutoff: i64,
    pub noise_amplitude: f64,
    pub t_end: f64,
    pub dts: Vec<f64>,
    pub seeds: Vec<u64>,
    pub initial_scale: f64,
}

impl Default for ConsistencyParams {
    fn default() -> Self {
        Self {
            dim: 2,
            cutoff: 2,
            rank: 16,
            nu: 1.0,
            noise_count: 2,
            noise_gamma: 1.0,
            noise_cutoff: 2,
            noise_amplitude: 0.5,
            t_end: 0.5,
            dts: vec![1e-2, 5e-3, 2.5e-3],
            seeds: (1..=16).collect(),
            initial_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConsistencyLevel {
    pub dt: f64,
    /// Per-seed relative terminal differences (fixed seed order).
    pub diffs: Vec<f64>,
    pub mean_diff: f64,
}

#[derive(Clone, Debug)]
pub struct ConsistencyResult {
    pub levels: Vec<ConsistencyLevel>,
    /// mean_diff(level i) / mean_diff(level i+1) per dt halving.
    pub ratios: Vec<f64>,
}

/// Deterministic low-mode initial state, identical across seeds.
fn consistency_initial(system: &GalerkinSystem, scale: f64) -> SimState {
    let mut rng = SplitMix64::from_key(&[0x1417, 0x5eed]);
    let coeffs: Vec<f64> = system
        .modes()
        .iter()
        .map(|m| scale * rng.next_normal() / m.eigenvalue)
        .collect();
    let norm = system.norm_sq_from_coeffs(&coeffs, 0).sqrt();
    SimState { t: 0.0, coeffs: coeffs.iter().map(|c| scale * c / norm).collect() }
}

/// Run Euler-Maruyama on the Ito form and Heun on the Stratonovich form
/// over the same noise paths and measure terminal disagreement per dt.
pub fn ito_strat_consistency(params: &ConsistencyParams) -> Result<ConsistencyResult> {
    let correlations = CorrelationSet::build(
        params.dim,
        params.noise_count,
        params.noise_gamma,
        params.noise_cutoff,
        0xC0FFEE,
    )?;
    let scaled = CorrelationSet::from_fields(
        correlations
            .xis()
            .iter()
            .map(|xi| xi.scaled(params.noise_amplitude))
            .collect(),
    )?;
    let ito = GalerkinSystem::new(
        params.dim,
        params.cutoff,
        params.rank,
        SystemForm::VelocityIto,
        params.nu,
        scaled.clone(),
    )?;
    let strat = GalerkinSystem::new(
        params.dim,
        params.cutoff,
        params.rank,
        SystemForm::VelocityStratonovich,
        params.nu,
        scaled,
    )?;
    let initial = consistency_initial(&ito, params.initial_scale);

    let mut levels = Vec::with_capacity(params.dts.len());
    for &dt in &params.dts {
        let config_ito =
            IntegratorConfig::new(Scheme::EulerMaruyama, dt, params.t_end, f64::INFINITY)?;
        let config_strat =
            IntegratorConfig::new(Scheme::HeunStratonovich, dt, params.t_end, f64::INFINITY)?;
        let steps = config_ito.step_count();
        let mut diffs = Vec::with_capacity(params.seeds.len());
        for &seed in &params.seeds {
            let path = NoisePath::generate(seed, dt, steps, params.noise_count)?;
            let a = integrate(&initial, &ito, &config_ito, &path)?;
            let b = integrate(&initial, &strat, &config_strat, &path)?;
            if a.outcome != Outcome::Completed || b.outcome != Outcome::Completed {
                return Err(SaltError::NonFinite {
                    context: format!("consistency run did not complete at dt={dt}"),
                });
            }
            let xa = &a.terminal().coeffs;
            let xb = &b.terminal().coeffs;
            let mut num = 0.0;
            let mut den = 0.0;
            for (p, q) in xa.iter().zip(xb.iter()) {
                num += (p - q) * (p - q);
                den += q * q;
            }
            diffs.push((num / den).sqrt());
        }
        let mean_diff = diffs.iter().sum::<f64>() / diffs.len() as f64;
        levels.push(ConsistencyLevel { dt, diffs, mean_diff });
    }
    let ratios = levels
        .windows(2)
        .map(|pair| pair[0].mean_diff / pair[1].mean_diff)
        .collect();
    Ok(ConsistencyResult { levels, ratios })
}

/// CSV with one row per (dt, seed) plus per-level means.
pub fn write_consistency_csv<W: Write>(
    params: &ConsistencyParams,
    result: &ConsistencyResult,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "dt,seed,rel_diff")?;
    for level in &result.levels {
        for (seed, diff) in params.seeds.iter().zip(level.diffs.iter()) {
            writeln!(out, "{},{},{}", level.dt, seed, diff)?;
        }
    }
    writeln!(out, "dt,mean_rel_diff,")?;
    for level in &result.levels {
        writeln!(out, "{},{},", level.dt, level.mean_diff)?;
    }
    Ok(())
}
