//! Norm monitors, the blow-up functional, the identity suite and the
//! fitted-constant probes.
//!
//! Identities are checked as relative residuals between two independent
//! evaluation paths. Inequalities whose constants the theory leaves
//! existential are never asserted against a guessed constant: a probe
//! reports the fitted constant (the sup of LHS/RHS-structure over a seeded
//! ensemble) per cutoff and its stability factor across cutoffs.

use crate::ensemble::{random_scalar, random_solenoidal, random_vector};
use crate::error::{Result, SaltError};
use crate::galerkin::{enumerate_basis, project_pn, reconstruct, GalerkinSystem, SimState, StokesMode};
use crate::noise::CorrelationSet;
use crate::operators::{
    closed_form_commutator, commutator_delta_b, curl_free_residual, ito_correction, leray_project,
    m_inner, m_norm_sq, nonlinear_l, project, salt_b, stokes_apply, stokes_power,
};
use crate::rng::SplitMix64;
use crate::spectral::{
    gradient, l2_inner, laplacian, sobolev_norm_sq, sup_norm_estimate, volume, GridSample,
    SobolevIndex, SpectralScalarField, SpectralVectorField,
};
use crate::vorticity::{biot_savart, curl, vort_l};
use std::f64::consts::TAU;
use std::io::Write;

/// Per-step norms and the running blow-up functional.
#[derive(Clone, Debug)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2_sq: f64,
    pub h1_sq: f64,
    pub h2_sq: f64,
    /// Running sup of ||u||_1^2.
    pub h1_sup: f64,
    /// Trapezoidal int_0^t ||u_s||_2^2 ds.
    pub h2_integral: f64,
    /// The blow-up functional h1_sup + h2_integral; nondecreasing in t.
    pub blowup_partial: f64,
}

impl DiagnosticsRecord {
    pub fn initial(system: &GalerkinSystem, state: &SimState) -> Self {
        let l2_sq = system.norm_sq_from_coeffs(&state.coeffs, 0);
        let h1_sq = system.norm_sq_from_coeffs(&state.coeffs, 1);
        let h2_sq = system.norm_sq_from_coeffs(&state.coeffs, 2);
        Self {
            t: state.t,
            l2_sq,
            h1_sq,
            h2_sq,
            h1_sup: h1_sq,
            h2_integral: 0.0,
            blowup_partial: h1_sq,
        }
    }

    /// Next record: running sup of the H1 norm plus trapezoidal H2 integral.
    pub fn advanced(&self, system: &GalerkinSystem, state: &SimState, dt: f64) -> Self {
        let l2_sq = system.norm_sq_from_coeffs(&state.coeffs, 0);
        let h1_sq = system.norm_sq_from_coeffs(&state.coeffs, 1);
        let h2_sq = system.norm_sq_from_coeffs(&state.coeffs, 2);
        let h1_sup = self.h1_sup.max(h1_sq);
        let h2_integral = self.h2_integral + 0.5 * dt * (self.h2_sq + h2_sq);
        Self {
            t: state.t,
            l2_sq,
            h1_sq,
            h2_sq,
            h1_sup,
            h2_integral,
            blowup_partial: h1_sup + h2_integral,
        }
    }
}

/// Value of the blow-up functional at the end of a trajectory.
pub fn blowup_functional(records: &[DiagnosticsRecord]) -> f64 {
    records.last().map(|r| r.blowup_partial).unwrap_or(0.0)
}

/// Stop decision: the functional has crossed the configured threshold.
pub fn blowup_stop(records: &[DiagnosticsRecord], threshold: f64) -> bool {
    blowup_functional(records) > threshold
}

/// Identity or inequality-slack check.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CheckKind {
    /// value = relative residual, passes when value <= limit.
    Identity,
    /// value = worst normalised slack, passes when value >= limit.
    Slack,
}

#[derive(Clone, Debug)]
pub struct LemmaCheck {
    pub id: String,
    pub kind: CheckKind,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl LemmaCheck {
    fn identity(id: &str, value: f64, limit: f64) -> Self {
        Self { id: id.into(), kind: CheckKind::Identity, value, limit, pass: value <= limit }
    }

    fn slack(id: &str, value: f64, limit: f64) -> Self {
        Self { id: id.into(), kind: CheckKind::Slack, value, limit, pass: value >= limit }
    }
}

#[derive(Clone, Debug)]
pub struct LemmaReport {
    pub dim: usize,
    pub cutoff: i64,
    pub seed: u64,
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "check,kind,value,limit,pass")?;
        for c in &self.checks {
            let kind = match c.kind {
                CheckKind::Identity => "identity",
                CheckKind::Slack => "slack",
            };
            writeln!(out, "{},{},{:e},{:e},{}", c.id, kind, c.value, c.limit, c.pass)?;
        }
        Ok(())
    }
}

/// Aggregate residual tolerance for the identity suite; looser than the
/// per-pair 1e-11 targets to budget for accumulation over ~10^3 modes.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Inequality slacks may sit this far below zero from round-off.
pub const SLACK_TOL: f64 = -1e-12;

const SUITE_SAMPLES: usize = 6;

/// Run every identity-class check at one (dimension, cutoff, seed).
pub fn lemma_suite(seed: u64, dim: usize, cutoff: i64) -> Result<LemmaReport> {
    let mut rng = SplitMix64::from_key(&[seed, 0x1e33a]);
    let xi_cut = 2i64.min(cutoff);
    let mut checks = Vec::new();

    // --- antisymmetry and cancellation of the advection term
    let mut anti: f64 = 0.0;
    let mut cancel: f64 = 0.0;
    for _ in 0..SUITE_SAMPLES {
        let phi = random_solenoidal(dim, cutoff, 2.0, &mut rng);
        let f = random_vector(dim, cutoff, 2.0, &mut rng);
        let g = random_vector(dim, cutoff, 2.0, &mut rng);
        let scale = m_norm_sq(&phi, 1)?.sqrt()
            * sobolev_norm_sq(&f, SobolevIndex::new(1)?).sqrt()
            * l2_inner(&g, &g)?.sqrt();
        let lf = nonlinear_l(&phi, &f, None)?;
        let lg = nonlinear_l(&phi, &g, None)?;
        anti = anti.max((l2_inner(&lf, &g)? + l2_inner(&f, &lg)?).abs() / scale.max(1e-30));
        let self_scale = m_norm_sq(&phi, 1)?.sqrt()
            * sobolev_norm_sq(&f, SobolevIndex::new(1)?).sqrt()
            * l2_inner(&f, &f)?.sqrt();
        cancel = cancel.max(l2_inner(&lf, &f)?.abs() / self_scale.max(1e-30));
    }
    checks.push(LemmaCheck::identity("advection_antisymmetry", anti, IDENTITY_TOL));
    checks.push(LemmaCheck::identity("advection_cancellation", cancel, IDENTITY_TOL));

    // --- A P = A through the projected Laplacian
    let mut apa: f64 = 0.0;
    for _ in 0..SUITE_SAMPLES {
        let f = random_vector(dim, cutoff, 2.0, &mut rng);
        let lhs = stokes_apply(&leray_project(&f).solenoidal)?;
        let rhs = leray_project(&laplacian(&f)).solenoidal.scaled(-1.0);
        apa = apa.max(field_rel_residual(&lhs, &rhs));
    }
    checks.push(LemmaCheck::identity("stokes_of_projection", apa, IDENTITY_TOL));

    // --- P B = P B P and gradient invariance of B
    let mut pbp: f64 = 0.0;
    let mut bgrad: f64 = 0.0;
    for _ in 0..SUITE_SAMPLES {
        let xi = random_solenoidal(dim, xi_cut, 2.0, &mut rng);
        let f = random_vector(dim, cutoff, 2.0, &mut rng);
        let lhs = project(&salt_b(&xi, &f, None)?);
        let rhs = project(&salt_b(&xi, &project(&f), None)?);
        pbp = pbp.max(field_rel_residual(&lhs, &rhs));
        let g = random_scalar(dim, cutoff, 2.0, &mut rng);
        let b_grad = salt_b(&xi, &gradient(&g), None)?;
        bgrad = bgrad
            .max(curl_free_residual(&b_grad) / b_grad.max_coeff_abs().max(1e-30));
    }
    checks.push(LemmaCheck::identity("projected_salt_of_projection", pbp, IDENTITY_TOL));
    checks.push(LemmaCheck::identity("salt_preserves_gradients", bgrad, IDENTITY_TOL));

    // --- <f,g>_m = <A^{p/2} f, A^{q/2} g>, p + q = 2m
    let mut split: f64 = 0.0;
    for _ in 0..SUITE_SAMPLES {
        let f = random_solenoidal(dim, cutoff, 2.0, &mut rng);
        let g = random_solenoidal(dim, cutoff, 2.0, &mut rng);
        for (m, p, q) in [(1usize, 0u32, 2u32), (1, 1, 1), (2, 0, 4), (2, 1, 3), (2, 2, 2)] {
            let direct = m_inner(&f, &g, SobolevIndex::new(m)?)?;
            let moved = l2_inner(
                &stokes_power(&f, p as f64 / 2.0)?,
                &stokes_power(&g, q as f64 / 2.0)?,
            )?;
            let scale = (m_norm_sq(&f, m)? * m_norm_sq(&g, m)?).sqrt();
            split = split.max((direct - moved).abs() / scale.max(1e-30));
        }
    }
    checks.push(LemmaCheck::identity("stokes_power_split", split, IDENTITY_TOL));

    // --- commutator closed form vs the literal difference
    let mut comm: f64 = 0.0;
    for _ in 0..SUITE_SAMPLES.min(3) {
        let xi = random_solenoidal(dim, xi_cut, 2.0, &mut rng);
        let f = random_vector(dim, cutoff, 2.0, &mut rng);
        let direct = commutator_delta_b(&xi, &f)?;
        let closed = closed_form_commutator(&xi, &f)?;
        let scale = sup_norm_estimate(&xi, 3)?
            * sobolev_norm_sq(&f, SobolevIndex::new(2)?).sqrt();
        comm = comm.max(field_abs_residual(&direct, &closed) / scale.max(1e-30));
    }
    checks.push(LemmaCheck::identity("commutator_closed_form", comm, IDENTITY_TOL));

    // --- spectral-core identities
    let mut product_rule: f64 = 0.0;
    let mut divgrad: f64 = 0.0;
    let mut parseval: f64 = 0.0;
    for _ in 0..SUITE_SAMPLES {
        let f = random_scalar(dim, cutoff, 2.0, &mut rng);
        let g = random_scalar(dim, cutoff, 2.0, &mut rng);
        let product = f.multiply(&g, None)?;
        let lhs = product.partial_derivative(1)?;
        let mut rhs = f.partial_derivative(1)?.multiply(&g, None)?;
        rhs.add_assign(&f.multiply(&g.partial_derivative(1)?, None)?);
        product_rule = product_rule
            .max(scalar_rel_residual(&lhs, &rhs));
        let a = crate::spectral::divergence(&gradient(&f));
        let b = f.laplacian();
        divgrad = divgrad.max(scalar_rel_residual(&a, &b));

        let v = random_vector(dim, cutoff, 2.0, &mut rng);
        let spectral = l2_inner(&v, &v)?;
        let r = (4 * cutoff + 1) as usize;
        let mut quad = 0.0;
        for l in 0..dim {
            let samples = v.component(l).sample_grid(r)?;
            quad += samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64;
        }
        quad *= volume(dim);
        parseval = parseval.max((spectral - quad).abs() / spectral.max(1e-30));
    }
    checks.push(LemmaCheck::identity("derivative_product_rule", product_rule, IDENTITY_TOL));
    checks.push(LemmaCheck::identity("divergence_of_gradient", divgrad, IDENTITY_TOL));
    checks.push(LemmaCheck::identity("parseval_grid_quadrature", parseval, IDENTITY_TOL));

    // --- projection self-adjointness and the spectral-gap tail bound
    let basis = enumerate_basis(dim, cutoff);
    let n = (basis.len() / 2).max(1);
    let lambda_n = basis[n - 1].eigenvalue;
    let mut self_adj: f64 = 0.0;
    let mut tail_slack = f64::INFINITY;
    for _ in 0..SUITE_SAMPLES {
        let f = random_solenoidal(dim, cutoff, 2.0, &mut rng);
        let g = random_solenoidal(dim, cutoff, 2.0, &mut rng);
        for m in 0..=2usize {
            let idx = SobolevIndex::new(m)?;
            let lhs = m_inner(&project_pn(&f, n, &basis)?, &g, idx)?;
            let rhs = m_inner(&f, &project_pn(&g, n, &basis)?, idx)?;
            let scale = (m_norm_sq(&f, m)? * m_norm_sq(&g, m)?).sqrt();
            self_adj = self_adj.max((lhs - rhs).abs() / scale.max(1e-30));
        }
        let tail = f.sub(&project_pn(&f, n, &basis)?);
        let tail_sq = l2_inner(&tail, &tail)?;
        let h1 = m_norm_sq(&f, 1)?;
        tail_slack = tail_slack.min((h1 / lambda_n - tail_sq) / (h1 / lambda_n).max(1e-30));
    }
    checks.push(LemmaCheck::identity("projection_self_adjoint", self_adj, 1e-12));
    checks.push(LemmaCheck::slack("projection_tail_bound", tail_slack, SLACK_TOL));

    // --- 3D: curl identities and Biot-Savart
    if dim == 3 {
        let mut curl_adv: f64 = 0.0;
        let mut curl_salt: f64 = 0.0;
        let mut biot: f64 = 0.0;
        for _ in 0..SUITE_SAMPLES.min(4) {
            let f = random_solenoidal(3, cutoff, 2.0, &mut rng);
            let lhs = curl(&nonlinear_l(&f, &f, None)?)?;
            let rhs = vort_l(&f, &curl(&f)?, None)?;
            curl_adv = curl_adv.max(field_rel_residual(&lhs, &rhs));

            let xi = random_solenoidal(3, xi_cut, 2.0, &mut rng);
            let lhs = curl(&salt_b(&xi, &f, None)?)?;
            let rhs = vort_l(&xi, &curl(&f)?, None)?;
            curl_salt = curl_salt.max(field_rel_residual(&lhs, &rhs));

            let w = curl(&random_vector(3, cutoff, 2.0, &mut rng))?;
            let back = curl(&biot_savart(&w)?)?;
            biot = biot.max(field_rel_residual(&back, &w));
        }
        checks.push(LemmaCheck::identity("curl_of_self_advection", curl_adv, IDENTITY_TOL));
        checks.push(LemmaCheck::identity("curl_of_salt", curl_salt, IDENTITY_TOL));
        checks.push(LemmaCheck::identity("biot_savart_round_trip", biot, IDENTITY_TOL));
    }

    // --- degenerate noise: all B-related residuals exactly zero
    {
        let zero_xi = SpectralVectorField::zero(dim, xi_cut);
        let f = random_solenoidal(dim, cutoff, 2.0, &mut rng);
        let b = salt_b(&zero_xi, &f, None)?;
        let corr = ito_correction(std::slice::from_ref(&zero_xi), &f)?;
        let comm = commutator_delta_b(&zero_xi, &f)?;
        let worst = b
            .max_coeff_abs()
            .max(corr.max_coeff_abs())
            .max(comm.max_coeff_abs());
        checks.push(LemmaCheck::identity("degenerate_noise_vanishes", worst, 0.0));
    }

    Ok(LemmaReport { dim, cutoff, seed, checks })
}

/// Max coefficient difference over the max coefficient of either side.
fn field_rel_residual(a: &SpectralVectorField, b: &SpectralVectorField) -> f64 {
    field_abs_residual(a, b) / a.max_coeff_abs().max(b.max_coeff_abs()).max(1e-30)
}

fn field_abs_residual(a: &SpectralVectorField, b: &SpectralVectorField) -> f64 {
    let target = a.cutoff().max(b.cutoff());
    let mut worst = 0.0f64;
    for l in 0..a.dim() {
        let aa = a.component(l).with_cutoff(target);
        let bb = b.component(l).with_cutoff(target);
        for (x, y) in aa.coeffs().iter().zip(bb.coeffs().iter()) {
            worst = worst.max((x - y).norm());
        }
    }
    worst
}

fn scalar_rel_residual(a: &SpectralScalarField, b: &SpectralScalarField) -> f64 {
    let target = a.cutoff().max(b.cutoff());
    let aa = a.with_cutoff(target);
    let bb = b.with_cutoff(target);
    let mut worst = 0.0f64;
    for (x, y) in aa.coeffs().iter().zip(bb.coeffs().iter()) {
        worst = worst.max((x - y).norm());
    }
    worst / a.max_coeff_abs().max(b.max_coeff_abs()).max(1e-30)
}

/// Second-order central differences of grid samples along one axis.
pub fn finite_difference_oracle(
    field: &SpectralScalarField,
    axis: usize,
    resolution: usize,
) -> Result<GridSample> {
    if axis == 0 || axis > field.dim() {
        return Err(SaltError::AxisOutOfRange { axis, dim: field.dim() });
    }
    if (resolution as i64) < 2 * field.cutoff() + 1 {
        return Err(SaltError::InvalidArgument(format!(
            "resolution {resolution} below alias-free minimum {}",
            2 * field.cutoff() + 1
        )));
    }
    let dim = field.dim();
    let values = field.sample_grid(resolution)?;
    let h = TAU / resolution as f64;
    let stride = resolution.pow((dim - axis) as u32);
    let r = resolution;
    let mut out = vec![0.0; values.len()];
    for (i, slot) in out.iter_mut().enumerate() {
        // periodic neighbours along `axis`
        let line = (i / stride) % r;
        let base = i - line * stride;
        let fwd = base + ((line + 1) % r) * stride;
        let bwd = base + ((line + r - 1) % r) * stride;
        *slot = (values[fwd] - values[bwd]) / (2.0 * h);
    }
    Ok(GridSample { resolution, dim, values: out })
}

// ---------------------------------------------------------------------------
// fitted-constant probes
// ---------------------------------------------------------------------------

/// One probe per inequality the harness exercises.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ProbeId {
    StretchBound,
    AdvectionBound,
    SaltBound,
    CombinedEnergy,
    NoiseQuadratic,
    CommutatorBound,
    NonlinearInterpolation,
    BasicNonlinearL2,
    BasicNonlinearH1Smooth,
    BasicNonlinearH1Balanced,
    GalerkinNonlinearAlgebra,
    GalerkinNoiseH2,
    GalerkinNoiseH1,
    CauchyNonlinearH1,
    CauchyNonlinearL2,
    UniformBoundsDrift,
    UniformBoundsNoise,
    CauchyDrift,
    CauchyNoise,
    EnergyProductionV,
    NoiseProductionV,
    VorticityNonlinear,
    VorticityCauchy,
    BiotSavartRegularity,
}

impl ProbeId {
    pub fn all() -> Vec<ProbeId> {
        use ProbeId::*;
        vec![
            StretchBound,
            AdvectionBound,
            SaltBound,
            CombinedEnergy,
            NoiseQuadratic,
            CommutatorBound,
            NonlinearInterpolation,
            BasicNonlinearL2,
            BasicNonlinearH1Smooth,
            BasicNonlinearH1Balanced,
            GalerkinNonlinearAlgebra,
            GalerkinNoiseH2,
            GalerkinNoiseH1,
            CauchyNonlinearH1,
            CauchyNonlinearL2,
            UniformBoundsDrift,
            UniformBoundsNoise,
            CauchyDrift,
            CauchyNoise,
            EnergyProductionV,
            NoiseProductionV,
            VorticityNonlinear,
            VorticityCauchy,
            BiotSavartRegularity,
        ]
    }

    pub fn label(&self) -> &'static str {
        use ProbeId::*;
        match self {
            StretchBound => "stretch-bound",
            AdvectionBound => "advection-bound",
            SaltBound => "salt-bound",
            CombinedEnergy => "combined-energy",
            NoiseQuadratic => "noise-quadratic",
            CommutatorBound => "commutator-bound",
            NonlinearInterpolation => "nonlinear-interpolation",
            BasicNonlinearL2 => "basic-nonlinear-l2",
            BasicNonlinearH1Smooth => "basic-nonlinear-h1-smooth",
            BasicNonlinearH1Balanced => "basic-nonlinear-h1-balanced",
            GalerkinNonlinearAlgebra => "galerkin-nonlinear-algebra",
            GalerkinNoiseH2 => "galerkin-noise-h2",
            GalerkinNoiseH1 => "galerkin-noise-h1",
            CauchyNonlinearH1 => "cauchy-nonlinear-h1",
            CauchyNonlinearL2 => "cauchy-nonlinear-l2",
            UniformBoundsDrift => "uniform-bounds-drift",
            UniformBoundsNoise => "uniform-bounds-noise",
            CauchyDrift => "cauchy-drift",
            CauchyNoise => "cauchy-noise",
            EnergyProductionV => "energy-production-v",
            NoiseProductionV => "noise-production-v",
            VorticityNonlinear => "vorticity-nonlinear",
            VorticityCauchy => "vorticity-cauchy",
            BiotSavartRegularity => "biot-savart-regularity",
        }
    }

    /// Probes exercising the vorticity calculus run on the 3-torus.
    pub fn dim(&self) -> usize {
        use ProbeId::*;
        match self {
            VorticityNonlinear | VorticityCauchy | BiotSavartRegularity => 3,
            _ => 2,
        }
    }

    fn has_sign_check(&self) -> bool {
        use ProbeId::*;
        matches!(self, UniformBoundsDrift | CauchyDrift | EnergyProductionV)
    }

    /// Bands and smoothness levels of the cutoff-independent anchor
    /// sub-family. Probes that take P_n-truncated norms of operator images
    /// cap the anchor band at 2 (every image then stays within band 4,
    /// inside all tested cutoffs); the rest anchor up to band 4.
    fn anchor_flavors(&self) -> [DrawSpec; 5] {
        use ProbeId::*;
        match self {
            GalerkinNoiseH1 | GalerkinNoiseH2 | UniformBoundsDrift => [
                DrawSpec { cutoff: 1, decay: 2.0 },
                DrawSpec { cutoff: 1, decay: 1.0 },
                DrawSpec { cutoff: 2, decay: 1.0 },
                DrawSpec { cutoff: 2, decay: 2.0 },
                DrawSpec { cutoff: 2, decay: 3.0 },
            ],
            _ => [
                DrawSpec { cutoff: 1, decay: 2.0 },
                DrawSpec { cutoff: 2, decay: 1.0 },
                DrawSpec { cutoff: 2, decay: 3.0 },
                DrawSpec { cutoff: 4, decay: 2.5 },
                DrawSpec { cutoff: 4, decay: 3.5 },
            ],
        }
    }
}

/// Seed, ensemble size and the cutoffs a probe sweeps.
#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    pub seed: u64,
    pub size: usize,
    pub cutoffs: Vec<i64>,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self { seed: 1, size: 50, cutoffs: vec![4, 8, 16] }
    }
}

/// Fitted constants of one probe across cutoffs.
#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub id: String,
    pub ensemble_size: usize,
    pub cutoffs: Vec<i64>,
    pub fitted: Vec<f64>,
    pub max_ratio: f64,
    /// max fitted / min fitted across cutoffs; >= 1.
    pub stability_factor: f64,
    /// For the dissipativity probes: did the -nu top-order term drive the
    /// left side negative on the high-frequency stress members?
    pub sign_check: Option<bool>,
}

impl ProbeReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "probe,cutoff,fitted")?;
        for (k, c) in self.cutoffs.iter().zip(self.fitted.iter()) {
            writeln!(out, "{},{},{:e}", self.id, k, c)?;
        }
        Ok(())
    }
}

/// Viscosity used by the dissipativity probes (kappa = nu).
pub const PROBE_NU: f64 = 1.0;
const PROBE_M: usize = 2;
const PROBE_XI_CUTOFF: i64 = 2;
const PROBE_GAMMA: f64 = 1.0;
/// Spectral decay of the cutoff-swept probe members: smooth enough that
/// every norm the probes touch converges as the cutoff grows.
const FULL_DECAY: f64 = 3.5;

/// Fitted constants this far below the O(1) scale of a structure-normalised
/// ratio are residual-level; the stability quotient floors at this value so
/// that noise around a negligible constant is not reported as drift.
pub const STABILITY_FLOOR: f64 = 1e-3;

/// How one ensemble member is drawn.
#[derive(Clone, Copy, Debug)]
struct DrawSpec {
    cutoff: i64,
    decay: f64,
}

struct ProbeContext {
    basis: Vec<StokesMode>,
    xis: CorrelationSet,
    cutoff: i64,
    dim: usize,
}

impl ProbeContext {
    fn new(id: ProbeId, cutoff: i64, seed: u64) -> Result<Self> {
        let dim = id.dim();
        let basis = enumerate_basis(dim, cutoff);
        let xis = CorrelationSet::build(dim, PROBE_M, PROBE_GAMMA, PROBE_XI_CUTOFF, seed)?;
        Ok(Self { basis, xis, cutoff, dim })
    }

    fn vector(&self, rng: &mut SplitMix64, draw: DrawSpec) -> SpectralVectorField {
        random_vector(self.dim, draw.cutoff, draw.decay, rng)
    }

    fn solenoidal(&self, rng: &mut SplitMix64, draw: DrawSpec) -> SpectralVectorField {
        random_solenoidal(self.dim, draw.cutoff, draw.decay, rng)
    }

    /// Random Galerkin state with spectrally decaying coordinates.
    fn random_state_from(&self, rng: &mut SplitMix64, draw: DrawSpec) -> SpectralVectorField {
        let modes: Vec<StokesMode> = if draw.cutoff == self.cutoff {
            self.basis.clone()
        } else {
            enumerate_basis(self.dim, draw.cutoff)
        };
        let coeffs: Vec<f64> = modes
            .iter()
            .map(|m| rng.next_normal() * m.eigenvalue.powf(-draw.decay))
            .collect();
        reconstruct(&modes, &coeffs, self.dim, draw.cutoff)
    }

    /// Single top-eigenvalue mode normalised to ||f||_m = 1.
    fn spike_state(&self, m: u32) -> SpectralVectorField {
        let mode = self.basis.last().expect("basis nonempty");
        let c = 1.0 / (mode.eigenvalue.powi(m as i32) * volume(self.dim)).sqrt();
        reconstruct(
            std::slice::from_ref(mode),
            &[c],
            self.dim,
            self.cutoff,
        )
    }

    /// The Ito drift operator -P L_u u - nu A u + (1/2) sum P B_i^2 u.
    fn ito_operator(&self, u: &SpectralVectorField) -> Result<SpectralVectorField> {
        let mut out = project(&nonlinear_l(u, u, None)?).scaled(-1.0);
        out.add_assign(&stokes_apply(u)?.scaled(-PROBE_NU).with_cutoff(out.cutoff()));
        let corr = ito_correction(self.xis.xis(), u)?;
        out.add_assign(&corr.with_cutoff(out.cutoff()));
        Ok(out)
    }
}

/// Evaluate one probe over the seeded ensemble.
pub fn bound_probe(id: ProbeId, spec: &EnsembleSpec) -> Result<ProbeReport> {
    let mut fitted = Vec::with_capacity(spec.cutoffs.len());
    let mut sign_ok = true;
    for &cutoff in &spec.cutoffs {
        let ctx = ProbeContext::new(id, cutoff, spec.seed ^ 0xab5e11)?;
        let flavors = id.anchor_flavors();
        let mut worst: f64 = 0.0;
        for member in 0..spec.size {
            // half the ensemble is the base family, keyed without the
            // cutoff so the same fields recur at every K; the other half
            // sweeps the cutoff with very smooth draws
            let anchor = member < spec.size / 2;
            let (draw, mut rng) = if anchor {
                let flavor = flavors[member % flavors.len()];
                let draw = DrawSpec { cutoff: flavor.cutoff.min(cutoff), ..flavor };
                let rng = SplitMix64::from_key(&[
                    spec.seed,
                    0x9b0be,
                    id as u64,
                    0xa2c402,
                    member as u64,
                ]);
                (draw, rng)
            } else {
                let draw = DrawSpec { cutoff, decay: FULL_DECAY };
                let rng = SplitMix64::from_key(&[
                    spec.seed,
                    0x9b0be,
                    id as u64,
                    cutoff as u64,
                    member as u64,
                ]);
                (draw, rng)
            };
            worst = worst.max(probe_ratio(id, &ctx, &mut rng, draw)?);
        }
        if id.has_sign_check() {
            sign_ok &= probe_sign_check(id, &ctx)?;
        }
        // ensembles are nested across cutoffs: every band-K member is a
        // legitimate member at any larger cutoff, so the fitted constant
        // is the running sup and the stability factor isolates genuine
        // growth with resolution
        let cumulative = fitted.last().copied().unwrap_or(0.0);
        fitted.push(worst.max(cumulative));
    }
    let max_ratio = fitted.iter().copied().fold(0.0, f64::max);
    let floored_max = fitted.iter().map(|f| f.max(STABILITY_FLOOR)).fold(0.0, f64::max);
    let floored_min = fitted
        .iter()
        .map(|f| f.max(STABILITY_FLOOR))
        .fold(f64::INFINITY, f64::min);
    let stability_factor = floored_max / floored_min;
    Ok(ProbeReport {
        id: id.label().into(),
        ensemble_size: spec.size,
        cutoffs: spec.cutoffs.clone(),
        fitted,
        max_ratio,
        stability_factor,
        sign_check: if id.has_sign_check() { Some(sign_ok) } else { None },
    })
}

fn wnorm(f: &SpectralVectorField, m: usize) -> f64 {
    sobolev_norm_sq(f, SobolevIndex::new(m).expect("m <= 4")).sqrt()
}

fn probe_ratio(id: ProbeId, ctx: &ProbeContext, rng: &mut SplitMix64, draw: DrawSpec) -> Result<f64> {
    use ProbeId::*;
    let dim = ctx.dim;
    let cutoff = ctx.cutoff;
    match id {
        StretchBound => {
            let xi = &ctx.xis.xis()[0];
            let f = ctx.vector(rng, draw);
            let t = crate::operators::transport_t(xi, &f, None)?;
            let num = sobolev_norm_sq(&t, SobolevIndex::new(0)?);
            let den = sup_norm_estimate(xi, 1)?.powi(2) * sobolev_norm_sq(&f, SobolevIndex::new(0)?);
            Ok(num / den)
        }
        AdvectionBound => {
            let xi = &ctx.xis.xis()[0];
            let f = ctx.vector(rng, draw);
            let l = nonlinear_l(xi, &f, None)?;
            let num = sobolev_norm_sq(&l, SobolevIndex::new(0)?);
            let den = sup_norm_estimate(xi, 0)?.powi(2) * sobolev_norm_sq(&f, SobolevIndex::new(1)?);
            Ok(num / den)
        }
        SaltBound => {
            let xi = &ctx.xis.xis()[0];
            let f = ctx.vector(rng, draw);
            let b = salt_b(xi, &f, None)?;
            let num = sobolev_norm_sq(&b, SobolevIndex::new(0)?);
            let den = sup_norm_estimate(xi, 1)?.powi(2) * sobolev_norm_sq(&f, SobolevIndex::new(1)?);
            Ok(num / den)
        }
        CombinedEnergy => {
            let xi = &ctx.xis.xis()[0];
            let f = ctx.vector(rng, draw);
            let b = salt_b(xi, &f, None)?;
            let bb = salt_b(xi, &b, None)?;
            let num = l2_inner(&bb, &f)? + l2_inner(&b, &b)?;
            let den = sup_norm_estimate(xi, 2)?.powi(2) * sobolev_norm_sq(&f, SobolevIndex::new(0)?);
            Ok(num / den)
        }
        NoiseQuadratic => {
            let xi = &ctx.xis.xis()[0];
            let f = ctx.vector(rng, draw);
            let b = salt_b(xi, &f, None)?;
            let num = l2_inner(&b, &f)?.powi(2);
            let den = sup_norm_estimate(xi, 1)?.powi(2)
                * sobolev_norm_sq(&f, SobolevIndex::new(0)?).powi(2);
            Ok(num / den)
        }
        CommutatorBound => {
            let xi = &ctx.xis.xis()[0];
            let f = ctx.vector(rng, draw);
            let c = commutator_delta_b(xi, &f)?;
            let num = sobolev_norm_sq(&c, SobolevIndex::new(0)?);
            let den = sup_norm_estimate(xi, 3)?.powi(2) * sobolev_norm_sq(&f, SobolevIndex::new(2)?);
            Ok(num / den)
        }
        NonlinearInterpolation => {
            let f = ctx.solenoidal(rng, draw);
            let g = ctx.solenoidal(rng, draw);
            let l = nonlinear_l(&f, &g, None)?;
            let num = sobolev_norm_sq(&l, SobolevIndex::new(0)?).sqrt();
            let den = m_norm_sq(&f, 1)?.sqrt()
                * m_norm_sq(&g, 1)?.sqrt().sqrt()
                * m_norm_sq(&g, 2)?.sqrt().sqrt();
            Ok(num / den)
        }
        BasicNonlinearL2 => {
            let f = ctx.vector(rng, draw);
            let g = random_vector(dim, cutoff, 2.5, rng);
            let num =
                wnorm(&nonlinear_l(&f, &g, None)?, 0) + wnorm(&nonlinear_l(&g, &f, None)?, 0);
            Ok(num / (wnorm(&g, 1) * wnorm(&f, 2)))
        }
        BasicNonlinearH1Smooth => {
            let f = ctx.vector(rng, draw);
            let g = random_vector(dim, cutoff, 2.5, rng);
            let num = wnorm(&nonlinear_l(&g, &f, None)?, 1);
            Ok(num / (wnorm(&g, 1) * wnorm(&f, 3)))
        }
        BasicNonlinearH1Balanced => {
            let f = ctx.vector(rng, draw);
            let g = random_vector(dim, cutoff, 2.5, rng);
            let num = wnorm(&nonlinear_l(&g, &f, None)?, 1);
            Ok(num / (wnorm(&g, 2) * wnorm(&f, 2)))
        }
        GalerkinNonlinearAlgebra => {
            let f = ctx.random_state_from(rng, draw);
            let nl = project(&nonlinear_l(&f, &f, None)?);
            let pn = project_pn(&nl, ctx.basis.len(), &ctx.basis)?;
            let num = m_inner(&pn, &f, SobolevIndex::new(2)?)?.abs();
            let den = m_norm_sq(&f, 2)? * m_norm_sq(&f, 3)?.sqrt();
            Ok(num / den)
        }
        GalerkinNoiseH2 | GalerkinNoiseH1 => {
            let m = if id == GalerkinNoiseH2 { 2usize } else { 1 };
            let f = ctx.random_state_from(rng, draw);
            let idx = SobolevIndex::new(m)?;
            let mut lhs = 0.0;
            for xi in ctx.xis.xis() {
                let b = project(&salt_b(xi, &f, None)?);
                let bb = project(&salt_b(xi, &b, None)?);
                let pn_bb = project_pn(&bb, ctx.basis.len(), &ctx.basis)?;
                let pn_b = project_pn(&b, ctx.basis.len(), &ctx.basis)?;
                lhs += m_inner(&pn_bb, &f, idx)? + m_inner(&pn_b, &pn_b, idx)?;
            }
            let den = ctx.xis.summability() * m_norm_sq(&f, m)?.sqrt() * m_norm_sq(&f, m + 1)?.sqrt();
            Ok(lhs.abs() / den)
        }
        CauchyNonlinearH1 => {
            let f = ctx.random_state_from(rng, draw);
            let g = ctx.random_state_from(rng, draw);
            let d = f.sub(&g);
            let lf = project(&nonlinear_l(&f, &f, None)?);
            let lg = project(&nonlinear_l(&g, &g, None)?);
            let num = m_inner(&lf.sub(&lg), &d, SobolevIndex::new(1)?)?.abs();
            let d1 = m_norm_sq(&d, 1)?.sqrt();
            let d2 = m_norm_sq(&d, 2)?.sqrt();
            let den = d1 * m_norm_sq(&f, 2)?.sqrt() * d2
                + m_norm_sq(&g, 1)?.sqrt() * d1.sqrt() * d2.powf(1.5);
            Ok(num / den)
        }
        CauchyNonlinearL2 => {
            let f = ctx.random_state_from(rng, draw);
            let g = ctx.random_state_from(rng, draw);
            let d = f.sub(&g);
            let lf = project(&nonlinear_l(&f, &f, None)?);
            let lg = project(&nonlinear_l(&g, &g, None)?);
            let num = l2_inner(&lf.sub(&lg), &d)?.abs();
            let den = m_norm_sq(&f, 2)?.sqrt()
                * l2_inner(&d, &d)?.sqrt()
                * m_norm_sq(&d, 1)?.sqrt();
            Ok(num / den)
        }
        UniformBoundsDrift => {
            let f = ctx.random_state_from(rng, draw);
            let lhs = ctx.uniform_bounds_lhs(&f)?;
            let h = m_norm_sq(&f, 2)?;
            let v = m_norm_sq(&f, 3)?;
            let structure = (1.0 + h) * (1.0 + h);
            Ok((lhs + PROBE_NU * v).max(0.0) / structure)
        }
        UniformBoundsNoise => {
            let f = ctx.random_state_from(rng, draw);
            let idx = SobolevIndex::new(2)?;
            let mut lhs = 0.0;
            for xi in ctx.xis.xis() {
                let b = project_pn(&project(&salt_b(xi, &f, None)?), ctx.basis.len(), &ctx.basis)?;
                lhs += m_inner(&b, &f, idx)?.powi(2);
            }
            let den = ctx.xis.summability() * m_norm_sq(&f, 2)?.powi(2);
            Ok(lhs / den)
        }
        CauchyDrift => {
            let f = ctx.random_state_from(rng, draw);
            let g = ctx.random_state_from(rng, draw);
            let lhs = ctx.cauchy_lhs(&f, &g)?;
            let d = f.sub(&g);
            let d1 = m_norm_sq(&d, 1)?;
            let d2 = m_norm_sq(&d, 2)?;
            let structure = (1.0
                + m_norm_sq(&f, 1)?.powi(2)
                + m_norm_sq(&g, 1)?.powi(2)
                + m_norm_sq(&f, 2)?
                + m_norm_sq(&g, 2)?
                + ctx.xis.summability())
                * d1;
            Ok((lhs + PROBE_NU * d2).max(0.0) / structure)
        }
        CauchyNoise => {
            let f = ctx.random_state_from(rng, draw);
            let g = ctx.random_state_from(rng, draw);
            let d = f.sub(&g);
            let idx = SobolevIndex::new(1)?;
            let mut lhs = 0.0;
            for xi in ctx.xis.xis() {
                let b = project(&salt_b(xi, &d, None)?);
                lhs += m_inner(&b, &d, idx)?.powi(2);
            }
            let den = ctx.xis.summability() * m_norm_sq(&d, 1)?.powi(2);
            Ok(lhs / den)
        }
        EnergyProductionV => {
            let f = ctx.random_state_from(rng, draw);
            let lhs = ctx.energy_production_lhs(&f)?;
            let den = 1.0 + m_norm_sq(&f, 1)?.powi(3);
            Ok((lhs + PROBE_NU * m_norm_sq(&f, 2)?).max(0.0) / den)
        }
        NoiseProductionV => {
            let f = ctx.random_state_from(rng, draw);
            let idx = SobolevIndex::new(1)?;
            let mut lhs = 0.0;
            for xi in ctx.xis.xis() {
                let b = project(&salt_b(xi, &f, None)?);
                lhs += m_inner(&b, &f, idx)?.powi(2);
            }
            let den = ctx.xis.summability() * m_norm_sq(&f, 1)?.powi(2);
            Ok(lhs / den)
        }
        VorticityNonlinear => {
            let w = ctx.random_state_from(rng, draw);
            let u = biot_savart(&w)?;
            let l = vort_l(&u, &w, Some(cutoff))?;
            let pn = project_pn(&project(&l), ctx.basis.len(), &ctx.basis)?;
            let num = m_inner(&pn, &w, SobolevIndex::new(1)?)?.abs();
            let den = m_norm_sq(&w, 1)? * m_norm_sq(&w, 2)?.sqrt();
            Ok(num / den)
        }
        VorticityCauchy => {
            let phi = ctx.random_state_from(rng, draw);
            let psi = ctx.random_state_from(rng, draw);
            let d = phi.sub(&psi);
            let lf = vort_l(&biot_savart(&phi)?, &phi, Some(cutoff))?;
            let lg = vort_l(&biot_savart(&psi)?, &psi, Some(cutoff))?;
            let num = l2_inner(&project(&lf.sub(&lg)), &d)?.abs();
            let den = (m_norm_sq(&phi, 1)?.sqrt() + m_norm_sq(&psi, 1)?.sqrt())
                * m_norm_sq(&d, 1)?.sqrt()
                * l2_inner(&d, &d)?.sqrt();
            Ok(num / den)
        }
        BiotSavartRegularity => {
            let w = ctx.random_state_from(rng, draw);
            let u = biot_savart(&w)?;
            let mut worst: f64 = 0.0;
            for k in 0..=1usize {
                worst = worst.max(wnorm(&u, k + 1) / wnorm(&w, k));
            }
            Ok(worst)
        }
    }
}

impl ProbeContext {
    /// 2 <P_n A(f), f>_2 + sum_i ||P_n P B_i f||_2^2 with A the Ito drift.
    fn uniform_bounds_lhs(&self, f: &SpectralVectorField) -> Result<f64> {
        let af = self.ito_operator(f)?;
        let pn_af = project_pn(&af, self.basis.len(), &self.basis)?;
        let idx = SobolevIndex::new(2)?;
        let mut lhs = 2.0 * m_inner(&pn_af, f, idx)?;
        for xi in self.xis.xis() {
            let b = project_pn(&project(&salt_b(xi, f, None)?), self.basis.len(), &self.basis)?;
            lhs += m_inner(&b, &b, idx)?;
        }
        Ok(lhs)
    }

    /// 2 <A(f) - A(g), f-g>_1 + sum_i ||P B_i (f-g)||_1^2.
    fn cauchy_lhs(&self, f: &SpectralVectorField, g: &SpectralVectorField) -> Result<f64> {
        let d = f.sub(&g);
        let idx = SobolevIndex::new(1)?;
        let af = self.ito_operator(f)?;
        let ag = self.ito_operator(g)?;
        let mut lhs = 2.0 * m_inner(&af.sub(&ag), &d, idx)?;
        for xi in self.xis.xis() {
            let b = project(&salt_b(xi, &d, None)?);
            lhs += m_inner(&b, &b, idx)?;
        }
        Ok(lhs)
    }

    /// 2 <A(f), f>_1 + sum_i ||P B_i f||_1^2.
    fn energy_production_lhs(&self, f: &SpectralVectorField) -> Result<f64> {
        let af = self.ito_operator(f)?;
        let idx = SobolevIndex::new(1)?;
        let mut lhs = 2.0 * m_inner(&af, f, idx)?;
        for xi in self.xis.xis() {
            let b = project(&salt_b(xi, f, None)?);
            lhs += m_inner(&b, &b, idx)?;
        }
        Ok(lhs)
    }
}

/// High-frequency stress members: with lower-order norms pinned at one,
/// the -nu top-order term must drive the left side negative.
fn probe_sign_check(id: ProbeId, ctx: &ProbeContext) -> Result<bool> {
    use ProbeId::*;
    match id {
        UniformBoundsDrift => {
            let f = ctx.spike_state(2);
            Ok(ctx.uniform_bounds_lhs(&f)? < 0.0)
        }
        CauchyDrift => {
            let f = ctx.spike_state(1);
            let g = SpectralVectorField::zero(ctx.dim, ctx.cutoff);
            Ok(ctx.cauchy_lhs(&f, &g)? < 0.0)
        }
        EnergyProductionV => {
            let f = ctx.spike_state(1);
            Ok(ctx.energy_production_lhs(&f)? < 0.0)
        }
        _ => Ok(true),
    }
}
