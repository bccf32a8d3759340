//! Time integrators for the truncated systems.
//!
//! Euler-Maruyama for the Ito forms, a Heun predictor-corrector for the
//! Stratonovich form, and an implicit midpoint rule for pure transport
//! noise. The transport Galerkin matrix is antisymmetric (the matrix face
//! of the cancellation <L_xi f, f> = 0), so the midpoint update is a
//! Cayley transform and conserves the L^2 norm to round-off.

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Result, SaltError};
use crate::galerkin::{GalerkinSystem, SimState};
use crate::noise::{IntegratorConfig, NoisePath, Scheme};
use crate::operators::{nonlinear_l, project};
use crate::spectral::SpectralVectorField;
use nalgebra::{DMatrix, DVector};

/// One Euler-Maruyama step of an Ito-form system:
/// x <- x + drift(x) dt + sum_i diffusion_i(x) dW^i.
pub fn euler_maruyama_step(
    state: &SimState,
    system: &GalerkinSystem,
    dt: f64,
    dw: &[f64],
) -> Result<SimState> {
    if !system.form().is_ito() {
        return Err(SaltError::InvalidArgument(
            "Euler-Maruyama integrates the Ito forms".into(),
        ));
    }
    let drift = system.drift(state)?;
    let mut next = state.coeffs.clone();
    for (x, d) in next.iter_mut().zip(drift.iter()) {
        *x += d * dt;
    }
    for (i, &dwi) in dw.iter().enumerate().take(system.correlations().len()) {
        if dwi == 0.0 {
            continue;
        }
        let col = system.diffusion(state, i)?;
        for (x, g) in next.iter_mut().zip(col.iter()) {
            *x += g * dwi;
        }
    }
    finite_or_overflow(SimState { t: state.t + dt, coeffs: next })
}

/// One Heun (stochastic trapezoid) step of the Stratonovich form:
/// predictor with Euler, corrector averaging drift and diffusion at both
/// endpoints. Strong order consistent with the Stratonovich interpretation.
pub fn heun_stratonovich_step(
    state: &SimState,
    system: &GalerkinSystem,
    dt: f64,
    dw: &[f64],
) -> Result<SimState> {
    if system.form() != crate::galerkin::SystemForm::VelocityStratonovich {
        return Err(SaltError::InvalidArgument(
            "Heun step integrates the Stratonovich form".into(),
        ));
    }
    let m = system.correlations().len();
    let drift0 = system.drift(state)?;
    let cols0: Vec<Vec<f64>> = (0..m)
        .map(|i| system.diffusion(state, i))
        .collect::<Result<_>>()?;

    let mut predictor = state.coeffs.clone();
    for (x, d) in predictor.iter_mut().zip(drift0.iter()) {
        *x += d * dt;
    }
    for (i, col) in cols0.iter().enumerate() {
        for (x, g) in predictor.iter_mut().zip(col.iter()) {
            *x += g * dw[i];
        }
    }
    let pred_state = finite_or_overflow(SimState { t: state.t + dt, coeffs: predictor })?;

    let drift1 = system.drift(&pred_state)?;
    let mut next = state.coeffs.clone();
    for (j, x) in next.iter_mut().enumerate() {
        *x += 0.5 * dt * (drift0[j] + drift1[j]);
    }
    for i in 0..m {
        let col1 = system.diffusion(&pred_state, i)?;
        for (j, x) in next.iter_mut().enumerate() {
            *x += 0.5 * dw[i] * (cols0[i][j] + col1[j]);
        }
    }
    finite_or_overflow(SimState { t: state.t + dt, coeffs: next })
}

fn finite_or_overflow(state: SimState) -> Result<SimState> {
    if state.is_finite() {
        Ok(state)
    } else {
        Err(SaltError::NonFinite { context: "integration step".into() })
    }
}

/// Precomputed midpoint stepper for pure transport noise
/// dx = -P_n L_xi x o dW.
pub struct TransportMidpoint {
    matrix: DMatrix<f64>,
}

impl TransportMidpoint {
    /// Assemble the Galerkin matrix L with L_ab = <L_xi a_b, a_a>/(2 pi)^N.
    pub fn new(system: &GalerkinSystem, xi: &SpectralVectorField) -> Result<Self> {
        xi.require_solenoidal()?;
        let n = system.rank();
        let mut matrix = DMatrix::zeros(n, n);
        for b in 0..n {
            let mode_field = system.modes()[b].field(system.cutoff());
            let image = project(&nonlinear_l(xi, &mode_field, None)?);
            let col = system.field_to_coeffs(&image);
            for a in 0..n {
                matrix[(a, b)] = col[a];
            }
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Largest |L + L^T| entry; zero for an exactly antisymmetric matrix.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                worst = worst.max((self.matrix[(a, b)] + self.matrix[(b, a)]).abs());
            }
        }
        worst
    }

    /// Solve (I + (dW/2) L) x+ = (I - (dW/2) L) x.
    pub fn step(&self, state: &SimState, dw: f64) -> Result<SimState> {
        let n = self.matrix.nrows();
        if state.coeffs.len() != n {
            return Err(SaltError::InvalidArgument(format!(
                "state has {} coordinates, matrix is {n}x{n}",
                state.coeffs.len()
            )));
        }
        if dw == 0.0 {
            return Ok(state.clone());
        }
        let x = DVector::from_column_slice(&state.coeffs);
        let half = 0.5 * dw;
        let lhs = DMatrix::identity(n, n) + &self.matrix * half;
        let rhs = (DMatrix::identity(n, n) - &self.matrix * half) * x;
        let solved = lhs.lu().solve(&rhs).ok_or_else(|| SaltError::NonFinite {
            context: "midpoint linear solve".into(),
        })?;
        finite_or_overflow(SimState { t: state.t, coeffs: solved.as_slice().to_vec() })
    }
}

/// Why a trajectory ended.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Outcome {
    Completed,
    /// The blow-up functional crossed the configured threshold.
    StoppedBlowup { step: usize },
    /// A step produced NaN or infinity; the trajectory holds the last
    /// finite state.
    Overflow { step: usize },
}

impl Outcome {
    pub fn label(&self) -> String {
        match self {
            Outcome::Completed => "completed".into(),
            Outcome::StoppedBlowup { step } => format!("stopped: blowup (step {step})"),
            Outcome::Overflow { step } => format!("overflow (step {step})"),
        }
    }
}

/// States and per-step diagnostics of one run.
pub struct Trajectory {
    pub states: Vec<SimState>,
    pub records: Vec<DiagnosticsRecord>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn terminal(&self) -> &SimState {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Integrate from an initial state until t_end, a blow-up stop or an
/// overflow. Deterministic given (system, config, path).
pub fn integrate(
    initial: &SimState,
    system: &GalerkinSystem,
    config: &IntegratorConfig,
    path: &NoisePath,
) -> Result<Trajectory> {
    if initial.coeffs.len() != system.rank() {
        return Err(SaltError::InvalidArgument(format!(
            "initial state has {} coordinates, system rank is {}",
            initial.coeffs.len(),
            system.rank()
        )));
    }
    let n_steps = config.step_count().min(path.steps());
    let midpoint = if config.scheme == Scheme::ImplicitMidpointTransport {
        let xi = system.correlations().xis().first().ok_or_else(|| {
            SaltError::InvalidArgument(
                "implicit midpoint transport needs at least one correlation".into(),
            )
        })?;
        Some(TransportMidpoint::new(system, xi)?)
    } else {
        None
    };

    let mut states = Vec::with_capacity(n_steps + 1);
    let mut records = Vec::with_capacity(n_steps + 1);
    let mut current = SimState { t: 0.0, coeffs: initial.coeffs.clone() };
    let mut record = DiagnosticsRecord::initial(system, &current);
    states.push(current.clone());
    records.push(record.clone());

    for step in 0..n_steps {
        let dw = path.row(step);
        let next = match config.scheme {
            Scheme::EulerMaruyama => euler_maruyama_step(&current, system, config.dt, dw),
            Scheme::HeunStratonovich => heun_stratonovich_step(&current, system, config.dt, dw),
            Scheme::ImplicitMidpointTransport => {
                let stepper = midpoint.as_ref().expect("midpoint stepper built above");
                stepper.step(&current, dw[0]).map(|mut s| {
                    s.t = current.t + config.dt;
                    s
                })
            }
        };
        let next = match next {
            Ok(s) => s,
            Err(SaltError::NonFinite { .. }) => {
                return Ok(Trajectory { states, records, outcome: Outcome::Overflow { step } });
            }
            Err(e) => return Err(e),
        };
        record = record.advanced(system, &next, config.dt);
        current = next;
        states.push(current.clone());
        records.push(record.clone());
        if record.blowup_partial > config.blowup_threshold {
            return Ok(Trajectory {
                states,
                records,
                outcome: Outcome::StoppedBlowup { step },
            });
        }
    }
    Ok(Trajectory { states, records, outcome: Outcome::Completed })
}
