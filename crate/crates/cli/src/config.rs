//! Run configuration: TOML file plus command-line overrides.
//!
//! Precedence is flags over file over defaults. Unknown file keys are
//! rejected, and the full effective configuration is echoed into the
//! output directory so a manifest suffices to reproduce any number.

use anyhow::{bail, Context};
use saltns::galerkin::SystemForm;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Verify,
    Probe,
    TaylorGreen,
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Verify => "verify",
            Mode::Probe => "probe",
            Mode::TaylorGreen => "taylor-green",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Form {
    #[serde(rename = "velocity-ito")]
    VelocityIto,
    #[serde(rename = "velocity-strat")]
    VelocityStrat,
    #[serde(rename = "vorticity-ito")]
    VorticityIto,
}

impl Form {
    pub fn to_system_form(self) -> SystemForm {
        match self {
            Form::VelocityIto => SystemForm::VelocityIto,
            Form::VelocityStrat => SystemForm::VelocityStratonovich,
            Form::VorticityIto => SystemForm::VorticityIto,
        }
    }

    pub fn parse(s: &str) -> anyhow::Result<Self> {
        match s {
            "velocity-ito" => Ok(Form::VelocityIto),
            "velocity-strat" => Ok(Form::VelocityStrat),
            "vorticity-ito" => Ok(Form::VorticityIto),
            other => bail!("form: unknown value '{other}' (velocity-ito|velocity-strat|vorticity-ito)"),
        }
    }
}

/// The effective configuration of one run.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    /// Spatial dimension N in {2, 3}.
    pub n_dim: usize,
    /// Spectral cutoff K.
    pub cutoff: i64,
    /// Galerkin rank n; 0 selects the full basis at cutoff K.
    pub rank: usize,
    pub nu: f64,
    pub form: Form,
    /// Number of noise correlations M.
    pub noise_count: usize,
    /// Amplitude decay exponent of the correlation sequence.
    pub gamma: f64,
    /// Band of the correlation fields.
    pub noise_cutoff: i64,
    pub dt: f64,
    pub t_end: f64,
    pub blowup_threshold: f64,
    pub seed: u64,
    pub out: PathBuf,
    /// Steps between field snapshots in simulate mode.
    pub snapshot_stride: usize,
    /// Fan out this many consecutive seeds across workers.
    pub ensemble: usize,
    /// Optional snapshot to restart from (simulate mode).
    pub initial_snapshot: Option<PathBuf>,
}

/// On-disk configuration file; every key optional, unknown keys rejected.
#[derive(Default, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mode: Option<Mode>,
    #[serde(rename = "N")]
    pub n_dim: Option<usize>,
    #[serde(rename = "K")]
    pub cutoff: Option<i64>,
    pub n: Option<usize>,
    pub nu: Option<f64>,
    pub form: Option<Form>,
    #[serde(rename = "M")]
    pub noise_count: Option<usize>,
    pub gamma: Option<f64>,
    #[serde(rename = "K_xi")]
    pub noise_cutoff: Option<i64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub blowup_threshold: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub snapshot_stride: Option<usize>,
    pub ensemble: Option<usize>,
    pub initial_snapshot: Option<PathBuf>,
}

/// Command-line overrides (everything optional; flags win over the file).
#[derive(Default, Debug)]
pub struct Overrides {
    pub n_dim: Option<usize>,
    pub cutoff: Option<i64>,
    pub rank: Option<usize>,
    pub nu: Option<f64>,
    pub form: Option<Form>,
    pub noise_count: Option<usize>,
    pub gamma: Option<f64>,
    pub noise_cutoff: Option<i64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub blowup_threshold: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub snapshot_stride: Option<usize>,
    pub ensemble: Option<usize>,
    pub initial_snapshot: Option<PathBuf>,
}

pub fn load_config_file(path: &Path) -> anyhow::Result<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
}

/// Merge defaults, file and flags, then validate.
pub fn parse_config(mode: Mode, file: Option<ConfigFile>, flags: Overrides) -> anyhow::Result<RunConfig> {
    let file = file.unwrap_or_default();
    // the subcommand is the flag-level mode, so it wins over the file key
    let mode = Some(mode).or(file.mode).expect("subcommand supplies the mode");
    let config = RunConfig {
        mode,
        n_dim: flags.n_dim.or(file.n_dim).unwrap_or(2),
        cutoff: flags.cutoff.or(file.cutoff).unwrap_or(4),
        rank: flags.rank.or(file.n).unwrap_or(0),
        nu: flags.nu.or(file.nu).unwrap_or(0.1),
        form: flags.form.or(file.form).unwrap_or(Form::VelocityIto),
        noise_count: flags.noise_count.or(file.noise_count).unwrap_or(0),
        gamma: flags.gamma.or(file.gamma).unwrap_or(1.0),
        noise_cutoff: flags.noise_cutoff.or(file.noise_cutoff).unwrap_or(2),
        dt: flags.dt.or(file.dt).unwrap_or(1e-3),
        t_end: flags.t_end.or(file.t_end).unwrap_or(1.0),
        blowup_threshold: flags
            .blowup_threshold
            .or(file.blowup_threshold)
            .unwrap_or(1e12),
        seed: flags.seed.or(file.seed).unwrap_or(1),
        out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        snapshot_stride: flags.snapshot_stride.or(file.snapshot_stride).unwrap_or(100),
        ensemble: flags.ensemble.or(file.ensemble).unwrap_or(1),
        initial_snapshot: flags.initial_snapshot.or(file.initial_snapshot),
    };
    validate(&config)?;
    Ok(config)
}

fn validate(c: &RunConfig) -> anyhow::Result<()> {
    if c.n_dim != 2 && c.n_dim != 3 {
        bail!("N: must be 2 or 3, got {}", c.n_dim);
    }
    if c.cutoff < 1 {
        bail!("K: must be at least 1, got {}", c.cutoff);
    }
    if c.form == Form::VorticityIto && c.n_dim != 3 {
        bail!("form: vorticity-ito requires N=3, got N={}", c.n_dim);
    }
    if !(c.nu > 0.0) {
        bail!("nu: must be positive, got {}", c.nu);
    }
    if !(c.dt > 0.0) {
        bail!("dt: must be positive, got {}", c.dt);
    }
    if c.t_end < c.dt {
        bail!("t_end: must be at least dt, got t_end={} dt={}", c.t_end, c.dt);
    }
    if !(c.gamma > 0.0) {
        bail!("gamma: must be positive, got {}", c.gamma);
    }
    if c.noise_count > 0 && c.noise_cutoff < 1 {
        bail!("K_xi: must be at least 1 when M > 0, got {}", c.noise_cutoff);
    }
    if !(c.blowup_threshold > 0.0) {
        bail!("blowup_threshold: must be positive, got {}", c.blowup_threshold);
    }
    if c.snapshot_stride == 0 {
        bail!("snapshot_stride: must be positive");
    }
    if c.ensemble == 0 {
        bail!("ensemble: must be at least 1");
    }
    Ok(())
}

/// Echo the effective configuration as TOML.
pub fn echo_config(config: &RunConfig) -> String {
    toml::to_string_pretty(config).expect("config serialises")
}
