//! Run orchestration: artifacts on disk plus a process exit code.

use crate::config::{echo_config, Mode, RunConfig};
use anyhow::Context;
use saltns::diagnostics::{bound_probe, lemma_suite, DiagnosticsRecord, EnsembleSpec, ProbeId};
use saltns::experiments::taylor_green_run;
use saltns::galerkin::{enumerate_basis, write_basis_manifest, GalerkinSystem, SimState};
use saltns::noise::{CorrelationSet, IntegratorConfig, NoisePath, Scheme};
use saltns::rng::SplitMix64;
use saltns::sde::{integrate, Outcome, Trajectory};
use saltns::snapshot::{read_snapshot, write_snapshot};
use saltns::SaltError;
use serde::Serialize;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_OVERFLOW: i32 = 3;

#[derive(Serialize)]
struct Manifest<'a> {
    mode: &'a str,
    seed: u64,
    version: &'a str,
    wall_time_secs: f64,
    outcome: String,
    config: &'a RunConfig,
}

/// Execute a validated configuration; returns the process exit code.
pub fn execute(config: &RunConfig) -> anyhow::Result<i32> {
    let start = Instant::now();
    fs::create_dir_all(&config.out)
        .with_context(|| format!("creating output directory {}", config.out.display()))?;
    fs::write(config.out.join("config.toml"), echo_config(config))?;

    let (outcome, code) = match config.mode {
        Mode::Verify => run_verify(config)?,
        Mode::Probe => run_probe(config)?,
        Mode::TaylorGreen => run_taylor_green(config)?,
        Mode::Simulate => run_simulate_maybe_ensemble(config)?,
    };

    let manifest = Manifest {
        mode: config.mode.label(),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_secs: start.elapsed().as_secs_f64(),
        outcome,
        config,
    };
    fs::write(
        config.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(code)
}

fn run_verify(config: &RunConfig) -> anyhow::Result<(String, i32)> {
    let report = lemma_suite(config.seed, config.n_dim, config.cutoff)?;
    let mut file = fs::File::create(config.out.join("lemma_report.csv"))?;
    report.write_csv(&mut file)?;
    let mut failures = 0usize;
    for check in &report.checks {
        println!(
            "{:32} {:10} value {:>12.3e}  limit {:>9.1e}  {}",
            check.id,
            match check.kind {
                saltns::diagnostics::CheckKind::Identity => "identity",
                saltns::diagnostics::CheckKind::Slack => "slack",
            },
            check.value,
            check.limit,
            if check.pass { "ok" } else { "FAIL" }
        );
        if !check.pass {
            failures += 1;
        }
    }
    if failures == 0 {
        println!("verify: all {} checks passed", report.checks.len());
        Ok(("verified".into(), EXIT_OK))
    } else {
        println!("verify: {failures} checks FAILED");
        Ok((format!("{failures} checks failed"), EXIT_VERIFY_FAIL))
    }
}

fn run_probe(config: &RunConfig) -> anyhow::Result<(String, i32)> {
    let spec = EnsembleSpec { seed: config.seed, ..Default::default() };
    let mut detail = fs::File::create(config.out.join("probes.csv"))?;
    writeln!(detail, "probe,cutoff,fitted_constant")?;
    let mut summary = fs::File::create(config.out.join("probe_summary.csv"))?;
    writeln!(summary, "probe,max_fitted,stability_factor,sign_check")?;
    let mut unstable = 0usize;
    for id in ProbeId::all() {
        let report = bound_probe(id, &spec)?;
        for (cutoff, fitted) in report.cutoffs.iter().zip(report.fitted.iter()) {
            writeln!(detail, "{},{},{:e}", report.id, cutoff, fitted)?;
        }
        let sign = report
            .sign_check
            .map(|ok| if ok { "negative" } else { "VIOLATED" })
            .unwrap_or("-");
        writeln!(
            summary,
            "{},{:e},{},{}",
            report.id, report.max_ratio, report.stability_factor, sign
        )?;
        let stable = report.stability_factor <= 2.0 && report.sign_check.unwrap_or(true);
        println!(
            "{:28} fitted<= {:>10.3e}  stability {:>6.3}  sign {:10} {}",
            report.id,
            report.max_ratio,
            report.stability_factor,
            sign,
            if stable { "ok" } else { "UNSTABLE" }
        );
        if !stable {
            unstable += 1;
        }
    }
    if unstable == 0 {
        Ok(("probes stable".into(), EXIT_OK))
    } else {
        Ok((format!("{unstable} probes unstable"), EXIT_VERIFY_FAIL))
    }
}

fn run_taylor_green(config: &RunConfig) -> anyhow::Result<(String, i32)> {
    let run = taylor_green_run(config.nu, config.dt, config.t_end, config.blowup_threshold)?;
    write_diagnostics_csv(&config.out.join("diagnostics.csv"), &run.records)?;
    let rel = ((run.fitted_rate - run.expected_rate) / run.expected_rate).abs();
    let pass = rel <= 0.01 && run.outcome == Outcome::Completed;
    let mut file = fs::File::create(config.out.join("taylor_green.csv"))?;
    writeln!(file, "fitted_rate,expected_rate,relative_error,pass")?;
    writeln!(file, "{},{},{},{}", run.fitted_rate, run.expected_rate, rel, pass)?;
    println!(
        "taylor-green: fitted rate {:.6e} vs expected {:.6e} (relative error {:.3e}) -> {}",
        run.fitted_rate,
        run.expected_rate,
        rel,
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(if pass {
        ("decay rate within 1%".into(), EXIT_OK)
    } else {
        (format!("decay rate off by {rel:.3e}"), EXIT_VERIFY_FAIL)
    })
}

fn run_simulate_maybe_ensemble(config: &RunConfig) -> anyhow::Result<(String, i32)> {
    if config.ensemble == 1 {
        return run_simulate(config, config.seed, &config.out);
    }
    let workers = worker_count(config.ensemble);
    let seeds: Vec<u64> = (0..config.ensemble as u64).map(|i| config.seed + i).collect();
    let results: Vec<anyhow::Result<(String, i32)>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for chunk in seeds.chunks(config.ensemble.div_ceil(workers)) {
            let chunk: Vec<u64> = chunk.to_vec();
            handles.push(scope.spawn(move || {
                chunk
                    .into_iter()
                    .map(|seed| {
                        let dir = config.out.join(format!("member_{seed:04}"));
                        fs::create_dir_all(&dir)?;
                        run_simulate(config, seed, &dir)
                    })
                    .collect::<Vec<_>>()
            }));
        }
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread completes"))
            .collect()
    });
    let mut worst = EXIT_OK;
    let mut outcomes = Vec::new();
    for result in results {
        let (outcome, code) = result?;
        worst = worst.max(code);
        outcomes.push(outcome);
    }
    Ok((format!("ensemble of {}: [{}]", config.ensemble, outcomes.join("; ")), worst))
}

fn worker_count(jobs: usize) -> usize {
    let available = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let cap = std::env::var("SALT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(available);
    cap.min(jobs).max(1)
}

fn run_simulate(config: &RunConfig, seed: u64, dir: &Path) -> anyhow::Result<(String, i32)> {
    let correlations = if config.noise_count == 0 {
        CorrelationSet::empty()
    } else {
        CorrelationSet::build(
            config.n_dim,
            config.noise_count,
            config.gamma,
            config.noise_cutoff,
            seed,
        )?
    };
    let rank = if config.rank == 0 {
        enumerate_basis(config.n_dim, config.cutoff).len()
    } else {
        config.rank
    };
    let system = GalerkinSystem::new(
        config.n_dim,
        config.cutoff,
        rank,
        config.form.to_system_form(),
        config.nu,
        correlations,
    )?;

    let initial = match &config.initial_snapshot {
        Some(path) => {
            let file = fs::File::open(path)
                .with_context(|| format!("opening snapshot {}", path.display()))?;
            let field = read_snapshot(std::io::BufReader::new(file))
                .with_context(|| format!("loading snapshot {}", path.display()))?;
            if field.dim() != config.n_dim {
                anyhow::bail!(
                    "snapshot dimension {} does not match N={}",
                    field.dim(),
                    config.n_dim
                );
            }
            SimState { t: 0.0, coeffs: system.field_to_coeffs(&field) }
        }
        None => default_initial(&system, seed),
    };

    let scheme = match config.form.to_system_form() {
        saltns::galerkin::SystemForm::VelocityStratonovich => Scheme::HeunStratonovich,
        _ => Scheme::EulerMaruyama,
    };
    let integrator =
        IntegratorConfig::new(scheme, config.dt, config.t_end, config.blowup_threshold)?;
    let path = NoisePath::generate(seed, config.dt, integrator.step_count(), config.noise_count)?;
    if config.noise_count > 0 {
        let file = fs::File::create(dir.join("noise_path.saltpath"))?;
        saltns::snapshot::write_noise_path(&path, std::io::BufWriter::new(file))?;
    }
    let trajectory = integrate(&initial, &system, &integrator, &path)?;

    write_diagnostics_csv(&dir.join("diagnostics.csv"), &trajectory.records)?;
    {
        let mut file = fs::File::create(dir.join("basis_manifest.csv"))?;
        write_basis_manifest(system.modes(), &mut file)?;
    }
    write_snapshots(config, &system, &trajectory, dir)?;

    let (outcome, code) = match trajectory.outcome {
        Outcome::Completed => ("completed".to_string(), EXIT_OK),
        Outcome::StoppedBlowup { step } => (format!("stopped: blowup (step {step})"), EXIT_OK),
        Outcome::Overflow { step } => (format!("overflow (step {step})"), EXIT_OVERFLOW),
    };
    println!(
        "simulate seed {seed}: {} steps, outcome {outcome}",
        trajectory.records.len() - 1
    );
    Ok((outcome, code))
}

/// Deterministic unit-energy low-mode initial state.
fn default_initial(system: &GalerkinSystem, seed: u64) -> SimState {
    let mut rng = SplitMix64::from_key(&[seed, 0x1a171a1]);
    let coeffs: Vec<f64> = system
        .modes()
        .iter()
        .map(|m| rng.next_normal() / m.eigenvalue)
        .collect();
    let norm = system.norm_sq_from_coeffs(&coeffs, 0).sqrt();
    SimState { t: 0.0, coeffs: coeffs.iter().map(|c| c / norm).collect() }
}

fn write_snapshots(
    config: &RunConfig,
    system: &GalerkinSystem,
    trajectory: &Trajectory,
    dir: &Path,
) -> anyhow::Result<()> {
    let last = trajectory.states.len() - 1;
    for (step, state) in trajectory.states.iter().enumerate() {
        if step % config.snapshot_stride != 0 && step != last {
            continue;
        }
        let field = system.state_to_field(&state.coeffs);
        let file = fs::File::create(dir.join(format!("snapshot_{step:06}.saltspec")))?;
        write_snapshot(&field, std::io::BufWriter::new(file))?;
    }
    Ok(())
}

fn write_diagnostics_csv(path: &Path, records: &[DiagnosticsRecord]) -> anyhow::Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "t,l2_sq,h1_sq,h2_sq,blowup_partial")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.t, r.l2_sq, r.h1_sq, r.h2_sq, r.blowup_partial
        )?;
    }
    Ok(())
}

/// Map library errors onto the documented exit codes: malformed inputs are
/// configuration errors, non-finite arithmetic is an overflow.
pub fn exit_code_for_error(err: &anyhow::Error) -> i32 {
    if let Some(salt) = err.downcast_ref::<SaltError>() {
        return match salt {
            SaltError::NonFinite { .. } => EXIT_OVERFLOW,
            _ => EXIT_CONFIG,
        };
    }
    EXIT_CONFIG
}
