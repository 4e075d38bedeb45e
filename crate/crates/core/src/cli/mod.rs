//! Command-line front end: config loading, run orchestration and output
//! files.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 blowup,
//! 3 verification or experiment failure.

mod config;

pub use config::{sha256_hex, ConfigError, ExperimentParams, RawConfig, RunConfig};

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::diagnostics::{drift_report, run_tracked, DriftReport};
use crate::evolution::EvolutionError;
use crate::experiments::{
    convergence_study, segment_identity_check, ucp_leakage, vanish_slice_check, vanishing_cutoff, ConvergenceTable,
    ExperimentError, ExperimentReport, InitialData,
};
use crate::fields::Field;
use crate::par::Execution;
use crate::symbolic::{self, VerificationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_BLOWUP: i32 = 2;
pub const EXIT_FAILED: i32 = 3;

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_ENV: &str = "BBM_LAB_OUT";

pub const EXPERIMENTS: [&str; 4] = ["ucp-leakage", "segment-identity", "vanish-slice", "convergence"];

#[derive(Debug, Parser)]
#[command(name = "bbm-lab", version, about = "Generalized BBM equation workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the flow and write diagnostics, snapshots and a summary.
    Simulate { config: PathBuf },
    /// Check the conservation-law multipliers exactly.
    VerifyCurrents {
        /// Check this multiplier instead of the built-in set.
        #[arg(long = "q", value_name = "EXPR", allow_hyphen_values = true)]
        q: Option<String>,
    },
    /// Run one experiment: ucp-leakage, segment-identity, vanish-slice or
    /// convergence.
    Experiment { name: String, config: PathBuf },
    /// Step-size and grid convergence study.
    Convergence { config: PathBuf },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Blowup(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(format!("i/o error: {e}"))
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Evolution(EvolutionError::Blowup(b)) => Failure::Blowup(format!(
                "blowup at t = {} (step {}, sup norm {:e})",
                b.lifespan, b.step, b.sup_norm
            )),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<EvolutionError> for Failure {
    fn from(e: EvolutionError) -> Self {
        ExperimentError::from(e).into()
    }
}

/// Runs `cli`, writing progress to `out` and errors to `err`. Returns the
/// process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Simulate { config } => cmd_simulate(config, out),
        Command::VerifyCurrents { q } => cmd_verify_currents(q.as_deref(), out),
        Command::Experiment { name, config } => cmd_experiment(name, config, out),
        Command::Convergence { config } => cmd_experiment("convergence", config, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Config(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Blowup(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_BLOWUP
        }
    }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = match std::env::var_os(OUTPUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cfg.output_dir.clone(),
    };
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    seed: u64,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(path: &Path, cfg: &RunConfig, body: T) -> Result<(), Failure> {
    let stamped = Stamped {
        config_hash: &cfg.hash,
        seed: cfg.seed,
        body,
    };
    let mut text = serde_json::to_string_pretty(&stamped).map_err(|e| Failure::Config(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_snapshot(path: &Path, cfg: &RunConfig, u: &Field) -> Result<(), Failure> {
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "# {}", cfg.header())?;
    writeln!(w, "x,u")?;
    for (j, v) in u.values().iter().enumerate() {
        writeln!(w, "{:.16e},{:.16e}", u.domain().x(j), v)?;
    }
    w.flush()?;
    Ok(())
}

fn write_table(path: &Path, cfg: &RunConfig, header: &str, rows: &[Vec<Option<f64>>]) -> Result<(), Failure> {
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "# {}", cfg.header())?;
    writeln!(w, "{header}")?;
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|c| c.map(|v| format!("{v:.16e}")).unwrap_or_default())
            .collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SimulateSummary {
    final_t: f64,
    steps: u64,
    blowup: bool,
    lifespan: Option<f64>,
    records: usize,
    max_tail_fraction: f64,
    drifts: DriftReport,
}

fn cmd_simulate(path: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = load(path)?;
    let u0 = cfg.initial_field()?;
    let run = run_tracked(u0.clone(), &cfg.sim)?;
    let dir = output_dir(&cfg)?;
    let drifts = drift_report(&run.series, cfg.drift_tolerance);

    write_snapshot(&dir.join("initial.csv"), &cfg, &u0)?;
    write_snapshot(&dir.join("final.csv"), &cfg, &run.final_state.u)?;
    let mut w = io::BufWriter::new(fs::File::create(dir.join("diagnostics.csv"))?);
    run.series.write_csv(&mut w, Some(&cfg.header()))?;
    w.flush()?;
    let summary = SimulateSummary {
        final_t: run.final_state.t,
        steps: run.final_state.step_count,
        blowup: run.blowup.is_some(),
        lifespan: run.blowup.as_ref().map(|b| b.lifespan),
        records: run.series.len(),
        max_tail_fraction: run.max_tail_fraction,
        drifts,
    };
    write_json(&dir.join("summary.json"), &cfg, &summary)?;

    writeln!(
        out,
        "simulate: t = {}, energy drift {:.3e}, mass drift {:.3e}, output in {}",
        summary.final_t,
        summary.drifts.energy,
        summary.drifts.mass,
        dir.display()
    )?;
    if let Some(b) = &run.blowup {
        writeln!(out, "blowup at t = {} (sup norm {:e})", b.lifespan, b.sup_norm)?;
        return Ok(EXIT_BLOWUP);
    }
    Ok(EXIT_OK)
}

fn cmd_verify_currents(q: Option<&str>, out: &mut dyn Write) -> Result<i32, Failure> {
    let print = |out: &mut dyn Write, reports: &[VerificationReport]| -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(reports).map_err(|e| Failure::Config(e.to_string()))?;
        writeln!(out, "{text}")?;
        Ok(())
    };
    if let Some(expr) = q {
        let report = symbolic::verify_query(expr).map_err(|e| Failure::Config(e.to_string()))?;
        let ok = report.result == "exact-zero";
        print(out, &[report])?;
        return Ok(if ok { EXIT_OK } else { EXIT_FAILED });
    }
    let mut reports = Vec::new();
    for expr in ["1", "u", "f(u) - u_tx"] {
        reports.push(symbolic::verify_query(expr).expect("built-in multiplier"));
    }
    let certified = reports.iter().all(|r| r.result == "exact-zero");
    reports.push(symbolic::verify_query("f(u) + u_tx").expect("built-in multiplier"));
    let currents = symbolic::current_reports();
    let identities = currents.iter().take(3).all(|r| r.result == "exact-zero");
    reports.extend(currents);
    print(out, &reports)?;
    Ok(if certified && identities { EXIT_OK } else { EXIT_FAILED })
}

fn finish(out: &mut dyn Write, dir: &Path, report: &ExperimentReport) -> Result<i32, Failure> {
    writeln!(
        out,
        "{}: {} (report in {})",
        report.experiment,
        if report.pass { "pass" } else { "FAIL" },
        dir.join(format!("{}.json", report.experiment)).display()
    )?;
    Ok(if report.pass { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_experiment(name: &str, path: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    if !EXPERIMENTS.contains(&name) {
        return Err(Failure::Config(format!(
            "unknown experiment `{name}` (expected one of {})",
            EXPERIMENTS.join(", ")
        )));
    }
    let cfg = load(path)?;
    let report = match name {
        "ucp-leakage" => {
            let InitialData::Bump(bump) = cfg.initial else {
                return Err(cfg.error("initial.kind", "ucp-leakage needs kind = bump").into());
            };
            let series = ucp_leakage(&bump, &cfg.sim)?;
            let dir = output_dir(&cfg)?;
            let rows: Vec<Vec<Option<f64>>> = series
                .times
                .iter()
                .zip(&series.tails)
                .map(|(t, v)| vec![Some(*t), Some(*v)])
                .collect();
            write_table(&dir.join("leakage.csv"), &cfg, "t,tail", &rows)?;
            series.report(&bump)
        }
        "segment-identity" => {
            let window = cfg
                .experiment
                .window
                .ok_or_else(|| cfg.error("experiment.a", "segment-identity needs a window (a, b)"))?;
            let ramp = cfg.experiment.ramp.unwrap_or(cfg.domain.length() / 10.0);
            let cut = vanishing_cutoff(cfg.domain, window.a, window.b, ramp);
            let u = cut
                .zip_with(&cfg.initial_field()?, |c, v| c * v)
                .map_err(|e| Failure::Config(e.to_string()))?;
            segment_identity_check(&u, &window, &cfg.nonlinearity, &cfg.sim.spec)?.report(&window, &cfg.nonlinearity)
        }
        "vanish-slice" => vanish_slice_check(cfg.initial_field()?, &cfg.sim, cfg.experiment.epsilon)?.report(),
        _ => {
            let dt = cfg.sim.dt;
            let n = cfg.domain.n_points();
            let dt_list = cfg.experiment.dt_list.clone().unwrap_or_else(|| vec![dt, dt / 2.0, dt / 4.0]);
            let n_list = cfg.experiment.n_list.clone().unwrap_or_else(|| vec![n, 2 * n]);
            let table = convergence_study(&cfg.initial, &cfg.sim, &dt_list, &n_list, Execution::default())?;
            write_convergence_csv(&cfg, &table)?;
            table.report(&cfg.initial)
        }
    };
    let dir = output_dir(&cfg)?;
    write_json(&dir.join(format!("{}.json", report.experiment)), &cfg, &report)?;
    finish(out, &dir, &report)
}

fn write_convergence_csv(cfg: &RunConfig, table: &ConvergenceTable) -> Result<(), Failure> {
    let dir = output_dir(cfg)?;
    let rows: Vec<Vec<Option<f64>>> = table
        .temporal
        .iter()
        .map(|r| {
            vec![
                Some(r.dt),
                Some(r.energy_drift),
                Some(r.mass_drift),
                r.richardson_diff,
                r.order,
                r.drift_ratio,
            ]
        })
        .collect();
    write_table(
        &dir.join("convergence_dt.csv"),
        cfg,
        "dt,energy_drift,mass_drift,richardson_diff,order,drift_ratio",
        &rows,
    )?;
    let rows: Vec<Vec<Option<f64>>> = table
        .spatial
        .iter()
        .map(|r| vec![Some(r.n_points as f64), Some(r.energy_drift), r.drift_change, r.diff_to_next])
        .collect();
    write_table(
        &dir.join("convergence_n.csv"),
        cfg,
        "n_points,energy_drift,drift_change,diff_to_next",
        &rows,
    )
}
