//! Command-line driver.
//!
//! Exit codes: 0 success, 1 configuration/validation error, 2 simulation
//! abort (non-finite state or a control-law precondition failure).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use quadpend_cli::config::{ConfigError, ResolvedConfig, RunConfig};
use quadpend_cli::csv::write_trajectory;
use quadpend_cli::plots::render_plots;
use quadpend_cli::presets::{all_presets, preset};
use quadpend_cli::run::{run_checks, run_resolved};
use quadpend_cli::summary::{write_summaries, RunSummary};

#[derive(Parser)]
#[command(
    name = "quadpend",
    about = "Swing-up simulation of a spherical pendulum mounted on a quadrotor,\n\
             driven by a coordinate-free geometric backstepping controller."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one experiment or configuration and persist the results.
    Run(RunArgs),
    /// Print the five built-in experiment presets.
    List,
    /// Run the per-run invariant suite on a configuration without
    /// persisting anything.
    Check(SelectArgs),
}

#[derive(Args)]
struct SelectArgs {
    /// Built-in experiment preset (1-5).
    #[arg(long, conflicts_with = "config")]
    experiment: Option<u8>,
    /// Configuration file path (see README for the format).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the integration step [s].
    #[arg(long)]
    dt: Option<f64>,
    /// Override the horizon [s].
    #[arg(long)]
    t_end: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    select: SelectArgs,
    /// Run all five presets (concurrently); --out/--plots become
    /// directories and the summary aggregates every run.
    #[arg(long, conflicts_with_all = ["experiment", "config"])]
    all: bool,
    /// Trajectory CSV destination (a directory when --all).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for the SVG plots (per-run subdirectories when --all).
    #[arg(long)]
    plots: Option<PathBuf>,
    /// Run-summary JSON destination.
    #[arg(long)]
    summary: Option<PathBuf>,
}

enum CliError {
    /// Anything wrong with the request itself: exit 1.
    Usage(String),
    /// The simulation could not finish: exit 2.
    Abort(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(format!("configuration error: {e}"))
    }
}

fn load_selection(select: &SelectArgs) -> Result<(RunConfig, Option<u8>), CliError> {
    let mut cfg = match (&select.experiment, &select.config) {
        (Some(id), None) => RunConfig::from_preset(*id)
            .ok_or_else(|| CliError::Usage(format!("experiment must be 1-5, got {id}")))?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read {}: {e}", path.display()))
            })?;
            RunConfig::parse(&text)?
        }
        (None, None) => {
            return Err(CliError::Usage(
                "one of --experiment or --config is required".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    let label = select.experiment.or({
        // Config files carry their base preset; report it in summaries.
        Some(cfg.experiment)
    });
    if let Some(dt) = select.dt {
        cfg.dt = dt;
    }
    if let Some(t_end) = select.t_end {
        cfg.t_end = t_end;
    }
    Ok((cfg, label))
}

fn resolve(cfg: &RunConfig) -> Result<ResolvedConfig, CliError> {
    let resolved = cfg.resolve()?;
    if resolved.y_normalization > 1e-9 {
        eprintln!(
            "note: initial bob direction was off the sphere by {:.2e}; normalized",
            resolved.y_normalization
        );
    }
    Ok(resolved)
}

fn single_run(
    cfg: &RunConfig,
    label: Option<u8>,
    out: Option<&Path>,
    plots: Option<&Path>,
) -> Result<RunSummary, CliError> {
    let resolved = resolve(cfg)?;
    let outcome = run_resolved(&resolved, label)
        .map_err(|e| CliError::Abort(e.to_string()))?;
    if let Some(path) = out {
        write_trajectory(&outcome.log, path)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    if let Some(dir) = plots {
        render_plots(&outcome.log, dir)
            .map_err(|e| CliError::Usage(format!("cannot write plots to {}: {e}", dir.display())))?;
    }
    let s = &outcome.summary;
    println!(
        "run{}: e3.y(t_end) = {:+.6}, e3.z(t_end) = {:+.6}, V(0) = {:.4e}, V(t_end) = {:.4e}, wall = {:.3}s",
        label.map(|i| format!(" [experiment {i}]")).unwrap_or_default(),
        s.final_e3_dot_y, s.final_e3_dot_z, s.v_initial, s.v_final, s.wall_time_s
    );
    Ok(outcome.summary)
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let mut summaries = Vec::new();
    if args.all {
        // Each preset owns its state; run them on worker threads.
        let dt = args.select.dt;
        let t_end = args.select.t_end;
        let handles: Vec<_> = all_presets()
            .into_iter()
            .map(|p| {
                std::thread::spawn(move || {
                    let mut cfg = RunConfig::from_preset(p.id).expect("preset ids are valid");
                    if let Some(dt) = dt {
                        cfg.dt = dt;
                    }
                    if let Some(t_end) = t_end {
                        cfg.t_end = t_end;
                    }
                    let resolved = cfg.resolve().map_err(CliError::from)?;
                    run_resolved(&resolved, Some(p.id))
                        .map_err(|e| CliError::Abort(e.to_string()))
                })
            })
            .collect();
        let mut outcomes = Vec::new();
        for h in handles {
            outcomes.push(h.join().expect("worker thread does not panic")?);
        }
        for outcome in &outcomes {
            let id = outcome.summary.experiment.expect("preset runs are labelled");
            if let Some(dir) = &args.out {
                write_trajectory(&outcome.log, &dir.join(format!("experiment_{id}.csv")))
                    .map_err(|e| CliError::Usage(format!("cannot write trajectory: {e}")))?;
            }
            if let Some(dir) = &args.plots {
                render_plots(&outcome.log, &dir.join(format!("experiment_{id}")))
                    .map_err(|e| CliError::Usage(format!("cannot write plots: {e}")))?;
            }
            let s = &outcome.summary;
            println!(
                "run [experiment {id}]: e3.y(t_end) = {:+.6}, e3.z(t_end) = {:+.6}, V(0) = {:.4e}, V(t_end) = {:.4e}, wall = {:.3}s",
                s.final_e3_dot_y, s.final_e3_dot_z, s.v_initial, s.v_final, s.wall_time_s
            );
            summaries.push(outcome.summary.clone());
        }
    } else {
        let (cfg, label) = load_selection(&args.select)?;
        summaries.push(single_run(&cfg, label, args.out.as_deref(), args.plots.as_deref())?);
    }
    if let Some(path) = &args.summary {
        write_summaries(&summaries, path)
            .map_err(|e| CliError::Usage(format!("cannot write summary: {e}")))?;
    }
    Ok(())
}

fn cmd_list() {
    println!("Built-in experiments (shared R(0), omega(0), x(0), xdot(0); t in [0, 6.5] s):");
    println!("{:<4} {:<26} {:<22} K = (k_d, k1, k2)", "id", "y(0)", "ydot(0)");
    for p in all_presets() {
        println!(
            "{:<4} {:<26} {:<22} ({}, {}, {})",
            p.id,
            format!("({}, {}, {})", p.y0.x, p.y0.y, p.y0.z),
            format!("({}, {}, {})", p.ydot0.x, p.ydot0.y, p.ydot0.z),
            p.gains.k_d,
            p.gains.k1,
            p.gains.k2,
        );
    }
    let shared = preset(1).expect("preset 1 exists");
    println!("shared omega(0) = ({}, {}, {})", shared.omega0.x, shared.omega0.y, shared.omega0.z);
    println!("shared x(0) = ({}, {}, {}), xdot(0) = ({}, {}, {})",
        shared.x0.x, shared.x0.y, shared.x0.z, shared.xdot0.x, shared.xdot0.y, shared.xdot0.z);
}

fn cmd_check(select: &SelectArgs) -> Result<(), CliError> {
    let (cfg, _) = load_selection(select)?;
    let resolved = resolve(&cfg)?;
    let checks = run_checks(&resolved).map_err(|e| CliError::Abort(e.to_string()))?;
    let mut all_ok = true;
    for c in &checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        if c.detail.is_empty() {
            println!("[{verdict}] {}", c.name);
        } else {
            println!("[{verdict}] {} ({})", c.name, c.detail);
        }
        all_ok &= c.passed;
    }
    if all_ok {
        Ok(())
    } else {
        Err(CliError::Usage("invariant checks failed".into()))
    }
}

fn main() -> ExitCode {
    // Map argument mistakes to exit 1; clap's default would use 2, which
    // this tool reserves for simulation aborts.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::List => {
            cmd_list();
            Ok(())
        }
        Command::Check(select) => cmd_check(select),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Abort(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
