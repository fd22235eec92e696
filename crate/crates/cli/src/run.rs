//! Shared run driver: simulate a resolved configuration, monitor it, and
//! evaluate the per-run invariant checks used by `quadpend check`.

use std::time::Instant;

use quadpend::integrator::{simulate, SimFailure};
use quadpend::lyapunov::{monitor, DecreaseReport};
use quadpend::TrajectoryLog;

use crate::config::ResolvedConfig;
use crate::summary::RunSummary;

/// A finished run with its monitoring attached.
pub struct RunOutcome {
    pub log: TrajectoryLog,
    pub report: DecreaseReport,
    pub summary: RunSummary,
}

/// Simulates `cfg` to completion and monitors the result.
#[allow(clippy::result_large_err)]
pub fn run_resolved(cfg: &ResolvedConfig, experiment: Option<u8>) -> Result<RunOutcome, SimFailure> {
    let start = Instant::now();
    let log = simulate(&cfg.state, &cfg.gains, &cfg.params, &cfg.integrator)?;
    let wall = start.elapsed().as_secs_f64();
    let report = monitor(&log);
    let summary = RunSummary::new(experiment, &log, &report, wall);
    Ok(RunOutcome { log, report, summary })
}

/// One named invariant check with its outcome.
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

/// The per-run invariant suite behind `quadpend check`: manifold drift
/// bounds, Lyapunov nonnegativity and end-of-run decrease, moment-extraction
/// consistency, log shape, and bitwise determinism.
#[allow(clippy::result_large_err)]
pub fn run_checks(cfg: &ResolvedConfig) -> Result<Vec<Check>, SimFailure> {
    let outcome = run_resolved(cfg, None)?;
    let log = &outcome.log;
    let report = &outcome.report;
    let mut checks = Vec::new();

    checks.push(check(
        "pendulum drift |‖y‖-1| < 1e-9 per step (pre-projection)",
        log.max_drift_y < 1e-9,
        format!("max {:.3e}", log.max_drift_y),
    ));
    checks.push(check(
        "attitude drift ‖RᵀR-I‖_F < 1e-8 per step (pre-projection)",
        log.max_drift_r < 1e-8,
        format!("max {:.3e}", log.max_drift_r),
    ));
    let expected_len = cfg.integrator.step_count() + 1;
    checks.push(check(
        "log length = floor(t_end/dt) + 1",
        log.entries.len() == expected_len,
        format!("{} entries, expected {}", log.entries.len(), expected_len),
    ));
    let v_nonneg = log.entries.iter().all(|e| e.v1 >= 0.0 && e.v2 >= 0.0);
    checks.push(check(
        "V1, V2 nonnegative along the run",
        v_nonneg,
        String::new(),
    ));
    let decreased = report.v_final < 1e-2 * report.v_initial || report.v_initial < 1e-9;
    checks.push(check(
        "V(t_end) < 1e-2 V(0)",
        decreased,
        format!("V(0) = {:.4e}, V(t_end) = {:.4e}", report.v_initial, report.v_final),
    ));
    let max_residual = log
        .entries
        .iter()
        .map(|e| e.diag.moment_residual.abs())
        .fold(0.0f64, f64::max);
    checks.push(check(
        "moment-extraction vertical residual < 1e-9",
        max_residual < 1e-9,
        format!("max {:.3e}", max_residual),
    ));
    let rerun = simulate(&cfg.state, &cfg.gains, &cfg.params, &cfg.integrator)
        .expect("first run succeeded, identical rerun must too");
    checks.push(check(
        "bitwise deterministic rerun",
        rerun == *log,
        String::new(),
    ));
    Ok(checks)
}
