//! Per-run summary records and their JSON serialization.

use std::io::{self, Write};
use std::path::Path;

use quadpend::lyapunov::DecreaseReport;
use quadpend::TrajectoryLog;

/// Headline numbers for one closed-loop run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    /// Preset id when the run came from a preset.
    pub experiment: Option<u8>,
    pub final_e3_dot_y: f64,
    pub final_e3_dot_z: f64,
    pub v_initial: f64,
    pub v_final: f64,
    /// Largest positive finite-difference dV/dt over the run.
    pub max_positive_dv: f64,
    /// Max pre-projection |‖y‖ - 1| over the run.
    pub max_drift_y: f64,
    /// Max pre-projection ‖RᵀR - I‖_F over the run.
    pub max_drift_r: f64,
    /// Max residual against the idealized decrease rate (reported only).
    pub max_analytic_residual: f64,
    /// Max transport-compatibility residual (reported only).
    pub max_compat_residual: f64,
    pub wall_time_s: f64,
}

impl RunSummary {
    pub fn new(
        experiment: Option<u8>,
        log: &TrajectoryLog,
        report: &DecreaseReport,
        wall_time_s: f64,
    ) -> Self {
        let fin = log.final_entry();
        RunSummary {
            experiment,
            final_e3_dot_y: fin.state.y.as_vec().z,
            final_e3_dot_z: fin.state.z().as_vec().z,
            v_initial: report.v_initial,
            v_final: report.v_final,
            max_positive_dv: report.max_positive_dv,
            max_drift_y: log.max_drift_y,
            max_drift_r: log.max_drift_r,
            max_analytic_residual: report.max_analytic_residual,
            max_compat_residual: report.max_compat_residual,
            wall_time_s,
        }
    }

    fn write_json_object(&self, w: &mut impl Write, indent: &str) -> io::Result<()> {
        let exp = match self.experiment {
            Some(id) => id.to_string(),
            None => "null".into(),
        };
        writeln!(w, "{indent}{{")?;
        writeln!(w, "{indent}  \"experiment\": {exp},")?;
        for (name, value) in [
            ("final_e3_dot_y", self.final_e3_dot_y),
            ("final_e3_dot_z", self.final_e3_dot_z),
            ("v_initial", self.v_initial),
            ("v_final", self.v_final),
            ("max_positive_dv", self.max_positive_dv),
            ("max_drift_y", self.max_drift_y),
            ("max_drift_r", self.max_drift_r),
            ("max_analytic_residual", self.max_analytic_residual),
            ("max_compat_residual", self.max_compat_residual),
        ] {
            writeln!(w, "{indent}  \"{name}\": {value:e},")?;
        }
        writeln!(w, "{indent}  \"wall_time_s\": {:e}", self.wall_time_s)?;
        write!(w, "{indent}}}")
    }
}

/// Writes all summaries as a JSON array.
pub fn write_summaries(summaries: &[RunSummary], path: &Path) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "[")?;
    for (i, s) in summaries.iter().enumerate() {
        s.write_json_object(&mut w, "  ")?;
        writeln!(w, "{}", if i + 1 < summaries.len() { "," } else { "" })?;
    }
    writeln!(w, "]")?;
    w.flush()
}
