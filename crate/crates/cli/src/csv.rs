//! Trajectory persistence: one CSV row per tick, 38 columns, every float
//! printed with 17 significant digits so the binary value round-trips
//! exactly and the byte output is deterministic.

use std::io::{self, BufWriter, Write};
use std::path::Path;

use quadpend::TrajectoryLog;

pub const CSV_HEADER: &str = "t,x_0,x_1,x_2,xdot_0,xdot_1,xdot_2,\
r_00,r_01,r_02,r_10,r_11,r_12,r_20,r_21,r_22,\
omega_0,omega_1,omega_2,y_0,y_1,y_2,ydot_0,ydot_1,ydot_2,\
f,mu_0,mu_1,mu_2,rotor_1,rotor_2,rotor_3,rotor_4,\
v1,v2,v,e3_dot_y,e3_dot_z";

/// Number of columns in the trajectory schema.
pub const CSV_COLUMNS: usize = 38;

fn push_fields(row: &mut Vec<f64>, log_entry: &quadpend::LogEntry) {
    let e = log_entry;
    let s = &e.state;
    row.push(e.t);
    for v in [s.x, s.xdot] {
        row.extend([v.x, v.y, v.z]);
    }
    for r in &s.rotation.matrix().m {
        row.extend(r.iter().copied());
    }
    for v in [s.omega, s.y.as_vec(), s.ydot] {
        row.extend([v.x, v.y, v.z]);
    }
    row.push(e.diag.f);
    row.extend([e.diag.mu.x, e.diag.mu.y, e.diag.mu.z]);
    row.extend(e.diag.rotor_thrusts);
    row.extend([e.v1, e.v2, e.v]);
    row.push(s.y.as_vec().z);
    row.push(s.z().as_vec().z);
}

/// Writes the full trajectory to `path`, creating parent directories.
pub fn write_trajectory(log: &TrajectoryLog, path: &Path) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_trajectory_to(log, &mut w)?;
    w.flush()
}

pub fn write_trajectory_to(log: &TrajectoryLog, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let mut row = Vec::with_capacity(CSV_COLUMNS);
    for entry in &log.entries {
        row.clear();
        push_fields(&mut row, entry);
        debug_assert_eq!(row.len(), CSV_COLUMNS);
        let mut first = true;
        for value in &row {
            if !first {
                w.write_all(b",")?;
            }
            first = false;
            // 17 significant digits: exact round trip for f64.
            write!(w, "{value:.16e}")?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}
