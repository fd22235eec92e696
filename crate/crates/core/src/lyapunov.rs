//! Lyapunov function evaluation and numerical decrease monitoring.
//!
//! The closed-loop analysis predicts `dV/dt = -k_d ‖ẏ‖² - k2 ‖v_e‖²` under
//! idealizations that do not hold exactly along transients (the pendulum
//! gain varies with ‖ẏ‖, and the cross-term cancellation is approximate),
//! so decrease is monitored numerically rather than assumed.

use alloc::vec::Vec;

use crate::geom::{UnitVec3, Vec3};
use crate::integrator::TrajectoryLog;

/// Pendulum energy `V1 = k_p (1 - yᵀe3) + ½ ‖ẏ‖²`; zero exactly at the
/// upright equilibrium.
pub fn v1(y: &UnitVec3, ydot: Vec3, k_p: f64) -> f64 {
    k_p * (1.0 - y.as_vec().z) + 0.5 * ydot.norm_squared()
}

/// Thrust-axis tracking energy `V2 = k1 (1 - zᵀz_d) + ½ ‖v_e‖²` with
/// `v_e = ż - (z_d × ż_d) × z`; zero exactly on the reference.
pub fn v2(z: &UnitVec3, zdot: Vec3, z_d: &UnitVec3, zd_dot: Vec3, k1: f64) -> f64 {
    let zv = z.as_vec();
    let zdv = z_d.as_vec();
    let v_e = zdot - zdv.cross(zd_dot).cross(zv);
    k1 * (1.0 - zv.dot(zdv)) + 0.5 * v_e.norm_squared()
}

/// One monitored tick: the Lyapunov values and the finite-difference
/// derivative of their sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovSample {
    pub t: f64,
    pub v1: f64,
    pub v2: f64,
    pub v: f64,
    /// Finite-difference `dV/dt`: central stencil inside the run,
    /// one-sided at the endpoints.
    pub dv_fd: f64,
}

/// Decrease diagnostics over a full run.
#[derive(Clone, Debug, PartialEq)]
pub struct DecreaseReport {
    pub samples: Vec<LyapunovSample>,
    pub v_initial: f64,
    pub v_final: f64,
    /// Largest positive `dv_fd`; zero when the series never increases.
    pub max_positive_dv: f64,
    /// Time at which the largest positive `dv_fd` occurred.
    pub t_max_positive_dv: f64,
    /// Max `|dv_fd - (-k_d ‖ẏ‖² - k2 ‖v_e‖²)|` against the idealized
    /// decrease rate. Reported, not asserted: the idealizations fail along
    /// transients.
    pub max_analytic_residual: f64,
    /// Max residual of the transport-compatibility identity
    /// `d/dt [k1 (1 - zᵀz_d)] ≈ ⟨k1 (ẑ)² z_d, v_e⟩`.
    pub max_compat_residual: f64,
}

/// Finite-difference decrease monitoring over a logged run.
pub fn monitor(log: &TrajectoryLog) -> DecreaseReport {
    let n = log.entries.len();
    let dt = log.dt;
    let v_at = |i: usize| log.entries[i].v;

    let mut samples = Vec::with_capacity(n);
    let mut max_positive_dv = 0.0_f64;
    let mut t_max_positive_dv = 0.0_f64;
    let mut max_analytic_residual = 0.0_f64;
    let mut max_compat_residual = 0.0_f64;

    // Potential series for the transport-compatibility check.
    let potential = |i: usize| {
        let e = &log.entries[i];
        log.gains.k1 * (1.0 - e.state.z().as_vec().dot(e.diag.z_d.as_vec()))
    };

    for i in 0..n {
        let e = &log.entries[i];
        let dv_fd = if n == 1 {
            0.0
        } else if i == 0 {
            (v_at(1) - v_at(0)) / dt
        } else if i == n - 1 {
            (v_at(n - 1) - v_at(n - 2)) / dt
        } else {
            (v_at(i + 1) - v_at(i - 1)) / (2.0 * dt)
        };
        if dv_fd > max_positive_dv {
            max_positive_dv = dv_fd;
            t_max_positive_dv = e.t;
        }

        let analytic =
            -log.gains.k_d * e.state.ydot.norm_squared() - log.gains.k2 * e.diag.v_e.norm_squared();
        max_analytic_residual = max_analytic_residual.max((dv_fd - analytic).abs());

        if n > 1 && i > 0 && i < n - 1 {
            let dpot_fd = (potential(i + 1) - potential(i - 1)) / (2.0 * dt);
            let zv = e.state.z().as_vec();
            let hat_sq_zd = zv * zv.dot(e.diag.z_d.as_vec()) - e.diag.z_d.as_vec();
            let analytic_pot = log.gains.k1 * hat_sq_zd.dot(e.diag.v_e);
            max_compat_residual = max_compat_residual.max((dpot_fd - analytic_pot).abs());
        }

        samples.push(LyapunovSample {
            t: e.t,
            v1: e.v1,
            v2: e.v2,
            v: e.v,
            dv_fd,
        });
    }

    DecreaseReport {
        v_initial: v_at(0),
        v_final: v_at(n - 1),
        samples,
        max_positive_dv,
        t_max_positive_dv,
        max_analytic_residual,
        max_compat_residual,
    }
}
