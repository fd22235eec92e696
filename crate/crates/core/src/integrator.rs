//! Deterministic fixed-step integration of the closed loop.
//!
//! The attitude is advanced multiplicatively: each step integrates
//! exponential coordinates `u` with `R = R₀ exp(û)` and the stage rates
//! corrected through the truncated inverse differential of the exponential,
//! so the computed rotation never leaves SO(3) beyond roundoff. The flat
//! components (`x`, `ẋ`, `ω`, `y`, `ẏ`) take classical RK4 stages, with the
//! sphere constraint repaired by projection after every step.

use alloc::vec::Vec;

use crate::controller::{
    control_step, ControlError, ControllerDiagnostics, ControllerGains, ReferenceHistory,
};
use crate::dynamics::{attitude_rhs, translation_rhs, z_of, ControlInput, PhysicalParams, SystemState};
use crate::geom::{exp_so3, orthonormalize, GeomError, Mat3, Rotation, UnitVec3, Vec3};
use crate::lyapunov;
use crate::math;

/// Fixed-step integration settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    /// Step size [s]; must satisfy `0 < dt ≤ 0.01`.
    pub dt: f64,
    /// Simulation horizon [s].
    pub t_end: f64,
    /// Re-project the state onto S² × SO(3) after every step.
    pub projection: bool,
    /// Interval, in steps, between cumulative drift checkpoints.
    pub drift_report_every: u32,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Result<Self, ConfigError> {
        let cfg = IntegratorConfig {
            dt,
            t_end,
            projection: true,
            drift_report_every: 100,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.dt.is_finite() || self.dt <= 0.0 || self.dt > 0.01 {
            return Err(ConfigError::StepOutOfRange { dt: self.dt });
        }
        if !self.t_end.is_finite() || self.t_end <= 0.0 {
            return Err(ConfigError::HorizonNotPositive { t_end: self.t_end });
        }
        Ok(())
    }

    /// Number of integration steps; the log gains one more entry for t = 0.
    ///
    /// A small slack absorbs cases like `6.5 / 0.001`, which lands a hair
    /// below the integer it represents.
    pub fn step_count(&self) -> usize {
        math::floor(self.t_end / self.dt + 1e-9) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConfigError {
    StepOutOfRange { dt: f64 },
    HorizonNotPositive { t_end: f64 },
}

impl core::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ConfigError::StepOutOfRange { dt } => {
                write!(f, "dt must satisfy 0 < dt <= 0.01, got {dt}")
            }
            ConfigError::HorizonNotPositive { t_end } => {
                write!(f, "t_end must be positive, got {t_end}")
            }
        }
    }
}

impl core::error::Error for ConfigError {}

/// A state fresh out of an integration step, before any projection; its
/// manifold invariants hold only to integration accuracy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawState {
    pub x: Vec3,
    pub xdot: Vec3,
    pub r: Mat3,
    pub omega: Vec3,
    pub y: Vec3,
    pub ydot: Vec3,
}

impl RawState {
    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.xdot.is_finite()
            && self.r.is_finite()
            && self.omega.is_finite()
            && self.y.is_finite()
            && self.ydot.is_finite()
    }

    /// Manifold drift of this state: `(|‖y‖ - 1|, ‖RᵀR - I‖_F)`.
    pub fn drift(&self) -> (f64, f64) {
        ((self.y.norm() - 1.0).abs(), self.r.orthonormality_error())
    }
}

/// Magnitudes of the corrections applied by [`project_state`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ProjectionReport {
    /// `|‖y‖ - 1|` before renormalization.
    pub y_norm_error: f64,
    /// `|⟨y, ẏ⟩|` before tangent projection.
    pub ydot_tangency_error: f64,
    /// `‖RᵀR - I‖_F` before orthonormalization.
    pub r_orthonormality_error: f64,
}

/// Repairs manifold drift: renormalizes `y`, projects `ẏ` back onto the
/// tangent plane, and replaces `R` by its nearest rotation.
pub fn project_state(raw: &RawState) -> Result<(SystemState, ProjectionReport), GeomError> {
    let report = ProjectionReport {
        y_norm_error: (raw.y.norm() - 1.0).abs(),
        ydot_tangency_error: raw.y.dot(raw.ydot).abs() / raw.y.norm().max(f64::MIN_POSITIVE),
        r_orthonormality_error: raw.r.orthonormality_error(),
    };
    let y = UnitVec3::normalize(raw.y)?;
    let ydot = raw.ydot - y.as_vec() * y.as_vec().dot(raw.ydot);
    let rotation = orthonormalize(&raw.r)?;
    Ok((
        SystemState {
            x: raw.x,
            xdot: raw.xdot,
            rotation,
            omega: raw.omega,
            y,
            ydot,
        },
        report,
    ))
}

/// Rate of the exponential coordinates for the body-frame attitude ODE:
/// with `R = R₀ exp(û)` and `Ṙ = R ω̂`, the coordinates satisfy
/// `u̇ = ω + ½ u×ω + (1/12) u×(u×ω) + O(‖u‖⁴)`. Two commutator terms keep a
/// fourth-order step fourth-order; the `+½` sign belongs to the
/// right-multiplied update (the left-multiplied convention flips it, and
/// using that one here demotes the whole scheme to second order).
#[inline]
fn dexpinv(u: Vec3, v: Vec3) -> Vec3 {
    let c1 = u.cross(v);
    let c2 = u.cross(c1);
    v + c1 * 0.5 + c2 * (1.0 / 12.0)
}

#[derive(Clone, Copy)]
struct Stage {
    x: Vec3,
    xdot: Vec3,
    omega: Vec3,
    y: Vec3,
    ydot: Vec3,
    /// Exponential coordinates of the attitude relative to the step base.
    u: Vec3,
}

#[derive(Clone, Copy)]
struct StageRate {
    x: Vec3,
    xdot: Vec3,
    omega: Vec3,
    y: Vec3,
    ydot: Vec3,
    u: Vec3,
}

/// Evaluates the coupled right-hand side at a stage point. Stage `y` sits
/// slightly off the sphere; the pendulum equation is evaluated through the
/// same `(y yᵀ - I) z` form, which extends smoothly off the manifold.
fn stage_rate(
    base: &Rotation,
    stage: &Stage,
    input: &ControlInput,
    params: &PhysicalParams,
) -> StageRate {
    let rotation = base.compose(&exp_so3(stage.u));
    let z = z_of(&rotation);
    let zv = z.as_vec();
    let hat_sq_z = stage.y * stage.y.dot(zv) - zv;
    let yddot = stage.y * (-stage.ydot.norm_squared())
        + hat_sq_z * (input.f / (params.quad_mass * params.pendulum_length));
    StageRate {
        x: stage.xdot,
        xdot: translation_rhs(input.f, &z, yddot, params),
        omega: attitude_rhs(stage.omega, input.mu, params),
        y: stage.ydot,
        ydot: yddot,
        u: dexpinv(stage.u, stage.omega),
    }
}

fn advance(base: &Stage, rate: &StageRate, h: f64) -> Stage {
    Stage {
        x: base.x + rate.x * h,
        xdot: base.xdot + rate.xdot * h,
        omega: base.omega + rate.omega * h,
        y: base.y + rate.y * h,
        ydot: base.ydot + rate.ydot * h,
        u: base.u + rate.u * h,
    }
}

/// One classical RK4 step with the control input held constant, without
/// projection. The attitude update is `R ← R exp(dt · ω_eff)` with `ω_eff`
/// the RK4-weighted, `dexp⁻¹`-corrected body rate.
pub fn rk4_step_raw(
    state: &SystemState,
    input: &ControlInput,
    dt: f64,
    params: &PhysicalParams,
) -> RawState {
    let base = Stage {
        x: state.x,
        xdot: state.xdot,
        omega: state.omega,
        y: state.y.as_vec(),
        ydot: state.ydot,
        u: Vec3::ZERO,
    };
    let r0 = state.rotation;

    let k1 = stage_rate(&r0, &base, input, params);
    let s2 = advance(&base, &k1, 0.5 * dt);
    let k2 = stage_rate(&r0, &s2, input, params);
    let s3 = advance(&base, &k2, 0.5 * dt);
    let k3 = stage_rate(&r0, &s3, input, params);
    let s4 = advance(&base, &k3, dt);
    let k4 = stage_rate(&r0, &s4, input, params);

    let w = dt / 6.0;
    let omega_eff = (k1.u + (k2.u + k3.u) * 2.0 + k4.u) * (1.0 / 6.0);
    RawState {
        x: base.x + (k1.x + (k2.x + k3.x) * 2.0 + k4.x) * w,
        xdot: base.xdot + (k1.xdot + (k2.xdot + k3.xdot) * 2.0 + k4.xdot) * w,
        r: *r0.compose(&exp_so3(omega_eff * dt)).matrix(),
        omega: base.omega + (k1.omega + (k2.omega + k3.omega) * 2.0 + k4.omega) * w,
        y: base.y + (k1.y + (k2.y + k3.y) * 2.0 + k4.y) * w,
        ydot: base.ydot + (k1.ydot + (k2.ydot + k3.ydot) * 2.0 + k4.ydot) * w,
    }
}

/// Errors from a single integration step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepError {
    /// A state component left the representable range.
    NonFiniteState,
    Geometry(GeomError),
}

impl From<GeomError> for StepError {
    fn from(e: GeomError) -> Self {
        StepError::Geometry(e)
    }
}

impl core::fmt::Display for StepError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            StepError::NonFiniteState => write!(f, "state became non-finite"),
            StepError::Geometry(e) => write!(f, "projection failed: {e}"),
        }
    }
}

impl core::error::Error for StepError {}

/// [`rk4_step_raw`] followed by [`project_state`].
pub fn rk4_step(
    state: &SystemState,
    input: &ControlInput,
    dt: f64,
    params: &PhysicalParams,
) -> Result<SystemState, StepError> {
    let raw = rk4_step_raw(state, input, dt, params);
    if !raw.is_finite() {
        return Err(StepError::NonFiniteState);
    }
    let (projected, _) = project_state(&raw)?;
    Ok(projected)
}

/// One record per tick of the closed loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogEntry {
    pub t: f64,
    pub state: SystemState,
    /// Control intermediates for the input applied over `[t, t + dt)`.
    pub diag: ControllerDiagnostics,
    pub v1: f64,
    pub v2: f64,
    pub v: f64,
    /// Pre-projection `|‖y‖ - 1|` of the step that produced this state.
    pub drift_y: f64,
    /// Pre-projection `‖RᵀR - I‖_F` of the step that produced this state.
    pub drift_r: f64,
}

/// Cumulative projection corrections up to a checkpoint time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftCheckpoint {
    pub t: f64,
    pub cumulative_y_correction: f64,
    pub cumulative_r_correction: f64,
}

/// Complete closed-loop trajectory record. Two runs with identical inputs
/// produce bit-identical logs.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub t_end: f64,
    pub gains: ControllerGains,
    pub params: PhysicalParams,
    pub projection: bool,
    pub entries: Vec<LogEntry>,
    pub drift_checkpoints: Vec<DriftCheckpoint>,
    /// Max pre-projection `|‖y‖ - 1|` over the run.
    pub max_drift_y: f64,
    /// Max pre-projection `‖RᵀR - I‖_F` over the run.
    pub max_drift_r: f64,
}

impl TrajectoryLog {
    pub fn final_entry(&self) -> &LogEntry {
        self.entries.last().expect("log always holds the t = 0 entry")
    }
}

/// Why a simulation stopped early.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AbortCause {
    NonFiniteState,
    Control(ControlError),
    Projection(GeomError),
}

/// A failed run, carrying everything logged up to the failure.
#[derive(Clone, Debug)]
pub struct SimFailure {
    pub cause: AbortCause,
    pub t: f64,
    pub log: TrajectoryLog,
}

impl core::fmt::Display for SimFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match &self.cause {
            AbortCause::NonFiniteState => {
                write!(f, "simulation aborted at t = {}: state became non-finite", self.t)
            }
            AbortCause::Control(e) => {
                write!(f, "simulation aborted at t = {}: {e}", self.t)
            }
            AbortCause::Projection(e) => {
                write!(f, "simulation aborted at t = {}: {e}", self.t)
            }
        }
    }
}

impl core::error::Error for SimFailure {}

/// Runs the closed loop: one control evaluation and one RK4 step per tick,
/// logging state, control intermediates and Lyapunov values at every tick
/// (including both endpoints, so the log has `step_count() + 1` entries).
// An abort deliberately hands back everything logged so far, so the error
// variant carries the log.
#[allow(clippy::result_large_err)]
pub fn simulate(
    initial: &SystemState,
    gains: &ControllerGains,
    params: &PhysicalParams,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryLog, SimFailure> {
    let n_steps = cfg.step_count();
    let mut log = TrajectoryLog {
        dt: cfg.dt,
        t_end: cfg.t_end,
        gains: *gains,
        params: *params,
        projection: cfg.projection,
        entries: Vec::with_capacity(n_steps + 1),
        drift_checkpoints: Vec::new(),
        max_drift_y: 0.0,
        max_drift_r: 0.0,
    };
    let mut history = ReferenceHistory::new(cfg.dt);
    let mut state = *initial;
    let mut drift = (0.0, 0.0);
    let mut cum_y = 0.0;
    let mut cum_r = 0.0;

    for step in 0..=n_steps {
        let t = step as f64 * cfg.dt;
        let abort = |cause, log: TrajectoryLog| Err(SimFailure { cause, t, log });

        let (input, diag) = match control_step(&state, gains, params, &mut history) {
            Ok(out) => out,
            Err(e) => return abort(AbortCause::Control(e), log),
        };
        let v1 = lyapunov::v1(&state.y, state.ydot, diag.k_p);
        let v2 = lyapunov::v2(&state.z(), state.zdot(), &diag.z_d, diag.zd_dot, gains.k1);
        log.entries.push(LogEntry {
            t,
            state,
            diag,
            v1,
            v2,
            v: v1 + v2,
            drift_y: drift.0,
            drift_r: drift.1,
        });

        if step == n_steps {
            break;
        }
        let raw = rk4_step_raw(&state, &input, cfg.dt, params);
        if !raw.is_finite() {
            return abort(AbortCause::NonFiniteState, log);
        }
        drift = raw.drift();
        log.max_drift_y = log.max_drift_y.max(drift.0);
        log.max_drift_r = log.max_drift_r.max(drift.1);

        if cfg.projection {
            let (projected, report) = match project_state(&raw) {
                Ok(out) => out,
                Err(e) => return abort(AbortCause::Projection(e), log),
            };
            state = projected;
            cum_y += report.y_norm_error;
            cum_r += report.r_orthonormality_error;
        } else {
            state = SystemState {
                x: raw.x,
                xdot: raw.xdot,
                rotation: Rotation::new_unchecked(raw.r),
                omega: raw.omega,
                y: UnitVec3::new_unchecked(raw.y),
                ydot: raw.ydot,
            };
        }
        if cfg.drift_report_every > 0 && (step + 1) % cfg.drift_report_every as usize == 0 {
            log.drift_checkpoints.push(DriftCheckpoint {
                t: t + cfg.dt,
                cumulative_y_correction: cum_y,
                cumulative_r_correction: cum_r,
            });
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::tests::bench_params;

    fn hover_state() -> SystemState {
        SystemState::new(
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::ZERO,
            Rotation::identity(),
            Vec3::ZERO,
            UnitVec3::e3(),
            Vec3::ZERO,
        )
        .unwrap()
    }

    fn hover_input(params: &PhysicalParams) -> ControlInput {
        ControlInput {
            f: -params.total_mass() * params.gravity,
            mu: Vec3::ZERO,
        }
    }

    #[test]
    fn config_rejects_bad_settings() {
        assert!(IntegratorConfig::new(0.0, 1.0).is_err());
        assert!(IntegratorConfig::new(0.02, 1.0).is_err());
        assert!(IntegratorConfig::new(1e-3, -1.0).is_err());
    }

    #[test]
    fn step_count_absorbs_representation_error() {
        // 6.5 / 0.001 lands a hair below 6500 in binary.
        let cfg = IntegratorConfig::new(1e-3, 6.5).unwrap();
        assert_eq!(cfg.step_count(), 6500);
    }

    #[test]
    fn hover_is_a_fixed_point_of_the_step() {
        let p = bench_params();
        let state = hover_state();
        let input = hover_input(&p);
        let next = rk4_step(&state, &input, 1e-3, &p).unwrap();
        assert!((next.x - state.x).norm() < 1e-15);
        assert!((next.xdot - state.xdot).norm() < 1e-15);
        assert!((next.y.as_vec() - state.y.as_vec()).norm() < 1e-15);
        assert!((*next.rotation.matrix() - *state.rotation.matrix()).frobenius_norm() < 1e-15);
    }

    #[test]
    fn principal_axis_spin_is_preserved() {
        let p = bench_params();
        let mut state = SystemState::new(
            Vec3::ZERO,
            Vec3::ZERO,
            Rotation::identity(),
            Vec3::new(1.0, 0.0, 0.0),
            UnitVec3::e3(),
            Vec3::ZERO,
        )
        .unwrap();
        let input = ControlInput::ZERO;
        for _ in 0..1000 {
            state = rk4_step(&state, &input, 1e-3, &p).unwrap();
        }
        assert!((state.omega - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn projection_is_identity_on_valid_states() {
        let state = hover_state();
        let raw = RawState {
            x: state.x,
            xdot: state.xdot,
            r: *state.rotation.matrix(),
            omega: state.omega,
            y: state.y.as_vec(),
            ydot: state.ydot,
        };
        let (projected, report) = project_state(&raw).unwrap();
        assert_eq!(projected, state);
        assert!(report.y_norm_error < 1e-15);
        assert!(report.r_orthonormality_error < 1e-15);
    }

    #[test]
    fn projection_renormalizes_scaled_direction() {
        let raw = RawState {
            x: Vec3::ZERO,
            xdot: Vec3::ZERO,
            r: Mat3::IDENTITY,
            omega: Vec3::ZERO,
            y: Vec3::E3 * (1.0 + 1e-6),
            ydot: Vec3::ZERO,
        };
        let (projected, report) = project_state(&raw).unwrap();
        assert!((projected.y.as_vec() - Vec3::E3).norm() < 1e-15);
        assert!((report.y_norm_error - 1e-6).abs() < 1e-9);
    }

    #[test]
    fn projection_normalizes_preset_three_start() {
        // Experiment 3's tabulated start has ‖y‖² = 1.00000025.
        let y = Vec3::new(0.1, 0.0995, -0.99);
        let raw = RawState {
            x: Vec3::ZERO,
            xdot: Vec3::ZERO,
            r: Mat3::IDENTITY,
            omega: Vec3::ZERO,
            y,
            ydot: Vec3::ZERO,
        };
        let (projected, report) = project_state(&raw).unwrap();
        assert!((projected.y.as_vec().norm() - 1.0).abs() < 1e-15);
        assert!(report.y_norm_error > 1e-8);
        assert!((y.norm_squared() - 1.00000025).abs() < 1e-12);
    }

    fn quick_cfg() -> IntegratorConfig {
        IntegratorConfig {
            dt: 1e-3,
            t_end: 0.25,
            projection: true,
            drift_report_every: 50,
        }
    }

    #[test]
    fn log_length_matches_step_count() {
        let p = bench_params();
        let g = ControllerGains::new(1.0, 12.0, 5.0).unwrap();
        let cfg = quick_cfg();
        let log = simulate(&hover_state(), &g, &p, &cfg).unwrap();
        assert_eq!(log.entries.len(), cfg.step_count() + 1);
        assert_eq!(log.entries[0].t, 0.0);
        assert!((log.final_entry().t - cfg.t_end).abs() < 1e-12);
        assert_eq!(log.drift_checkpoints.len(), 5);
    }

    #[test]
    fn closed_loop_hover_stays_upright() {
        let p = bench_params();
        let g = ControllerGains::new(1.0, 12.0, 5.0).unwrap();
        let log = simulate(&hover_state(), &g, &p, &quick_cfg()).unwrap();
        for e in &log.entries {
            assert!((e.state.y.as_vec().z - 1.0).abs() < 1e-9);
            assert!((e.state.z().as_vec().z - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn simulation_is_bit_deterministic() {
        let p = bench_params();
        let g = ControllerGains::new(1.0, 12.0, 5.0).unwrap();
        let state = SystemState::new(
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(2.0, 1.5, 1.0),
            Rotation::new(Mat3::from_rows(
                Vec3::new(0.36, 0.48, -0.8),
                Vec3::new(-0.8, 0.6, 0.0),
                Vec3::new(0.48, 0.64, 0.60),
            ))
            .unwrap(),
            Vec3::new(0.8, -0.3, 0.5),
            UnitVec3::new(Vec3::new(0.0, 0.0, -1.0)).unwrap(),
            Vec3::ZERO,
        )
        .unwrap();
        let a = simulate(&state, &g, &p, &quick_cfg()).unwrap();
        let b = simulate(&state, &g, &p, &quick_cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_states_abort_with_partial_log() {
        // An absurd thrust blows the state up within the horizon.
        let p = bench_params();
        let state = SystemState::new(
            Vec3::ZERO,
            Vec3::ZERO,
            Rotation::identity(),
            Vec3::new(1e154, 1e154, 0.0),
            UnitVec3::e3(),
            Vec3::ZERO,
        )
        .unwrap();
        let input = ControlInput::ZERO;
        let raw = rk4_step_raw(&state, &input, 1e-2, &p);
        assert!(!raw.is_finite());
        assert!(matches!(
            rk4_step(&state, &input, 1e-2, &p),
            Err(StepError::NonFiniteState)
        ));
    }
}
