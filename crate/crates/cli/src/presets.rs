//! The five reference swing-up experiments.
//!
//! Every preset shares the quadrotor initial conditions and rig constants;
//! only the bob start, bob velocity and gain triple vary. Values are stored
//! exactly as tabulated (1/√2 expanded to 0.70710678); the bob direction is
//! normalized and its velocity tangent-projected when the preset is turned
//! into a simulator state, since the tabulated rows sit slightly off the
//! sphere.

use quadpend::dynamics::StateError;
use quadpend::geom::tangent_project;
use quadpend::{ControllerGains, Mat3, PhysicalParams, Rotation, SystemState, UnitVec3, Vec3};

/// One row of the experiment table plus the shared initial conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentPreset {
    pub id: u8,
    /// Bob direction at t = 0, exactly as tabulated (may be off-sphere by
    /// up to ~2.5e-7 in squared norm).
    pub y0: Vec3,
    /// Bob direction velocity at t = 0, exactly as tabulated.
    pub ydot0: Vec3,
    pub gains: ControllerGains,
    pub r0: Mat3,
    pub omega0: Vec3,
    pub x0: Vec3,
    pub xdot0: Vec3,
    pub params: PhysicalParams,
}

/// 1/√2 at the precision the experiment table prints (deliberately not
/// the full-precision constant: presets reproduce the table text).
#[allow(clippy::approx_constant)]
pub const FRAC_1_SQRT_2_TABLE: f64 = 0.70710678;

/// Shared initial attitude: rows built from 3-4-5 ratios, orthonormal with
/// determinant +1.
pub fn shared_attitude() -> Mat3 {
    Mat3::from_rows(
        Vec3::new(0.36, 0.48, -0.8),
        Vec3::new(-0.8, 0.6, 0.0),
        Vec3::new(0.48, 0.64, 0.60),
    )
}

/// Rig constants: quad 0.4 kg, bob 0.1 kg, 0.5 m arm, diagonal inertia.
/// The rotor geometry (d = 0.2 m, c = 0.01 m) only affects thrust
/// allocation and is configurable.
pub fn default_params() -> PhysicalParams {
    PhysicalParams::new(
        0.4,
        0.1,
        0.5,
        Mat3::diag(0.0820, 0.0845, 0.1377),
        9.81,
        0.2,
        0.01,
    )
    .expect("reference parameters are valid")
}

/// Returns the preset for experiment `id` (1–5), or `None` outside range.
pub fn preset(id: u8) -> Option<ExperimentPreset> {
    let s = FRAC_1_SQRT_2_TABLE;
    let (y0, ydot0, k) = match id {
        1 => (
            Vec3::new(s, 0.0, s),
            Vec3::new(0.5, 0.0, -0.5),
            (1.0, 8.0, 4.0),
        ),
        2 => (
            Vec3::new(s, 0.0, s),
            Vec3::new(0.7, 0.0, 0.7),
            (1.0, 9.0, 4.4),
        ),
        3 => (
            Vec3::new(0.1, 0.0995, -0.99),
            Vec3::new(2.2263, 0.25, 0.25),
            (1.0, 11.0, 5.0),
        ),
        4 => (
            Vec3::new(0.0, 0.0, -1.0),
            Vec3::new(0.0, 0.0, 0.0),
            (1.0, 12.0, 5.0),
        ),
        5 => (
            Vec3::new(-s, 0.0, s),
            Vec3::new(0.7, 0.0, 0.7),
            (1.0, 9.0, 4.0),
        ),
        _ => return None,
    };
    Some(ExperimentPreset {
        id,
        y0,
        ydot0,
        gains: ControllerGains::new(k.0, k.1, k.2).expect("tabulated gains are positive"),
        r0: shared_attitude(),
        omega0: Vec3::new(0.8, -0.3, 0.5),
        x0: Vec3::new(1.0, 1.0, 1.0),
        xdot0: Vec3::new(2.0, 1.5, 1.0),
        params: default_params(),
    })
}

/// All five presets in table order.
pub fn all_presets() -> [ExperimentPreset; 5] {
    [1, 2, 3, 4, 5].map(|id| preset(id).expect("ids 1-5 exist"))
}

impl ExperimentPreset {
    /// Builds the simulator state: normalizes `y0` onto the sphere and
    /// projects `ydot0` onto its tangent plane. Returns the state together
    /// with the normalization correction `|‖y0‖ - 1|` so callers can warn
    /// when a tabulated start needed repair.
    pub fn initial_state(&self) -> Result<(SystemState, f64), PresetError> {
        let y_correction = (self.y0.norm() - 1.0).abs();
        let y = UnitVec3::normalize(self.y0).map_err(|_| PresetError::DegenerateDirection)?;
        let ydot = tangent_project(&y, self.ydot0);
        let rotation = Rotation::new(self.r0).map_err(|_| PresetError::BadAttitude)?;
        let state = SystemState::new(self.x0, self.xdot0, rotation, self.omega0, y, ydot)
            .map_err(PresetError::State)?;
        Ok((state, y_correction))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PresetError {
    DegenerateDirection,
    BadAttitude,
    State(StateError),
}

impl core::fmt::Display for PresetError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PresetError::DegenerateDirection => write!(f, "initial bob direction is degenerate"),
            PresetError::BadAttitude => write!(f, "initial attitude is not a rotation"),
            PresetError::State(e) => write!(f, "invalid initial state: {e}"),
        }
    }
}

impl std::error::Error for PresetError {}
