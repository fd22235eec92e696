//! Equations of motion of the coupled quadrotor–pendulum system.
//!
//! Sign conventions follow the source model exactly: gravity enters the
//! translation equation as `+(M+m) g e3` and the thrust scalar `f` is
//! negative at hover (the physical thrust vector is `-f R e3`). No
//! normalization is applied anywhere.

use crate::geom::{hat, Mat3, Rotation, UnitVec3, Vec3};

/// Physical constants of the rig.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    /// Quadrotor mass `M` [kg].
    pub quad_mass: f64,
    /// Pendulum bob mass `m` [kg].
    pub pendulum_mass: f64,
    /// Pivot-to-bob length `l` [m].
    pub pendulum_length: f64,
    /// Quadrotor inertia in the body frame [kg·m²].
    pub inertia: Mat3,
    /// Gravity magnitude `g` [m/s²].
    pub gravity: f64,
    /// Pivot-to-rotor arm `d` [m]; only rotor allocation uses it.
    pub arm_length: f64,
    /// Rotor torque/thrust coefficient `c` [m]; only rotor allocation uses it.
    pub torque_coeff: f64,
}

/// Validation failure for [`PhysicalParams`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamError {
    NonPositive { name: &'static str, value: f64 },
    InertiaNotSymmetric { asymmetry: f64 },
    InertiaNotPositiveDefinite,
}

impl core::fmt::Display for ParamError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ParamError::NonPositive { name, value } => {
                write!(f, "{name} must be positive, got {value}")
            }
            ParamError::InertiaNotSymmetric { asymmetry } => {
                write!(f, "inertia must be symmetric (asymmetry {asymmetry:e})")
            }
            ParamError::InertiaNotPositiveDefinite => {
                write!(f, "inertia must be positive definite")
            }
        }
    }
}

impl core::error::Error for ParamError {}

impl PhysicalParams {
    pub fn new(
        quad_mass: f64,
        pendulum_mass: f64,
        pendulum_length: f64,
        inertia: Mat3,
        gravity: f64,
        arm_length: f64,
        torque_coeff: f64,
    ) -> Result<Self, ParamError> {
        let p = PhysicalParams {
            quad_mass,
            pendulum_mass,
            pendulum_length,
            inertia,
            gravity,
            arm_length,
            torque_coeff,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, value) in [
            ("quad_mass", self.quad_mass),
            ("pendulum_mass", self.pendulum_mass),
            ("pendulum_length", self.pendulum_length),
            ("gravity", self.gravity),
            ("arm_length", self.arm_length),
            ("torque_coeff", self.torque_coeff),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(ParamError::NonPositive { name, value });
            }
        }
        let asym = (self.inertia - self.inertia.transpose()).frobenius_norm();
        if asym > 1e-12 {
            return Err(ParamError::InertiaNotSymmetric { asymmetry: asym });
        }
        // Sylvester's criterion on the leading principal minors.
        let m = &self.inertia.m;
        let m1 = m[0][0];
        let m2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let m3 = self.inertia.det();
        if !(m1 > 0.0 && m2 > 0.0 && m3 > 0.0) {
            return Err(ParamError::InertiaNotPositiveDefinite);
        }
        Ok(())
    }

    /// `M + m`.
    #[inline]
    pub fn total_mass(&self) -> f64 {
        self.quad_mass + self.pendulum_mass
    }

    /// Inverse inertia; the constructor guarantees invertibility.
    #[inline]
    pub fn inertia_inv(&self) -> Mat3 {
        self.inertia.inverse().expect("inertia is positive definite")
    }
}

/// Full configuration and velocity of the coupled system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemState {
    /// Pivot position in the spatial frame [m].
    pub x: Vec3,
    /// Pivot velocity [m/s].
    pub xdot: Vec3,
    /// Body-to-spatial attitude of the quadrotor.
    pub rotation: Rotation,
    /// Body angular velocity [rad/s].
    pub omega: Vec3,
    /// Pendulum direction (pivot to bob) in the spatial frame.
    pub y: UnitVec3,
    /// Pendulum direction velocity, tangent to the sphere at `y` [1/s].
    pub ydot: Vec3,
}

/// Max allowed `|⟨y, ydot⟩|` in a valid state.
pub const STATE_TANGENCY_TOL: f64 = 1e-9;

impl SystemState {
    /// Builds a state, checking the pendulum velocity is tangent at `y`.
    pub fn new(
        x: Vec3,
        xdot: Vec3,
        rotation: Rotation,
        omega: Vec3,
        y: UnitVec3,
        ydot: Vec3,
    ) -> Result<Self, StateError> {
        let ip = y.as_vec().dot(ydot);
        if ip.abs() > STATE_TANGENCY_TOL {
            return Err(StateError::PendulumVelocityNotTangent { inner_product: ip });
        }
        let s = SystemState {
            x,
            xdot,
            rotation,
            omega,
            y,
            ydot,
        };
        if !s.is_finite() {
            return Err(StateError::NonFinite);
        }
        Ok(s)
    }

    /// Thrust axis `z = R e3` (third column of the attitude matrix).
    #[inline]
    pub fn z(&self) -> UnitVec3 {
        z_of(&self.rotation)
    }

    /// Velocity of the thrust axis, `ż = R (ω × e3)`.
    #[inline]
    pub fn zdot(&self) -> Vec3 {
        self.rotation.apply(self.omega.cross(Vec3::E3))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.xdot.is_finite()
            && self.rotation.matrix().is_finite()
            && self.omega.is_finite()
            && self.y.as_vec().is_finite()
            && self.ydot.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StateError {
    PendulumVelocityNotTangent { inner_product: f64 },
    NonFinite,
}

impl core::fmt::Display for StateError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            StateError::PendulumVelocityNotTangent { inner_product } => write!(
                f,
                "pendulum velocity is not tangent to the sphere (⟨y,ẏ⟩ = {inner_product:e})"
            ),
            StateError::NonFinite => write!(f, "state contains non-finite components"),
        }
    }
}

impl core::error::Error for StateError {}

/// Control input: total thrust scalar and body moment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlInput {
    /// Total thrust scalar `f` [N]; negative at hover under the model's
    /// sign convention.
    pub f: f64,
    /// Body moment `μ` [N·m].
    pub mu: Vec3,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput {
        f: 0.0,
        mu: Vec3::ZERO,
    };

    pub fn is_finite(&self) -> bool {
        self.f.is_finite() && self.mu.is_finite()
    }
}

/// Time derivative of [`SystemState`]. The attitude rate is carried as the
/// body angular velocity; `Ṙ = R ω̂` is recovered from the state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateDerivative {
    pub xdot: Vec3,
    pub xddot: Vec3,
    pub omega_dot: Vec3,
    pub ydot: Vec3,
    pub yddot: Vec3,
}

/// Thrust axis `z = R e3`.
pub fn z_of(rotation: &Rotation) -> UnitVec3 {
    let col = rotation.matrix().col(2);
    // Columns of a rotation matrix are unit vectors by the SO(3) invariant;
    // renormalize anyway so the result always satisfies the S² invariant.
    // Non-finite values flow through untouched so a diverging integration
    // step reaches the integrator's finiteness check instead of panicking.
    match UnitVec3::normalize(col) {
        Ok(u) => u,
        Err(_) => UnitVec3::new_unchecked(col),
    }
}

/// Attitude dynamics: `ω̇ = I⁻¹ (Iω × ω) - I⁻¹ μ`.
pub fn attitude_rhs(omega: Vec3, mu: Vec3, params: &PhysicalParams) -> Vec3 {
    let i_omega = params.inertia * omega;
    params.inertia_inv() * (i_omega.cross(omega) - mu)
}

/// Pendulum dynamics: `ÿ = -‖ẏ‖² y + (f / (M l)) (ŷ)² z`, with
/// `(ŷ)² z = (y yᵀ - I) z`.
pub fn pendulum_rhs(
    y: &UnitVec3,
    ydot: Vec3,
    f: f64,
    z: &UnitVec3,
    params: &PhysicalParams,
) -> Vec3 {
    let yv = y.as_vec();
    let zv = z.as_vec();
    let hat_sq_z = yv * yv.dot(zv) - zv;
    yv * (-ydot.norm_squared())
        + hat_sq_z * (f / (params.quad_mass * params.pendulum_length))
}

/// Pivot translation: `ẍ = g e3 + (f z - m l ÿ) / (m + M)`, solved from
/// `-(m+M) ẍ - m l ÿ + (M+m) g e3 = -f z`.
pub fn translation_rhs(f: f64, z: &UnitVec3, yddot: Vec3, params: &PhysicalParams) -> Vec3 {
    let ml = params.pendulum_mass * params.pendulum_length;
    Vec3::E3 * params.gravity + (z.as_vec() * f - yddot * ml) * (1.0 / params.total_mass())
}

/// Assembles the full coupled right-hand side for a given control input.
pub fn coupled_rhs(
    state: &SystemState,
    input: &ControlInput,
    params: &PhysicalParams,
) -> StateDerivative {
    let z = state.z();
    let yddot = pendulum_rhs(&state.y, state.ydot, input.f, &z, params);
    StateDerivative {
        xdot: state.xdot,
        xddot: translation_rhs(input.f, &z, yddot, params),
        omega_dot: attitude_rhs(state.omega, input.mu, params),
        ydot: state.ydot,
        yddot,
    }
}

/// `Ṙ = R ω̂`, exposed for tests; the integrator advances the attitude
/// multiplicatively instead of integrating matrix entries.
pub fn rotation_rate(state: &SystemState) -> Mat3 {
    *state.rotation.matrix() * hat(state.omega)
}
