use super::{hat, GeomError, Mat3, Vec3};
use crate::math;

/// Tolerance on `|‖v‖ - 1|` for a unit vector.
pub const UNIT_TOL: f64 = 1e-9;
/// Tolerance on `‖RᵀR - I‖_F` for a rotation matrix.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// A vector on the unit sphere S².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    /// Wraps `v`, requiring `|‖v‖ - 1| ≤ 1e-9`.
    pub fn new(v: Vec3) -> Result<Self, GeomError> {
        let n = v.norm();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(GeomError::NotUnit { norm: n });
        }
        Ok(UnitVec3(v))
    }

    /// Scales `v` onto the sphere. Fails on (near-)zero or non-finite input.
    pub fn normalize(v: Vec3) -> Result<Self, GeomError> {
        let n = v.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(GeomError::NotUnit { norm: n });
        }
        Ok(UnitVec3(v / n))
    }

    pub fn e3() -> Self {
        UnitVec3(Vec3::E3)
    }

    /// Wraps without checking; for integrator-internal states that carry
    /// drift deliberately (projection disabled).
    pub(crate) fn new_unchecked(v: Vec3) -> Self {
        UnitVec3(v)
    }

    #[inline]
    pub fn as_vec(&self) -> Vec3 {
        self.0
    }
}

impl From<UnitVec3> for Vec3 {
    fn from(u: UnitVec3) -> Vec3 {
        u.0
    }
}

/// An element of SO(3): orthonormal with determinant +1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    /// Wraps `m`, requiring `‖mᵀm - I‖_F ≤ 1e-8` and `det m > 0`.
    pub fn new(m: Mat3) -> Result<Self, GeomError> {
        let err = m.orthonormality_error();
        let det = m.det();
        if !err.is_finite() || err > ORTHONORMAL_TOL || det <= 0.0 {
            return Err(GeomError::NotRotation {
                orthonormality: err,
                det,
            });
        }
        Ok(Rotation(m))
    }

    /// Used where orthonormality holds by construction.
    pub(crate) fn new_unchecked(m: Mat3) -> Self {
        Rotation(m)
    }

    pub fn identity() -> Self {
        Rotation(Mat3::IDENTITY)
    }

    #[inline]
    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    #[inline]
    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.0 * v
    }

    /// `Rᵀ v`, i.e. the inverse rotation applied to `v`.
    #[inline]
    pub fn apply_transpose(&self, v: Vec3) -> Vec3 {
        let m = &self.0.m;
        Vec3::new(
            m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
            m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
            m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn compose(&self, rhs: &Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

/// Exponential map so(3) → SO(3) by the Rodrigues formula.
///
/// The coefficients switch to their second-order Taylor expansions below
/// ‖v‖ = 1e-6 where sin θ / θ and (1 - cos θ)/θ² lose precision.
pub fn exp_so3(v: Vec3) -> Rotation {
    let theta2 = v.norm_squared();
    let theta = math::sqrt(theta2);
    let (a, b) = if theta < 1e-6 {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        ((math::sin(theta)) / theta, (1.0 - math::cos(theta)) / theta2)
    };
    let vh = hat(v);
    Rotation::new_unchecked(Mat3::IDENTITY + vh * a + (vh * vh) * b)
}

/// Nearest rotation to `m` in the Frobenius norm (symmetric polar factor).
///
/// Requires `det m > 0` and `‖mᵀm - I‖_F ≤ 1e-3`; intended for drift repair,
/// not for orthonormalizing arbitrary frames. Idempotent on rotations.
pub fn orthonormalize(m: &Mat3) -> Result<Rotation, GeomError> {
    let err = m.orthonormality_error();
    let det = m.det();
    if !err.is_finite() || err > 1e-3 || det <= 0.0 {
        return Err(GeomError::DegenerateFrame {
            orthonormality: err,
            det,
        });
    }
    // R = M (MᵀM)^{-1/2} via the eigendecomposition of MᵀM. The precondition
    // keeps every eigenvalue near 1, so the inverse square root is benign.
    let (v, lambda) = super::lsq::jacobi_eigen_sym(&(m.transpose() * *m));
    let inv_sqrt = Vec3::new(
        1.0 / math::sqrt(lambda.x),
        1.0 / math::sqrt(lambda.y),
        1.0 / math::sqrt(lambda.z),
    );
    let s_inv_sqrt = v * Mat3::diag(inv_sqrt.x, inv_sqrt.y, inv_sqrt.z) * v.transpose();
    Ok(Rotation::new_unchecked(*m * s_inv_sqrt))
}

/// Projection of `v` onto the tangent plane at `p`: `v - ⟨p,v⟩ p`.
pub fn tangent_project(p: &UnitVec3, v: Vec3) -> Vec3 {
    let pv = p.as_vec();
    v - pv * pv.dot(v)
}
