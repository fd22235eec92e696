//! Coordinate-free geometry kernel: 3-vector and 3×3-matrix algebra, the
//! hat/vee isomorphism, the SO(3) exponential, tangent projections and
//! transport maps on S², and a minimum-norm least-squares solver.
//!
//! Everything here is a pure function of its inputs; all types are `Copy`.

mod lsq;
mod mat3;
mod rotation;
mod sphere;
mod vec3;

pub use lsq::min_norm_lsq;
pub use mat3::{hat, vee, Mat3};
pub use rotation::{
    exp_so3, orthonormalize, tangent_project, Rotation, UnitVec3, ORTHONORMAL_TOL, UNIT_TOL,
};
pub use sphere::{feedforward, transport, transport_matrix, TANGENCY_TOL};
pub use vec3::Vec3;

/// Errors from geometry-kernel preconditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeomError {
    /// The matrix handed to `vee` has a symmetric part above tolerance.
    NotSkew { asymmetry: f64 },
    /// A vector required to lie on the unit sphere does not.
    NotUnit { norm: f64 },
    /// A matrix required to be a rotation is not orthonormal enough.
    NotRotation { orthonormality: f64, det: f64 },
    /// The frame handed to `orthonormalize` is too far from SO(3) to repair.
    DegenerateFrame { orthonormality: f64, det: f64 },
    /// A vector claimed tangent at a base point has a normal component.
    NotTangent { inner_product: f64 },
}

impl core::fmt::Display for GeomError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GeomError::NotSkew { asymmetry } => {
                write!(f, "matrix is not skew-symmetric (symmetric part {asymmetry:e})")
            }
            GeomError::NotUnit { norm } => {
                write!(f, "vector is not unit length (norm {norm})")
            }
            GeomError::NotRotation { orthonormality, det } => write!(
                f,
                "matrix is not a rotation (orthonormality error {orthonormality:e}, det {det})"
            ),
            GeomError::DegenerateFrame { orthonormality, det } => write!(
                f,
                "frame too degenerate to orthonormalize (error {orthonormality:e}, det {det})"
            ),
            GeomError::NotTangent { inner_product } => {
                write!(f, "vector is not tangent at its base point (⟨p,v⟩ = {inner_product:e})")
            }
        }
    }
}

impl core::error::Error for GeomError {}
