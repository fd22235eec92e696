use core::ops::{Add, Mul, Neg, Sub};

use super::{GeomError, Vec3};
use crate::math;

/// A 3×3 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const ZERO: Mat3 = Mat3 { m: [[0.0; 3]; 3] };
    pub const IDENTITY: Mat3 = Mat3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn from_rows(r0: Vec3, r1: Vec3, r2: Vec3) -> Self {
        Mat3 {
            m: [
                [r0.x, r0.y, r0.z],
                [r1.x, r1.y, r1.z],
                [r2.x, r2.y, r2.z],
            ],
        }
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Mat3::from_rows(c0, c1, c2).transpose()
    }

    pub fn diag(d0: f64, d1: f64, d2: f64) -> Self {
        Mat3 {
            m: [[d0, 0.0, 0.0], [0.0, d1, 0.0], [0.0, 0.0, d2]],
        }
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::new(self.m[i][0], self.m[i][1], self.m[i][2])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        Mat3 {
            m: [
                [self.m[0][0], self.m[1][0], self.m[2][0]],
                [self.m[0][1], self.m[1][1], self.m[2][1]],
                [self.m[0][2], self.m[1][2], self.m[2][2]],
            ],
        }
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for r in &self.m {
            for &e in r {
                s += e * e;
            }
        }
        math::sqrt(s)
    }

    /// Inverse via the adjugate. `None` when the determinant is zero.
    pub fn inverse(&self) -> Option<Mat3> {
        let d = self.det();
        if d == 0.0 {
            return None;
        }
        let m = &self.m;
        let adj = Mat3 {
            m: [
                [
                    m[1][1] * m[2][2] - m[1][2] * m[2][1],
                    m[0][2] * m[2][1] - m[0][1] * m[2][2],
                    m[0][1] * m[1][2] - m[0][2] * m[1][1],
                ],
                [
                    m[1][2] * m[2][0] - m[1][0] * m[2][2],
                    m[0][0] * m[2][2] - m[0][2] * m[2][0],
                    m[0][2] * m[1][0] - m[0][0] * m[1][2],
                ],
                [
                    m[1][0] * m[2][1] - m[1][1] * m[2][0],
                    m[0][1] * m[2][0] - m[0][0] * m[2][1],
                    m[0][0] * m[1][1] - m[0][1] * m[1][0],
                ],
            ],
        };
        Some(adj * (1.0 / d))
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|r| r.iter().all(|e| e.is_finite()))
    }

    /// Max absolute entry of the symmetric part `(M + Mᵀ)/2`.
    pub fn symmetric_part_max(&self) -> f64 {
        let mut s: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s = s.max(0.5 * (self.m[i][j] + self.m[j][i]).abs());
            }
        }
        s
    }

    /// Frobenius distance of `MᵀM` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        (self.transpose() * *self - Mat3::IDENTITY).frobenius_norm()
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, rhs: Mat3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[i][j] + rhs.m[i][j];
            }
        }
        out
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, rhs: Mat3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[i][j] - rhs.m[i][j];
            }
        }
        out
    }
}

impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        self * -1.0
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, s: f64) -> Mat3 {
        let mut out = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[i][j] * s;
            }
        }
        out
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }
}

impl Mul<Mat3> for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[i][0] * rhs.m[0][j]
                    + self.m[i][1] * rhs.m[1][j]
                    + self.m[i][2] * rhs.m[2][j];
            }
        }
        out
    }
}

/// The skew isomorphism ℝ³ → so(3): `hat(v) w = v × w`.
pub fn hat(v: Vec3) -> Mat3 {
    Mat3 {
        m: [[0.0, -v.z, v.y], [v.z, 0.0, -v.x], [-v.y, v.x, 0.0]],
    }
}

/// Inverse of [`hat`]. The input must be skew-symmetric: the max entry of
/// its symmetric part may not exceed 1e-9.
pub fn vee(m: &Mat3) -> Result<Vec3, GeomError> {
    let asym = m.symmetric_part_max();
    if asym > 1e-9 {
        return Err(GeomError::NotSkew { asymmetry: asym });
    }
    // Average the two off-diagonal copies so vee ∘ hat is exact.
    Ok(Vec3::new(
        0.5 * (m.m[2][1] - m.m[1][2]),
        0.5 * (m.m[0][2] - m.m[2][0]),
        0.5 * (m.m[1][0] - m.m[0][1]),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hat_of_e3_rotates_e1_to_e2() {
        assert_eq!(hat(Vec3::E3) * Vec3::E1, Vec3::E2);
    }

    #[test]
    fn hat_annihilates_its_own_axis() {
        let v = Vec3::new(0.3, -1.2, 2.5);
        assert_eq!(hat(v) * v, Vec3::ZERO);
    }

    #[test]
    fn hat_matches_skew_layout() {
        let m = hat(Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(m.row(0), Vec3::new(0.0, -3.0, 2.0));
        assert_eq!(m.row(1), Vec3::new(3.0, 0.0, -1.0));
        assert_eq!(m.row(2), Vec3::new(-2.0, 1.0, 0.0));
    }

    #[test]
    fn vee_inverts_hat() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(vee(&hat(v)).unwrap(), v);
    }

    #[test]
    fn vee_of_zero_is_zero() {
        assert_eq!(vee(&Mat3::ZERO).unwrap(), Vec3::ZERO);
    }

    #[test]
    fn vee_rejects_symmetric_input() {
        assert!(matches!(
            vee(&Mat3::IDENTITY),
            Err(GeomError::NotSkew { .. })
        ));
    }

    #[test]
    fn inverse_recovers_identity() {
        let m = Mat3::from_rows(
            Vec3::new(2.0, 1.0, 0.5),
            Vec3::new(-1.0, 3.0, 0.0),
            Vec3::new(0.0, 0.25, 1.5),
        );
        let prod = m * m.inverse().unwrap();
        assert!((prod - Mat3::IDENTITY).frobenius_norm() < 1e-14);
    }

    proptest! {
        #[test]
        fn hat_vee_round_trip_is_exact(
            x in -1e3f64..1e3, y in -1e3f64..1e3, z in -1e3f64..1e3,
        ) {
            let v = Vec3::new(x, y, z);
            prop_assert_eq!(vee(&hat(v)).unwrap(), v);
        }

        #[test]
        fn hat_acts_as_cross_product(
            ax in -10f64..10.0, ay in -10f64..10.0, az in -10f64..10.0,
            bx in -10f64..10.0, by in -10f64..10.0, bz in -10f64..10.0,
        ) {
            let a = Vec3::new(ax, ay, az);
            let b = Vec3::new(bx, by, bz);
            prop_assert_eq!(hat(a) * b, a.cross(b));
        }
    }
}
