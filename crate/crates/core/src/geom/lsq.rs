//! Small dense factorization kernels: a symmetric Jacobi eigensolver and a
//! one-sided Jacobi SVD backing the minimum-norm least-squares solve.

use super::{Mat3, Vec3};
use crate::math;

/// Relative singular-value cutoff for rank decisions.
const SV_CUTOFF: f64 = 1e-10;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(V, λ)` with `S = V diag(λ) Vᵀ` and `V` orthogonal. Eigenvalues
/// are unsorted.
pub(crate) fn jacobi_eigen_sym(s: &Mat3) -> (Mat3, Vec3) {
    let mut a = *s;
    let mut v = Mat3::IDENTITY;
    for _ in 0..32 {
        let off = a.m[0][1].abs().max(a.m[0][2].abs()).max(a.m[1][2].abs());
        let scale = a.m[0][0].abs().max(a.m[1][1].abs()).max(a.m[2][2].abs());
        if off <= f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a.m[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (a.m[q][q] - a.m[p][p]) / (2.0 * apq);
            let t = if theta >= 0.0 {
                1.0 / (theta + math::sqrt(1.0 + theta * theta))
            } else {
                -1.0 / (-theta + math::sqrt(1.0 + theta * theta))
            };
            let c = 1.0 / math::sqrt(1.0 + t * t);
            let sn = t * c;
            // a <- JᵀaJ with J the (p,q) rotation.
            for k in 0..3 {
                let akp = a.m[k][p];
                let akq = a.m[k][q];
                a.m[k][p] = c * akp - sn * akq;
                a.m[k][q] = sn * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a.m[p][k];
                let aqk = a.m[q][k];
                a.m[p][k] = c * apk - sn * aqk;
                a.m[q][k] = sn * apk + c * aqk;
            }
            for k in 0..3 {
                let vkp = v.m[k][p];
                let vkq = v.m[k][q];
                v.m[k][p] = c * vkp - sn * vkq;
                v.m[k][q] = sn * vkp + c * vkq;
            }
        }
    }
    (v, Vec3::new(a.m[0][0], a.m[1][1], a.m[2][2]))
}

/// Thin SVD of a 3×3 matrix by one-sided Jacobi.
///
/// Returns `(u, sigma, v)` with `A = Σ σ_j u_j v_jᵀ`; `u_j` columns are
/// normalized only where `σ_j > 0`. One-sided Jacobi resolves small singular
/// values to full relative precision, which the rank cutoff below relies on.
pub(crate) fn svd3(a: &Mat3) -> (Mat3, Vec3, Mat3) {
    let mut u = *a;
    let mut v = Mat3::IDENTITY;
    for _ in 0..60 {
        let mut converged = true;
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let up = u.col(p);
            let uq = u.col(q);
            let alpha = up.norm_squared();
            let beta = uq.norm_squared();
            let gamma = up.dot(uq);
            if gamma.abs() <= 1e-15 * math::sqrt(alpha * beta).max(f64::MIN_POSITIVE) {
                continue;
            }
            converged = false;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = if zeta >= 0.0 {
                1.0 / (zeta + math::sqrt(1.0 + zeta * zeta))
            } else {
                -1.0 / (-zeta + math::sqrt(1.0 + zeta * zeta))
            };
            let c = 1.0 / math::sqrt(1.0 + t * t);
            let sn = c * t;
            for k in 0..3 {
                let ukp = u.m[k][p];
                let ukq = u.m[k][q];
                u.m[k][p] = c * ukp - sn * ukq;
                u.m[k][q] = sn * ukp + c * ukq;
            }
            for k in 0..3 {
                let vkp = v.m[k][p];
                let vkq = v.m[k][q];
                v.m[k][p] = c * vkp - sn * vkq;
                v.m[k][q] = sn * vkp + c * vkq;
            }
        }
        if converged {
            break;
        }
    }
    let mut sigma = Vec3::ZERO;
    let mut un = Mat3::ZERO;
    for j in 0..3 {
        let cj = u.col(j);
        let s = cj.norm();
        match j {
            0 => sigma.x = s,
            1 => sigma.y = s,
            _ => sigma.z = s,
        }
        let col = if s > 0.0 { cj / s } else { cj };
        for k in 0..3 {
            un.m[k][j] = col.component(k);
        }
    }
    (un, sigma, v)
}

/// Minimum-norm least-squares solution of `A x = b`.
///
/// Computes the pseudoinverse solution through [`svd3`], dropping singular
/// values below `1e-10 · σ_max`, so rank-deficient systems return the
/// shortest minimizer rather than blowing up.
pub fn min_norm_lsq(a: &Mat3, b: Vec3) -> Vec3 {
    let (u, sigma, v) = svd3(a);
    let smax = sigma.x.max(sigma.y).max(sigma.z);
    if smax <= 0.0 {
        return Vec3::ZERO;
    }
    let cutoff = SV_CUTOFF * smax;
    let mut x = Vec3::ZERO;
    for j in 0..3 {
        let s = sigma.component(j);
        if s > cutoff {
            x += v.col(j) * (u.col(j).dot(b) / s);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::hat;
    use proptest::prelude::*;

    #[test]
    fn identity_system_returns_rhs() {
        let b = Vec3::new(0.3, -2.0, 5.5);
        assert!((min_norm_lsq(&Mat3::IDENTITY, b) - b).norm() < 1e-14);
    }

    #[test]
    fn skew_system_picks_min_norm_solution() {
        // hat(e3) x = e1 has solutions (0, -1, λ); minimum norm picks λ = 0.
        let x = min_norm_lsq(&hat(Vec3::E3), Vec3::E1);
        assert!((x - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rank_deficient_drops_unreachable_component() {
        let x = min_norm_lsq(&Mat3::diag(1.0, 1.0, 0.0), Vec3::new(1.0, 2.0, 5.0));
        assert!((x - Vec3::new(1.0, 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_matrix_returns_zero() {
        assert_eq!(min_norm_lsq(&Mat3::ZERO, Vec3::new(1.0, 1.0, 1.0)), Vec3::ZERO);
    }

    #[test]
    fn jacobi_eigen_reconstructs_symmetric_matrix() {
        let s = Mat3::from_rows(
            Vec3::new(2.0, 0.5, -0.3),
            Vec3::new(0.5, 1.0, 0.7),
            Vec3::new(-0.3, 0.7, 3.0),
        );
        let (v, lambda) = jacobi_eigen_sym(&s);
        let rebuilt = v * Mat3::diag(lambda.x, lambda.y, lambda.z) * v.transpose();
        assert!((rebuilt - s).frobenius_norm() < 1e-13);
        assert!(v.orthonormality_error() < 1e-14);
    }

    fn vec_strategy(range: f64) -> impl Strategy<Value = Vec3> {
        (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn svd_reconstructs_input(
            r0 in vec_strategy(10.0), r1 in vec_strategy(10.0), r2 in vec_strategy(10.0),
        ) {
            let a = Mat3::from_rows(r0, r1, r2);
            let (u, sigma, v) = svd3(&a);
            let rebuilt = u * Mat3::diag(sigma.x, sigma.y, sigma.z) * v.transpose();
            prop_assert!((rebuilt - a).frobenius_norm() <= 1e-12 * (1.0 + a.frobenius_norm()));
        }

        #[test]
        fn normal_equations_hold(
            r0 in vec_strategy(5.0), r1 in vec_strategy(5.0), r2 in vec_strategy(5.0),
            b in vec_strategy(5.0),
        ) {
            let a = Mat3::from_rows(r0, r1, r2);
            let x = min_norm_lsq(&a, b);
            let residual = a.transpose() * (a * x - b);
            prop_assert!(residual.norm() <= 1e-9);
        }

        #[test]
        fn rank_two_solution_avoids_null_space(
            u1 in vec_strategy(3.0), u2 in vec_strategy(3.0),
            row1 in vec_strategy(3.0), row2 in vec_strategy(3.0),
            b in vec_strategy(3.0),
        ) {
            // A = u1 row1ᵀ + u2 row2ᵀ has null space ⊇ span(row1 × row2).
            prop_assume!(row1.cross(row2).norm() > 1e-2);
            let a = u1.outer(row1) + u2.outer(row2);
            let x = min_norm_lsq(&a, b);
            let null_dir = row1.cross(row2);
            prop_assert!(x.dot(null_dir).abs() / null_dir.norm() <= 1e-9 * (1.0 + x.norm()));
            let residual = a.transpose() * (a * x - b);
            prop_assert!(residual.norm() <= 1e-9 * (1.0 + a.frobenius_norm() * b.norm()));
        }
    }
}
