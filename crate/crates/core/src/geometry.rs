//! Small fixed-size linear algebra: 3-vectors, 3×3 matrices, rotations and
//! the 6-dimensional extended state.
//!
//! Storage and arithmetic come from `nalgebra`. The cross-product matrix, the
//! axis-angle rotation, the projection back onto SO(3) and the symmetric 3×3
//! eigenvalue routine are implemented here.

use std::ops::Mul;

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Vec6 = Vector6<f64>;
pub type Mat6 = Matrix6<f64>;

/// Orthonormality and determinant tolerance for [`Rotation`].
pub const ROTATION_TOL: f64 = 1e-9;

/// Largest Frobenius distance from SO(3) accepted by [`reorthonormalize`].
pub const REORTHONORMALIZE_MAX_DISTANCE: f64 = 0.1;

/// Builds a vector, rejecting NaN and infinite components.
pub fn vec3(x1: f64, x2: f64, x3: f64) -> Result<Vec3> {
    if x1.is_finite() && x2.is_finite() && x3.is_finite() {
        Ok(Vec3::new(x1, x2, x3))
    } else {
        Err(Error::invalid(format!(
            "non-finite vector component in ({x1}, {x2}, {x3})"
        )))
    }
}

/// Stacks two 3-vectors into `(upper, lower)`.
pub fn join6(upper: &Vec3, lower: &Vec3) -> Vec6 {
    Vec6::new(upper.x, upper.y, upper.z, lower.x, lower.y, lower.z)
}

/// Splits a 6-vector into its upper and lower halves.
pub fn split6(x: &Vec6) -> (Vec3, Vec3) {
    (Vec3::new(x[0], x[1], x[2]), Vec3::new(x[3], x[4], x[5]))
}

/// Cross-product matrix: `skew(v) * y == v × y`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// A proper rotation matrix (`mᵀm = I`, `det m = +1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Mat3::identity())
    }

    /// Wraps `m` after checking the rotation invariants at [`ROTATION_TOL`].
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("rotation matrix has non-finite entries"));
        }
        let ortho = (m.transpose() * m - Mat3::identity()).norm();
        let det = m.determinant();
        if ortho > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::invalid(format!(
                "matrix is not a rotation (|mᵀm - I| = {ortho:.3e}, det = {det})"
            )));
        }
        Ok(Rotation(m))
    }

    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Rotation(m)
    }

    /// Rodrigues formula `cos ζ I + sin ζ [u]× + (1 − cos ζ) u uᵀ`.
    pub fn about_axis(axis: &Vec3, angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::invalid("rotation angle is not finite"));
        }
        let n = axis.norm();
        if !n.is_finite() || (n - 1.0).abs() > ROTATION_TOL {
            return Err(Error::invalid(format!(
                "rotation axis must be a unit vector (|u| = {n})"
            )));
        }
        let (s, c) = angle.sin_cos();
        let m = Mat3::identity() * c + skew(axis) * s + axis * axis.transpose() * (1.0 - c);
        Ok(Rotation(m))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    /// `Rᵀ v`.
    pub fn transpose_mul(&self, v: &Vec3) -> Vec3 {
        self.0.tr_mul(v)
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for Rotation {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<&Vec3> for &Rotation {
    type Output = Vec3;
    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.0 * rhs
    }
}

/// `rotation_about_axis(u, ζ)`; see [`Rotation::about_axis`].
pub fn rotation_about_axis(axis: &Vec3, angle: f64) -> Result<Rotation> {
    Rotation::about_axis(axis, angle)
}

/// Nearest rotation to `m` (orthogonal polar factor), for matrices within
/// [`REORTHONORMALIZE_MAX_DISTANCE`] of SO(3).
pub fn reorthonormalize(m: &Mat3) -> Result<Rotation> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    if m.determinant() <= 0.0 {
        return Err(Error::invalid(
            "matrix has non-positive determinant; no nearby rotation",
        ));
    }
    let q = polar_factor(m);
    let distance = (m - q).norm();
    if !distance.is_finite() || distance > REORTHONORMALIZE_MAX_DISTANCE {
        return Err(Error::invalid(format!(
            "matrix is {distance:.3e} from SO(3), limit {REORTHONORMALIZE_MAX_DISTANCE}"
        )));
    }
    Ok(Rotation(q))
}

/// Newton iteration `X ← (X + X⁻ᵀ)/2`, converging quadratically to the
/// orthogonal polar factor of a nonsingular matrix.
pub(crate) fn polar_factor(m: &Mat3) -> Mat3 {
    let mut x = *m;
    for _ in 0..60 {
        let inv_t = match x.try_inverse() {
            Some(inv) => inv.transpose(),
            None => return x,
        };
        let next = (x + inv_t) * 0.5;
        let delta = (next - x).norm();
        x = next;
        if delta <= 1e-15 {
            break;
        }
    }
    x
}

fn check_symmetric(m: &Mat3) -> Result<()> {
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if !asym.is_finite() || asym > 1e-12 * scale {
        return Err(Error::invalid(format!(
            "matrix is not symmetric (max |m - mᵀ| = {asym:.3e})"
        )));
    }
    Ok(())
}

/// Eigenvalues of a symmetric 3×3 matrix in ascending order (cyclic Jacobi).
pub fn sym_eigenvalues(m: &Mat3) -> Result<[f64; 3]> {
    check_symmetric(m)?;
    let mut a = (m + m.transpose()) * 0.5;
    for _sweep in 0..50 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        let diag = a[(0, 0)].powi(2) + a[(1, 1)].powi(2) + a[(2, 2)].powi(2);
        if off <= f64::EPSILON * f64::EPSILON * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // a ← Gᵀ a G with G the (p, q) Givens rotation
            for k in 0..3 {
                let akp = a[(k, p)];
                let akq = a[(k, q)];
                a[(k, p)] = c * akp - s * akq;
                a[(k, q)] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[(p, k)];
                let aqk = a[(q, k)];
                a[(p, k)] = c * apk - s * aqk;
                a[(q, k)] = s * apk + c * aqk;
            }
        }
    }
    let mut ev = [a[(0, 0)], a[(1, 1)], a[(2, 2)]];
    ev.sort_by(|x, y| x.total_cmp(y));
    Ok(ev)
}

/// Smallest eigenvalue of a symmetric 3×3 matrix.
pub fn sym_min_eigenvalue(m: &Mat3) -> Result<f64> {
    Ok(sym_eigenvalues(m)?[0])
}
