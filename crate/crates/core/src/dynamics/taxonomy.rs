//! Free-rotation trajectory classes and their closed-form attitude solutions.

use crate::error::{Error, Result};
use crate::geometry::{rotation_about_axis, Rotation, Vec3};

use super::InertiaModel;

/// Tolerances used to decide the measure-zero trajectory classes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyTolerances {
    /// Largest angle (rad) between `ω` and `Jω` for `ω` to count as an
    /// eigenvector of `J`.
    pub eigen_angle: f64,
    /// Relative difference under which two inertias count as equal.
    pub inertia_equality: f64,
    /// Relative residual of the separatrix equality.
    pub separatrix: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        ClassifyTolerances {
            eigen_angle: 1e-8,
            inertia_equality: 1e-9,
            separatrix: 1e-9,
        }
    }
}

/// The four kinds of free-rotation trajectories.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrajectoryClass {
    /// Constant `ω` along a principal axis. `axis` is the 0-based index of
    /// the inertia `ω` belongs to (lowest index among equal inertias), or
    /// `None` for `ω = 0`.
    Type1 { axis: Option<usize> },
    /// Strictly ordered inertias, `ω(t0)` on the separatrix.
    Type2,
    /// Strictly ordered inertias, generic periodic non-planar `ω`.
    Type3,
    /// Two equal inertias (0-based indices), `ω` traces a circle.
    Type4 { pair: (usize, usize) },
}

impl TrajectoryClass {
    pub fn label(&self) -> &'static str {
        match self {
            TrajectoryClass::Type1 { .. } => "type1",
            TrajectoryClass::Type2 => "type2",
            TrajectoryClass::Type3 => "type3",
            TrajectoryClass::Type4 { .. } => "type4",
        }
    }
}

fn nearly_equal(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Whether `omega` is an eigenvector of `J` within `angle_tol`, returning
/// the matching inertia index.
pub(crate) fn eigen_axis(inertia: &InertiaModel, omega: &Vec3, angle_tol: f64) -> Option<usize> {
    let jw = inertia.apply(omega);
    let denom = omega.norm() * jw.norm();
    if denom == 0.0 {
        return None;
    }
    let sin_angle = omega.cross(&jw).norm() / denom;
    if sin_angle > angle_tol.sin() {
        return None;
    }
    // Rayleigh quotient picks out the inertia value
    let lambda = omega.dot(&jw) / omega.norm_squared();
    let moments = inertia.moments();
    (0..3).min_by(|&a, &b| {
        (moments[a] - lambda)
            .abs()
            .total_cmp(&(moments[b] - lambda).abs())
    })
}

/// Indices of the inertias sorted in decreasing order.
fn descending_order(moments: &[f64; 3]) -> [usize; 3] {
    let mut idx = [0, 1, 2];
    idx.sort_by(|&a, &b| moments[b].total_cmp(&moments[a]));
    idx
}

/// Coefficient `g` of the separatrix condition `|ω1| = g |ω3|` for strictly
/// ordered inertias `J1 > J2 > J3`.
pub(crate) fn separatrix_ratio(j1: f64, j2: f64, j3: f64) -> f64 {
    (j3 * (j2 - j3) / (j1 * (j1 - j2))).sqrt()
}

/// Whether `omega` satisfies the separatrix condition (indices relabeled so
/// that `J1 > J2 > J3`). Returns `None` when the inertias are not strictly
/// ordered.
pub(crate) fn on_separatrix(
    inertia: &InertiaModel,
    omega: &Vec3,
    tol: &ClassifyTolerances,
) -> Option<bool> {
    let m = inertia.moments();
    let [i1, i2, i3] = descending_order(&m);
    if nearly_equal(m[i1], m[i2], tol.inertia_equality)
        || nearly_equal(m[i2], m[i3], tol.inertia_equality)
    {
        return None;
    }
    let g = separatrix_ratio(m[i1], m[i2], m[i3]);
    let lhs = omega[i1].abs();
    let rhs = g * omega[i3].abs();
    let scale = lhs.max(rhs);
    Some(scale > 0.0 && (lhs - rhs).abs() <= tol.separatrix * scale)
}

/// Classifies the free-rotation trajectory generated by `omega0`.
pub fn classify_trajectory(
    inertia: &InertiaModel,
    omega0: &Vec3,
    tol: &ClassifyTolerances,
) -> TrajectoryClass {
    if *omega0 == Vec3::zeros() {
        return TrajectoryClass::Type1 { axis: None };
    }
    let m = inertia.moments();
    if let Some(axis) = eigen_axis(inertia, omega0, tol.eigen_angle) {
        // report the lowest index among inertias equal to the matched one
        let first = (0..3)
            .find(|&i| nearly_equal(m[i], m[axis], tol.inertia_equality))
            .unwrap_or(axis);
        return TrajectoryClass::Type1 { axis: Some(first) };
    }
    for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
        if nearly_equal(m[a], m[b], tol.inertia_equality) {
            return TrajectoryClass::Type4 { pair: (a, b) };
        }
    }
    match on_separatrix(inertia, omega0, tol) {
        Some(true) => TrajectoryClass::Type2,
        _ => TrajectoryClass::Type3,
    }
}

/// Closed-form attitude of a Type-1 trajectory: `R(t) = r_u(w t) R0` with
/// `w = |ω0|` and `u = R0 ω0 / w`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanarRotation {
    pub r0: Rotation,
    pub axis: Vec3,
    pub rate: f64,
}

impl PlanarRotation {
    pub fn at(&self, t: f64) -> Rotation {
        // axis is unit by construction; fall back to R0 for a body at rest
        if self.rate == 0.0 {
            return self.r0;
        }
        rotation_about_axis(&self.axis, self.rate * t).expect("unit axis") * self.r0
    }
}

/// Builds the Type-1 closed form. Errors unless `omega0` is a nonzero
/// eigenvector of `J`.
pub fn analytic_type1(
    inertia: &InertiaModel,
    r0: &Rotation,
    omega0: &Vec3,
) -> Result<PlanarRotation> {
    let tol = ClassifyTolerances::default();
    if eigen_axis(inertia, omega0, tol.eigen_angle).is_none() {
        return Err(Error::invalid(format!(
            "ω0 = {:?} is not an eigenvector of J",
            omega0.as_slice()
        )));
    }
    let rate = omega0.norm();
    let axis = (r0 * omega0) / rate;
    // renormalize to absorb rounding in R0
    Ok(PlanarRotation {
        r0: *r0,
        axis: axis.normalize(),
        rate,
    })
}

/// Parameters of the two-equal-inertia closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Type4Params {
    /// Sine of the constant angle between the symmetry axis and `M`.
    pub p: f64,
    /// Precession rate of the symmetry axis about `M` (rad/s, > 0).
    pub xi1: f64,
    /// Body-frame rotation rate of `ω` about the symmetry axis (rad/s, ≠ 0).
    pub xi2: f64,
    /// 0-based index of the distinct inertia (the symmetry axis).
    pub symmetry_axis: usize,
}

/// `p`, `ξ1`, `ξ2` for `J` with exactly two equal inertias. The equal pair
/// plays the role of axes 1, 2 and the distinct inertia of axis 3.
pub fn type4_params(inertia: &InertiaModel, omega0: &Vec3) -> Result<Type4Params> {
    let tol = ClassifyTolerances::default();
    let m = inertia.moments();
    let equal = |a: usize, b: usize| nearly_equal(m[a], m[b], tol.inertia_equality);
    let axis3 = match (equal(0, 1), equal(0, 2), equal(1, 2)) {
        (true, false, false) => 2,
        (false, true, false) => 1,
        (false, false, true) => 0,
        _ => {
            return Err(Error::invalid(
                "type-4 parameters need exactly two equal inertias",
            ))
        }
    };
    let (a1, a2) = match axis3 {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let (w1, w2, w3) = (omega0[a1], omega0[a2], omega0[axis3]);
    let (j1, j2, j3) = (m[a1], m[a2], m[axis3]);
    if w1 == 0.0 && w2 == 0.0 {
        return Err(Error::invalid(
            "ω0 has no component in the equal-inertia plane (type 1)",
        ));
    }
    if w3 == 0.0 {
        return Err(Error::invalid(
            "ω0 has no component along the symmetry axis (type 1)",
        ));
    }
    let num = j1 * j1 * w1 * w1 + j1 * j1 * w2 * w2;
    let den = j1 * j1 * w1 * w1 + j2 * j2 * w2 * w2 + j3 * j3 * w3 * w3;
    let p = (num / den).sqrt();
    let xi1 = (w1 * w1 + w2 * w2 + (j3 / j1).powi(2) * w3 * w3).sqrt();
    let xi2 = (j3 / j1 - 1.0) * w3;
    Ok(Type4Params {
        p,
        xi1,
        xi2,
        symmetry_axis: axis3,
    })
}

/// Symmetry-axis direction `R(t) e3` expressed in an inertial frame whose
/// third axis is `M / |M|`: `(p cos ξ1(t−t1), p sin ξ1(t−t1), √(1−p²))`.
pub fn type4_axis_track(params: &Type4Params, t: f64, t1: f64) -> Vec3 {
    let phase = params.xi1 * (t - t1);
    Vec3::new(
        params.p * phase.cos(),
        params.p * phase.sin(),
        (1.0 - params.p * params.p).sqrt(),
    )
}
