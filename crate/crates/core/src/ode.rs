//! Fixed-step classical Runge–Kutta integration.

use std::ops::{Add, Mul};

use crate::geometry::{Mat6, Vec6};

/// A state that can be advanced along a derivative.
///
/// `project` runs once after each full step and may pull the state back onto
/// a constraint manifold (the rigid-body state reorthonormalizes its
/// attitude there).
pub trait OdeState: Clone {
    type Derivative: Copy + Add<Output = Self::Derivative> + Mul<f64, Output = Self::Derivative>;

    /// `self + h * d`, without projection.
    fn advance(&self, h: f64, d: &Self::Derivative) -> Self;

    fn project(self) -> Self {
        self
    }
}

/// One classical RK4 step of `y' = rhs(t, y)` from `t` to `t + dt`.
pub fn rk4_step<S, F>(rhs: F, t: f64, y: &S, dt: f64) -> S
where
    S: OdeState,
    F: Fn(f64, &S) -> S::Derivative,
{
    let half = 0.5 * dt;
    let k1 = rhs(t, y);
    let k2 = rhs(t + half, &y.advance(half, &k1));
    let k3 = rhs(t + half, &y.advance(half, &k2));
    let k4 = rhs(t + dt, &y.advance(dt, &k3));
    let slope = k1 + k2 * 2.0 + k3 * 2.0 + k4;
    y.advance(dt / 6.0, &slope).project()
}

impl OdeState for f64 {
    type Derivative = f64;
    fn advance(&self, h: f64, d: &f64) -> f64 {
        self + h * d
    }
}

impl OdeState for Vec6 {
    type Derivative = Vec6;
    fn advance(&self, h: f64, d: &Vec6) -> Vec6 {
        self + d * h
    }
}

impl OdeState for Mat6 {
    type Derivative = Mat6;
    fn advance(&self, h: f64, d: &Mat6) -> Mat6 {
        self + d * h
    }
}
