//! Rigid-body rotational dynamics: Euler equations, attitude kinematics,
//! fixed-step simulation and conserved quantities of free rotation.

mod taxonomy;

pub use taxonomy::{
    analytic_type1, classify_trajectory, type4_axis_track, type4_params, ClassifyTolerances,
    PlanarRotation, TrajectoryClass, Type4Params,
};

use std::fmt;
use std::ops::{Add, Mul};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{polar_factor, skew, Mat3, Rotation, Vec3};
use crate::ode::{rk4_step, OdeState};

/// States whose norm exceeds this are treated as a numeric blow-up.
pub const BLOWUP_NORM: f64 = 1e6;

/// kg·cm² to kg·m².
pub const KG_CM2_TO_SI: f64 = 1e-4;

/// Diagonal principal inertia `J = diag(J1, J2, J3)` in kg·m².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertiaModel {
    moments: [f64; 3],
}

impl InertiaModel {
    /// Validates positivity and the triangle inequalities `Ji ≤ Jj + Jk`.
    pub fn new(j1: f64, j2: f64, j3: f64) -> Result<Self> {
        let moments = [j1, j2, j3];
        if moments.iter().any(|j| !j.is_finite() || *j <= 0.0) {
            return Err(Error::invalid(format!(
                "principal inertias must be positive and finite, got {moments:?}"
            )));
        }
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let sum = moments[j] + moments[k];
            if moments[i] > sum * (1.0 + 1e-12) {
                return Err(Error::invalid(format!(
                    "inertia J{} = {} exceeds J{} + J{} = {}",
                    i + 1,
                    moments[i],
                    j + 1,
                    k + 1,
                    sum
                )));
            }
        }
        Ok(InertiaModel { moments })
    }

    pub fn from_kg_cm2(j1: f64, j2: f64, j3: f64) -> Result<Self> {
        Self::new(j1 * KG_CM2_TO_SI, j2 * KG_CM2_TO_SI, j3 * KG_CM2_TO_SI)
    }

    pub fn moments(&self) -> [f64; 3] {
        self.moments
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&Vec3::from(self.moments))
    }

    pub fn apply(&self, w: &Vec3) -> Vec3 {
        let [j1, j2, j3] = self.moments;
        Vec3::new(j1 * w.x, j2 * w.y, j3 * w.z)
    }

    pub fn apply_inverse(&self, v: &Vec3) -> Vec3 {
        let [j1, j2, j3] = self.moments;
        Vec3::new(v.x / j1, v.y / j2, v.z / j3)
    }

    /// Gyroscopic term `E(ω) = J⁻¹(Jω × ω)`.
    pub fn gyroscopic(&self, w: &Vec3) -> Vec3 {
        let [j1, j2, j3] = self.moments;
        Vec3::new(
            (j2 - j3) / j1 * w.y * w.z,
            (j3 - j1) / j2 * w.z * w.x,
            (j1 - j2) / j3 * w.x * w.y,
        )
    }

    /// Kinetic form `ωᵀJω` (twice the rotational kinetic energy).
    pub fn kinetic_form(&self, w: &Vec3) -> f64 {
        w.dot(&self.apply(w))
    }
}

/// `E(ω) + J⁻¹τ`.
pub fn euler_rhs(inertia: &InertiaModel, omega: &Vec3, torque: &Vec3) -> Vec3 {
    inertia.gyroscopic(omega) + inertia.apply_inverse(torque)
}

/// Distance of the body from a symmetric one:
/// `max(|J3−J2|/J1, |J1−J3|/J2, |J2−J1|/J3)`, in `[0, 1]`.
pub fn distordance(inertia: &InertiaModel) -> f64 {
    let [j1, j2, j3] = inertia.moments;
    ((j3 - j2).abs() / j1)
        .max((j1 - j3).abs() / j2)
        .max((j2 - j1).abs() / j3)
}

/// External torque acting on the body, in N·m (body frame).
#[derive(Clone, Default)]
pub enum TorqueModel {
    #[default]
    Zero,
    Constant(Vec3),
    Function(Arc<dyn Fn(f64) -> Vec3 + Send + Sync>),
}

impl TorqueModel {
    pub fn at(&self, t: f64) -> Vec3 {
        match self {
            TorqueModel::Zero => Vec3::zeros(),
            TorqueModel::Constant(v) => *v,
            TorqueModel::Function(f) => f(t),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, TorqueModel::Zero)
    }
}

impl fmt::Debug for TorqueModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TorqueModel::Zero => f.write_str("Zero"),
            TorqueModel::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            TorqueModel::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Attitude `R` (body to inertial coordinates, `Ṙ = R[ω]×`) and body-frame
/// angular velocity `ω` in rad/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidBodyState {
    pub attitude: Rotation,
    pub omega: Vec3,
}

impl RigidBodyState {
    pub fn new(attitude: Rotation, omega: Vec3) -> Self {
        RigidBodyState { attitude, omega }
    }

    /// Inertial angular momentum `M = RJω`.
    pub fn angular_momentum(&self, inertia: &InertiaModel) -> Vec3 {
        self.attitude * inertia.apply(&self.omega)
    }

    fn is_sane(&self) -> bool {
        let w = self.omega.norm();
        let r = self.attitude.matrix().norm();
        w.is_finite() && r.is_finite() && w <= BLOWUP_NORM && r <= BLOWUP_NORM
    }
}

/// Time derivative of a [`RigidBodyState`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyRate {
    pub attitude: Mat3,
    pub omega: Vec3,
}

impl Add for BodyRate {
    type Output = BodyRate;
    fn add(self, rhs: BodyRate) -> BodyRate {
        BodyRate {
            attitude: self.attitude + rhs.attitude,
            omega: self.omega + rhs.omega,
        }
    }
}

impl Mul<f64> for BodyRate {
    type Output = BodyRate;
    fn mul(self, h: f64) -> BodyRate {
        BodyRate {
            attitude: self.attitude * h,
            omega: self.omega * h,
        }
    }
}

impl OdeState for RigidBodyState {
    type Derivative = BodyRate;

    fn advance(&self, h: f64, d: &BodyRate) -> Self {
        RigidBodyState {
            attitude: Rotation::from_matrix_unchecked(self.attitude.matrix() + d.attitude * h),
            omega: self.omega + d.omega * h,
        }
    }

    fn project(self) -> Self {
        RigidBodyState {
            attitude: Rotation::from_matrix_unchecked(polar_factor(self.attitude.matrix())),
            omega: self.omega,
        }
    }
}

/// `(R[ω]×, E(ω) + J⁻¹τ)`.
pub fn coupled_rhs(state: &RigidBodyState, inertia: &InertiaModel, torque: &Vec3) -> BodyRate {
    BodyRate {
        attitude: state.attitude.matrix() * skew(&state.omega),
        omega: euler_rhs(inertia, &state.omega, torque),
    }
}

/// One RK4 step of the rigid-body equations; the attitude is
/// reorthonormalized afterwards.
pub fn body_step(
    inertia: &InertiaModel,
    torque: &TorqueModel,
    t: f64,
    state: &RigidBodyState,
    dt: f64,
) -> RigidBodyState {
    rk4_step(
        |s, y: &RigidBodyState| coupled_rhs(y, inertia, &torque.at(s)),
        t,
        state,
        dt,
    )
}

/// Uniform sampling grid `t_n = n·dt`, `n = 0..=N`, with `N·dt ≤ duration`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    duration: f64,
}

impl TimeGrid {
    pub fn new(dt: f64, duration: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if !duration.is_finite() || duration < dt * (1.0 - 1e-9) {
            return Err(Error::invalid(format!(
                "duration {duration} s is shorter than the time step {dt} s"
            )));
        }
        Ok(TimeGrid { dt, duration })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Number of integration steps.
    pub fn steps(&self) -> usize {
        ((self.duration / self.dt) + 1e-9).floor() as usize
    }

    /// Number of samples, `steps() + 1`.
    pub fn len(&self) -> usize {
        self.steps() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.time(n)).collect()
    }
}

/// Sampled rigid-body trajectory.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<RigidBodyState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_omega(&self) -> f64 {
        self.states
            .iter()
            .map(|s| s.omega.norm())
            .fold(0.0, f64::max)
    }
}

/// Integrates the rigid-body equations on `grid` from `initial`.
pub fn simulate(
    inertia: &InertiaModel,
    torque: &TorqueModel,
    initial: &RigidBodyState,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    if !initial.is_sane() {
        return Err(Error::invalid("initial state is not finite"));
    }
    let n = grid.len();
    let mut times = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let mut state = *initial;
    times.push(0.0);
    states.push(state);
    for step in 0..grid.steps() {
        let t = grid.time(step);
        state = body_step(inertia, torque, t, &state, grid.dt());
        if !state.is_sane() {
            return Err(Error::NumericFailure(format!(
                "rigid-body state diverged at t = {:.4} s",
                grid.time(step + 1)
            )));
        }
        times.push(grid.time(step + 1));
        states.push(state);
    }
    Ok(Trajectory { times, states })
}

/// Upper bound on `|ω(t)|` under free rotation from the two invariants
/// `ωᵀJω` and `|Jω|`.
pub fn free_rotation_omega_bound(inertia: &InertiaModel, omega0: &Vec3) -> f64 {
    let j_min = inertia
        .moments
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let by_energy = (inertia.kinetic_form(omega0) / j_min).sqrt();
    let by_momentum = inertia.apply(omega0).norm() / j_min;
    by_energy.min(by_momentum)
}
