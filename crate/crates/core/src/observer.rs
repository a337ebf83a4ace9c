//! Angular-velocity observer driven by a single reference-vector
//! measurement.
//!
//! The observer reconstructs the extended state `X = (a, ω)`:
//!
//! ```text
//! â' = a × ω̂ − k (â − a)
//! ω̂' = E(ω̂) + J⁻¹τ + k² a × (â − a)
//! ```
//!
//! where `a` is the measured direction and `k > 0` the gain. `â` is never
//! projected onto the unit sphere.

use std::ops::{Add, Mul};

use serde::Serialize;

use crate::dynamics::{
    coupled_rhs, BodyRate, InertiaModel, RigidBodyState, TimeGrid, TorqueModel, Trajectory,
    BLOWUP_NORM,
};
use crate::error::{Error, Result};
use crate::geometry::{join6, skew, split6, Mat6, Vec3, Vec6};
use crate::measurement::{
    draw_noise, measure_clean, sensor_reading, MeasurementSeries, ReferenceVector, SensorModel,
};
use crate::ode::{rk4_step, OdeState};
use crate::pe::PeReport;

/// Estimate `X̂ = (â, ω̂)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObserverState {
    pub a_hat: Vec3,
    pub omega_hat: Vec3,
}

impl ObserverState {
    pub fn as_vec6(&self) -> Vec6 {
        join6(&self.a_hat, &self.omega_hat)
    }

    fn from_vec6(x: &Vec6) -> Self {
        let (a_hat, omega_hat) = split6(x);
        ObserverState { a_hat, omega_hat }
    }

    fn is_sane(&self) -> bool {
        let n = self.as_vec6().norm();
        n.is_finite() && n <= BLOWUP_NORM
    }
}

impl OdeState for ObserverState {
    type Derivative = Vec6;
    fn advance(&self, h: f64, d: &Vec6) -> Self {
        ObserverState::from_vec6(&(self.as_vec6() + d * h))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObserverConfig {
    pub gain: f64,
    /// Initial estimate; defaults to `(a(0), 0)`.
    pub init: Option<ObserverState>,
}

impl ObserverConfig {
    pub fn new(gain: f64) -> Result<Self> {
        if !(gain.is_finite() && gain > 0.0) {
            return Err(Error::invalid(format!(
                "observer gain must be positive, got {gain}"
            )));
        }
        Ok(ObserverConfig { gain, init: None })
    }

    pub fn with_init(mut self, init: ObserverState) -> Self {
        self.init = Some(init);
        self
    }

    fn initial_state(&self, first_measurement: &Vec3) -> ObserverState {
        self.init.unwrap_or(ObserverState {
            a_hat: *first_measurement,
            omega_hat: Vec3::zeros(),
        })
    }
}

/// Estimation error `X̃ = X − X̂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorState {
    pub a_tilde: Vec3,
    pub omega_tilde: Vec3,
}

impl ErrorState {
    pub fn between(a: &Vec3, omega: &Vec3, estimate: &ObserverState) -> Self {
        ErrorState {
            a_tilde: a - estimate.a_hat,
            omega_tilde: omega - estimate.omega_hat,
        }
    }

    /// `|X̃|`.
    pub fn norm(&self) -> f64 {
        join6(&self.a_tilde, &self.omega_tilde).norm()
    }
}

/// Right-hand side of the true extended state: `(a × ω, E(ω) + J⁻¹τ)`.
pub fn state_rhs(a: &Vec3, omega: &Vec3, inertia: &InertiaModel, torque: &Vec3) -> Vec6 {
    join6(
        &a.cross(omega),
        &crate::dynamics::euler_rhs(inertia, omega, torque),
    )
}

/// Observer right-hand side for the measured direction `a_meas`.
pub fn observer_rhs(
    estimate: &ObserverState,
    a_meas: &Vec3,
    inertia: &InertiaModel,
    torque: &Vec3,
    gain: f64,
) -> Vec6 {
    let innovation = estimate.a_hat - a_meas;
    let a_dot = a_meas.cross(&estimate.omega_hat) - innovation * gain;
    let w_dot = crate::dynamics::euler_rhs(inertia, &estimate.omega_hat, torque)
        + a_meas.cross(&innovation) * (gain * gain);
    join6(&a_dot, &w_dot)
}

/// Linear part of the error dynamics, `[−kI, [a]×; k²[a]×, 0]`.
pub fn error_matrix(a: &Vec3, gain: f64) -> Mat6 {
    let mut m = Mat6::zeros();
    let s = skew(a);
    m.fixed_view_mut::<3, 3>(0, 0).fill_with_identity();
    m.fixed_view_mut::<3, 3>(0, 0).scale_mut(-gain);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&s);
    m.fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&(s * (gain * gain)));
    m
}

/// Error derivative in matrix form, `[−kI, [a]×; k²[a]×, 0] X̃ + (0, E(ω) − E(ω̂))`.
pub fn error_rhs(
    error: &ErrorState,
    a: &Vec3,
    omega: &Vec3,
    omega_hat: &Vec3,
    inertia: &InertiaModel,
    gain: f64,
) -> Vec6 {
    let linear = error_matrix(a, gain) * join6(&error.a_tilde, &error.omega_tilde);
    let nonlinear = join6(
        &Vec3::zeros(),
        &(inertia.gyroscopic(omega) - inertia.gyroscopic(omega_hat)),
    );
    linear + nonlinear
}

/// `|ξ| = |E(ω) − E(ω̂)| / k`.
pub fn disturbance_norm(inertia: &InertiaModel, omega: &Vec3, omega_hat: &Vec3, gain: f64) -> f64 {
    (inertia.gyroscopic(omega) - inertia.gyroscopic(omega_hat)).norm() / gain
}

/// `d (√2 ω_max |Z| + k |Z|²)` with `Z = (ã, ω̃/k)`.
pub fn disturbance_norm_bound(
    error: &ErrorState,
    gain: f64,
    distordance: f64,
    omega_max: f64,
) -> f64 {
    let z = join6(&error.a_tilde, &(error.omega_tilde / gain)).norm();
    distordance * (std::f64::consts::SQRT_2 * omega_max * z + gain * z * z)
}

/// Observer estimates on the measurement grid, with errors when the truth
/// is known.
#[derive(Clone, Debug)]
pub struct ObserverRun {
    pub gain: f64,
    pub times: Vec<f64>,
    pub estimates: Vec<ObserverState>,
    pub errors: Option<Vec<ErrorState>>,
}

fn diverged(t: f64) -> Error {
    Error::NumericFailure(format!("observer estimate diverged at t = {t:.4} s"))
}

/// Runs the observer over a recorded series. The measurement at the start of
/// each step is held over the four RK4 stages. When `truth` is given, its
/// time grid must equal the series grid and the error series is filled.
pub fn run_observer(
    series: &MeasurementSeries,
    inertia: &InertiaModel,
    torque: &TorqueModel,
    config: &ObserverConfig,
    truth: Option<(&Trajectory, &ReferenceVector)>,
) -> Result<ObserverRun> {
    if let Some((traj, _)) = truth {
        let same_grid = traj.len() == series.len()
            && traj
                .times
                .iter()
                .zip(&series.times)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0));
        if !same_grid {
            return Err(Error::invalid(
                "truth trajectory and measurement series are on different grids",
            ));
        }
    }
    let k = config.gain;
    let dt = series.dt();
    let mut state = config.initial_state(&series.values[0]);
    let mut estimates = Vec::with_capacity(series.len());
    estimates.push(state);
    for n in 0..series.len() - 1 {
        let a_meas = series.values[n];
        state = rk4_step(
            |t, x: &ObserverState| observer_rhs(x, &a_meas, inertia, &torque.at(t), k),
            series.times[n],
            &state,
            dt,
        );
        if !state.is_sane() {
            return Err(diverged(series.times[n + 1]));
        }
        estimates.push(state);
    }
    let errors = truth.map(|(traj, reference)| {
        traj.states
            .iter()
            .zip(&estimates)
            .map(|(s, e)| ErrorState::between(&measure_clean(&s.attitude, reference), &s.omega, e))
            .collect()
    });
    Ok(ObserverRun {
        gain: k,
        times: series.times.clone(),
        estimates,
        errors,
    })
}

/// Truth and observer integrated together.
#[derive(Clone, Debug)]
pub struct PairedRun {
    pub trajectory: Trajectory,
    pub measurements: MeasurementSeries,
    pub observer: ObserverRun,
}

#[derive(Clone, Copy, Debug)]
struct PairedState {
    body: RigidBodyState,
    estimate: ObserverState,
}

#[derive(Clone, Copy, Debug)]
struct PairedRate {
    body: BodyRate,
    estimate: Vec6,
}

impl Add for PairedRate {
    type Output = PairedRate;
    fn add(self, rhs: PairedRate) -> PairedRate {
        PairedRate {
            body: self.body + rhs.body,
            estimate: self.estimate + rhs.estimate,
        }
    }
}

impl Mul<f64> for PairedRate {
    type Output = PairedRate;
    fn mul(self, h: f64) -> PairedRate {
        PairedRate {
            body: self.body * h,
            estimate: self.estimate * h,
        }
    }
}

impl OdeState for PairedState {
    type Derivative = PairedRate;

    fn advance(&self, h: f64, d: &PairedRate) -> Self {
        PairedState {
            body: self.body.advance(h, &d.body),
            estimate: self.estimate.advance(h, &d.estimate),
        }
    }

    fn project(self) -> Self {
        PairedState {
            body: self.body.project(),
            estimate: self.estimate,
        }
    }
}

/// Integrates the rigid body and the observer as one system on `grid`.
///
/// Inside each step the observer sees the measurement of the current stage
/// attitude plus the noise vector drawn for that step (held over the four
/// stages). Noise follows `sensor`; pass `sensor.noiseless()` for clean runs.
/// The body trajectory and the emitted measurement series are bit-identical
/// to [`crate::dynamics::simulate`] followed by
/// [`crate::measurement::sense_trajectory`].
pub fn run_paired(
    inertia: &InertiaModel,
    torque: &TorqueModel,
    initial: &RigidBodyState,
    reference: &ReferenceVector,
    sensor: &SensorModel,
    grid: &TimeGrid,
    config: &ObserverConfig,
) -> Result<PairedRun> {
    sensor.validate()?;
    let k = config.gain;
    let dt = grid.dt();
    let mut rng = sensor.rng();
    let len = grid.len();

    let mut noise = draw_noise(sensor, dt, &mut rng);
    let first = sensor_reading(&measure_clean(&initial.attitude, reference), sensor, &noise);
    let mut state = PairedState {
        body: *initial,
        estimate: config.initial_state(&first),
    };

    let mut trajectory = Trajectory {
        times: Vec::with_capacity(len),
        states: Vec::with_capacity(len),
    };
    let mut values = Vec::with_capacity(len);
    let mut estimates = Vec::with_capacity(len);
    let mut errors = Vec::with_capacity(len);

    let mut record = |t: f64, s: &PairedState, measured: Vec3| {
        let a_true = measure_clean(&s.body.attitude, reference);
        trajectory.times.push(t);
        trajectory.states.push(s.body);
        values.push(measured);
        estimates.push(s.estimate);
        errors.push(ErrorState::between(&a_true, &s.body.omega, &s.estimate));
    };
    record(0.0, &state, first);

    for step in 0..grid.steps() {
        let held = noise;
        let rhs = |t: f64, s: &PairedState| {
            let tau = torque.at(t);
            let a_meas = sensor_reading(&measure_clean(&s.body.attitude, reference), sensor, &held);
            PairedRate {
                body: coupled_rhs(&s.body, inertia, &tau),
                estimate: observer_rhs(&s.estimate, &a_meas, inertia, &tau, k),
            }
        };
        state = rk4_step(rhs, grid.time(step), &state, dt);
        let t = grid.time(step + 1);
        let body_ok = state.body.omega.norm() <= BLOWUP_NORM
            && state.body.omega.iter().all(|x| x.is_finite());
        if !body_ok {
            return Err(Error::NumericFailure(format!(
                "rigid-body state diverged at t = {t:.4} s"
            )));
        }
        if !state.estimate.is_sane() {
            return Err(diverged(t));
        }
        noise = draw_noise(sensor, dt, &mut rng);
        let measured = sensor_reading(
            &measure_clean(&state.body.attitude, reference),
            sensor,
            &noise,
        );
        record(t, &state, measured);
    }

    let times = trajectory.times.clone();
    Ok(PairedRun {
        measurements: MeasurementSeries {
            times: times.clone(),
            values,
        },
        observer: ObserverRun {
            gain: k,
            times,
            estimates,
            errors: Some(errors),
        },
        trajectory,
    })
}

/// Sufficient-condition quantities of the local convergence result,
/// evaluated with an empirical window decay constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceBudget {
    /// Window decay constant (empirical estimate).
    pub c: f64,
    pub c_source: &'static str,
    /// Excitation window length `T` (s).
    pub window: f64,
    pub mu: f64,
    pub omega_max: f64,
    pub gain: f64,
    pub distordance: f64,
    /// `(1 − c) / (2√2 T ω_max)`.
    pub d_star: f64,
    /// Basin radius; infinite for a symmetric body.
    pub r: f64,
    /// Whether the distordance is below `d_star`, i.e. the guarantee applies.
    pub d_below_d_star: bool,
}

/// `(1 − c) / (2√2 T ω_max)`.
pub fn d_star(c: f64, window: f64, omega_max: f64) -> f64 {
    (1.0 - c) / (2.0 * std::f64::consts::SQRT_2 * window * omega_max)
}

/// `r² = (1−c)³ / (8√3 d² T³ k³) · (1 − 2√2 d T ω_max / (1−c))²`.
pub fn basin_radius_squared(
    c: f64,
    window: f64,
    gain: f64,
    distordance: f64,
    omega_max: f64,
) -> f64 {
    let one_minus_c = 1.0 - c;
    let factor =
        1.0 - 2.0 * std::f64::consts::SQRT_2 * distordance * window * omega_max / one_minus_c;
    one_minus_c.powi(3) / (8.0 * 3f64.sqrt() * distordance.powi(2) * window.powi(3) * gain.powi(3))
        * factor
        * factor
}

/// Evaluates `d*` and `r` from an excitation report, the gain, `ω_max` and a
/// decay estimate `c ∈ (0, 1)`. `r` is reported even when `d ≥ d*`; check
/// `d_below_d_star` before relying on it.
pub fn convergence_budget(
    pe: &PeReport,
    distordance: f64,
    gain: f64,
    omega_max: f64,
    c_estimate: f64,
) -> Result<ConvergenceBudget> {
    if !(c_estimate > 0.0 && c_estimate < 1.0) {
        return Err(Error::invalid(format!(
            "decay constant must lie in (0, 1), got {c_estimate}"
        )));
    }
    if !(gain > 0.0 && omega_max > 0.0 && pe.window > 0.0) {
        return Err(Error::invalid(
            "gain, ω_max and window length must be positive",
        ));
    }
    let d_star = d_star(c_estimate, pe.window, omega_max);
    let r = basin_radius_squared(c_estimate, pe.window, gain, distordance, omega_max).sqrt();
    Ok(ConvergenceBudget {
        c: c_estimate,
        c_source: "empirical",
        window: pe.window,
        mu: pe.mu_empirical,
        omega_max,
        gain,
        distordance,
        d_star,
        r,
        d_below_d_star: distordance < d_star,
    })
}
