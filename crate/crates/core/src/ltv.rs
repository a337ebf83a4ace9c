//! The linear time-varying part of the error dynamics.
//!
//! With `Z = (ã, ω̃/k)` the unperturbed error system is `Z' = k A(t) Z`,
//! `A(t) = [−I, [a]×; [a]×, 0]`. Along its solutions
//! `d|Z|²/dt = −2k|Z₁|² ≤ 0`; under persistent excitation the norm contracts
//! by a fixed factor over every window of length `T`. This module computes
//! transition matrices and estimates that factor empirically.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{join6, skew, split6, Mat6, Vec3, Vec6};
use crate::measurement::MeasurementSeries;
use crate::observer::ErrorState;
use crate::ode::rk4_step;

/// Scaled error `Z = (ã, ω̃/k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZState {
    pub z1: Vec3,
    pub z2: Vec3,
}

impl ZState {
    pub fn from_error(error: &ErrorState, gain: f64) -> Self {
        ZState {
            z1: error.a_tilde,
            z2: error.omega_tilde / gain,
        }
    }

    pub fn to_error(&self, gain: f64) -> ErrorState {
        ErrorState {
            a_tilde: self.z1,
            omega_tilde: self.z2 * gain,
        }
    }

    pub fn as_vec6(&self) -> Vec6 {
        join6(&self.z1, &self.z2)
    }

    pub fn from_vec6(z: &Vec6) -> Self {
        let (z1, z2) = split6(z);
        ZState { z1, z2 }
    }

    pub fn norm(&self) -> f64 {
        self.as_vec6().norm()
    }
}

/// `A = [−I, [a]×; [a]×, 0]` for a unit direction `a`.
pub fn build_a(a: &Vec3) -> Mat6 {
    let s = skew(a);
    let mut m = Mat6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).fill_with_identity();
    m.fixed_view_mut::<3, 3>(0, 0).neg_mut();
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&s);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&s);
    m
}

/// Directions used inside step `n`: start, normalized midpoint, end.
fn step_directions(series: &MeasurementSeries, n: usize) -> (Vec3, Vec3, Vec3) {
    let start = series.values[n].normalize();
    let end = series.values[n + 1].normalize();
    let mid = (start + end).normalize();
    (start, mid, end)
}

/// `Φ(t1, t0)` of `Z' = k A(t) Z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionMatrix {
    pub phi: Mat6,
    pub t0: f64,
    pub t1: f64,
}

fn propagate(series: &MeasurementSeries, gain: f64, first: usize, steps: usize) -> Mat6 {
    let dt = series.dt();
    let mut phi = Mat6::identity();
    for n in first..first + steps {
        let (a0, am, a1) = step_directions(series, n);
        let (m0, mm, m1) = (
            build_a(&a0) * gain,
            build_a(&am) * gain,
            build_a(&a1) * gain,
        );
        let t_start = series.times[n];
        phi = rk4_step(
            |t, y: &Mat6| {
                let stage = t - t_start;
                let m = if stage <= 0.0 {
                    &m0
                } else if stage < dt {
                    &mm
                } else {
                    &m1
                };
                m * y
            },
            t_start,
            &phi,
            dt,
        );
    }
    phi
}

fn grid_index(series: &MeasurementSeries, t: f64, t0: f64, t1: f64) -> Result<usize> {
    series
        .index_of(t)
        .ok_or_else(|| series.window_error(t0, t1))
}

/// Integrates `Φ' = k A(t) Φ`, `Φ(t0, t0) = I`, over `[t0, t1]`. Both ends
/// must be sample times. Directions between samples are normalized linear
/// interpolants; noisy samples are normalized.
pub fn transition_matrix(
    series: &MeasurementSeries,
    gain: f64,
    t0: f64,
    t1: f64,
) -> Result<TransitionMatrix> {
    if t1 < t0 {
        return Err(Error::invalid(format!("t1 = {t1} precedes t0 = {t0}")));
    }
    let first = grid_index(series, t0, t0, t1)?;
    let last = grid_index(series, t1, t0, t1)?;
    Ok(TransitionMatrix {
        phi: propagate(series, gain, first, last - first),
        t0,
        t1,
    })
}

/// Induced 2-norm: square root of the top eigenvalue of `MᵀM` by power
/// iteration from a fixed start vector, stopped at relative change 1e-10.
pub fn induced_norm(m: &Mat6) -> f64 {
    let gram = m.transpose() * m;
    let mut v = Vec6::new(1.0, 0.93, 0.87, 0.81, 0.76, 0.71).normalize();
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let w = gram * v;
        let next = w.norm();
        if next == 0.0 {
            return 0.0;
        }
        v = w / next;
        let converged = (next - lambda).abs() <= 1e-10 * next;
        lambda = next;
        if converged {
            break;
        }
    }
    lambda.sqrt()
}

/// Empirical window decay constant: the worst `‖Φ(t+T, t)‖²` over window
/// starts, clipped at 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayEstimate {
    pub window: f64,
    pub stride: f64,
    pub gain: f64,
    pub c_hat: f64,
    pub windows_checked: usize,
    pub worst_window_start: f64,
    pub window_starts: Vec<f64>,
    /// `‖Φ(t+T, t)‖²` per window, unclipped.
    pub window_contraction: Vec<f64>,
}

/// Estimates the decay constant from windows of length `window` starting
/// every `stride` seconds.
pub fn estimate_decay(
    series: &MeasurementSeries,
    gain: f64,
    window: f64,
    stride: f64,
) -> Result<DecayEstimate> {
    if !(gain > 0.0) {
        return Err(Error::invalid(format!("gain must be positive, got {gain}")));
    }
    if !(window > 0.0 && stride > 0.0) {
        return Err(Error::invalid("window and stride must be positive"));
    }
    let steps = series.steps_for(window).max(1);
    let stride_steps = series.steps_for(stride).max(1);
    if steps + stride_steps >= series.len() {
        return Err(Error::invalid(format!(
            "series of {:.3} s is shorter than window + stride ({} s)",
            series.end() - series.start(),
            window + stride
        )));
    }
    let mut starts = Vec::new();
    let mut contraction = Vec::new();
    let mut first = 0;
    while first + steps < series.len() {
        let phi = propagate(series, gain, first, steps);
        starts.push(series.times[first]);
        contraction.push(induced_norm(&phi).powi(2));
        first += stride_steps;
    }
    let (worst, c) = contraction
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one window");
    let dt = series.dt();
    Ok(DecayEstimate {
        window: steps as f64 * dt,
        stride: stride_steps as f64 * dt,
        gain,
        c_hat: c.min(1.0),
        windows_checked: starts.len(),
        worst_window_start: starts[worst],
        window_starts: starts,
        window_contraction: contraction,
    })
}

/// Solution of `Z' = k A(t) Z` from `z0` at the first sample, on the series
/// grid.
pub fn integrate_ltv(series: &MeasurementSeries, gain: f64, z0: &ZState) -> Vec<ZState> {
    let dt = series.dt();
    let mut z = z0.as_vec6();
    let mut out = Vec::with_capacity(series.len());
    out.push(*z0);
    for n in 0..series.len() - 1 {
        let (a0, am, a1) = step_directions(series, n);
        let t_start = series.times[n];
        z = rk4_step(
            |t, y: &Vec6| {
                let stage = t - t_start;
                let a = if stage <= 0.0 {
                    &a0
                } else if stage < dt {
                    &am
                } else {
                    &a1
                };
                build_a(a) * y * gain
            },
            t_start,
            &z,
            dt,
        );
        out.push(ZState::from_vec6(&z));
    }
    out
}
