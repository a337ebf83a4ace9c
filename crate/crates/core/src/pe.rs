//! Persistent excitation of the measured direction.
//!
//! The excitation Gramian over `[t, t+T]` is
//! `(1/T) ∫ [a]×ᵀ[a]× dτ = I − (1/T) ∫ a aᵀ dτ` for unit `a`. The series is
//! persistently exciting when its smallest eigenvalue stays above some
//! `μ > 0` for every window.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::dynamics::{
    classify_trajectory, type4_params, ClassifyTolerances, InertiaModel, TorqueModel, Trajectory,
    TrajectoryClass,
};
use crate::error::{Error, Result};
use crate::geometry::{skew, sym_eigenvalues, Mat3, Rotation, Vec3};
use crate::measurement::{MeasurementSeries, ReferenceVector};

/// Margins at or above this are reported as persistently exciting.
pub const PE_THRESHOLD: f64 = 1e-3;

/// Margins below this are reported as not persistently exciting; values in
/// between are inconclusive.
pub const NOT_PE_THRESHOLD: f64 = 1e-6;

/// Largest angle (rad) between `M` and `±å` that counts as aligned.
pub const ALIGNMENT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeVerdict {
    Pe,
    NotPe,
    Inconclusive,
}

impl PeVerdict {
    pub fn from_margin(mu: f64) -> Self {
        if mu >= PE_THRESHOLD {
            PeVerdict::Pe
        } else if mu < NOT_PE_THRESHOLD {
            PeVerdict::NotPe
        } else {
            PeVerdict::Inconclusive
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PeVerdict::Pe => "pe",
            PeVerdict::NotPe => "not-pe",
            PeVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Which branch of the free-rotation excitation result applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PeCase {
    /// Constant `ω` with `M` aligned with `å`: `a(t)` is constant.
    Type1Aligned,
    /// Separatrix trajectory with `M` aligned with `å`.
    Type2Aligned,
    GenericPe,
}

/// Excitation predicted from initial conditions alone (free rotation).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PePrediction {
    pub case: PeCase,
    /// Margin over one rotation period for a planar (type 1, non-aligned)
    /// rotation: `min(1 − a1², (1 + a1²)/2)`.
    pub mu_theoretical: Option<f64>,
    pub trajectory: &'static str,
}

impl PePrediction {
    pub fn verdict(&self) -> PeVerdict {
        match self.case {
            PeCase::GenericPe => PeVerdict::Pe,
            _ => PeVerdict::NotPe,
        }
    }
}

/// Sliding-window excitation margins of a measurement series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeReport {
    /// Window length `T` (s), rounded to the sample grid.
    pub window: f64,
    pub stride: f64,
    /// Minimum over windows of the Gramian's smallest eigenvalue.
    pub mu_empirical: f64,
    pub min_window_start: f64,
    pub window_starts: Vec<f64>,
    pub per_window_lambda_min: Vec<f64>,
    pub verdict: PeVerdict,
    pub predicted: Option<PePrediction>,
}

/// Sample index range `[first, first + steps]` covering `[t, t + T]`.
fn window_range(series: &MeasurementSeries, t: f64, window: f64) -> Result<(usize, usize)> {
    if !(window > 0.0) {
        return Err(Error::invalid(format!(
            "window length must be positive, got {window}"
        )));
    }
    let first = series
        .index_of(t)
        .ok_or_else(|| series.window_error(t, t + window))?;
    let steps = series.steps_for(window).max(1);
    if first + steps >= series.len() {
        return Err(series.window_error(t, t + window));
    }
    Ok((first, steps))
}

fn trapezoid_average(
    series: &MeasurementSeries,
    first: usize,
    steps: usize,
    integrand: impl Fn(&Vec3) -> Mat3,
) -> Mat3 {
    let values = &series.values[first..=first + steps];
    let mut sum = (integrand(&values[0]) + integrand(&values[steps])) * 0.5;
    for a in &values[1..steps] {
        sum += integrand(a);
    }
    sum / steps as f64
}

/// `(1/T) ∫ [a]×ᵀ [a]× dτ` over `[t, t+T]` by the trapezoidal rule on the
/// sample grid.
pub fn excitation_gramian(series: &MeasurementSeries, t: f64, window: f64) -> Result<Mat3> {
    let (first, steps) = window_range(series, t, window)?;
    Ok(trapezoid_average(series, first, steps, |a| {
        let s = skew(a);
        s.transpose() * s
    }))
}

/// `(1/T) ∫ a aᵀ dτ` over `[t, t+T]`.
pub fn projection_average(series: &MeasurementSeries, t: f64, window: f64) -> Result<Mat3> {
    let (first, steps) = window_range(series, t, window)?;
    Ok(trapezoid_average(series, first, steps, |a| {
        a * a.transpose()
    }))
}

/// Minimum excitation margin over windows of length `window` starting every
/// `stride` seconds from the first sample.
pub fn pe_margin(series: &MeasurementSeries, window: f64, stride: f64) -> Result<PeReport> {
    if !(stride > 0.0) {
        return Err(Error::invalid(format!(
            "window stride must be positive, got {stride}"
        )));
    }
    let dt = series.dt();
    let steps = series.steps_for(window).max(1);
    if steps >= series.len() {
        return Err(Error::invalid(format!(
            "series of {:.3} s is not longer than the window {window} s",
            series.end() - series.start()
        )));
    }
    let stride_steps = series.steps_for(stride).max(1);
    let mut starts = Vec::new();
    let mut margins = Vec::new();
    let mut first = 0;
    while first + steps < series.len() {
        let gram = trapezoid_average(series, first, steps, |a| {
            let s = skew(a);
            s.transpose() * s
        });
        starts.push(series.times[first]);
        margins.push(sym_eigenvalues(&gram)?[0]);
        first += stride_steps;
    }
    let (worst, mu) = margins
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one window");
    Ok(PeReport {
        window: steps as f64 * dt,
        stride: stride_steps as f64 * dt,
        mu_empirical: mu,
        min_window_start: starts[worst],
        window_starts: starts,
        per_window_lambda_min: margins,
        verdict: PeVerdict::from_margin(mu),
        predicted: None,
    })
}

fn aligned(m: &Vec3, reference: &ReferenceVector) -> bool {
    let n = m.norm();
    n == 0.0 || m.cross(reference.vector()).norm() <= ALIGNMENT_TOL.sin() * n
}

/// Predicts excitation of `a(t) = R(t)ᵀå` for a free rotation from its
/// initial conditions. Errors for a torqued body, where no prediction is
/// available.
pub fn predict_pe(
    inertia: &InertiaModel,
    r0: &Rotation,
    omega0: &Vec3,
    reference: &ReferenceVector,
    torque: &TorqueModel,
) -> Result<PePrediction> {
    if !torque.is_zero() {
        return Err(Error::invalid(
            "excitation can only be predicted for free rotation (zero torque)",
        ));
    }
    let tol = ClassifyTolerances::default();
    let class = classify_trajectory(inertia, omega0, &tol);
    let momentum = r0 * &inertia.apply(omega0);
    let is_aligned = aligned(&momentum, reference);
    let (case, mu_theoretical) = match class {
        TrajectoryClass::Type1 { .. } if is_aligned => (PeCase::Type1Aligned, None),
        TrajectoryClass::Type1 { .. } => {
            let a1 = momentum.normalize().dot(reference.vector());
            let a1_sq = a1 * a1;
            (
                PeCase::GenericPe,
                Some((1.0 - a1_sq).min((1.0 + a1_sq) / 2.0)),
            )
        }
        TrajectoryClass::Type2 if is_aligned => (PeCase::Type2Aligned, None),
        _ => (PeCase::GenericPe, None),
    };
    Ok(PePrediction {
        case,
        mu_theoretical,
        trajectory: class.label(),
    })
}

/// Period of a sampled vector signal from the first strong peak of its
/// normalized autocorrelation. Long signals are decimated to at most 4000
/// points; the peak is refined by parabolic interpolation.
pub fn estimate_period(times: &[f64], samples: &[Vec3]) -> Option<f64> {
    if times.len() < 8 || times.len() != samples.len() {
        return None;
    }
    let decimation = samples.len().div_ceil(4000).max(1);
    let xs: Vec<Vec3> = samples.iter().step_by(decimation).copied().collect();
    let dt = (times[1] - times[0]) * decimation as f64;
    let n = xs.len();
    let mean = xs.iter().fold(Vec3::zeros(), |acc, x| acc + x) / n as f64;
    let centered: Vec<Vec3> = xs.iter().map(|x| x - mean).collect();
    let variance = centered.iter().map(|x| x.norm_squared()).sum::<f64>() / n as f64;
    if variance <= 1e-24 {
        return None;
    }
    let max_lag = n * 3 / 4;
    let corr: Vec<f64> = (0..max_lag)
        .map(|lag| {
            let m = n - lag;
            let s: f64 = (0..m).map(|i| centered[i].dot(&centered[i + lag])).sum();
            s / m as f64 / variance
        })
        .collect();
    // skip the central lobe, then take the first local maximum above 0.5
    let first_dip = corr.iter().position(|&r| r < 0.0)?;
    let peak = (first_dip + 1..max_lag - 1)
        .find(|&l| corr[l] > 0.5 && corr[l] >= corr[l - 1] && corr[l] >= corr[l + 1])?;
    let (ym, y0, yp) = (corr[peak - 1], corr[peak], corr[peak + 1]);
    let denom = ym - 2.0 * y0 + yp;
    let shift = if denom.abs() > 1e-15 {
        0.5 * (ym - yp) / denom
    } else {
        0.0
    };
    Some((peak as f64 + shift.clamp(-0.5, 0.5)) * dt)
}

/// Default excitation window for a free rotation: one rotation period for
/// type 1, `max(2π/ξ1, 2π/|ξ2|)` for type 4, and the autocorrelation period
/// of `ω` for type 3. `None` for type 2 and for a body at rest.
pub fn default_window(
    inertia: &InertiaModel,
    omega0: &Vec3,
    trajectory: &Trajectory,
) -> Option<f64> {
    match classify_trajectory(inertia, omega0, &ClassifyTolerances::default()) {
        TrajectoryClass::Type1 { axis: None } => None,
        TrajectoryClass::Type1 { .. } => Some(TAU / omega0.norm()),
        TrajectoryClass::Type4 { .. } => {
            let p = type4_params(inertia, omega0).ok()?;
            Some((TAU / p.xi1).max(TAU / p.xi2.abs()))
        }
        TrajectoryClass::Type3 => {
            let omegas: Vec<Vec3> = trajectory.states.iter().map(|s| s.omega).collect();
            estimate_period(&trajectory.times, &omegas)
        }
        TrajectoryClass::Type2 => None,
    }
}
