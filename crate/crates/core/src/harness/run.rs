//! Experiment pipelines behind the command-line tool.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::output::{write_json, write_measurements, write_observer, write_trajectory};
use super::scenario::Scenario;
use crate::dynamics::{distordance, free_rotation_omega_bound, simulate, Trajectory};
use crate::error::{Error, Result};
use crate::ltv::{estimate_decay, DecayEstimate};
use crate::measurement::{measure_trajectory, sense_trajectory, MeasurementSeries};
use crate::observer::{convergence_budget, d_star, run_paired, ConvergenceBudget, PairedRun};
use crate::pe::{default_window, pe_margin, predict_pe, PeReport};

/// Fraction of the run, counted from the end, treated as steady state.
pub const STEADY_STATE_FRACTION: f64 = 0.25;

/// Relative error level used for the time-to-convergence metric.
pub const CONVERGED_LEVEL: f64 = 0.01;

/// Window stride used when none is given: a tenth of the window.
pub fn default_stride(window: f64) -> f64 {
    window / 10.0
}

/// Error metrics of an observer run, computed from `t`, the true `ω` and the
/// error `ω̃` alone so they can be reproduced from the written files.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorMetrics {
    pub final_omega_error: f64,
    /// `|ω̃(end)| / |ω(0)|`.
    pub final_relative_error: f64,
    /// `sqrt(Σ|ω̃|² / Σ|ω|²)` over the last quarter of the samples.
    pub steady_state_rms_relative_error: f64,
    /// First time after which `|ω̃|/|ω(0)|` stays below 1%.
    pub time_to_1pct: Option<f64>,
}

pub fn error_metrics(times: &[f64], omega: &[[f64; 3]], omega_tilde: &[[f64; 3]]) -> ErrorMetrics {
    let norm = |v: &[f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let n = times.len();
    let scale = norm(&omega[0]);
    let final_omega_error = norm(&omega_tilde[n - 1]);
    let first_steady = n - ((n as f64 * STEADY_STATE_FRACTION).ceil() as usize).clamp(1, n);
    let (mut err_sq, mut ref_sq) = (0.0, 0.0);
    for i in first_steady..n {
        err_sq += norm(&omega_tilde[i]).powi(2);
        ref_sq += norm(&omega[i]).powi(2);
    }
    let last_bad = (0..n)
        .rev()
        .find(|&i| !(norm(&omega_tilde[i]) < CONVERGED_LEVEL * scale));
    let time_to_1pct = match last_bad {
        None => Some(times[0]),
        Some(i) if i + 1 < n => Some(times[i + 1]),
        Some(_) => None,
    };
    ErrorMetrics {
        final_omega_error,
        final_relative_error: final_omega_error / scale,
        steady_state_rms_relative_error: (err_sq / ref_sq).sqrt(),
        time_to_1pct,
    }
}

/// Scalar results of one observer run.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub gain: f64,
    pub noise: bool,
    pub seed: u64,
    pub dt: f64,
    pub duration: f64,
    pub omega0_norm: f64,
    #[serde(flatten)]
    pub errors: ErrorMetrics,
    pub omega_max: f64,
    pub distordance: f64,
    pub pe_window: Option<f64>,
    pub mu_empirical: Option<f64>,
    pub pe_verdict: Option<String>,
    pub pe_predicted: Option<String>,
    pub c_hat: Option<f64>,
    pub d_star: Option<f64>,
    pub r: Option<f64>,
    pub d_below_d_star: Option<bool>,
}

/// `ω_max` used in bounds: the free-rotation invariant bound when there is no
/// torque, otherwise the largest simulated `|ω|`.
pub fn omega_max(scenario: &Scenario, trajectory: &Trajectory) -> f64 {
    if scenario.torque.is_zero() {
        free_rotation_omega_bound(&scenario.inertia, &scenario.initial.omega)
    } else {
        trajectory.max_omega()
    }
}

/// Simulated body trajectory and its sensor readings.
pub fn simulate_scenario(scenario: &Scenario) -> Result<(Trajectory, MeasurementSeries)> {
    let trajectory = simulate(
        &scenario.inertia,
        &scenario.torque,
        &scenario.initial,
        &scenario.grid,
    )?;
    let series = sense_trajectory(
        &trajectory,
        &scenario.reference,
        &scenario.effective_sensor(),
    );
    Ok((trajectory, series))
}

/// Scenario window, else the default for the free-rotation type.
pub fn resolve_window(
    scenario: &Scenario,
    trajectory: &Trajectory,
    requested: Option<f64>,
) -> Option<f64> {
    requested.or(scenario.pe_window).or_else(|| {
        if scenario.torque.is_zero() {
            default_window(&scenario.inertia, &scenario.initial.omega, trajectory)
        } else {
            None
        }
    })
}

/// Excitation report on the noise-free direction series, with the free-rotation
/// prediction attached when the body is torque-free.
pub fn pe_report(scenario: &Scenario, trajectory: &Trajectory, window: f64) -> Result<PeReport> {
    let clean = measure_trajectory(trajectory, &scenario.reference);
    let stride = scenario.pe_stride.unwrap_or_else(|| default_stride(window));
    let mut report = pe_margin(&clean, window, stride)?;
    if scenario.torque.is_zero() {
        report.predicted = Some(predict_pe(
            &scenario.inertia,
            &scenario.initial.attitude,
            &scenario.initial.omega,
            &scenario.reference,
            &scenario.torque,
        )?);
    }
    Ok(report)
}

/// Everything produced by an observer run.
pub struct ObserveOutcome {
    pub run: PairedRun,
    pub pe: Option<PeReport>,
    pub decay: Option<DecayEstimate>,
    pub budget: Option<ConvergenceBudget>,
    pub summary: Summary,
}

/// Simulation, measurement, observer and scalar summary for one scenario.
pub fn observe_scenario(scenario: &Scenario) -> Result<ObserveOutcome> {
    let sensor = scenario.effective_sensor();
    let run = run_paired(
        &scenario.inertia,
        &scenario.torque,
        &scenario.initial,
        &scenario.reference,
        &sensor,
        &scenario.grid,
        &scenario.observer,
    )?;
    let gain = scenario.observer.gain;
    let errors = run
        .observer
        .errors
        .as_ref()
        .expect("paired runs carry errors");
    let omega: Vec<[f64; 3]> = run
        .trajectory
        .states
        .iter()
        .map(|s| s.omega.into())
        .collect();
    let omega_tilde: Vec<[f64; 3]> = errors.iter().map(|e| e.omega_tilde.into()).collect();
    let metrics = error_metrics(&run.trajectory.times, &omega, &omega_tilde);

    let w_max = omega_max(scenario, &run.trajectory);
    let d = distordance(&scenario.inertia);
    let window = resolve_window(scenario, &run.trajectory, None);
    let (pe, decay, budget) = match window {
        Some(t) if t < scenario.grid.duration() => {
            let pe = pe_report(scenario, &run.trajectory, t)?;
            let clean = measure_trajectory(&run.trajectory, &scenario.reference);
            // a run shorter than window + stride leaves the decay unreported
            let decay = estimate_decay(&clean, gain, t, pe.stride).ok();
            let budget = decay
                .as_ref()
                .filter(|e| e.c_hat < 1.0 && e.c_hat > 0.0)
                .map(|e| convergence_budget(&pe, d, gain, w_max, e.c_hat))
                .transpose()?;
            (Some(pe), decay, budget)
        }
        _ => (None, None, None),
    };

    let summary = Summary {
        scenario: scenario.name.clone(),
        gain,
        noise: scenario.noise_enabled,
        seed: scenario.sensor.seed,
        dt: scenario.grid.dt(),
        duration: scenario.grid.duration(),
        omega0_norm: scenario.initial.omega.norm(),
        errors: metrics,
        omega_max: w_max,
        distordance: d,
        pe_window: pe.as_ref().map(|p| p.window),
        mu_empirical: pe.as_ref().map(|p| p.mu_empirical),
        pe_verdict: pe.as_ref().map(|p| p.verdict.label().to_string()),
        pe_predicted: pe
            .as_ref()
            .and_then(|p| p.predicted.as_ref())
            .map(|p| p.verdict().label().to_string()),
        c_hat: decay.as_ref().map(|e| e.c_hat),
        d_star: decay
            .as_ref()
            .filter(|e| e.c_hat < 1.0)
            .map(|e| d_star(e.c_hat, e.window, w_max)),
        r: budget.as_ref().map(|b| b.r),
        d_below_d_star: budget.as_ref().map(|b| b.d_below_d_star),
    };
    Ok(ObserveOutcome {
        run,
        pe,
        decay,
        budget,
        summary,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Writes `trajectory.csv` and `measurements.csv`.
pub fn write_simulation(
    dir: &Path,
    trajectory: &Trajectory,
    series: &MeasurementSeries,
) -> Result<()> {
    create_dir(dir)?;
    write_trajectory(&dir.join("trajectory.csv"), trajectory)?;
    write_measurements(&dir.join("measurements.csv"), series)
}

/// Writes the full set of observer-run files.
pub fn write_observe(dir: &Path, outcome: &ObserveOutcome) -> Result<()> {
    write_simulation(dir, &outcome.run.trajectory, &outcome.run.measurements)?;
    write_observer(&dir.join("observer.csv"), &outcome.run.observer)?;
    if let Some(pe) = &outcome.pe {
        write_json(&dir.join("pe_report.json"), pe)?;
    }
    write_json(&dir.join("summary.json"), &outcome.summary)
}

/// One line of the gain-sweep comparison table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: f64,
    pub time_to_1pct: Option<f64>,
    pub final_omega_error: f64,
    pub final_relative_error: f64,
    pub steady_state_rms_relative_error: f64,
}

pub struct SweepOutcome {
    /// Gains dropped as duplicates, in input order.
    pub duplicates: Vec<f64>,
    pub runs: Vec<(f64, ObserveOutcome)>,
}

impl SweepOutcome {
    pub fn rows(&self) -> Vec<SweepRow> {
        self.runs
            .iter()
            .map(|(k, o)| SweepRow {
                k: *k,
                time_to_1pct: o.summary.errors.time_to_1pct,
                final_omega_error: o.summary.errors.final_omega_error,
                final_relative_error: o.summary.errors.final_relative_error,
                steady_state_rms_relative_error: o.summary.errors.steady_state_rms_relative_error,
            })
            .collect()
    }
}

/// Runs the observer once per distinct gain, concurrently.
pub fn gain_sweep(scenario: &Scenario, gains: &[f64]) -> Result<SweepOutcome> {
    if gains.is_empty() {
        return Err(Error::invalid("gain list is empty"));
    }
    let mut distinct: Vec<f64> = Vec::new();
    let mut duplicates = Vec::new();
    for &k in gains {
        if distinct.contains(&k) {
            duplicates.push(k);
        } else {
            distinct.push(k);
        }
    }
    let scenarios = distinct
        .iter()
        .map(|&k| scenario.clone().with_gain(k))
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<Result<ObserveOutcome>> = std::thread::scope(|s| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|sc| s.spawn(move || observe_scenario(sc)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("gain-sweep worker panicked"))
            .collect()
    });
    let runs = distinct
        .into_iter()
        .zip(results)
        .map(|(k, r)| r.map(|o| (k, o)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutcome { duplicates, runs })
}

/// Directory for one gain of a sweep.
pub fn sweep_run_dir(out: &Path, k: f64) -> PathBuf {
    out.join(format!("k_{k}"))
}

pub fn write_sweep(dir: &Path, outcome: &SweepOutcome) -> Result<()> {
    create_dir(dir)?;
    for (k, run) in &outcome.runs {
        write_observe(&sweep_run_dir(dir, *k), run)?;
    }
    let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
    for row in outcome.rows() {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Decay estimate for a given gain and window, with the resulting budget.
#[derive(Clone, Debug, Serialize)]
pub struct DecayOutcome {
    pub scenario: String,
    pub decay: DecayEstimate,
    pub pe: PeReport,
    pub distordance: f64,
    pub omega_max: f64,
    /// Present when `0 < c_hat < 1`.
    pub budget: Option<ConvergenceBudget>,
}

pub fn decay_scenario(scenario: &Scenario, gain: f64, window: f64) -> Result<DecayOutcome> {
    if !(gain.is_finite() && gain > 0.0) {
        return Err(Error::invalid(format!("gain must be positive, got {gain}")));
    }
    let trajectory = simulate(
        &scenario.inertia,
        &scenario.torque,
        &scenario.initial,
        &scenario.grid,
    )?;
    let clean = measure_trajectory(&trajectory, &scenario.reference);
    let pe = pe_report(scenario, &trajectory, window)?;
    let decay = estimate_decay(&clean, gain, window, pe.stride)?;
    let d = distordance(&scenario.inertia);
    let w_max = omega_max(scenario, &trajectory);
    let budget = if decay.c_hat > 0.0 && decay.c_hat < 1.0 {
        Some(convergence_budget(&pe, d, gain, w_max, decay.c_hat)?)
    } else {
        None
    };
    Ok(DecayOutcome {
        scenario: scenario.name.clone(),
        decay,
        pe,
        distordance: d,
        omega_max: w_max,
        budget,
    })
}
