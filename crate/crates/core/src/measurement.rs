//! Single reference-vector measurements `a(t) = R(t)ᵀ å` and the sensor
//! model (mounting rotation plus additive white Gaussian noise).
//!
//! Noise is drawn from ChaCha20 seeded with `seed_from_u64(seed)` and mapped
//! to normal deviates by `rand_distr::StandardNormal`. Both are portable and
//! value-stable, so a seed pins every output bit.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::geometry::{Rotation, Vec3};

/// Generator used for all sensor noise.
pub type SensorRng = ChaCha20Rng;

/// Constant inertial-frame unit vector `å`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceVector(Vec3);

impl ReferenceVector {
    /// Accepts `v` only if it is unit-norm within 1e-12.
    pub fn new(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "reference vector must be unit-norm (|å| = {n})"
            )));
        }
        Ok(ReferenceVector(v))
    }

    /// Normalizes a nonzero finite vector.
    pub fn normalized(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::invalid(
                "reference vector must be nonzero and finite",
            ));
        }
        Ok(ReferenceVector(v / n))
    }

    pub fn vector(&self) -> &Vec3 {
        &self.0
    }
}

/// Sensor mounting, noise level and noise seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorModel {
    /// Sensor-to-body mounting `R_mb`; raw readings are `y = R_mb a + n`.
    pub mounting: Rotation,
    /// White-noise density in Hz^(-1/2).
    pub noise_density: f64,
    pub seed: u64,
    /// Rescale noisy readings to unit norm (when their norm exceeds 0.5).
    pub renormalize: bool,
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel {
            mounting: Rotation::identity(),
            noise_density: 0.0,
            seed: 0,
            renormalize: false,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_density.is_finite() && self.noise_density >= 0.0) {
            return Err(Error::invalid(format!(
                "noise density must be non-negative, got {}",
                self.noise_density
            )));
        }
        Ok(())
    }

    pub fn rng(&self) -> SensorRng {
        SensorRng::seed_from_u64(self.seed)
    }

    /// Noise-free sensor with the same mounting.
    pub fn noiseless(&self) -> SensorModel {
        SensorModel {
            noise_density: 0.0,
            ..*self
        }
    }
}

/// Per-sample standard deviation `σ/√(2·dt)` of white noise with density
/// `σ` sampled every `dt` seconds.
pub fn per_sample_sigma(noise_density: f64, dt: f64) -> f64 {
    noise_density / (2.0 * dt).sqrt()
}

/// `R(t)ᵀ å`.
pub fn measure_clean(attitude: &Rotation, reference: &ReferenceVector) -> Vec3 {
    attitude.transpose_mul(reference.vector())
}

/// Passes a clean body-frame sample through the sensor: rotate into the
/// sensor frame, add noise, rotate back to the body frame.
pub fn apply_sensor(clean: &Vec3, sensor: &SensorModel, dt: f64, rng: &mut SensorRng) -> Vec3 {
    let noise = draw_noise(sensor, dt, rng);
    sensor_reading(clean, sensor, &noise)
}

/// One sensor-frame noise vector. Draws nothing when the noise level is
/// zero.
pub fn draw_noise(sensor: &SensorModel, dt: f64, rng: &mut SensorRng) -> Vec3 {
    let sigma = per_sample_sigma(sensor.noise_density, dt);
    if sigma == 0.0 {
        return Vec3::zeros();
    }
    Vec3::new(
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
    ) * sigma
}

/// Body-frame reading `R_mbᵀ (R_mb a + n)` for a given sensor-frame noise
/// vector `n`; a zero `n` returns `a` unchanged.
pub fn sensor_reading(clean: &Vec3, sensor: &SensorModel, noise: &Vec3) -> Vec3 {
    if *noise == Vec3::zeros() {
        return *clean;
    }
    let raw = sensor.mounting * *clean + noise;
    let body = sensor.mounting.transpose_mul(&raw);
    if sensor.renormalize {
        let n = body.norm();
        if n > 0.5 {
            return body / n;
        }
    }
    body
}

/// Uniformly sampled body-frame measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSeries {
    pub times: Vec<f64>,
    pub values: Vec<Vec3>,
}

impl MeasurementSeries {
    /// Checks that times are uniformly spaced (to 1e-9 relative) and
    /// match the values.
    pub fn new(times: Vec<f64>, values: Vec<Vec3>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} times but {} measurement values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::invalid(
                "measurement series needs at least two samples",
            ));
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(Error::invalid("measurement times must increase"));
        }
        for (n, t) in times.iter().enumerate() {
            let expected = times[0] + n as f64 * dt;
            if (t - expected).abs() > 1e-9 * expected.abs().max(1.0) {
                return Err(Error::invalid(format!(
                    "measurement times are not uniform at sample {n} (t = {t})"
                )));
            }
        }
        Ok(MeasurementSeries { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("non-empty series")
    }

    /// Index of the sample at time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.start()) / self.dt();
        let n = x.round();
        if n < 0.0 || (x - n).abs() > 1e-6 || n as usize >= self.len() {
            return None;
        }
        Some(n as usize)
    }

    /// Number of grid steps spanning `duration` seconds.
    pub fn steps_for(&self, duration: f64) -> usize {
        (duration / self.dt()).round() as usize
    }

    pub(crate) fn window_error(&self, start: f64, end: f64) -> Error {
        Error::WindowOutOfRange {
            start,
            end,
            first: self.start(),
            last: self.end(),
        }
    }
}

/// Clean measurements along a simulated trajectory.
pub fn measure_trajectory(
    trajectory: &Trajectory,
    reference: &ReferenceVector,
) -> MeasurementSeries {
    MeasurementSeries {
        times: trajectory.times.clone(),
        values: trajectory
            .states
            .iter()
            .map(|s| measure_clean(&s.attitude, reference))
            .collect(),
    }
}

/// Measurements along a trajectory passed through `sensor`. Noise is drawn
/// sample by sample from `sensor.rng()`.
pub fn sense_trajectory(
    trajectory: &Trajectory,
    reference: &ReferenceVector,
    sensor: &SensorModel,
) -> MeasurementSeries {
    let dt = if trajectory.len() > 1 {
        trajectory.times[1] - trajectory.times[0]
    } else {
        1.0
    };
    let mut rng = sensor.rng();
    MeasurementSeries {
        times: trajectory.times.clone(),
        values: trajectory
            .states
            .iter()
            .map(|s| apply_sensor(&measure_clean(&s.attitude, reference), sensor, dt, &mut rng))
            .collect(),
    }
}
