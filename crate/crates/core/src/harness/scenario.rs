//! Scenario files: JSON description of one experiment.

use std::path::Path;

use serde::Deserialize;

use crate::dynamics::{InertiaModel, RigidBodyState, TimeGrid, TorqueModel, KG_CM2_TO_SI};
use crate::error::{Error, Result};
use crate::geometry::{Mat3, Rotation, Vec3};
use crate::measurement::{ReferenceVector, SensorModel};
use crate::observer::{ObserverConfig, ObserverState};

/// Default white-noise density used when a scenario enables noise without
/// giving one.
pub const DEFAULT_NOISE_DENSITY: f64 = 0.03;

/// Accepted deviation of the reference vector norm from 1 in a file.
pub const REFERENCE_NORM_TOL: f64 = 1e-9;

const BUNDLED: &[(&str, &str)] = &[
    (
        "cubesat-type3",
        include_str!("../../scenarios/cubesat-type3.json"),
    ),
    (
        "cubesat-type3-noisy",
        include_str!("../../scenarios/cubesat-type3-noisy.json"),
    ),
    (
        "cubesat-type1-aligned",
        include_str!("../../scenarios/cubesat-type1-aligned.json"),
    ),
    (
        "cubesat-type1-tilted",
        include_str!("../../scenarios/cubesat-type1-tilted.json"),
    ),
    (
        "symmetric-type4",
        include_str!("../../scenarios/symmetric-type4.json"),
    ),
    (
        "separatrix-type2",
        include_str!("../../scenarios/separatrix-type2.json"),
    ),
];

/// Names of the scenarios compiled into the library.
pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(name, _)| *name)
}

/// JSON text of a bundled scenario.
pub fn bundled_source(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| *src)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    description: Option<String>,
    inertia: InertiaSpec,
    #[serde(default)]
    torque: TorqueSpec,
    #[serde(default)]
    attitude: Option<AttitudeSpec>,
    omega0: [f64; 3],
    reference: [f64; 3],
    #[serde(default)]
    sensor: SensorSpec,
    grid: GridSpec,
    observer: ObserverSpec,
    #[serde(default)]
    pe: PeSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InertiaSpec {
    values: [f64; 3],
    unit: InertiaUnit,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InertiaUnit {
    KgM2,
    KgCm2,
}

#[derive(Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum TorqueSpec {
    #[default]
    Zero,
    Constant {
        value: [f64; 3],
    },
    /// `amplitude · sin(2π·frequency·t + phase)`, componentwise.
    Sinusoid {
        amplitude: [f64; 3],
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum AttitudeSpec {
    /// Any nonzero axis; it is normalized on load.
    AxisAngle { axis: [f64; 3], angle: f64 },
    /// Row-major entries.
    Matrix([f64; 9]),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensorSpec {
    #[serde(default)]
    enabled: bool,
    #[serde(default = "default_noise_density")]
    noise_density: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    renormalize: bool,
    #[serde(default)]
    mounting: Option<AttitudeSpec>,
}

impl Default for SensorSpec {
    fn default() -> Self {
        SensorSpec {
            enabled: false,
            noise_density: DEFAULT_NOISE_DENSITY,
            seed: 0,
            renormalize: false,
            mounting: None,
        }
    }
}

fn default_noise_density() -> f64 {
    DEFAULT_NOISE_DENSITY
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    dt: f64,
    duration: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObserverSpec {
    k: f64,
    #[serde(default)]
    init: Option<InitSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitSpec {
    a_hat: [f64; 3],
    omega_hat: [f64; 3],
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PeSpec {
    #[serde(default)]
    window: Option<f64>,
    #[serde(default)]
    stride: Option<f64>,
}

/// A validated experiment.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub description: Option<String>,
    pub inertia: InertiaModel,
    pub torque: TorqueModel,
    pub initial: RigidBodyState,
    pub reference: ReferenceVector,
    /// Sensor parameters; noise is only applied when `noise_enabled`.
    pub sensor: SensorModel,
    pub noise_enabled: bool,
    pub grid: TimeGrid,
    pub observer: ObserverConfig,
    /// Excitation window `T`; when absent it is derived from the trajectory
    /// type where possible.
    pub pe_window: Option<f64>,
    pub pe_stride: Option<f64>,
}

fn schema(path: &str, err: impl std::fmt::Display) -> Error {
    Error::Schema {
        path: path.to_string(),
        message: err.to_string(),
    }
}

fn finite3(path: &str, v: [f64; 3]) -> Result<Vec3> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(Vec3::from(v))
    } else {
        Err(schema(path, "entries must be finite"))
    }
}

fn rotation(path: &str, spec: &AttitudeSpec) -> Result<Rotation> {
    match spec {
        AttitudeSpec::AxisAngle { axis, angle } => {
            let axis = finite3(&format!("{path}.axis_angle.axis"), *axis)?;
            if axis.norm() == 0.0 {
                return Err(schema(
                    &format!("{path}.axis_angle.axis"),
                    "axis must be nonzero",
                ));
            }
            Rotation::about_axis(&axis.normalize(), *angle)
                .map_err(|e| schema(&format!("{path}.axis_angle"), e))
        }
        AttitudeSpec::Matrix(m) => Rotation::from_matrix(Mat3::from_row_slice(m))
            .map_err(|e| schema(&format!("{path}.matrix"), e)),
    }
}

impl Scenario {
    /// Parses and validates scenario JSON. Errors carry the offending field
    /// path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            schema(&path, e.into_inner())
        })?;
        Self::validate(file)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// One of the scenarios listed by [`bundled_names`].
    pub fn bundled(name: &str) -> Result<Self> {
        let src = bundled_source(name).ok_or_else(|| {
            let known: Vec<_> = bundled_names().collect();
            Error::invalid(format!(
                "unknown bundled scenario `{name}` (known: {})",
                known.join(", ")
            ))
        })?;
        Self::from_json(src)
    }

    fn validate(file: ScenarioFile) -> Result<Self> {
        let scale = match file.inertia.unit {
            InertiaUnit::KgM2 => 1.0,
            InertiaUnit::KgCm2 => KG_CM2_TO_SI,
        };
        let [j1, j2, j3] = file.inertia.values;
        let inertia = InertiaModel::new(j1 * scale, j2 * scale, j3 * scale)
            .map_err(|e| schema("inertia.values", e))?;

        let torque = match file.torque {
            TorqueSpec::Zero => TorqueModel::Zero,
            TorqueSpec::Constant { value } => {
                TorqueModel::Constant(finite3("torque.value", value)?)
            }
            TorqueSpec::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                let amplitude = finite3("torque.amplitude", amplitude)?;
                if !(frequency.is_finite() && phase.is_finite()) {
                    return Err(schema(
                        "torque.frequency",
                        "frequency and phase must be finite",
                    ));
                }
                let w = 2.0 * std::f64::consts::PI * frequency;
                TorqueModel::Function(std::sync::Arc::new(move |t| {
                    amplitude * (w * t + phase).sin()
                }))
            }
        };

        let attitude = match &file.attitude {
            Some(spec) => rotation("attitude", spec)?,
            None => Rotation::identity(),
        };
        let omega0 = finite3("omega0", file.omega0)?;

        let reference = finite3("reference", file.reference)?;
        if (reference.norm() - 1.0).abs() > REFERENCE_NORM_TOL {
            return Err(schema(
                "reference",
                format!("must be a unit vector (norm {} differs from 1 by more than {REFERENCE_NORM_TOL})", reference.norm()),
            ));
        }
        let reference =
            ReferenceVector::normalized(reference).map_err(|e| schema("reference", e))?;

        let mounting = match &file.sensor.mounting {
            Some(spec) => rotation("sensor.mounting", spec)?,
            None => Rotation::identity(),
        };
        let sensor = SensorModel {
            mounting,
            noise_density: file.sensor.noise_density,
            seed: file.sensor.seed,
            renormalize: file.sensor.renormalize,
        };
        sensor
            .validate()
            .map_err(|e| schema("sensor.noise_density", e))?;

        let grid =
            TimeGrid::new(file.grid.dt, file.grid.duration).map_err(|e| schema("grid", e))?;

        let mut observer =
            ObserverConfig::new(file.observer.k).map_err(|e| schema("observer.k", e))?;
        if let Some(init) = file.observer.init {
            observer = observer.with_init(ObserverState {
                a_hat: finite3("observer.init.a_hat", init.a_hat)?,
                omega_hat: finite3("observer.init.omega_hat", init.omega_hat)?,
            });
        }

        for (path, value) in [("pe.window", file.pe.window), ("pe.stride", file.pe.stride)] {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(schema(path, format!("must be positive, got {v}")));
                }
            }
        }

        Ok(Scenario {
            name: file.name,
            description: file.description,
            inertia,
            torque,
            initial: RigidBodyState::new(attitude, omega0),
            reference,
            sensor,
            noise_enabled: file.sensor.enabled,
            grid,
            observer,
            pe_window: file.pe.window,
            pe_stride: file.pe.stride,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sensor.seed = seed;
        self
    }

    pub fn with_noise(mut self, enabled: bool) -> Self {
        self.noise_enabled = enabled;
        self
    }

    /// Replaces the observer gain, keeping any initial-estimate override.
    pub fn with_gain(mut self, gain: f64) -> Result<Self> {
        let init = self.observer.init;
        self.observer = ObserverConfig::new(gain)?;
        if let Some(init) = init {
            self.observer = self.observer.with_init(init);
        }
        Ok(self)
    }

    /// The sensor as actually applied: noise-free unless noise is enabled.
    pub fn effective_sensor(&self) -> SensorModel {
        if self.noise_enabled {
            self.sensor
        } else {
            self.sensor.noiseless()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "minimal",
        "inertia": {"values": [87, 83, 37], "unit": "kg_cm2"},
        "omega0": [0.1, 0.2, 0.3],
        "reference": [0, 0, 1],
        "grid": {"dt": 0.01, "duration": 1},
        "observer": {"k": 1}
    }"#;

    fn with(field: &str, value: &str) -> String {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        let mut target = &mut v;
        let parts: Vec<_> = field.split('.').collect();
        for p in &parts[..parts.len() - 1] {
            target = target.get_mut(*p).unwrap();
        }
        target[parts[parts.len() - 1]] = serde_json::from_str(value).unwrap();
        v.to_string()
    }

    fn schema_path(text: &str) -> String {
        match Scenario::from_json(text) {
            Err(Error::Schema { path, .. }) => path,
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_scenario_defaults() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        assert_eq!(s.inertia.moments(), [87.0 * 1e-4, 83.0 * 1e-4, 37.0 * 1e-4]);
        assert!(s.torque.is_zero());
        assert_eq!(s.initial.attitude, Rotation::identity());
        assert!(!s.noise_enabled);
        assert_eq!(s.sensor.noise_density, DEFAULT_NOISE_DENSITY);
        assert_eq!(s.effective_sensor().noise_density, 0.0);
        assert_eq!(s.grid.len(), 101);
        assert!(s.pe_window.is_none());
    }

    #[test]
    fn all_bundled_scenarios_load() {
        for name in bundled_names() {
            let s = Scenario::bundled(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.name, name);
        }
        assert!(Scenario::bundled("nope").is_err());
    }

    #[test]
    fn field_paths_in_diagnostics() {
        assert_eq!(schema_path(&with("grid.dt", "-1")), "grid");
        assert_eq!(schema_path(&with("grid.dt", "\"fast\"")), "grid.dt");
        assert_eq!(
            schema_path(&with("inertia.unit", "\"g_mm2\"")),
            "inertia.unit"
        );
        assert_eq!(
            schema_path(&with("inertia.values", "[1, 1, 5]")),
            "inertia.values"
        );
        assert_eq!(schema_path(&with("reference", "[0, 0, 2]")), "reference");
        assert_eq!(schema_path(&with("observer.k", "0")), "observer.k");
        assert_eq!(
            schema_path(&with("sensor", r#"{"noise_density": -0.1}"#)),
            "sensor.noise_density"
        );
        assert_eq!(
            schema_path(&with("sensor", r#"{"colour": 1}"#)),
            "sensor.colour"
        );
        assert_eq!(
            schema_path(&with(
                "attitude",
                r#"{"axis_angle": {"axis": [0, 0, 0], "angle": 1}}"#
            )),
            "attitude.axis_angle.axis"
        );
        assert_eq!(schema_path(&with("omega0", "[1, 2]")), "omega0");
        assert_eq!(
            schema_path(&with("attitude", r#"{"matrix": [1,0,0, 0,1,0, 0,0,-1]}"#)),
            "attitude.matrix"
        );
    }

    #[test]
    fn attitude_and_torque_forms() {
        let s = Scenario::from_json(&with(
            "attitude",
            r#"{"axis_angle": {"axis": [0, 0, 2], "angle": 0.5}}"#,
        ))
        .unwrap();
        let expected = Rotation::about_axis(&Vec3::new(0.0, 0.0, 1.0), 0.5).unwrap();
        assert!((s.initial.attitude.matrix() - expected.matrix()).amax() < 1e-15);
        let s = Scenario::from_json(&with(
            "torque",
            r#"{"kind": "sinusoid", "amplitude": [1, 0, 0], "frequency": 0.25}"#,
        ))
        .unwrap();
        assert!((s.torque.at(1.0).x - 1.0).abs() < 1e-15);
        let s = Scenario::from_json(&with(
            "torque",
            r#"{"kind": "constant", "value": [0, 2, 0]}"#,
        ))
        .unwrap();
        assert_eq!(s.torque.at(3.0), Vec3::new(0.0, 2.0, 0.0));
    }

    #[test]
    fn overrides() {
        let s = Scenario::from_json(MINIMAL)
            .unwrap()
            .with_seed(9)
            .with_noise(true)
            .with_gain(5.0)
            .unwrap();
        assert_eq!(s.sensor.seed, 9);
        assert_eq!(s.effective_sensor().noise_density, DEFAULT_NOISE_DENSITY);
        assert_eq!(s.observer.gain, 5.0);
        assert!(Scenario::from_json(MINIMAL)
            .unwrap()
            .with_gain(-1.0)
            .is_err());
    }
}
