//! Plot-ready CSV and JSON writers.
//!
//! Numbers are written in the shortest decimal form that parses back to the
//! same `f64`, so anything recomputed from the files matches the in-process
//! values bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::measurement::MeasurementSeries;
use crate::observer::ObserverRun;

pub const TRAJECTORY_HEADER: [&str; 13] = [
    "t", "q11", "q12", "q13", "q21", "q22", "q23", "q31", "q32", "q33", "w1", "w2", "w3",
];
pub const MEASUREMENT_HEADER: [&str; 4] = ["t", "a1", "a2", "a3"];
pub const OBSERVER_HEADER: [&str; 14] = [
    "t", "ahat1", "ahat2", "ahat3", "what1", "what2", "what3", "atil1", "atil2", "atil3", "wtil1",
    "wtil2", "wtil3", "err_norm",
];

/// Shortest round-trip decimal text of `x`.
pub fn format_f64(x: f64) -> String {
    format!("{x}")
}

fn write_rows<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: impl Iterator<Item = [f64; N]>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| format_f64(*x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory(path: &Path, trajectory: &Trajectory) -> Result<()> {
    let rows = trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .map(|(t, s)| {
            let r = s.attitude.matrix();
            let w = s.omega;
            [
                *t,
                r[(0, 0)],
                r[(0, 1)],
                r[(0, 2)],
                r[(1, 0)],
                r[(1, 1)],
                r[(1, 2)],
                r[(2, 0)],
                r[(2, 1)],
                r[(2, 2)],
                w.x,
                w.y,
                w.z,
            ]
        });
    write_rows(path, TRAJECTORY_HEADER, rows)
}

pub fn write_measurements(path: &Path, series: &MeasurementSeries) -> Result<()> {
    let rows = series
        .times
        .iter()
        .zip(&series.values)
        .map(|(t, a)| [*t, a.x, a.y, a.z]);
    write_rows(path, MEASUREMENT_HEADER, rows)
}

/// Writes estimates and errors; the run must carry errors.
pub fn write_observer(path: &Path, run: &ObserverRun) -> Result<()> {
    let errors = run
        .errors
        .as_ref()
        .ok_or_else(|| Error::invalid("observer run has no error series"))?;
    let rows = run
        .times
        .iter()
        .zip(&run.estimates)
        .zip(errors)
        .map(|((t, x), e)| {
            let (a, w, at, wt) = (x.a_hat, x.omega_hat, e.a_tilde, e.omega_tilde);
            [
                *t,
                a.x,
                a.y,
                a.z,
                w.x,
                w.y,
                w.z,
                at.x,
                at.y,
                at.z,
                wt.x,
                wt.y,
                wt.z,
                e.norm(),
            ]
        });
    write_rows(path, OBSERVER_HEADER, rows)
}

/// Writes `value` as pretty JSON followed by a newline.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// A numeric CSV read back into memory.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::invalid(format!("bad number `{f}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, InertiaModel, RigidBodyState, TimeGrid, TorqueModel};
    use crate::geometry::{Rotation, Vec3};
    use crate::measurement::{measure_trajectory, ReferenceVector};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn format_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(format_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let j = InertiaModel::from_kg_cm2(87.0, 83.0, 37.0).unwrap();
        let s0 = RigidBodyState::new(Rotation::identity(), Vec3::new(0.3, -0.2, 0.7));
        let traj = simulate(
            &j,
            &TorqueModel::Zero,
            &s0,
            &TimeGrid::new(0.01, 1.0).unwrap(),
        )
        .unwrap();
        let series = measure_trajectory(
            &traj,
            &ReferenceVector::new(Vec3::new(0.0, 0.6, 0.8)).unwrap(),
        );

        let p = dir.path().join("traj.csv");
        write_trajectory(&p, &traj).unwrap();
        let table = Table::read(&p).unwrap();
        assert_eq!(table.header, TRAJECTORY_HEADER);
        assert_eq!(table.rows.len(), traj.len());
        assert_eq!(table.column("t").unwrap(), traj.times);
        let w2: Vec<f64> = traj.states.iter().map(|s| s.omega.y).collect();
        assert_eq!(table.column("w2").unwrap(), w2);
        let q23: Vec<f64> = traj
            .states
            .iter()
            .map(|s| s.attitude.matrix()[(1, 2)])
            .collect();
        assert_eq!(table.column("q23").unwrap(), q23);

        let p = dir.path().join("meas.csv");
        write_measurements(&p, &series).unwrap();
        let table = Table::read(&p).unwrap();
        let a3: Vec<f64> = series.values.iter().map(|a| a.z).collect();
        assert_eq!(table.column("a3").unwrap(), a3);
        assert!(table.column("a4").is_none());
    }
}
