//! Gyro-less angular velocity estimation for rigid bodies from a single
//! body-frame direction measurement.
//!
//! The crate simulates free or torqued rigid-body rotation, produces
//! direction measurements of a fixed inertial reference vector, runs a
//! nonlinear observer that recovers the direction and the angular velocity,
//! and checks the excitation and contraction conditions under which that
//! observer converges.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod ltv;
pub mod measurement;
pub mod observer;
pub mod ode;
pub mod pe;

pub use error::{Error, Result};
