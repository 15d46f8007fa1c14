//! Simulation core for a steerable vibro-impact capsule robot driven by an
//! internal permanent magnet and four elliptic coils.
//!
//! - [`magnetics`]: Biot–Savart fields of polygonized coils and dipole wrenches.
//! - [`actuation`]: one-coil and four-coil square-wave current patterns.
//! - [`dynamics`]: magnet/body vibro-impact integration with stick-slip friction.
//! - [`scenarios`]: frequency × duty sweeps and the curved-track run.
//! - [`service`]: interactive session engine and its wire protocol.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuation;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod magnetics;
pub mod scenarios;
pub mod service;

pub use actuation::{currents_at, tilt_axis, CoilCurrents, Direction, DriveCommand, DriveMethod};
pub use config::SimConfig;
pub use dynamics::{
    average_speed, deviation_angle, simulate, CapsuleParams, CapsuleState, MagnetState, Simulator,
    Trajectory,
};
pub use error::{ConfigError, DynamicsError, MagneticsError, ValidationError};
pub use magnetics::{CoilSpec, MagnetSpec, Wrench};
