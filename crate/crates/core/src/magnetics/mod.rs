//! Coil magnetostatics: polygonized elliptic windings, straight-segment
//! Biot–Savart fields, field gradients, and the force and torque on a
//! point-dipole magnet.

mod biot_savart;
mod coil;
mod dipole;
mod layout;

pub use biot_savart::{field_at, field_of_set, segment_field, DrivenCoil, Winding};
pub use coil::{discretize_ellipse, ellipse_vertices, CoilSpec, Polyline};
pub use dipole::{
    field_gradient, sample_field, wrench_on_dipole, DipolePose, FieldSample, ForceModel,
    MagnetSpec, Wrench,
};
pub use layout::{CoilId, DriveGeometry};

use serde::{Deserialize, Serialize};

/// Magnetic constant μ₀ in T·m/A.
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;
/// Standard gravitational acceleration used for weights and normal loads.
pub const GRAVITY: f64 = 9.81;

/// Minimum distance between a field point and any winding segment.
pub const DEFAULT_CLEARANCE: f64 = 1.0e-4;
/// Central-difference step for field gradients.
pub const GRADIENT_STEP: f64 = 1.0e-5;
/// Default number of straight segments per coil.
pub const DEFAULT_SEGMENTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub mu0: f64,
    pub g: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            mu0: MU0,
            g: GRAVITY,
        }
    }
}
