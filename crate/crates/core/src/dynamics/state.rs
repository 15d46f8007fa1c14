use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MagnetState {
    /// Displacement of the magnet center from mid-stroke along the tilt axis, m.
    pub s: f64,
    /// Velocity relative to the body, m/s.
    pub v_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapsuleState {
    pub t: f64,
    pub position: Vector2<f64>,
    pub velocity: Vector2<f64>,
    /// Angle of the capsule axis from world +x, radians.
    pub heading: f64,
    pub magnet: MagnetState,
}

impl Default for CapsuleState {
    fn default() -> Self {
        Self::at_rest()
    }
}

impl CapsuleState {
    pub fn at_rest() -> Self {
        Self {
            t: 0.0,
            position: Vector2::zeros(),
            velocity: Vector2::zeros(),
            heading: 0.0,
            magnet: MagnetState::default(),
        }
    }

    /// Unit vector along the capsule axis in the world frame.
    pub fn forward(&self) -> Vector2<f64> {
        Vector2::new(self.heading.cos(), self.heading.sin())
    }

    /// Returns the name of the first non-finite quantity, if any.
    pub fn non_finite(&self) -> Option<&'static str> {
        if !self.t.is_finite() {
            Some("t")
        } else if !self.position.iter().all(|v| v.is_finite()) {
            Some("position")
        } else if !self.velocity.iter().all(|v| v.is_finite()) {
            Some("velocity")
        } else if !self.heading.is_finite() {
            Some("heading")
        } else if !self.magnet.s.is_finite() {
            Some("magnet.s")
        } else if !self.magnet.v_s.is_finite() {
            Some("magnet.v_s")
        } else {
            None
        }
    }
}
