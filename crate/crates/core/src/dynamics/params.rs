use serde::{Deserialize, Serialize};

use crate::error::ValidationError;
use crate::magnetics::{ForceModel, MagnetSpec, GRAVITY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsuleParams {
    /// Capsule mass without the magnet, kg.
    pub body_mass: f64,
    pub magnet: MagnetSpec,
    /// Total free travel of the magnet between the constraints, m.
    pub stroke: f64,
    /// Coulomb coefficient of the bearing, applied to the magnet's weight.
    pub bearing_mu: f64,
    pub ground_mu_static: f64,
    pub ground_mu_kinetic: f64,
    /// Coefficient of restitution at the stroke constraints.
    pub restitution: f64,
}

impl Default for CapsuleParams {
    fn default() -> Self {
        Self {
            body_mass: 5.38e-3 - 0.92e-3,
            magnet: MagnetSpec::default(),
            stroke: 2.4e-3,
            bearing_mu: 0.097,
            ground_mu_static: 0.35,
            ground_mu_kinetic: 0.30,
            restitution: 0.5,
        }
    }
}

impl CapsuleParams {
    pub fn validate(&self) -> Result<(), ValidationError> {
        self.magnet.validate()?;
        if !(self.body_mass > 0.0 && self.body_mass.is_finite()) {
            return Err(ValidationError::new("capsule.body_mass", "must be positive"));
        }
        if !(self.stroke > 0.0 && self.stroke.is_finite()) {
            return Err(ValidationError::new("capsule.stroke", "must be positive"));
        }
        if !(self.bearing_mu >= 0.0 && self.bearing_mu.is_finite()) {
            return Err(ValidationError::new("capsule.bearing_mu", "must be non-negative"));
        }
        if !(self.ground_mu_kinetic >= 0.0) {
            return Err(ValidationError::new("capsule.ground_mu_kinetic", "must be non-negative"));
        }
        if !(self.ground_mu_static >= self.ground_mu_kinetic) || !self.ground_mu_static.is_finite() {
            return Err(ValidationError::new(
                "capsule.ground_mu_static",
                "must be finite and at least ground_mu_kinetic",
            ));
        }
        if !(0.0..=1.0).contains(&self.restitution) {
            return Err(ValidationError::new("capsule.restitution", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.body_mass + self.magnet.mass
    }

    /// Weight of body plus magnet, N.
    pub fn normal_load(&self) -> f64 {
        self.total_mass() * GRAVITY
    }

    pub fn half_stroke(&self) -> f64 {
        0.5 * self.stroke
    }

    /// Bearing friction force magnitude on the sliding magnet, N.
    pub fn bearing_friction(&self) -> f64 {
        self.bearing_mu * self.magnet.mass * GRAVITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSettings {
    /// Fixed step, s.
    pub dt: f64,
    /// Trajectory samples per second.
    pub output_rate: f64,
    /// Impact times are bracketed to this width, s.
    pub impact_time_tol: f64,
    /// Post-impact relative speeds below this lock the magnet to the constraint, m/s.
    pub rest_velocity: f64,
    /// Nodes of the tabulated axial force profile across the stroke.
    pub profile_nodes: usize,
    pub force_model: ForceModel,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            dt: 2.0e-5,
            output_rate: 1000.0,
            impact_time_tol: 1.0e-9,
            rest_velocity: 1.0e-3,
            profile_nodes: 481,
            force_model: ForceModel::FullJacobian,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.dt > 0.0 && self.dt <= super::DT_MAX) {
            return Err(ValidationError::new(
                "integrator.dt",
                format!("must lie in (0, {:e}]", super::DT_MAX),
            ));
        }
        if !(self.output_rate > 0.0 && self.output_rate.is_finite()) {
            return Err(ValidationError::new("integrator.output_rate", "must be positive"));
        }
        if !(self.impact_time_tol > 0.0 && self.impact_time_tol < self.dt) {
            return Err(ValidationError::new("integrator.impact_time_tol", "must lie in (0, dt)"));
        }
        if !(self.rest_velocity >= 0.0) {
            return Err(ValidationError::new("integrator.rest_velocity", "must be non-negative"));
        }
        if self.profile_nodes < 3 {
            return Err(ValidationError::new("integrator.profile_nodes", "must be at least 3"));
        }
        Ok(())
    }

    /// Integration steps between recorded samples.
    pub fn output_stride(&self) -> usize {
        ((1.0 / (self.output_rate * self.dt)).round() as usize).max(1)
    }
}
