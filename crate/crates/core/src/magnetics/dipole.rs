use std::f64::consts::PI;

use nalgebra::{Matrix3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::biot_savart::{field_of_set, DrivenCoil};
use super::GRADIENT_STEP;
use crate::error::{MagneticsError, ValidationError};

/// Cylindrical permanent magnet, axially magnetized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetSpec {
    /// m
    pub diameter: f64,
    /// m
    pub length: f64,
    /// kg
    pub mass: f64,
    /// A/m
    pub magnetization: f64,
}

impl Default for MagnetSpec {
    fn default() -> Self {
        Self {
            diameter: 4.0e-3,
            length: 10.0e-3,
            mass: 0.92e-3,
            magnetization: 8.38e5,
        }
    }
}

impl MagnetSpec {
    pub fn validate(&self) -> Result<(), ValidationError> {
        for (field, v) in [
            ("magnet.diameter", self.diameter),
            ("magnet.length", self.length),
            ("magnet.mass", self.mass),
            ("magnet.magnetization", self.magnetization),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ValidationError::new(field, "must be positive and finite"));
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        PI * (0.5 * self.diameter).powi(2) * self.length
    }

    /// Dipole moment magnitude v·M in A·m².
    pub fn moment(&self) -> f64 {
        self.volume() * self.magnetization
    }
}

/// Position of the dipole center and the direction of its magnetization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipolePose {
    pub position: Vector3<f64>,
    pub direction: Unit<Vector3<f64>>,
}

impl DipolePose {
    pub fn new(position: Vector3<f64>, direction: Vector3<f64>) -> Self {
        Self {
            position,
            direction: Unit::new_normalize(direction),
        }
    }
}

/// How the force is assembled from the field Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceModel {
    /// `F = Jᵀ m`, the gradient of `m·B`.
    #[default]
    FullJacobian,
    /// `F_i = (∂B_i/∂x_i) m_i`; drops the off-diagonal Jacobian terms.
    DiagonalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub position: Vector3<f64>,
    pub b: Vector3<f64>,
    /// `grad_b[(i, j)] = ∂B_i/∂x_j`
    pub grad_b: Matrix3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

/// Field Jacobian by fourth-order central differences with step
/// [`GRADIENT_STEP`].
pub fn field_gradient(
    set: &[DrivenCoil<'_>],
    point: &Vector3<f64>,
) -> Result<Matrix3<f64>, MagneticsError> {
    let h = GRADIENT_STEP;
    let mut jac = Matrix3::zeros();
    for j in 0..3 {
        let mut e = Vector3::zeros();
        e[j] = h;
        let p1 = field_of_set(set, &(point + e))?;
        let m1 = field_of_set(set, &(point - e))?;
        let p2 = field_of_set(set, &(point + 2.0 * e))?;
        let m2 = field_of_set(set, &(point - 2.0 * e))?;
        let col = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

pub fn sample_field(set: &[DrivenCoil<'_>], point: &Vector3<f64>) -> Result<FieldSample, MagneticsError> {
    Ok(FieldSample {
        position: *point,
        b: field_of_set(set, point)?,
        grad_b: field_gradient(set, point)?,
    })
}

/// Force and torque on the magnet treated as a point dipole `m = v·M`.
pub fn wrench_on_dipole(
    set: &[DrivenCoil<'_>],
    magnet: &MagnetSpec,
    pose: &DipolePose,
    model: ForceModel,
) -> Result<Wrench, MagneticsError> {
    let sample = sample_field(set, &pose.position)?;
    Ok(wrench_from_sample(&sample, magnet, pose, model))
}

pub(crate) fn wrench_from_sample(
    sample: &FieldSample,
    magnet: &MagnetSpec,
    pose: &DipolePose,
    model: ForceModel,
) -> Wrench {
    let m = pose.direction.into_inner() * magnet.moment();
    let force = match model {
        ForceModel::FullJacobian => sample.grad_b.transpose() * m,
        ForceModel::DiagonalOnly => Vector3::new(
            sample.grad_b[(0, 0)] * m.x,
            sample.grad_b[(1, 1)] * m.y,
            sample.grad_b[(2, 2)] * m.z,
        ),
    };
    Wrench {
        force,
        torque: m.cross(&sample.b),
    }
}
