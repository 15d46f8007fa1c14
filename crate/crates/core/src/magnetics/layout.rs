use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::biot_savart::Winding;
use super::coil::CoilSpec;
use super::dipole::MagnetSpec;
use super::DEFAULT_SEGMENTS;
use crate::actuation::TiltResponse;
use crate::error::{MagneticsError, ValidationError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoilId {
    A1,
    A2,
    B1,
    B2,
}

impl CoilId {
    pub const ALL: [CoilId; 4] = [CoilId::A1, CoilId::A2, CoilId::B1, CoilId::B2];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Placement of the four drive coils in the capsule frame
/// (x forward along the capsule axis, y to the left, z up).
///
/// The A pair sits on the axis tilted `max_tilt` to the right, the B pair on
/// its mirror image to the left. A1/B1 are behind the magnet, A2/B2 in front.
/// Each coil is centered `stroke/2 + magnet.length/2 + coil_gap` from the
/// bearing center along its pair axis. A coils are wound so positive current
/// attracts a forward-magnetized magnet; B coils are wound the other way, so
/// positive current repels it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveGeometry {
    /// m, along the capsule's vertical
    pub semi_major: f64,
    /// m
    pub semi_minor: f64,
    pub turns: u32,
    pub n_segments: usize,
    /// Gap between the magnet's end face at full stroke and the coil plane, m.
    pub coil_gap: f64,
    /// Bearing-limited tilt of the vibration axis, degrees.
    pub max_tilt_deg: f64,
    /// Four-coil tilt as a function of the lateral pair's level.
    #[serde(default)]
    pub tilt_response: TiltResponse,
}

impl Default for DriveGeometry {
    fn default() -> Self {
        Self {
            semi_major: 6.0e-3,
            semi_minor: 4.0e-3,
            turns: 50,
            n_segments: DEFAULT_SEGMENTS,
            coil_gap: 0.65e-3,
            max_tilt_deg: 22.0,
            tilt_response: TiltResponse::Linear,
        }
    }
}

impl DriveGeometry {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.semi_minor > 0.0) {
            return Err(ValidationError::new("coils.semi_minor", "must be positive"));
        }
        if !(self.semi_major >= self.semi_minor) || !self.semi_major.is_finite() {
            return Err(ValidationError::new("coils.semi_major", "must be >= semi_minor"));
        }
        if self.turns < 1 {
            return Err(ValidationError::new("coils.turns", "must be at least 1"));
        }
        if self.n_segments < 8 {
            return Err(ValidationError::new("coils.n_segments", "must be at least 8"));
        }
        if !(self.coil_gap >= 0.0) || !self.coil_gap.is_finite() {
            return Err(ValidationError::new("coils.coil_gap", "must be non-negative"));
        }
        if !(0.0..90.0).contains(&self.max_tilt_deg) {
            return Err(ValidationError::new("coils.max_tilt_deg", "must lie in [0, 90)"));
        }
        Ok(())
    }

    pub fn max_tilt(&self) -> f64 {
        self.max_tilt_deg.to_radians()
    }

    pub fn coil_offset(&self, magnet: &MagnetSpec, stroke: f64) -> f64 {
        0.5 * stroke + 0.5 * magnet.length + self.coil_gap
    }

    /// Unit axis of the A pair (tilted right) or B pair (tilted left).
    pub fn pair_axis(&self, coil: CoilId) -> Vector3<f64> {
        let th = self.max_tilt();
        match coil {
            CoilId::A1 | CoilId::A2 => Vector3::new(th.cos(), -th.sin(), 0.0),
            CoilId::B1 | CoilId::B2 => Vector3::new(th.cos(), th.sin(), 0.0),
        }
    }

    pub fn coil_spec(&self, coil: CoilId, magnet: &MagnetSpec, stroke: f64) -> CoilSpec {
        let axis = self.pair_axis(coil);
        let d = self.coil_offset(magnet, stroke);
        let center = match coil {
            CoilId::A1 | CoilId::B1 => -axis * d,
            CoilId::A2 | CoilId::B2 => axis * d,
        };
        let normal = match coil {
            CoilId::A1 | CoilId::A2 => axis,
            CoilId::B1 | CoilId::B2 => -axis,
        };
        let ex = Vector3::z();
        let ey = normal.cross(&ex);
        let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[ex, ey, normal]));
        CoilSpec {
            semi_major: self.semi_major,
            semi_minor: self.semi_minor,
            turns: self.turns,
            current_amplitude: 0.5,
            pose: Isometry3::from_parts(
                Translation3::from(center),
                UnitQuaternion::from_rotation_matrix(&rot),
            ),
            n_segments: self.n_segments,
        }
    }

    pub fn coil_specs(&self, magnet: &MagnetSpec, stroke: f64) -> [CoilSpec; 4] {
        CoilId::ALL.map(|c| self.coil_spec(c, magnet, stroke))
    }

    /// Discretized windings in (A1, A2, B1, B2) order.
    pub fn windings(&self, magnet: &MagnetSpec, stroke: f64) -> Result<[Winding; 4], MagneticsError> {
        let [a1, a2, b1, b2] = self.coil_specs(magnet, stroke);
        Ok([
            Winding::from_spec(&a1)?,
            Winding::from_spec(&a2)?,
            Winding::from_spec(&b1)?,
            Winding::from_spec(&b2)?,
        ])
    }
}
