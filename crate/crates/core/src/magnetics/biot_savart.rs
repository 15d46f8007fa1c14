use nalgebra::Vector3;

use super::coil::{discretize_ellipse, CoilSpec, Polyline};
use super::{DEFAULT_CLEARANCE, MU0};
use crate::error::MagneticsError;

const MU0_OVER_4PI: f64 = MU0 / (4.0 * std::f64::consts::PI);

/// Field of a unit-current straight segment from `a` to `b` at `p`,
/// without the μ₀/4π factor.
///
/// Exact closed form for a finite filament:
/// `(r1 × r2)(|r1| + |r2|) / (|r1||r2|(|r1||r2| + r1·r2))` with `r1 = p - a`,
/// `r2 = p - b`.
#[inline]
pub fn segment_field(a: &Vector3<f64>, b: &Vector3<f64>, p: &Vector3<f64>) -> Vector3<f64> {
    let r1 = p - a;
    let r2 = p - b;
    let n1 = r1.norm();
    let n2 = r2.norm();
    let denom = n1 * n2 * (n1 * n2 + r1.dot(&r2));
    if denom == 0.0 {
        return Vector3::zeros();
    }
    r1.cross(&r2) * ((n1 + n2) / denom)
}

fn distance_to_segment(a: &Vector3<f64>, b: &Vector3<f64>, p: &Vector3<f64>) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&d) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + d * t)).norm()
}

/// Net field of `turns` coincident copies of `polyline` carrying `current`.
pub fn field_at(
    polyline: &Polyline,
    current: f64,
    turns: u32,
    point: &Vector3<f64>,
) -> Result<Vector3<f64>, MagneticsError> {
    field_with_clearance(polyline, current, turns, point, DEFAULT_CLEARANCE)
}

fn field_with_clearance(
    polyline: &Polyline,
    current: f64,
    turns: u32,
    point: &Vector3<f64>,
    clearance: f64,
) -> Result<Vector3<f64>, MagneticsError> {
    let mut acc = Vector3::zeros();
    for (a, b) in polyline.segments() {
        let dist = distance_to_segment(a, b, point);
        if dist < clearance {
            return Err(MagneticsError::Singularity {
                distance: dist,
                clearance,
            });
        }
        acc += segment_field(a, b, point);
    }
    Ok(acc * (MU0_OVER_4PI * current * turns as f64))
}

/// A discretized coil ready for field evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Winding {
    pub path: Polyline,
    pub turns: u32,
    pub clearance: f64,
}

impl Winding {
    pub fn from_spec(spec: &CoilSpec) -> Result<Self, MagneticsError> {
        Ok(Self {
            path: discretize_ellipse(spec)?,
            turns: spec.turns,
            clearance: DEFAULT_CLEARANCE,
        })
    }

    pub fn field(&self, current: f64, point: &Vector3<f64>) -> Result<Vector3<f64>, MagneticsError> {
        field_with_clearance(&self.path, current, self.turns, point, self.clearance)
    }
}

/// A winding paired with the current it carries.
#[derive(Debug, Clone, Copy)]
pub struct DrivenCoil<'a> {
    pub winding: &'a Winding,
    pub current: f64,
}

impl<'a> DrivenCoil<'a> {
    pub fn new(winding: &'a Winding, current: f64) -> Self {
        Self { winding, current }
    }
}

/// Superposed field of a coil set. Coils with zero current are still
/// checked for clearance.
pub fn field_of_set(set: &[DrivenCoil<'_>], point: &Vector3<f64>) -> Result<Vector3<f64>, MagneticsError> {
    let mut b = Vector3::zeros();
    for c in set {
        b += c.winding.field(c.current, point)?;
    }
    Ok(b)
}
