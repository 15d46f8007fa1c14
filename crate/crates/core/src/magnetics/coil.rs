use std::f64::consts::PI;

use nalgebra::{Isometry3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::ValidationError;

/// One elliptic drive coil, described in its own frame and placed by `pose`.
///
/// In the coil frame the ellipse lies in the local xy-plane with the semi-major
/// axis along local x. Positive current circulates counter-clockwise about
/// local +z, so the field at the coil center points along the posed +z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoilSpec {
    pub semi_major: f64,
    pub semi_minor: f64,
    pub turns: u32,
    /// Rated current, A.
    pub current_amplitude: f64,
    pub pose: Isometry3<f64>,
    pub n_segments: usize,
}

impl CoilSpec {
    pub fn circular(radius: f64, turns: u32, pose: Isometry3<f64>, n_segments: usize) -> Self {
        Self {
            semi_major: radius,
            semi_minor: radius,
            turns,
            current_amplitude: 0.5,
            pose,
            n_segments,
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.semi_minor > 0.0) || !self.semi_minor.is_finite() {
            return Err(ValidationError::new("semi_minor", "must be positive"));
        }
        if !(self.semi_major >= self.semi_minor) || !self.semi_major.is_finite() {
            return Err(ValidationError::new(
                "semi_major",
                "must be finite and no smaller than semi_minor",
            ));
        }
        if self.turns < 1 {
            return Err(ValidationError::new("turns", "must be at least 1"));
        }
        if self.n_segments < 8 {
            return Err(ValidationError::new("n_segments", "must be at least 8"));
        }
        if !(self.current_amplitude >= 0.0) {
            return Err(ValidationError::new("current_amplitude", "must be non-negative"));
        }
        let t = self.pose.translation.vector;
        if !t.iter().all(|c| c.is_finite()) {
            return Err(ValidationError::new("pose", "position must be finite"));
        }
        let r = self.pose.rotation.to_rotation_matrix();
        let defect = (r.matrix().transpose() * r.matrix() - nalgebra::Matrix3::identity()).norm();
        if defect > 1e-9 {
            return Err(ValidationError::new("pose", "orientation is not orthonormal"));
        }
        Ok(())
    }

    /// Normal of the coil plane in the parent frame (direction of the
    /// center field for positive current).
    pub fn axis(&self) -> Vector3<f64> {
        self.pose.rotation * Vector3::z()
    }

    pub fn center(&self) -> Vector3<f64> {
        self.pose.translation.vector
    }
}

/// Closed polyline; the last vertex repeats the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline(pub Vec<Vector3<f64>>);

impl Polyline {
    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.0
    }

    pub fn segments(&self) -> impl Iterator<Item = (&Vector3<f64>, &Vector3<f64>)> {
        self.0.windows(2).map(|w| (&w[0], &w[1]))
    }

    pub fn segment_count(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }
}

/// Vertices of an axis-aligned ellipse in the xy-plane, counter-clockwise,
/// at equally spaced parameter angles. Returns `n + 1` points (closed).
///
/// Accepts any `n >= 3`; coil specs impose their own stricter minimum.
pub fn ellipse_vertices(
    semi_major: f64,
    semi_minor: f64,
    n: usize,
) -> Result<Vec<Vector3<f64>>, ValidationError> {
    if !(semi_major > 0.0 && semi_minor > 0.0) {
        return Err(ValidationError::new("semi_major", "ellipse axes must be positive"));
    }
    if n < 3 {
        return Err(ValidationError::new("n_segments", "a polygon needs at least 3 sides"));
    }
    let mut pts: Vec<Vector3<f64>> = (0..n)
        .map(|k| {
            let th = 2.0 * PI * (k as f64) / (n as f64);
            Vector3::new(semi_major * th.cos(), semi_minor * th.sin(), 0.0)
        })
        .collect();
    pts.push(pts[0]);
    Ok(pts)
}

/// Inscribed polygon of the posed ellipse.
pub fn discretize_ellipse(spec: &CoilSpec) -> Result<Polyline, ValidationError> {
    spec.validate()?;
    let local = ellipse_vertices(spec.semi_major, spec.semi_minor, spec.n_segments)?;
    let mut pts: Vec<Vector3<f64>> = local[..spec.n_segments]
        .iter()
        .map(|v| (spec.pose * Point3::from(*v)).coords)
        .collect();
    pts.push(pts[0]);
    Ok(Polyline(pts))
}
