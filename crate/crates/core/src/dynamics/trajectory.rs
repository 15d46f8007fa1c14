use std::io::Write;

use nalgebra::Vector2;

use super::state::CapsuleState;
use crate::error::ValidationError;

/// Minimum span for speed and angle statistics, s.
const MIN_SPAN: f64 = 1.0;

/// Recorded capsule states in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<CapsuleState>,
}

impl Trajectory {
    pub fn new(samples: Vec<CapsuleState>) -> Self {
        Self { samples }
    }

    pub fn samples(&self) -> &[CapsuleState] {
        &self.samples
    }

    pub fn first(&self) -> Option<&CapsuleState> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&CapsuleState> {
        self.samples.last()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn span(&self) -> f64 {
        match (self.first(), self.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn displacement(&self) -> Vector2<f64> {
        match (self.first(), self.last()) {
            (Some(a), Some(b)) => b.position - a.position,
            _ => Vector2::zeros(),
        }
    }

    /// Samples with `t` in `[from, to]`.
    pub fn window(&self, from: f64, to: f64) -> Trajectory {
        Trajectory::new(
            self.samples
                .iter()
                .filter(|s| s.t >= from && s.t <= to)
                .copied()
                .collect(),
        )
    }

    /// CSV with header `t,x,y,s,v_s,vx,vy` (SI units).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,x,y,s,v_s,vx,vy")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.t, s.position.x, s.position.y, s.magnet.s, s.magnet.v_s, s.velocity.x, s.velocity.y
            )?;
        }
        Ok(())
    }
}

fn check_span(traj: &Trajectory) -> Result<(), ValidationError> {
    if traj.span() + 1e-9 < MIN_SPAN {
        return Err(ValidationError::new(
            "trajectory",
            format!("spans {:.3} s, need at least {MIN_SPAN} s", traj.span()),
        ));
    }
    Ok(())
}

/// Net displacement over elapsed time, m/s; negative when the capsule ends up
/// behind its starting point along its axis.
pub fn average_speed(traj: &Trajectory) -> Result<f64, ValidationError> {
    check_span(traj)?;
    let d = traj.displacement();
    let dist = d.norm();
    if dist == 0.0 {
        return Ok(0.0);
    }
    let forward = traj.samples[0].forward();
    let sign = if d.dot(&forward) < 0.0 { -1.0 } else { 1.0 };
    Ok(sign * dist / traj.span())
}

/// Acute angle between the net displacement and the capsule axis line,
/// degrees. `None` when the capsule did not move.
pub fn deviation_angle(traj: &Trajectory) -> Result<Option<f64>, ValidationError> {
    check_span(traj)?;
    let d = traj.displacement();
    let dist = d.norm();
    if dist < 1e-12 {
        return Ok(None);
    }
    let forward = traj.samples[0].forward();
    let along = d.dot(&forward).abs();
    let across = (d.x * forward.y - d.y * forward.x).abs();
    Ok(Some(across.atan2(along).to_degrees()))
}
