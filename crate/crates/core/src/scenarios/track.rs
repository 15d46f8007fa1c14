use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::actuation::DriveCommand;
use crate::config::SimConfig;
use crate::dynamics::{BodyLoad, CapsuleState, Simulator, Trajectory};
use crate::error::{ConfigError, DynamicsError, ValidationError};

/// U-shaped channel: a straight, a semicircular arc and a return straight.
/// The track frame has the entrance at the origin with the first straight
/// along +x; the capsule starts there facing down the channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackSpec {
    /// Length of each straight, m.
    pub straight_length: f64,
    /// Centerline radius of the arc, m.
    pub arc_radius: f64,
    /// Inner width of the channel, m.
    pub channel_width: f64,
    /// Radius of the capsule's cross-section, m.
    pub capsule_radius: f64,
    /// Arc bends to the capsule's right when true.
    pub turn_right: bool,
    /// Wall penalty stiffness, N/m.
    pub wall_stiffness: f64,
    /// Wall damping, N·s/m; critical for the whole capsule mass when absent.
    pub wall_damping: Option<f64>,
    /// Largest admissible wall penetration, m.
    pub penetration_bound: f64,
}

impl Default for TrackSpec {
    fn default() -> Self {
        let arc_radius = 0.05;
        Self {
            straight_length: 0.5 * (0.25 - PI * arc_radius),
            arc_radius,
            channel_width: 0.025,
            capsule_radius: 0.0075,
            turn_right: true,
            wall_stiffness: 5.0e3,
            wall_damping: None,
            penetration_bound: 0.5e-3,
        }
    }
}

/// Closest centerline point to a position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackProjection {
    /// Arc length along the centerline from the entrance, m.
    pub progress: f64,
    /// Signed offset from the centerline, positive to the left of travel, m.
    pub lateral: f64,
    /// Heading of the centerline tangent, rad.
    pub heading: f64,
}

impl TrackSpec {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let pos = |v: f64, field: &'static str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ValidationError::new(field, "must be positive"))
            }
        };
        pos(self.arc_radius, "arc_radius")?;
        pos(self.channel_width, "channel_width")?;
        pos(self.capsule_radius, "capsule_radius")?;
        pos(self.wall_stiffness, "wall_stiffness")?;
        pos(self.penetration_bound, "penetration_bound")?;
        if !(self.straight_length >= 0.0 && self.straight_length.is_finite()) {
            return Err(ValidationError::new("straight_length", "must be non-negative"));
        }
        if self.channel_width <= 2.0 * self.capsule_radius {
            return Err(ValidationError::new(
                "channel_width",
                "must exceed the capsule diameter",
            ));
        }
        if 0.5 * self.channel_width >= self.arc_radius {
            return Err(ValidationError::new("arc_radius", "must exceed half the channel width"));
        }
        if let Some(c) = self.wall_damping {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(ValidationError::new("wall_damping", "must be non-negative"));
            }
        }
        Ok(())
    }

    /// Centerline length, m.
    pub fn length(&self) -> f64 {
        2.0 * self.straight_length + PI * self.arc_radius
    }

    /// Free lateral play of the capsule center before it touches a wall, m.
    pub fn clearance(&self) -> f64 {
        0.5 * self.channel_width - self.capsule_radius
    }

    pub fn project(&self, p: &Vector2<f64>) -> TrackProjection {
        // work in a frame where the arc always bends right
        let flip = if self.turn_right { 1.0 } else { -1.0 };
        let (x, y) = (p.x, flip * p.y);
        let (l, r) = (self.straight_length, self.arc_radius);
        let (progress, lateral, heading) = if x > l {
            let (dx, dy) = (x - l, y + r);
            let theta = dy.atan2(dx);
            (l + r * (0.5 * PI - theta), dx.hypot(dy) - r, theta - 0.5 * PI)
        } else if y.abs() <= (y + 2.0 * r).abs() {
            (x, y, 0.0)
        } else {
            (l + PI * r + (l - x), -(y + 2.0 * r), PI)
        };
        TrackProjection {
            progress,
            lateral: flip * lateral,
            heading: flip * heading,
        }
    }

    /// Centerline point at `progress` (clamped to the track), m.
    pub fn point_at(&self, progress: f64) -> Vector2<f64> {
        let flip = if self.turn_right { 1.0 } else { -1.0 };
        let (l, r) = (self.straight_length, self.arc_radius);
        let s = progress.clamp(0.0, self.length());
        let (x, y) = if s <= l {
            (s, 0.0)
        } else if s <= l + PI * r {
            let theta = 0.5 * PI - (s - l) / r;
            (l + r * theta.cos(), -r + r * theta.sin())
        } else {
            (l - (s - l - PI * r), -2.0 * r)
        };
        Vector2::new(x, flip * y)
    }

    fn damping(&self, mass: f64) -> f64 {
        self.wall_damping
            .unwrap_or_else(|| 2.0 * (self.wall_stiffness * mass).sqrt())
    }

    /// Depth by which the capsule overlaps a wall, m (0 when clear).
    pub fn penetration(&self, p: &Vector2<f64>) -> f64 {
        (self.project(p).lateral.abs() - self.clearance()).max(0.0)
    }
}

struct Walls<'a> {
    track: &'a TrackSpec,
    damping: f64,
}

impl BodyLoad for Walls<'_> {
    fn force(&self, st: &CapsuleState) -> Vector2<f64> {
        let pr = self.track.project(&st.position);
        let depth = pr.lateral.abs() - self.track.clearance();
        if depth <= 0.0 {
            return Vector2::zeros();
        }
        // outward normal of the wall being pressed
        let (s, c) = pr.heading.sin_cos();
        let out = Vector2::new(-s, c) * pr.lateral.signum();
        let push = self.track.wall_stiffness * depth + self.damping * st.velocity.dot(&out);
        -out * push.max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    /// Time at which the command takes over, s.
    pub t: f64,
    pub command: DriveCommand,
}

/// Track geometry, command schedule and stopping rules read from a plan file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackPlan {
    #[serde(default)]
    pub track: TrackSpec,
    /// Commands sorted by start time; empty means the config's drive command throughout.
    #[serde(default)]
    pub schedule: Vec<ScheduleEntry>,
    #[serde(default)]
    pub limits: TrackLimits,
}

impl TrackPlan {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let plan: Self = toml::from_str(text)?;
        plan.track.validate()?;
        plan.limits.validate()?;
        Ok(plan)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackLimits {
    /// Give up after this much simulated time, s.
    pub max_duration: f64,
    /// Report a stall after this long without `stall_distance` of new progress, s.
    pub stall_timeout: f64,
    /// m
    pub stall_distance: f64,
}

impl Default for TrackLimits {
    fn default() -> Self {
        Self {
            max_duration: 120.0,
            stall_timeout: 10.0,
            stall_distance: 1.0e-3,
        }
    }
}

impl TrackLimits {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.max_duration > 0.0 && self.max_duration.is_finite()) {
            return Err(ValidationError::new("max_duration", "must be positive"));
        }
        if !(self.stall_timeout > 0.0) {
            return Err(ValidationError::new("stall_timeout", "must be positive"));
        }
        if !(self.stall_distance > 0.0) {
            return Err(ValidationError::new("stall_distance", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StallReport {
    /// Time at which the stall was declared, s.
    pub t: f64,
    /// Best centerline progress reached, m.
    pub progress: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackOutcome {
    /// Time for the capsule center to travel the whole centerline, s.
    pub passage_time: Option<f64>,
    /// Centerline length over passage time, m/s.
    pub mean_path_speed: Option<f64>,
    /// Centerline progress at the end of the run, m.
    pub progress: f64,
    pub track_length: f64,
    pub stall: Option<StallReport>,
    /// Deepest wall overlap seen at any step, m.
    pub max_penetration: f64,
    pub within_bound: bool,
    pub duration: f64,
}

#[derive(Debug, Clone)]
pub struct TrackResult {
    pub outcome: TrackOutcome,
    pub trajectory: Trajectory,
}

/// Drive the capsule down the channel. The capsule's heading follows the
/// channel tangent; walls act through penalty contact normal to the wall.
/// The run ends on passage, stall or `limits.max_duration`.
pub fn run_track(
    track: &TrackSpec,
    schedule: &[ScheduleEntry],
    config: &SimConfig,
    limits: &TrackLimits,
) -> Result<TrackResult, DynamicsError> {
    track.validate()?;
    limits.validate()?;
    config.validate()?;
    let fallback = [ScheduleEntry {
        t: 0.0,
        command: config.drive,
    }];
    let schedule = if schedule.is_empty() { &fallback[..] } else { schedule };
    if schedule.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(ValidationError::new("schedule", "entries must be sorted by time").into());
    }
    let mut sim = Simulator::new(
        config.capsule.clone(),
        config.coils.clone(),
        config.integrator.clone(),
        schedule[0].command,
    )?;
    let walls = Walls {
        track,
        damping: track.damping(config.capsule.total_mass()),
    };
    let dt = config.integrator.dt;
    let stride = config.integrator.output_stride();
    let steps = (limits.max_duration / dt).round() as usize;
    let length = track.length();

    let mut st = CapsuleState::at_rest();
    let mut samples = vec![st];
    let mut next = 1;
    let mut best = 0.0;
    let mut best_at = 0.0;
    let mut max_pen: f64 = 0.0;
    let mut passage = None;
    let mut stall = None;
    for k in 1..=steps {
        while next < schedule.len() && st.t + 0.5 * dt >= schedule[next].t {
            sim.set_command(schedule[next].command, st.t)?;
            next += 1;
        }
        st = sim.step_loaded(&st, dt, Some(&walls))?;
        let pr = track.project(&st.position);
        st.heading = pr.heading;
        max_pen = max_pen.max(pr.lateral.abs() - track.clearance());
        if pr.progress >= best + limits.stall_distance {
            best = pr.progress;
            best_at = st.t;
        }
        let done = pr.progress >= length;
        if done {
            passage = Some(st.t);
        } else if st.t - best_at >= limits.stall_timeout {
            stall = Some(StallReport {
                t: st.t,
                progress: best.max(pr.progress),
            });
        }
        let last = done || stall.is_some() || k == steps;
        if k % stride == 0 || last {
            samples.push(st);
        }
        if last {
            break;
        }
    }
    let progress = track.project(&st.position).progress;
    let max_penetration = max_pen.max(0.0);
    Ok(TrackResult {
        outcome: TrackOutcome {
            passage_time: passage,
            mean_path_speed: passage.map(|t| length / t),
            progress,
            track_length: length,
            stall,
            max_penetration,
            within_bound: max_penetration <= track.penetration_bound,
            duration: st.t,
        },
        trajectory: Trajectory::new(samples),
    })
}
