use std::sync::Arc;

use nalgebra::{Unit, Vector2, Vector3};

use super::friction::{ground_contact, STICK_VELOCITY};
use super::impact::resolve_impact_with;
use super::params::{CapsuleParams, IntegratorSettings};
use super::profile::ForceProfile;
use super::state::CapsuleState;
use super::trajectory::Trajectory;
use super::Side;
use crate::actuation::{currents_in_phase, tilt_axis, CoilCurrents, DriveCommand};
use crate::config::SimConfig;
use crate::error::{DynamicsError, ValidationError};
use crate::magnetics::{DriveGeometry, MagnetSpec, Winding};

/// Largest admissible integration step, s.
pub const DT_MAX: f64 = 2.0e-5;

/// Impacts allowed inside one step before the magnet is locked plastically.
const MAX_EVENTS_PER_STEP: usize = 64;

/// External planar load on the capsule body, such as channel walls.
pub trait BodyLoad {
    /// World-frame force on the body, N.
    fn force(&self, state: &CapsuleState) -> Vector2<f64>;
}

#[derive(Debug, Clone)]
struct ActiveDrive {
    cmd: DriveCommand,
    started_at: f64,
    /// Vibration axis in the capsule frame.
    axis: Vector2<f64>,
    profile: Arc<ForceProfile>,
}

#[derive(Debug, Clone, Copy)]
struct Motion {
    body_accel: Vector2<f64>,
    s_accel: f64,
    stuck: bool,
    held: bool,
    /// Axial force on the magnet in the body frame, bearing excluded.
    push: f64,
}

/// Fixed-step semi-implicit Euler integrator for the capsule, with impact
/// times located by bisection and drive phase switches resolved inside a step.
#[derive(Debug, Clone)]
pub struct Simulator {
    params: CapsuleParams,
    geometry: DriveGeometry,
    settings: IntegratorSettings,
    windings: Arc<[Winding; 4]>,
    profiles: Vec<(Vector3<f64>, Arc<ForceProfile>)>,
    drive: ActiveDrive,
}

impl Simulator {
    pub fn new(
        params: CapsuleParams,
        geometry: DriveGeometry,
        settings: IntegratorSettings,
        cmd: DriveCommand,
    ) -> Result<Self, DynamicsError> {
        params.validate()?;
        geometry.validate()?;
        settings.validate()?;
        cmd.validate()?;
        let windings = geometry.windings(&params.magnet, params.stroke)?;
        let axis3 = tilt_axis(&cmd, &geometry);
        let profile = Arc::new(ForceProfile::build(
            &windings,
            &params.magnet,
            axis3,
            params.half_stroke(),
            settings.profile_nodes,
            settings.force_model,
        )?);
        Ok(Self {
            drive: ActiveDrive {
                cmd,
                started_at: 0.0,
                axis: Vector2::new(axis3.x, axis3.y),
                profile: profile.clone(),
            },
            profiles: vec![(axis3, profile)],
            params,
            geometry,
            settings,
            windings: Arc::new(windings),
        })
    }

    pub fn from_config(config: &SimConfig) -> Result<Self, DynamicsError> {
        Self::new(
            config.capsule.clone(),
            config.coils.clone(),
            config.integrator.clone(),
            config.drive,
        )
    }

    /// Same coils and command with different capsule parameters. Force tables
    /// are reused when the magnet and stroke are unchanged.
    pub fn with_params(&self, params: CapsuleParams) -> Result<Self, DynamicsError> {
        params.validate()?;
        if params.magnet != self.params.magnet || params.stroke != self.params.stroke {
            return Self::new(params, self.geometry.clone(), self.settings.clone(), self.drive.cmd);
        }
        let mut out = self.clone();
        out.params = params;
        Ok(out)
    }

    pub fn params(&self) -> &CapsuleParams {
        &self.params
    }

    pub fn geometry(&self) -> &DriveGeometry {
        &self.geometry
    }

    pub fn settings(&self) -> &IntegratorSettings {
        &self.settings
    }

    pub fn magnet(&self) -> &MagnetSpec {
        &self.params.magnet
    }

    pub fn command(&self) -> &DriveCommand {
        &self.drive.cmd
    }

    /// Time at which the current waveform started (phase zero).
    pub fn drive_started_at(&self) -> f64 {
        self.drive.started_at
    }

    pub fn profile(&self) -> &ForceProfile {
        &self.drive.profile
    }

    /// Replace the drive command; its waveform starts at phase zero at `now`.
    pub fn set_command(&mut self, cmd: DriveCommand, now: f64) -> Result<(), DynamicsError> {
        cmd.validate()?;
        let axis3 = tilt_axis(&cmd, &self.geometry);
        let profile = match self.profiles.iter().find(|(a, _)| *a == axis3) {
            Some((_, p)) => p.clone(),
            None => {
                let p = Arc::new(ForceProfile::build(
                    &self.windings,
                    &self.params.magnet,
                    axis3,
                    self.params.half_stroke(),
                    self.settings.profile_nodes,
                    self.settings.force_model,
                )?);
                self.profiles.push((axis3, p.clone()));
                p
            }
        };
        self.drive = ActiveDrive {
            cmd,
            started_at: now,
            axis: Vector2::new(axis3.x, axis3.y),
            profile,
        };
        Ok(())
    }

    /// Vibration axis in the world frame for a capsule at `heading`.
    pub fn axis_world(&self, heading: f64) -> Unit<Vector2<f64>> {
        let (s, c) = heading.sin_cos();
        let a = self.drive.axis;
        Unit::new_normalize(Vector2::new(c * a.x - s * a.y, s * a.x + c * a.y))
    }

    pub fn currents(&self, t: f64) -> CoilCurrents {
        let cmd = &self.drive.cmd;
        let rel = (t - self.drive.started_at).max(0.0);
        currents_in_phase(cmd, cmd.phase(rel) < cmd.duty)
    }

    /// Axial magnetic force on the magnet at stroke position `s` and time `t`, N.
    pub fn magnetic_force(&self, s: f64, t: f64) -> f64 {
        self.drive.profile.force(s, &self.currents(t).as_array())
    }

    fn motion(&self, st: &CapsuleState, u: &Vector2<f64>, f_mag: f64, ext: &Vector2<f64>) -> Motion {
        let p = &self.params;
        let m1 = p.magnet.mass;
        let m2 = p.body_mass;
        let mt = m1 + m2;
        let fb = p.bearing_friction();
        let half = p.half_stroke();
        let v_s = st.magnet.v_s;
        let mut push = f_mag;
        if v_s == 0.0 {
            // magnet riding with the body
            let g = ground_contact(ext, &st.velocity, p);
            let a = if g.stuck { Vector2::zeros() } else { (ext + g.force) / mt };
            push = f_mag - m1 * a.dot(u);
            let s = st.magnet.s;
            let held = push.abs() <= fb || (s >= half && push > 0.0) || (s <= -half && push < 0.0);
            if held {
                return Motion {
                    body_accel: a,
                    s_accel: 0.0,
                    stuck: g.stuck,
                    held: true,
                    push,
                };
            }
        }
        let sliding = if v_s != 0.0 { v_s.signum() } else { push.signum() };
        let f_internal = f_mag - fb * sliding;
        let applied = ext - u * f_internal;
        let g = ground_contact(&applied, &st.velocity, p);
        let a = if g.stuck {
            Vector2::zeros()
        } else {
            // axially the magnet is free; across the axis it rides with the body
            let f = applied + g.force;
            let fu = f.dot(u);
            u * (fu / m2) + (f - u * fu) / mt
        };
        let au = a.dot(u);
        Motion {
            body_accel: a,
            s_accel: f_internal / m1 - au,
            stuck: g.stuck,
            held: false,
            push: f_mag - m1 * au,
        }
    }

    fn advance(&self, st: &CapsuleState, m: &Motion, h: f64) -> CapsuleState {
        let mut out = *st;
        let v = if m.stuck {
            Vector2::zeros()
        } else {
            let v = st.velocity + m.body_accel * h;
            // kinetic friction brings the body to rest, never reverses it
            if st.velocity.norm() >= STICK_VELOCITY && v.dot(&st.velocity) < 0.0 {
                Vector2::zeros()
            } else {
                v
            }
        };
        let v_s = if m.held {
            0.0
        } else {
            let w = st.magnet.v_s + m.s_accel * h;
            if st.magnet.v_s != 0.0
                && w * st.magnet.v_s < 0.0
                && m.push.abs() <= self.params.bearing_friction()
            {
                0.0
            } else {
                w
            }
        };
        out.velocity = v;
        out.position += v * h;
        out.magnet.v_s = v_s;
        out.magnet.s += v_s * h;
        out
    }

    /// Integrate up to `h` with fixed currents. Stops early at an impact,
    /// which is resolved before returning. Returns the new state and the time used.
    fn substep(
        &self,
        st: &CapsuleState,
        h: f64,
        currents: &[f64; 4],
        ext: &Vector2<f64>,
        axis: &Unit<Vector2<f64>>,
        force_plastic: bool,
    ) -> Result<(CapsuleState, f64), DynamicsError> {
        let f_mag = self.drive.profile.force(st.magnet.s, currents);
        let m = self.motion(st, axis, f_mag, ext);
        let next = self.advance(st, &m, h);
        let half = self.params.half_stroke();
        if next.magnet.s.abs() <= half {
            return Ok((next, h));
        }
        let (side, wall) = if next.magnet.s > 0.0 {
            (Side::Front, half)
        } else {
            (Side::Back, -half)
        };
        let beyond = |s: f64| if wall > 0.0 { s > wall } else { s < wall };
        let (mut lo, mut hi) = (0.0, h);
        while hi - lo > self.settings.impact_time_tol {
            let mid = 0.5 * (lo + hi);
            if beyond(self.advance(st, &m, mid).magnet.s) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut at = self.advance(st, &m, hi);
        at.magnet.s = wall;
        let e = self.params.restitution;
        let e = if force_plastic || e * at.magnet.v_s.abs() < self.settings.rest_velocity {
            0.0
        } else {
            e
        };
        let out = resolve_impact_with(&at, &self.params, axis, side, e)?;
        Ok((out, hi))
    }

    pub fn step(&self, state: &CapsuleState, dt: f64) -> Result<CapsuleState, DynamicsError> {
        self.step_loaded(state, dt, None)
    }

    /// Advance one fixed step of length `dt` under an optional external load.
    pub fn step_loaded(
        &self,
        state: &CapsuleState,
        dt: f64,
        load: Option<&dyn BodyLoad>,
    ) -> Result<CapsuleState, DynamicsError> {
        if !(dt > 0.0 && dt <= DT_MAX * (1.0 + 1e-12)) {
            return Err(ValidationError::new("dt", format!("must lie in (0, {DT_MAX:e}]")).into());
        }
        if let Some(q) = state.non_finite() {
            return Err(DynamicsError::Diverged { quantity: q, t: state.t });
        }
        let ext = load.map_or_else(Vector2::zeros, |l| l.force(state));
        if !ext.iter().all(|v| v.is_finite()) {
            return Err(DynamicsError::Diverged {
                quantity: "external load",
                t: state.t,
            });
        }
        let axis = self.axis_world(state.heading);
        let cmd = &self.drive.cmd;
        let mut st = *state;
        let mut elapsed = 0.0;
        let mut events = 0;
        while dt - elapsed > dt * 1e-9 {
            let remaining = dt - elapsed;
            let t_rel = (state.t + elapsed - self.drive.started_at).max(0.0);
            // Switches closer than `tol` count as already passed, so every
            // sub-step makes progress despite rounding in the switch time.
            let tol = dt * 1e-9;
            let h = remaining.min((cmd.next_switch(t_rel + tol) - t_rel).max(tol));
            let first = cmd.phase(t_rel + 0.5 * h) < cmd.duty;
            let currents = currents_in_phase(cmd, first).as_array();
            let (next, used) =
                self.substep(&st, h, &currents, &ext, &axis, events >= MAX_EVENTS_PER_STEP)?;
            if used < h {
                events += 1;
            }
            st = next;
            elapsed += used;
        }
        st.t = state.t + dt;
        if let Some(q) = st.non_finite() {
            return Err(DynamicsError::Diverged { quantity: q, t: st.t });
        }
        Ok(st)
    }

    /// Integrate from `initial` for `duration` seconds, recording samples at
    /// the configured output rate (plus the first and last states).
    pub fn run(&self, initial: CapsuleState, duration: f64) -> Result<Trajectory, DynamicsError> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(ValidationError::new("duration", "must be positive").into());
        }
        let dt = self.settings.dt;
        let steps = (duration / dt).round() as usize;
        let stride = self.settings.output_stride();
        let mut samples = Vec::with_capacity(steps / stride + 2);
        let mut st = initial;
        samples.push(st);
        for k in 1..=steps {
            st = self.step(&st, dt)?;
            if k % stride == 0 || k == steps {
                samples.push(st);
            }
        }
        Ok(Trajectory::new(samples))
    }
}

/// Open-plane run from rest under a single command.
pub fn simulate(config: &SimConfig, cmd: &DriveCommand, duration: f64) -> Result<Trajectory, DynamicsError> {
    let sim = Simulator::new(
        config.capsule.clone(),
        config.coils.clone(),
        config.integrator.clone(),
        *cmd,
    )?;
    sim.run(CapsuleState::at_rest(), duration)
}

/// Open-plane run under a piecewise-constant command schedule of
/// `(start_time, command)` pairs sorted by time; the first entry should start at 0.
pub fn simulate_schedule(
    config: &SimConfig,
    schedule: &[(f64, DriveCommand)],
    duration: f64,
) -> Result<Trajectory, DynamicsError> {
    let first = schedule
        .first()
        .ok_or_else(|| ValidationError::new("schedule", "must not be empty"))?;
    let mut sim = Simulator::new(
        config.capsule.clone(),
        config.coils.clone(),
        config.integrator.clone(),
        first.1,
    )?;
    let dt = sim.settings.dt;
    let steps = (duration / dt).round() as usize;
    let stride = sim.settings.output_stride();
    let mut next = 1;
    let mut st = CapsuleState::at_rest();
    let mut samples = vec![st];
    for k in 1..=steps {
        while next < schedule.len() && st.t + 0.5 * dt >= schedule[next].0 {
            sim.set_command(schedule[next].1, st.t)?;
            next += 1;
        }
        st = sim.step(&st, dt)?;
        if k % stride == 0 || k == steps {
            samples.push(st);
        }
    }
    Ok(Trajectory::new(samples))
}
