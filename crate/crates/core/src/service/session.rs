use std::collections::VecDeque;
use std::fmt;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::protocol::{
    merged, AckMessage, ClockMode, ControlMessage, ErrorCode, HelloMessage, ProtocolError, Role,
    StateMessage, PROTOCOL_VERSION,
};
use crate::config::SimConfig;
use crate::dynamics::{CapsuleState, Simulator, Trajectory};
use crate::error::{DynamicsError, ValidationError};

pub const MAX_TELEMETRY_RATE: f64 = 120.0;

/// Opaque session token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SessionId(String);

impl SessionId {
    pub fn random() -> Self {
        Self(format!("{:016x}", rand::random::<u64>()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SessionId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SessionSettings {
    /// Telemetry frames per second, at most [`MAX_TELEMETRY_RATE`].
    pub telemetry_rate: f64,
    pub clock: ClockMode,
    /// Trailing window for the reported speed and deviation, s.
    pub speed_window: f64,
}

impl Default for SessionSettings {
    fn default() -> Self {
        Self {
            telemetry_rate: 30.0,
            clock: ClockMode::Realtime,
            speed_window: 1.0,
        }
    }
}

impl SessionSettings {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.telemetry_rate > 0.0 && self.telemetry_rate <= MAX_TELEMETRY_RATE) {
            return Err(ValidationError::new(
                "telemetry_rate",
                format!("must lie in (0, {MAX_TELEMETRY_RATE}] Hz"),
            ));
        }
        let f = self.clock.factor();
        if !(f > 0.0 && f.is_finite()) {
            return Err(ValidationError::new("clock.factor", "must be positive"));
        }
        if !(self.speed_window > 0.0 && self.speed_window.is_finite()) {
            return Err(ValidationError::new("speed_window", "must be positive"));
        }
        Ok(())
    }
}

/// One interactive simulation. All state changes go through [`Session::apply`]
/// and the step methods, so a single owner loop can drive it.
#[derive(Debug, Clone)]
pub struct Session {
    id: SessionId,
    config: SimConfig,
    settings: SessionSettings,
    sim: Simulator,
    state: CapsuleState,
    paused: bool,
    seq: u64,
    epoch: u64,
    steps: u64,
    trail: VecDeque<(f64, Vector2<f64>)>,
    recorded: Option<Vec<CapsuleState>>,
}

impl Session {
    /// New session at t = 0, paused, driving `config.drive`.
    pub fn create(config: SimConfig, settings: SessionSettings) -> Result<Self, DynamicsError> {
        config.validate()?;
        settings.validate()?;
        let sim = Simulator::from_config(&config)?;
        let state = CapsuleState::at_rest();
        Ok(Self {
            id: SessionId::random(),
            config,
            settings,
            sim,
            state,
            paused: true,
            seq: 0,
            epoch: 0,
            steps: 0,
            trail: VecDeque::from([(state.t, state.position)]),
            recorded: None,
        })
    }

    pub fn id(&self) -> &SessionId {
        &self.id
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn settings(&self) -> &SessionSettings {
        &self.settings
    }

    pub fn state(&self) -> &CapsuleState {
        &self.state
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn dt(&self) -> f64 {
        self.config.integrator.dt
    }

    pub fn command(&self) -> &crate::actuation::DriveCommand {
        self.sim.command()
    }

    /// Start keeping output-rate samples from the current state on.
    pub fn record(&mut self) {
        self.recorded = Some(vec![self.state]);
    }

    pub fn recorded(&self) -> Option<Trajectory> {
        self.recorded.as_ref().map(|s| Trajectory::new(s.clone()))
    }

    pub fn hello(&self, role: Role) -> HelloMessage {
        HelloMessage {
            v: PROTOCOL_VERSION,
            session: self.id.to_string(),
            role,
            telemetry_rate: self.settings.telemetry_rate,
            clock: self.settings.clock,
            paused: self.paused,
            config: SimConfig {
                drive: *self.sim.command(),
                ..self.config.clone()
            },
        }
    }

    /// Apply one control message between integration steps.
    pub fn apply(&mut self, msg: &ControlMessage) -> Result<AckMessage, ProtocolError> {
        let id = msg.id();
        if msg.version() != PROTOCOL_VERSION {
            return Err(ProtocolError {
                id,
                code: ErrorCode::UnsupportedVersion,
                field: Some("v".into()),
                message: format!("expected protocol version {PROTOCOL_VERSION}"),
            });
        }
        match msg {
            ControlMessage::Set { .. } => {
                let cmd = merged(self.sim.command(), msg);
                cmd.validate().map_err(|e| invalid(id, e))?;
                if cmd != *self.sim.command() {
                    self.sim.set_command(cmd, self.state.t).map_err(|e| match e {
                        DynamicsError::Invalid(e) => invalid(id, e),
                        other => ProtocolError::new(id, ErrorCode::InvalidField, other.to_string()),
                    })?;
                }
            }
            ControlMessage::Pause { .. } => self.paused = true,
            ControlMessage::Resume { .. } => self.paused = false,
            ControlMessage::Reset { .. } => self.reset(),
        }
        Ok(AckMessage {
            v: PROTOCOL_VERSION,
            id,
            command: *self.sim.command(),
            paused: self.paused,
            t: self.state.t,
        })
    }

    fn reset(&mut self) {
        let cmd = *self.sim.command();
        self.sim
            .set_command(cmd, 0.0)
            .expect("current command was already accepted");
        self.state = CapsuleState::at_rest();
        self.paused = true;
        self.epoch += 1;
        self.steps = 0;
        self.trail.clear();
        self.trail.push_back((0.0, self.state.position));
        if self.recorded.is_some() {
            self.record();
        }
    }

    /// Integrate `n` steps unless paused. Returns the steps taken.
    pub fn step_n(&mut self, n: u64) -> Result<u64, DynamicsError> {
        if self.paused {
            return Ok(0);
        }
        let dt = self.dt();
        let stride = self.config.integrator.output_stride() as u64;
        for _ in 0..n {
            self.state = self.sim.step(&self.state, dt)?;
            self.steps += 1;
            if self.steps.is_multiple_of(stride) {
                self.trail.push_back((self.state.t, self.state.position));
                if let Some(r) = &mut self.recorded {
                    r.push(self.state);
                }
            }
        }
        let start = self.state.t - self.settings.speed_window;
        while self.trail.len() > 1 && self.trail[1].0 <= start {
            self.trail.pop_front();
        }
        Ok(n)
    }

    /// Integrate the whole number of steps closest to `duration` seconds.
    pub fn advance(&mut self, duration: f64) -> Result<u64, DynamicsError> {
        self.step_n((duration / self.dt()).round().max(0.0) as u64)
    }

    /// Telemetry frame for the current state; every call gets a new `seq`.
    pub fn snapshot(&mut self) -> StateMessage {
        self.seq += 1;
        let st = &self.state;
        let (t0, p0) = self.trail.front().copied().unwrap_or((st.t, st.position));
        let d = st.position - p0;
        let span = st.t - t0;
        let forward = st.forward();
        let avg = if span > 0.0 {
            d.norm().copysign(d.dot(&forward)) / span
        } else {
            0.0
        };
        let deviation = (d.norm() > 1e-12).then(|| {
            let across = (d.x * forward.y - d.y * forward.x).abs();
            across.atan2(d.dot(&forward).abs()).to_degrees()
        });
        let cmd = *self.sim.command();
        StateMessage {
            v: PROTOCOL_VERSION,
            seq: self.seq,
            epoch: self.epoch,
            t: st.t,
            x: st.position.x,
            y: st.position.y,
            heading: st.heading,
            s: st.magnet.s,
            v_s: st.magnet.v_s,
            avg_speed_window: if d.norm() > 0.0 { avg } else { 0.0 },
            deviation_deg: deviation,
            drive_phase: cmd.phase(st.t - self.sim.drive_started_at()),
            paused: self.paused,
            command: cmd,
        }
    }
}

fn invalid(id: Option<u64>, e: ValidationError) -> ProtocolError {
    ProtocolError {
        id,
        code: ErrorCode::InvalidField,
        field: Some(e.field.to_string()),
        message: e.reason,
    }
}
