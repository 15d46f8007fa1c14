//! JSON wire messages exchanged with session clients. Every message is one
//! text frame carrying a `type` tag and the protocol version `v`.

use serde::{Deserialize, Serialize};

use crate::actuation::{Direction, DriveCommand, DriveMethod};
use crate::config::SimConfig;

pub const PROTOCOL_VERSION: u32 = 1;

/// Messages a client may send. Only the session's controller may send them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlMessage {
    /// Change any subset of the drive command; applied atomically.
    Set {
        v: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        method: Option<DriveMethod>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        frequency: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duty: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Direction>,
        /// Current amplitude, A.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        current: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        repel_level: Option<f64>,
    },
    Pause {
        v: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<u64>,
    },
    Resume {
        v: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<u64>,
    },
    /// Put the capsule back at the origin, at rest, paused, at t = 0.
    Reset {
        v: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<u64>,
    },
}

impl ControlMessage {
    pub fn id(&self) -> Option<u64> {
        match self {
            ControlMessage::Set { id, .. }
            | ControlMessage::Pause { id, .. }
            | ControlMessage::Resume { id, .. }
            | ControlMessage::Reset { id, .. } => *id,
        }
    }

    pub fn version(&self) -> u32 {
        match self {
            ControlMessage::Set { v, .. }
            | ControlMessage::Pause { v, .. }
            | ControlMessage::Resume { v, .. }
            | ControlMessage::Reset { v, .. } => *v,
        }
    }

    /// `set` message with only the given fields; the rest are left unchanged.
    pub fn set() -> Self {
        ControlMessage::Set {
            v: PROTOCOL_VERSION,
            id: None,
            method: None,
            frequency: None,
            duty: None,
            direction: None,
            current: None,
            repel_level: None,
        }
    }

    pub fn pause() -> Self {
        ControlMessage::Pause {
            v: PROTOCOL_VERSION,
            id: None,
        }
    }

    pub fn resume() -> Self {
        ControlMessage::Resume {
            v: PROTOCOL_VERSION,
            id: None,
        }
    }

    pub fn reset() -> Self {
        ControlMessage::Reset {
            v: PROTOCOL_VERSION,
            id: None,
        }
    }

    /// Parse one text frame.
    pub fn parse(text: &str) -> Result<Self, ProtocolError> {
        // peek at the envelope first so errors can echo the id and name the version
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ProtocolError::malformed(None, e.to_string()))?;
        let id = raw.get("id").and_then(|v| v.as_u64());
        match raw.get("v") {
            None => return Err(ProtocolError::malformed(id, "missing field `v`".into())),
            Some(v) if v.as_u64() != Some(PROTOCOL_VERSION as u64) => {
                return Err(ProtocolError {
                    id,
                    code: ErrorCode::UnsupportedVersion,
                    field: Some("v".into()),
                    message: format!("protocol version {v} is not supported; expected {PROTOCOL_VERSION}"),
                })
            }
            _ => {}
        }
        serde_json::from_value(raw).map_err(|e| ProtocolError::malformed(id, e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("control message serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Controller,
    Observer,
}

/// How simulated time relates to wall time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClockMode {
    Realtime,
    /// Simulated time runs `factor` times faster than wall time.
    Accelerated { factor: f64 },
}

impl ClockMode {
    pub fn factor(&self) -> f64 {
        match self {
            ClockMode::Realtime => 1.0,
            ClockMode::Accelerated { factor } => *factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Not valid JSON, unknown type, or unknown/mistyped field.
    Malformed,
    UnsupportedVersion,
    /// Well-formed but out of range; `field` names the culprit.
    InvalidField,
    /// An observer tried to send a control message.
    NotController,
    /// The session has ended.
    SessionClosed,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{code:?}: {message}")]
pub struct ProtocolError {
    pub id: Option<u64>,
    pub code: ErrorCode,
    pub field: Option<String>,
    pub message: String,
}

impl ProtocolError {
    pub fn malformed(id: Option<u64>, message: String) -> Self {
        Self {
            id,
            code: ErrorCode::Malformed,
            field: None,
            message,
        }
    }

    pub fn new(id: Option<u64>, code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            id,
            code,
            field: None,
            message: message.into(),
        }
    }

    pub fn to_message(&self) -> ServerMessage {
        ServerMessage::Error(ErrorMessage {
            v: PROTOCOL_VERSION,
            id: self.id,
            code: self.code,
            field: self.field.clone(),
            message: self.message.clone(),
        })
    }
}

/// First message on every connection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelloMessage {
    pub v: u32,
    pub session: String,
    pub role: Role,
    /// Hz
    pub telemetry_rate: f64,
    pub clock: ClockMode,
    pub paused: bool,
    pub config: SimConfig,
}

/// Telemetry frame. Lengths in m, speeds in m/s, angles in rad unless
/// the name says `deg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    pub v: u32,
    /// Strictly increasing per session, including heartbeats while paused.
    pub seq: u64,
    /// Number of resets so far; `t` is strictly increasing within an epoch
    /// while running.
    pub epoch: u64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub s: f64,
    pub v_s: f64,
    /// Signed speed over the trailing averaging window, positive forward.
    pub avg_speed_window: f64,
    /// Deviation of the trailing-window displacement from the capsule axis;
    /// null when the capsule did not move.
    pub deviation_deg: Option<f64>,
    /// Position in the drive period, [0, 1); phase 1 while below the duty.
    pub drive_phase: f64,
    pub paused: bool,
    pub command: DriveCommand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AckMessage {
    pub v: u32,
    pub id: Option<u64>,
    /// Command in force after the control was applied.
    pub command: DriveCommand,
    pub paused: bool,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMessage {
    pub v: u32,
    pub id: Option<u64>,
    pub code: ErrorCode,
    pub field: Option<String>,
    pub message: String,
}

/// Messages the server sends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello(HelloMessage),
    State(StateMessage),
    Ack(AckMessage),
    Error(ErrorMessage),
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server message serializes")
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Apply the fields of a `set` message to `cmd`.
pub(crate) fn merged(cmd: &DriveCommand, msg: &ControlMessage) -> DriveCommand {
    let mut out = *cmd;
    if let ControlMessage::Set {
        method,
        frequency,
        duty,
        direction,
        current,
        repel_level,
        ..
    } = msg
    {
        if let Some(m) = method {
            out.method = *m;
        }
        if let Some(f) = frequency {
            out.frequency = *f;
        }
        if let Some(d) = duty {
            out.duty = *d;
        }
        if let Some(d) = direction {
            out.direction = *d;
        }
        if let Some(i) = current {
            out.current_amplitude = *i;
        }
        if let Some(r) = repel_level {
            out.repel_level = *r;
        }
    }
    out
}
