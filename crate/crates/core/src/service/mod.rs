//! Interactive simulation sessions and the message protocol used to steer
//! them. Transport lives outside this crate; a session is a plain value
//! owned by whichever loop drives it.

mod protocol;
mod session;

pub use protocol::{
    AckMessage, ClockMode, ControlMessage, ErrorCode, ErrorMessage, HelloMessage, ProtocolError,
    Role, ServerMessage, StateMessage, PROTOCOL_VERSION,
};
pub use session::{Session, SessionId, SessionSettings, MAX_TELEMETRY_RATE};
