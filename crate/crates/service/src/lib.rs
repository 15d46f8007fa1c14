//! WebSocket host for interactive capsule sessions.
//!
//! Each session runs on its own thread, which owns the simulation state.
//! Clients talk to it through a request queue, and telemetry fans out
//! through a latest-value channel so a slow client never stalls the
//! simulation. The message format is defined in `vibrocap_core::service`
//! and documented in `docs/protocol.md`.

mod runner;
mod server;

pub use runner::{spawn, ClientGuard, RunnerOptions, SessionHandle};
pub use server::{router, serve, ServerConfig};
