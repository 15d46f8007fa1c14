//! Two-body vibro-impact model: a magnet sliding along the tilted bearing
//! axis inside a capsule body that moves on a plane under Coulomb friction.

mod friction;
mod impact;
mod integrator;
mod params;
mod profile;
mod state;
mod trajectory;

pub use friction::{ground_contact, ground_friction, GroundContact, STICK_VELOCITY};
pub use impact::{resolve_impact, resolve_impact_with};
pub use integrator::{simulate, simulate_schedule, BodyLoad, Simulator, DT_MAX};
pub use params::{CapsuleParams, IntegratorSettings};
pub use profile::ForceProfile;
pub use state::{CapsuleState, MagnetState};
pub use trajectory::{average_speed, deviation_angle, Trajectory};

use serde::{Deserialize, Serialize};

/// Which stroke constraint the magnet strikes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Front,
    Back,
}
