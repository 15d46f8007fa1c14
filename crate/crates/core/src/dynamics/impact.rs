use nalgebra::{Unit, Vector2};

use super::params::CapsuleParams;
use super::state::CapsuleState;
use super::Side;
use crate::error::DynamicsError;

/// Newtonian impact of the magnet on a stroke constraint with the
/// configured restitution. `axis` is the vibration axis in the world frame.
pub fn resolve_impact(
    state: &CapsuleState,
    params: &CapsuleParams,
    axis: &Unit<Vector2<f64>>,
    side: Side,
) -> Result<CapsuleState, DynamicsError> {
    resolve_impact_with(state, params, axis, side, params.restitution)
}

/// As [`resolve_impact`] with an explicit coefficient of restitution.
///
/// The relative axial velocity becomes `-e·v_s`; the exchanged impulse keeps
/// the total axial momentum of magnet and body unchanged. Velocity components
/// across the axis are untouched. A magnet already moving away from the
/// constraint is returned unchanged.
pub fn resolve_impact_with(
    state: &CapsuleState,
    params: &CapsuleParams,
    axis: &Unit<Vector2<f64>>,
    side: Side,
    restitution: f64,
) -> Result<CapsuleState, DynamicsError> {
    let half = params.half_stroke();
    let wall = match side {
        Side::Front => half,
        Side::Back => -half,
    };
    let s = state.magnet.s;
    if (s - wall).abs() > 1e-9 * params.stroke {
        return Err(DynamicsError::NotInContact { side, s });
    }
    let v_s = state.magnet.v_s;
    let approaching = match side {
        Side::Front => v_s > 0.0,
        Side::Back => v_s < 0.0,
    };
    let mut out = *state;
    out.magnet.s = wall;
    if !approaching {
        return Ok(out);
    }
    let m1 = params.magnet.mass;
    let m2 = params.body_mass;
    let body_gain = (1.0 + restitution) * v_s * m1 / (m1 + m2);
    out.velocity = state.velocity + axis.into_inner() * body_gain;
    out.magnet.v_s = -restitution * v_s;
    Ok(out)
}
