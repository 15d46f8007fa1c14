use nalgebra::Vector2;

use super::params::CapsuleParams;

/// Speeds below this count as rest for the stick test, m/s.
pub const STICK_VELOCITY: f64 = 1.0e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundContact {
    pub force: Vector2<f64>,
    /// Static friction holds the body; its velocity must be clamped to zero.
    pub stuck: bool,
}

/// Coulomb ground contact for a body under tangential `body_force` moving at
/// `body_velocity`, with normal load `(body + magnet)·g`.
pub fn ground_contact(
    body_force: &Vector2<f64>,
    body_velocity: &Vector2<f64>,
    params: &CapsuleParams,
) -> GroundContact {
    let load = params.normal_load();
    let speed = body_velocity.norm();
    if speed < STICK_VELOCITY {
        let applied = body_force.norm();
        if applied <= params.ground_mu_static * load {
            return GroundContact {
                force: -body_force,
                stuck: true,
            };
        }
        // breaking away: kinetic friction opposes the applied force
        return GroundContact {
            force: -body_force * (params.ground_mu_kinetic * load / applied),
            stuck: false,
        };
    }
    GroundContact {
        force: -body_velocity * (params.ground_mu_kinetic * load / speed),
        stuck: false,
    }
}

pub fn ground_friction(
    body_force: &Vector2<f64>,
    body_velocity: &Vector2<f64>,
    params: &CapsuleParams,
) -> Vector2<f64> {
    ground_contact(body_force, body_velocity, params).force
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(mu_s: f64, mu_k: f64) -> CapsuleParams {
        CapsuleParams {
            ground_mu_static: mu_s,
            ground_mu_kinetic: mu_k,
            ..Default::default()
        }
    }

    #[test]
    fn stiction_balances_small_force() {
        // mu_s * N = 0.01 N
        let p = params(0.01 / (5.38e-3 * 9.81), 0.0);
        let f = Vector2::new(0.001, 0.0);
        let c = ground_contact(&f, &Vector2::zeros(), &p);
        assert!(c.stuck);
        assert_eq!(c.force, Vector2::new(-0.001, 0.0));
        assert_eq!(c.force + f, Vector2::zeros());
    }

    #[test]
    fn kinetic_friction_opposes_motion() {
        let p = params(0.35, 0.3);
        let fr = ground_friction(&Vector2::zeros(), &Vector2::new(0.01, 0.0), &p);
        let expect = -0.3 * 5.38e-3 * 9.81;
        assert!((fr.x - expect).abs() < 1e-15 && fr.y == 0.0, "{fr:?}");
    }

    #[test]
    fn frictionless_sliding() {
        let p = params(0.0, 0.0);
        let fr = ground_friction(&Vector2::new(0.3, 0.1), &Vector2::new(0.01, 0.02), &p);
        assert_eq!(fr, Vector2::zeros());
    }

    #[test]
    fn breakaway_from_rest() {
        let p = params(0.35, 0.3);
        let load = p.normal_load();
        let f = Vector2::new(0.0, 0.4 * load);
        let c = ground_contact(&f, &Vector2::zeros(), &p);
        assert!(!c.stuck);
        assert!((c.force.y + 0.3 * load).abs() < 1e-15);
    }
}
