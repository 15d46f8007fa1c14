//! Shared fixtures for the benchmarks.

use nalgebra::Vector3;
use vibrocap_core::magnetics::Winding;
use vibrocap_core::SimConfig;

pub struct Fixture {
    pub config: SimConfig,
    pub windings: [Winding; 4],
    /// A point a little ahead of mid-stroke on the tilt axis.
    pub point: Vector3<f64>,
}

impl Fixture {
    pub fn calibrated() -> Self {
        let config = SimConfig::calibrated();
        let windings = config
            .coils
            .windings(&config.capsule.magnet, config.capsule.stroke)
            .expect("calibrated coils");
        let axis = vibrocap_core::tilt_axis(&config.drive, &config.coils);
        Self {
            point: axis * 0.5e-3,
            windings,
            config,
        }
    }
}
