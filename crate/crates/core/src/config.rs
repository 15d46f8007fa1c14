//! Declarative simulation config, read from TOML.
//!
//! All quantities are SI (m, kg, s, A, A/m, Hz) except `coils.max_tilt_deg`.
//! A config file only needs the keys it changes; everything else comes from
//! the calibrated set.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::actuation::DriveCommand;
use crate::dynamics::{CapsuleParams, IntegratorSettings};
use crate::error::{ConfigError, ValidationError};
use crate::magnetics::DriveGeometry;

/// The calibrated parameter set shipped with the repository.
pub const CALIBRATED_TOML: &str = include_str!("../../../configs/calibrated.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub capsule: CapsuleParams,
    #[serde(default)]
    pub coils: DriveGeometry,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub drive: DriveCommand,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::calibrated()
    }
}

impl SimConfig {
    /// Measured device values plus the committed calibration.
    pub fn calibrated() -> Self {
        toml::from_str(CALIBRATED_TOML).expect("bundled calibration parses")
    }

    /// Parse `text` as overrides on top of the calibrated set.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let mut base: toml::Table = CALIBRATED_TOML.parse()?;
        overlay(&mut base, text.parse()?);
        let cfg: SimConfig = base.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        self.capsule.validate()?;
        self.coils.validate()?;
        self.integrator.validate()?;
        self.drive.validate()
    }
}

fn overlay(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => overlay(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuation::DriveMethod;

    #[test]
    fn bundled_calibration_is_valid_and_round_trips() {
        let c = SimConfig::calibrated();
        assert!(c.validate().is_ok());
        assert_eq!(SimConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
        assert_eq!(SimConfig::from_toml_str("").unwrap(), c);
    }

    #[test]
    fn partial_files_override_only_their_keys() {
        let c = SimConfig::from_toml_str("[drive]\nmethod = \"one_coil\"\nduty = 0.3\n").unwrap();
        let base = SimConfig::calibrated();
        assert_eq!(c.drive.method, DriveMethod::OneCoil);
        assert_eq!(c.drive.duty, 0.3);
        assert_eq!(c.drive.frequency, base.drive.frequency);
        assert_eq!(c.capsule, base.capsule);
    }

    #[test]
    fn table_values_survive_calibration() {
        let c = SimConfig::calibrated();
        assert_eq!(c.capsule.magnet.mass, 0.92e-3);
        assert_eq!(c.capsule.magnet.magnetization, 8.38e5);
        assert_eq!(c.capsule.stroke, 2.4e-3);
        assert_eq!(c.capsule.bearing_mu, 0.097);
        assert_eq!(c.coils.turns, 50);
        assert_eq!(c.drive.current_amplitude, 0.5);
        assert!((c.capsule.total_mass() - 5.38e-3).abs() < 1e-15);
    }

    #[test]
    fn bad_values_name_the_field() {
        match SimConfig::from_toml_str("[drive]\nduty = 1.5\n") {
            Err(ConfigError::Invalid(e)) => assert_eq!(e.field, "duty"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            SimConfig::from_toml_str("[capsule]\nbogus = 1\n"),
            Err(ConfigError::Parse(_))
        ));
    }
}
