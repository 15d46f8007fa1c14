use thiserror::Error;

/// Rejected input, tagged with the offending field name.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid `{field}`: {reason}")]
pub struct ValidationError {
    pub field: &'static str,
    pub reason: String,
}

impl ValidationError {
    pub fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MagneticsError {
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    /// Evaluation point is closer to a winding than the clearance allows.
    #[error("field point within {clearance:e} m of a wire segment (distance {distance:e} m)")]
    Singularity { distance: f64, clearance: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    Magnetics(#[from] MagneticsError),
    #[error("integration diverged at t = {t}: `{quantity}` is not finite")]
    Diverged { quantity: &'static str, t: f64 },
    #[error("impact resolution requested while not in contact with the {side:?} constraint (s = {s:e})")]
    NotInContact {
        side: crate::dynamics::Side,
        s: f64,
    },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("could not read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("could not parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}
