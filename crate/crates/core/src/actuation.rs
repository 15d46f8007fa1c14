//! Square-wave coil currents for the one-coil and four-coil drive schemes.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::ValidationError;
use crate::magnetics::DriveGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveMethod {
    /// One attracting coil of the drive pair conducts per phase.
    OneCoil,
    /// Drive pair alternates attract/repel, lateral pair repels steadily.
    FourCoil,
}

impl DriveMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            DriveMethod::OneCoil => "one_coil",
            DriveMethod::FourCoil => "four_coil",
        }
    }
}

impl std::str::FromStr for DriveMethod {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "one_coil" | "one" | "1" => Ok(DriveMethod::OneCoil),
            "four_coil" | "four" | "4" => Ok(DriveMethod::FourCoil),
            other => Err(ValidationError::new("method", format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ForwardRight,
    BackwardLeft,
    ForwardLeft,
    BackwardRight,
}

impl Direction {
    /// Tilt of the vibration axis is to the capsule's right.
    pub fn tilts_right(self) -> bool {
        matches!(self, Direction::ForwardRight | Direction::BackwardLeft)
    }

    /// The B pair drives and the A pair repels.
    pub fn uses_b_pair(self) -> bool {
        !self.tilts_right()
    }

    /// Phase 1 attracts toward the rear coil.
    pub fn leads_backward(self) -> bool {
        matches!(self, Direction::BackwardLeft | Direction::BackwardRight)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::ForwardRight => "forward_right",
            Direction::BackwardLeft => "backward_left",
            Direction::ForwardLeft => "forward_left",
            Direction::BackwardRight => "backward_right",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "forward_right" | "f_r" | "fr" => Ok(Direction::ForwardRight),
            "backward_left" | "b_l" | "bl" => Ok(Direction::BackwardLeft),
            "forward_left" | "f_l" | "fl" => Ok(Direction::ForwardLeft),
            "backward_right" | "b_r" | "br" => Ok(Direction::BackwardRight),
            other => Err(ValidationError::new(
                "direction",
                format!("unknown direction `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveCommand {
    pub method: DriveMethod,
    /// Hz
    pub frequency: f64,
    /// Fraction of the period spent in phase 1, in (0, 1).
    pub duty: f64,
    /// A
    pub current_amplitude: f64,
    pub direction: Direction,
    /// Strength of the lateral (repelling) pair relative to the drive pair, in [0, 1].
    #[serde(default = "default_repel")]
    pub repel_level: f64,
}

fn default_repel() -> f64 {
    1.0
}

impl Default for DriveCommand {
    fn default() -> Self {
        Self {
            method: DriveMethod::FourCoil,
            frequency: 30.0,
            duty: 0.6,
            current_amplitude: 0.5,
            direction: Direction::ForwardRight,
            repel_level: 1.0,
        }
    }
}

impl DriveCommand {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(ValidationError::new("duty", "must lie strictly between 0 and 1"));
        }
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(ValidationError::new("frequency", "must be positive and finite"));
        }
        if !(self.current_amplitude >= 0.0 && self.current_amplitude.is_finite()) {
            return Err(ValidationError::new("current_amplitude", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.repel_level) {
            return Err(ValidationError::new("repel_level", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    /// Fractional position in the drive period at time `t` (s since the
    /// waveform started).
    pub fn phase(&self, t: f64) -> f64 {
        let x = t * self.frequency;
        x - x.floor()
    }

    /// First phase boundary strictly after `t`.
    pub fn next_switch(&self, t: f64) -> f64 {
        let x = t * self.frequency;
        let cycle = x.floor();
        let mid = cycle + self.duty;
        let b = if mid > x { mid } else { cycle + 1.0 };
        b / self.frequency
    }
}

/// Signed coil currents; the sign follows the coil's winding sense
/// (see [`DriveGeometry`]).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoilCurrents {
    pub i_a1: f64,
    pub i_a2: f64,
    pub i_b1: f64,
    pub i_b2: f64,
}

impl CoilCurrents {
    pub fn as_array(&self) -> [f64; 4] {
        [self.i_a1, self.i_a2, self.i_b1, self.i_b2]
    }

    /// (rear, front) currents of whichever pair drives for `direction`.
    pub fn drive_pair(&self, direction: Direction) -> (f64, f64) {
        if direction.uses_b_pair() {
            (self.i_b1, self.i_b2)
        } else {
            (self.i_a1, self.i_a2)
        }
    }

    /// (rear, front) currents of the lateral pair for `direction`.
    pub fn lateral_pair(&self, direction: Direction) -> (f64, f64) {
        if direction.uses_b_pair() {
            (self.i_a1, self.i_a2)
        } else {
            (self.i_b1, self.i_b2)
        }
    }

    fn mirrored(self) -> Self {
        // Reflection across the capsule axis: swap the pairs and reverse
        // polarity, since the B pair is wound opposite to the mirrored A pair.
        Self {
            i_a1: 0.0 - self.i_b1,
            i_a2: 0.0 - self.i_b2,
            i_b1: 0.0 - self.i_a1,
            i_b2: 0.0 - self.i_a2,
        }
    }
}

/// Coil currents at `t` seconds after the waveform started.
pub fn currents_at(cmd: &DriveCommand, t: f64) -> Result<CoilCurrents, ValidationError> {
    cmd.validate()?;
    if !(t >= 0.0) {
        return Err(ValidationError::new("t", "must be non-negative"));
    }
    Ok(currents_in_phase(cmd, cmd.phase(t) < cmd.duty))
}

/// Currents during phase 1 (`first == true`) or phase 2 of `cmd`.
pub fn currents_in_phase(cmd: &DriveCommand, first: bool) -> CoilCurrents {
    let i = cmd.current_amplitude;
    let attract_front = first != cmd.direction.leads_backward();
    let fr = match cmd.method {
        DriveMethod::OneCoil => {
            if attract_front {
                CoilCurrents { i_a2: i, ..Default::default() }
            } else {
                CoilCurrents { i_a1: i, ..Default::default() }
            }
        }
        DriveMethod::FourCoil => {
            let ib = cmd.repel_level * i;
            let (a1, a2) = if attract_front { (-i, i) } else { (i, -i) };
            CoilCurrents {
                i_a1: a1,
                i_a2: a2,
                i_b1: ib,
                i_b2: ib,
            }
        }
    };
    if cmd.direction.uses_b_pair() {
        fr.mirrored()
    } else {
        fr
    }
}

/// How the four-coil tilt grows with the lateral pair's strength.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TiltResponse {
    #[default]
    Linear,
    /// `level.powf(exponent)`
    Power { exponent: f64 },
}

impl TiltResponse {
    pub fn apply(&self, level: f64) -> f64 {
        let level = level.clamp(0.0, 1.0);
        match *self {
            TiltResponse::Linear => level,
            TiltResponse::Power { exponent } => level.powf(exponent),
        }
    }
}

/// Tilt angle of the vibration axis from the capsule axis, radians (unsigned).
pub fn tilt_angle(cmd: &DriveCommand, geometry: &DriveGeometry) -> f64 {
    match cmd.method {
        DriveMethod::OneCoil => geometry.max_tilt(),
        DriveMethod::FourCoil => geometry.max_tilt() * geometry.tilt_response.apply(cmd.repel_level),
    }
}

/// Unit vibration axis in the capsule frame, pointing toward the front coils.
pub fn tilt_axis(cmd: &DriveCommand, geometry: &DriveGeometry) -> Vector3<f64> {
    let th = tilt_angle(cmd, geometry);
    let lateral = if cmd.direction.tilts_right() { -th.sin() } else { th.sin() };
    Vector3::new(th.cos(), lateral, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cmd(method: DriveMethod, direction: Direction, duty: f64) -> DriveCommand {
        DriveCommand {
            method,
            frequency: 10.0,
            duty,
            current_amplitude: 0.5,
            direction,
            repel_level: 1.0,
        }
    }

    const DIRS: [Direction; 4] = [
        Direction::ForwardRight,
        Direction::BackwardLeft,
        Direction::ForwardLeft,
        Direction::BackwardRight,
    ];

    #[test]
    fn one_coil_first_phase_energizes_a2() {
        let c = cmd(DriveMethod::OneCoil, Direction::ForwardRight, 0.3);
        let i = currents_at(&c, 0.01).unwrap();
        assert_eq!(i.as_array(), [0.0, 0.5, 0.0, 0.0]);
        let i = currents_at(&c, 0.05).unwrap();
        assert_eq!(i.as_array(), [0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn four_coil_patterns() {
        let mut c = cmd(DriveMethod::FourCoil, Direction::ForwardRight, 0.5);
        c.repel_level = 0.4;
        assert_eq!(currents_at(&c, 0.01).unwrap().as_array(), [-0.5, 0.5, 0.2, 0.2]);
        assert_eq!(currents_at(&c, 0.07).unwrap().as_array(), [0.5, -0.5, 0.2, 0.2]);
        c.repel_level = 0.0;
        let i = currents_at(&c, 0.01).unwrap();
        assert_eq!((i.i_b1, i.i_b2), (0.0, 0.0));
    }

    #[test]
    fn zero_amplitude_is_silent() {
        for m in [DriveMethod::OneCoil, DriveMethod::FourCoil] {
            for d in DIRS {
                let mut c = cmd(m, d, 0.4);
                c.current_amplitude = 0.0;
                for k in 0..20 {
                    let i = currents_at(&c, k as f64 * 0.0123).unwrap();
                    assert!(i.as_array().iter().all(|x| *x == 0.0));
                }
            }
        }
    }

    #[test]
    fn four_coil_drive_pair_has_zero_mean_at_half_duty() {
        // Closed form: I*d*T - I*(1-d)*T = 0 at d = 1/2.
        let c = cmd(DriveMethod::FourCoil, Direction::ForwardRight, 0.5);
        let n = 10_000;
        let dt = c.period() / n as f64;
        let (mut a1, mut a2) = (0.0, 0.0);
        for k in 0..n {
            let i = currents_at(&c, (k as f64 + 0.5) * dt).unwrap();
            a1 += i.i_a1 * dt;
            a2 += i.i_a2 * dt;
        }
        assert!(a1.abs() < 1e-12 && a2.abs() < 1e-12, "{a1} {a2}");
    }

    #[test]
    fn rejects_bad_duty_and_time() {
        let c = cmd(DriveMethod::OneCoil, Direction::ForwardRight, 1.0);
        assert_eq!(currents_at(&c, 0.0).unwrap_err().field, "duty");
        let c = cmd(DriveMethod::OneCoil, Direction::ForwardRight, 0.0);
        assert_eq!(currents_at(&c, 0.0).unwrap_err().field, "duty");
        let c = cmd(DriveMethod::OneCoil, Direction::ForwardRight, 0.5);
        assert_eq!(currents_at(&c, -1.0).unwrap_err().field, "t");
    }

    #[test]
    fn tilt_axes() {
        let g = DriveGeometry::default();
        let one = tilt_axis(&cmd(DriveMethod::OneCoil, Direction::ForwardRight, 0.5), &g);
        let angle = one.y.atan2(one.x).to_degrees();
        assert!((angle + 22.0).abs() < 1e-12);

        let mut four = cmd(DriveMethod::FourCoil, Direction::ForwardRight, 0.5);
        four.repel_level = 0.0;
        assert_eq!(tilt_axis(&four, &g), Vector3::new(1.0, 0.0, 0.0));
        four.repel_level = 1.0;
        let ax = tilt_axis(&four, &g);
        let deg = (-ax.y).atan2(ax.x).to_degrees();
        assert!((deg - 23.65).abs() < 2.0);
        four.repel_level = 0.5;
        let half = tilt_angle(&four, &g).to_degrees();
        assert!((half - 11.0).abs() < 1e-12);
    }

    #[test]
    fn next_switch_lands_on_boundaries() {
        let c = cmd(DriveMethod::OneCoil, Direction::ForwardRight, 0.3);
        assert!((c.next_switch(0.0) - 0.03).abs() < 1e-15);
        assert!((c.next_switch(0.03) - 0.1).abs() < 1e-15);
        assert!((c.next_switch(0.05) - 0.1).abs() < 1e-15);
        assert!((c.next_switch(0.1) - 0.13).abs() < 1e-15);
    }

    fn method() -> impl Strategy<Value = DriveMethod> {
        prop_oneof![Just(DriveMethod::OneCoil), Just(DriveMethod::FourCoil)]
    }

    fn direction() -> impl Strategy<Value = Direction> {
        prop_oneof![
            Just(Direction::ForwardRight),
            Just(Direction::BackwardLeft),
            Just(Direction::ForwardLeft),
            Just(Direction::BackwardRight)
        ]
    }

    proptest! {
        #[test]
        fn periodic_and_bounded(
            m in method(), d in direction(), duty in 0.05f64..0.95, f in 1.0f64..60.0,
            amp in 0.0f64..2.0, repel in 0.0f64..=1.0, t in 0.0f64..10.0,
        ) {
            let c = DriveCommand { method: m, frequency: f, duty, current_amplitude: amp, direction: d, repel_level: repel };
            let x = (t * f).fract();
            // stay away from the phase boundaries, where one ulp decides the phase
            prop_assume!((x - duty).abs() > 1e-9 && x > 1e-9 && x < 1.0 - 1e-9);
            let now = currents_at(&c, t).unwrap();
            let later = currents_at(&c, t + 1.0 / f).unwrap();
            prop_assert_eq!(now, later);
            for i in now.as_array() {
                prop_assert!(i.abs() <= amp);
            }
        }

        #[test]
        fn pair_structure(d in direction(), duty in 0.05f64..0.95, repel in 0.0f64..=1.0, t in 0.0f64..3.0) {
            let one = DriveCommand { method: DriveMethod::OneCoil, frequency: 20.0, duty, current_amplitude: 0.5, direction: d, repel_level: repel };
            let i = currents_at(&one, t).unwrap();
            let (r, f) = i.drive_pair(d);
            prop_assert!((r != 0.0) ^ (f != 0.0));
            prop_assert_eq!(i.lateral_pair(d), (0.0, 0.0));

            let four = DriveCommand { method: DriveMethod::FourCoil, ..one };
            let i = currents_at(&four, t).unwrap();
            let (r, f) = i.drive_pair(d);
            prop_assert_eq!(r, -f);
            let lat = i.lateral_pair(d);
            prop_assert_eq!(lat.0, lat.1);
            prop_assert_eq!(lat, currents_at(&four, 0.0).unwrap().lateral_pair(d));
        }

        #[test]
        fn phase_one_occupancy(duty in 0.05f64..0.95, f in 1.0f64..60.0, per_period in 100usize..2000) {
            let c = DriveCommand { method: DriveMethod::OneCoil, frequency: f, duty, current_amplitude: 0.5, direction: Direction::ForwardRight, repel_level: 0.0 };
            let dt = 1.0 / (f * per_period as f64);
            let on = (0..per_period)
                .filter(|k| currents_at(&c, *k as f64 * dt).unwrap().i_a2 != 0.0)
                .count();
            let expected = duty * per_period as f64;
            prop_assert!((on as f64 - expected).abs() <= 1.0);
        }

        #[test]
        fn mirrored_direction_mirrors_axis(m in method(), repel in 0.0f64..=1.0) {
            let g = DriveGeometry::default();
            let base = DriveCommand { method: m, frequency: 10.0, duty: 0.5, current_amplitude: 0.5, direction: Direction::ForwardRight, repel_level: repel };
            let left = DriveCommand { direction: Direction::ForwardLeft, ..base };
            let r = tilt_axis(&base, &g);
            let l = tilt_axis(&left, &g);
            prop_assert_eq!(r.x, l.x);
            prop_assert_eq!(r.y, -l.y);
            prop_assert_eq!(r.z, l.z);
        }
    }
}
