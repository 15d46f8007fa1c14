//! Random search over the uncalibrated parameters. Prints every candidate
//! that meets the locomotion targets, with its margins.
//!
//! cargo run --release --example calibrate -- [seed] [candidates]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vibrocap_core::*;

fn speed(sim: &Simulator, cmd: DriveCommand) -> Option<(f64, Option<f64>)> {
    let mut sim = sim.clone();
    sim.set_command(cmd, 0.0).ok()?;
    let tr = sim.run(CapsuleState::at_rest(), 5.0).ok()?;
    Some((average_speed(&tr).ok()? * 1e3, deviation_angle(&tr).ok()?))
}

struct Eval {
    one: Simulator,
    four: Simulator,
    base: DriveCommand,
}

impl Eval {
    fn new(cfg: &SimConfig) -> Option<Self> {
        let base = cfg.drive;
        let mk = |m| Simulator::new(cfg.capsule.clone(), cfg.coils.clone(), cfg.integrator.clone(), DriveCommand { method: m, ..base }).ok();
        Some(Self { one: mk(DriveMethod::OneCoil)?, four: mk(DriveMethod::FourCoil)?, base })
    }
    fn v(&self, m: DriveMethod, f: f64, d: f64) -> Option<f64> {
        let sim = if m == DriveMethod::OneCoil { &self.one } else { &self.four };
        speed(sim, DriveCommand { method: m, frequency: f, duty: d, ..self.base }).map(|x| x.0)
    }
}

const DUTIES: [f64; 6] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8];

/// Returns a summary line when every target holds.
fn check(cfg: &SimConfig) -> Option<String> {
    let ev = Eval::new(cfg)?;
    use DriveMethod::*;
    let o3 = ev.v(OneCoil, 10.0, 0.3)?;
    let o8 = ev.v(OneCoil, 10.0, 0.8)?;
    if !(o3 > 1.5 && o3 < 20.0 && o8 < -1.5 && o8 > -20.0) {
        return None;
    }
    let f306 = ev.v(FourCoil, 30.0, 0.6)?;
    if f306 < 4.0 {
        return None;
    }
    let mut one30 = f64::MIN;
    for d in DUTIES {
        one30 = one30.max(ev.v(OneCoil, 30.0, d)?);
        if one30 >= f306 {
            return None;
        }
    }
    let mut best = (f64::MIN, 0.0, 0.0);
    let mut outside = f64::MIN;
    for f in [10.0, 20.0, 30.0] {
        for d in DUTIES {
            let v = ev.v(FourCoil, f, d)?;
            if v > best.0 {
                best = (v, f, d);
            }
            if !(f == 30.0 && (0.5..=0.7).contains(&d)) {
                outside = outside.max(v);
            }
        }
    }
    if !(best.1 == 30.0 && (0.5..=0.7).contains(&best.2)) || best.0 < one30 * 1.1 {
        return None;
    }
    // robustness: dt halving on the criterion cells
    let mut half = cfg.clone();
    half.integrator.dt *= 0.5;
    let hv = Eval::new(&half)?;
    let mut worst: f64 = 0.0;
    for (m, f, d, v) in [(FourCoil, 30.0, 0.6, f306), (FourCoil, best.1, best.2, best.0), (OneCoil, 10.0, 0.3, o3), (OneCoil, 10.0, 0.8, o8)] {
        let h = hv.v(m, f, d)?;
        worst = worst.max(((h - v) / v).abs());
    }
    if worst > 0.01 {
        return None;
    }
    let (_, dev) = speed(&ev.four, DriveCommand { method: FourCoil, frequency: 30.0, duty: 0.6, ..ev.base })?;
    let dev = dev?;
    if (dev - 22.0).abs() > 2.0 {
        return None;
    }
    Some(format!(
        "o10/.3 {o3:+.2} o10/.8 {o8:+.2} one30max {one30:+.2} f30/.6 {f306:+.2} best {:+.2}@{}/{} outside {outside:+.2} dt {:.3}% dev {dev:.2}",
        best.0, best.1, best.2, worst * 100.0
    ))
}

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(1, |s| s.parse().unwrap());
    let n: usize = args.next().map_or(200, |s| s.parse().unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n {
        let mut cfg = SimConfig::calibrated();
        let mus: f64 = rng.random_range(0.05..0.40);
        cfg.capsule.ground_mu_static = mus;
        cfg.capsule.ground_mu_kinetic = mus * rng.random_range(0.75..1.0);
        cfg.capsule.restitution = rng.random_range(0.3..0.9);
        cfg.coils.coil_gap = rng.random_range(0.5e-3..3.5e-3);
        let a: f64 = rng.random_range(5.0e-3..7.0e-3);
        cfg.coils.semi_major = a;
        cfg.coils.semi_minor = rng.random_range(3.5e-3..a);
        if let Some(line) = check(&cfg) {
            println!(
                "#{i} mus {:.4} muk {:.4} e {:.3} gap {:.3} a {:.3} b {:.3} | {line}",
                cfg.capsule.ground_mu_static,
                cfg.capsule.ground_mu_kinetic,
                cfg.capsule.restitution,
                cfg.coils.coil_gap * 1e3,
                cfg.coils.semi_major * 1e3,
                cfg.coils.semi_minor * 1e3
            );
        }
    }
    eprintln!("done");
}
