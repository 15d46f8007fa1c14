//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Reference values are computed here from closed forms or independent
//! numerics, never from the code under test.

// `!(a < b)` is deliberate: NaN must fail
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{Isometry3, Unit, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vibrocap_core::dynamics::{resolve_impact_with, Side};
use vibrocap_core::magnetics::{
    discretize_ellipse, field_at, field_gradient, wrench_on_dipole, CoilSpec, DipolePose, DrivenCoil,
    ForceModel, Polyline, Winding,
};
use vibrocap_core::scenarios::{run_sweep, SweepPlan};
use vibrocap_core::service::{ControlMessage, Session, SessionSettings};
use vibrocap_core::{
    average_speed, deviation_angle, simulate, CapsuleParams, CapsuleState, DriveCommand, DriveMethod,
    SimConfig, Simulator, Trajectory,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ---- independent references ----

const MU0: f64 = 4.0e-7 * PI;
const CURRENT: f64 = 0.5;
const TURNS: u32 = 50;

/// Straight filament field from the textbook angle form
/// `μ0 I / (4π d) (cos θ1 - cos θ2)`, direction `dl × r̂⊥`.
fn filament(a: &Vector3<f64>, b: &Vector3<f64>, p: &Vector3<f64>, current: f64) -> Vector3<f64> {
    let l = b - a;
    let len = l.norm();
    let u = l / len;
    let ap = p - a;
    let along = ap.dot(&u);
    let perp = ap - u * along;
    let d = perp.norm();
    let cos1 = along / (along * along + d * d).sqrt();
    let cos2 = (along - len) / ((along - len).powi(2) + d * d).sqrt();
    u.cross(&(perp / d)) * (MU0 * current / (4.0 * PI * d) * (cos1 - cos2))
}

fn reference_field(poly: &Polyline, current: f64, turns: u32, p: &Vector3<f64>) -> Vector3<f64> {
    poly.segments()
        .map(|(a, b)| filament(a, b, p, current))
        .sum::<Vector3<f64>>()
        * turns as f64
}

fn table_magnet_moment() -> f64 {
    // 4 mm diameter, 10 mm long, magnetized to 8.38e5 A/m
    PI * 2.0e-3f64.powi(2) * 10.0e-3 * 8.38e5
}

fn calibrated_coil() -> CoilSpec {
    let cfg = SimConfig::calibrated();
    CoilSpec {
        semi_major: cfg.coils.semi_major,
        semi_minor: cfg.coils.semi_minor,
        turns: TURNS,
        current_amplitude: CURRENT,
        pose: Isometry3::identity(),
        n_segments: cfg.coils.n_segments,
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n < 1.0 {
            return v / n;
        }
    }
}

fn speed_mms(cfg: &SimConfig, method: DriveMethod, f: f64, d: f64) -> Result<(f64, Trajectory), String> {
    let cmd = DriveCommand {
        method,
        frequency: f,
        duty: d,
        ..cfg.drive
    };
    let tr = simulate(cfg, &cmd, 5.0).map_err(|e| e.to_string())?;
    let v = average_speed(&tr).map_err(|e| e.to_string())? * 1e3;
    Ok((v, tr))
}

fn same_bits(a: &Trajectory, b: &Trajectory) -> bool {
    let key = |s: &CapsuleState| {
        [
            s.t,
            s.position.x,
            s.position.y,
            s.velocity.x,
            s.velocity.y,
            s.heading,
            s.magnet.s,
            s.magnet.v_s,
        ]
        .map(f64::to_bits)
    };
    a.len() == b.len() && a.samples().iter().zip(b.samples()).all(|(x, y)| key(x) == key(y))
}

// ---- criteria ----

fn loop_field_oracle() -> Check {
    let start = Instant::now();
    let r = 5.0e-3;
    let poly = discretize_ellipse(&CoilSpec::circular(r, TURNS, Isometry3::identity(), 256)).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let z = 5.0 * r * k as f64 / 9.0;
        let b = field_at(&poly, CURRENT, TURNS, &Vector3::new(0.0, 0.0, z)).map_err(|e| e.to_string())?;
        let exact = MU0 * CURRENT * TURNS as f64 * r * r / (2.0 * (r * r + z * z).powf(1.5));
        let err = (b - Vector3::new(0.0, 0.0, exact)).norm() / exact;
        worst = worst.max(err);
    }
    let elapsed = start.elapsed();
    ensure!(worst < 1e-3, "worst relative error {worst:.3e} exceeds 1e-3");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("worst relative error {worst:.2e} over 10 heights, {elapsed:.1?}"))
}

fn dipole_force_matches_energy_gradient() -> Check {
    let start = Instant::now();
    let spec = calibrated_coil();
    let winding = Winding::from_spec(&spec).map_err(|e| e.to_string())?;
    let poly = discretize_ellipse(&spec).map_err(|e| e.to_string())?;
    let set = [DrivenCoil::new(&winding, CURRENT)];
    let magnet = SimConfig::calibrated().capsule.magnet;
    let moment = table_magnet_moment();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let h = 1e-7;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let p = Vector3::new(
            rng.random_range(-4e-3..4e-3),
            rng.random_range(-4e-3..4e-3),
            side * rng.random_range(2e-3..12e-3),
        );
        let dir = random_unit(&mut rng);
        let m = dir * moment;
        let energy = |q: Vector3<f64>| -m.dot(&reference_field(&poly, CURRENT, TURNS, &q));
        let mut oracle = Vector3::zeros();
        for i in 0..3 {
            let mut e = Vector3::zeros();
            e[i] = h;
            oracle[i] = -(energy(p + e) - energy(p - e)) / (2.0 * h);
        }
        let w = wrench_on_dipole(&set, &magnet, &DipolePose::new(p, dir), ForceModel::FullJacobian)
            .map_err(|e| e.to_string())?;
        worst = worst.max((w.force - oracle).norm() / oracle.norm());
    }
    let elapsed = start.elapsed();
    ensure!(worst < 1e-6, "worst relative error {worst:.3e} exceeds 1e-6");
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("worst relative error {worst:.2e} at 20 poses, {elapsed:.1?}"))
}

fn field_divergence_and_curl_vanish() -> Check {
    let cfg = SimConfig::calibrated();
    let windings = cfg
        .coils
        .windings(&cfg.capsule.magnet, cfg.capsule.stroke)
        .map_err(|e| e.to_string())?;
    let polys: Vec<Polyline> = cfg
        .coils
        .coil_specs(&cfg.capsule.magnet, cfg.capsule.stroke)
        .iter()
        .map(|s| discretize_ellipse(s).unwrap())
        .collect();
    // every coil energized, as in the four-coil drive
    let currents = [-CURRENT, CURRENT, CURRENT, CURRENT];
    let set: Vec<DrivenCoil> = windings.iter().zip(currents).map(|(w, i)| DrivenCoil::new(w, i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let (mut worst_div, mut worst_asym): (f64, f64) = (0.0, 0.0);
    let mut n = 0;
    while n < 50 {
        let p = Vector3::new(
            rng.random_range(-12e-3..12e-3),
            rng.random_range(-12e-3..12e-3),
            rng.random_range(-10e-3..10e-3),
        );
        let near = polys.iter().flat_map(|poly| poly.vertices()).map(|v| (v - p).norm()).fold(f64::MAX, f64::min);
        if near < 1e-3 {
            continue;
        }
        let j = field_gradient(&set, &p).map_err(|e| e.to_string())?;
        let scale = j.norm();
        worst_div = worst_div.max(j.trace().abs() / scale);
        worst_asym = worst_asym.max((j - j.transpose()).norm() / scale);
        n += 1;
    }
    ensure!(worst_div < 1e-6, "|div B| / |grad B| reached {worst_div:.3e}");
    ensure!(worst_asym < 1e-6, "gradient asymmetry reached {worst_asym:.3e}");
    Ok(format!("50 points: divergence {worst_div:.2e}, asymmetry {worst_asym:.2e}"))
}

fn force_decreases_with_distance() -> Check {
    let spec = calibrated_coil();
    let winding = Winding::from_spec(&spec).map_err(|e| e.to_string())?;
    let set = [DrivenCoil::new(&winding, CURRENT)];
    let magnet = SimConfig::calibrated().capsule.magnet;
    // separation = gap between the magnet's near face and the coil plane
    let half_len = 0.5 * magnet.length;
    let mut prev = f64::INFINITY;
    let mut samples = Vec::new();
    for k in 0..=72 {
        let gap = 2.0e-3 + 0.25e-3 * k as f64;
        let pose = DipolePose::new(Vector3::new(0.0, 0.0, gap + half_len), Vector3::z());
        let f = wrench_on_dipole(&set, &magnet, &pose, ForceModel::FullJacobian)
            .map_err(|e| e.to_string())?
            .force
            .norm();
        ensure!(f < prev, "force rises from {prev:.4e} to {f:.4e} N at {:.2} mm", gap * 1e3);
        if k % 12 == 0 {
            samples.push(format!("{:.0} mm {:.2} mN", gap * 1e3, f * 1e3));
        }
        prev = f;
    }
    Ok(format!("strictly decreasing from 2 to 20 mm: {}", samples.join(", ")))
}

fn impact_law() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = CapsuleParams::default();
    let (m1, m2) = (base.magnet.mass, base.body_mass);
    let (mut worst_p, mut worst_e): (f64, f64) = (0.0, 0.0);
    for e in [0.0, 0.25, 0.5, 0.75, 1.0] {
        // the impact map on its own
        for _ in 0..20 {
            let angle: f64 = rng.random_range(-PI..PI);
            let axis = Unit::new_normalize(Vector2::new(angle.cos(), angle.sin()));
            let side = if rng.random_bool(0.5) { Side::Front } else { Side::Back };
            let mut st = CapsuleState::at_rest();
            st.velocity = Vector2::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
            st.magnet.s = match side {
                Side::Front => base.half_stroke(),
                Side::Back => -base.half_stroke(),
            };
            let u: f64 = rng.random_range(0.01..0.3);
            st.magnet.v_s = if side == Side::Front { u } else { -u };
            let out = resolve_impact_with(&st, &base, &axis, side, e).map_err(|e| e.to_string())?;
            let momentum = |s: &CapsuleState| (s.velocity + axis.into_inner() * s.magnet.v_s) * m1 + s.velocity * m2;
            let scale = m1 * (st.velocity + axis.into_inner() * st.magnet.v_s).norm() + m2 * st.velocity.norm();
            worst_p = worst_p.max((momentum(&out) - momentum(&st)).norm() / scale);
            worst_e = worst_e.max((-out.magnet.v_s / st.magnet.v_s - e).abs());
        }
        // the same through the integrator: free flight into the front stop
        let mut p = base.clone();
        p.restitution = e;
        p.bearing_mu = 0.0;
        p.ground_mu_static = 0.0;
        p.ground_mu_kinetic = 0.0;
        let cfg = SimConfig::calibrated();
        let cmd = DriveCommand {
            current_amplitude: 0.0,
            ..cfg.drive
        };
        let sim = Simulator::new(p.clone(), cfg.coils.clone(), cfg.integrator.clone(), cmd).map_err(|e| e.to_string())?;
        let mut st = CapsuleState::at_rest();
        st.magnet.s = p.half_stroke() - 3.3e-6;
        st.magnet.v_s = 0.1;
        let axis = sim.axis_world(st.heading).into_inner();
        let momentum = |s: &CapsuleState| (s.velocity + axis * s.magnet.v_s) * m1 + s.velocity * m2;
        let before = st;
        for _ in 0..10 {
            st = sim.step(&st, cfg.integrator.dt).map_err(|e| e.to_string())?;
        }
        ensure!(st.magnet.v_s <= 0.0, "no impact within 10 steps (e = {e})");
        worst_p = worst_p.max((momentum(&st) - momentum(&before)).norm() / (m1 * 0.1));
        worst_e = worst_e.max((-st.magnet.v_s / before.magnet.v_s - e).abs());
    }
    ensure!(worst_p <= 1e-12, "momentum drift {worst_p:.3e} exceeds 1e-12");
    ensure!(worst_e <= 1e-9, "restitution ratio off by {worst_e:.3e}");
    Ok(format!(
        "e in {{0, .25, .5, .75, 1}}: momentum drift {worst_p:.1e}, ratio error {worst_e:.1e}"
    ))
}

fn stroke_containment() -> Check {
    let cfg = SimConfig::calibrated();
    ensure!(cfg.capsule.stroke == 2.4e-3, "stroke is {}", cfg.capsule.stroke);
    let bound = 1.2e-3 + 1e-12;
    let mut worst: f64 = 0.0;
    let mut steps = 0usize;
    for duty in [0.3, 0.4, 0.5, 0.6, 0.7, 0.8] {
        let cmd = DriveCommand {
            method: DriveMethod::FourCoil,
            frequency: 30.0,
            duty,
            ..cfg.drive
        };
        let sim = Simulator::new(cfg.capsule.clone(), cfg.coils.clone(), cfg.integrator.clone(), cmd)
            .map_err(|e| e.to_string())?;
        let mut st = CapsuleState::at_rest();
        let n = (10.0 / cfg.integrator.dt).round() as usize;
        for _ in 0..n {
            st = sim.step(&st, cfg.integrator.dt).map_err(|e| e.to_string())?;
            worst = worst.max(st.magnet.s.abs());
        }
        steps += n;
        ensure!(worst <= bound, "|s| reached {worst:.15e} m at duty {duty}");
    }
    Ok(format!("max |s| = {:.12} mm over {steps} steps (10 s at 30 Hz, duties 0.3-0.8)", worst * 1e3))
}

fn deviation_angle_22() -> Check {
    let cfg = SimConfig::calibrated();
    let (v, tr) = speed_mms(&cfg, DriveMethod::FourCoil, 30.0, 0.6)?;
    let a = deviation_angle(&tr).map_err(|e| e.to_string())?.ok_or("capsule did not move")?;
    ensure!((a - 22.0).abs() <= 3.0, "deviation {a:.2} deg outside 22 +/- 3");
    Ok(format!("four-coil 30 Hz/60 %: {a:.2} deg at {v:+.2} mm/s"))
}

fn direction_reversal() -> Check {
    let cfg = SimConfig::calibrated();
    let (lo, _) = speed_mms(&cfg, DriveMethod::OneCoil, 10.0, 0.3)?;
    let (hi, _) = speed_mms(&cfg, DriveMethod::OneCoil, 10.0, 0.8)?;
    ensure!(lo > 0.0, "10 Hz/30 % speed {lo:+.3} mm/s is not forward");
    ensure!(hi < 0.0, "10 Hz/80 % speed {hi:+.3} mm/s is not backward");
    for v in [lo, hi] {
        ensure!((1.0..=20.0).contains(&v.abs()), "|{v:.3}| mm/s outside 1-20 mm/s");
    }
    Ok(format!("one-coil 10 Hz: 30 % {lo:+.2} mm/s, 80 % {hi:+.2} mm/s"))
}

fn sweep_ranking() -> Check {
    let cfg = SimConfig::calibrated();
    let plan = SweepPlan::default();
    let start = Instant::now();
    let res = run_sweep(&plan, &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(res.cells.len() == 36, "{} cells", res.cells.len());
    ensure!(res.failed().count() == 0, "{} failed cells", res.failed().count());
    let best = res.best(DriveMethod::FourCoil).ok_or("no four-coil cells")?;
    let vbest = best.mean_speed_mms.unwrap();
    ensure!(
        best.frequency == 30.0 && (0.5..=0.7).contains(&best.duty),
        "four-coil best at {} Hz/{} ({vbest:+.2} mm/s)",
        best.frequency,
        best.duty
    );
    let at = |m, d| res.cell(m, 30.0, d).and_then(|c| c.mean_speed_mms).unwrap();
    let four60 = at(DriveMethod::FourCoil, 0.6);
    let one60 = at(DriveMethod::OneCoil, 0.6);
    ensure!(four60 > one60, "at 30 Hz/60 %: four-coil {four60:+.2} <= one-coil {one60:+.2} mm/s");
    let best30 = |m| plan.duties.iter().map(|&d| at(m, d)).fold(f64::MIN, f64::max);
    let (four30, one30) = (best30(DriveMethod::FourCoil), best30(DriveMethod::OneCoil));
    ensure!(four30 > one30, "best at 30 Hz: four-coil {four30:+.2} <= one-coil {one30:+.2} mm/s");
    ensure!(elapsed < Duration::from_secs(300), "sweep took {elapsed:?}");
    Ok(format!(
        "four-coil best {vbest:+.2} mm/s at {} Hz/{}; 30 Hz best four {four30:+.2} vs one {one30:+.2}, at 60 % {four60:+.2} vs {one60:+.2}; {elapsed:.1?}",
        best.frequency, best.duty
    ))
}

fn determinism_and_step_size() -> Check {
    let cfg = SimConfig::calibrated();
    let (v1, a) = speed_mms(&cfg, DriveMethod::FourCoil, 30.0, 0.6)?;
    let (_, b) = speed_mms(&cfg, DriveMethod::FourCoil, 30.0, 0.6)?;
    ensure!(same_bits(&a, &b), "repeated runs differ");
    let mut half = cfg.clone();
    half.integrator.dt *= 0.5;
    let mut lines = Vec::new();
    for (m, f, d) in [
        (DriveMethod::FourCoil, 30.0, 0.6),
        (DriveMethod::OneCoil, 10.0, 0.3),
        (DriveMethod::OneCoil, 10.0, 0.8),
    ] {
        let (v, _) = if m == DriveMethod::FourCoil && d == 0.6 { (v1, a.clone()) } else { speed_mms(&cfg, m, f, d)? };
        let (vh, _) = speed_mms(&half, m, f, d)?;
        let rel = ((vh - v) / v).abs();
        ensure!(rel < 0.01, "{} {f} Hz/{d}: {v:+.4} vs {vh:+.4} mm/s ({:.2} %)", m.as_str(), rel * 100.0);
        lines.push(format!("{} {f}/{d} {:.3} %", m.as_str(), rel * 100.0));
    }
    Ok(format!("bit-identical reruns; dt halving: {}", lines.join(", ")))
}

fn session_matches_batch() -> Check {
    let cfg = SimConfig::calibrated();
    let mut s = Session::create(cfg.clone(), SessionSettings::default()).map_err(|e| e.to_string())?;
    s.record();
    s.apply(&ControlMessage::resume()).map_err(|e| e.to_string())?;
    let total = (5.0 / cfg.integrator.dt).round() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut done = 0;
    while done < total {
        let n = rng.random_range(1..4000).min(total - done);
        done += s.step_n(n).map_err(|e| e.to_string())?;
        // telemetry and pause/resume must not disturb the run
        let _ = s.snapshot();
        if rng.random_bool(0.1) {
            s.apply(&ControlMessage::pause()).map_err(|e| e.to_string())?;
            s.step_n(100).map_err(|e| e.to_string())?;
            s.apply(&ControlMessage::resume()).map_err(|e| e.to_string())?;
        }
    }
    let live = s.recorded().ok_or("nothing recorded")?;
    let batch = simulate(&cfg, &cfg.drive, 5.0).map_err(|e| e.to_string())?;
    ensure!(same_bits(&live, &batch), "session and batch trajectories differ");
    Ok(format!("{} samples over 5 s identical to the batch run", batch.len()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("loop field oracle", loop_field_oracle),
        ("dipole force vs energy gradient", dipole_force_matches_energy_gradient),
        ("field divergence and curl", field_divergence_and_curl_vanish),
        ("force falls off with distance", force_decreases_with_distance),
        ("impact momentum and restitution", impact_law),
        ("stroke containment", stroke_containment),
        ("deviation angle", deviation_angle_22),
        ("direction reversal", direction_reversal),
        ("sweep ranking", sweep_ranking),
        ("determinism and step size", determinism_and_step_size),
        ("session matches batch", session_matches_batch),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
