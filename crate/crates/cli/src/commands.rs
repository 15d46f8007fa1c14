use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use nalgebra::Vector3;
use serde::Serialize;
use vibrocap_core::actuation::currents_in_phase;
use vibrocap_core::config::CALIBRATED_TOML;
use vibrocap_core::magnetics::{field_of_set, wrench_on_dipole, DipolePose, DrivenCoil, ForceModel};
use vibrocap_core::scenarios::{run_sweep_with, run_track, RunRecord, SweepPlan, TrackPlan};
use vibrocap_core::service::{ClockMode, SessionSettings};
use vibrocap_core::{
    average_speed, currents_at, deviation_angle, tilt_axis, CapsuleState, DriveCommand, MagneticsError,
    Simulator,
};
use vibrocap_service::{RunnerOptions, ServerConfig};

use crate::grid::parse_list;
use crate::{
    load_config, Cli, Command, ConfigArgs, FieldArgs, RunArgs, ServeArgs, SweepArgs, Template, TrackArgs,
    WaveformArgs,
};

pub const SWEEP_TEMPLATE: &str = include_str!("../../../configs/sweep.toml");
pub const TRACK_TEMPLATE: &str = include_str!("../../../configs/track.toml");

/// Run one subcommand. Text normally bound for stdout goes to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Field(a) => field(&a, out),
        Command::Waveform(a) => waveform(&a, out),
        Command::Run(a) => run(&a, out),
        Command::Sweep(a) => sweep(&a, out),
        Command::Track(a) => track(&a, out),
        Command::Serve(a) => serve(&a, out),
        Command::Config(a) => config(&a, out),
    }
}

fn sink<'a>(path: Option<&PathBuf>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(stdout),
    })
}

fn field(a: &FieldArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = load_config(a.config.as_ref())?;
    let cmd = a.drive.apply(cfg.drive);
    cmd.validate()?;
    let windings = cfg.coils.windings(&cfg.capsule.magnet, cfg.capsule.stroke)?;
    let currents = match &a.currents {
        Some(s) => parse_list::<4>(s, "--currents")?,
        None => currents_in_phase(&cmd, !a.phase2).as_array(),
    };
    let dir = match &a.moment_dir {
        Some(s) => Vector3::from(parse_list::<3>(s, "--moment-dir")?),
        None => tilt_axis(&cmd, &cfg.coils),
    };
    if !(dir.norm() > 0.0) {
        bail!("--moment-dir must be a non-zero vector");
    }
    let model = if a.diagonal_force {
        ForceModel::DiagonalOnly
    } else {
        ForceModel::FullJacobian
    };
    let set: Vec<DrivenCoil> = windings
        .iter()
        .zip(currents)
        .map(|(w, i)| DrivenCoil::new(w, i))
        .collect();
    let magnet = &cfg.capsule.magnet;

    let mut w = sink(a.out.as_ref(), stdout)?;
    writeln!(w, "x,y,z,Bx,By,Bz,Fx,Fy,Fz,Tx,Ty,Tz")?;
    for &x in &a.x.0 {
        for &y in &a.y.0 {
            for &z in &a.z.0 {
                let p = Vector3::new(x, y, z);
                let b = field_of_set(&set, &p);
                let wr = b.and_then(|b| {
                    wrench_on_dipole(&set, magnet, &DipolePose::new(p, dir), model).map(|wr| (b, wr))
                });
                match wr {
                    Ok((b, wr)) => writeln!(
                        w,
                        "{x},{y},{z},{},{},{},{},{},{},{},{},{}",
                        b.x, b.y, b.z, wr.force.x, wr.force.y, wr.force.z, wr.torque.x, wr.torque.y, wr.torque.z
                    )?,
                    // too close to a winding
                    Err(MagneticsError::Singularity { .. }) => {
                        writeln!(w, "{x},{y},{z},nan,nan,nan,nan,nan,nan,nan,nan,nan")?
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn waveform(a: &WaveformArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = load_config(a.config.as_ref())?;
    let cmd = a.drive.apply(cfg.drive);
    cmd.validate()?;
    if a.samples == 0 {
        bail!("--samples must be at least 1");
    }
    if !(a.periods > 0.0 && a.periods.is_finite()) {
        bail!("--periods must be positive");
    }
    let span = a.periods / cmd.frequency;
    let mut w = sink(a.out.as_ref(), stdout)?;
    writeln!(w, "t,i_a1,i_a2,i_b1,i_b2")?;
    for k in 0..a.samples {
        let t = span * k as f64 / a.samples as f64;
        let c = currents_at(&cmd, t)?;
        writeln!(w, "{t},{},{},{},{}", c.i_a1, c.i_a2, c.i_b1, c.i_b2)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct RunSummary {
    duration: f64,
    samples: usize,
    final_x: f64,
    final_y: f64,
    average_speed_mms: Option<f64>,
    deviation_deg: Option<f64>,
    max_abs_s: f64,
    command: DriveCommand,
}

fn run(a: &RunArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(a.config.as_ref())?;
    cfg.drive = a.drive.apply(cfg.drive);
    if let Some(dt) = a.dt {
        cfg.integrator.dt = dt;
    }
    cfg.validate()?;
    let traj = Simulator::from_config(&cfg)?.run(CapsuleState::at_rest(), a.duration)?;
    if let Some(p) = &a.out {
        let mut f = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
        traj.write_csv(&mut f)?;
        f.flush()?;
    }
    let last = traj.last().copied().unwrap_or_else(CapsuleState::at_rest);
    // speed and angle need at least a second of trajectory
    let summary = RunSummary {
        duration: traj.span(),
        samples: traj.len(),
        final_x: last.position.x,
        final_y: last.position.y,
        average_speed_mms: average_speed(&traj).ok().map(|v| v * 1e3),
        deviation_deg: deviation_angle(&traj).ok().flatten(),
        max_abs_s: traj.samples().iter().map(|s| s.magnet.s.abs()).fold(0.0, f64::max),
        command: cfg.drive,
    };
    writeln!(stdout, "{}", serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn sweep(a: &SweepArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = load_config(a.config.as_ref())?;
    let plan = match &a.plan {
        Some(p) => SweepPlan::from_toml_str(&read_text(p)?).with_context(|| format!("in {}", p.display()))?,
        None => SweepPlan::default(),
    };
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let traj_dir = a.out.join("trajectories");
    if a.trajectories {
        fs::create_dir_all(&traj_dir)?;
    }
    let write_errors = Mutex::new(Vec::new());
    let keep = |r: RunRecord| {
        let name = format!(
            "{}_{}hz_d{}_r{}.csv",
            r.method.as_str(),
            r.frequency,
            r.duty,
            r.repeat
        );
        let res = File::create(traj_dir.join(&name)).and_then(|f| {
            let mut f = BufWriter::new(f);
            r.trajectory.write_csv(&mut f)?;
            f.flush()
        });
        if let Err(e) = res {
            write_errors.lock().expect("error list").push(format!("{name}: {e}"));
        }
    };
    let keep_ref: &(dyn Fn(RunRecord) + Sync) = &keep;
    let result = run_sweep_with(&plan, &cfg, a.trajectories.then_some(keep_ref))?;
    if let Some(e) = write_errors.into_inner().expect("error list").first() {
        bail!("writing trajectory {e}");
    }

    let mut csv = BufWriter::new(File::create(a.out.join("results.csv"))?);
    result.write_csv(&mut csv)?;
    csv.flush()?;
    let summary = result.summary();
    fs::write(a.out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;

    for b in &summary.best {
        writeln!(
            stdout,
            "best {}: {} Hz, duty {} -> {:.3} mm/s",
            b.method.as_str(),
            b.frequency,
            b.duty,
            b.mean_speed_mms
        )?;
    }
    for c in &summary.failed {
        writeln!(
            stdout,
            "failed {} {} Hz duty {}: {}",
            c.method.as_str(),
            c.frequency,
            c.duty,
            c.error.as_deref().unwrap_or("")
        )?;
    }
    writeln!(stdout, "wrote {}", a.out.display())?;
    Ok(())
}

fn track(a: &TrackArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = load_config(a.config.as_ref())?;
    let text = match &a.plan {
        Some(p) => read_text(p)?,
        None => String::new(),
    };
    let plan = TrackPlan::from_toml_str(&text)?;
    let res = run_track(&plan.track, &plan.schedule, &cfg, &plan.limits)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut f = BufWriter::new(File::create(a.out.join("trajectory.csv"))?);
    res.trajectory.write_csv(&mut f)?;
    f.flush()?;
    let json = serde_json::to_string_pretty(&res.outcome)?;
    fs::write(a.out.join("summary.json"), &json)?;
    writeln!(stdout, "{json}")?;
    Ok(())
}

fn serve(a: &ServeArgs, stdout: &mut dyn Write) -> Result<()> {
    let sim = load_config(a.config.as_ref())?;
    if !(a.factor > 0.0 && a.factor.is_finite()) {
        bail!("--factor must be positive");
    }
    if !(a.idle_timeout > 0.0 && a.idle_timeout.is_finite()) {
        bail!("--idle-timeout must be positive");
    }
    let settings = SessionSettings {
        telemetry_rate: a.rate,
        clock: if a.factor == 1.0 {
            ClockMode::Realtime
        } else {
            ClockMode::Accelerated { factor: a.factor }
        },
        ..SessionSettings::default()
    };
    settings.validate()?;
    if let Some(dir) = &a.static_dir {
        if !dir.is_dir() {
            bail!("static directory {} does not exist", dir.display());
        }
    }
    let config = ServerConfig {
        sim,
        settings,
        runner: RunnerOptions {
            idle_timeout: Duration::from_secs_f64(a.idle_timeout),
            ..RunnerOptions::default()
        },
        static_dir: a.static_dir.clone(),
    };
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .with_context(|| format!("binding {}:{}", a.host, a.port))?;
        let addr = listener.local_addr()?;
        writeln!(stdout, "listening on http://{addr}")?;
        stdout.flush()?;
        tracing::info!(%addr, "serving");
        vibrocap_service::serve(listener, config).await?;
        Ok(())
    })
}

fn config(a: &ConfigArgs, stdout: &mut dyn Write) -> Result<()> {
    if let Some(p) = &a.resolve {
        let cfg = load_config(Some(p))?;
        write!(stdout, "{}", cfg.to_toml_string())?;
        return Ok(());
    }
    let text = match a.template {
        Template::Sim => CALIBRATED_TOML,
        Template::Sweep => SWEEP_TEMPLATE,
        Template::Track => TRACK_TEMPLATE,
    };
    write!(stdout, "{text}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use vibrocap_core::scenarios::TrackSpec;
    use vibrocap_core::SimConfig;

    #[test]
    fn templates_parse_to_the_defaults() {
        assert_eq!(SweepPlan::from_toml_str(SWEEP_TEMPLATE).unwrap(), SweepPlan::default());
        let track = TrackPlan::from_toml_str(TRACK_TEMPLATE).unwrap();
        assert_eq!(track.track, TrackSpec::default());
        assert_eq!(track.schedule.len(), 1);
        assert_eq!(track.schedule[0].command, SimConfig::calibrated().drive);
    }
}
