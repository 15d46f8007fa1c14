//! Subcommands of the `vibrocap` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod grid;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use vibrocap_core::{Direction, DriveCommand, DriveMethod, SimConfig};

pub use commands::execute;
pub use grid::Axis;

#[derive(Debug, Parser)]
#[command(name = "vibrocap", version, about = "Vibro-impact capsule simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample B and the dipole force and torque on a grid (CSV).
    Field(FieldArgs),
    /// Dump coil currents over time (CSV).
    Waveform(WaveformArgs),
    /// Simulate one run from rest; prints a JSON summary.
    Run(RunArgs),
    /// Frequency × duty sweep; writes results.csv and summary.json.
    Sweep(SweepArgs),
    /// Curved-channel run; writes trajectory.csv and summary.json.
    Track(TrackArgs),
    /// Host interactive sessions over WebSocket.
    Serve(ServeArgs),
    /// Print a config or plan template (TOML).
    Config(ConfigArgs),
}

/// Drive command fields that override the config's `[drive]` table.
#[derive(Debug, Clone, Default, Args)]
pub struct DriveArgs {
    /// one_coil | four_coil
    #[arg(long)]
    pub method: Option<DriveMethod>,
    /// Hz
    #[arg(long = "freq")]
    pub frequency: Option<f64>,
    /// Phase-1 fraction of the period, in (0, 1)
    #[arg(long)]
    pub duty: Option<f64>,
    /// forward_right | backward_left | forward_left | backward_right
    #[arg(long)]
    pub direction: Option<Direction>,
    /// Current amplitude, A
    #[arg(long)]
    pub current: Option<f64>,
    /// Lateral pair strength, in [0, 1]
    #[arg(long = "repel")]
    pub repel_level: Option<f64>,
}

impl DriveArgs {
    pub fn apply(&self, base: DriveCommand) -> DriveCommand {
        DriveCommand {
            method: self.method.unwrap_or(base.method),
            frequency: self.frequency.unwrap_or(base.frequency),
            duty: self.duty.unwrap_or(base.duty),
            direction: self.direction.unwrap_or(base.direction),
            current_amplitude: self.current.unwrap_or(base.current_amplitude),
            repel_level: self.repel_level.unwrap_or(base.repel_level),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    /// Config overrides (TOML); defaults to the calibrated set.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// x samples as `start:stop:n` or a single value, m
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub x: Axis,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub y: Axis,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub z: Axis,
    /// Coil currents `a1,a2,b1,b2` in A; default is the drive's phase-1 pattern.
    #[arg(long, allow_hyphen_values = true)]
    pub currents: Option<String>,
    /// Use the drive's phase-2 pattern instead of phase 1.
    #[arg(long, conflicts_with = "currents")]
    pub phase2: bool,
    /// Magnetization direction `x,y,z`; default is the drive's tilt axis.
    #[arg(long, allow_hyphen_values = true)]
    pub moment_dir: Option<String>,
    /// Drop off-diagonal gradient terms from the force.
    #[arg(long)]
    pub diagonal_force: bool,
    #[command(flatten)]
    pub drive: DriveArgs,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct WaveformArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub drive: DriveArgs,
    /// Number of samples.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Periods covered by the samples.
    #[arg(long, default_value_t = 1.0)]
    pub periods: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Simulated time, s
    #[arg(long, default_value_t = 5.0)]
    pub duration: f64,
    /// Integration step override, s
    #[arg(long)]
    pub dt: Option<f64>,
    #[command(flatten)]
    pub drive: DriveArgs,
    /// Trajectory CSV (`t,x,y,s,v_s,vx,vy`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Sweep plan (TOML); defaults to the full grid.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write one trajectory CSV per run under `trajectories/`.
    #[arg(long)]
    pub trajectories: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrackArgs {
    /// Track plan (TOML); defaults to the standard channel and the config drive.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// 0 picks a free port; the bound address is printed on stdout.
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory of static files served at `/`.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    /// Default telemetry rate, Hz
    #[arg(long, default_value_t = 30.0)]
    pub rate: f64,
    /// Default clock factor; 1 is real time.
    #[arg(long, default_value_t = 1.0)]
    pub factor: f64,
    /// Seconds a session survives without clients.
    #[arg(long, default_value_t = 60.0)]
    pub idle_timeout: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Template {
    /// Simulation config
    #[default]
    Sim,
    /// Sweep plan
    Sweep,
    /// Track plan
    Track,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    #[arg(long, value_enum, default_value_t = Template::Sim)]
    pub template: Template,
    /// Print this config merged over the calibrated set instead.
    #[arg(long, conflicts_with = "template")]
    pub resolve: Option<PathBuf>,
}

pub fn load_config(path: Option<&PathBuf>) -> anyhow::Result<SimConfig> {
    use anyhow::Context;
    match path {
        Some(p) => SimConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(SimConfig::calibrated()),
    }
}
