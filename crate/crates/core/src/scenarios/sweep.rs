use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actuation::{DriveCommand, DriveMethod};
use crate::config::SimConfig;
use crate::dynamics::{average_speed, deviation_angle, CapsuleState, Simulator, Trajectory};
use crate::error::{DynamicsError, ValidationError};

/// Shortest run a sweep accepts, s.
pub const MIN_RUN_DURATION: f64 = 2.0;

/// Relative parameter jitter applied independently to each repeat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Half-width of the uniform relative jitter on both ground friction coefficients.
    #[serde(default)]
    pub friction: f64,
    /// Half-width of the uniform relative jitter on restitution (result clamped to [0, 1]).
    #[serde(default)]
    pub restitution: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    #[serde(default = "default_methods")]
    pub methods: Vec<DriveMethod>,
    /// Hz
    #[serde(default = "default_frequencies")]
    pub frequencies: Vec<f64>,
    #[serde(default = "default_duties")]
    pub duties: Vec<f64>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Simulated time per run, s.
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
}

fn default_methods() -> Vec<DriveMethod> {
    vec![DriveMethod::OneCoil, DriveMethod::FourCoil]
}

fn default_frequencies() -> Vec<f64> {
    vec![10.0, 20.0, 30.0]
}

fn default_duties() -> Vec<f64> {
    vec![0.3, 0.4, 0.5, 0.6, 0.7, 0.8]
}

fn default_repeats() -> usize {
    1
}

fn default_duration() -> f64 {
    5.0
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            methods: default_methods(),
            frequencies: default_frequencies(),
            duties: default_duties(),
            repeats: default_repeats(),
            duration: default_duration(),
            noise: None,
        }
    }
}

impl SweepPlan {
    pub fn from_toml_str(text: &str) -> Result<Self, crate::error::ConfigError> {
        let plan: Self = toml::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.methods.is_empty() {
            return Err(ValidationError::new("methods", "must not be empty"));
        }
        if self.frequencies.is_empty() {
            return Err(ValidationError::new("frequencies", "must not be empty"));
        }
        if self.duties.is_empty() {
            return Err(ValidationError::new("duties", "must not be empty"));
        }
        if self.repeats == 0 {
            return Err(ValidationError::new("repeats", "must be at least 1"));
        }
        if !(self.duration >= MIN_RUN_DURATION && self.duration.is_finite()) {
            return Err(ValidationError::new(
                "duration",
                format!("must be at least {MIN_RUN_DURATION} s"),
            ));
        }
        if let Some(n) = &self.noise {
            if !(0.0..1.0).contains(&n.friction) {
                return Err(ValidationError::new("noise.friction", "must lie in [0, 1)"));
            }
            if !(0.0..1.0).contains(&n.restitution) {
                return Err(ValidationError::new("noise.restitution", "must lie in [0, 1)"));
            }
        }
        for &f in &self.frequencies {
            if !(f > 0.0 && f.is_finite()) {
                return Err(ValidationError::new("frequencies", "must be positive"));
            }
        }
        for &d in &self.duties {
            if !(d > 0.0 && d < 1.0) {
                return Err(ValidationError::new("duties", "must lie strictly between 0 and 1"));
            }
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.methods.len() * self.frequencies.len() * self.duties.len()
    }
}

/// Aggregate of all repeats in one (method, frequency, duty) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub method: DriveMethod,
    pub frequency: f64,
    pub duty: f64,
    /// Mean signed speed over repeats, mm/s. `None` for a failed cell.
    pub mean_speed_mms: Option<f64>,
    pub std_mms: Option<f64>,
    /// Mean deviation angle of the repeats that moved, degrees.
    pub deviation_deg: Option<f64>,
    /// First error hit by any repeat of this cell.
    pub error: Option<String>,
}

impl SweepCell {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub plan: SweepPlan,
    /// Cells in method-major, then frequency, then duty order.
    pub cells: Vec<SweepCell>,
}

/// Best cell of one method, as reported in the summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestCell {
    pub method: DriveMethod,
    pub frequency: f64,
    pub duty: f64,
    pub mean_speed_mms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub cells: usize,
    pub runs: usize,
    pub failed: Vec<SweepCell>,
    pub best: Vec<BestCell>,
    pub grid: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, method: DriveMethod, frequency: f64, duty: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.frequency == frequency && c.duty == duty)
    }

    /// Cell with the highest signed mean speed for `method`, ignoring failures.
    pub fn best(&self, method: DriveMethod) -> Option<&SweepCell> {
        self.cells
            .iter()
            .filter(|c| c.method == method)
            .filter_map(|c| c.mean_speed_mms.map(|v| (c, v)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(c, _)| c)
    }

    pub fn failed(&self) -> impl Iterator<Item = &SweepCell> {
        self.cells.iter().filter(|c| c.failed())
    }

    /// `method,freq_hz,duty,mean_speed_mms,std_mms,deviation_deg`; failed or
    /// undefined values are written as `nan`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "method,freq_hz,duty,mean_speed_mms,std_mms,deviation_deg")?;
        let f = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| x.to_string());
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                c.method.as_str(),
                c.frequency,
                c.duty,
                f(c.mean_speed_mms),
                f(c.std_mms),
                f(c.deviation_deg)
            )?;
        }
        Ok(())
    }

    pub fn summary(&self) -> SweepSummary {
        SweepSummary {
            cells: self.cells.len(),
            runs: self.cells.len() * self.plan.repeats,
            failed: self.failed().cloned().collect(),
            best: self
                .plan
                .methods
                .iter()
                .filter_map(|&m| self.best(m))
                .map(|c| BestCell {
                    method: c.method,
                    frequency: c.frequency,
                    duty: c.duty,
                    mean_speed_mms: c.mean_speed_mms.unwrap_or(f64::NAN),
                })
                .collect(),
            grid: self.cells.clone(),
        }
    }
}

/// One simulated run of a sweep.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub method: DriveMethod,
    pub frequency: f64,
    pub duty: f64,
    pub repeat: usize,
    pub trajectory: Trajectory,
}

struct Job {
    cell: usize,
    repeat: usize,
    cmd: DriveCommand,
}

fn jitter(base: &SimConfig, noise: Option<&NoiseSpec>, job: &Job) -> crate::dynamics::CapsuleParams {
    let mut p = base.capsule.clone();
    if let Some(n) = noise {
        let stream = (job.cell as u64) << 32 | job.repeat as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(n.seed);
        rng.set_stream(stream);
        let kf = 1.0 + n.friction * rng.random_range(-1.0..=1.0);
        let ke = 1.0 + n.restitution * rng.random_range(-1.0..=1.0);
        p.ground_mu_static *= kf;
        p.ground_mu_kinetic *= kf;
        p.restitution = (p.restitution * ke).clamp(0.0, 1.0);
    }
    p
}

/// Run every cell of `plan` (in parallel) from rest; the drive command of each
/// cell is `config.drive` with method, frequency and duty replaced.
///
/// A cell whose run diverges is reported as failed and the sweep continues.
/// Optionally every run's trajectory is handed to `keep`.
pub fn run_sweep_with(
    plan: &SweepPlan,
    config: &SimConfig,
    keep: Option<&(dyn Fn(RunRecord) + Sync)>,
) -> Result<SweepResult, DynamicsError> {
    plan.validate()?;
    config.validate()?;
    // one base simulator per method so the force tables are built once
    let mut bases = Vec::with_capacity(plan.methods.len());
    for &method in &plan.methods {
        let cmd = DriveCommand { method, ..config.drive };
        bases.push(Simulator::new(
            config.capsule.clone(),
            config.coils.clone(),
            config.integrator.clone(),
            cmd,
        )?);
    }
    let mut jobs = Vec::with_capacity(plan.cell_count() * plan.repeats);
    let mut cells = Vec::with_capacity(plan.cell_count());
    for &method in &plan.methods {
        for &frequency in &plan.frequencies {
            for &duty in &plan.duties {
                let cmd = DriveCommand {
                    method,
                    frequency,
                    duty,
                    ..config.drive
                };
                for repeat in 0..plan.repeats {
                    jobs.push(Job {
                        cell: cells.len(),
                        repeat,
                        cmd,
                    });
                }
                cells.push((method, frequency, duty));
            }
        }
    }
    let outcomes: Vec<Result<(f64, Option<f64>), DynamicsError>> = jobs
        .par_iter()
        .map(|job| {
            let base = &bases[plan.methods.iter().position(|&m| m == job.cmd.method).unwrap_or(0)];
            let mut sim = base.with_params(jitter(config, plan.noise.as_ref(), job))?;
            sim.set_command(job.cmd, 0.0)?;
            let traj = sim.run(CapsuleState::at_rest(), plan.duration)?;
            let v = average_speed(&traj)? * 1e3;
            let a = deviation_angle(&traj)?;
            if let Some(keep) = keep {
                keep(RunRecord {
                    method: job.cmd.method,
                    frequency: job.cmd.frequency,
                    duty: job.cmd.duty,
                    repeat: job.repeat,
                    trajectory: traj,
                });
            }
            Ok((v, a))
        })
        .collect();

    let cells = cells
        .into_iter()
        .enumerate()
        .map(|(i, (method, frequency, duty))| {
            let mine = jobs.iter().zip(&outcomes).filter(|(j, _)| j.cell == i).map(|(_, o)| o);
            aggregate(method, frequency, duty, mine)
        })
        .collect();
    Ok(SweepResult {
        plan: plan.clone(),
        cells,
    })
}

pub fn run_sweep(plan: &SweepPlan, config: &SimConfig) -> Result<SweepResult, DynamicsError> {
    run_sweep_with(plan, config, None)
}

fn aggregate<'a>(
    method: DriveMethod,
    frequency: f64,
    duty: f64,
    outcomes: impl Iterator<Item = &'a Result<(f64, Option<f64>), DynamicsError>>,
) -> SweepCell {
    let mut speeds = Vec::new();
    let mut angles = Vec::new();
    let mut error = None;
    for o in outcomes {
        match o {
            Ok((v, a)) => {
                speeds.push(*v);
                angles.extend(*a);
            }
            Err(e) => {
                error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if error.is_some() {
        return SweepCell {
            method,
            frequency,
            duty,
            mean_speed_mms: None,
            std_mms: None,
            deviation_deg: None,
            error,
        };
    }
    let n = speeds.len() as f64;
    let mean = speeds.iter().sum::<f64>() / n;
    let std = if speeds.len() > 1 {
        (speeds.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let deviation = (!angles.is_empty()).then(|| angles.iter().sum::<f64>() / angles.len() as f64);
    SweepCell {
        method,
        frequency,
        duty,
        mean_speed_mms: Some(mean),
        std_mms: Some(std),
        deviation_deg: deviation,
        error: None,
    }
}
