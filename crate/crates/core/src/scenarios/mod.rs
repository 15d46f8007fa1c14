//! Batch experiments: frequency × duty sweeps and the curved-track run.

mod sweep;
mod track;

pub use sweep::{
    run_sweep, run_sweep_with, BestCell, NoiseSpec, RunRecord, SweepCell, SweepPlan, SweepResult,
    SweepSummary, MIN_RUN_DURATION,
};
pub use track::{
    run_track, ScheduleEntry, StallReport, TrackLimits, TrackOutcome, TrackPlan, TrackProjection,
    TrackResult, TrackSpec,
};
