//! Checkpoints, run statistics, seed selection, transfer and curriculum
//! chains.

mod checkpoint;
mod pipeline;
mod report;
mod stats;

pub use checkpoint::{CheckpointError, EncodingSchema, PolicyCheckpoint, Provenance, FORMAT_VERSION};
pub use pipeline::{
    run_curriculum, run_curriculum_with, run_transfer, select_seed, CurriculumOutcome, ObserverError, PipelineError, TransferOutcome,
    STAGE_RNG_STRIDE,
};
pub use stats::{aggregate_stats, best_index, running_average, series_score, RunStats, StatsError};
pub use report::{improvements, render_csv, render_text, ReportRow, HEADER, SCRATCH_MARK};
