use super::checkpoint::PolicyCheckpoint;
use super::stats::{best_index, series_score, RunStats, StatsError};
use crate::a2c::{train_run, RunConfig, RunResult, TrainError};
use rayon::prelude::*;
use thiserror::Error;

/// Spacing between the rng streams of consecutive curriculum stages.
pub const STAGE_RNG_STRIDE: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("run {run} failed: {source}")]
    Run {
        run: usize,
        #[source]
        source: TrainError,
    },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("no runs to select a seed from")]
    NoRuns,
    #[error("a curriculum needs at least 2 stages, got {0}")]
    TooFewStages(usize),
    #[error("stage observer failed after stage {stage}: {source}")]
    Observer {
        stage: usize,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("curriculum stage {stage} ({scenario}) failed: {source}")]
    Stage {
        /// 1-based position in the chain.
        stage: usize,
        scenario: String,
        #[source]
        source: Box<PipelineError>,
    },
}

/// Checkpoint of the run with the best score; the earliest run wins ties.
pub fn select_seed(runs: &[RunResult]) -> Result<&PolicyCheckpoint, PipelineError> {
    let scores: Vec<f64> = runs
        .iter()
        .map(|r| series_score(&r.rewards()).unwrap_or(f64::NEG_INFINITY))
        .collect();
    let best = best_index(&scores).ok_or(PipelineError::NoRuns)?;
    Ok(&runs[best].checkpoint)
}

#[derive(Debug, Clone)]
pub struct TransferOutcome {
    pub runs: Vec<RunResult>,
    pub stats: RunStats,
    /// Index of the run [`select_seed`] picks.
    pub best: usize,
}

impl TransferOutcome {
    pub fn best_checkpoint(&self) -> &PolicyCheckpoint {
        &self.runs[self.best].checkpoint
    }
}

/// Launches `target.seeds` independent runs, run `k` seeded with
/// `base_rng + k`, every one starting from `seed` (or from scratch).
/// Runs execute in parallel and are returned in run order.
pub fn run_transfer(
    seed: Option<&PolicyCheckpoint>,
    target: &RunConfig,
    base_rng: u64,
) -> Result<TransferOutcome, PipelineError> {
    target.validate()?;
    if let Some(ck) = seed {
        if ck.schema != target.schema() {
            return Err(TrainError::SchemaMismatch {
                expected: target.schema(),
                found: ck.schema,
            }
            .into());
        }
    }
    let runs = (0..target.seeds)
        .into_par_iter()
        .map(|k| {
            train_run(target, seed, base_rng.wrapping_add(k as u64)).map_err(|source| PipelineError::Run { run: k, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let scores: Vec<f64> = runs
        .iter()
        .map(|r| series_score(&r.rewards()).expect("episodes > 0"))
        .collect();
    let stats = RunStats::from_scores(&scores)?;
    let best = best_index(&scores).expect("seeds > 0");
    Ok(TransferOutcome { runs, stats, best })
}

#[derive(Debug, Clone)]
pub struct CurriculumOutcome {
    pub stages: Vec<TransferOutcome>,
}

impl CurriculumOutcome {
    pub fn final_checkpoint(&self) -> &PolicyCheckpoint {
        self.stages.last().expect("at least two stages").best_checkpoint()
    }
}

pub fn run_curriculum(stages: &[RunConfig], base_rng: u64) -> Result<CurriculumOutcome, PipelineError> {
    run_curriculum_with(stages, base_rng, |_, _| Ok(()))
}

pub type ObserverError = Box<dyn std::error::Error + Send + Sync>;

/// Chains transfers: stage 1 learns from scratch, stage `i + 1` starts from
/// the best run of stage `i`. Stage `i` (0-based) uses run seeds
/// `base_rng + i * STAGE_RNG_STRIDE + k`. `on_stage` sees every completed
/// stage before the next one starts; an error from it stops the chain.
pub fn run_curriculum_with(
    stages: &[RunConfig],
    base_rng: u64,
    mut on_stage: impl FnMut(usize, &TransferOutcome) -> Result<(), ObserverError>,
) -> Result<CurriculumOutcome, PipelineError> {
    if stages.len() < 2 {
        return Err(PipelineError::TooFewStages(stages.len()));
    }
    let wrap = |i: usize, source: PipelineError| PipelineError::Stage {
        stage: i + 1,
        scenario: stages[i].scenario.name.clone(),
        source: Box::new(source),
    };
    let schema = stages[0].schema();
    for (i, s) in stages.iter().enumerate() {
        s.validate().map_err(|e| wrap(i, e.into()))?;
        if s.schema() != schema {
            let e = TrainError::SchemaMismatch {
                expected: schema,
                found: s.schema(),
            };
            return Err(wrap(i, e.into()));
        }
    }
    let mut done: Vec<TransferOutcome> = Vec::with_capacity(stages.len());
    for (i, config) in stages.iter().enumerate() {
        let seed = done.last().map(TransferOutcome::best_checkpoint);
        let rng = base_rng.wrapping_add((i as u64).wrapping_mul(STAGE_RNG_STRIDE));
        let outcome = run_transfer(seed, config, rng).map_err(|e| wrap(i, e))?;
        on_stage(i, &outcome).map_err(|source| PipelineError::Observer { stage: i + 1, source })?;
        done.push(outcome);
    }
    Ok(CurriculumOutcome { stages: done })
}
