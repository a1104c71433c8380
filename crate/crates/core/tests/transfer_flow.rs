use imtl_core::a2c::{train_run, RunConfig, TrainError};
use imtl_core::transfer::{run_curriculum, run_transfer, PipelineError, PolicyCheckpoint};
use imtl_core::{Resolution, Scenario};
use std::sync::Arc;

fn config(name: &str, episodes: usize, seeds: usize) -> RunConfig {
    let mut c = RunConfig::new(Arc::new(Scenario::builtin(name).unwrap()));
    c.episodes = episodes;
    c.seeds = seeds;
    c.hidden = vec![16, 8];
    c
}

#[test]
fn checkpoint_survives_disk_and_seeds_a_larger_scenario() {
    let src = train_run(&config("3m", 3, 1), None, 11).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.ckpt");
    src.checkpoint.save(&path).unwrap();
    let loaded = PolicyCheckpoint::load(&path).unwrap();
    assert_eq!(loaded, src.checkpoint);

    let out = run_transfer(Some(&loaded), &config("25m", 2, 2), 5).unwrap();
    assert_eq!(out.runs.len(), 2);
    let best = out.best_checkpoint();
    assert_eq!(best.chain(), "3m→25m");
    assert!(out.stats.min <= out.stats.avg && out.stats.avg <= out.stats.max);
}

#[test]
fn resolution_mismatch_is_rejected_before_training() {
    let src = train_run(&config("3m", 1, 1), None, 1).unwrap();
    let mut target = config("8m", 1, 1);
    target.resolution = Resolution::R55;
    let err = run_transfer(Some(&src.checkpoint), &target, 0).unwrap_err();
    assert!(matches!(
        err,
        PipelineError::Train(TrainError::SchemaMismatch { .. })
    ));
}

#[test]
fn curriculum_records_every_stage() {
    let stages = [config("3m", 2, 2), config("8m", 2, 2), config("2s3z", 2, 2)];
    let out = run_curriculum(&stages, 3).unwrap();
    assert_eq!(out.stages.len(), 3);
    let ck = out.final_checkpoint();
    assert_eq!(ck.provenance.len(), 3);
    assert_eq!(ck.chain(), "3m→8m→2s3z");
}
