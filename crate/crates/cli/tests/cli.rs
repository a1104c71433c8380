use std::path::Path;
use std::process::{Command, Output};

fn imtl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imtl")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small(out: &Path) -> Vec<String> {
    ["--episodes", "2", "--seeds", "2", "--hidden", "8", "--out", out.to_str().unwrap()]
        .map(String::from)
        .to_vec()
}

fn run(head: &[&str], out: &Path) -> Output {
    let mut args: Vec<String> = head.iter().map(|s| s.to_string()).collect();
    args.extend(small(out));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    imtl(&refs)
}

#[test]
fn train_writes_per_run_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("t");
    let o = run(&["train", "--scenario", "3m"], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "run-000/checkpoint.ckpt",
        "run-001/checkpoint.ckpt",
        "run-000/rewards.csv",
        "run-001/rewards.csv",
        "rewards.csv",
        "best.ckpt",
        "report.csv",
        "report.txt",
        "metadata.txt",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let csv = std::fs::read_to_string(out.join("rewards.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
}

#[test]
fn missing_descriptor_is_reported_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("t");
    let o = run(&["train", "--scenario", "no/such/map.toml"], &out);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("scenario descriptor not found: no/such/map.toml"));
    assert!(!out.exists());
}

#[test]
fn single_stage_curriculum_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let o = run(&["curriculum", "--stages", "3m"], &out);
    assert!(!o.status.success());
    assert!(!out.exists());
}

#[test]
fn transfer_across_resolutions_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    let o = run(&["train", "--scenario", "3m", "--resolution", "19"], &src);
    assert!(o.status.success(), "{}", stderr(&o));
    let seed = src.join("best.ckpt");
    let dst = tmp.path().join("dst");
    let o = run(
        &["transfer", "--scenario", "8m", "--resolution", "37", "--seed-checkpoint", seed.to_str().unwrap()],
        &dst,
    );
    assert!(!o.status.success());
    let msg = stderr(&o);
    assert!(msg.contains("19") && msg.contains("37"), "{msg}");
    assert!(!dst.exists());
}

#[test]
fn report_rejects_input_without_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = tmp.path().join("r");
    let o = imtl(&["report", empty.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!out.exists());
}

#[test]
fn unknown_resolution_is_a_usage_error() {
    let o = imtl(&["train", "--scenario", "3m", "--resolution", "40"]);
    assert_eq!(o.status.code(), Some(2));
}
