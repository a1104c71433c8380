use crate::args::{CurriculumArgs, ReportArgs, RunArgs, TrainArgs, TransferArgs, OUT_ROOT_ENV};
use crate::output::OutputDir;
use crate::rewards;
use anyhow::{anyhow, bail, Context, Result};
use imtl_core::a2c::{EpsilonSchedule, RunConfig};
use imtl_core::transfer::{
    aggregate_stats, render_csv, render_text, run_curriculum_with, run_transfer, running_average, ReportRow,
    TransferOutcome,
};
use imtl_core::{PolicyCheckpoint, Resolution, Scenario};
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Resolves a built-in scenario name or a TOML descriptor path. An existing
/// file wins over a built-in of the same name.
pub fn load_scenario(spec: &str) -> Result<Scenario> {
    let path = Path::new(spec);
    if path.is_file() {
        return Scenario::load(path).with_context(|| format!("cannot load scenario descriptor {spec}"));
    }
    if Scenario::builtin_descriptor(spec).is_some() {
        return Ok(Scenario::builtin(spec)?);
    }
    bail!(
        "scenario descriptor not found: {spec} (built-ins: {})",
        Scenario::builtin_names().collect::<Vec<_>>().join(", ")
    )
}

pub fn run_config(scenario: Scenario, args: &RunArgs) -> Result<RunConfig> {
    let mut c = RunConfig::new(Arc::new(scenario));
    c.resolution = Resolution::from_side(args.resolution).ok_or_else(|| anyhow!("bad resolution"))?;
    c.episodes = args.episodes;
    c.seeds = args.seeds;
    c.lr = args.lr;
    c.discount = args.discount;
    c.hidden = args.hidden.clone();
    c.epsilon_offset = args.eps_offset;
    c.schedule = EpsilonSchedule {
        epsilon_initial: 1.0,
        gamma_steps: args.gamma_steps,
        epsilon_min: args.eps_min,
    };
    c.validate()?;
    Ok(c)
}

fn default_out(name: &str) -> PathBuf {
    let root = std::env::var_os(OUT_ROOT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    root.join(name)
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Writes one set of runs under `prefix`: a checkpoint and CSV per run, the
/// combined CSV, the selected best checkpoint and the report.
fn write_outcome(
    out: &mut OutputDir,
    prefix: &Path,
    row: &ReportRow,
    baseline: Option<&ReportRow>,
    outcome: &TransferOutcome,
) -> Result<()> {
    let mut all = Vec::with_capacity(outcome.runs.len());
    for (k, run) in outcome.runs.iter().enumerate() {
        let dir = prefix.join(format!("run-{k:03}"));
        out.save_checkpoint(dir.join("checkpoint.ckpt"), &run.checkpoint)?;
        out.write(dir.join("rewards.csv"), rewards::to_csv(&[(k, &run.records)]).as_bytes())?;
        all.push((k, run.records.as_slice()));
    }
    out.write(prefix.join("rewards.csv"), rewards::to_csv(&all).as_bytes())?;
    out.save_checkpoint(prefix.join("best.ckpt"), outcome.best_checkpoint())?;
    let rows: Vec<ReportRow> = baseline.into_iter().cloned().chain([row.clone()]).collect();
    out.write(prefix.join("report.csv"), render_csv(&rows).as_bytes())?;
    out.write(prefix.join("report.txt"), render_text(&rows).as_bytes())?;
    Ok(())
}

fn print_outcome(label: &str, outcome: &TransferOutcome) {
    for (k, run) in outcome.runs.iter().enumerate() {
        let mean = outcome.stats.per_seed[k];
        let wins = run.records.iter().filter(|r| r.win).count();
        eprintln!("[{label}] run {k}: mean reward {mean:.3}, {wins} wins");
    }
}

pub fn cmd_train(args: &TrainArgs) -> Result<PathBuf> {
    let scenario = load_scenario(&args.scenario)?;
    let config = run_config(scenario, &args.run)?;
    let name = config.scenario.name.clone();
    let root = args
        .run
        .out
        .clone()
        .unwrap_or_else(|| default_out(&format!("train-{}-rng{}", slug(&name), args.run.rng)));
    let mut out = OutputDir::create(root)?;
    eprintln!("[train {name}] {} runs x {} episodes", config.seeds, config.episodes);
    let outcome = run_transfer(None, &config, args.run.rng)?;
    print_outcome(&name, &outcome);
    let row = ReportRow {
        scenario: name,
        pretrained: None,
        stats: outcome.stats.clone(),
    };
    write_outcome(&mut out, Path::new(""), &row, None, &outcome)?;
    out.write_metadata("train")?;
    print!("{}", render_text(&[row]));
    Ok(out.commit())
}

fn baseline_row(path: &Path, scenario: &str) -> Result<ReportRow> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read baseline {}", path.display()))?;
    let parsed = rewards::parse(&text);
    if parsed.is_empty() {
        bail!("baseline {} holds no reward rows", path.display());
    }
    if parsed.skipped > 0 {
        eprintln!("warning: skipped {} malformed rows in {}", parsed.skipped, path.display());
    }
    Ok(ReportRow {
        scenario: scenario.to_string(),
        pretrained: None,
        stats: aggregate_stats(&parsed.series())?,
    })
}

pub fn cmd_transfer(args: &TransferArgs) -> Result<PathBuf> {
    let seed = PolicyCheckpoint::load(&args.seed_checkpoint)
        .with_context(|| format!("cannot load seed checkpoint {}", args.seed_checkpoint.display()))?;
    let scenario = load_scenario(&args.scenario)?;
    let config = run_config(scenario, &args.run)?;
    if seed.schema != config.schema() {
        bail!(
            "seed checkpoint {} has schema {} but the target run expects {}",
            args.seed_checkpoint.display(),
            seed.schema,
            config.schema()
        );
    }
    let name = config.scenario.name.clone();
    let baseline = args.baseline.as_deref().map(|p| baseline_row(p, &name)).transpose()?;
    let pretrained = seed.chain();
    let root = args.run.out.clone().unwrap_or_else(|| {
        default_out(&format!("transfer-{}-from-{}-rng{}", slug(&name), slug(&pretrained), args.run.rng))
    });
    let mut out = OutputDir::create(root)?;
    eprintln!(
        "[transfer {pretrained} -> {name}] {} runs x {} episodes",
        config.seeds, config.episodes
    );
    let outcome = run_transfer(Some(&seed), &config, args.run.rng)?;
    print_outcome(&name, &outcome);
    let row = ReportRow {
        scenario: name,
        pretrained: Some(pretrained),
        stats: outcome.stats.clone(),
    };
    write_outcome(&mut out, Path::new(""), &row, baseline.as_ref(), &outcome)?;
    out.write_metadata("transfer")?;
    let rows: Vec<ReportRow> = baseline.into_iter().chain([row]).collect();
    print!("{}", render_text(&rows));
    Ok(out.commit())
}

pub fn cmd_curriculum(args: &CurriculumArgs) -> Result<PathBuf> {
    if args.stages.len() < 2 {
        bail!("a curriculum needs at least 2 stages, got {}", args.stages.len());
    }
    let configs = args
        .stages
        .iter()
        .map(|s| run_config(load_scenario(s)?, &args.run))
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = configs.iter().map(|c| c.scenario.name.clone()).collect();
    let root = args.run.out.clone().unwrap_or_else(|| {
        let chain: Vec<String> = names.iter().map(|n| slug(n)).collect();
        default_out(&format!("curriculum-{}-rng{}", chain.join("-"), args.run.rng))
    });
    let mut out = OutputDir::create(&root)?;

    let mut rows: Vec<ReportRow> = Vec::new();
    let stage_dirs: Vec<PathBuf> = names
        .iter()
        .enumerate()
        .map(|(i, n)| PathBuf::from(format!("stage-{}-{}", i + 1, slug(n))))
        .collect();
    let result = run_curriculum_with(&configs, args.run.rng, |i, outcome| {
        let label = format!("stage {} {}", i + 1, names[i]);
        print_outcome(&label, outcome);
        let row = ReportRow {
            scenario: names[i].clone(),
            pretrained: (i > 0).then(|| names[..i].join("→")),
            stats: outcome.stats.clone(),
        };
        // each stage is committed on its own so a later failure keeps it
        let mut stage = OutputDir::create(root.join(&stage_dirs[i]))?;
        write_outcome(&mut stage, Path::new(""), &row, None, outcome)?;
        stage.commit();
        rows.push(row);
        Ok(())
    });
    let done = result?;
    let final_ck = done.final_checkpoint();
    out.save_checkpoint("final.ckpt", final_ck)?;
    let mut summary = format!("chain: {}\n\n", final_ck.chain());
    summary.push_str(&render_text(&rows));
    out.write("summary.txt", summary.as_bytes())?;
    out.write("summary.csv", render_csv(&rows).as_bytes())?;
    out.write_metadata("curriculum")?;
    print!("{summary}");
    Ok(out.commit())
}

/// `SCENARIO[@PRETRAINED]=PATH`, or a bare path.
pub fn parse_input(spec: &str) -> (String, Option<String>, PathBuf) {
    if !Path::new(spec).exists() {
        if let Some((label, path)) = spec.split_once('=') {
            let (scenario, pretrained) = match label.split_once('@') {
                Some((s, p)) => (s.to_string(), Some(p.to_string())),
                None => (label.to_string(), None),
            };
            return (scenario, pretrained, PathBuf::from(path));
        }
    }
    let path = PathBuf::from(spec);
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| spec.to_string());
    (stem, None, path)
}

/// Mean over runs of each run's running average, episode by episode.
fn plot_data(series: &[Vec<f64>]) -> String {
    let curves: Vec<Vec<f64>> = series.iter().map(|s| running_average(s)).collect();
    let len = curves.iter().map(Vec::len).max().unwrap_or(0);
    let mut s = String::from("episode,running_avg\n");
    for e in 0..len {
        let vals: Vec<f64> = curves.iter().filter_map(|c| c.get(e).copied()).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        s.push_str(&format!("{e},{mean}\n"));
    }
    s
}

pub struct ReportOutput {
    pub dir: PathBuf,
    pub table: String,
    pub skipped: usize,
}

pub fn cmd_report(args: &ReportArgs) -> Result<ReportOutput> {
    let mut rows = Vec::new();
    let mut plots = Vec::new();
    let mut skipped = 0;
    for spec in &args.inputs {
        let (scenario, pretrained, path) = parse_input(spec);
        let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
        let parsed = rewards::parse(&text);
        skipped += parsed.skipped;
        if parsed.is_empty() {
            bail!("{} holds no valid reward rows", path.display());
        }
        let series = parsed.series();
        rows.push(ReportRow {
            scenario,
            pretrained,
            stats: aggregate_stats(&series)?,
        });
        plots.push(plot_data(&series));
    }
    let root = args.out.clone().unwrap_or_else(|| default_out("report"));
    let mut out = OutputDir::create(root)?;
    for (i, (row, plot)) in rows.iter().zip(&plots).enumerate() {
        let label = match &row.pretrained {
            Some(p) => format!("{}-from-{}", row.scenario, p),
            None => row.scenario.clone(),
        };
        out.write(format!("plot-{}-{}.csv", i + 1, slug(&label)), plot.as_bytes())?;
    }
    let table = render_text(&rows);
    out.write("report.csv", render_csv(&rows).as_bytes())?;
    out.write("report.txt", table.as_bytes())?;
    Ok(ReportOutput {
        dir: out.commit(),
        table,
        skipped,
    })
}
