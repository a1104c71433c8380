//! Per-episode reward CSVs.
//!
//! Schema version 1, one row per episode:
//!
//! ```text
//! run_id,episode,reward,win,epsilon
//! 0,0,1.875,0,1
//! ```
//!
//! `win` is 0 or 1. Floats use shortest round-trip formatting.

use imtl_core::a2c::EpisodeRecord;
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const HEADER: &str = "run_id,episode,reward,win,epsilon";

pub fn write_rows(out: &mut String, run_id: usize, records: &[EpisodeRecord]) {
    for r in records {
        let _ = writeln!(
            out,
            "{run_id},{},{},{},{}",
            r.episode,
            r.reward,
            u8::from(r.win),
            r.epsilon
        );
    }
}

pub fn to_csv(runs: &[(usize, &[EpisodeRecord])]) -> String {
    let mut s = String::from(HEADER);
    s.push('\n');
    for (id, records) in runs {
        write_rows(&mut s, *id, records);
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub run_id: u64,
    pub episode: u64,
    pub reward: f64,
    pub win: bool,
    pub epsilon: f64,
}

fn parse_row(line: &str) -> Option<Row> {
    let f: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
    if f.len() != 5 {
        return None;
    }
    let reward: f64 = f[2].trim().parse().ok()?;
    let epsilon: f64 = f[4].trim().parse().ok()?;
    if !reward.is_finite() || !epsilon.is_finite() {
        return None;
    }
    let win = match f[3].trim() {
        "0" | "false" => false,
        "1" | "true" => true,
        _ => return None,
    };
    Some(Row {
        run_id: f[0].trim().parse().ok()?,
        episode: f[1].trim().parse().ok()?,
        reward,
        win,
        epsilon,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Parsed {
    /// Reward series keyed by run id, in file order.
    pub runs: BTreeMap<u64, Vec<f64>>,
    pub skipped: usize,
}

impl Parsed {
    pub fn series(&self) -> Vec<Vec<f64>> {
        self.runs.values().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }
}

/// Parses a rewards CSV, skipping (and counting) malformed rows. A leading
/// header line is optional.
pub fn parse(text: &str) -> Parsed {
    let mut out = Parsed::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (i == 0 && line.trim_end_matches('\r') == HEADER) {
            continue;
        }
        match parse_row(line) {
            Some(r) => out.runs.entry(r.run_id).or_default().push(r.reward),
            None => out.skipped += 1,
        }
    }
    out
}
