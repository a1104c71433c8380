//! Min/Max/Avg/Std result tables.
//!
//! Rows trained from scratch show [`SCRATCH_MARK`] in the pretrained-policy
//! column. When a scenario has both a scratch row and seeded rows, the seeded
//! rows carry the relative change of their average over the scratch average.

use super::stats::RunStats;
use std::fmt::Write as _;

pub const SCRATCH_MARK: &str = "−";
pub const HEADER: [&str; 7] = ["Scenario", "Pretrained Policy", "Min", "Max", "Avg", "Std", "Improvement"];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scenario: String,
    /// `None` for a run trained from scratch.
    pub pretrained: Option<String>,
    pub stats: RunStats,
}

impl ReportRow {
    pub fn pretrained_label(&self) -> &str {
        self.pretrained.as_deref().unwrap_or(SCRATCH_MARK)
    }
}

/// Relative change of each row's average against the scratch row of the
/// same scenario, in percent.
pub fn improvements(rows: &[ReportRow]) -> Vec<Option<f64>> {
    rows.iter()
        .map(|row| {
            row.pretrained.as_ref()?;
            let base = rows
                .iter()
                .find(|r| r.pretrained.is_none() && r.scenario == row.scenario)?;
            if base.stats.avg == 0.0 {
                return None;
            }
            Some((row.stats.avg - base.stats.avg) / base.stats.avg.abs() * 100.0)
        })
        .collect()
}

fn cells(rows: &[ReportRow], decimals: usize) -> Vec<[String; 7]> {
    let imp = improvements(rows);
    rows.iter()
        .zip(imp)
        .map(|(r, i)| {
            let s = &r.stats;
            [
                r.scenario.clone(),
                r.pretrained_label().to_string(),
                format!("{:.*}", decimals, s.min),
                format!("{:.*}", decimals, s.max),
                format!("{:.*}", decimals, s.avg),
                format!("{:.*}", decimals, s.std),
                i.map(|v| format!("{v:+.1}%")).unwrap_or_default(),
            ]
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for row in cells(rows, 6) {
        let fields: Vec<String> = row.iter().map(|c| csv_field(c)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Fixed-width text table with two decimals.
pub fn render_text(rows: &[ReportRow]) -> String {
    let body = cells(rows, 2);
    let mut width = HEADER.map(|h| h.chars().count());
    for row in &body {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |fields: &[&str]| {
        let mut l = String::new();
        for (i, (f, w)) in fields.iter().zip(width).enumerate() {
            if i > 0 {
                l.push_str("  ");
            }
            // numbers right-aligned, labels left-aligned
            let pad = w - f.chars().count();
            if i >= 2 {
                l.push_str(&" ".repeat(pad));
                l.push_str(f);
            } else {
                l.push_str(f);
                l.push_str(&" ".repeat(pad));
            }
        }
        let _ = writeln!(out, "{}", l.trim_end());
    };
    line(&HEADER);
    for row in &body {
        let refs: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&refs);
    }
    out
}
