//! Per-command accuracy report and its table renderings.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::fleet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandTally {
    pub command_id: String,
    pub robot_id: String,
    pub trials: usize,
    pub correct: usize,
}

impl CommandTally {
    /// `100 × correct / trials`; 0 for an empty row.
    pub fn accuracy(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            100.0 * self.correct as f64 / self.trials as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AccuracyReport {
    tallies: BTreeMap<(String, String), (usize, usize)>,
    /// Expected command → what actually happened → count.
    confusion: BTreeMap<String, BTreeMap<String, usize>>,
}

/// Sort key: reference commands in table order, others alphabetically after.
fn row_key(command: &str, robot: &str) -> (usize, String, String) {
    let pos = fleet::reference_commands()
        .iter()
        .position(|(_, c)| *c == command)
        .unwrap_or(usize::MAX);
    (pos, command.to_string(), robot.to_string())
}

/// Two decimals, trailing zeros dropped: 89.00 → "89", 66.666… → "66.67".
pub fn format_percent(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

impl AccuracyReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, robot_id: &str, command_id: &str, correct: bool, observed: &str) {
        let e = self.tallies.entry((command_id.into(), robot_id.into())).or_default();
        e.0 += 1;
        e.1 += correct as usize;
        *self
            .confusion
            .entry(command_id.into())
            .or_default()
            .entry(observed.into())
            .or_default() += 1;
    }

    /// Sets a row directly, e.g. from published figures.
    pub fn set_row(&mut self, robot_id: &str, command_id: &str, trials: usize, correct: usize) {
        assert!(correct <= trials, "correct exceeds trials");
        self.tallies.insert((command_id.into(), robot_id.into()), (trials, correct));
    }

    pub fn is_empty(&self) -> bool {
        self.tallies.is_empty()
    }

    /// Rows in table order.
    pub fn rows(&self) -> Vec<CommandTally> {
        let mut rows: Vec<CommandTally> = self
            .tallies
            .iter()
            .map(|((c, r), (t, k))| CommandTally {
                command_id: c.clone(),
                robot_id: r.clone(),
                trials: *t,
                correct: *k,
            })
            .collect();
        rows.sort_by_key(|r| row_key(&r.command_id, &r.robot_id));
        rows
    }

    pub fn row(&self, command_id: &str) -> Option<CommandTally> {
        self.rows().into_iter().find(|r| r.command_id == command_id)
    }

    pub fn totals(&self) -> (usize, usize) {
        self.tallies.values().fold((0, 0), |(t, c), (tt, cc)| (t + tt, c + cc))
    }

    pub fn confusion(&self) -> &BTreeMap<String, BTreeMap<String, usize>> {
        &self.confusion
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "rows": self.rows().iter().map(|r| serde_json::json!({
                "command": r.command_id,
                "robot": r.robot_id,
                "trials": r.trials,
                "correct": r.correct,
                "accuracy": r.accuracy(),
            })).collect::<Vec<_>>(),
            "totals": { "trials": self.totals().0, "correct": self.totals().1 },
            "confusion": self.confusion,
        }))
        .expect("report serializes")
    }
}

/// The three-column accuracy table in Markdown. Robot ids are shown upper-case.
pub fn render_table(report: &AccuracyReport) -> String {
    let mut out = String::from("| Command | Robot | Accuracy (%) |\n|---|---|---|\n");
    for r in report.rows() {
        let _ = writeln!(out, "| {} | {} | {} |", r.command_id, r.robot_id.to_uppercase(), format_percent(r.accuracy()));
    }
    out
}

/// Raw counts per row plus an overall line.
pub fn render_counts(report: &AccuracyReport) -> String {
    let mut out = String::from("| Command | Robot | Correct | Trials |\n|---|---|---|---|\n");
    for r in report.rows() {
        let _ = writeln!(out, "| {} | {} | {} | {} |", r.command_id, r.robot_id.to_uppercase(), r.correct, r.trials);
    }
    let (t, c) = report.totals();
    let overall = if t == 0 { 0.0 } else { 100.0 * c as f64 / t as f64 };
    let _ = writeln!(out, "| total | | {c} | {t} |");
    let _ = writeln!(out, "\noverall accuracy: {}%", format_percent(overall));
    out
}

/// Expected command against observed result, one line per non-zero cell.
pub fn render_confusion(report: &AccuracyReport) -> String {
    let mut rows: Vec<_> = report.confusion.iter().collect();
    rows.sort_by_key(|(c, _)| row_key(c, ""));
    let mut out = String::from("| Expected | Observed | Count |\n|---|---|---|\n");
    for (expected, cells) in rows {
        for (observed, n) in cells {
            let _ = writeln!(out, "| {expected} | {observed} | {n} |");
        }
    }
    out
}
