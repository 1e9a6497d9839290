use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoiSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl StoiSummary {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        Some(Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            count: values.len(),
        })
    }
}

/// Results of one method on one speaker group (or `"all"` for the pooled trials).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupResult {
    pub group: String,
    pub eer_percent: Option<f64>,
    pub threshold: Option<f64>,
    pub n_genuine: usize,
    pub n_impostor: usize,
    pub stoi: Option<StoiSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub groups: Vec<GroupResult>,
    /// Row-level problems, such as anonymized files that could not be paired.
    #[serde(default)]
    pub errors: Vec<String>,
}

impl MethodRow {
    pub fn group(&self, name: &str) -> Option<&GroupResult> {
        self.groups.iter().find(|g| g.group == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub corpus_id: String,
    pub config_hash: String,
    /// The speaker scorer is a stand-in for an x-vector system; absolute EERs are not
    /// comparable with published x-vector numbers.
    pub scorer: String,
    pub rows: Vec<MethodRow>,
}

impl EvalReport {
    pub fn row(&self, method: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Aligned text table, one line per method and group.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "corpus: {}  config: {}  scorer: {}", self.corpus_id, self.config_hash, self.scorer);
        let width = self
            .rows
            .iter()
            .map(|r| r.method.len())
            .max()
            .unwrap_or(6)
            .max(6);
        let gw = self
            .rows
            .iter()
            .flat_map(|r| r.groups.iter().map(|g| g.group.len()))
            .max()
            .unwrap_or(5)
            .max(5);
        let _ = writeln!(
            out,
            "{:<width$} | {:<gw$} | {:>7} | {:>9} | {:<25}",
            "method", "group", "EER(%)", "trials", "STOI mean (min-max)"
        );
        let _ = writeln!(out, "{}", "-".repeat(width + gw + 56));
        for r in &self.rows {
            for g in &r.groups {
                let eer = g.eer_percent.map_or("-".to_string(), |e| format!("{e:.2}"));
                let stoi = g.stoi.map_or("-".to_string(), |s| {
                    format!("{:.2} ({:.2}-{:.2})", s.mean, s.min, s.max)
                });
                let _ = writeln!(
                    out,
                    "{:<width$} | {:<gw$} | {:>7} | {:>9} | {:<25}",
                    r.method,
                    g.group,
                    eer,
                    format!("{}/{}", g.n_genuine, g.n_impostor),
                    stoi
                );
            }
        }
        out
    }
}

/// One line of a trial list: `enroll_speaker,test_utterance,label`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub enroll_speaker: String,
    pub test_utterance: String,
    pub label: TrialLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialLabel {
    Genuine,
    Impostor,
}

pub fn read_trials<R: Read>(input: R) -> Result<Vec<Trial>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let expected = ["enroll_speaker", "test_utterance", "label"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Format(format!(
            "trial list header must be {}",
            expected.join(",")
        )));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_trials<W: Write>(trials: &[Trial], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for t in trials {
        wtr.serialize(t)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Score dump line: `trial_id,score,label`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTrial {
    pub trial_id: String,
    pub score: f64,
    pub label: TrialLabel,
}

pub fn write_scores<W: Write>(scores: &[ScoredTrial], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for s in scores {
        wtr.serialize(s)?;
    }
    wtr.flush()?;
    Ok(())
}
