use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Check, DepositRow, ProfileEstimate, RunTranscript, ScenarioConfig, SimError, SpeTable};

/// Results of one CLI experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub trials: usize,
    /// Outcome name to number of transcripts ending in it.
    pub outcomes: BTreeMap<String, usize>,
    pub profiles: Vec<ProfileEstimate>,
    pub deposit_rows: Vec<DepositRow>,
    pub spe: Option<SpeTable>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, seed: u64, trials: usize) -> Self {
        ExperimentReport {
            experiment: experiment.to_owned(),
            seed,
            trials,
            outcomes: BTreeMap::new(),
            profiles: Vec::new(),
            deposit_rows: Vec::new(),
            spe: None,
            checks: Vec::new(),
        }
    }

    /// Counts outcomes of the given runs.
    pub fn tally(&mut self, transcripts: &[RunTranscript]) {
        for t in transcripts {
            let name = serde_json::to_value(t.outcome).ok().and_then(|v| v.as_str().map(str::to_owned));
            *self.outcomes.entry(name.unwrap_or_default()).or_default() += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Plain-text summary; sections without data print only their header.
    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {}", self.experiment);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "trials: {}", self.trials);
        let _ = writeln!(s, "\n{:<24} {:>8}", "outcome", "count");
        for (name, n) in &self.outcomes {
            let _ = writeln!(s, "{name:<24} {n:>8}");
        }
        let _ = writeln!(s, "\n{:<32} {:>6} {:>12} {:>10} {:>8}", "profile", "seller", "mean", "stderr", "trials");
        for p in &self.profiles {
            for (i, e) in p.per_seller.iter().enumerate() {
                let _ = writeln!(s, "{:<32} {:>6} {:>12.5} {:>10.5} {:>8}", p.name, i, e.mean, e.stderr, e.trials);
            }
        }
        if !self.deposit_rows.is_empty() {
            let _ = writeln!(s, "\n{:>10} {:>16} {:>10} {:>5}  slacks", "dep_buyer", "dep_sellers", "attack", "ok");
            for r in &self.deposit_rows {
                let _ = writeln!(
                    s,
                    "{:>10} {:>16} {:>10} {:>5}  {:?}",
                    r.dep_buyer,
                    format!("{:?}", r.dep_sellers),
                    r.attack_cost,
                    r.ok,
                    r.slacks
                );
            }
        }
        if let Some(t) = &self.spe {
            let _ = writeln!(s, "\nprofiles: {}  survivors: {}  coalition-proof survivors: {}  tie margin: {:.3}",
                t.profiles_total, t.survivors, t.strong_survivors, t.tie_margin);
            for v in std::iter::once(&t.truthful).chain(&t.identical_val_misreports) {
                let _ = writeln!(
                    s,
                    "val {:?}: survives={} eliminated={:?} coalition_dominated={} utilities={:?}",
                    v.label.val[0],
                    v.survives,
                    v.eliminated,
                    v.coalition_dominated(),
                    v.utilities
                );
            }
        }
        let _ = writeln!(s, "\n{:<56} {:>6}  detail", "check", "result");
        for c in &self.checks {
            let verdict = if c.passed { "pass" } else { "FAIL" };
            let _ = writeln!(s, "{:<56} {:>6}  {}", c.name, verdict, c.detail);
        }
        s
    }
}

/// Files written by [`emit_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub transcripts: PathBuf,
    pub summary_text: PathBuf,
    pub summary_json: PathBuf,
    pub config: PathBuf,
}

/// Writes `transcript.jsonl`, `summary.txt`, `summary.json` and
/// `config.json` (the config with the seed actually used) into `dir`.
pub fn emit_report(
    transcripts: &[RunTranscript],
    report: &ExperimentReport,
    config: &ScenarioConfig,
    dir: &Path,
) -> Result<ReportPaths, SimError> {
    fs::create_dir_all(dir)?;
    let paths = ReportPaths {
        transcripts: dir.join("transcript.jsonl"),
        summary_text: dir.join("summary.txt"),
        summary_json: dir.join("summary.json"),
        config: dir.join("config.json"),
    };
    let mut lines = String::new();
    for t in transcripts {
        lines.push_str(&t.to_json_line());
        lines.push('\n');
    }
    fs::write(&paths.transcripts, lines)?;
    fs::write(&paths.summary_text, report.summary_text())?;
    fs::write(&paths.summary_json, serde_json::to_string_pretty(report)?)?;
    fs::write(&paths.config, serde_json::to_string_pretty(config)?)?;
    Ok(paths)
}
