use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    collusion_suite, deposit_sweep, deposits_suite, run_batch, spe_grid_check, truthfulness_suite, Check,
    DepositRanges, Execution, ExperimentReport, RunTranscript, ScenarioConfig, SimError, SpeSettings,
};
use crate::contract::{Outcome, Stage};
use crate::payment::ReportKind;
use crate::traders::SignalModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Run,
    Truthfulness,
    Collusion,
    Spe,
    Deposits,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Run => "run",
            ExperimentKind::Truthfulness => "truthfulness",
            ExperimentKind::Collusion => "collusion",
            ExperimentKind::Spe => "spe",
            ExperimentKind::Deposits => "deposits",
        }
    }

    /// Pre-registered trial count when none is given.
    pub fn default_trials(self) -> usize {
        match self {
            ExperimentKind::Run | ExperimentKind::Deposits => 1,
            ExperimentKind::Truthfulness | ExperimentKind::Collusion => 20_000,
            ExperimentKind::Spe => 2_000,
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            ExperimentKind::Run,
            ExperimentKind::Truthfulness,
            ExperimentKind::Collusion,
            ExperimentKind::Spe,
            ExperimentKind::Deposits,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown experiment {s:?}"))
    }
}

/// Conservation, termination and the privacy shadow for one run.
fn run_checks(t: &RunTranscript, total: i64) -> Vec<Check> {
    let conserved = t.events.iter().all(|e| e.ledger_total == total)
        && t.balances.iter().map(|b| b.balance).sum::<i64>() + t.sink == total;
    let closed = t.outcome != Outcome::Pending && t.events.last().is_some_and(|e| e.stage_after == Stage::Closed);
    let public: Vec<String> = t
        .events_before_reveal()
        .iter()
        .map(|e| serde_json::to_string(e).expect("event serializes"))
        .collect();
    let hidden = t.packages.iter().all(|pkg| public.iter().all(|e| !e.contains(pkg.as_str())));
    let tag = format!("trial {}", t.trial);
    vec![
        Check::new(format!("{tag}: ledger conserved"), conserved, format!("{} events", t.events.len())),
        Check::new(format!("{tag}: contract closed"), closed, format!("{:?}", t.outcome)),
        Check::new(format!("{tag}: packages private before reveal"), hidden, ""),
    ]
}

/// The first two sellers of a signal model, for the pairwise suites.
fn pairwise_model(model: &SignalModel) -> Result<SignalModel, SimError> {
    if model.kind() != ReportKind::Signal {
        return Err(SimError::InvalidConfig("the Monte Carlo suites use signal reports"));
    }
    Ok(SignalModel::new(ReportKind::Signal, model.prior().clone(), model.noise()[..2].to_vec())?)
}

/// Runs one experiment. `trials` overrides the config (for `run`) or the
/// suite's default trial count.
pub fn run_experiment(
    kind: ExperimentKind,
    config: &ScenarioConfig,
    trials: Option<usize>,
    exec: Execution,
) -> Result<(Vec<RunTranscript>, ExperimentReport), SimError> {
    config.validate()?;
    let trials = trials.unwrap_or(match kind {
        ExperimentKind::Run => config.trials,
        k => k.default_trials(),
    });
    let mut report = ExperimentReport::new(kind.name(), config.seed, trials);
    let mut transcripts = Vec::new();
    match kind {
        ExperimentKind::Run => {
            let config = ScenarioConfig { trials, ..config.clone() };
            transcripts = run_batch(&config, exec)?;
            report.tally(&transcripts);
            let total = config.costs.deposits().total();
            report.checks = transcripts.iter().flat_map(|t| run_checks(t, total)).collect();
        }
        ExperimentKind::Truthfulness => {
            let model = pairwise_model(&config.model)?;
            (report.profiles, report.checks) = truthfulness_suite(&model, config.tasks, trials, config.seed, exec)?;
        }
        ExperimentKind::Collusion => {
            let model = pairwise_model(&config.model)?;
            (report.profiles, report.checks) = collusion_suite(&model, config.tasks, trials, config.seed, exec)?;
        }
        ExperimentKind::Spe => {
            let settings = SpeSettings { trials, seed: config.seed, ..SpeSettings::standard() };
            let table = spe_grid_check(&settings, exec)?;
            report.checks = vec![
                Check::new(
                    "truthful profile survives and is coalition-proof",
                    table.truthful.survives && !table.truthful.coalition_dominated(),
                    format!("utilities {:?}", table.truthful.utilities),
                ),
                Check::new(
                    "identical misreports: upward eliminated, downward survive but coalition-dominated",
                    table.expected_shape(),
                    format!("{} survivors, {} coalition-proof", table.survivors, table.strong_survivors),
                ),
            ];
            report.spe = Some(table);
        }
        ExperimentKind::Deposits => {
            let (mut rows, checks) = deposits_suite();
            rows.extend(deposit_sweep(&config.costs, &DepositRanges::default()));
            report.deposit_rows = rows;
            report.checks = checks;
        }
    }
    Ok((transcripts, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for k in ["run", "truthfulness", "collusion", "spe", "deposits"] {
            assert_eq!(k.parse::<ExperimentKind>().unwrap().name(), k);
        }
        assert!("nope".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn run_and_deposits_pass() {
        let c = ScenarioConfig::honest();
        let (runs, report) = run_experiment(ExperimentKind::Run, &c, Some(4), Execution::Parallel).unwrap();
        assert_eq!(runs.len(), 4);
        assert!(report.passed(), "{}", report.summary_text());
        let (_, report) = run_experiment(ExperimentKind::Deposits, &c, None, Execution::Parallel).unwrap();
        assert!(report.passed());
        assert!(report.deposit_rows.last().unwrap().ok);
    }

    #[test]
    fn small_suites_run() {
        let c = ScenarioConfig::honest();
        let (_, r) = run_experiment(ExperimentKind::Truthfulness, &c, Some(2000), Execution::Parallel).unwrap();
        assert_eq!(r.profiles.len(), 5);
        assert!(r.passed(), "{}", r.summary_text());
        let (_, r) = run_experiment(ExperimentKind::Collusion, &c, Some(2000), Execution::Parallel).unwrap();
        assert!(r.passed(), "{}", r.summary_text());
    }
}
