//! Scenario runner, Monte Carlo experiments, the strategy-grid equilibrium
//! check, deposit sweeps and report output.

mod config;
mod deposits;
mod exec;
mod experiments;
mod report;
mod run;
mod spe;
mod stats;
mod suite;

use thiserror::Error;

use crate::contract::ContractError;
use crate::payment::PaymentError;
use crate::traders::TraderError;

pub use config::ScenarioConfig;
pub use deposits::{deposit_sweep, deposits_suite, worked_example, DepositRanges, DepositRow};
pub use exec::{map_trials, Execution};
pub use experiments::{
    collusion_suite, estimate_payment, truthfulness_suite, Check, PaymentExperiment, ProfileEstimate, MIN_TRIALS,
    SIGMA_MARGIN,
};
pub use spe::{
    spe_grid_check, AssignOption, CoalitionDeviation, ComputeOption, KeyOption, PackagingOption, PayoffCell,
    Cause, Elimination, ProfileLabel, ProfileVerdict, SpeGrid, SpeSettings, SpeTable, ValOption, MAX_OPTIONS,
};
pub use report::{emit_report, ExperimentReport, ReportPaths};
pub use run::{run_batch, run_scenario, PartyBalance, RunTranscript};
pub use suite::{run_experiment, ExperimentKind};
pub use stats::{ks_two_sample, Estimate, KsResult};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(&'static str),
    #[error("need at least {min} trials, got {got}")]
    TooFewTrials { min: usize, got: usize },
    #[error("strategy grid has no options for {0}")]
    EmptyGrid(&'static str),
    #[error("strategy grid lacks the truthful option for {0}")]
    MissingTruthful(&'static str),
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Trader(#[from] TraderError),
    #[error(transparent)]
    Payment(#[from] PaymentError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
