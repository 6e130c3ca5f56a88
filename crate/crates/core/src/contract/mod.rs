//! The escrow contract as a deterministic ledger state machine.

mod costs;
mod state;
mod verdict;

use thiserror::Error;

pub use costs::{buyer_utilities, check_deposit_bounds, BuyerUtilities, CostModel, DepositCheck, Deposits};
pub use state::{
    Account, ContractState, ContractTerms, Deadlines, LedgerDelta, LedgerEvent, Operation,
    Outcome, Party, RebuttalEvidence, Stage,
};
pub use verdict::{classify_good, IncorrectGoodReason};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("traders submitted inconsistent contract terms")]
    InconsistentTerms,
    #[error("contract needs one buyer and at least two sellers")]
    MissingSignatures,
    #[error("deposit of {0:?} must be positive")]
    NonPositiveDeposit(Party),
    #[error("operation not allowed in stage {0:?}")]
    WrongStage(Stage),
    #[error("{0:?} already submitted")]
    Duplicate(Party),
    #[error("party {0:?} is not part of this contract")]
    UnknownParty(Party),
    #[error("expected {expected} entries, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("invalid cost model: {0}")]
    InvalidCosts(&'static str),
}
