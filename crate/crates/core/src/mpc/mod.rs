//! Payment evaluation: a trusted evaluator and an additive secret-sharing
//! evaluator with dealer-supplied Beaver triples.

mod circuit;
mod field;
mod share;

use thiserror::Error;

use crate::payment::PaymentError;

pub use circuit::{
    evaluate, evaluate_payment_fixed_point, evaluate_payment_secure, evaluate_payment_trusted,
    preprocessing_for, recompute, share_reports, Evaluation, EvaluatorKind, Preprocessing,
    SharedInputs,
};
pub use field::{FixedPointEncoding, Fp, FIXED_RANGE, MODULUS};
pub use share::{
    deal_triples, reconstruct, secure_multiply, share, truncate, BeaverTriple, FieldShare,
    OpenedValue, OpeningKind, Shared, Transcript, TripleDealer, TruncationPair,
    TRIPLES_PER_TRUNCATION, TRUNC_INPUT_BITS, TRUNC_MASK_BITS,
};

/// Fractional bits of the fixed-point encoding.
pub const FIXED_BITS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MpcError {
    #[error("at least two parties are required, got {0}")]
    TooFewParties(usize),
    #[error("share set is missing party {0}")]
    MissingParty(usize),
    #[error("party {0} appears twice in the share set")]
    DuplicateParty(usize),
    #[error("sharing has {0} parties, expected {1}")]
    PartyCountMismatch(usize, usize),
    #[error("{0} is not a reduced field element")]
    NotReduced(u64),
    #[error("Beaver triple already consumed")]
    TripleReused,
    #[error("dealer ran out of Beaver triples")]
    InsufficientTriples,
    #[error("dealer ran out of truncation masks")]
    InsufficientTruncations,
    #[error("{0} is outside the fixed-point range")]
    FixedPointRange(f64),
    #[error("one-hot input of seller {seller} at task {task} does not sum to one")]
    MalformedOneHot { seller: usize, task: usize },
    #[error("intermediate values could exceed the field capacity for these parameters")]
    CapacityExceeded,
    #[error("shared inputs do not match the payment parameters")]
    InputMismatch,
    #[error(transparent)]
    Payment(#[from] PaymentError),
}
