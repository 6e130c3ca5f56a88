//! Programmable, observable global random oracle and the symmetric
//! encryption and commitment schemes built on top of it.
//!
//! The oracle is a lazily filled table rather than a concrete hash so that
//! a simulator can fix outputs at fresh points after the fact, and honest
//! parties can ask whether a point was fixed that way.

mod cipher;
mod commit;
mod oracle;

pub use cipher::{decrypt, encrypt, keygen, Block, Ciphertext, SecretKey};
pub use commit::{commit, open_commitment, Commitment, Opening};
pub use oracle::{query, Digest, ObservedQuery, OracleTable, RandomOracle, SessionId, Simulator};

use thiserror::Error;

/// Output length of the oracle in bytes (μ = 256 bits).
pub const DIGEST_BYTES: usize = 32;
/// Length of keys and commitment openings in bytes (κ = 128 bits).
pub const KEY_BYTES: usize = 16;
/// Number of fresh samples tried before keygen/commit give up.
pub const RESAMPLE_BUDGET: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("point already present in the oracle table, program aborted")]
    ProgramAborted,
    #[error("no unprogrammed sample found after {0} attempts")]
    ResampleBudgetExhausted(usize),
    #[error("message length {0} is not a whole number of {DIGEST_BYTES}-byte blocks")]
    BlockSize(usize),
    #[error("keystream point for block {0} is programmed")]
    ProgrammedKeystream(u32),
}
