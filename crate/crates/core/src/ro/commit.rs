use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{query, CryptoError, Digest, RandomOracle, SessionId, KEY_BYTES, RESAMPLE_BUDGET};

/// `Com(m) = H(m‖Op(m))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Commitment(pub Digest);

impl fmt::Display for Commitment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The κ-bit opening randomness of a commitment.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Opening(#[serde(with = "hex::serde")] pub [u8; KEY_BYTES]);

impl Opening {
    pub fn as_bytes(&self) -> &[u8; KEY_BYTES] {
        &self.0
    }
}

impl fmt::Debug for Opening {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Opening({})", hex::encode(self.0))
    }
}

pub fn commit<O: RandomOracle + ?Sized, R: RngCore + ?Sized>(
    oracle: &mut O,
    message: &[u8],
    session: SessionId,
    rng: &mut R,
) -> Result<(Commitment, Opening), CryptoError> {
    for _ in 0..RESAMPLE_BUDGET {
        let mut bytes = [0u8; KEY_BYTES];
        rng.fill_bytes(&mut bytes);
        let opening = Opening(bytes);
        let q = query::commitment(message, &opening);
        if oracle.is_programmed(&q, session) {
            continue;
        }
        let digest = oracle.query(&q, session, session);
        return Ok((Commitment(digest), opening));
    }
    Err(CryptoError::ResampleBudgetExhausted(RESAMPLE_BUDGET))
}

/// Accepts iff `com = H(m‖op)` and that point was not programmed.
pub fn open_commitment<O: RandomOracle + ?Sized>(
    oracle: &mut O,
    com: &Commitment,
    opening: &Opening,
    message: &[u8],
    session: SessionId,
) -> bool {
    let q = query::commitment(message, opening);
    let digest = oracle.query(&q, session, session);
    digest == com.0 && !oracle.is_programmed(&q, session)
}
