use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{query, CryptoError, RandomOracle, SessionId, DIGEST_BYTES, KEY_BYTES, RESAMPLE_BUDGET};

pub type Block = [u8; DIGEST_BYTES];

/// A κ-bit symmetric key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SecretKey(#[serde(with = "hex::serde")] pub [u8; KEY_BYTES]);

impl SecretKey {
    pub fn as_bytes(&self) -> &[u8; KEY_BYTES] {
        &self.0
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey({})", hex::encode(self.0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ciphertext {
    blocks: Vec<Block>,
}

impl Ciphertext {
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.blocks.concat()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        Ok(Ciphertext {
            blocks: split_blocks(bytes)?,
        })
    }
}

impl Serialize for Ciphertext {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.to_bytes()))
    }
}

impl<'de> Deserialize<'de> for Ciphertext {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let bytes: Vec<u8> = hex::serde::deserialize(d)?;
        Ciphertext::from_bytes(&bytes).map_err(serde::de::Error::custom)
    }
}

fn split_blocks(bytes: &[u8]) -> Result<Vec<Block>, CryptoError> {
    if !bytes.len().is_multiple_of(DIGEST_BYTES) {
        return Err(CryptoError::BlockSize(bytes.len()));
    }
    Ok(bytes
        .chunks_exact(DIGEST_BYTES)
        .map(|c| c.try_into().expect("exact chunk"))
        .collect())
}

fn block_index(i: usize) -> u32 {
    u32::try_from(i + 1).expect("block count fits in u32")
}

/// Samples a key whose keystream points `k‖1 .. k‖n` are all unprogrammed.
pub fn keygen<O: RandomOracle + ?Sized, R: RngCore + ?Sized>(
    oracle: &O,
    block_count: usize,
    session: SessionId,
    rng: &mut R,
) -> Result<SecretKey, CryptoError> {
    for _ in 0..RESAMPLE_BUDGET {
        let mut bytes = [0u8; KEY_BYTES];
        rng.fill_bytes(&mut bytes);
        let key = SecretKey(bytes);
        let clean = (0..block_count)
            .all(|i| !oracle.is_programmed(&query::keystream(&key, block_index(i)), session));
        if clean {
            return Ok(key);
        }
    }
    Err(CryptoError::ResampleBudgetExhausted(RESAMPLE_BUDGET))
}

/// Block `i` of the ciphertext is `H(k‖i) XOR m_i`.
pub fn encrypt<O: RandomOracle + ?Sized>(
    oracle: &mut O,
    key: &SecretKey,
    message: &[u8],
    session: SessionId,
) -> Result<Ciphertext, CryptoError> {
    let mut blocks = split_blocks(message)?;
    for (i, block) in blocks.iter_mut().enumerate() {
        let pad = oracle.query(&query::keystream(key, block_index(i)), session, session);
        xor_into(block, pad.as_bytes());
    }
    Ok(Ciphertext { blocks })
}

/// Inverse of [`encrypt`]; fails if any keystream point was programmed.
pub fn decrypt<O: RandomOracle + ?Sized>(
    oracle: &mut O,
    key: &SecretKey,
    ciphertext: &Ciphertext,
    session: SessionId,
) -> Result<Vec<u8>, CryptoError> {
    let mut out = Vec::with_capacity(ciphertext.blocks.len() * DIGEST_BYTES);
    for (i, block) in ciphertext.blocks.iter().enumerate() {
        let q = query::keystream(key, block_index(i));
        let pad = oracle.query(&q, session, session);
        if oracle.is_programmed(&q, session) {
            return Err(CryptoError::ProgrammedKeystream(block_index(i)));
        }
        let mut m = *block;
        xor_into(&mut m, pad.as_bytes());
        out.extend_from_slice(&m);
    }
    Ok(out)
}

fn xor_into(dst: &mut Block, pad: &Block) {
    for (d, p) in dst.iter_mut().zip(pad) {
        *d ^= p;
    }
}
