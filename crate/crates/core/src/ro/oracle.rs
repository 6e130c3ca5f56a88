use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{CryptoError, DIGEST_BYTES};

/// Identifies a protocol session; oracle entries are scoped per session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SessionId(pub u64);

/// A μ-bit oracle output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Digest(#[serde(with = "hex::serde")] pub [u8; DIGEST_BYTES]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; DIGEST_BYTES] {
        &self.0
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", hex::encode(self.0))
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// A query made from outside the session it addresses, as recorded for the
/// adversary's `observe` interface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedQuery {
    #[serde(with = "hex::serde")]
    pub query: Vec<u8>,
    pub digest: Digest,
}

/// Query and isProgrammed interface shared by the real table and the
/// simulator's view of it.
pub trait RandomOracle {
    fn query(&mut self, query: &[u8], session: SessionId, caller: SessionId) -> Digest;
    fn is_programmed(&self, query: &[u8], session: SessionId) -> bool;
}

/// The global random oracle: list `L` of sampled or programmed points, the
/// programmed set `P` and the adversarial log `L_A`.
#[derive(Debug, Clone)]
pub struct OracleTable {
    seed: u64,
    rng: ChaCha20Rng,
    entries: HashMap<(SessionId, Vec<u8>), Digest>,
    programmed: HashSet<(Vec<u8>, SessionId)>,
    adversarial_log: Vec<ObservedQuery>,
}

impl OracleTable {
    pub fn new(seed: u64) -> Self {
        OracleTable {
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
            entries: HashMap::new(),
            programmed: HashSet::new(),
            adversarial_log: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fixes the output at a fresh point. Aborts if the point is already in `L`.
    pub fn program(
        &mut self,
        query: &[u8],
        digest: Digest,
        session: SessionId,
    ) -> Result<(), CryptoError> {
        let key = (session, query.to_vec());
        if self.entries.contains_key(&key) {
            return Err(CryptoError::ProgramAborted);
        }
        self.entries.insert(key, digest);
        self.programmed.insert((query.to_vec(), session));
        Ok(())
    }

    /// The adversarial log, in insertion order.
    pub fn observe(&self) -> &[ObservedQuery] {
        &self.adversarial_log
    }
}

impl RandomOracle for OracleTable {
    fn query(&mut self, query: &[u8], session: SessionId, caller: SessionId) -> Digest {
        let rng = &mut self.rng;
        let digest = *self
            .entries
            .entry((session, query.to_vec()))
            .or_insert_with(|| {
                let mut out = [0u8; DIGEST_BYTES];
                rng.fill_bytes(&mut out);
                Digest(out)
            });
        if caller != session {
            self.adversarial_log.push(ObservedQuery {
                query: query.to_vec(),
                digest,
            });
        }
        digest
    }

    fn is_programmed(&self, query: &[u8], session: SessionId) -> bool {
        // avoids allocating a key for the lookup in the common empty case
        !self.programmed.is_empty() && self.programmed.contains(&(query.to_vec(), session))
    }
}

/// A simulator holding the oracle for one session. It can program points and
/// answers isProgrammed queries for its own session with 0, which is what lets
/// a garbage commitment or ciphertext be explained after the fact.
#[derive(Debug)]
pub struct Simulator<'a> {
    table: &'a mut OracleTable,
    session: SessionId,
}

impl<'a> Simulator<'a> {
    pub fn new(table: &'a mut OracleTable, session: SessionId) -> Self {
        Simulator { table, session }
    }

    pub fn program(&mut self, query: &[u8], digest: Digest) -> Result<(), CryptoError> {
        self.table.program(query, digest, self.session)
    }
}

impl RandomOracle for Simulator<'_> {
    fn query(&mut self, query: &[u8], session: SessionId, caller: SessionId) -> Digest {
        self.table.query(query, session, caller)
    }

    fn is_programmed(&self, query: &[u8], session: SessionId) -> bool {
        session != self.session && self.table.is_programmed(query, session)
    }
}

/// Byte-level query framing: a domain tag followed by length-prefixed parts.
pub mod query {
    use crate::ro::{Opening, SecretKey};

    const TAG_KEYSTREAM: u8 = 0x01;
    const TAG_COMMITMENT: u8 = 0x02;

    fn frame(tag: u8, parts: &[&[u8]]) -> Vec<u8> {
        let len = 1 + parts.iter().map(|p| 4 + p.len()).sum::<usize>();
        let mut out = Vec::with_capacity(len);
        out.push(tag);
        for part in parts {
            out.extend_from_slice(&(part.len() as u32).to_be_bytes());
            out.extend_from_slice(part);
        }
        out
    }

    /// `k‖i` with `i` as 4-byte big-endian, 1-based.
    pub fn keystream(key: &SecretKey, index: u32) -> Vec<u8> {
        frame(TAG_KEYSTREAM, &[key.as_bytes(), &index.to_be_bytes()])
    }

    /// `m‖Op`.
    pub fn commitment(message: &[u8], opening: &Opening) -> Vec<u8> {
        frame(TAG_COMMITMENT, &[message, opening.as_bytes()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: SessionId = SessionId(1);
    const OTHER: SessionId = SessionId(2);

    #[test]
    fn requery_is_deterministic() {
        let mut table = OracleTable::new(7);
        let a = table.query(b"q", S, S);
        let b = table.query(b"q", S, S);
        assert_eq!(a, b);
        assert_eq!(table.len(), 1);
    }

    #[test]
    fn sessions_are_separate_lists() {
        let mut table = OracleTable::new(7);
        let a = table.query(b"q", S, S);
        let b = table.query(b"q", OTHER, OTHER);
        assert_ne!(a, b);
    }

    #[test]
    fn cross_session_query_is_observed() {
        let mut table = OracleTable::new(7);
        assert!(table.observe().is_empty());
        let d = table.query(b"q", S, OTHER);
        assert_eq!(
            table.observe(),
            &[ObservedQuery {
                query: b"q".to_vec(),
                digest: d
            }]
        );
        // cross-session queries also enter L
        assert_eq!(table.query(b"q", S, S), d);
        assert_eq!(table.observe().len(), 1);
    }

    #[test]
    fn observe_keeps_insertion_order() {
        let mut table = OracleTable::new(3);
        for q in [&b"c"[..], b"a", b"b"] {
            table.query(q, S, OTHER);
        }
        let seen: Vec<_> = table.observe().iter().map(|o| o.query.clone()).collect();
        assert_eq!(seen, vec![b"c".to_vec(), b"a".to_vec(), b"b".to_vec()]);
    }

    #[test]
    fn equal_seeds_replay() {
        let mut a = OracleTable::new(99);
        let mut b = OracleTable::new(99);
        for i in 0u32..50 {
            let q = i.to_be_bytes();
            assert_eq!(a.query(&q, S, S), b.query(&q, S, S));
        }
    }

    #[test]
    fn program_fresh_point_then_query() {
        let mut table = OracleTable::new(1);
        let d = Digest([0xab; DIGEST_BYTES]);
        table.program(b"fresh", d, S).unwrap();
        assert_eq!(table.query(b"fresh", S, S), d);
        assert!(table.is_programmed(b"fresh", S));
        assert!(!table.is_programmed(b"fresh", OTHER));
    }

    #[test]
    fn program_after_query_aborts() {
        let mut table = OracleTable::new(1);
        table.query(b"used", S, S);
        assert_eq!(
            table.program(b"used", Digest([0; DIGEST_BYTES]), S),
            Err(CryptoError::ProgramAborted)
        );
        assert!(!table.is_programmed(b"used", S));
    }

    #[test]
    fn is_programmed_defaults_to_zero() {
        let mut table = OracleTable::new(1);
        assert!(!table.is_programmed(b"x", S));
        table.query(b"x", S, S);
        assert!(!table.is_programmed(b"x", S));
    }

    #[test]
    fn digest_serializes_as_lowercase_hex() {
        let d = Digest([0xAB; DIGEST_BYTES]);
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, format!("\"{}\"", "ab".repeat(DIGEST_BYTES)));
        let back: Digest = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
    }
}
