use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{InfoPackage, QuestionOrder, QuestionSet, Strategy, TraderError};
use crate::contract::{classify_good, IncorrectGoodReason};
use crate::mpc::EvaluatorKind;
use crate::payment::{EncodedPayment, PaymentParams, ReportVector};
use crate::ro::{commit, encrypt, keygen, Ciphertext, Commitment, Opening, RandomOracle, SecretKey, SessionId, DIGEST_BYTES};

/// The buyer's question assignment and her commitments to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub orders: Vec<QuestionOrder>,
    pub assigned: Vec<QuestionSet>,
    pub commitments: Vec<Commitment>,
    pub openings: Vec<Opening>,
}

/// Draws one uniform order per seller (a single shared order when
/// `share_orders`) and commits to each permuted question set.
pub fn buyer_assign<O: RandomOracle + ?Sized, R: RngCore + ?Sized>(
    questions: &QuestionSet,
    sellers: usize,
    share_orders: bool,
    oracle: &mut O,
    session: SessionId,
    rng: &mut R,
) -> Result<Assignment, TraderError> {
    let n = questions.len();
    let orders: Vec<QuestionOrder> = if share_orders {
        vec![QuestionOrder::random(n, rng); sellers]
    } else {
        (0..sellers).map(|_| QuestionOrder::random(n, rng)).collect()
    };
    let assigned = orders
        .iter()
        .map(|o| questions.permuted(o))
        .collect::<Result<Vec<_>, _>>()?;
    let mut commitments = Vec::with_capacity(sellers);
    let mut openings = Vec::with_capacity(sellers);
    for q in &assigned {
        let (c, op) = commit(oracle, &q.to_bytes(), session, rng)?;
        commitments.push(c);
        openings.push(op);
    }
    Ok(Assignment { orders, assigned, commitments, openings })
}

/// Everything a seller produces at the answer-submission step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SellerGoods {
    pub package: InfoPackage,
    #[serde(with = "hex::serde")]
    pub bytes: Vec<u8>,
    pub key: SecretKey,
    pub ciphertext: Ciphertext,
    pub ciphertext_commitment: Commitment,
    pub ciphertext_opening: Opening,
    pub key_commitment: Commitment,
    pub key_opening: Opening,
}

impl SellerGoods {
    /// The `(key, opening)` pair this seller posts, if any.
    pub fn key_submission(&self, strategy: &Strategy) -> Option<(SecretKey, Opening)> {
        match strategy {
            Strategy::WithholdKey => None,
            Strategy::BadKeyOpening => {
                let mut op = self.key_opening;
                op.0[0] ^= 1;
                Some((self.key, op))
            }
            _ => Some((self.key, self.key_opening)),
        }
    }
}

/// Packages the assigned question ids with the report, encrypts under a
/// fresh key and commits to both ciphertext and key.
pub fn seller_package<O: RandomOracle + ?Sized, R: RngCore + ?Sized>(
    assigned: &QuestionSet,
    reports: &ReportVector,
    strategy: &Strategy,
    oracle: &mut O,
    session: SessionId,
    rng: &mut R,
) -> Result<SellerGoods, TraderError> {
    let mut ids = assigned.ids();
    if *strategy == Strategy::WrongQuestions {
        ids.rotate_left(1);
    }
    let package = InfoPackage::new(ids, reports.clone())?;
    let bytes = package.to_bytes();
    let key = keygen(&*oracle, bytes.len() / DIGEST_BYTES, session, rng)?;
    let ciphertext = encrypt(oracle, &key, &bytes, session)?;
    let (ciphertext_commitment, ciphertext_opening) = commit(oracle, &ciphertext.to_bytes(), session, rng)?;
    let (key_commitment, key_opening) = commit(oracle, key.as_bytes(), session, rng)?;
    Ok(SellerGoods {
        package,
        bytes,
        key,
        ciphertext,
        ciphertext_commitment,
        ciphertext_opening,
        key_commitment,
        key_opening,
    })
}

/// The buyer's own check of revealed goods; the same predicate the contract
/// applies during a rebuttal.
pub fn buyer_check_goods(
    decrypted: &[Option<Vec<u8>>],
    committed_ids: &[Vec<u32>],
    reported: &[EncodedPayment],
    params: &PaymentParams,
    evaluator: EvaluatorKind,
) -> IncorrectGoodReason {
    classify_good(decrypted, committed_ids, reported, params, evaluator)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use super::*;
    use crate::ro::{decrypt, open_commitment, OracleTable};

    const S: SessionId = SessionId(1);

    #[test]
    fn assignment_commitments_open_for_sellers() {
        let mut oracle = OracleTable::new(1);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let q = QuestionSet::numbered(8).unwrap();
        let a = buyer_assign(&q, 2, false, &mut oracle, S, &mut rng).unwrap();
        for i in 0..2 {
            assert!(open_commitment(&mut oracle, &a.commitments[i], &a.openings[i], &a.assigned[i].to_bytes(), S));
        }
        let shared = buyer_assign(&q, 2, true, &mut oracle, S, &mut rng).unwrap();
        assert_eq!(shared.orders[0], shared.orders[1]);
    }

    #[test]
    fn assignment_is_reproducible() {
        let q = QuestionSet::numbered(2).unwrap();
        let run = || {
            let mut oracle = OracleTable::new(3);
            buyer_assign(&q, 2, false, &mut oracle, S, &mut ChaCha20Rng::seed_from_u64(4)).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn package_decrypts_and_commitments_open() {
        let mut oracle = OracleTable::new(5);
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let q = QuestionSet::numbered(4).unwrap();
        let r = ReportVector::signals(2, vec![0, 1, 1, 0]).unwrap();
        let g = seller_package(&q, &r, &Strategy::Truthful, &mut oracle, S, &mut rng).unwrap();
        let plain = decrypt(&mut oracle, &g.key, &g.ciphertext, S).unwrap();
        assert_eq!(InfoPackage::from_bytes(&plain).unwrap(), g.package);
        assert!(open_commitment(&mut oracle, &g.ciphertext_commitment, &g.ciphertext_opening, &g.ciphertext.to_bytes(), S));
        assert!(open_commitment(&mut oracle, &g.key_commitment, &g.key_opening, g.key.as_bytes(), S));
        let (_, bad) = g.key_submission(&Strategy::BadKeyOpening).unwrap();
        assert!(!open_commitment(&mut oracle, &g.key_commitment, &bad, g.key.as_bytes(), S));
        assert!(g.key_submission(&Strategy::WithholdKey).is_none());
    }

    #[test]
    fn wrong_questions_changes_id_sequence() {
        let mut oracle = OracleTable::new(7);
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let q = QuestionSet::numbered(2).unwrap();
        let r = ReportVector::signals(2, vec![0, 1]).unwrap();
        let g = seller_package(&q, &r, &Strategy::WrongQuestions, &mut oracle, S, &mut rng).unwrap();
        assert_ne!(g.package.question_ids, q.ids());
    }
}
