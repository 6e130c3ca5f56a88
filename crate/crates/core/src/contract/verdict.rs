use serde::{Deserialize, Serialize};

use crate::mpc::{recompute, EvaluatorKind};
use crate::payment::{EncodedPayment, PaymentParams, ReportVector};
use crate::traders::InfoPackage;

/// Why revealed goods are incorrect, or `None` if they are correct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncorrectGoodReason {
    KeyFailsToOpen,
    QuestionsMismatch,
    PaymentMismatch,
    None,
}

/// Checks decrypted goods against the committed question orders and the
/// reported payment vector. `decrypted[i]` is `None` when decryption of
/// seller `i`'s ciphertext failed.
///
/// The first failing category wins: undecodable plaintext, then a question
/// id sequence differing from the committed one, then a payment vector that
/// does not match recomputation from the revealed reports.
pub fn classify_good(
    decrypted: &[Option<Vec<u8>>],
    committed_ids: &[Vec<u32>],
    reported: &[EncodedPayment],
    params: &PaymentParams,
    evaluator: EvaluatorKind,
) -> IncorrectGoodReason {
    let packages: Option<Vec<InfoPackage>> = decrypted
        .iter()
        .map(|d| d.as_deref().and_then(|b| InfoPackage::from_bytes(b).ok()))
        .collect();
    let Some(packages) = packages else {
        return IncorrectGoodReason::KeyFailsToOpen;
    };
    let questions_match = packages.len() == committed_ids.len()
        && packages.iter().zip(committed_ids).all(|(p, ids)| &p.question_ids == ids);
    if !questions_match {
        return IncorrectGoodReason::QuestionsMismatch;
    }
    if payment_matches(&packages, reported, params, evaluator) {
        IncorrectGoodReason::None
    } else {
        IncorrectGoodReason::PaymentMismatch
    }
}

fn payment_matches(
    packages: &[InfoPackage],
    reported: &[EncodedPayment],
    params: &PaymentParams,
    evaluator: EvaluatorKind,
) -> bool {
    let Some(first) = packages.first() else {
        return false;
    };
    let ids = first.sorted_ids();
    if packages.iter().any(|p| p.sorted_ids() != ids) {
        return false;
    }
    let reports: Vec<ReportVector> = packages.iter().map(InfoPackage::aligned_reports).collect();
    match recompute(evaluator, &reports, params) {
        Ok(pay) => {
            pay.len() == reported.len() && pay.into_iter().map(|p| p.encode()).eq(reported.iter().copied())
        }
        Err(_) => false,
    }
}
