//! Buyer and seller agents: assignment, packaging, strategies and the
//! rebuttal decision.

mod agents;
mod model;
mod package;
mod questions;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contract::{buyer_utilities, check_deposit_bounds, CostModel, IncorrectGoodReason};
use crate::payment::{PaymentError, ReportVector};
use crate::ro::CryptoError;

pub use agents::{buyer_assign, buyer_check_goods, seller_package, Assignment, SellerGoods};
pub use model::{SignalModel, World};
pub use package::InfoPackage;
pub use questions::{Question, QuestionOrder, QuestionSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraderError {
    #[error("need at least two questions, got {0}")]
    TooFewQuestions(usize),
    #[error("question id {0} appears twice")]
    DuplicateQuestion(u32),
    #[error("order has length {0} for {1} questions")]
    OrderLength(usize, usize),
    #[error("not a permutation")]
    NotAPermutation,
    #[error("package lists {0} ids for {1} answers")]
    PackageLength(usize, usize),
    #[error("malformed bytes: {0}")]
    Malformed(&'static str),
    #[error("invalid signal model")]
    InvalidModel,
    #[error("strategy does not apply to this report: {0}")]
    StrategyMismatch(&'static str),
    #[error(transparent)]
    Payment(#[from] PaymentError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// A seller's behaviour across the protocol.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    Truthful,
    /// Relabels every answer by `sigma`.
    Permutation { sigma: Vec<u8> },
    UniformRandom,
    ConstantReport { symbol: u8 },
    /// Answers by assigned position: 1-based even positions get `even`.
    OrderCollusion { even: u8, odd: u8 },
    /// Truthful answers, but the sellers jointly post a payment vector whose
    /// entry for this seller is shifted by `delta` currency units.
    MisreportVal { delta: i64 },
    WithholdKey,
    /// Packages a different question id sequence than assigned.
    WrongQuestions,
    /// Reveals the key with an opening that does not match its commitment.
    BadKeyOpening,
}

impl Strategy {
    /// The collusion rule "even positions answer 1, odd positions answer 0".
    pub fn order_collusion() -> Self {
        Strategy::OrderCollusion { even: 1, odd: 0 }
    }

    pub fn val_shift(&self) -> i64 {
        match self {
            Strategy::MisreportVal { delta } => *delta,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuyerStrategy {
    #[default]
    Rational,
    AlwaysRebut,
    NeverRebut,
}

fn one_hot(symbol: u8, alphabet: usize) -> Vec<f64> {
    (0..alphabet).map(|y| if y == symbol as usize { 1.0 } else { 0.0 }).collect()
}

/// Builds a report from `f(position, symbol?)`, matching the honest report's kind.
fn signal_independent(
    honest: &ReportVector,
    mut pick: impl FnMut(usize) -> u8,
) -> Result<ReportVector, TraderError> {
    let k = honest.alphabet();
    let symbols: Vec<u8> = (0..honest.tasks()).map(&mut pick).collect();
    if let Some(&s) = symbols.iter().find(|&&s| s as usize >= k) {
        return Err(PaymentError::SymbolOutOfRange { symbol: s, alphabet: k }.into());
    }
    Ok(match honest {
        ReportVector::Signal(_) => ReportVector::signals(k, symbols)?,
        ReportVector::Forecast(_) => ReportVector::forecasts(symbols.iter().map(|&s| one_hot(s, k)).collect())?,
    })
}

/// The report a seller packages, given her honest report in assigned order.
pub fn seller_report<R: RngCore + ?Sized>(
    honest: &ReportVector,
    strategy: &Strategy,
    rng: &mut R,
) -> Result<ReportVector, TraderError> {
    let k = honest.alphabet();
    match strategy {
        Strategy::Permutation { sigma } => {
            let mut seen = vec![false; k];
            let bijective = sigma.len() == k
                && sigma.iter().all(|&s| (s as usize) < k && !std::mem::replace(&mut seen[s as usize], true));
            if !bijective {
                return Err(TraderError::StrategyMismatch("sigma is not a bijection on the alphabet"));
            }
            Ok(match honest {
                ReportVector::Signal(s) => {
                    ReportVector::signals(k, s.signals().iter().map(|&x| sigma[x as usize]).collect())?
                }
                ReportVector::Forecast(f) => ReportVector::forecasts(
                    f.forecasts()
                        .iter()
                        .map(|q| {
                            let mut out = vec![0.0; k];
                            for (y, &p) in q.iter().enumerate() {
                                out[sigma[y] as usize] = p;
                            }
                            out
                        })
                        .collect(),
                )?,
            })
        }
        Strategy::UniformRandom => signal_independent(honest, |_| rng.gen_range(0..k as u8)),
        Strategy::ConstantReport { symbol } => signal_independent(honest, |_| *symbol),
        Strategy::OrderCollusion { even, odd } => {
            signal_independent(honest, |pos| if (pos + 1) % 2 == 0 { *even } else { *odd })
        }
        Strategy::Truthful
        | Strategy::MisreportVal { .. }
        | Strategy::WithholdKey
        | Strategy::WrongQuestions
        | Strategy::BadKeyOpening => Ok(honest.clone()),
    }
}

/// Whether a rational buyer rebuts. With the deposit bounds satisfied this is
/// "rebut iff the good is incorrect"; otherwise the better of the two utility
/// rows at `costs.val_estimate`.
pub fn buyer_rebuttal_decision(reason: IncorrectGoodReason, costs: &CostModel) -> bool {
    if check_deposit_bounds(costs).ok {
        return reason != IncorrectGoodReason::None;
    }
    let u = buyer_utilities(costs, costs.val_estimate);
    match reason {
        IncorrectGoodReason::None => u.rebut_correct > u.accept,
        _ => u.rebut_incorrect > u.accept,
    }
}
