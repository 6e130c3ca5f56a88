//! Multi-task peer-prediction payments: the correlation score for discrete
//! signals, the Pearson score for forecasts, and the affine payment rule.

mod mig;
mod report;
mod value;

pub use mig::{corr_numerator, mig_corr, mig_pearson, pay_func, pay_vector_multi};
pub use report::{
    quantize_forecast, ForecastReport, PriorDistribution, ReportKind, ReportVector, SignalReport,
};
pub use value::{round_half_even, EncodedPayment, Payment};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported alphabet (one-hot secure evaluation cost grows with it).
pub const MAX_ALPHABET: usize = 16;
/// Fixed-point scale used for forecasts on the wire, in the secure evaluator
/// and for encoded real-valued payments.
pub const FIXED_SCALE_BITS: u32 = 20;
pub const FIXED_ONE: i64 = 1 << FIXED_SCALE_BITS;
pub(crate) const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PaymentError {
    #[error("at least two tasks are required, got {0}")]
    TooFewTasks(usize),
    #[error("report kinds differ")]
    KindMismatch,
    #[error("task counts differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("alphabet sizes differ: {0} vs {1}")]
    AlphabetMismatch(usize, usize),
    #[error("alphabet size {0} outside 2..={MAX_ALPHABET}")]
    AlphabetSize(usize),
    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: u8, alphabet: usize },
    #[error("forecast for task {0} is not a probability vector")]
    InvalidForecast(usize),
    #[error("prior must be strictly positive and sum to 1")]
    InvalidPrior,
    #[error("alpha must be positive and beta non-negative")]
    InvalidCoefficients,
    #[error("payment kind does not match report kind")]
    ParamsMismatch,
    #[error("at least two sellers are required, got {0}")]
    TooFewSellers(usize),
}

/// Which mutual-information-gain score the payment uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MigKind {
    Corr,
    Pearson { prior: PriorDistribution },
}

/// `PayFunc = alpha * MIG + beta`, agreed by every trader at signing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPaymentParams")]
pub struct PaymentParams {
    #[serde(with = "ratio_str")]
    pub alpha: Rational64,
    #[serde(with = "ratio_str")]
    pub beta: Rational64,
    pub mig: MigKind,
}

#[derive(Deserialize)]
struct RawPaymentParams {
    #[serde(with = "ratio_str")]
    alpha: Rational64,
    #[serde(with = "ratio_str")]
    beta: Rational64,
    mig: MigKind,
}

impl TryFrom<RawPaymentParams> for PaymentParams {
    type Error = PaymentError;

    fn try_from(raw: RawPaymentParams) -> Result<Self, Self::Error> {
        PaymentParams::new(raw.alpha, raw.beta, raw.mig)
    }
}

impl PaymentParams {
    pub fn new(alpha: Rational64, beta: Rational64, mig: MigKind) -> Result<Self, PaymentError> {
        if alpha <= Rational64::from_integer(0) || beta < Rational64::from_integer(0) {
            return Err(PaymentError::InvalidCoefficients);
        }
        Ok(PaymentParams { alpha, beta, mig })
    }

    pub fn corr(alpha: i64, beta: i64) -> Result<Self, PaymentError> {
        Self::new(alpha.into(), beta.into(), MigKind::Corr)
    }

    pub fn pearson(alpha: i64, beta: i64, prior: PriorDistribution) -> Result<Self, PaymentError> {
        Self::new(alpha.into(), beta.into(), MigKind::Pearson { prior })
    }

    pub fn report_kind(&self) -> ReportKind {
        match self.mig {
            MigKind::Corr => ReportKind::Signal,
            MigKind::Pearson { .. } => ReportKind::Forecast,
        }
    }

    pub fn alpha_f64(&self) -> f64 {
        ratio_to_f64(self.alpha)
    }

    pub fn beta_f64(&self) -> f64 {
        ratio_to_f64(self.beta)
    }
}

pub(crate) fn ratio_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Rationals as `"n"` or `"n/d"` strings in configs and transcripts.
pub(crate) mod ratio_str {
    use num_rational::Rational64;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(i) => Ok(Rational64::from_integer(i)),
            Repr::Str(s) => s.trim().parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_reject_non_positive_alpha() {
        assert_eq!(PaymentParams::corr(0, 1), Err(PaymentError::InvalidCoefficients));
        assert_eq!(PaymentParams::corr(1, -1), Err(PaymentError::InvalidCoefficients));
        assert!(PaymentParams::corr(1, 0).is_ok());
    }

    #[test]
    fn params_json_accepts_strings_and_integers() {
        let p: PaymentParams =
            serde_json::from_str(r#"{"alpha":"3/2","beta":10,"mig":{"kind":"corr"}}"#).unwrap();
        assert_eq!(p.alpha, Rational64::new(3, 2));
        assert_eq!(p.beta, Rational64::from_integer(10));
        let back = serde_json::to_string(&p).unwrap();
        assert_eq!(back, r#"{"alpha":"3/2","beta":"10","mig":{"kind":"corr"}}"#);
        assert!(serde_json::from_str::<PaymentParams>(
            r#"{"alpha":"-1","beta":1,"mig":{"kind":"corr"}}"#
        )
        .is_err());
    }
}
