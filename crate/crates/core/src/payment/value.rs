use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::{ratio_to_f64, FIXED_ONE};

/// A payment as computed: exact for the correlation score, binary64 for Pearson.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payment {
    Exact(Rational64),
    Real(f64),
}

impl Payment {
    pub fn to_f64(self) -> f64 {
        match self {
            Payment::Exact(r) => ratio_to_f64(r),
            Payment::Real(x) => x,
        }
    }

    /// The form submitted to and compared by the contract.
    pub fn encode(self) -> EncodedPayment {
        match self {
            Payment::Exact(r) => EncodedPayment::Exact(r),
            Payment::Real(x) => EncodedPayment::Fixed((x * FIXED_ONE as f64).round_ties_even() as i64),
        }
    }
}

/// Payment value as posted on the contract. Equality is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum EncodedPayment {
    Exact(#[serde(with = "super::ratio_str")] Rational64),
    /// Value scaled by 2^20.
    Fixed(i64),
}

impl EncodedPayment {
    pub fn to_f64(self) -> f64 {
        match self {
            EncodedPayment::Exact(r) => ratio_to_f64(r),
            EncodedPayment::Fixed(v) => v as f64 / FIXED_ONE as f64,
        }
    }

    /// Whole currency units, rounding half to even.
    pub fn currency_units(self) -> i64 {
        match self {
            EncodedPayment::Exact(r) => round_half_even(*r.numer(), *r.denom()),
            EncodedPayment::Fixed(v) => round_half_even(v, FIXED_ONE),
        }
    }

    /// Adds a whole number of currency units.
    pub fn shifted(self, units: i64) -> Self {
        match self {
            EncodedPayment::Exact(r) => EncodedPayment::Exact(r + units),
            EncodedPayment::Fixed(v) => EncodedPayment::Fixed(v + units * FIXED_ONE),
        }
    }
}

/// `numer / denom` rounded to the nearest integer, ties to even. `denom > 0`.
pub fn round_half_even(numer: i64, denom: i64) -> i64 {
    assert!(denom > 0, "denominator must be positive");
    let floor = numer.div_euclid(denom);
    let twice_rem = 2 * numer.rem_euclid(denom);
    match twice_rem.cmp(&denom) {
        std::cmp::Ordering::Less => floor,
        std::cmp::Ordering::Greater => floor + 1,
        std::cmp::Ordering::Equal => floor + (floor & 1),
    }
}
