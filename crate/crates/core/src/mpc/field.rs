use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{MpcError, FIXED_BITS};

/// The Mersenne prime 2^61 - 1.
pub const MODULUS: u64 = (1 << 61) - 1;

/// Element of the prime field with [`MODULUS`] elements.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Fp(u64);

impl Fp {
    pub const ZERO: Fp = Fp(0);
    pub const ONE: Fp = Fp(1);

    /// Reduces an arbitrary `u64`.
    pub fn new(v: u64) -> Self {
        Fp(reduce64(v))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// Two's-complement style embedding of a signed integer.
    pub fn from_i64(v: i64) -> Self {
        let m = MODULUS as i128;
        Fp((v as i128).rem_euclid(m) as u64)
    }

    pub fn from_i128(v: i128) -> Self {
        Fp(v.rem_euclid(MODULUS as i128) as u64)
    }

    /// Inverse of [`Fp::from_i64`] for values in `(-p/2, p/2]`.
    pub fn to_signed(self) -> i64 {
        if self.0 > MODULUS / 2 {
            self.0 as i64 - MODULUS as i64
        } else {
            self.0 as i64
        }
    }

    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        Fp(rng.gen_range(0..MODULUS))
    }
}

fn reduce64(v: u64) -> u64 {
    let r = (v & MODULUS) + (v >> 61);
    if r >= MODULUS {
        r - MODULUS
    } else {
        r
    }
}

fn reduce128(v: u128) -> u64 {
    let lo = (v as u64) & MODULUS;
    let hi = (v >> 61) as u64;
    // hi < 2^61 for products of reduced elements
    reduce64(lo + hi)
}

impl TryFrom<u64> for Fp {
    type Error = MpcError;
    fn try_from(v: u64) -> Result<Self, Self::Error> {
        if v < MODULUS {
            Ok(Fp(v))
        } else {
            Err(MpcError::NotReduced(v))
        }
    }
}

impl From<Fp> for u64 {
    fn from(f: Fp) -> u64 {
        f.0
    }
}

impl fmt::Debug for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fp({})", self.0)
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Add for Fp {
    type Output = Fp;
    fn add(self, rhs: Fp) -> Fp {
        let s = self.0 + rhs.0;
        Fp(if s >= MODULUS { s - MODULUS } else { s })
    }
}

impl Sub for Fp {
    type Output = Fp;
    fn sub(self, rhs: Fp) -> Fp {
        if self.0 >= rhs.0 {
            Fp(self.0 - rhs.0)
        } else {
            Fp(self.0 + MODULUS - rhs.0)
        }
    }
}

impl Neg for Fp {
    type Output = Fp;
    fn neg(self) -> Fp {
        Fp::ZERO - self
    }
}

impl Mul for Fp {
    type Output = Fp;
    fn mul(self, rhs: Fp) -> Fp {
        Fp(reduce128(self.0 as u128 * rhs.0 as u128))
    }
}

impl AddAssign for Fp {
    fn add_assign(&mut self, rhs: Fp) {
        *self = *self + rhs;
    }
}

impl SubAssign for Fp {
    fn sub_assign(&mut self, rhs: Fp) {
        *self = *self - rhs;
    }
}

impl Sum for Fp {
    fn sum<I: Iterator<Item = Fp>>(iter: I) -> Fp {
        iter.fold(Fp::ZERO, Add::add)
    }
}

/// A real number stored as `round(x * 2^20)` in the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointEncoding {
    pub scale_bits: u32,
    pub encoded: Fp,
}

/// Magnitude bound for encodable reals.
pub const FIXED_RANGE: f64 = (1u64 << 30) as f64;

impl FixedPointEncoding {
    pub fn encode(x: f64) -> Result<Self, MpcError> {
        if !x.is_finite() || x.abs() >= FIXED_RANGE {
            return Err(MpcError::FixedPointRange(x));
        }
        let scaled = (x * (1u64 << FIXED_BITS) as f64).round_ties_even() as i64;
        Ok(FixedPointEncoding { scale_bits: FIXED_BITS, encoded: Fp::from_i64(scaled) })
    }

    pub fn decode(self) -> f64 {
        self.encoded.to_signed() as f64 / (1u64 << self.scale_bits) as f64
    }
}
