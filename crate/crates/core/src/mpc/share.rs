use std::collections::VecDeque;
use std::ops::{Add, Sub};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::field::Fp;
use super::{MpcError, FIXED_BITS};

/// One party's additive share of a field element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldShare {
    pub value: Fp,
    pub party_index: usize,
}

/// A complete additive sharing, entry `i` held by party `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shared(Vec<FieldShare>);

impl Shared {
    /// Trivial sharing of a public constant, held entirely by party 0.
    pub fn public(x: Fp, parties: usize) -> Self {
        Shared(
            (0..parties)
                .map(|i| FieldShare { value: if i == 0 { x } else { Fp::ZERO }, party_index: i })
                .collect(),
        )
    }

    pub fn parties(&self) -> usize {
        self.0.len()
    }

    pub fn shares(&self) -> &[FieldShare] {
        &self.0
    }

    fn zip_with(&self, rhs: &Shared, f: impl Fn(Fp, Fp) -> Fp) -> Shared {
        debug_assert_eq!(self.parties(), rhs.parties());
        Shared(
            self.0
                .iter()
                .zip(&rhs.0)
                .map(|(a, b)| FieldShare { value: f(a.value, b.value), party_index: a.party_index })
                .collect(),
        )
    }

    pub fn add_public(&self, c: Fp) -> Shared {
        let mut out = self.clone();
        out.0[0].value += c;
        out
    }

    pub fn scale(&self, c: Fp) -> Shared {
        Shared(
            self.0
                .iter()
                .map(|s| FieldShare { value: s.value * c, party_index: s.party_index })
                .collect(),
        )
    }

    pub fn zero(parties: usize) -> Shared {
        Shared::public(Fp::ZERO, parties)
    }

    fn check_parties(&self, parties: usize) -> Result<(), MpcError> {
        if self.parties() == parties {
            Ok(())
        } else {
            Err(MpcError::PartyCountMismatch(self.parties(), parties))
        }
    }
}

impl Add for &Shared {
    type Output = Shared;
    fn add(self, rhs: &Shared) -> Shared {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Shared {
    type Output = Shared;
    fn sub(self, rhs: &Shared) -> Shared {
        self.zip_with(rhs, |a, b| a - b)
    }
}

/// Splits `x` into `parties` additive shares; the first `parties - 1` are uniform.
pub fn share<R: RngCore + ?Sized>(x: Fp, parties: usize, rng: &mut R) -> Result<Shared, MpcError> {
    if parties < 2 {
        return Err(MpcError::TooFewParties(parties));
    }
    let mut shares: Vec<FieldShare> = (0..parties - 1)
        .map(|i| FieldShare { value: Fp::random(rng), party_index: i })
        .collect();
    let rest: Fp = shares.iter().map(|s| s.value).sum();
    shares.push(FieldShare { value: x - rest, party_index: parties - 1 });
    Ok(Shared(shares))
}

/// Sums a complete share set. Party indices must be exactly `0..len`.
pub fn reconstruct(shares: &[FieldShare]) -> Result<Fp, MpcError> {
    let mut seen = vec![false; shares.len()];
    for s in shares {
        match seen.get_mut(s.party_index) {
            Some(slot) if !*slot => *slot = true,
            Some(_) => return Err(MpcError::DuplicateParty(s.party_index)),
            None => {}
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(MpcError::MissingParty(missing));
    }
    Ok(shares.iter().map(|s| s.value).sum())
}

/// What a publicly opened value was used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpeningKind {
    BeaverD,
    BeaverE,
    TruncMask,
    OneHotCheck,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenedValue {
    pub kind: OpeningKind,
    pub value: Fp,
}

/// Every value opened to all parties, in order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    openings: Vec<OpenedValue>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn open(&mut self, x: &Shared, kind: OpeningKind) -> Result<Fp, MpcError> {
        let value = reconstruct(x.shares())?;
        self.openings.push(OpenedValue { kind, value });
        Ok(value)
    }

    pub fn openings(&self) -> &[OpenedValue] {
        &self.openings
    }

    pub fn len(&self) -> usize {
        self.openings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.openings.is_empty()
    }

    pub fn of_kind(&self, kind: OpeningKind) -> impl Iterator<Item = Fp> + '_ {
        self.openings.iter().filter(move |o| o.kind == kind).map(|o| o.value)
    }
}

/// Shared `(a, b, a*b)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeaverTriple {
    pub a: Shared,
    pub b: Shared,
    pub c: Shared,
    consumed: bool,
}

impl BeaverTriple {
    pub fn is_consumed(&self) -> bool {
        self.consumed
    }
}

fn deal_one<R: RngCore + ?Sized>(parties: usize, rng: &mut R) -> Result<BeaverTriple, MpcError> {
    let a = Fp::random(rng);
    let b = Fp::random(rng);
    Ok(BeaverTriple {
        a: share(a, parties, rng)?,
        b: share(b, parties, rng)?,
        c: share(a * b, parties, rng)?,
        consumed: false,
    })
}

pub fn deal_triples<R: RngCore + ?Sized>(
    count: usize,
    parties: usize,
    rng: &mut R,
) -> Result<Vec<BeaverTriple>, MpcError> {
    (0..count).map(|_| deal_one(parties, rng)).collect()
}

/// `x * y` from one fresh triple. Opens `x - a` and `y - b`.
pub fn secure_multiply(
    x: &Shared,
    y: &Shared,
    triple: &mut BeaverTriple,
    transcript: &mut Transcript,
) -> Result<Shared, MpcError> {
    if triple.consumed {
        return Err(MpcError::TripleReused);
    }
    let parties = triple.a.parties();
    x.check_parties(parties)?;
    y.check_parties(parties)?;
    triple.consumed = true;
    let d = transcript.open(&(x - &triple.a), OpeningKind::BeaverD)?;
    let e = transcript.open(&(y - &triple.b), OpeningKind::BeaverE)?;
    let z = &(&triple.c + &triple.b.scale(d)) + &triple.a.scale(e);
    Ok(z.add_public(d * e))
}

/// Bit length bound on signed inputs to [`truncate`].
pub const TRUNC_INPUT_BITS: u32 = 46;
/// Masks are uniform below 2^59; `x + 2^46 + r` stays below the modulus.
pub const TRUNC_MASK_BITS: u32 = 59;

/// Dealer-supplied mask `r` with its high part and low bits separately shared.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationPair {
    r: Shared,
    r_hi: Shared,
    /// Bits of `r mod 2^20`, least significant first.
    r_lo_bits: Vec<Shared>,
}

fn deal_truncation<R: RngCore + ?Sized>(parties: usize, rng: &mut R) -> Result<TruncationPair, MpcError> {
    let r: u64 = rng.gen_range(0..1u64 << TRUNC_MASK_BITS);
    let bits = (0..FIXED_BITS)
        .map(|t| share(Fp::new((r >> t) & 1), parties, rng))
        .collect::<Result<_, _>>()?;
    Ok(TruncationPair {
        r: share(Fp::new(r), parties, rng)?,
        r_hi: share(Fp::new(r >> FIXED_BITS), parties, rng)?,
        r_lo_bits: bits,
    })
}

/// Triples consumed by one [`truncate`] call.
pub const TRIPLES_PER_TRUNCATION: usize = FIXED_BITS as usize;

/// Preprocessing pool handed to an evaluation session.
#[derive(Debug, Clone)]
pub struct TripleDealer {
    parties: usize,
    triples: VecDeque<BeaverTriple>,
    truncations: VecDeque<TruncationPair>,
}

impl TripleDealer {
    pub fn provision<R: RngCore + ?Sized>(
        parties: usize,
        triples: usize,
        truncations: usize,
        rng: &mut R,
    ) -> Result<Self, MpcError> {
        Ok(TripleDealer {
            parties,
            triples: deal_triples(triples, parties, rng)?.into(),
            truncations: (0..truncations)
                .map(|_| deal_truncation(parties, rng))
                .collect::<Result<_, _>>()?,
        })
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn remaining_triples(&self) -> usize {
        self.triples.len()
    }

    /// Triples not yet handed out, in dealing order.
    pub fn pending_triples(&self) -> impl Iterator<Item = &BeaverTriple> {
        self.triples.iter()
    }

    pub fn remaining_truncations(&self) -> usize {
        self.truncations.len()
    }

    pub fn next_triple(&mut self) -> Result<BeaverTriple, MpcError> {
        self.triples.pop_front().ok_or(MpcError::InsufficientTriples)
    }

    pub fn next_truncation(&mut self) -> Result<TruncationPair, MpcError> {
        self.truncations.pop_front().ok_or(MpcError::InsufficientTruncations)
    }

    pub fn multiply(&mut self, x: &Shared, y: &Shared, transcript: &mut Transcript) -> Result<Shared, MpcError> {
        let mut t = self.next_triple()?;
        secure_multiply(x, y, &mut t, transcript)
    }
}

/// Exact `floor(x / 2^20)` for signed `|x| < 2^46`.
///
/// Opens `c = x + 2^46 + r` and corrects `floor(c / 2^20) - r_hi` by the
/// borrow `[c mod 2^20 < r mod 2^20]`, computed bitwise on shared bits of `r`.
pub fn truncate(
    x: &Shared,
    dealer: &mut TripleDealer,
    transcript: &mut Transcript,
) -> Result<Shared, MpcError> {
    let pair = dealer.next_truncation()?;
    let parties = x.parties();
    let offset = Fp::new(1 << TRUNC_INPUT_BITS);
    let c = transcript.open(&(x + &pair.r).add_public(offset), OpeningKind::TruncMask)?;
    let c = c.value();
    let c_lo = c & ((1 << FIXED_BITS) - 1);

    // borrow = [c_lo < r_lo], scanning from the top bit
    let mut prefix = Shared::public(Fp::ONE, parties);
    let mut borrow = Shared::zero(parties);
    for t in (0..FIXED_BITS as usize).rev() {
        let r_t = &pair.r_lo_bits[t];
        let m = dealer.multiply(&prefix, r_t, transcript)?;
        if (c_lo >> t) & 1 == 0 {
            borrow = &borrow + &m;
            prefix = &prefix - &m;
        } else {
            prefix = m;
        }
    }
    let base = Fp::new(c >> FIXED_BITS) - Fp::new(1 << (TRUNC_INPUT_BITS - FIXED_BITS));
    Ok((&(&Shared::zero(parties) - &pair.r_hi) - &borrow).add_public(base))
}
