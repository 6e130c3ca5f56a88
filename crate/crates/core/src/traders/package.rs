use serde::{Deserialize, Serialize};

use super::questions::Reader;
use super::TraderError;
use crate::payment::{ReportVector, FIXED_ONE};
use crate::ro::DIGEST_BYTES;

const VERSION: u8 = 1;
const KIND_SIGNAL: u8 = 0;
const KIND_FORECAST: u8 = 1;

/// A seller's goods: the questions in the order she received them and her
/// answers in the same order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoPackage {
    pub question_ids: Vec<u32>,
    pub reports: ReportVector,
}

impl InfoPackage {
    pub fn new(question_ids: Vec<u32>, reports: ReportVector) -> Result<Self, TraderError> {
        if question_ids.len() != reports.tasks() {
            return Err(TraderError::PackageLength(question_ids.len(), reports.tasks()));
        }
        Ok(InfoPackage { question_ids, reports })
    }

    /// Length-prefixed body zero-padded to whole digest-size blocks.
    ///
    /// Body: version, N (u32), ids (u32 each), kind tag, alphabet, then one
    /// byte per signal or one i64 per forecast coordinate at scale 2^20.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut body = vec![VERSION];
        body.extend_from_slice(&(self.question_ids.len() as u32).to_be_bytes());
        for id in &self.question_ids {
            body.extend_from_slice(&id.to_be_bytes());
        }
        match &self.reports {
            ReportVector::Signal(s) => {
                body.push(KIND_SIGNAL);
                body.push(s.alphabet() as u8);
                body.extend_from_slice(s.signals());
            }
            ReportVector::Forecast(f) => {
                body.push(KIND_FORECAST);
                body.push(f.alphabet() as u8);
                for q in f.forecasts().iter().flatten() {
                    let v = (q * FIXED_ONE as f64).round_ties_even() as i64;
                    body.extend_from_slice(&v.to_be_bytes());
                }
            }
        }
        let mut out = (body.len() as u32).to_be_bytes().to_vec();
        out.extend_from_slice(&body);
        out.resize(out.len().div_ceil(DIGEST_BYTES) * DIGEST_BYTES, 0);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TraderError> {
        if bytes.is_empty() || !bytes.len().is_multiple_of(DIGEST_BYTES) {
            return Err(TraderError::Malformed("package is not whole blocks"));
        }
        let mut outer = Reader(bytes);
        let body_len = outer.u32()? as usize;
        let body = outer.take(body_len)?;
        if outer.0.len() >= DIGEST_BYTES || outer.0.iter().any(|&b| b != 0) {
            return Err(TraderError::Malformed("bad padding"));
        }
        let mut r = Reader(body);
        if r.u8()? != VERSION {
            return Err(TraderError::Malformed("unknown version"));
        }
        let n = r.u32()? as usize;
        if n > body_len {
            return Err(TraderError::Malformed("task count exceeds body"));
        }
        let ids = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
        let kind = r.u8()?;
        let alphabet = r.u8()? as usize;
        let reports = match kind {
            KIND_SIGNAL => ReportVector::signals(alphabet, r.take(n)?.to_vec())?,
            KIND_FORECAST => {
                let forecasts = (0..n)
                    .map(|_| {
                        (0..alphabet)
                            .map(|_| r.i64().map(|v| v as f64 / FIXED_ONE as f64))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                ReportVector::forecasts(forecasts)?
            }
            _ => return Err(TraderError::Malformed("unknown report kind")),
        };
        if !r.0.is_empty() {
            return Err(TraderError::Malformed("trailing bytes in body"));
        }
        InfoPackage::new(ids, reports)
    }

    /// Reports reordered by ascending question id.
    pub fn aligned_reports(&self) -> ReportVector {
        let mut order: Vec<usize> = (0..self.question_ids.len()).collect();
        order.sort_by_key(|&k| self.question_ids[k]);
        self.reports.reorder(&order)
    }

    pub fn sorted_ids(&self) -> Vec<u32> {
        let mut ids = self.question_ids.clone();
        ids.sort_unstable();
        ids
    }
}
