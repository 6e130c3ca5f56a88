use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::TraderError;
use crate::payment::{quantize_forecast, PriorDistribution, ReportKind, ReportVector};

/// Generative model of ground truth and seller observations. Each seller
/// sees the truth with probability `1 - noise[i]`, otherwise a uniformly
/// chosen other symbol; sellers are independent given the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSignalModel", into = "RawSignalModel")]
pub struct SignalModel {
    kind: ReportKind,
    prior: PriorDistribution,
    noise: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSignalModel {
    kind: ReportKind,
    prior: PriorDistribution,
    noise: Vec<f64>,
}

impl TryFrom<RawSignalModel> for SignalModel {
    type Error = TraderError;
    fn try_from(r: RawSignalModel) -> Result<Self, Self::Error> {
        SignalModel::new(r.kind, r.prior, r.noise)
    }
}

impl From<SignalModel> for RawSignalModel {
    fn from(m: SignalModel) -> Self {
        RawSignalModel { kind: m.kind, prior: m.prior, noise: m.noise }
    }
}

impl SignalModel {
    pub fn new(kind: ReportKind, prior: PriorDistribution, noise: Vec<f64>) -> Result<Self, TraderError> {
        let k = prior.alphabet() as f64;
        // positive correlation needs P(x = y | y) above P(x = y' | y)
        let bound = (k - 1.0) / k;
        if noise.len() < 2 || noise.iter().any(|&e| !(0.0..bound).contains(&e)) {
            return Err(TraderError::InvalidModel);
        }
        Ok(SignalModel { kind, prior, noise })
    }

    /// Uniform binary truth, two sellers, flip probability `epsilon`.
    pub fn binary(kind: ReportKind, epsilon: f64) -> Result<Self, TraderError> {
        Self::binary_sellers(kind, epsilon, 2)
    }

    pub fn binary_sellers(kind: ReportKind, epsilon: f64, sellers: usize) -> Result<Self, TraderError> {
        let prior = PriorDistribution::uniform(2).map_err(|_| TraderError::InvalidModel)?;
        Self::new(kind, prior, vec![epsilon; sellers])
    }

    pub fn kind(&self) -> ReportKind {
        self.kind
    }

    pub fn prior(&self) -> &PriorDistribution {
        &self.prior
    }

    pub fn alphabet(&self) -> usize {
        self.prior.alphabet()
    }

    pub fn sellers(&self) -> usize {
        self.noise.len()
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    /// `P(x | y)` for seller `i`.
    pub fn likelihood(&self, seller: usize, x: usize, y: usize) -> f64 {
        let e = self.noise[seller];
        if x == y {
            1.0 - e
        } else {
            e / (self.alphabet() as f64 - 1.0)
        }
    }

    /// Exact posterior `P(Y | X_i = x)`.
    pub fn posterior(&self, seller: usize, x: usize) -> Vec<f64> {
        let joint: Vec<f64> = self
            .prior
            .probabilities()
            .iter()
            .enumerate()
            .map(|(y, p)| p * self.likelihood(seller, x, y))
            .collect();
        let z: f64 = joint.iter().sum();
        joint.into_iter().map(|j| j / z).collect()
    }

    /// Closed-form expected correlation score of two truthful sellers:
    /// `P(X_i = X_j) - sum_x P(X_i = x) P(X_j = x)`.
    pub fn truthful_corr_mig(&self, i: usize, j: usize) -> f64 {
        let k = self.alphabet();
        let p = self.prior.probabilities();
        let same: f64 = (0..k)
            .map(|y| p[y] * (0..k).map(|x| self.likelihood(i, x, y) * self.likelihood(j, x, y)).sum::<f64>())
            .sum();
        let marginal = |s: usize, x: usize| (0..k).map(|y| p[y] * self.likelihood(s, x, y)).sum::<f64>();
        let cross: f64 = (0..k).map(|x| marginal(i, x) * marginal(j, x)).sum();
        same - cross
    }

    /// Draws `tasks` i.i.d. worlds.
    pub fn sample_world<R: RngCore + ?Sized>(&self, tasks: usize, rng: &mut R) -> Result<World, TraderError> {
        if tasks < 2 {
            return Err(TraderError::TooFewQuestions(tasks));
        }
        let k = self.alphabet();
        let truth_dist = WeightedIndex::new(self.prior.probabilities()).map_err(|_| TraderError::InvalidModel)?;
        let truths: Vec<u8> = (0..tasks).map(|_| truth_dist.sample(rng) as u8).collect();
        let signals = self
            .noise
            .iter()
            .map(|&e| {
                truths
                    .iter()
                    .map(|&y| {
                        if rng.gen::<f64>() >= e {
                            y
                        } else {
                            // uniform over the other k - 1 symbols
                            let o = rng.gen_range(0..k as u8 - 1);
                            if o >= y {
                                o + 1
                            } else {
                                o
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(World { truths, signals })
    }

    /// Seller `i`'s honest report of the given signals, in the given order.
    pub fn honest_report(&self, seller: usize, signals: &[u8]) -> Result<ReportVector, TraderError> {
        Ok(match self.kind {
            ReportKind::Signal => ReportVector::signals(self.alphabet(), signals.to_vec())?,
            ReportKind::Forecast => ReportVector::forecasts(
                signals
                    .iter()
                    .map(|&x| quantize_forecast(&self.posterior(seller, x as usize)))
                    .collect(),
            )?,
        })
    }
}

/// One draw of truths and per-seller observations, indexed by question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct World {
    pub truths: Vec<u8>,
    pub signals: Vec<Vec<u8>>,
}

impl World {
    /// Seller `i`'s observations in the order she was assigned.
    pub fn signals_in_order(&self, seller: usize, order: &[usize]) -> Vec<u8> {
        order.iter().map(|&q| self.signals[seller][q]).collect()
    }
}
