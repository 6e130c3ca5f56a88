use serde::{Deserialize, Serialize};

use super::{PaymentError, FIXED_ONE, MAX_ALPHABET, SUM_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Signal,
    Forecast,
}

/// Discrete reports over the alphabet `0..alphabet`, one per task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "UncheckedSignals")]
pub struct SignalReport {
    alphabet: usize,
    signals: Vec<u8>,
}

#[derive(Deserialize)]
struct UncheckedSignals {
    alphabet: usize,
    signals: Vec<u8>,
}

impl TryFrom<UncheckedSignals> for SignalReport {
    type Error = PaymentError;
    fn try_from(u: UncheckedSignals) -> Result<Self, Self::Error> {
        SignalReport::new(u.alphabet, u.signals)
    }
}

impl SignalReport {
    pub fn new(alphabet: usize, signals: Vec<u8>) -> Result<Self, PaymentError> {
        check_alphabet(alphabet)?;
        check_tasks(signals.len())?;
        if let Some(&symbol) = signals.iter().find(|&&s| s as usize >= alphabet) {
            return Err(PaymentError::SymbolOutOfRange { symbol, alphabet });
        }
        Ok(SignalReport { alphabet, signals })
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn signals(&self) -> &[u8] {
        &self.signals
    }
}

/// Probability forecasts over the alphabet, one vector per task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UncheckedForecasts")]
pub struct ForecastReport {
    forecasts: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct UncheckedForecasts {
    forecasts: Vec<Vec<f64>>,
}

impl TryFrom<UncheckedForecasts> for ForecastReport {
    type Error = PaymentError;
    fn try_from(u: UncheckedForecasts) -> Result<Self, Self::Error> {
        ForecastReport::new(u.forecasts)
    }
}

impl ForecastReport {
    pub fn new(forecasts: Vec<Vec<f64>>) -> Result<Self, PaymentError> {
        check_tasks(forecasts.len())?;
        let alphabet = forecasts[0].len();
        check_alphabet(alphabet)?;
        for (i, f) in forecasts.iter().enumerate() {
            if f.len() != alphabet || !is_distribution(f) {
                return Err(PaymentError::InvalidForecast(i));
            }
        }
        Ok(ForecastReport { forecasts })
    }

    pub fn alphabet(&self) -> usize {
        self.forecasts[0].len()
    }

    pub fn forecasts(&self) -> &[Vec<f64>] {
        &self.forecasts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportVector {
    Signal(SignalReport),
    Forecast(ForecastReport),
}

impl ReportVector {
    pub fn signals(alphabet: usize, signals: Vec<u8>) -> Result<Self, PaymentError> {
        SignalReport::new(alphabet, signals).map(ReportVector::Signal)
    }

    pub fn forecasts(forecasts: Vec<Vec<f64>>) -> Result<Self, PaymentError> {
        ForecastReport::new(forecasts).map(ReportVector::Forecast)
    }

    pub fn kind(&self) -> ReportKind {
        match self {
            ReportVector::Signal(_) => ReportKind::Signal,
            ReportVector::Forecast(_) => ReportKind::Forecast,
        }
    }

    pub fn tasks(&self) -> usize {
        match self {
            ReportVector::Signal(s) => s.signals.len(),
            ReportVector::Forecast(f) => f.forecasts.len(),
        }
    }

    pub fn alphabet(&self) -> usize {
        match self {
            ReportVector::Signal(s) => s.alphabet,
            ReportVector::Forecast(f) => f.alphabet(),
        }
    }

    /// Reorders tasks: entry `k` of the result is entry `order[k]` of `self`.
    pub fn reorder(&self, order: &[usize]) -> Self {
        match self {
            ReportVector::Signal(s) => ReportVector::Signal(SignalReport {
                alphabet: s.alphabet,
                signals: order.iter().map(|&i| s.signals[i]).collect(),
            }),
            ReportVector::Forecast(f) => ReportVector::Forecast(ForecastReport {
                forecasts: order.iter().map(|&i| f.forecasts[i].clone()).collect(),
            }),
        }
    }
}

/// Prior over the ground-truth outcome; every entry strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PriorDistribution {
    probabilities: Vec<f64>,
}

impl TryFrom<Vec<f64>> for PriorDistribution {
    type Error = PaymentError;
    fn try_from(p: Vec<f64>) -> Result<Self, Self::Error> {
        PriorDistribution::new(p)
    }
}

impl From<PriorDistribution> for Vec<f64> {
    fn from(p: PriorDistribution) -> Self {
        p.probabilities
    }
}

impl PriorDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self, PaymentError> {
        let ok = (2..=MAX_ALPHABET).contains(&probabilities.len())
            && probabilities.iter().all(|&p| p > 0.0)
            && is_distribution(&probabilities);
        if !ok {
            return Err(PaymentError::InvalidPrior);
        }
        Ok(PriorDistribution { probabilities })
    }

    pub fn uniform(alphabet: usize) -> Result<Self, PaymentError> {
        Self::new(vec![1.0 / alphabet as f64; alphabet])
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn alphabet(&self) -> usize {
        self.probabilities.len()
    }
}

fn is_distribution(p: &[f64]) -> bool {
    p.iter().all(|&x| x.is_finite() && x >= 0.0)
        && (p.iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE
}

fn check_alphabet(alphabet: usize) -> Result<(), PaymentError> {
    if (2..=MAX_ALPHABET).contains(&alphabet) {
        Ok(())
    } else {
        Err(PaymentError::AlphabetSize(alphabet))
    }
}

fn check_tasks(n: usize) -> Result<(), PaymentError> {
    if n >= 2 {
        Ok(())
    } else {
        Err(PaymentError::TooFewTasks(n))
    }
}

/// Snaps a probability vector to the 2^-20 grid. The largest coordinate
/// absorbs the rounding residue so the result sums to exactly 1.
pub fn quantize_forecast(p: &[f64]) -> Vec<f64> {
    let mut grid: Vec<i64> = p.iter().map(|&x| (x * FIXED_ONE as f64).round() as i64).collect();
    let residue = FIXED_ONE - grid.iter().sum::<i64>();
    let argmax = (0..grid.len()).max_by_key(|&i| grid[i]).unwrap_or(0);
    grid[argmax] += residue;
    grid.into_iter().map(|g| g as f64 / FIXED_ONE as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_validation() {
        assert!(SignalReport::new(2, vec![0, 1]).is_ok());
        assert_eq!(SignalReport::new(2, vec![0]), Err(PaymentError::TooFewTasks(1)));
        assert_eq!(
            SignalReport::new(2, vec![0, 2]),
            Err(PaymentError::SymbolOutOfRange {
                symbol: 2,
                alphabet: 2
            })
        );
        assert_eq!(SignalReport::new(17, vec![0, 1]), Err(PaymentError::AlphabetSize(17)));
    }

    #[test]
    fn forecast_validation() {
        assert!(ForecastReport::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).is_ok());
        assert_eq!(
            ForecastReport::new(vec![vec![0.5, 0.5], vec![0.6, 0.6]]),
            Err(PaymentError::InvalidForecast(1))
        );
        assert_eq!(
            ForecastReport::new(vec![vec![0.5, 0.5], vec![1.0]]),
            Err(PaymentError::InvalidForecast(1))
        );
        assert_eq!(
            ForecastReport::new(vec![vec![1.5, -0.5], vec![1.0, 0.0]]),
            Err(PaymentError::InvalidForecast(0))
        );
    }

    #[test]
    fn prior_must_be_positive() {
        assert!(PriorDistribution::new(vec![0.9, 0.1]).is_ok());
        assert_eq!(PriorDistribution::new(vec![1.0, 0.0]), Err(PaymentError::InvalidPrior));
        assert_eq!(PriorDistribution::new(vec![0.5, 0.6]), Err(PaymentError::InvalidPrior));
    }

    #[test]
    fn quantized_forecasts_sum_to_one_exactly() {
        let q = quantize_forecast(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(q.iter().sum::<f64>(), 1.0);
        for x in &q {
            assert_eq!((x * FIXED_ONE as f64).fract(), 0.0);
        }
        assert_eq!(quantize_forecast(&[0.8, 0.2]), [0.8_f64, 0.2]
            .iter()
            .map(|x| (x * FIXED_ONE as f64).round() / FIXED_ONE as f64)
            .collect::<Vec<_>>());
    }

    #[test]
    fn reorder_selects_entries() {
        let r = ReportVector::signals(3, vec![0, 1, 2]).unwrap();
        assert_eq!(r.reorder(&[2, 0, 1]), ReportVector::signals(3, vec![2, 0, 1]).unwrap());
    }

    #[test]
    fn report_json_is_validated() {
        let ok = r#"{"kind":"signal","alphabet":2,"signals":[0,1,1]}"#;
        assert_eq!(
            serde_json::from_str::<ReportVector>(ok).unwrap(),
            ReportVector::signals(2, vec![0, 1, 1]).unwrap()
        );
        let bad = r#"{"kind":"signal","alphabet":2,"signals":[0,3]}"#;
        assert!(serde_json::from_str::<ReportVector>(bad).is_err());
    }
}
