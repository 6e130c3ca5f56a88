use num_rational::Rational64;

use super::{
    ForecastReport, MigKind, Payment, PaymentError, PaymentParams, PriorDistribution,
    ReportVector, SignalReport,
};

fn as_signals<'a>(
    a: &'a ReportVector,
    b: &'a ReportVector,
) -> Result<(&'a SignalReport, &'a SignalReport), PaymentError> {
    let (ReportVector::Signal(a), ReportVector::Signal(b)) = (a, b) else {
        return Err(PaymentError::KindMismatch);
    };
    if a.signals().len() != b.signals().len() {
        return Err(PaymentError::LengthMismatch(a.signals().len(), b.signals().len()));
    }
    if a.alphabet() != b.alphabet() {
        return Err(PaymentError::AlphabetMismatch(a.alphabet(), b.alphabet()));
    }
    Ok((a, b))
}

fn as_forecasts<'a>(
    a: &'a ReportVector,
    b: &'a ReportVector,
    prior: &PriorDistribution,
) -> Result<(&'a ForecastReport, &'a ForecastReport), PaymentError> {
    let (ReportVector::Forecast(a), ReportVector::Forecast(b)) = (a, b) else {
        return Err(PaymentError::KindMismatch);
    };
    if a.forecasts().len() != b.forecasts().len() {
        return Err(PaymentError::LengthMismatch(a.forecasts().len(), b.forecasts().len()));
    }
    for r in [a, b] {
        if r.alphabet() != prior.alphabet() {
            return Err(PaymentError::AlphabetMismatch(r.alphabet(), prior.alphabet()));
        }
    }
    Ok((a, b))
}

/// Integer numerator of the correlation score over the denominator `N(N-1)`:
/// `(N-1) * same-task agreements - cross-task agreements`.
pub fn corr_numerator(a: &ReportVector, b: &ReportVector) -> Result<i64, PaymentError> {
    let (a, b) = as_signals(a, b)?;
    let n = a.signals().len() as i64;
    let mut count_a = [0i64; super::MAX_ALPHABET];
    let mut count_b = [0i64; super::MAX_ALPHABET];
    let mut same = 0i64;
    for (&x, &y) in a.signals().iter().zip(b.signals()) {
        count_a[x as usize] += 1;
        count_b[y as usize] += 1;
        same += i64::from(x == y);
    }
    let all_pairs: i64 = count_a.iter().zip(&count_b).map(|(x, y)| x * y).sum();
    let cross = all_pairs - same;
    Ok((n - 1) * same - cross)
}

/// Average same-task agreement minus average cross-task agreement, exactly.
pub fn mig_corr(a: &ReportVector, b: &ReportVector) -> Result<Rational64, PaymentError> {
    let numer = corr_numerator(a, b)?;
    let n = a.tasks() as i64;
    Ok(Rational64::new(numer, n * (n - 1)))
}

/// Pearson score of two forecast sets under the given prior.
pub fn mig_pearson(
    a: &ReportVector,
    b: &ReportVector,
    prior: &PriorDistribution,
) -> Result<f64, PaymentError> {
    let (a, b) = as_forecasts(a, b, prior)?;
    let weights: Vec<f64> = prior.probabilities().iter().map(|p| 1.0 / p).collect();
    let inner = |x: &[f64], y: &[f64]| -> f64 {
        x.iter()
            .zip(y)
            .zip(&weights)
            .map(|((p, q), w)| p * q * w)
            .sum()
    };
    let fa = a.forecasts();
    let fb = b.forecasts();
    let n = fa.len();
    let mut same = 0.0;
    let mut cross = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = inner(&fa[i], &fb[j]);
            if i == j {
                same += 2.0 * (s - 1.0);
            } else {
                cross += s * s - 1.0;
            }
        }
    }
    let n = n as f64;
    Ok(same / n - cross / (n * (n - 1.0)))
}

fn mig(a: &ReportVector, b: &ReportVector, params: &PaymentParams) -> Result<Payment, PaymentError> {
    if a.kind() != params.report_kind() || b.kind() != params.report_kind() {
        return Err(PaymentError::ParamsMismatch);
    }
    match &params.mig {
        MigKind::Corr => mig_corr(a, b).map(Payment::Exact),
        MigKind::Pearson { prior } => mig_pearson(a, b, prior).map(Payment::Real),
    }
}

fn affine(sum: Payment, params: &PaymentParams) -> Payment {
    match sum {
        Payment::Exact(m) => Payment::Exact(params.alpha * m + params.beta),
        Payment::Real(m) => Payment::Real(params.alpha_f64() * m + params.beta_f64()),
    }
}

/// `alpha * MIG(a, b) + beta`.
pub fn pay_func(
    a: &ReportVector,
    b: &ReportVector,
    params: &PaymentParams,
) -> Result<Payment, PaymentError> {
    mig(a, b, params).map(|m| affine(m, params))
}

/// Entry `i` is `alpha * sum_{j != i} MIG(r_i, r_j) + beta`.
pub fn pay_vector_multi(
    reports: &[ReportVector],
    params: &PaymentParams,
) -> Result<Vec<Payment>, PaymentError> {
    let n = reports.len();
    if n < 2 {
        return Err(PaymentError::TooFewSellers(n));
    }
    let zero = match params.mig {
        MigKind::Corr => Payment::Exact(Rational64::from_integer(0)),
        MigKind::Pearson { .. } => Payment::Real(0.0),
    };
    let mut sums = vec![zero; n];
    for i in 0..n {
        for j in i + 1..n {
            // both scores are symmetric in their arguments
            let m = mig(&reports[i], &reports[j], params)?;
            for k in [i, j] {
                sums[k] = match (sums[k], m) {
                    (Payment::Exact(s), Payment::Exact(x)) => Payment::Exact(s + x),
                    (Payment::Real(s), Payment::Real(x)) => Payment::Real(s + x),
                    _ => unreachable!("one score kind per params"),
                };
            }
        }
    }
    Ok(sums.into_iter().map(|s| affine(s, params)).collect())
}
