use num_rational::Rational64;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::field::Fp;
use super::share::{share, OpeningKind, Shared, Transcript, TripleDealer, TRIPLES_PER_TRUNCATION};
use super::{truncate, MpcError, TRUNC_INPUT_BITS};
use crate::payment::{
    pay_vector_multi, MigKind, Payment, PaymentError, PaymentParams, PriorDistribution,
    ReportVector, FIXED_ONE,
};

/// Which evaluator the contract terms name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorKind {
    #[default]
    Trusted,
    Shared,
}

/// Reports handed to a trusted center; no shares involved.
pub fn evaluate_payment_trusted(
    reports: &[ReportVector],
    params: &PaymentParams,
) -> Result<Vec<Payment>, MpcError> {
    Ok(pay_vector_multi(reports, params)?)
}

/// Per-seller secret-shared inputs. `plain[t][y]` is the one-hot indicator
/// (correlation) or `round(q * 2^20)` (Pearson); `weighted[t][y]` is
/// `round(q / p(y) * 2^20)` and only present for Pearson.
#[derive(Debug, Clone)]
struct SellerInput {
    plain: Vec<Vec<Shared>>,
    weighted: Vec<Vec<Shared>>,
}

#[derive(Debug, Clone)]
pub struct SharedInputs {
    sellers: Vec<SellerInput>,
    tasks: usize,
    alphabet: usize,
}

impl SharedInputs {
    pub fn parties(&self) -> usize {
        self.sellers.len()
    }

    pub fn tasks(&self) -> usize {
        self.tasks
    }
}

fn validate(reports: &[ReportVector], params: &PaymentParams) -> Result<(usize, usize), PaymentError> {
    let Some(first) = reports.first() else {
        return Err(PaymentError::TooFewSellers(0));
    };
    if reports.len() < 2 {
        return Err(PaymentError::TooFewSellers(reports.len()));
    }
    for r in reports {
        if r.kind() != params.report_kind() {
            return Err(PaymentError::ParamsMismatch);
        }
        if r.tasks() != first.tasks() {
            return Err(PaymentError::LengthMismatch(first.tasks(), r.tasks()));
        }
        if r.alphabet() != first.alphabet() {
            return Err(PaymentError::AlphabetMismatch(first.alphabet(), r.alphabet()));
        }
    }
    if let MigKind::Pearson { prior } = &params.mig {
        if prior.alphabet() != first.alphabet() {
            return Err(PaymentError::AlphabetMismatch(first.alphabet(), prior.alphabet()));
        }
    }
    Ok((first.tasks(), first.alphabet()))
}

fn fixed(x: f64) -> i64 {
    (x * FIXED_ONE as f64).round_ties_even() as i64
}

/// Integer encodings `(weighted, plain)` of one forecast report.
fn pearson_encoding(report: &ReportVector, prior: &PriorDistribution) -> (Vec<Vec<i64>>, Vec<Vec<i64>>) {
    let ReportVector::Forecast(f) = report else {
        unreachable!("validated as a forecast report")
    };
    let p = prior.probabilities();
    let weighted = f
        .forecasts()
        .iter()
        .map(|q| q.iter().zip(p).map(|(q, p)| fixed(q / p)).collect())
        .collect();
    let plain = f.forecasts().iter().map(|q| q.iter().map(|&q| fixed(q)).collect()).collect();
    (weighted, plain)
}

fn onehot(report: &ReportVector) -> Vec<Vec<i64>> {
    let ReportVector::Signal(s) = report else {
        unreachable!("validated as a signal report")
    };
    s.signals()
        .iter()
        .map(|&x| (0..s.alphabet()).map(|y| i64::from(y == x as usize)).collect())
        .collect()
}

fn share_matrix<R: RngCore + ?Sized>(
    m: &[Vec<i64>],
    parties: usize,
    rng: &mut R,
) -> Result<Vec<Vec<Shared>>, MpcError> {
    m.iter()
        .map(|row| row.iter().map(|&v| share(Fp::from_i64(v), parties, rng)).collect())
        .collect()
}

/// Encodes every seller's report and shares it among all sellers.
pub fn share_reports<R: RngCore + ?Sized>(
    reports: &[ReportVector],
    params: &PaymentParams,
    rng: &mut R,
) -> Result<SharedInputs, MpcError> {
    let (tasks, alphabet) = validate(reports, params)?;
    let parties = reports.len();
    let sellers = reports
        .iter()
        .map(|r| match &params.mig {
            MigKind::Corr => Ok(SellerInput {
                plain: share_matrix(&onehot(r), parties, rng)?,
                weighted: Vec::new(),
            }),
            MigKind::Pearson { prior } => {
                let (w, p) = pearson_encoding(r, prior);
                Ok(SellerInput {
                    plain: share_matrix(&p, parties, rng)?,
                    weighted: share_matrix(&w, parties, rng)?,
                })
            }
        })
        .collect::<Result<_, MpcError>>()?;
    Ok(SharedInputs { sellers, tasks, alphabet })
}

/// Triples and truncation masks a secure evaluation will consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub triples: usize,
    pub truncations: usize,
}

pub fn preprocessing_for(params: &PaymentParams, sellers: usize, tasks: usize, alphabet: usize) -> Preprocessing {
    let pairs = sellers * sellers.saturating_sub(1) / 2;
    let n = tasks;
    match params.mig {
        MigKind::Corr => Preprocessing { triples: pairs * (n + 1) * alphabet, truncations: 0 },
        MigKind::Pearson { .. } => Preprocessing {
            triples: pairs * (n * n * alphabet + n * n * TRIPLES_PER_TRUNCATION + n * (n - 1)),
            truncations: pairs * n * n,
        },
    }
}

/// Worst-case magnitudes for the Pearson circuit must fit the signed field range.
fn pearson_capacity(prior: &PriorDistribution, sellers: usize, tasks: usize) -> Result<(), MpcError> {
    let w_max = prior.probabilities().iter().map(|p| 1.0 / p).fold(0.0, f64::max);
    let one = FIXED_ONE as f64;
    let k = prior.alphabet() as f64;
    let s_bound = (w_max * one + k) * (one + k);
    let s_trunc = s_bound / one + 1.0;
    let n = tasks as f64;
    let z_bound = 2.0 * (n - 1.0) * one * n * s_trunc + n * (n - 1.0) * s_trunc * s_trunc;
    let total = (sellers as f64 - 1.0) * z_bound;
    if s_bound < (1u64 << TRUNC_INPUT_BITS) as f64 && total < (1u64 << 59) as f64 {
        Ok(())
    } else {
        Err(MpcError::CapacityExceeded)
    }
}

fn check_onehot(inputs: &SharedInputs, transcript: &mut Transcript) -> Result<(), MpcError> {
    let parties = inputs.parties();
    for (seller, input) in inputs.sellers.iter().enumerate() {
        for (task, row) in input.plain.iter().enumerate() {
            let total = row.iter().fold(Shared::zero(parties), |acc, x| &acc + x);
            if transcript.open(&total, OpeningKind::OneHotCheck)? != Fp::ONE {
                return Err(MpcError::MalformedOneHot { seller, task });
            }
        }
    }
    Ok(())
}

/// `N * same - all` for one pair, from one-hot dot products.
fn corr_pair(
    a: &SellerInput,
    b: &SellerInput,
    dealer: &mut TripleDealer,
    transcript: &mut Transcript,
) -> Result<Shared, MpcError> {
    let parties = dealer.parties();
    let n = a.plain.len();
    let alphabet = a.plain[0].len();
    let mut same = Shared::zero(parties);
    for (ra, rb) in a.plain.iter().zip(&b.plain) {
        for (x, y) in ra.iter().zip(rb) {
            same = &same + &dealer.multiply(x, y, transcript)?;
        }
    }
    let column = |m: &[Vec<Shared>], y: usize| m.iter().fold(Shared::zero(parties), |acc, row| &acc + &row[y]);
    let mut all = Shared::zero(parties);
    for y in 0..alphabet {
        all = &all + &dealer.multiply(&column(&a.plain, y), &column(&b.plain, y), transcript)?;
    }
    Ok(&same.scale(Fp::new(n as u64)) - &all)
}

/// `2(N-1) 2^20 T1 - T2` for one pair, at scale 2^40.
fn pearson_pair(
    first: &SellerInput,
    second: &SellerInput,
    dealer: &mut TripleDealer,
    transcript: &mut Transcript,
) -> Result<Shared, MpcError> {
    let parties = dealer.parties();
    let n = first.weighted.len();
    let mut t1 = Shared::zero(parties);
    let mut t2 = Shared::zero(parties);
    for (t, wa) in first.weighted.iter().enumerate() {
        for (s, pb) in second.plain.iter().enumerate() {
            let mut dot = Shared::zero(parties);
            for (x, y) in wa.iter().zip(pb) {
                dot = &dot + &dealer.multiply(x, y, transcript)?;
            }
            let dot = truncate(&dot, dealer, transcript)?;
            if t == s {
                t1 = &t1 + &dot;
            } else {
                t2 = &t2 + &dealer.multiply(&dot, &dot, transcript)?;
            }
        }
    }
    let coeff = Fp::new(2 * (n as u64 - 1) * FIXED_ONE as u64);
    Ok(&t1.scale(coeff) - &t2)
}

fn corr_payments(numerators: &[i64], tasks: usize, params: &PaymentParams) -> Vec<Payment> {
    let n = tasks as i64;
    numerators
        .iter()
        .map(|&z| Payment::Exact(params.alpha * Rational64::new(z, n * (n - 1)) + params.beta))
        .collect()
}

fn pearson_payments(z_sums: &[i128], tasks: usize, params: &PaymentParams) -> Vec<Payment> {
    let n = tasks as f64;
    let others = z_sums.len() as f64 - 1.0;
    let denom = n * (n - 1.0) * (FIXED_ONE as f64) * (FIXED_ONE as f64);
    z_sums
        .iter()
        .map(|&z| Payment::Real(params.alpha_f64() * (z as f64 / denom - others) + params.beta_f64()))
        .collect()
}

/// Runs the payment circuit on shared inputs and opens only each seller's
/// aggregate score numerator.
pub fn evaluate_payment_secure(
    inputs: &SharedInputs,
    params: &PaymentParams,
    dealer: &mut TripleDealer,
    transcript: &mut Transcript,
) -> Result<Vec<Payment>, MpcError> {
    let sellers = inputs.parties();
    if sellers < 2 {
        return Err(PaymentError::TooFewSellers(sellers).into());
    }
    if dealer.parties() != sellers {
        return Err(MpcError::PartyCountMismatch(dealer.parties(), sellers));
    }
    if inputs.tasks < 2 {
        return Err(PaymentError::TooFewTasks(inputs.tasks).into());
    }
    match &params.mig {
        MigKind::Corr => {
            if inputs.sellers.iter().any(|s| !s.weighted.is_empty()) {
                return Err(MpcError::InputMismatch);
            }
            check_onehot(inputs, transcript)?;
        }
        MigKind::Pearson { prior } => {
            if prior.alphabet() != inputs.alphabet || inputs.sellers.iter().any(|s| s.weighted.is_empty()) {
                return Err(MpcError::InputMismatch);
            }
            pearson_capacity(prior, sellers, inputs.tasks)?;
        }
    }
    let mut acc = vec![Shared::zero(sellers); sellers];
    for i in 0..sellers {
        for j in i + 1..sellers {
            let (a, b) = (&inputs.sellers[i], &inputs.sellers[j]);
            let z = match params.mig {
                MigKind::Corr => corr_pair(a, b, dealer, transcript)?,
                MigKind::Pearson { .. } => pearson_pair(a, b, dealer, transcript)?,
            };
            acc[i] = &acc[i] + &z;
            acc[j] = &acc[j] + &z;
        }
    }
    let opened = acc
        .iter()
        .map(|z| transcript.open(z, OpeningKind::Output).map(Fp::to_signed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(match params.mig {
        MigKind::Corr => corr_payments(&opened, inputs.tasks, params),
        MigKind::Pearson { .. } => {
            let z: Vec<i128> = opened.into_iter().map(i128::from).collect();
            pearson_payments(&z, inputs.tasks, params)
        }
    })
}

/// The secure circuit's integer arithmetic evaluated in the clear. Produces
/// bit-identical payments to [`evaluate_payment_secure`].
pub fn evaluate_payment_fixed_point(
    reports: &[ReportVector],
    params: &PaymentParams,
) -> Result<Vec<Payment>, MpcError> {
    let MigKind::Pearson { prior } = &params.mig else {
        return evaluate_payment_trusted(reports, params);
    };
    let (tasks, _) = validate(reports, params)?;
    pearson_capacity(prior, reports.len(), tasks)?;
    let enc: Vec<_> = reports.iter().map(|r| pearson_encoding(r, prior)).collect();
    let one = FIXED_ONE as i128;
    let mut z_sums = vec![0i128; reports.len()];
    for i in 0..reports.len() {
        for j in i + 1..reports.len() {
            let (wa, pb) = (&enc[i].0, &enc[j].1);
            let (mut t1, mut t2) = (0i128, 0i128);
            for (t, ra) in wa.iter().enumerate() {
                for (s, rb) in pb.iter().enumerate() {
                    let dot: i128 = ra.iter().zip(rb).map(|(&x, &y)| x as i128 * y as i128).sum();
                    let dot = dot.div_euclid(one);
                    if t == s {
                        t1 += dot;
                    } else {
                        t2 += dot * dot;
                    }
                }
            }
            let z = 2 * (tasks as i128 - 1) * one * t1 - t2;
            z_sums[i] += z;
            z_sums[j] += z;
        }
    }
    Ok(pearson_payments(&z_sums, tasks, params))
}

/// Payments an adjudicator recomputes from revealed reports.
pub fn recompute(
    kind: EvaluatorKind,
    reports: &[ReportVector],
    params: &PaymentParams,
) -> Result<Vec<Payment>, MpcError> {
    match kind {
        EvaluatorKind::Trusted => evaluate_payment_trusted(reports, params),
        EvaluatorKind::Shared => evaluate_payment_fixed_point(reports, params),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(skip)]
    pub payments: Vec<Payment>,
    pub transcript: Option<Transcript>,
}

/// Evaluates with the chosen evaluator, provisioning a fresh dealer for the
/// shared variant.
pub fn evaluate<R: RngCore + ?Sized>(
    kind: EvaluatorKind,
    reports: &[ReportVector],
    params: &PaymentParams,
    rng: &mut R,
) -> Result<Evaluation, MpcError> {
    match kind {
        EvaluatorKind::Trusted => Ok(Evaluation {
            payments: evaluate_payment_trusted(reports, params)?,
            transcript: None,
        }),
        EvaluatorKind::Shared => {
            let (tasks, alphabet) = validate(reports, params)?;
            let pre = preprocessing_for(params, reports.len(), tasks, alphabet);
            let mut dealer = TripleDealer::provision(reports.len(), pre.triples, pre.truncations, rng)?;
            let inputs = share_reports(reports, params, rng)?;
            let mut transcript = Transcript::new();
            let payments = evaluate_payment_secure(&inputs, params, &mut dealer, &mut transcript)?;
            Ok(Evaluation { payments, transcript: Some(transcript) })
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    use super::*;
    use crate::payment::quantize_forecast;

    fn sig(k: usize, s: &[u8]) -> ReportVector {
        ReportVector::signals(k, s.to_vec()).unwrap()
    }

    fn secure(reports: &[ReportVector], params: &PaymentParams, seed: u64) -> Result<Vec<Payment>, MpcError> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        evaluate(EvaluatorKind::Shared, reports, params, &mut rng).map(|e| e.payments)
    }

    #[test]
    fn corr_examples() {
        let p = PaymentParams::corr(1, 0).unwrap();
        let r = [sig(2, &[0, 0, 1]), sig(2, &[0, 1, 1])];
        assert_eq!(secure(&r, &p, 1).unwrap(), vec![Payment::Exact(Rational64::new(1, 3)); 2]);

        let p = PaymentParams::corr(1, 1).unwrap();
        let r = [sig(2, &[1, 1, 1]), sig(2, &[1, 1, 1])];
        assert_eq!(secure(&r, &p, 2).unwrap(), vec![Payment::Exact(Rational64::from_integer(1)); 2]);
    }

    #[test]
    fn pearson_mig_three_example() {
        let prior = PriorDistribution::uniform(2).unwrap();
        let p = PaymentParams::pearson(1, 0, prior).unwrap();
        let f = ReportVector::forecasts(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let got = secure(&[f.clone(), f.clone()], &p, 3).unwrap();
        for g in got {
            assert!((g.to_f64() - 3.0).abs() < 1e-3);
        }
    }

    #[test]
    fn secure_consumes_exactly_the_advertised_preprocessing() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let prior = PriorDistribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        let p = PaymentParams::pearson(1, 0, prior).unwrap();
        let reports: Vec<_> = (0..3)
            .map(|_| {
                let f = (0..4)
                    .map(|_| {
                        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..1.0)).collect();
                        let s: f64 = v.iter().sum();
                        quantize_forecast(&v.iter().map(|x| x / s).collect::<Vec<_>>())
                    })
                    .collect();
                ReportVector::forecasts(f).unwrap()
            })
            .collect();
        let pre = preprocessing_for(&p, 3, 4, 3);
        let mut dealer = TripleDealer::provision(3, pre.triples, pre.truncations, &mut rng).unwrap();
        let inputs = share_reports(&reports, &p, &mut rng).unwrap();
        let mut tr = Transcript::new();
        let got = evaluate_payment_secure(&inputs, &p, &mut dealer, &mut tr).unwrap();
        assert_eq!(dealer.remaining_triples(), 0);
        assert_eq!(dealer.remaining_truncations(), 0);
        assert_eq!(got, evaluate_payment_fixed_point(&reports, &p).unwrap());
        let trusted = evaluate_payment_trusted(&reports, &p).unwrap();
        for (g, t) in got.iter().zip(&trusted) {
            assert!((g.to_f64() - t.to_f64()).abs() < 1e-3);
        }
        assert_eq!(tr.of_kind(OpeningKind::Output).count(), 3);
    }

    #[test]
    fn short_dealer_fails() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let p = PaymentParams::corr(1, 0).unwrap();
        let r = [sig(2, &[0, 0, 1]), sig(2, &[0, 1, 1])];
        let pre = preprocessing_for(&p, 2, 3, 2);
        let mut dealer = TripleDealer::provision(2, pre.triples - 1, 0, &mut rng).unwrap();
        let inputs = share_reports(&r, &p, &mut rng).unwrap();
        assert_eq!(
            evaluate_payment_secure(&inputs, &p, &mut dealer, &mut Transcript::new()),
            Err(MpcError::InsufficientTriples)
        );
    }

    #[test]
    fn malformed_onehot_aborts() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let p = PaymentParams::corr(1, 0).unwrap();
        let r = [sig(2, &[0, 0, 1]), sig(2, &[0, 1, 1])];
        let mut inputs = share_reports(&r, &p, &mut rng).unwrap();
        // seller 1 claims both symbols at task 2
        inputs.sellers[1].plain[2][0] = share(Fp::ONE, 2, &mut rng).unwrap();
        let pre = preprocessing_for(&p, 2, 3, 2);
        let mut dealer = TripleDealer::provision(2, pre.triples, 0, &mut rng).unwrap();
        assert_eq!(
            evaluate_payment_secure(&inputs, &p, &mut dealer, &mut Transcript::new()),
            Err(MpcError::MalformedOneHot { seller: 1, task: 2 })
        );
    }

    #[test]
    fn extreme_prior_exceeds_capacity() {
        let prior = PriorDistribution::new(vec![0.999, 0.001]).unwrap();
        let p = PaymentParams::pearson(1, 0, prior).unwrap();
        let f = ReportVector::forecasts(vec![vec![0.5, 0.5]; 40]).unwrap();
        assert_eq!(secure(&[f.clone(), f], &p, 7), Err(MpcError::CapacityExceeded));
    }

    #[test]
    fn validation_errors_propagate() {
        let p = PaymentParams::corr(1, 0).unwrap();
        assert_eq!(
            secure(&[sig(2, &[0, 1])], &p, 8),
            Err(MpcError::Payment(PaymentError::TooFewSellers(1)))
        );
        assert_eq!(
            secure(&[sig(2, &[0, 1]), sig(2, &[0, 1, 1])], &p, 8),
            Err(MpcError::Payment(PaymentError::LengthMismatch(2, 3)))
        );
    }
}
