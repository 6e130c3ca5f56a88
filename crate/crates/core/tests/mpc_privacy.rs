//! Opened values of the secure circuit must not depend on the private inputs.

use infotrade::mpc::{
    evaluate_payment_secure, preprocessing_for, share_reports, OpeningKind, Transcript, TripleDealer,
};
use infotrade::payment::{PaymentParams, PriorDistribution, ReportVector};
use infotrade::sim::ks_two_sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const RUNS: u64 = 10_000;
const MIN_P_VALUE: f64 = 0.001;

fn openings(reports: &[ReportVector], params: &PaymentParams, kind: OpeningKind, seed: u64) -> Vec<f64> {
    let (n, k) = (reports[0].tasks(), reports[0].alphabet());
    let pre = preprocessing_for(params, reports.len(), n, k);
    (0..RUNS)
        .map(|run| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed ^ run.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut dealer = TripleDealer::provision(reports.len(), pre.triples, pre.truncations, &mut rng).unwrap();
            let inputs = share_reports(reports, params, &mut rng).unwrap();
            let mut transcript = Transcript::new();
            evaluate_payment_secure(&inputs, params, &mut dealer, &mut transcript).unwrap();
            let first = transcript.of_kind(kind).next().expect("opening of requested kind");
            first.value() as f64
        })
        .collect()
}

fn pearson_inputs() -> (PaymentParams, [ReportVector; 2], [ReportVector; 2]) {
    let params = PaymentParams::pearson(1, 0, PriorDistribution::uniform(2).unwrap()).unwrap();
    let f = |p: &[f64]| ReportVector::forecasts(p.iter().map(|&x| vec![x, 1.0 - x]).collect()).unwrap();
    let a = [f(&[0.9, 0.1, 0.8]), f(&[0.875, 0.25, 0.75])];
    let b = [f(&[0.0, 1.0, 0.5]), f(&[1.0, 0.0, 0.125])];
    (params, a, b)
}

#[test]
fn truncation_masks_hide_inputs() {
    let (params, a, b) = pearson_inputs();
    let ks = ks_two_sample(
        &openings(&a, &params, OpeningKind::TruncMask, 11),
        &openings(&b, &params, OpeningKind::TruncMask, 12),
    );
    assert!(ks.p_value > MIN_P_VALUE, "{ks:?}");
}

#[test]
fn beaver_openings_hide_inputs() {
    let (params, a, b) = pearson_inputs();
    let ks = ks_two_sample(
        &openings(&a, &params, OpeningKind::BeaverD, 21),
        &openings(&b, &params, OpeningKind::BeaverD, 22),
    );
    assert!(ks.p_value > MIN_P_VALUE, "{ks:?}");
}

#[test]
fn corr_beaver_openings_hide_inputs() {
    let params = PaymentParams::corr(1, 0).unwrap();
    let s = |v: &[u8]| ReportVector::signals(3, v.to_vec()).unwrap();
    let a = [s(&[0, 1, 2, 0]), s(&[0, 1, 2, 0])];
    let b = [s(&[2, 2, 2, 2]), s(&[1, 0, 0, 1])];
    let ks = ks_two_sample(
        &openings(&a, &params, OpeningKind::BeaverE, 31),
        &openings(&b, &params, OpeningKind::BeaverE, 32),
    );
    assert!(ks.p_value > MIN_P_VALUE, "{ks:?}");
}

#[test]
fn ks_detects_a_real_difference() {
    let (params, a, _) = pearson_inputs();
    let masks = openings(&a, &params, OpeningKind::TruncMask, 41);
    let shifted: Vec<f64> = masks.iter().map(|x| x * 1.5).collect();
    assert!(ks_two_sample(&masks, &shifted).p_value < MIN_P_VALUE);
}
