use serde::{Deserialize, Serialize};

use super::config::{role, stream};
use super::{map_trials, Estimate, Execution, SimError};
use crate::payment::{pay_vector_multi, Payment, PaymentParams, ReportVector};
use crate::traders::{seller_report, QuestionOrder, SignalModel, Strategy};

/// Minimum pre-registered trial count for payment estimates.
pub const MIN_TRIALS: usize = 100;

/// A report-strategy profile evaluated on the payment path alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaymentExperiment {
    pub profile: Vec<Strategy>,
    pub model: SignalModel,
    pub params: PaymentParams,
    pub tasks: usize,
    pub share_orders: bool,
    pub trials: usize,
    pub seed: u64,
}

impl PaymentExperiment {
    /// `profile` under the model with `PayFunc = MIG` and independent orders.
    pub fn mig(profile: Vec<Strategy>, model: SignalModel, tasks: usize, trials: usize, seed: u64) -> Self {
        PaymentExperiment {
            profile,
            model,
            params: PaymentParams::corr(1, 0).expect("unit coefficients"),
            tasks,
            share_orders: false,
            trials,
            seed,
        }
    }
}

/// Per-seller payments of one sampled world.
pub(crate) fn sample_payments(exp: &PaymentExperiment, trial: u64) -> Result<Vec<Payment>, SimError> {
    let n = exp.profile.len();
    let mut world_rng = stream(exp.seed, trial, role::WORLD);
    let mut buyer_rng = stream(exp.seed, trial, role::BUYER);
    let world = exp.model.sample_world(exp.tasks, &mut world_rng)?;
    let orders: Vec<QuestionOrder> = if exp.share_orders {
        vec![QuestionOrder::random(exp.tasks, &mut buyer_rng); n]
    } else {
        (0..n).map(|_| QuestionOrder::random(exp.tasks, &mut buyer_rng)).collect()
    };
    let mut aligned = Vec::with_capacity(n);
    for (i, (strategy, order)) in exp.profile.iter().zip(&orders).enumerate() {
        let mut rng = stream(exp.seed, trial, role::SELLER + i as u64);
        let honest = exp.model.honest_report(i, &world.signals_in_order(i, order.as_slice()))?;
        let report = seller_report(&honest, strategy, &mut rng)?;
        aligned.push(realign(&report, order));
    }
    Ok(pay_vector_multi(&aligned, &exp.params)?)
}

/// Puts a report given in assigned order back into question order.
fn realign(report: &ReportVector, order: &QuestionOrder) -> ReportVector {
    let mut inverse = vec![0; order.len()];
    for (pos, &q) in order.as_slice().iter().enumerate() {
        inverse[q] = pos;
    }
    report.reorder(&inverse)
}

/// Monte Carlo mean and standard error of each seller's payment.
pub fn estimate_payment(exp: &PaymentExperiment, exec: Execution) -> Result<Vec<Estimate>, SimError> {
    if exp.trials < MIN_TRIALS {
        return Err(SimError::TooFewTrials { min: MIN_TRIALS, got: exp.trials });
    }
    if exp.profile.len() != exp.model.sellers() {
        return Err(SimError::InvalidConfig("profile and model disagree on the number of sellers"));
    }
    let samples = map_trials(exec, exp.trials, |t| sample_payments(exp, t))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok((0..exp.profile.len())
        .map(|i| Estimate::from_samples(&samples.iter().map(|s| s[i].to_f64()).collect::<Vec<_>>()))
        .collect())
}

/// A named profile and its per-seller estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEstimate {
    pub name: String,
    pub profile: Vec<Strategy>,
    pub share_orders: bool,
    pub per_seller: Vec<Estimate>,
}

/// One pass/fail property with a human-readable detail line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }
}

/// Margin, in standard errors, used by every statistical check.
pub const SIGMA_MARGIN: f64 = 3.0;

fn profile(
    name: &str,
    strategies: Vec<Strategy>,
    base: &PaymentExperiment,
    share_orders: bool,
    exec: Execution,
) -> Result<ProfileEstimate, SimError> {
    let exp = PaymentExperiment { profile: strategies.clone(), share_orders, ..base.clone() };
    Ok(ProfileEstimate {
        name: name.to_owned(),
        profile: strategies,
        share_orders,
        per_seller: estimate_payment(&exp, exec)?,
    })
}

/// Truthful reporting against signal-independent and relabelled profiles,
/// scored by the first seller's MIG (`PayFunc = MIG`).
pub fn truthfulness_suite(
    model: &SignalModel,
    tasks: usize,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<(Vec<ProfileEstimate>, Vec<Check>), SimError> {
    let n = model.sellers();
    let base = PaymentExperiment::mig(vec![Strategy::Truthful; n], model.clone(), tasks, trials, seed);
    let k = model.alphabet() as u8;
    let swap: Vec<u8> = (0..k).map(|x| (x + 1) % k).collect();
    let all = |s: Strategy| vec![s; n];
    let truthful = profile("truthful", all(Strategy::Truthful), &base, false, exec)?;
    let others = [
        ("constant", all(Strategy::ConstantReport { symbol: 0 })),
        ("uniform_random", all(Strategy::UniformRandom)),
        ("order_collusion", all(Strategy::order_collusion())),
    ]
    .into_iter()
    .map(|(name, p)| profile(name, p, &base, false, exec))
    .collect::<Result<Vec<_>, _>>()?;
    let permuted = profile("permutation", all(Strategy::Permutation { sigma: swap }), &base, false, exec)?;

    let t = truthful.per_seller[0];
    let mut checks: Vec<Check> = others
        .iter()
        .map(|o| {
            let e = o.per_seller[0];
            Check::new(
                format!("truthful > {}", o.name),
                t.exceeds(&e, SIGMA_MARGIN),
                format!("{:.4} vs {:.4} (diff stderr {:.4})", t.mean, e.mean, t.diff_stderr(&e)),
            )
        })
        .collect();
    let p = permuted.per_seller[0];
    checks.push(Check::new(
        "permutation ≈ truthful",
        p.agrees_with(&t, SIGMA_MARGIN),
        format!("{:.4} vs {:.4}", p.mean, t.mean),
    ));
    let closed_form = model.truthful_corr_mig(0, 1);
    checks.push(Check::new(
        "truthful MIG ≈ closed form",
        t.contains(closed_form, SIGMA_MARGIN),
        format!("{:.4} ± {:.4} vs {:.4}", t.mean, t.stderr, closed_form),
    ));
    let mut estimates = vec![truthful];
    estimates.extend(others);
    estimates.push(permuted);
    Ok((estimates, checks))
}

/// Position-based collusion with and without a shared question order.
pub fn collusion_suite(
    model: &SignalModel,
    tasks: usize,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<(Vec<ProfileEstimate>, Vec<Check>), SimError> {
    let n = model.sellers();
    let base = PaymentExperiment::mig(vec![Strategy::Truthful; n], model.clone(), tasks, trials, seed);
    let collude = vec![Strategy::order_collusion(); n];
    let independent = profile("collusion_independent_orders", collude.clone(), &base, false, exec)?;
    let shared = profile("collusion_shared_orders", collude, &base, true, exec)?;
    let (i, s) = (independent.per_seller[0], shared.per_seller[0]);
    let checks = vec![
        Check::new(
            "collusion ≈ 0 with independent orders",
            i.contains(0.0, SIGMA_MARGIN),
            format!("{:.4} ± {:.4}", i.mean, i.stderr),
        ),
        Check::new(
            "collusion > 0 with shared orders",
            s.mean > SIGMA_MARGIN * s.stderr,
            format!("{:.4} ± {:.4}", s.mean, s.stderr),
        ),
    ];
    Ok((vec![independent, shared], checks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payment::ReportKind;

    fn model() -> SignalModel {
        SignalModel::binary(ReportKind::Signal, 0.2).unwrap()
    }

    fn est(profile: Vec<Strategy>, trials: usize) -> Vec<Estimate> {
        let exp = PaymentExperiment::mig(profile, model(), 10, trials, 3);
        estimate_payment(&exp, Execution::Parallel).unwrap()
    }

    #[test]
    fn too_few_trials_is_rejected() {
        let exp = PaymentExperiment::mig(vec![Strategy::Truthful; 2], model(), 10, 99, 0);
        assert!(matches!(estimate_payment(&exp, Execution::Sequential), Err(SimError::TooFewTrials { .. })));
    }

    #[test]
    fn equal_constants_score_exactly_zero() {
        let e = est(vec![Strategy::ConstantReport { symbol: 1 }; 2], 200);
        assert_eq!(e[0].mean, 0.0);
        assert_eq!(e[0].stderr, 0.0);
    }

    #[test]
    fn truthful_matches_closed_form() {
        let e = est(vec![Strategy::Truthful; 2], 4000);
        assert!(e[0].contains(0.18, 3.0), "{:?}", e[0]);
        assert_eq!(e[0], e[1]);
    }

    #[test]
    fn truthful_against_random_is_zero() {
        let e = est(vec![Strategy::Truthful, Strategy::UniformRandom], 4000);
        assert!(e[0].contains(0.0, 3.0), "{:?}", e[0]);
    }

    #[test]
    fn realign_inverts_the_assignment() {
        let order = QuestionOrder::new(vec![2, 0, 1]).unwrap();
        let in_order = ReportVector::signals(3, vec![2, 0, 1]).unwrap();
        assert_eq!(realign(&in_order, &order), ReportVector::signals(3, vec![0, 1, 2]).unwrap());
    }

    #[test]
    fn execution_modes_agree() {
        let exp = PaymentExperiment::mig(vec![Strategy::UniformRandom, Strategy::Truthful], model(), 8, 300, 9);
        assert_eq!(
            estimate_payment(&exp, Execution::Sequential).unwrap(),
            estimate_payment(&exp, Execution::Parallel).unwrap()
        );
    }
}
