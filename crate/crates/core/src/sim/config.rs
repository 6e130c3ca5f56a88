use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::contract::{CostModel, Deadlines};
use crate::mpc::EvaluatorKind;
use crate::payment::{MigKind, PaymentParams, ReportKind};
use crate::traders::{BuyerStrategy, SignalModel, Strategy};

/// One protocol scenario: world model, contract terms and every party's
/// strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub tasks: usize,
    pub model: SignalModel,
    pub payment: PaymentParams,
    pub costs: CostModel,
    #[serde(default)]
    pub evaluator: EvaluatorKind,
    /// One strategy per seller.
    pub sellers: Vec<Strategy>,
    #[serde(default)]
    pub buyer: BuyerStrategy,
    /// All sellers receive the same question order.
    #[serde(default)]
    pub share_orders: bool,
    /// Must stay `false`: nobody transfers money after the contract closes.
    #[serde(default)]
    pub allow_post_transfer: bool,
    #[serde(default)]
    pub deadlines: Deadlines,
    #[serde(default = "one")]
    pub trials: usize,
}

fn one() -> usize {
    1
}

impl ScenarioConfig {
    /// Two honest sellers, ten binary questions, `ε = 0.2`, `PayFunc = 100·MIG + 10`.
    pub fn honest() -> Self {
        Self::honest_with(2)
    }

    /// The honest scenario with `sellers` sellers.
    pub fn honest_with(sellers: usize) -> Self {
        ScenarioConfig {
            seed: 42,
            tasks: 10,
            model: SignalModel::binary_sellers(ReportKind::Signal, 0.2, sellers).expect("valid default model"),
            payment: PaymentParams::corr(100, 10).expect("valid default params"),
            costs: CostModel {
                con_cost: 1,
                reb_cost: 2,
                pri_cost_buyer: 3,
                pri_cost_sellers: vec![5; sellers],
                mpc_cost: 1,
                attack_cost: 1_000_000,
                dep_buyer: 150 * sellers as i64,
                dep_sellers: vec![150; sellers],
                val_estimate: 110 * sellers as i64,
            },
            evaluator: EvaluatorKind::Trusted,
            sellers: vec![Strategy::Truthful; sellers],
            buyer: BuyerStrategy::Rational,
            share_orders: false,
            allow_post_transfer: false,
            deadlines: Deadlines::default(),
            trials: 1,
        }
    }

    pub fn with_strategy(mut self, seller: usize, strategy: Strategy) -> Self {
        self.sellers[seller] = strategy;
        self
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let config: ScenarioConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let n = self.sellers.len();
        let fail = |msg: &'static str| Err(SimError::InvalidConfig(msg));
        if n < 2 {
            return fail("at least two sellers");
        }
        if self.model.sellers() != n || self.costs.sellers() != n {
            return fail("model, costs and strategies disagree on the number of sellers");
        }
        if self.tasks < 2 {
            return fail("at least two tasks");
        }
        if self.trials == 0 {
            return fail("trial count must be at least one");
        }
        if self.allow_post_transfer {
            return fail("post-contract transfers are not allowed");
        }
        if self.model.kind() != self.payment.report_kind() {
            return fail("signal model kind does not match the payment score");
        }
        if let MigKind::Pearson { prior } = &self.payment.mig {
            if prior != self.model.prior() {
                return fail("payment prior differs from the model prior");
            }
        }
        let k = self.model.alphabet();
        for s in &self.sellers {
            let ok = match s {
                Strategy::Permutation { sigma } => sigma.len() == k,
                Strategy::ConstantReport { symbol } => (*symbol as usize) < k,
                Strategy::OrderCollusion { even, odd } => (*even as usize) < k && (*odd as usize) < k,
                _ => true,
            };
            if !ok {
                return fail("strategy symbols do not fit the alphabet");
            }
        }
        self.costs.validate()?;
        Ok(())
    }
}

pub(crate) mod role {
    pub const WORLD: u64 = 0;
    pub const BUYER: u64 = 1;
    pub const MPC: u64 = 2;
    pub const ORACLE: u64 = 3;
    pub const SELLER: u64 = 16;
}

/// The RNG stream of one role within one trial: the key is derived from
/// `(seed, trial)` and the ChaCha stream id selects the role.
pub(crate) fn stream(seed: u64, trial: u64, role: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(role);
    rng
}
