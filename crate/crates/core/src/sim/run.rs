use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::config::{role, stream};
use super::{map_trials, Execution, ScenarioConfig, SimError};
use crate::contract::{
    ContractState, ContractTerms, IncorrectGoodReason, LedgerEvent, Outcome, Party, RebuttalEvidence, Stage,
};
use crate::mpc::{evaluate, Transcript};
use crate::payment::EncodedPayment;
use crate::ro::{decrypt, open_commitment, OracleTable, SessionId};
use crate::traders::{
    buyer_assign, buyer_check_goods, buyer_rebuttal_decision, seller_package, seller_report, BuyerStrategy,
    QuestionSet, SellerGoods,
};

/// A trader's final position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyBalance {
    pub party: Party,
    pub deposit: i64,
    pub balance: i64,
    pub net_transfer: i64,
}

/// Everything one protocol run produced. The `packages` field is private
/// seller data kept for auditing; it is never part of `events`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTranscript {
    pub seed: u64,
    pub trial: u64,
    pub oracle_seed: u64,
    pub events: Vec<LedgerEvent>,
    pub outcome: Outcome,
    pub verdict: Option<IncorrectGoodReason>,
    pub balances: Vec<PartyBalance>,
    pub sink: i64,
    /// The payment vector the contract accepted, if the sellers agreed.
    pub payments: Option<Vec<EncodedPayment>>,
    /// The evaluator's output before any coalition misreport.
    pub computed: Option<Vec<EncodedPayment>>,
    pub mpc: Option<Transcript>,
    pub packages: Vec<String>,
}

impl RunTranscript {
    pub fn net_transfer(&self, p: Party) -> i64 {
        self.balances.iter().find(|b| b.party == p).map_or(0, |b| b.net_transfer)
    }

    /// Public events up to, not including, the one that reveals the keys.
    pub fn events_before_reveal(&self) -> &[LedgerEvent] {
        let end = self
            .events
            .iter()
            .position(|e| e.stage_after == Stage::KeysRevealed)
            .unwrap_or(self.events.len());
        &self.events[..end]
    }

    pub fn package_bytes(&self) -> Vec<Vec<u8>> {
        self.packages.iter().map(|h| hex::decode(h).expect("hex written by the runner")).collect()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("transcript serializes")
    }
}

/// Runs trial 0 of the scenario.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunTranscript, SimError> {
    config.validate()?;
    Ok(run_trial(config, 0))
}

/// Runs trials `0..config.trials`.
pub fn run_batch(config: &ScenarioConfig, exec: Execution) -> Result<Vec<RunTranscript>, SimError> {
    config.validate()?;
    Ok(map_trials(exec, config.trials, |t| run_trial(config, t)))
}

/// One protocol execution. Protocol failures show up as outcomes; the
/// config is assumed valid.
pub(crate) fn run_trial(config: &ScenarioConfig, trial: u64) -> RunTranscript {
    let mut run = Run::new(config, trial);
    run.execute();
    run.finish()
}

struct Run<'a> {
    config: &'a ScenarioConfig,
    trial: u64,
    oracle_seed: u64,
    oracle: OracleTable,
    session: SessionId,
    state: ContractState,
    goods: Vec<SellerGoods>,
    computed: Option<Vec<EncodedPayment>>,
    mpc: Option<Transcript>,
}

impl<'a> Run<'a> {
    fn new(config: &'a ScenarioConfig, trial: u64) -> Self {
        let oracle_seed = stream(config.seed, trial, role::ORACLE).next_u64();
        let session = SessionId(trial);
        let n = config.sellers.len();
        let terms = ContractTerms {
            params: config.payment.clone(),
            evaluator: config.evaluator,
            sellers: n,
            con_cost: config.costs.con_cost,
            reb_cost: config.costs.reb_cost,
            deadlines: config.deadlines,
        };
        let submissions: Vec<_> = std::iter::once(Party::Buyer)
            .chain((0..n).map(Party::Seller))
            .map(|p| (p, terms.clone()))
            .collect();
        let state = ContractState::sign(&submissions, &config.costs.deposits(), session)
            .expect("validated config signs");
        Run {
            config,
            trial,
            oracle_seed,
            oracle: OracleTable::new(oracle_seed),
            session,
            state,
            goods: Vec::new(),
            computed: None,
            mpc: None,
        }
    }

    /// Lets the current stage's deadline pass.
    fn expire(&mut self) {
        if let Some(deadline) = self.state.deadline() {
            self.state.advance_clock(deadline.saturating_sub(self.state.clock()));
        }
    }

    fn execute(&mut self) {
        let cfg = self.config;
        let n = cfg.sellers.len();
        let (seed, trial, session) = (cfg.seed, self.trial, self.session);
        let mut world_rng = stream(seed, trial, role::WORLD);
        let mut buyer_rng = stream(seed, trial, role::BUYER);
        let mut mpc_rng = stream(seed, trial, role::MPC);
        let mut seller_rngs: Vec<_> = (0..n as u64).map(|i| stream(seed, trial, role::SELLER + i)).collect();

        let world = cfg.model.sample_world(cfg.tasks, &mut world_rng).expect("validated model");
        let questions = QuestionSet::numbered(cfg.tasks).expect("at least two tasks");
        let Ok(assignment) =
            buyer_assign(&questions, n, cfg.share_orders, &mut self.oracle, session, &mut buyer_rng)
        else {
            self.expire();
            return;
        };
        self.state
            .record_question_commitments(&assignment.commitments)
            .expect("stage is Signed");
        self.state.advance_clock(1);

        // answer submission
        for i in 0..n {
            let assigned = &assignment.assigned[i];
            let accepted = open_commitment(
                &mut self.oracle,
                &assignment.commitments[i],
                &assignment.openings[i],
                &assigned.to_bytes(),
                session,
            );
            if !accepted {
                self.state.rescind(Party::Seller(i)).expect("rescind before answers");
                return;
            }
            let signals = world.signals_in_order(i, assignment.orders[i].as_slice());
            let strategy = &cfg.sellers[i];
            let rng = &mut seller_rngs[i];
            let goods = cfg
                .model
                .honest_report(i, &signals)
                .and_then(|honest| seller_report(&honest, strategy, rng))
                .and_then(|report| seller_package(assigned, &report, strategy, &mut self.oracle, session, rng));
            let Ok(goods) = goods else {
                self.expire();
                return;
            };
            self.state
                .record_answer_commitments(Party::Seller(i), goods.ciphertext_commitment, goods.key_commitment)
                .expect("stage is QuestionsCommitted");
            self.goods.push(goods);
        }
        for i in 0..n {
            let (enc_com, _) = self.state.answer_commitments(i).expect("all answers committed");
            let g = &self.goods[i];
            if !open_commitment(&mut self.oracle, &enc_com, &g.ciphertext_opening, &g.ciphertext.to_bytes(), session) {
                self.state.rescind(Party::Buyer).expect("rescind before payments");
                return;
            }
        }
        self.state.advance_clock(1);

        // payment computation
        let aligned: Vec<_> = self.goods.iter().map(|g| g.package.aligned_reports()).collect();
        let evaluation = match evaluate(cfg.evaluator, &aligned, &cfg.payment, &mut mpc_rng) {
            Ok(e) => e,
            Err(_) => {
                self.expire();
                return;
            }
        };
        let computed: Vec<EncodedPayment> = evaluation.payments.iter().map(|p| p.encode()).collect();
        let vals: Vec<EncodedPayment> = computed
            .iter()
            .zip(&cfg.sellers)
            .map(|(v, s)| v.shifted(s.val_shift()))
            .collect();
        self.computed = Some(computed);
        self.mpc = evaluation.transcript;
        for i in 0..n {
            self.state
                .submit_payment_outputs(Party::Seller(i), &vals)
                .expect("stage is AnswersCommitted");
        }
        self.state.advance_clock(1);

        // key reveal
        for i in 0..n {
            if let Some((key, opening)) = self.goods[i].key_submission(&cfg.sellers[i]) {
                self.state
                    .submit_keys(&mut self.oracle, Party::Seller(i), key, opening)
                    .expect("stage is PaymentReported");
            }
        }
        match self.state.stage() {
            Stage::KeysRevealed => {}
            Stage::Closed => return,
            _ => {
                self.expire();
                return;
            }
        }
        self.state.advance_clock(1);

        // the buyer checks the goods and decides whether to rebut
        let decrypted: Vec<Option<Vec<u8>>> = (0..n)
            .map(|i| {
                let (key, _) = self.state.revealed_key(i)?;
                decrypt(&mut self.oracle, &key, &self.goods[i].ciphertext, session).ok()
            })
            .collect();
        let committed_ids: Vec<Vec<u32>> = assignment.assigned.iter().map(QuestionSet::ids).collect();
        let reason = buyer_check_goods(&decrypted, &committed_ids, &vals, &cfg.payment, cfg.evaluator);
        let rebut = match cfg.buyer {
            BuyerStrategy::Rational => {
                let mut costs = cfg.costs.clone();
                costs.val_estimate = vals.iter().map(|v| v.currency_units()).sum();
                buyer_rebuttal_decision(reason, &costs)
            }
            BuyerStrategy::AlwaysRebut => true,
            BuyerStrategy::NeverRebut => false,
        };
        if rebut {
            let evidence: Vec<Option<RebuttalEvidence>> = (0..n)
                .map(|i| {
                    Some(RebuttalEvidence {
                        ciphertext: self.goods[i].ciphertext.clone(),
                        ciphertext_opening: self.goods[i].ciphertext_opening,
                        questions: assignment.assigned[i].to_bytes(),
                        questions_opening: assignment.openings[i],
                    })
                })
                .collect();
            self.state
                .raise_rebuttal(&mut self.oracle, &evidence)
                .expect("stage is KeysRevealed");
        } else {
            self.expire();
        }
    }

    fn finish(self) -> RunTranscript {
        let n = self.config.sellers.len();
        let balances = std::iter::once(Party::Buyer)
            .chain((0..n).map(Party::Seller))
            .map(|p| PartyBalance {
                party: p,
                deposit: self.state.deposit(p),
                balance: self.state.balance(p),
                net_transfer: self.state.net_transfer(p),
            })
            .collect();
        RunTranscript {
            seed: self.config.seed,
            trial: self.trial,
            oracle_seed: self.oracle_seed,
            events: self.state.events().to_vec(),
            outcome: self.state.outcome(),
            verdict: self.state.verdict(),
            balances,
            sink: self.state.sink(),
            payments: self.state.reported_vals().map(<[_]>::to_vec),
            computed: self.computed,
            mpc: self.mpc,
            packages: self.goods.iter().map(|g| hex::encode(&g.bytes)).collect(),
        }
    }
}
