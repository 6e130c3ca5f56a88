use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{classify_good, ContractError, Deposits, IncorrectGoodReason};
use crate::mpc::EvaluatorKind;
use crate::payment::{EncodedPayment, PaymentParams};
use crate::ro::{decrypt, open_commitment, Ciphertext, Commitment, Opening, RandomOracle, SecretKey, SessionId};
use crate::traders::QuestionSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Buyer,
    Seller(usize),
}

/// Ledger accounts: the traders plus the sink that absorbs contract costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Account {
    Buyer,
    Seller(usize),
    Sink,
}

impl From<Party> for Account {
    fn from(p: Party) -> Self {
        match p {
            Party::Buyer => Account::Buyer,
            Party::Seller(i) => Account::Seller(i),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Signed,
    QuestionsCommitted,
    AnswersCommitted,
    PaymentReported,
    KeysRevealed,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pending,
    Transacted,
    SellersConfiscated,
    AllToBuyer,
    RebuttalFailed,
    RebuttalSucceeded,
    /// Terminated before any payment was computed; deposits return minus costs.
    Rescinded,
}

/// Tick budget for each waiting stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Deadlines {
    pub questions: u64,
    pub answers: u64,
    pub payment: u64,
    pub keys: u64,
    pub rebuttal: u64,
}

impl Default for Deadlines {
    fn default() -> Self {
        Deadlines { questions: 10, answers: 10, payment: 10, keys: 10, rebuttal: 10 }
    }
}

impl Deadlines {
    fn budget(&self, stage: Stage) -> Option<u64> {
        match stage {
            Stage::Signed => Some(self.questions),
            Stage::QuestionsCommitted => Some(self.answers),
            Stage::AnswersCommitted => Some(self.payment),
            Stage::PaymentReported => Some(self.keys),
            Stage::KeysRevealed => Some(self.rebuttal),
            Stage::Closed => None,
        }
    }
}

/// What every trader agrees to at signing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractTerms {
    pub params: PaymentParams,
    pub evaluator: EvaluatorKind,
    pub sellers: usize,
    pub con_cost: i64,
    pub reb_cost: i64,
    #[serde(default)]
    pub deadlines: Deadlines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Sign,
    RecordQuestionCommitments,
    RecordAnswerCommitments,
    SubmitPaymentOutputs,
    SubmitKeys,
    RaiseRebuttal,
    Rescind,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerDelta {
    pub account: Account,
    pub balance: i64,
    pub frozen: i64,
}

/// One public transition of the contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEvent {
    pub tick: u64,
    pub operation: Operation,
    pub party: Option<Party>,
    pub stage_before: Stage,
    pub stage_after: Stage,
    pub ledger_delta: Vec<LedgerDelta>,
    pub payload: Value,
    /// Sum of balances, frozen deposits and the sink after this event.
    pub ledger_total: i64,
}

/// What the buyer posts per seller to back a rebuttal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RebuttalEvidence {
    pub ciphertext: Ciphertext,
    pub ciphertext_opening: Opening,
    #[serde(with = "hex::serde")]
    pub questions: Vec<u8>,
    pub questions_opening: Opening,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractState {
    terms: ContractTerms,
    session: SessionId,
    stage: Stage,
    outcome: Outcome,
    deposits: Deposits,
    /// Index 0 is the buyer, `1 + i` seller `i`.
    balances: Vec<i64>,
    frozen: Vec<i64>,
    sink: i64,
    question_commitments: Vec<Commitment>,
    answer_commitments: Vec<Option<(Commitment, Commitment)>>,
    payment_submissions: Vec<Option<Vec<EncodedPayment>>>,
    reported_vals: Option<Vec<EncodedPayment>>,
    revealed_keys: Vec<Option<(SecretKey, Opening)>>,
    verdict: Option<IncorrectGoodReason>,
    clock: u64,
    stage_started: u64,
    events: Vec<LedgerEvent>,
}

fn slot(p: Party) -> usize {
    match p {
        Party::Buyer => 0,
        Party::Seller(i) => 1 + i,
    }
}

impl ContractState {
    /// Forms the contract if every trader submitted identical terms and a
    /// positive deposit. Each trader's opening balance is her deposit, which
    /// is then frozen.
    pub fn sign(
        submissions: &[(Party, ContractTerms)],
        deposits: &Deposits,
        session: SessionId,
    ) -> Result<Self, ContractError> {
        let Some((_, terms)) = submissions.iter().find(|(p, _)| *p == Party::Buyer) else {
            return Err(ContractError::MissingSignatures);
        };
        let n = terms.sellers;
        if n < 2 {
            return Err(ContractError::MissingSignatures);
        }
        if submissions.iter().any(|(_, t)| t != terms) {
            return Err(ContractError::InconsistentTerms);
        }
        let mut signed = vec![false; n + 1];
        for (p, _) in submissions {
            match signed.get_mut(slot(*p)) {
                Some(s) => *s = true,
                None => return Err(ContractError::UnknownParty(*p)),
            }
        }
        if signed.contains(&false) {
            return Err(ContractError::MissingSignatures);
        }
        if deposits.sellers.len() != n {
            return Err(ContractError::WrongCount { expected: n, got: deposits.sellers.len() });
        }
        if deposits.buyer <= 0 {
            return Err(ContractError::NonPositiveDeposit(Party::Buyer));
        }
        if let Some(i) = deposits.sellers.iter().position(|&d| d <= 0) {
            return Err(ContractError::NonPositiveDeposit(Party::Seller(i)));
        }
        let opening: Vec<i64> = std::iter::once(deposits.buyer).chain(deposits.sellers.iter().copied()).collect();
        let mut state = ContractState {
            terms: terms.clone(),
            session,
            stage: Stage::Signed,
            outcome: Outcome::Pending,
            deposits: deposits.clone(),
            balances: opening.clone(),
            frozen: vec![0; n + 1],
            sink: 0,
            question_commitments: Vec::new(),
            answer_commitments: vec![None; n],
            payment_submissions: vec![None; n],
            reported_vals: None,
            revealed_keys: vec![None; n],
            verdict: None,
            clock: 0,
            stage_started: 0,
            events: Vec::new(),
        };
        let deltas = state
            .parties()
            .zip(&opening)
            .map(|(p, &d)| LedgerDelta { account: p.into(), balance: -d, frozen: d })
            .collect();
        let payload = json!({ "terms": state.terms, "deposits": state.deposits });
        state.emit(Operation::Sign, None, Stage::Signed, deltas, payload);
        Ok(state)
    }

    pub fn terms(&self) -> &ContractTerms {
        &self.terms
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn sellers(&self) -> usize {
        self.terms.sellers
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    pub fn verdict(&self) -> Option<IncorrectGoodReason> {
        self.verdict
    }

    pub fn reported_vals(&self) -> Option<&[EncodedPayment]> {
        self.reported_vals.as_deref()
    }

    pub fn question_commitments(&self) -> &[Commitment] {
        &self.question_commitments
    }

    pub fn answer_commitments(&self, seller: usize) -> Option<(Commitment, Commitment)> {
        self.answer_commitments.get(seller).copied().flatten()
    }

    pub fn revealed_key(&self, seller: usize) -> Option<(SecretKey, Opening)> {
        self.revealed_keys.get(seller).copied().flatten()
    }

    pub fn balance(&self, p: Party) -> i64 {
        self.balances[slot(p)]
    }

    pub fn frozen(&self, p: Party) -> i64 {
        self.frozen[slot(p)]
    }

    pub fn sink(&self) -> i64 {
        self.sink
    }

    pub fn deposit(&self, p: Party) -> i64 {
        match p {
            Party::Buyer => self.deposits.buyer,
            Party::Seller(i) => self.deposits.sellers[i],
        }
    }

    /// Final balance minus the deposit the trader brought.
    pub fn net_transfer(&self, p: Party) -> i64 {
        self.balance(p) - self.deposit(p)
    }

    /// Balances plus frozen deposits plus the sink.
    pub fn ledger_total(&self) -> i64 {
        self.balances.iter().sum::<i64>() + self.frozen.iter().sum::<i64>() + self.sink
    }

    /// The tick at which the current stage times out.
    pub fn deadline(&self) -> Option<u64> {
        self.terms.deadlines.budget(self.stage).map(|b| self.stage_started + b)
    }

    fn parties(&self) -> impl Iterator<Item = Party> {
        std::iter::once(Party::Buyer).chain((0..self.terms.sellers).map(Party::Seller))
    }

    fn require(&self, stage: Stage) -> Result<(), ContractError> {
        if self.stage == stage {
            Ok(())
        } else {
            Err(ContractError::WrongStage(self.stage))
        }
    }

    fn seller_index(&self, p: Party) -> Result<usize, ContractError> {
        match p {
            Party::Seller(i) if i < self.terms.sellers => Ok(i),
            _ => Err(ContractError::UnknownParty(p)),
        }
    }

    fn emit(&mut self, operation: Operation, party: Option<Party>, stage_after: Stage, deltas: Vec<LedgerDelta>, payload: Value) {
        let stage_before = self.stage;
        for d in &deltas {
            match d.account {
                Account::Sink => self.sink += d.balance,
                Account::Buyer => {
                    self.balances[0] += d.balance;
                    self.frozen[0] += d.frozen;
                }
                Account::Seller(i) => {
                    self.balances[1 + i] += d.balance;
                    self.frozen[1 + i] += d.frozen;
                }
            }
        }
        if stage_after != stage_before {
            self.stage_started = self.clock;
        }
        self.stage = stage_after;
        self.events.push(LedgerEvent {
            tick: self.clock,
            operation,
            party,
            stage_before,
            stage_after,
            ledger_delta: deltas,
            payload,
            ledger_total: self.ledger_total(),
        });
    }

    /// Releases every frozen deposit according to `outcome`; whatever is not
    /// credited to a trader goes to the sink.
    fn close(&mut self, operation: Operation, party: Option<Party>, outcome: Outcome, payload: Value) {
        let n = self.terms.sellers as i64;
        let c = self.terms.con_cost;
        let reb = self.terms.reb_cost;
        let d_b = self.deposits.buyer;
        let d_s = &self.deposits.sellers;
        let pool = d_b + d_s.iter().sum::<i64>();
        let credits: Vec<i64> = match outcome {
            Outcome::Transacted => {
                let pay: Vec<i64> = self
                    .reported_vals
                    .as_ref()
                    .expect("values reported before transacting")
                    .iter()
                    .map(|v| v.currency_units())
                    .collect();
                std::iter::once(d_b - pay.iter().sum::<i64>() - c)
                    .chain(d_s.iter().zip(&pay).map(|(d, p)| d + p - c))
                    .collect()
            }
            Outcome::SellersConfiscated => std::iter::once(d_b - c).chain(d_s.iter().map(|_| 0)).collect(),
            Outcome::AllToBuyer => std::iter::once(pool - (n + 1) * c).chain(d_s.iter().map(|_| 0)).collect(),
            Outcome::RebuttalSucceeded => {
                std::iter::once(pool - (n + 1) * c - reb).chain(d_s.iter().map(|_| 0)).collect()
            }
            Outcome::RebuttalFailed => {
                let share = (pool - (n + 1) * c - reb).div_euclid(n);
                std::iter::once(0).chain(d_s.iter().map(|_| share)).collect()
            }
            Outcome::Rescinded => std::iter::once(d_b - c).chain(d_s.iter().map(|d| d - c)).collect(),
            Outcome::Pending => unreachable!("closing requires a terminal outcome"),
        };
        let released: i64 = self.frozen.iter().sum();
        let mut deltas: Vec<LedgerDelta> = self
            .parties()
            .zip(&credits)
            .map(|(p, &credit)| LedgerDelta { account: p.into(), balance: credit, frozen: -self.frozen(p) })
            .collect();
        deltas.push(LedgerDelta { account: Account::Sink, balance: released - credits.iter().sum::<i64>(), frozen: 0 });
        self.outcome = outcome;
        let mut payload = payload;
        payload["outcome"] = json!(outcome);
        self.emit(operation, party, Stage::Closed, deltas, payload);
    }

    /// The buyer's commitments to each seller's permuted question set.
    pub fn record_question_commitments(&mut self, commitments: &[Commitment]) -> Result<(), ContractError> {
        if self.stage == Stage::QuestionsCommitted {
            return Err(ContractError::Duplicate(Party::Buyer));
        }
        self.require(Stage::Signed)?;
        if commitments.len() != self.terms.sellers {
            return Err(ContractError::WrongCount { expected: self.terms.sellers, got: commitments.len() });
        }
        self.question_commitments = commitments.to_vec();
        let payload = json!({ "question_commitments": commitments });
        self.emit(Operation::RecordQuestionCommitments, Some(Party::Buyer), Stage::QuestionsCommitted, Vec::new(), payload);
        Ok(())
    }

    /// A seller's commitments to her ciphertext and key. The stage advances
    /// once every seller has submitted.
    pub fn record_answer_commitments(
        &mut self,
        seller: Party,
        ciphertext_commitment: Commitment,
        key_commitment: Commitment,
    ) -> Result<(), ContractError> {
        let i = self.seller_index(seller)?;
        if self.stage == Stage::AnswersCommitted || self.answer_commitments[i].is_some() {
            return Err(ContractError::Duplicate(seller));
        }
        self.require(Stage::QuestionsCommitted)?;
        self.answer_commitments[i] = Some((ciphertext_commitment, key_commitment));
        let next = if self.answer_commitments.iter().all(Option::is_some) {
            Stage::AnswersCommitted
        } else {
            self.stage
        };
        let payload = json!({ "ciphertext_commitment": ciphertext_commitment, "key_commitment": key_commitment });
        self.emit(Operation::RecordAnswerCommitments, Some(seller), next, Vec::new(), payload);
        Ok(())
    }

    /// A seller posts the payment vector she computed. Resubmission replaces
    /// her earlier vector. The stage advances when all vectors agree.
    pub fn submit_payment_outputs(&mut self, seller: Party, vals: &[EncodedPayment]) -> Result<(), ContractError> {
        let i = self.seller_index(seller)?;
        self.require(Stage::AnswersCommitted)?;
        if vals.len() != self.terms.sellers {
            return Err(ContractError::WrongCount { expected: self.terms.sellers, got: vals.len() });
        }
        self.payment_submissions[i] = Some(vals.to_vec());
        let first = self.payment_submissions[0].as_ref();
        let agreed = first.is_some() && self.payment_submissions.iter().all(|s| s.as_ref() == first);
        let next = if agreed {
            self.reported_vals = first.cloned();
            Stage::PaymentReported
        } else {
            self.stage
        };
        let payload = json!({ "vals": vals });
        self.emit(Operation::SubmitPaymentOutputs, Some(seller), next, Vec::new(), payload);
        Ok(())
    }

    /// A seller reveals her key and its opening. Once all keys are in, each is
    /// checked against its commitment.
    pub fn submit_keys<O: RandomOracle + ?Sized>(
        &mut self,
        oracle: &mut O,
        seller: Party,
        key: SecretKey,
        opening: Opening,
    ) -> Result<(), ContractError> {
        let i = self.seller_index(seller)?;
        self.require(Stage::PaymentReported)?;
        if self.revealed_keys[i].is_some() {
            return Err(ContractError::Duplicate(seller));
        }
        self.revealed_keys[i] = Some((key, opening));
        let payload = json!({ "key": key, "opening": opening });
        if self.revealed_keys.iter().any(Option::is_none) {
            self.emit(Operation::SubmitKeys, Some(seller), self.stage, Vec::new(), payload);
            return Ok(());
        }
        let session = self.session;
        let all_open = self.revealed_keys.iter().zip(&self.answer_commitments).all(|(k, c)| {
            let ((key, op), (_, key_com)) = (k.expect("all keys present"), c.expect("answers committed"));
            open_commitment(oracle, &key_com, &op, key.as_bytes(), session)
        });
        if all_open {
            self.emit(Operation::SubmitKeys, Some(seller), Stage::KeysRevealed, Vec::new(), payload);
        } else {
            self.close(Operation::SubmitKeys, Some(seller), Outcome::AllToBuyer, payload);
        }
        Ok(())
    }

    /// Either side terminates before payment computation (a failed
    /// commitment check during assignment or answer submission).
    pub fn rescind(&mut self, party: Party) -> Result<(), ContractError> {
        let allowed = match self.stage {
            Stage::Signed | Stage::QuestionsCommitted => true,
            Stage::AnswersCommitted => self.payment_submissions.iter().all(Option::is_none),
            _ => false,
        };
        if !allowed {
            return Err(ContractError::WrongStage(self.stage));
        }
        if party != Party::Buyer {
            self.seller_index(party)?;
        }
        self.close(Operation::Rescind, Some(party), Outcome::Rescinded, json!({}));
        Ok(())
    }

    /// Advances logical time, firing the current stage's timeout branch if
    /// its deadline passes.
    pub fn advance_clock(&mut self, ticks: u64) {
        if ticks == 0 || self.stage == Stage::Closed {
            self.clock += ticks;
            return;
        }
        self.clock += ticks;
        let Some(deadline) = self.deadline() else { return };
        if self.clock < deadline {
            return;
        }
        let outcome = match self.stage {
            Stage::Signed | Stage::QuestionsCommitted => Outcome::Rescinded,
            Stage::AnswersCommitted | Stage::PaymentReported => Outcome::SellersConfiscated,
            Stage::KeysRevealed => Outcome::Transacted,
            Stage::Closed => return,
        };
        let payload = json!({ "expired_stage": self.stage, "deadline": deadline });
        self.close(Operation::Timeout, None, outcome, payload);
    }

    /// Adjudicates a buyer's rebuttal from committed data and revealed keys.
    /// `evidence[i]` missing counts as the buyer timing out.
    pub fn raise_rebuttal<O: RandomOracle + ?Sized>(
        &mut self,
        oracle: &mut O,
        evidence: &[Option<RebuttalEvidence>],
    ) -> Result<Outcome, ContractError> {
        self.require(Stage::KeysRevealed)?;
        if evidence.len() != self.terms.sellers {
            return Err(ContractError::WrongCount { expected: self.terms.sellers, got: evidence.len() });
        }
        let reason = self.adjudicate(oracle, evidence);
        self.verdict = reason;
        let outcome = match reason {
            Some(IncorrectGoodReason::None) | None => Outcome::RebuttalFailed,
            Some(_) => Outcome::RebuttalSucceeded,
        };
        let payload = json!({ "evidence": evidence, "verdict": reason });
        self.close(Operation::RaiseRebuttal, Some(Party::Buyer), outcome, payload);
        Ok(outcome)
    }

    /// `None` when the buyer's evidence itself is missing or fails to open.
    fn adjudicate<O: RandomOracle + ?Sized>(
        &self,
        oracle: &mut O,
        evidence: &[Option<RebuttalEvidence>],
    ) -> Option<IncorrectGoodReason> {
        let session = self.session;
        let mut ids = Vec::with_capacity(evidence.len());
        for (i, ev) in evidence.iter().enumerate() {
            let ev = ev.as_ref()?;
            let (enc_com, _) = self.answer_commitments[i]?;
            let checkbit1 = open_commitment(oracle, &enc_com, &ev.ciphertext_opening, &ev.ciphertext.to_bytes(), session);
            let checkbit2 = open_commitment(oracle, &self.question_commitments[i], &ev.questions_opening, &ev.questions, session);
            if !(checkbit1 && checkbit2) {
                return None;
            }
            ids.push(QuestionSet::from_bytes(&ev.questions).ok()?.ids());
        }
        let decrypted: Vec<Option<Vec<u8>>> = evidence
            .iter()
            .flatten()
            .zip(&self.revealed_keys)
            .map(|(ev, k)| {
                let (key, _) = (*k)?;
                decrypt(oracle, &key, &ev.ciphertext, session).ok()
            })
            .collect();
        let vals = self.reported_vals.as_deref().unwrap_or_default();
        Some(classify_good(&decrypted, &ids, vals, &self.terms.params, self.terms.evaluator))
    }
}

#[cfg(test)]
mod tests {
    use num_rational::Rational64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use super::*;
    use crate::contract::{buyer_utilities, CostModel};
    use crate::payment::{pay_vector_multi, ReportVector};
    use crate::ro::OracleTable;
    use crate::traders::{buyer_assign, seller_package, seller_report, Assignment, SellerGoods, Strategy};

    const SESSION: SessionId = SessionId(7);
    const DEP_B: i64 = 50;
    const DEP_S: i64 = 40;
    const CON: i64 = 1;
    const REB: i64 = 2;

    fn terms(n: usize) -> ContractTerms {
        ContractTerms {
            params: PaymentParams::corr(2, 1).unwrap(),
            evaluator: EvaluatorKind::Trusted,
            sellers: n,
            con_cost: CON,
            reb_cost: REB,
            deadlines: Deadlines::default(),
        }
    }

    fn deposits(n: usize) -> Deposits {
        Deposits { buyer: DEP_B, sellers: vec![DEP_S; n] }
    }

    fn signed(n: usize) -> ContractState {
        let subs: Vec<_> = std::iter::once(Party::Buyer)
            .chain((0..n).map(Party::Seller))
            .map(|p| (p, terms(n)))
            .collect();
        ContractState::sign(&subs, &deposits(n), SESSION).unwrap()
    }

    struct Fixture {
        oracle: OracleTable,
        state: ContractState,
        assignment: Assignment,
        goods: Vec<SellerGoods>,
        vals: Vec<EncodedPayment>,
        strategies: Vec<Strategy>,
    }

    /// Runs the protocol up to `AnswersCommitted`.
    fn setup(strategies: Vec<Strategy>) -> Fixture {
        let n = strategies.len();
        let mut oracle = OracleTable::new(99);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let questions = QuestionSet::numbered(6).unwrap();
        let truth_signals: Vec<Vec<u8>> = vec![vec![0, 1, 1, 0, 1, 0], vec![0, 1, 0, 0, 1, 1], vec![1, 1, 0, 0, 1, 0]];
        let mut state = signed(n);
        let assignment = buyer_assign(&questions, n, false, &mut oracle, SESSION, &mut rng).unwrap();
        state.record_question_commitments(&assignment.commitments).unwrap();
        let mut goods = Vec::new();
        let mut aligned = Vec::new();
        for (i, s) in strategies.iter().enumerate() {
            let order = assignment.orders[i].as_slice();
            let own: Vec<u8> = order.iter().map(|&q| truth_signals[i][q]).collect();
            let honest = ReportVector::signals(2, own).unwrap();
            let report = seller_report(&honest, s, &mut rng).unwrap();
            let g = seller_package(&assignment.assigned[i], &report, s, &mut oracle, SESSION, &mut rng).unwrap();
            state.record_answer_commitments(Party::Seller(i), g.ciphertext_commitment, g.key_commitment).unwrap();
            aligned.push(g.package.aligned_reports());
            goods.push(g);
        }
        let params = PaymentParams::corr(2, 1).unwrap();
        let mut vals: Vec<EncodedPayment> = pay_vector_multi(&aligned, &params).unwrap().into_iter().map(|p| p.encode()).collect();
        for (v, s) in vals.iter_mut().zip(&strategies) {
            *v = v.shifted(s.val_shift());
        }
        Fixture { oracle, state, assignment, goods, vals, strategies }
    }

    impl Fixture {
        fn report(&mut self) {
            for i in 0..self.goods.len() {
                self.state.submit_payment_outputs(Party::Seller(i), &self.vals).unwrap();
            }
        }

        fn reveal(&mut self) {
            for (i, (g, s)) in self.goods.iter().zip(&self.strategies).enumerate() {
                if let Some((k, op)) = g.key_submission(s) {
                    self.state.submit_keys(&mut self.oracle, Party::Seller(i), k, op).unwrap();
                }
            }
        }

        fn evidence(&self) -> Vec<Option<RebuttalEvidence>> {
            self.goods
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    Some(RebuttalEvidence {
                        ciphertext: g.ciphertext.clone(),
                        ciphertext_opening: g.ciphertext_opening,
                        questions: self.assignment.assigned[i].to_bytes(),
                        questions_opening: self.assignment.openings[i],
                    })
                })
                .collect()
        }

        fn pay_units(&self) -> Vec<i64> {
            self.vals.iter().map(|v| v.currency_units()).collect()
        }
    }

    fn assert_conserved(state: &ContractState) {
        let total = deposits(state.sellers()).total();
        assert_eq!(state.ledger_total(), total);
        assert!(state.events().iter().all(|e| e.ledger_total == total));
        for e in state.events() {
            let net: i64 = e.ledger_delta.iter().map(|d| d.balance + d.frozen).sum();
            assert_eq!(net, 0, "{:?}", e.operation);
        }
        assert_eq!(state.outcome() != Outcome::Pending, state.stage() == Stage::Closed);
    }

    #[test]
    fn sign_freezes_deposits() {
        let s = signed(2);
        assert_eq!(s.stage(), Stage::Signed);
        assert_eq!(s.frozen(Party::Buyer), DEP_B);
        assert_eq!(s.frozen(Party::Seller(1)), DEP_S);
        assert_eq!(s.balance(Party::Seller(0)), 0);
        assert_conserved(&s);
    }

    #[test]
    fn sign_rejections() {
        let mut other = terms(2);
        other.params = PaymentParams::corr(3, 1).unwrap();
        let subs = vec![(Party::Buyer, terms(2)), (Party::Seller(0), terms(2)), (Party::Seller(1), other)];
        assert_eq!(ContractState::sign(&subs, &deposits(2), SESSION), Err(ContractError::InconsistentTerms));

        let subs = vec![(Party::Buyer, terms(2)), (Party::Seller(0), terms(2)), (Party::Seller(1), terms(2))];
        let zero = Deposits { buyer: DEP_B, sellers: vec![DEP_S, 0] };
        assert_eq!(ContractState::sign(&subs, &zero, SESSION), Err(ContractError::NonPositiveDeposit(Party::Seller(1))));
        assert_eq!(ContractState::sign(&subs[..2], &deposits(2), SESSION), Err(ContractError::MissingSignatures));
    }

    #[test]
    fn stage_and_duplicate_guards() {
        let mut f = setup(vec![Strategy::Truthful; 2]);
        assert_eq!(
            f.state.record_question_commitments(&f.assignment.commitments),
            Err(ContractError::WrongStage(Stage::AnswersCommitted))
        );
        let (c, k) = f.state.answer_commitments(0).unwrap();
        assert_eq!(f.state.record_answer_commitments(Party::Seller(0), c, k), Err(ContractError::Duplicate(Party::Seller(0))));

        let mut s = signed(2);
        let coms = f.assignment.commitments.clone();
        s.record_question_commitments(&coms).unwrap();
        assert_eq!(s.record_question_commitments(&coms), Err(ContractError::Duplicate(Party::Buyer)));
        s.record_answer_commitments(Party::Seller(1), c, k).unwrap();
        assert_eq!(s.stage(), Stage::QuestionsCommitted);
        assert_eq!(s.record_answer_commitments(Party::Seller(1), c, k), Err(ContractError::Duplicate(Party::Seller(1))));
        assert_eq!(s.submit_payment_outputs(Party::Seller(0), &f.vals), Err(ContractError::WrongStage(Stage::QuestionsCommitted)));
    }

    #[test]
    fn honest_run_transacts() {
        let mut f = setup(vec![Strategy::Truthful; 2]);
        f.state.submit_payment_outputs(Party::Seller(0), &f.vals).unwrap();
        assert_eq!(f.state.stage(), Stage::AnswersCommitted);
        f.state.submit_payment_outputs(Party::Seller(1), &f.vals).unwrap();
        assert_eq!(f.state.stage(), Stage::PaymentReported);
        f.reveal();
        assert_eq!(f.state.stage(), Stage::KeysRevealed);
        f.state.advance_clock(0);
        assert_eq!(f.state.stage(), Stage::KeysRevealed);
        f.state.advance_clock(9);
        assert_eq!(f.state.stage(), Stage::KeysRevealed);
        f.state.advance_clock(1);
        assert_eq!(f.state.outcome(), Outcome::Transacted);
        let pay = f.pay_units();
        assert_eq!(f.state.net_transfer(Party::Seller(0)), pay[0] - CON);
        assert_eq!(f.state.net_transfer(Party::Seller(1)), pay[1] - CON);
        assert_eq!(f.state.net_transfer(Party::Buyer), -pay.iter().sum::<i64>() - CON);
        assert_eq!(f.state.sink(), 3 * CON);
        assert_conserved(&f.state);
    }

    #[test]
    fn inconsistent_vals_time_out_to_confiscation() {
        let mut f = setup(vec![Strategy::Truthful; 2]);
        f.state.submit_payment_outputs(Party::Seller(0), &f.vals).unwrap();
        let other: Vec<_> = f.vals.iter().map(|v| v.shifted(1)).collect();
        f.state.submit_payment_outputs(Party::Seller(1), &other).unwrap();
        assert_eq!(f.state.stage(), Stage::AnswersCommitted);
        f.state.advance_clock(10);
        assert_eq!(f.state.outcome(), Outcome::SellersConfiscated);
        assert_eq!(f.state.net_transfer(Party::Buyer), -CON);
        assert_eq!(f.state.net_transfer(Party::Seller(0)), -DEP_S);
        assert_eq!(f.state.sink(), 2 * DEP_S + CON);
        assert_conserved(&f.state);
    }

    #[test]
    fn resubmission_can_reach_agreement() {
        let mut f = setup(vec![Strategy::Truthful; 2]);
        let other: Vec<_> = f.vals.iter().map(|v| v.shifted(1)).collect();
        f.state.submit_payment_outputs(Party::Seller(0), &other).unwrap();
        f.state.submit_payment_outputs(Party::Seller(1), &f.vals).unwrap();
        f.state.submit_payment_outputs(Party::Seller(0), &f.vals).unwrap();
        assert_eq!(f.state.stage(), Stage::PaymentReported);
        assert_eq!(f.state.reported_vals().unwrap(), &f.vals[..]);
    }

    #[test]
    fn withheld_key_confiscates() {
        let mut f = setup(vec![Strategy::Truthful, Strategy::WithholdKey]);
        f.report();
        f.reveal();
        assert_eq!(f.state.stage(), Stage::PaymentReported);
        f.state.advance_clock(10);
        assert_eq!(f.state.outcome(), Outcome::SellersConfiscated);
        assert_conserved(&f.state);
    }

    #[test]
    fn bad_key_opening_gives_all_to_buyer() {
        let mut f = setup(vec![Strategy::BadKeyOpening, Strategy::Truthful]);
        f.report();
        f.reveal();
        assert_eq!(f.state.outcome(), Outcome::AllToBuyer);
        assert_eq!(f.state.net_transfer(Party::Buyer), 2 * DEP_S - 3 * CON);
        assert_eq!(f.state.net_transfer(Party::Seller(0)), -DEP_S);
        assert_conserved(&f.state);
    }

    #[test]
    fn wrong_questions_rebuttal_succeeds() {
        let mut f = setup(vec![Strategy::Truthful, Strategy::WrongQuestions]);
        f.report();
        f.reveal();
        let ev = f.evidence();
        let mut replay = f.state.clone();
        let outcome = f.state.raise_rebuttal(&mut f.oracle, &ev).unwrap();
        assert_eq!(outcome, Outcome::RebuttalSucceeded);
        assert_eq!(f.state.verdict(), Some(IncorrectGoodReason::QuestionsMismatch));
        assert_eq!(replay.raise_rebuttal(&mut f.oracle, &ev).unwrap(), outcome);
        assert_eq!(f.state.net_transfer(Party::Buyer), 2 * DEP_S - REB - 3 * CON);
        assert_conserved(&f.state);
    }

    #[test]
    fn misreported_val_rebuttal_succeeds() {
        let mut f = setup(vec![Strategy::MisreportVal { delta: 5 }, Strategy::Truthful]);
        f.report();
        f.reveal();
        let ev = f.evidence();
        assert_eq!(f.state.raise_rebuttal(&mut f.oracle, &ev).unwrap(), Outcome::RebuttalSucceeded);
        assert_eq!(f.state.verdict(), Some(IncorrectGoodReason::PaymentMismatch));
    }

    #[test]
    fn spurious_rebuttal_splits_pool_among_sellers() {
        let mut f = setup(vec![Strategy::Truthful; 3]);
        f.report();
        f.reveal();
        let ev = f.evidence();
        assert_eq!(f.state.raise_rebuttal(&mut f.oracle, &ev).unwrap(), Outcome::RebuttalFailed);
        assert_eq!(f.state.verdict(), Some(IncorrectGoodReason::None));
        let pool = DEP_B + 3 * DEP_S - 4 * CON - REB;
        for i in 0..3 {
            assert_eq!(f.state.balance(Party::Seller(i)), pool / 3);
        }
        assert_eq!(f.state.sink(), 4 * CON + REB + pool % 3);
        assert_eq!(f.state.net_transfer(Party::Buyer), -DEP_B);
        assert_conserved(&f.state);
    }

    #[test]
    fn inconsistent_or_missing_evidence_fails() {
        let mut f = setup(vec![Strategy::Truthful, Strategy::WrongQuestions]);
        f.report();
        f.reveal();
        let mut ev = f.evidence();
        ev[0].as_mut().unwrap().ciphertext = f.goods[1].ciphertext.clone();
        let mut s = f.state.clone();
        assert_eq!(s.raise_rebuttal(&mut f.oracle, &ev).unwrap(), Outcome::RebuttalFailed);
        assert_eq!(s.verdict(), None);
        let mut ev = f.evidence();
        ev[1] = None;
        assert_eq!(f.state.raise_rebuttal(&mut f.oracle, &ev).unwrap(), Outcome::RebuttalFailed);
        assert_conserved(&f.state);
    }

    #[test]
    fn rebuttal_after_window_is_rejected() {
        let mut f = setup(vec![Strategy::Truthful; 2]);
        f.report();
        f.reveal();
        f.state.advance_clock(25);
        let ev = f.evidence();
        assert_eq!(f.state.raise_rebuttal(&mut f.oracle, &ev), Err(ContractError::WrongStage(Stage::Closed)));
    }

    #[test]
    fn early_stages_rescind_on_timeout_or_request() {
        let mut s = signed(2);
        s.advance_clock(10);
        assert_eq!(s.outcome(), Outcome::Rescinded);
        assert_eq!(s.net_transfer(Party::Buyer), -CON);
        assert_eq!(s.net_transfer(Party::Seller(1)), -CON);
        assert_conserved(&s);

        let mut f = setup(vec![Strategy::Truthful; 2]);
        f.state.rescind(Party::Buyer).unwrap();
        assert_eq!(f.state.outcome(), Outcome::Rescinded);
        let mut f = setup(vec![Strategy::Truthful; 2]);
        f.report();
        assert_eq!(f.state.rescind(Party::Seller(0)), Err(ContractError::WrongStage(Stage::PaymentReported)));
    }

    #[test]
    fn buyer_utilities_match_closing_balances() {
        let costs = |val| CostModel {
            con_cost: CON,
            reb_cost: REB,
            pri_cost_buyer: 0,
            pri_cost_sellers: vec![0, 0],
            mpc_cost: 0,
            attack_cost: 10_000,
            dep_buyer: DEP_B,
            dep_sellers: vec![DEP_S; 2],
            val_estimate: val,
        };
        let mut f = setup(vec![Strategy::Truthful; 2]);
        f.report();
        f.reveal();
        let val: i64 = f.pay_units().iter().sum();
        let u = buyer_utilities(&costs(val), val);
        let mut accept = f.state.clone();
        accept.advance_clock(10);
        assert_eq!(accept.net_transfer(Party::Buyer), u.accept);
        let ev = f.evidence();
        f.state.raise_rebuttal(&mut f.oracle, &ev).unwrap();
        assert_eq!(f.state.net_transfer(Party::Buyer), u.rebut_correct);

        let mut g = setup(vec![Strategy::WrongQuestions, Strategy::Truthful]);
        g.report();
        g.reveal();
        let ev = g.evidence();
        g.state.raise_rebuttal(&mut g.oracle, &ev).unwrap();
        assert_eq!(g.state.net_transfer(Party::Buyer), u.rebut_incorrect);
    }

    #[test]
    fn events_serialize_as_json_lines() {
        let mut f = setup(vec![Strategy::Truthful; 2]);
        f.report();
        let line = serde_json::to_string(&f.state.events()[0]).unwrap();
        assert!(line.contains("\"operation\":\"sign\""));
        let v: Value = serde_json::from_str(&serde_json::to_string(f.state.events().last().unwrap()).unwrap()).unwrap();
        assert_eq!(v["stage_after"], "payment_reported");
        let exact = EncodedPayment::Exact(Rational64::new(1, 3));
        assert!(serde_json::to_string(&exact).unwrap().contains("1/3"));
    }
}
