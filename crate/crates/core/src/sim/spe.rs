use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::experiments::sample_payments;
use super::{map_trials, Estimate, Execution, PaymentExperiment, SimError, SIGMA_MARGIN};
use crate::contract::{buyer_utilities, CostModel, IncorrectGoodReason};
use crate::payment::{PaymentParams, ReportKind};
use crate::traders::{buyer_rebuttal_decision, BuyerStrategy, SignalModel, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignOption {
    RandomOrders,
    SharedOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PackagingOption {
    Honest,
    WrongQuestions,
}

/// `Plain` hands the seller's data to the others instead of running the
/// secure evaluation: no MPC cost, but the seller loses her privacy cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComputeOption {
    Mpc,
    Plain,
}

/// Which payment vector a seller posts: the computed one, or every entry
/// shifted by `delta` currency units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValOption {
    Honest,
    Shift { delta: i64 },
}

impl ValOption {
    fn delta(self) -> i64 {
        match self {
            ValOption::Honest => 0,
            ValOption::Shift { delta } => delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyOption {
    Reveal,
    Withhold,
    BadOpening,
}

/// Finite menus per decision point, in protocol order. The buyer moves at
/// assignment and rebuttal; both sellers move simultaneously in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeGrid {
    pub assign: Vec<AssignOption>,
    pub reports: Vec<Strategy>,
    pub packaging: Vec<PackagingOption>,
    pub compute: Vec<ComputeOption>,
    pub val: Vec<ValOption>,
    pub keys: Vec<KeyOption>,
    pub rebuttal: Vec<BuyerStrategy>,
}

/// Largest menu the grid accepts.
pub const MAX_OPTIONS: usize = 6;

const STAGES: usize = 7;
const ASSIGN: usize = 0;
const REPORTS: usize = 1;
const PACKAGING: usize = 2;
const COMPUTE: usize = 3;
const VAL: usize = 4;
const KEYS: usize = 5;
const REBUTTAL: usize = 6;
const STAGE_NAMES: [&str; STAGES] = ["assign", "reports", "packaging", "compute", "val", "keys", "rebuttal"];

fn is_buyer_stage(stage: usize) -> bool {
    stage == ASSIGN || stage == REBUTTAL
}

impl SpeGrid {
    /// Five report strategies and val shifts of `±delta`.
    pub fn standard(delta: i64) -> Self {
        SpeGrid {
            assign: vec![AssignOption::RandomOrders, AssignOption::SharedOrder],
            reports: vec![
                Strategy::Truthful,
                Strategy::Permutation { sigma: vec![1, 0] },
                Strategy::UniformRandom,
                Strategy::ConstantReport { symbol: 0 },
                Strategy::order_collusion(),
            ],
            packaging: vec![PackagingOption::Honest, PackagingOption::WrongQuestions],
            compute: vec![ComputeOption::Mpc, ComputeOption::Plain],
            val: vec![ValOption::Honest, ValOption::Shift { delta }, ValOption::Shift { delta: -delta }],
            keys: vec![KeyOption::Reveal, KeyOption::Withhold, KeyOption::BadOpening],
            rebuttal: vec![BuyerStrategy::Rational, BuyerStrategy::AlwaysRebut, BuyerStrategy::NeverRebut],
        }
    }

    pub fn truthful_only() -> Self {
        SpeGrid {
            assign: vec![AssignOption::RandomOrders],
            reports: vec![Strategy::Truthful],
            packaging: vec![PackagingOption::Honest],
            compute: vec![ComputeOption::Mpc],
            val: vec![ValOption::Honest],
            keys: vec![KeyOption::Reveal],
            rebuttal: vec![BuyerStrategy::Rational],
        }
    }

    fn sizes(&self) -> [usize; STAGES] {
        [
            self.assign.len(),
            self.reports.len(),
            self.packaging.len(),
            self.compute.len(),
            self.val.len(),
            self.keys.len(),
            self.rebuttal.len(),
        ]
    }

    /// Index of the truthful option at each decision point.
    fn truthful_indices(&self) -> Result<[usize; STAGES], SimError> {
        fn find<T: PartialEq>(menu: &[T], truthful: &T, stage: usize) -> Result<usize, SimError> {
            if menu.is_empty() {
                return Err(SimError::EmptyGrid(STAGE_NAMES[stage]));
            }
            if menu.len() > MAX_OPTIONS {
                return Err(SimError::InvalidConfig("at most six options per decision point"));
            }
            menu.iter().position(|o| o == truthful).ok_or(SimError::MissingTruthful(STAGE_NAMES[stage]))
        }
        let out = [
            find(&self.assign, &AssignOption::RandomOrders, ASSIGN)?,
            find(&self.reports, &Strategy::Truthful, REPORTS)?,
            find(&self.packaging, &PackagingOption::Honest, PACKAGING)?,
            find(&self.compute, &ComputeOption::Mpc, COMPUTE)?,
            find(&self.val, &ValOption::Honest, VAL)?,
            find(&self.keys, &KeyOption::Reveal, KEYS)?,
            find(&self.rebuttal, &BuyerStrategy::Rational, REBUTTAL)?,
        ];
        let report_only = self.reports.iter().all(|s| {
            matches!(
                s,
                Strategy::Truthful
                    | Strategy::Permutation { .. }
                    | Strategy::UniformRandom
                    | Strategy::ConstantReport { .. }
                    | Strategy::OrderCollusion { .. }
            )
        });
        if !report_only {
            return Err(SimError::InvalidConfig("report menu may only hold report strategies"));
        }
        Ok(out)
    }
}

/// Everything the grid check needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeSettings {
    pub grid: SpeGrid,
    pub costs: CostModel,
    pub params: PaymentParams,
    pub model: SignalModel,
    pub tasks: usize,
    pub trials: usize,
    pub seed: u64,
}

impl SpeSettings {
    /// Two binary sellers with `ε = 0.2`, `PayFunc = 100·MIG + 10`, deposits
    /// satisfying the rebuttal bounds, and a buyer privacy cost high enough
    /// that rebutting a near-zero payment is not worth it. The val shift is
    /// the expected truthful payment, so the downward shift pays about zero.
    pub fn standard() -> Self {
        let model = SignalModel::binary(ReportKind::Signal, 0.2).expect("valid model");
        let params = PaymentParams::corr(100, 10).expect("valid params");
        let expected = params.alpha_f64() * model.truthful_corr_mig(0, 1) + params.beta_f64();
        let delta = expected.round() as i64;
        SpeSettings {
            grid: SpeGrid::standard(delta),
            costs: CostModel {
                con_cost: 1,
                reb_cost: 2,
                pri_cost_buyer: 320,
                pri_cost_sellers: vec![5, 5],
                mpc_cost: 1,
                attack_cost: 1_000_000,
                dep_buyer: 50,
                dep_sellers: vec![150, 150],
                val_estimate: 2 * delta,
            },
            params,
            model,
            tasks: 10,
            trials: 2000,
            seed: 7,
        }
    }
}

/// A full stationary profile in readable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileLabel {
    pub assign: AssignOption,
    pub reports: [Strategy; 2],
    pub packaging: [PackagingOption; 2],
    pub compute: [ComputeOption; 2],
    pub val: [ValOption; 2],
    pub keys: [KeyOption; 2],
    pub rebuttal: BuyerStrategy,
}

/// A joint seller deviation that makes both sellers strictly better off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalitionDeviation {
    pub to: ProfileLabel,
    pub gains: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    /// Some history admits a profitable one-shot deviation.
    NotAnEquilibrium,
    /// On the profile's own path an action is weakly dominated.
    WeaklyDominated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Elimination {
    pub stage: String,
    pub cause: Cause,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileVerdict {
    pub label: ProfileLabel,
    pub survives: bool,
    pub eliminated: Option<Elimination>,
    /// Buyer, seller 0, seller 1.
    pub utilities: [f64; 3],
    pub coalition_deviation: Option<CoalitionDeviation>,
}

impl ProfileVerdict {
    pub fn coalition_dominated(&self) -> bool {
        self.coalition_deviation.is_some()
    }
}

/// Expected payments for one assignment and report pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffCell {
    pub assign: AssignOption,
    pub reports: [Strategy; 2],
    pub payments: [Estimate; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeTable {
    pub tie_margin: f64,
    pub profiles_total: u64,
    /// Suffixes that are equilibria at every history, per decision point.
    pub equilibrium_suffixes: Vec<usize>,
    /// Full profiles that also pass the on-path dominance refinement.
    pub survivors: usize,
    pub truthful: ProfileVerdict,
    /// Truthful except that both sellers post the same shifted vector.
    pub identical_val_misreports: Vec<ProfileVerdict>,
    /// Every surviving profile that no seller coalition can improve on.
    pub strong_survivors: usize,
    pub payoffs: Vec<PayoffCell>,
}

impl SpeTable {
    /// Truthful survives and is coalition-proof; every identical downward
    /// misreport that survives is coalition-dominated; upward ones die.
    pub fn expected_shape(&self) -> bool {
        let t = self.truthful.survives && !self.truthful.coalition_dominated();
        let bad = self.identical_val_misreports.iter().all(|v| {
            let down = v.label.val[0].delta() < 0;
            if down {
                v.survives && v.coalition_dominated()
            } else {
                !v.survives
            }
        });
        t && bad
    }
}

/// `[stage] -> [seller 0 option, seller 1 option]`; buyer stages use slot 0.
type Profile = [[usize; 2]; STAGES];

struct Game<'a> {
    settings: &'a SpeSettings,
    sizes: [usize; STAGES],
    /// Mean payments indexed by `(assign, r0, r1)`.
    pay: Vec<[f64; 2]>,
    margin: f64,
}

impl Game<'_> {
    fn pay(&self, assign: usize, r0: usize, r1: usize) -> [f64; 2] {
        let m = self.sizes[REPORTS];
        self.pay[(assign * m + r0) * m + r1]
    }

    /// Expected utilities `[buyer, seller 0, seller 1]` of a complete play.
    fn utilities(&self, p: &Profile) -> [f64; 3] {
        let grid = &self.settings.grid;
        let costs = &self.settings.costs;
        let c = costs.con_cost as f64;
        let dep = [costs.dep_sellers[0] as f64, costs.dep_sellers[1] as f64];
        let mut u = [0.0; 3];

        let plain = p[COMPUTE].map(|i| grid.compute[i] == ComputeOption::Plain);
        for s in 0..2 {
            u[1 + s] -= if plain.iter().any(|&x| x) {
                if plain[s] {
                    costs.pri_cost_sellers[s] as f64
                } else {
                    0.0
                }
            } else {
                costs.mpc_cost as f64
            };
        }

        let confiscated = |u: &mut [f64; 3]| {
            u[0] -= c;
            u[1] -= dep[0];
            u[2] -= dep[1];
        };
        let delta = p[VAL].map(|i| grid.val[i].delta());
        if delta[0] != delta[1] {
            confiscated(&mut u);
            return u;
        }
        let keys = p[KEYS].map(|i| grid.keys[i]);
        if keys.contains(&KeyOption::Withhold) {
            confiscated(&mut u);
            return u;
        }
        if keys.contains(&KeyOption::BadOpening) {
            u[0] += dep[0] + dep[1] - 3.0 * c;
            u[1] -= dep[0];
            u[2] -= dep[1];
            return u;
        }

        let pay = self.pay(p[ASSIGN][0], p[REPORTS][0], p[REPORTS][1]);
        let vals = [pay[0] + delta[0] as f64, pay[1] + delta[1] as f64];
        let total = vals[0] + vals[1];
        let wrong_questions = p[PACKAGING].iter().any(|&i| grid.packaging[i] == PackagingOption::WrongQuestions);
        let reason = if wrong_questions {
            IncorrectGoodReason::QuestionsMismatch
        } else if delta[0] != 0 {
            IncorrectGoodReason::PaymentMismatch
        } else {
            IncorrectGoodReason::None
        };
        let rebut = match grid.rebuttal[p[REBUTTAL][0]] {
            BuyerStrategy::Rational => {
                let mut at = costs.clone();
                at.val_estimate = total.round() as i64;
                buyer_rebuttal_decision(reason, &at)
            }
            BuyerStrategy::AlwaysRebut => true,
            BuyerStrategy::NeverRebut => false,
        };
        let table = buyer_utilities(costs, 0);
        if !rebut {
            u[0] += -total - c;
            u[1] += vals[0] - c;
            u[2] += vals[1] - c;
        } else if reason != IncorrectGoodReason::None {
            u[0] += table.rebut_incorrect as f64;
            u[1] -= dep[0];
            u[2] -= dep[1];
        } else {
            let pool = costs.dep_buyer + costs.seller_deposits();
            let share = (pool - 3 * costs.con_cost - costs.reb_cost).div_euclid(2) as f64;
            u[0] += table.rebut_correct as f64;
            u[1] += share - dep[0];
            u[2] += share - dep[1];
        }
        u
    }

    /// Number of joint actions at a stage.
    fn joint(&self, stage: usize) -> usize {
        let m = self.sizes[stage];
        if is_buyer_stage(stage) {
            m
        } else {
            m * m
        }
    }

    fn set_joint(&self, p: &mut Profile, stage: usize, idx: usize) {
        let m = self.sizes[stage];
        p[stage] = if is_buyer_stage(stage) { [idx, 0] } else { [idx / m, idx % m] };
    }

    /// Stage-game payoffs `u[s][x][y]` of seller `s` when seller 0 plays `x`
    /// and seller 1 plays `y`, everything else as in `p`.
    fn seller_matrix(&self, stage: usize, p: &Profile) -> [Vec<Vec<f64>>; 2] {
        let m = self.sizes[stage];
        let mut q = *p;
        let mut u = [vec![vec![0.0; m]; m], vec![vec![0.0; m]; m]];
        for x in 0..m {
            for y in 0..m {
                q[stage] = [x, y];
                let v = self.utilities(&q);
                u[0][x][y] = v[1];
                u[1][x][y] = v[2];
            }
        }
        u
    }

    fn buyer_payoffs(&self, stage: usize, p: &Profile) -> Vec<f64> {
        let mut q = *p;
        (0..self.sizes[stage])
            .map(|j| {
                q[stage] = [j, 0];
                self.utilities(&q)[0]
            })
            .collect()
    }

    /// Whether `p[stage]` is a Nash equilibrium of the stage game at the
    /// history in `p[..stage]`, with continuation `p[stage + 1..]`.
    fn stage_nash(&self, stage: usize, p: &Profile) -> bool {
        if is_buyer_stage(stage) {
            let u = self.buyer_payoffs(stage, p);
            return u.iter().all(|&v| v <= u[p[stage][0]] + self.margin);
        }
        let u = self.seller_matrix(stage, p);
        let [x, y] = p[stage];
        let m = self.sizes[stage];
        (0..m).all(|b| u[0][b][y] <= u[0][x][y] + self.margin && u[1][x][b] <= u[1][x][y] + self.margin)
    }

    /// Whether no player's action at `stage` is weakly dominated in the
    /// stage game at this history.
    fn stage_undominated(&self, stage: usize, p: &Profile) -> bool {
        let m = self.sizes[stage];
        if is_buyer_stage(stage) {
            return self.stage_nash(stage, p);
        }
        let u = self.seller_matrix(stage, p);
        let own = |s: usize, mine: usize, theirs: usize| if s == 0 { u[0][mine][theirs] } else { u[1][theirs][mine] };
        (0..2).all(|s| {
            let a = p[stage][s];
            !(0..m).any(|b| {
                b != a
                    && (0..m).all(|t| own(s, b, t) >= own(s, a, t) - self.margin)
                    && (0..m).any(|t| own(s, b, t) > own(s, a, t) + self.margin)
            })
        })
    }

    /// The first decision point along the profile's own path at which an
    /// action is weakly dominated.
    fn dominated_on_path(&self, p: &Profile) -> Option<usize> {
        (0..STAGES).find(|&s| !self.stage_undominated(s, p))
    }

    /// Whether the stage choice and suffix in `p` hold at every history.
    fn survives_everywhere(&self, stage: usize, p: &Profile) -> bool {
        let histories: usize = (0..stage).map(|s| self.joint(s)).product();
        let mut q = *p;
        (0..histories).all(|mut h| {
            for s in (0..stage).rev() {
                let j = self.joint(s);
                self.set_joint(&mut q, s, h % j);
                h /= j;
            }
            self.stage_nash(stage, &q)
        })
    }

    /// Surviving suffixes for each stage, from the last decision point back.
    fn backward_induction(&self) -> Vec<HashSet<Profile>> {
        let mut sets = vec![HashSet::new(); STAGES + 1];
        sets[STAGES].insert([[0; 2]; STAGES]);
        for stage in (0..STAGES).rev() {
            let mut next = HashSet::new();
            for suffix in &sets[stage + 1] {
                for idx in 0..self.joint(stage) {
                    let mut p = *suffix;
                    self.set_joint(&mut p, stage, idx);
                    if self.survives_everywhere(stage, &p) {
                        next.insert(p);
                    }
                }
            }
            sets[stage] = next;
        }
        sets
    }

    fn label(&self, p: &Profile) -> ProfileLabel {
        let g = &self.settings.grid;
        ProfileLabel {
            assign: g.assign[p[ASSIGN][0]],
            reports: p[REPORTS].map(|i| g.reports[i].clone()),
            packaging: p[PACKAGING].map(|i| g.packaging[i]),
            compute: p[COMPUTE].map(|i| g.compute[i]),
            val: p[VAL].map(|i| g.val[i]),
            keys: p[KEYS].map(|i| g.keys[i]),
            rebuttal: g.rebuttal[p[REBUTTAL][0]],
        }
    }

    /// The joint seller deviation with the largest smaller gain, if both
    /// gains exceed the tie margin. Evaluated on the profile's own path.
    fn coalition_deviation(&self, p: &Profile) -> Option<CoalitionDeviation> {
        let base = self.utilities(p);
        let seller_stages = [REPORTS, PACKAGING, COMPUTE, VAL, KEYS];
        let combos: usize = seller_stages.iter().map(|&s| self.joint(s)).product();
        let mut best: Option<(f64, Profile, [f64; 2])> = None;
        let mut q = *p;
        for mut idx in 0..combos {
            for &s in seller_stages.iter().rev() {
                let j = self.joint(s);
                self.set_joint(&mut q, s, idx % j);
                idx /= j;
            }
            let u = self.utilities(&q);
            let gains = [u[1] - base[1], u[2] - base[2]];
            let worst = gains[0].min(gains[1]);
            if worst > self.margin && best.as_ref().is_none_or(|(w, _, _)| worst > *w) {
                best = Some((worst, q, gains));
            }
        }
        best.map(|(_, q, gains)| CoalitionDeviation { to: self.label(&q), gains })
    }

    fn elimination(&self, p: &Profile, sets: &[HashSet<Profile>]) -> Option<Elimination> {
        for stage in (0..STAGES).rev() {
            let mut suffix = *p;
            for s in suffix.iter_mut().take(stage) {
                *s = [0, 0];
            }
            if !sets[stage].contains(&suffix) {
                return Some(Elimination { stage: STAGE_NAMES[stage].to_owned(), cause: Cause::NotAnEquilibrium });
            }
        }
        self.dominated_on_path(p)
            .map(|s| Elimination { stage: STAGE_NAMES[s].to_owned(), cause: Cause::WeaklyDominated })
    }

    fn verdict(&self, p: &Profile, sets: &[HashSet<Profile>]) -> ProfileVerdict {
        let eliminated = self.elimination(p, sets);
        ProfileVerdict {
            label: self.label(p),
            survives: eliminated.is_none(),
            eliminated,
            utilities: self.utilities(p),
            coalition_deviation: self.coalition_deviation(p),
        }
    }
}

/// Monte Carlo payoff table for every assignment and report pair.
fn payoff_cells(settings: &SpeSettings, exec: Execution) -> Result<Vec<PayoffCell>, SimError> {
    let grid = &settings.grid;
    let mut cells = Vec::new();
    for &assign in &grid.assign {
        for r0 in &grid.reports {
            for r1 in &grid.reports {
                let exp = PaymentExperiment {
                    profile: vec![r0.clone(), r1.clone()],
                    model: settings.model.clone(),
                    params: settings.params.clone(),
                    tasks: settings.tasks,
                    share_orders: assign == AssignOption::SharedOrder,
                    trials: settings.trials,
                    seed: settings.seed,
                };
                let samples = map_trials(exec, exp.trials, |t| sample_payments(&exp, t))
                    .into_iter()
                    .collect::<Result<Vec<_>, _>>()?;
                let column = |i: usize| {
                    let units: Vec<f64> = samples.iter().map(|s| s[i].encode().currency_units() as f64).collect();
                    Estimate::from_samples(&units)
                };
                cells.push(PayoffCell { assign, reports: [r0.clone(), r1.clone()], payments: [column(0), column(1)] });
            }
        }
    }
    Ok(cells)
}

/// Backward induction over stationary profiles of the grid: a profile is an
/// equilibrium if its stage action is a Nash equilibrium of the stage game at
/// every history, and survives if additionally no action on its own path is
/// weakly dominated. Survivors are then checked against seller coalitions.
pub fn spe_grid_check(settings: &SpeSettings, exec: Execution) -> Result<SpeTable, SimError> {
    let truthful = settings.grid.truthful_indices()?;
    if settings.model.sellers() != 2 || settings.costs.sellers() != 2 {
        return Err(SimError::InvalidConfig("the grid check is for two sellers"));
    }
    if settings.trials < super::MIN_TRIALS {
        return Err(SimError::TooFewTrials { min: super::MIN_TRIALS, got: settings.trials });
    }
    settings.costs.validate()?;
    let payoffs = payoff_cells(settings, exec)?;
    let max_stderr = payoffs
        .iter()
        .flat_map(|c| c.payments.iter().map(|e| e.stderr))
        .fold(0.0, f64::max);
    let game = Game {
        settings,
        sizes: settings.grid.sizes(),
        pay: payoffs.iter().map(|c| [c.payments[0].mean, c.payments[1].mean]).collect(),
        margin: SIGMA_MARGIN * max_stderr,
    };
    let sets = game.backward_induction();

    let truthful_profile: Profile = std::array::from_fn(|s| [truthful[s], if is_buyer_stage(s) { 0 } else { truthful[s] }]);
    let misreports = settings
        .grid
        .val
        .iter()
        .enumerate()
        .filter(|(_, v)| v.delta() != 0)
        .map(|(i, _)| {
            let mut p = truthful_profile;
            p[VAL] = [i, i];
            game.verdict(&p, &sets)
        })
        .collect();
    let survivors: Vec<&Profile> = sets[ASSIGN].iter().filter(|p| game.dominated_on_path(p).is_none()).collect();
    let strong_survivors = survivors.iter().filter(|p| game.coalition_deviation(p).is_none()).count();
    Ok(SpeTable {
        tie_margin: game.margin,
        profiles_total: (0..STAGES).map(|s| game.joint(s) as u64).product(),
        equilibrium_suffixes: sets[..STAGES].iter().map(HashSet::len).collect(),
        survivors: survivors.len(),
        truthful: game.verdict(&truthful_profile, &sets),
        identical_val_misreports: misreports,
        strong_survivors,
        payoffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(grid: SpeGrid) -> SpeSettings {
        SpeSettings { grid, trials: 400, ..SpeSettings::standard() }
    }

    #[test]
    fn standard_costs_satisfy_the_deposit_bounds() {
        let s = SpeSettings::standard();
        assert_eq!(s.costs.val_estimate, 56);
        assert!(crate::contract::check_deposit_bounds(&s.costs).ok);
        s.costs.validate().unwrap();
    }

    #[test]
    fn truthful_only_grid_is_trivial() {
        let t = spe_grid_check(&small(SpeGrid::truthful_only()), Execution::Parallel).unwrap();
        assert_eq!(t.profiles_total, 1);
        assert!(t.truthful.survives);
        assert!(!t.truthful.coalition_dominated());
        assert!(t.identical_val_misreports.is_empty());
        assert_eq!(t.strong_survivors, 1);
    }

    #[test]
    fn empty_or_untruthful_grids_are_rejected() {
        let mut g = SpeGrid::truthful_only();
        g.keys.clear();
        assert!(matches!(spe_grid_check(&small(g), Execution::Sequential), Err(SimError::EmptyGrid("keys"))));
        let mut g = SpeGrid::truthful_only();
        g.val = vec![ValOption::Shift { delta: 3 }];
        assert!(matches!(spe_grid_check(&small(g), Execution::Sequential), Err(SimError::MissingTruthful("val"))));
        let mut g = SpeGrid::truthful_only();
        g.reports.push(Strategy::WithholdKey);
        assert!(spe_grid_check(&small(g), Execution::Sequential).is_err());
    }

    #[test]
    fn utilities_match_contract_allocations() {
        let settings = small(SpeGrid::standard(28));
        let game = Game {
            settings: &settings,
            sizes: settings.grid.sizes(),
            pay: vec![[30.0, 26.0]; 50],
            margin: 1.0,
        };
        let mut p: Profile = [[0, 0]; STAGES];
        // honest: buyer pays both entries plus the contract cost
        assert_eq!(game.utilities(&p), [-57.0, 28.0, 24.0]);
        // one seller withholds: sellers lose deposits and MPC cost
        p[KEYS] = [1, 0];
        assert_eq!(game.utilities(&p), [-1.0, -151.0, -151.0]);
        // bad opening: buyer nets the seller deposits minus three contract costs
        p[KEYS] = [0, 2];
        assert_eq!(game.utilities(&p), [297.0, -151.0, -151.0]);
        // spurious rebuttal: pool 350 - 3 - 2 split evenly
        p[KEYS] = [0, 0];
        p[REBUTTAL] = [1, 0];
        assert_eq!(game.utilities(&p), [-370.0, 22.0 - 1.0, 22.0 - 1.0]);
        // identical upward shift: rational buyer rebuts
        p[REBUTTAL] = [0, 0];
        p[VAL] = [1, 1];
        assert_eq!(game.utilities(&p), [300.0 - 2.0 - 320.0 - 3.0, -151.0, -151.0]);
        // identical downward shift: total 0, not worth rebutting
        p[VAL] = [2, 2];
        assert_eq!(game.utilities(&p), [-1.0, 0.0, -4.0]);
        // disagreeing vectors time out to confiscation
        p[VAL] = [0, 2];
        assert_eq!(game.utilities(&p), [-1.0, -151.0, -151.0]);
        // one seller skips MPC and pays her privacy cost
        p[VAL] = [0, 0];
        p[COMPUTE] = [1, 0];
        assert_eq!(game.utilities(&p), [-57.0, 24.0, 25.0]);
    }

    #[test]
    fn standard_grid_separates_truthful_from_bad_equilibria() {
        let t = spe_grid_check(&small(SpeSettings::standard().grid), Execution::Parallel).unwrap();
        assert!(t.truthful.survives, "{:?}", t.truthful);
        assert!(!t.truthful.coalition_dominated(), "{:?}", t.truthful.coalition_deviation);
        let [up, down] = [&t.identical_val_misreports[0], &t.identical_val_misreports[1]];
        assert!(!up.survives);
        assert!(down.survives);
        assert!(down.coalition_dominated());
        assert!(t.expected_shape());
        assert!(t.strong_survivors >= 1);
    }
}
