use serde::{Deserialize, Serialize};

use super::ContractError;

/// Trader costs and deposits, in whole currency units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub con_cost: i64,
    pub reb_cost: i64,
    pub pri_cost_buyer: i64,
    pub pri_cost_sellers: Vec<i64>,
    pub mpc_cost: i64,
    pub attack_cost: i64,
    pub dep_buyer: i64,
    pub dep_sellers: Vec<i64>,
    /// The buyer's total transfer the bounds are evaluated against.
    pub val_estimate: i64,
}

impl CostModel {
    pub fn sellers(&self) -> usize {
        self.dep_sellers.len()
    }

    pub fn seller_deposits(&self) -> i64 {
        self.dep_sellers.iter().sum()
    }

    /// Non-negativity, matching seller vectors, and the attack cost strictly
    /// exceeding every other quantity.
    pub fn validate(&self) -> Result<(), ContractError> {
        let others = [
            self.con_cost,
            self.reb_cost,
            self.pri_cost_buyer,
            self.mpc_cost,
            self.dep_buyer,
            self.val_estimate,
        ];
        let others = || others.iter().chain(&self.pri_cost_sellers).chain(&self.dep_sellers);
        if self.attack_cost < 0 || others().any(|&v| v < 0) {
            return Err(ContractError::InvalidCosts("costs and deposits must be non-negative"));
        }
        if self.pri_cost_sellers.len() != self.dep_sellers.len() || self.dep_sellers.len() < 2 {
            return Err(ContractError::InvalidCosts(
                "need one privacy cost and deposit per seller, at least two sellers",
            ));
        }
        if others().any(|&v| v >= self.attack_cost) {
            return Err(ContractError::InvalidCosts("attack cost must be strictly largest"));
        }
        Ok(())
    }

    /// The buyer's deposit followed by each seller's.
    pub fn deposits(&self) -> Deposits {
        Deposits { buyer: self.dep_buyer, sellers: self.dep_sellers.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deposits {
    pub buyer: i64,
    pub sellers: Vec<i64>,
}

impl Deposits {
    pub fn total(&self) -> i64 {
        self.buyer + self.sellers.iter().sum::<i64>()
    }
}

/// Slack `lhs - rhs` of each deposit inequality; `ok` iff all are positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepositCheck {
    pub ok: bool,
    pub slacks: [i64; 3],
}

/// Evaluates
/// `sum Dep_S > RebCost + PriCost_B - val + n ConCost`,
/// `Dep_B > val + ConCost - PriCost_B` and
/// `AttackCost > sum Dep_S + Dep_B`.
pub fn check_deposit_bounds(costs: &CostModel) -> DepositCheck {
    let n = costs.sellers() as i64;
    let dep_s = costs.seller_deposits();
    let val = costs.val_estimate;
    let slacks = [
        dep_s - (costs.reb_cost + costs.pri_cost_buyer - val + n * costs.con_cost),
        costs.dep_buyer - (val + costs.con_cost - costs.pri_cost_buyer),
        costs.attack_cost - (dep_s + costs.dep_buyer),
    ];
    DepositCheck { ok: slacks.iter().all(|&s| s > 0), slacks }
}

/// The buyer's utility in each branch of the rebuttal decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuyerUtilities {
    /// Rebutting an incorrect good.
    pub rebut_incorrect: i64,
    /// Accepting the good and paying `val`.
    pub accept: i64,
    /// Rebutting a correct good.
    pub rebut_correct: i64,
}

pub fn buyer_utilities(costs: &CostModel, val: i64) -> BuyerUtilities {
    let n = costs.sellers() as i64;
    BuyerUtilities {
        rebut_incorrect: costs.seller_deposits() - costs.reb_cost - costs.pri_cost_buyer - (n + 1) * costs.con_cost,
        accept: -val - costs.con_cost,
        rebut_correct: -costs.dep_buyer - costs.pri_cost_buyer,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn worked_example() -> CostModel {
        CostModel {
            con_cost: 1,
            reb_cost: 2,
            pri_cost_buyer: 3,
            pri_cost_sellers: vec![0, 0],
            mpc_cost: 0,
            attack_cost: 1000,
            dep_buyer: 9,
            dep_sellers: vec![5, 5],
            val_estimate: 10,
        }
    }

    #[test]
    fn worked_example_slacks() {
        let c = worked_example();
        assert_eq!(check_deposit_bounds(&c), DepositCheck { ok: true, slacks: [13, 1, 981] });
        assert!(c.validate().is_ok());
    }

    #[test]
    fn buyer_deposit_boundary() {
        let mut c = worked_example();
        c.dep_buyer = 8;
        let check = check_deposit_bounds(&c);
        assert!(!check.ok);
        assert_eq!(check.slacks[1], 0);
    }

    #[test]
    fn each_inequality_flips_at_its_boundary() {
        let base = worked_example();
        let mut c = base.clone();
        c.reb_cost += 13;
        assert_eq!(check_deposit_bounds(&c).slacks[0], 0);
        c.reb_cost -= 1;
        assert!(check_deposit_bounds(&c).ok);

        let mut c = base.clone();
        c.attack_cost = 19;
        assert!(!check_deposit_bounds(&c).ok);
        c.attack_cost = 20;
        assert!(check_deposit_bounds(&c).ok);
    }

    #[test]
    fn degenerate_positive_case() {
        let c = CostModel {
            con_cost: 0,
            reb_cost: 0,
            pri_cost_buyer: 0,
            pri_cost_sellers: vec![0, 0],
            mpc_cost: 0,
            attack_cost: 10,
            dep_buyer: 1,
            dep_sellers: vec![1, 1],
            val_estimate: 0,
        };
        assert!(check_deposit_bounds(&c).ok);
    }

    #[test]
    fn validation_rules() {
        let mut c = worked_example();
        c.attack_cost = 9;
        assert!(c.validate().is_err());
        let mut c = worked_example();
        c.con_cost = -1;
        assert!(c.validate().is_err());
        let mut c = worked_example();
        c.pri_cost_sellers.pop();
        assert!(c.validate().is_err());
    }

    #[test]
    fn utilities_match_rows() {
        let u = buyer_utilities(&worked_example(), 10);
        assert_eq!(u, BuyerUtilities { rebut_incorrect: 10 - 2 - 3 - 3, accept: -11, rebut_correct: -12 });
    }
}
