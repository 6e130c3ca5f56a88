use serde::{Deserialize, Serialize};

use super::Check;
use crate::contract::{check_deposit_bounds, CostModel};

/// Values to sweep; an empty range keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepositRanges {
    pub dep_buyer: Vec<i64>,
    /// Applied to every seller.
    pub dep_seller: Vec<i64>,
    pub attack_cost: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepositRow {
    pub dep_buyer: i64,
    pub dep_sellers: Vec<i64>,
    pub attack_cost: i64,
    pub ok: bool,
    pub slacks: [i64; 3],
}

/// Applies the deposit bounds across the Cartesian product of the ranges.
pub fn deposit_sweep(base: &CostModel, ranges: &DepositRanges) -> Vec<DepositRow> {
    let or_base = |r: &[i64], v: Vec<i64>| if r.is_empty() { v } else { r.to_vec() };
    let buyers = or_base(&ranges.dep_buyer, vec![base.dep_buyer]);
    let sellers: Vec<Vec<i64>> = if ranges.dep_seller.is_empty() {
        vec![base.dep_sellers.clone()]
    } else {
        ranges.dep_seller.iter().map(|&d| vec![d; base.sellers()]).collect()
    };
    let attacks = or_base(&ranges.attack_cost, vec![base.attack_cost]);
    let mut rows = Vec::with_capacity(buyers.len() * sellers.len() * attacks.len());
    for &dep_buyer in &buyers {
        for dep_sellers in &sellers {
            for &attack_cost in &attacks {
                let costs = CostModel { dep_buyer, dep_sellers: dep_sellers.clone(), attack_cost, ..base.clone() };
                let check = check_deposit_bounds(&costs);
                rows.push(DepositRow {
                    dep_buyer,
                    dep_sellers: dep_sellers.clone(),
                    attack_cost,
                    ok: check.ok,
                    slacks: check.slacks,
                });
            }
        }
    }
    rows
}

/// The worked two-seller example: `ConCost 1, RebCost 2, PriCost_B 3,
/// val 10, Dep_B 9, Dep_S 5 + 5, AttackCost 1000`.
pub fn worked_example() -> CostModel {
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

/// Whether the rows are ok exactly when `key(row) > boundary`.
fn flips_at(rows: &[DepositRow], boundary: i64, key: impl Fn(&DepositRow) -> i64) -> bool {
    rows.iter().any(|r| key(r) <= boundary)
        && rows.iter().any(|r| key(r) > boundary)
        && rows.iter().all(|r| r.ok == (key(r) > boundary))
}

/// Hand-substituted slacks and the boundary of each inequality.
pub fn deposits_suite() -> (Vec<DepositRow>, Vec<Check>) {
    let base = worked_example();
    let mut rows = Vec::new();
    let mut checks = Vec::new();

    let worked = deposit_sweep(&base, &DepositRanges::default());
    checks.push(Check::new(
        "worked example slacks (13, 1, 981)",
        worked[0].ok && worked[0].slacks == [13, 1, 981],
        format!("{:?}", worked[0].slacks),
    ));
    rows.extend(worked);

    // second inequality: Dep_B > val + ConCost - PriCost_B = 8
    let buyer = deposit_sweep(&base, &DepositRanges { dep_buyer: (6..=11).collect(), ..Default::default() });
    checks.push(Check::new("buyer deposit flips at 8", flips_at(&buyer, 8, |r| r.dep_buyer), "Dep_B in 6..=11"));
    rows.extend(buyer);

    // first inequality with PriCost_B = 10: sum Dep_S > 2 + 10 - 10 + 2 = 4
    let pricey = CostModel { pri_cost_buyer: 10, ..base.clone() };
    let seller = deposit_sweep(&pricey, &DepositRanges { dep_seller: (1..=4).collect(), ..Default::default() });
    checks.push(Check::new(
        "seller deposits flip at a total of 4",
        flips_at(&seller, 4, |r| r.dep_sellers.iter().sum()),
        "PriCost_B = 10, Dep_S in 1..=4",
    ));
    rows.extend(seller);

    // third inequality: AttackCost > 9 + 10 = 19
    let attack = deposit_sweep(&base, &DepositRanges { attack_cost: (17..=21).collect(), ..Default::default() });
    checks.push(Check::new("attack cost flips at 19", flips_at(&attack, 19, |r| r.attack_cost), "AttackCost in 17..=21"));
    rows.extend(attack);

    let large = deposit_sweep(
        &base,
        &DepositRanges { dep_buyer: vec![1_000_000], dep_seller: vec![1_000_000], attack_cost: vec![1000] },
    );
    let only_third = large[0].slacks[0] > 0 && large[0].slacks[1] > 0 && large[0].slacks[2] <= 0;
    checks.push(Check::new(
        "large deposits with small attack cost fail the third bound",
        only_third && !large[0].ok,
        format!("{:?}", large[0].slacks),
    ));
    rows.extend(large);
    (rows, checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_is_the_cartesian_product() {
        let rows = deposit_sweep(
            &worked_example(),
            &DepositRanges { dep_buyer: vec![1, 2], dep_seller: vec![3, 4, 5], attack_cost: vec![] },
        );
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.attack_cost == 1000 && r.dep_sellers.len() == 2));
        assert_eq!(rows[5].dep_sellers, vec![5, 5]);
        assert_eq!(rows[5].dep_buyer, 2);
    }

    #[test]
    fn suite_passes() {
        let (rows, checks) = deposits_suite();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
        assert_eq!(rows.len(), 1 + 6 + 4 + 5 + 1);
    }

    #[test]
    fn flip_detection_needs_both_sides() {
        let rows = deposit_sweep(&worked_example(), &DepositRanges { dep_buyer: vec![9, 10], ..Default::default() });
        assert!(!flips_at(&rows, 8, |r| r.dep_buyer));
    }
}
