//! Backward induction for the fixed-horizon Propose-Accept game: per-round
//! acceptance thresholds, minimal outgoing payments, optimal proposer
//! coalitions, and expected utilities. Thresholds are exact rationals
//! internally, so argmin coalition sets are tie-exact; weights are compared
//! with exact integer arithmetic after decimal scaling.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::coopgame::{Board, Coalition};
use crate::error::{Error, Result};

/// Threshold update rule. `Real` follows the displayed recursion
/// a = 1 + expectation; `IntegerCeiling` uses the prose reading
/// a = floor(expectation) + 1 (minimal integer strictly exceeding it).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdMode {
    Real,
    IntegerCeiling,
}

/// Per-round solver tables, indexed `[t][player]` with `t = 0` the final
/// round. `thresholds[0]` is all-ones: in the last round any positive offer
/// beats the zero outside option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashTables {
    pub thresholds: Vec<Vec<f64>>,
    pub min_payments: Vec<Vec<f64>>,
    pub proposer_payoffs: Vec<Vec<f64>>,
    pub optimal_coalitions: Vec<Vec<Vec<Coalition>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashSolution {
    pub tables: NashTables,
    /// v_i = a^{T-1}_i - 1: each player's expected payoff.
    pub expected_utilities: Vec<f64>,
    /// u_i = v_i / sum_j v_j.
    pub normalized: Vec<f64>,
}

/// Exact integer weights for the winning test. Decimal inputs like 0.4 are
/// scaled by the smallest power of ten that makes every weight and the quota
/// integral, so borderline sums such as 0.4+0.4+0.2 >= 1 cannot float-drift.
fn integer_scaled(board: &Board) -> Option<(Vec<u64>, u64)> {
    'scale: for k in 0..=9u32 {
        let mul = 10f64.powi(k as i32);
        let mut ws = Vec::with_capacity(board.n());
        for &w in board.weights() {
            let scaled = w * mul;
            if (scaled - scaled.round()).abs() > 1e-6 || scaled.round() < 0.0 {
                continue 'scale;
            }
            ws.push(scaled.round() as u64);
        }
        let q = board.quota() * mul;
        if (q - q.round()).abs() > 1e-6 {
            continue;
        }
        return Some((ws, q.round() as u64));
    }
    None
}

struct WinningSets {
    n: usize,
    /// winning[mask] for all 2^n coalitions
    winning: Vec<bool>,
}

impl WinningSets {
    fn build(board: &Board) -> Result<Self> {
        let n = board.n();
        if n > 20 {
            return Err(Error::Contract(format!("coalition enumeration capped at n=20, got {n}")));
        }
        let winning = match integer_scaled(board) {
            Some((ws, q)) => (0u64..1 << n)
                .map(|mask| {
                    let sum: u64 =
                        (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ws[i]).sum();
                    sum >= q
                })
                .collect(),
            None => (0u64..1 << n)
                .map(|mask| {
                    let sum: f64 = (0..n)
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| board.weights()[i])
                        .sum();
                    sum >= board.quota()
                })
                .collect(),
        };
        Ok(WinningSets { n, winning })
    }

    fn masks_containing(&self, player: usize) -> impl Iterator<Item = u64> + '_ {
        (0u64..1 << self.n)
            .filter(move |m| m & (1 << player) != 0 && self.winning[*m as usize])
    }
}

/// Exact minimum over winning coalitions containing `player` of the summed
/// thresholds paid to the other members, with the full argmin set.
fn min_payment_exact(
    sets: &WinningSets,
    player: usize,
    thresholds: &[BigRational],
) -> (BigRational, Vec<Coalition>) {
    let mut best: Option<BigRational> = None;
    let mut argmin: Vec<Coalition> = Vec::new();
    for mask in sets.masks_containing(player) {
        let mut cost = BigRational::zero();
        for j in 0..sets.n {
            if j != player && mask & (1 << j) != 0 {
                cost += &thresholds[j];
            }
        }
        match &best {
            None => {
                best = Some(cost);
                argmin.push(Coalition::from_mask(mask));
            }
            Some(b) => {
                if &cost < b {
                    best = Some(cost);
                    argmin.clear();
                    argmin.push(Coalition::from_mask(mask));
                } else if &cost == b {
                    argmin.push(Coalition::from_mask(mask));
                }
            }
        }
    }
    (best.expect("grand coalition wins, so the argmin set is nonempty"), argmin)
}

/// Float-threshold variant of the minimal-payment search; ties are grouped
/// with a 1e-9 relative tolerance. Exact-rational callers go through the
/// solver instead.
pub fn min_payment_coalitions(
    board: &Board,
    player: usize,
    thresholds: &[f64],
) -> Result<(f64, Vec<Coalition>)> {
    if player >= board.n() {
        return Err(Error::Contract(format!("player {player} out of range")));
    }
    if thresholds.len() != board.n() {
        return Err(Error::Contract("one threshold per player required".into()));
    }
    if thresholds.iter().any(|a| !a.is_finite() || *a <= 0.0) {
        return Err(Error::Contract("thresholds must be finite and positive".into()));
    }
    let sets = WinningSets::build(board)?;
    let mut best = f64::INFINITY;
    for mask in sets.masks_containing(player) {
        let cost: f64 = (0..board.n())
            .filter(|&j| j != player && mask & (1 << j) != 0)
            .map(|j| thresholds[j])
            .sum();
        if cost < best {
            best = cost;
        }
    }
    let tol = 1e-9 * best.abs().max(1.0);
    let argmin = sets
        .masks_containing(player)
        .filter(|&mask| {
            let cost: f64 = (0..board.n())
                .filter(|&j| j != player && mask & (1 << j) != 0)
                .map(|j| thresholds[j])
                .sum();
            cost <= best + tol
        })
        .map(Coalition::from_mask)
        .collect();
    Ok((best, argmin))
}

/// Solve the T-round game by backward induction.
///
/// Round tables run t = 0 (final round) through T-1 (first round). Expected
/// utilities are v_i = a^{T-1}_i - 1, reproducing the reference worked
/// example at T=10; the total sum(v) equals r for every T >= 2 because each
/// equilibrium episode allocates the full reward in its first round.
pub fn solve_backward_induction(
    board: &Board,
    total_reward: u32,
    rounds: u32,
    mode: ThresholdMode,
) -> Result<NashSolution> {
    if rounds == 0 {
        return Err(Error::Contract("need at least one round".into()));
    }
    if total_reward == 0 {
        return Err(Error::Contract("total reward must be positive".into()));
    }
    let n = board.n();
    let sets = WinningSets::build(board)?;
    let r = BigRational::from_integer(BigInt::from(total_reward));
    let n_rat = BigRational::from_integer(BigInt::from(n as u64));

    let mut thresholds: Vec<BigRational> = vec![BigRational::one(); n];
    let mut tables = NashTables {
        thresholds: Vec::with_capacity(rounds as usize),
        min_payments: Vec::with_capacity(rounds as usize),
        proposer_payoffs: Vec::with_capacity(rounds as usize),
        optimal_coalitions: Vec::with_capacity(rounds as usize),
    };

    let mut final_thresholds = thresholds.clone();
    for t in 0..rounds {
        let mut payments = Vec::with_capacity(n);
        let mut coalitions = Vec::with_capacity(n);
        let mut payoffs = Vec::with_capacity(n);
        for i in 0..n {
            let (g, arg) = min_payment_exact(&sets, i, &thresholds);
            payoffs.push(&r - &g);
            payments.push(g);
            coalitions.push(arg);
        }
        tables.thresholds.push(thresholds.iter().map(|a| rat_to_f64(a)).collect());
        tables.min_payments.push(payments.iter().map(rat_to_f64).collect());
        tables.proposer_payoffs.push(payoffs.iter().map(rat_to_f64).collect());
        tables.optimal_coalitions.push(coalitions.clone());
        final_thresholds = thresholds.clone();

        if t + 1 == rounds {
            break;
        }
        // a^{t+1}_i = 1 + (1/n) d^t_i
        //              + sum_{j != i} P(i in proposed C | j proposes) (1/n) a^t_i
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let mut expectation = &payoffs[i] / &n_rat;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let total = coalitions[j].len() as u64;
                let containing =
                    coalitions[j].iter().filter(|c| c.contains(i)).count() as u64;
                if containing > 0 {
                    let p = BigRational::new(
                        BigInt::from(containing),
                        BigInt::from(n as u64 * total),
                    );
                    expectation += p * &thresholds[i];
                }
            }
            let a = match mode {
                ThresholdMode::Real => BigRational::one() + expectation,
                ThresholdMode::IntegerCeiling => {
                    BigRational::from_integer(expectation.floor().to_integer())
                        + BigRational::one()
                }
            };
            next.push(a);
        }
        thresholds = next;
    }

    let v: Vec<BigRational> =
        final_thresholds.iter().map(|a| a - BigRational::one()).collect();
    let total: BigRational = v.iter().fold(BigRational::zero(), |acc, x| acc + x);
    let normalized: Vec<f64> = if total.is_zero() {
        vec![0.0; n]
    } else {
        v.iter().map(|x| rat_to_f64(&(x / &total))).collect()
    };
    Ok(NashSolution {
        tables,
        expected_utilities: v.iter().map(rat_to_f64).collect(),
        normalized,
    })
}

fn rat_to_f64(x: &BigRational) -> f64 {
    // to_f64 on huge numerators stays finite via string fallback
    x.to_f64().unwrap_or_else(|| {
        let approx = BigRational::from_f64(1e18).unwrap();
        (x * &approx).to_f64().unwrap_or(f64::NAN) / 1e18
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The worked example game: two big players (0.4) and three small (0.2),
    /// quota 1, reward 20.
    fn example_board() -> Board {
        Board::new(vec![0.4, 0.4, 0.2, 0.2, 0.2], 1.0).unwrap()
    }

    fn coalition_set(members: &[&[usize]]) -> Vec<Coalition> {
        let mut v: Vec<Coalition> =
            members.iter().map(|m| Coalition::from_members(m)).collect();
        v.sort();
        v
    }

    #[test]
    fn final_round_minimal_payments_match_the_worked_example() {
        let board = example_board();
        let (g, arg) = min_payment_coalitions(&board, 0, &[1.0; 5]).unwrap();
        assert_eq!(g, 2.0);
        assert_eq!(arg, coalition_set(&[&[0, 1, 2], &[0, 1, 3], &[0, 1, 4]]));

        let (g, arg) = min_payment_coalitions(&board, 2, &[1.0; 5]).unwrap();
        assert_eq!(g, 2.0);
        assert_eq!(arg, coalition_set(&[&[0, 1, 2]]));
    }

    #[test]
    fn dictator_pays_nothing() {
        let board = Board::new(vec![16.0, 1.0, 1.0, 1.0, 1.0], 15.0).unwrap();
        let (g, arg) = min_payment_coalitions(&board, 0, &[1.0; 5]).unwrap();
        assert_eq!(g, 0.0);
        assert_eq!(arg[0], Coalition::from_members(&[0]));
    }

    #[test]
    fn worked_example_round_zero_tables() {
        let sol =
            solve_backward_induction(&example_board(), 20, 10, ThresholdMode::Real).unwrap();
        assert_eq!(sol.tables.thresholds[0], vec![1.0; 5]);
        assert_eq!(sol.tables.min_payments[0], vec![2.0; 5]);
        assert_eq!(sol.tables.proposer_payoffs[0], vec![18.0; 5]);
        let mut c0 = sol.tables.optimal_coalitions[0][0].clone();
        c0.sort();
        assert_eq!(c0, coalition_set(&[&[0, 1, 2], &[0, 1, 3], &[0, 1, 4]]));
        let c2 = sol.tables.optimal_coalitions[0][2].clone();
        assert_eq!(c2, coalition_set(&[&[0, 1, 2]]));
    }

    #[test]
    fn worked_example_ten_round_utilities() {
        let sol =
            solve_backward_induction(&example_board(), 20, 10, ThresholdMode::Real).unwrap();
        let v = &sol.expected_utilities;
        for (got, want) in v.iter().zip([6.29, 6.29, 2.473, 2.473, 2.473]) {
            assert!((got - want).abs() <= 0.01, "v={got} vs {want}");
        }
        let sum: f64 = v.iter().sum();
        assert!((sum - 20.0).abs() <= 1e-6);
        for (got, want) in sol.normalized.iter().zip([0.315, 0.315, 0.124, 0.124, 0.124]) {
            assert!((got - want).abs() <= 0.001, "u={got} vs {want}");
        }
    }

    /// Single-proposal-round expectation, verified against a direct
    /// enumeration over proposer identities and their optimal coalitions;
    /// under the table indexing this is the T=2 solution.
    #[test]
    fn direct_enumeration_of_the_one_shot_expectation() {
        let board = example_board();
        let r = 20u32;
        let sol = solve_backward_induction(&board, r, 2, ThresholdMode::Real).unwrap();
        // last-round tables: thresholds 1, payments g, payoff d, coalitions C
        let g = &sol.tables.min_payments[0];
        let d = &sol.tables.proposer_payoffs[0];
        let c = &sol.tables.optimal_coalitions[0];
        let n = board.n();
        for i in 0..n {
            let mut expected = d[i] / n as f64;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let p_in = c[j].iter().filter(|cx| cx.contains(i)).count() as f64
                    / c[j].len() as f64;
                expected += p_in * 1.0 / n as f64; // pays a^0_i = 1 when included
            }
            assert!(
                (sol.expected_utilities[i] - expected).abs() < 1e-12,
                "player {i}: {} vs {expected} (g={})",
                sol.expected_utilities[i],
                g[i]
            );
        }
    }

    #[test]
    fn reward_is_fully_allocated_for_all_horizons() {
        let board = example_board();
        for t in 2..=12 {
            let sol = solve_backward_induction(&board, 20, t, ThresholdMode::Real).unwrap();
            let sum: f64 = sol.expected_utilities.iter().sum();
            assert!((sum - 20.0).abs() <= 1e-6, "T={t}: sum={sum}");
            let usum: f64 = sol.normalized.iter().sum();
            assert!((usum - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn symmetric_players_get_equal_utilities() {
        let board = Board::new(vec![6.0, 5.0, 6.0, 7.0, 6.0], 15.0).unwrap();
        let sol = solve_backward_induction(&board, 10, 10, ThresholdMode::Real).unwrap();
        let v = &sol.expected_utilities;
        assert!((v[0] - v[2]).abs() < 1e-9);
        assert!((v[0] - v[4]).abs() < 1e-9);
    }

    #[test]
    fn integer_ceiling_mode_yields_integral_thresholds() {
        let sol =
            solve_backward_induction(&example_board(), 20, 6, ThresholdMode::IntegerCeiling)
                .unwrap();
        for row in &sol.tables.thresholds {
            for a in row {
                assert_eq!(a.fract(), 0.0);
            }
        }
    }

    #[test]
    fn exact_scaling_handles_decimal_weights() {
        // 0.4+0.4+0.2 must meet quota 1 exactly despite binary floats
        let board = example_board();
        let sets = WinningSets::build(&board).unwrap();
        let mask = 0b00111u64; // players 0, 1, 2
        assert!(sets.winning[mask as usize]);
        let mask_small = 0b11100u64; // 0.2*3 = 0.6 loses
        assert!(!sets.winning[mask_small as usize]);
    }
}
