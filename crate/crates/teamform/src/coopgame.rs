//! Weighted voting games: characteristic function, pivotality, and exact
//! Shapley values (permutation enumeration and an integer-weight DP).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest agent count accepted by the permutation-enumeration path.
pub const PERMUTATION_BUDGET: usize = 10;

/// Tolerance used when testing whether all agents have identical power.
pub const EQUAL_POWER_TOL: f64 = 1e-9;

/// A weighted voting game `[w_1 .. w_n; q]`: a coalition wins iff its total
/// weight meets or exceeds the quota.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Board {
    weights: Vec<f64>,
    quota: f64,
}

impl Board {
    pub fn new(weights: Vec<f64>, quota: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidBoard("need at least one agent".into()));
        }
        if weights.len() > 63 {
            return Err(Error::InvalidBoard("at most 63 agents supported".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidBoard("weights must be finite and >= 0".into()));
        }
        if !quota.is_finite() || quota <= 0.0 {
            return Err(Error::InvalidBoard("quota must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if quota > total {
            return Err(Error::InvalidBoard(format!(
                "quota {quota} exceeds total weight {total}; the grand coalition must win"
            )));
        }
        Ok(Board { weights, quota })
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn quota(&self) -> f64 {
        self.quota
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weights and quota as exact integers, if they are integer-valued.
    pub fn integer_form(&self) -> Option<(Vec<u64>, u64)> {
        if self.quota.fract() != 0.0 || self.weights.iter().any(|w| w.fract() != 0.0) {
            return None;
        }
        let ws = self.weights.iter().map(|w| *w as u64).collect();
        Some((ws, self.quota as u64))
    }

    pub fn coalition_weight(&self, coalition: &Coalition) -> f64 {
        coalition.iter().map(|i| self.weights[i]).sum()
    }

    fn check_coalition(&self, coalition: &Coalition) -> Result<()> {
        if coalition.mask >> self.n() != 0 {
            return Err(Error::InvalidCoalition(format!(
                "member index out of range for n={}",
                self.n()
            )));
        }
        Ok(())
    }

    /// Characteristic function: 1 iff the coalition's weight meets the quota.
    ///
    /// The comparison is an exact `>=` with no epsilon.
    pub fn value(&self, coalition: &Coalition) -> Result<u8> {
        self.check_coalition(coalition)?;
        Ok(u8::from(self.coalition_weight(coalition) >= self.quota))
    }

    /// True iff the coalition wins and removing `agent` makes it lose.
    pub fn is_pivotal(&self, coalition: &Coalition, agent: usize) -> Result<bool> {
        self.check_coalition(coalition)?;
        if !coalition.contains(agent) {
            return Err(Error::NotAMember { agent });
        }
        Ok(self.value(coalition)? == 1 && self.value(&coalition.without(agent))? == 0)
    }
}

/// A subset of agent indices, stored as a bitmask (agent `i` = bit `i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coalition {
    mask: u64,
}

impl Coalition {
    pub const EMPTY: Coalition = Coalition { mask: 0 };

    pub fn from_members(members: &[usize]) -> Self {
        let mut mask = 0u64;
        for &m in members {
            assert!(m < 64, "agent index out of range");
            mask |= 1 << m;
        }
        Coalition { mask }
    }

    pub fn from_mask(mask: u64) -> Self {
        Coalition { mask }
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn contains(&self, agent: usize) -> bool {
        agent < 64 && self.mask & (1 << agent) != 0
    }

    pub fn with(&self, agent: usize) -> Self {
        assert!(agent < 64);
        Coalition { mask: self.mask | (1 << agent) }
    }

    pub fn without(&self, agent: usize) -> Self {
        Coalition { mask: self.mask & !(1u64 << agent.min(63)) }
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..64).filter(move |i| self.mask & (1 << i) != 0)
    }

    pub fn members(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl std::fmt::Display for Coalition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, m) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

/// Per-agent Shapley values; sums to 1 for any board.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyVector {
    values: Vec<f64>,
}

impl ShapleyVector {
    fn new(values: Vec<f64>) -> Self {
        let sum: f64 = values.iter().sum();
        debug_assert!((sum - 1.0).abs() <= 1e-9, "efficiency violated: sum={sum}");
        debug_assert!(values.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        ShapleyVector { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, agent: usize) -> f64 {
        self.values[agent]
    }

    pub fn spread(&self) -> f64 {
        let max = self.values.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.values.iter().cloned().fold(f64::MAX, f64::min);
        max - min
    }
}

/// Shapley values by full enumeration of all `n!` agent orderings.
///
/// An agent's value is the fraction of orderings in which adding it to the
/// agents before it turns the prefix from losing to winning.
pub fn shapley_permutations(board: &Board) -> Result<ShapleyVector> {
    let n = board.n();
    if n > PERMUTATION_BUDGET {
        return Err(Error::BudgetExceeded { n, max: PERMUTATION_BUDGET });
    }
    let quota = board.quota();
    let mut counts = vec![0u64; n];
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = 0u64;
    // Heap's algorithm, counting the pivot of each permutation in place.
    let mut c = vec![0usize; n];
    let mut tally = |perm: &[usize]| {
        let mut acc = 0.0;
        for &agent in perm {
            let before = acc;
            acc += board.weights()[agent];
            if before < quota && acc >= quota {
                counts[agent] += 1;
                break;
            }
        }
        total += 1;
    };
    tally(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            tally(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    let values = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(ShapleyVector::new(values))
}

/// Exact Shapley values for integer boards without enumerating permutations.
///
/// For each agent, counts coalitions of the other agents by (size, weight)
/// and sums `s!(n-1-s)!/n!` over the cells where the agent flips a losing
/// coalition to winning. All arithmetic is exact integer counting; the final
/// division is the only float step.
pub fn shapley_dp(board: &Board) -> Result<ShapleyVector> {
    let (weights, quota) = board.integer_form().ok_or(Error::UnsupportedWeights)?;
    let n = weights.len();
    if n > 33 {
        // n! must fit in u128 for the exact tally
        return Err(Error::BudgetExceeded { n, max: 33 });
    }
    let total: u64 = weights.iter().sum();
    let mut fact = vec![1u128; n + 1];
    for k in 1..=n {
        fact[k] = fact[k - 1] * k as u128;
    }
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        // counts[s][t]: subsets of the other agents with size s and weight t
        let mut counts = vec![vec![0u128; total as usize + 1]; n];
        counts[0][0] = 1;
        for (j, &wj) in weights.iter().enumerate() {
            if j == i {
                continue;
            }
            for s in (0..n - 1).rev() {
                for t in (0..=(total - wj) as usize).rev() {
                    if counts[s][t] != 0 {
                        let add = counts[s][t];
                        counts[s + 1][t + wj as usize] += add;
                    }
                }
            }
        }
        // agent i is pivotal after a prefix of weight t iff t < q <= t + w_i
        let lo = quota.saturating_sub(weights[i]);
        let mut numer = 0u128;
        if quota >= 1 {
            for (s, row) in counts.iter().enumerate() {
                for t in lo..quota {
                    let t = t as usize;
                    if t < row.len() && row[t] != 0 {
                        numer += row[t] * fact[s] * fact[n - 1 - s];
                    }
                }
            }
        }
        values.push(numer as f64 / fact[n] as f64);
    }
    Ok(ShapleyVector::new(values))
}

/// Shapley values via the DP when the board is integer, else by permutations.
pub fn shapley(board: &Board) -> Result<ShapleyVector> {
    if board.integer_form().is_some() {
        shapley_dp(board)
    } else {
        shapley_permutations(board)
    }
}

/// True iff every agent has the same Shapley value (within `EQUAL_POWER_TOL`).
pub fn all_equal_power(board: &Board) -> Result<bool> {
    Ok(shapley(board)?.spread() <= EQUAL_POWER_TOL)
}
