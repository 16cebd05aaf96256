//! Rank statistics used by the experiment harness: Mann-Whitney U with an
//! exact small-sample mode, plus Pearson and Spearman correlation.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Sample sizes up to this bound use the exact permutation distribution.
pub const EXACT_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// min(U_a, U_b)
    pub u: f64,
    /// U statistic of the first sample.
    pub u_a: f64,
    /// Two-sided p value.
    pub p: f64,
    /// Whether the exact permutation distribution was used.
    pub exact: bool,
}

/// Midranks of the pooled sample, in pooled order (a first, then b).
fn midranks(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut pooled: Vec<(f64, usize)> = a
        .iter()
        .chain(b.iter())
        .cloned()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    pooled.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut ranks = vec![0.0; pooled.len()];
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0; // average of 1-based ranks i+1..=j
        for k in i..j {
            ranks[pooled[k].1] = rank;
        }
        i = j;
    }
    ranks
}

/// Mann-Whitney-Wilcoxon rank-sum test, two-sided.
///
/// Small samples (both sides <= `EXACT_LIMIT`) are evaluated against the exact
/// permutation distribution of the rank sum, which handles ties without any
/// approximation. Larger samples use the tie-corrected normal approximation
/// with a continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (na, nb) = (a.len(), b.len());
    let ranks = midranks(a, b);
    let r_a: f64 = ranks[..na].iter().sum();
    let u_a = r_a - (na * (na + 1)) as f64 / 2.0;
    let u_b = (na * nb) as f64 - u_a;
    let u = u_a.min(u_b);

    if na <= EXACT_LIMIT && nb <= EXACT_LIMIT {
        let p = exact_two_sided_p(&ranks, na, u_a);
        return Ok(MannWhitney { u, u_a, p, exact: true });
    }

    // tie-corrected normal approximation
    let n = (na + nb) as f64;
    let mut tie_term = 0.0;
    let mut sorted: Vec<f64> = a.iter().chain(b.iter()).cloned().collect();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let mean = (na * nb) as f64 / 2.0;
    let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var == 0.0 {
        // all pooled values identical
        return Ok(MannWhitney { u, u_a, p: 1.0, exact: false });
    }
    let z = (u_a - mean).abs() - 0.5; // continuity correction
    let z = z.max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let p = (2.0 * normal.cdf(-z)).min(1.0);
    Ok(MannWhitney { u, u_a, p, exact: false })
}

/// Exact two-sided p: 2 * min tail of the permutation distribution of U_a,
/// computed by counting subsets with a DP over doubled midranks.
fn exact_two_sided_p(ranks: &[f64], na: usize, u_a: f64) -> f64 {
    // doubled midranks are integers; rank sums fit comfortably in usize
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // counts[k][s]: number of k-subsets of the pooled ranks with doubled rank sum s
    let mut counts = vec![vec![0u128; max_sum + 1]; na + 1];
    counts[0][0] = 1;
    for &d in &doubled {
        for k in (0..na).rev() {
            for s in (0..=max_sum.saturating_sub(d)).rev() {
                if counts[k][s] != 0 {
                    let add = counts[k][s];
                    counts[k + 1][s + d] += add;
                }
            }
        }
    }
    let total: u128 = counts[na].iter().sum();
    // observed doubled rank sum of sample a
    let obs = (2.0 * (u_a + (na * (na + 1)) as f64 / 2.0)).round() as usize;
    let lo: u128 = counts[na][..=obs.min(max_sum)].iter().sum();
    let hi: u128 = counts[na][obs.min(max_sum)..].iter().sum();
    let tail = lo.min(hi) as f64 / total as f64;
    (2.0 * tail).min(1.0)
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Contract(format!(
            "pearson: length mismatch {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::EmptySample);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Contract("pearson: zero variance sample".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation (midranks for ties, then Pearson).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Contract(format!(
            "spearman: length mismatch {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let rx = rank_transform(x);
    let ry = rank_transform(y);
    pearson(&rx, &ry)
}

fn rank_transform(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[i].partial_cmp(&x[j]).unwrap());
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for k in i..j {
            ranks[idx[k]] = rank;
        }
        i = j;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;

    /// Brute-force oracle: walk every assignment of pooled values to group a.
    fn enumeration_p(a: &[f64], b: &[f64]) -> (f64, f64) {
        let pooled: Vec<f64> = a.iter().chain(b.iter()).cloned().collect();
        let na = a.len();
        let ranks = midranks(a, b);
        let r_obs: f64 = ranks[..na].iter().sum();
        let u_obs = r_obs - (na * (na + 1)) as f64 / 2.0;
        let all_ranks = {
            // midranks of the pooled sample against itself
            let mut idx: Vec<usize> = (0..pooled.len()).collect();
            idx.sort_by(|&i, &j| pooled[i].partial_cmp(&pooled[j]).unwrap());
            let mut rk = vec![0.0; pooled.len()];
            let mut i = 0;
            while i < idx.len() {
                let mut j = i + 1;
                while j < idx.len() && pooled[idx[j]] == pooled[idx[i]] {
                    j += 1;
                }
                for k in i..j {
                    rk[idx[k]] = (i + j + 1) as f64 / 2.0;
                }
                i = j;
            }
            rk
        };
        let mut lo = 0u64;
        let mut hi = 0u64;
        let mut total = 0u64;
        for subset in (0..pooled.len()).combinations(na) {
            let r: f64 = subset.iter().map(|&i| all_ranks[i]).sum();
            let u = r - (na * (na + 1)) as f64 / 2.0;
            if u <= u_obs + 1e-9 {
                lo += 1;
            }
            if u >= u_obs - 1e-9 {
                hi += 1;
            }
            total += 1;
        }
        let tail = (lo.min(hi) as f64) / total as f64;
        (u_obs, (2.0 * tail).min(1.0))
    }

    #[test]
    fn textbook_separated_samples() {
        let a = [1.0, 2.0, 3.0];
        let b = [4.0, 5.0, 6.0];
        let mw = mann_whitney_u(&a, &b).unwrap();
        assert_eq!(mw.u, 0.0);
        assert!((mw.p - 0.1).abs() < 1e-12, "p={}", mw.p);
        assert!(mw.exact);
    }

    #[test]
    fn identical_constant_samples_p_one() {
        let a = [2.0, 2.0, 2.0];
        let b = [2.0, 2.0];
        let mw = mann_whitney_u(&a, &b).unwrap();
        assert_eq!(mw.p, 1.0);
    }

    #[test]
    fn empty_sample_errors() {
        assert!(matches!(mann_whitney_u(&[], &[1.0]), Err(Error::EmptySample)));
    }

    #[test]
    fn exact_matches_enumeration_small_sizes() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for na in 1..=8usize {
            for nb in 1..=8usize {
                // ties included: values drawn from a small integer range
                let a: Vec<f64> = (0..na).map(|_| rng.gen_range(0..6) as f64).collect();
                let b: Vec<f64> = (0..nb).map(|_| rng.gen_range(0..6) as f64).collect();
                let mw = mann_whitney_u(&a, &b).unwrap();
                let (u_oracle, p_oracle) = enumeration_p(&a, &b);
                assert_eq!(mw.u_a, u_oracle, "u mismatch a={a:?} b={b:?}");
                assert!(
                    (mw.p - p_oracle).abs() < 1e-12,
                    "p mismatch a={a:?} b={b:?}: {} vs {}",
                    mw.p,
                    p_oracle
                );
            }
        }
    }

    #[test]
    fn large_shift_is_decisive() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..100).map(|i| 1000.0 + i as f64).collect();
        let mw = mann_whitney_u(&a, &b).unwrap();
        assert!(!mw.exact);
        assert!(mw.p < 1e-6, "p={}", mw.p);
    }

    #[test]
    fn pearson_direct_formula_oracle() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(3..40);
            let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 10.0).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 10.0).collect();
            let r = pearson(&x, &y).unwrap();
            // direct formula route
            let nf = n as f64;
            let sx: f64 = x.iter().sum();
            let sy: f64 = y.iter().sum();
            let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            let sxx: f64 = x.iter().map(|a| a * a).sum();
            let syy: f64 = y.iter().map(|a| a * a).sum();
            let oracle =
                (nf * sxy - sx * sy) / ((nf * sxx - sx * sx).sqrt() * (nf * syy - sy * sy).sqrt());
            assert!((r - oracle).abs() <= 1e-12, "{r} vs {oracle}");
        }
    }

    #[test]
    fn spearman_perfect_monotone() {
        let x = [1.0, 2.0, 5.0, 9.0];
        let y = [10.0, 20.0, 21.0, 40.0];
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let y_dec = [4.0, 3.0, 2.0, 1.0];
        assert!((spearman(&x, &y_dec).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_matches_rank_pearson_oracle() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.gen_range(4..30);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64).collect();
            if rank_transform(&x).iter().all(|&r| r == rank_transform(&x)[0])
                || rank_transform(&y).iter().all(|&r| r == rank_transform(&y)[0])
            {
                continue;
            }
            let s = spearman(&x, &y).unwrap();
            let oracle = pearson(&rank_transform(&x), &rank_transform(&y)).unwrap();
            assert!((s - oracle).abs() <= 1e-12);
        }
    }
}
