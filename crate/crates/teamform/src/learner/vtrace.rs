//! V-trace off-policy corrections: truncated importance-weighted temporal
//! differences turned into value targets and policy-gradient advantages.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct VTraceOutput {
    /// Corrected value targets v_s, one per step.
    pub targets: Vec<f64>,
    /// Clipped-importance advantages for the policy gradient.
    pub advantages: Vec<f64>,
}

/// Compute V-trace targets over one unroll.
///
/// With all importance ratios equal to 1 (on-policy), v_s reduces to the
/// n-step bootstrapped return. The recursion runs backwards:
///   delta_s = rho_s (r_s + gamma V_{s+1} - V_s)
///   v_s = V_s + delta_s + gamma c_s (v_{s+1} - V_{s+1})
/// with V and v at the horizon equal to `bootstrap`.
pub fn vtrace_targets(
    behavior_logp: &[f64],
    target_logp: &[f64],
    rewards: &[f64],
    values: &[f64],
    bootstrap: f64,
    gamma: f64,
    rho_bar: f64,
    c_bar: f64,
) -> Result<VTraceOutput> {
    let t = rewards.len();
    if behavior_logp.len() != t || target_logp.len() != t || values.len() != t {
        return Err(Error::Contract(format!(
            "vtrace sequence lengths differ: lp {}/{} rewards {} values {}",
            behavior_logp.len(),
            target_logp.len(),
            t,
            values.len()
        )));
    }
    if t == 0 {
        return Err(Error::Contract("vtrace needs at least one step".into()));
    }
    let rho: Vec<f64> =
        (0..t).map(|s| (target_logp[s] - behavior_logp[s]).exp().min(rho_bar)).collect();
    let c: Vec<f64> =
        (0..t).map(|s| (target_logp[s] - behavior_logp[s]).exp().min(c_bar)).collect();
    let mut targets = vec![0.0; t];
    let mut next_target = bootstrap;
    let mut next_value = bootstrap;
    for s in (0..t).rev() {
        let delta = rho[s] * (rewards[s] + gamma * next_value - values[s]);
        targets[s] = values[s] + delta + gamma * c[s] * (next_target - next_value);
        next_target = targets[s];
        next_value = values[s];
    }
    let mut advantages = vec![0.0; t];
    for s in 0..t {
        let vnext = if s + 1 < t { targets[s + 1] } else { bootstrap };
        advantages[s] = rho[s] * (rewards[s] + gamma * vnext - values[s]);
    }
    Ok(VTraceOutput { targets, advantages })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Direct evaluation of the unrolled sum:
    ///   v_s = V_s + sum_{u>=s} gamma^{u-s} (prod_{k=s..u-1} c_k) delta_u
    fn unrolled_oracle(
        rho: &[f64],
        c: &[f64],
        rewards: &[f64],
        values: &[f64],
        bootstrap: f64,
        gamma: f64,
    ) -> Vec<f64> {
        let t = rewards.len();
        let mut out = vec![0.0; t];
        for s in 0..t {
            let mut acc = values[s];
            for u in s..t {
                let vnext = if u + 1 < t { values[u + 1] } else { bootstrap };
                let delta = rho[u] * (rewards[u] + gamma * vnext - values[u]);
                let mut coef = gamma.powi((u - s) as i32);
                for k in s..u {
                    coef *= c[k];
                }
                acc += coef * delta;
            }
            out[s] = acc;
        }
        out
    }

    #[test]
    fn on_policy_reduces_to_n_step_returns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in 1..=20usize {
            let lp: Vec<f64> = (0..t).map(|_| rng.gen::<f64>().ln()).collect();
            let rewards: Vec<f64> = (0..t).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let values: Vec<f64> = (0..t).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let bootstrap = rng.gen::<f64>();
            let gamma = 0.95;
            let out =
                vtrace_targets(&lp, &lp, &rewards, &values, bootstrap, gamma, 1.0, 1.0).unwrap();
            for s in 0..t {
                let mut ret = 0.0;
                for u in s..t {
                    ret += gamma.powi((u - s) as i32) * rewards[u];
                }
                ret += gamma.powi((t - s) as i32) * bootstrap;
                assert!(
                    (out.targets[s] - ret).abs() <= 1e-10,
                    "t={t} s={s}: {} vs {}",
                    out.targets[s],
                    ret
                );
            }
        }
    }

    #[test]
    fn gamma_zero_collapses_the_recursion() {
        let behavior = [0.5f64.ln(), 0.25f64.ln()];
        let target = [0.25f64.ln(), 0.5f64.ln()];
        let rewards = [1.0, -2.0];
        let values = [0.3, 0.6];
        let out =
            vtrace_targets(&behavior, &target, &rewards, &values, 9.0, 0.0, 1.0, 1.0).unwrap();
        for s in 0..2 {
            let rho = ((target[s] - behavior[s]).exp()).min(1.0);
            let want = values[s] + rho * (rewards[s] - values[s]);
            assert!((out.targets[s] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn off_policy_matches_the_unrolled_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let t = rng.gen_range(1..=12);
            let behavior: Vec<f64> = (0..t).map(|_| (rng.gen::<f64>() * 0.9 + 0.05).ln()).collect();
            let target: Vec<f64> = (0..t).map(|_| (rng.gen::<f64>() * 0.9 + 0.05).ln()).collect();
            let rewards: Vec<f64> = (0..t).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let values: Vec<f64> = (0..t).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let bootstrap = rng.gen::<f64>() - 0.5;
            let gamma = rng.gen::<f64>();
            let (rho_bar, c_bar) = (1.0, 1.0);
            let out = vtrace_targets(
                &behavior, &target, &rewards, &values, bootstrap, gamma, rho_bar, c_bar,
            )
            .unwrap();
            let rho: Vec<f64> =
                (0..t).map(|s| (target[s] - behavior[s]).exp().min(rho_bar)).collect();
            let c: Vec<f64> = (0..t).map(|s| (target[s] - behavior[s]).exp().min(c_bar)).collect();
            let oracle = unrolled_oracle(&rho, &c, &rewards, &values, bootstrap, gamma);
            for s in 0..t {
                assert!(
                    (out.targets[s] - oracle[s]).abs() <= 1e-10,
                    "s={s}: {} vs {}",
                    out.targets[s],
                    oracle[s]
                );
            }
        }
    }

    #[test]
    fn length_mismatch_is_a_contract_error() {
        let r = vtrace_targets(&[0.0], &[0.0, 0.0], &[1.0], &[0.0], 0.0, 1.0, 1.0, 1.0);
        assert!(r.is_err());
    }
}
