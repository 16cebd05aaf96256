//! Synchronous advantage actor-critic with V-trace corrections for the
//! spatial environment. Trajectories come from a fixed set of parallel
//! environment copies; each seat applies one optimizer step per unroll batch.

use ndarray::{Array1, Array3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::{masked_softmax, AdamHyper, ConvAc, Optimizer, ParamSet};
use super::vtrace::vtrace_targets;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcHyper {
    pub gamma: f64,
    pub entropy_cost: f64,
    pub baseline_cost: f64,
    pub rho_bar: f64,
    pub c_bar: f64,
}

impl Default for AcHyper {
    fn default() -> Self {
        AcHyper { gamma: 1.0, entropy_cost: 0.01, baseline_cost: 0.5, rho_bar: 1.0, c_bar: 1.0 }
    }
}

/// One step of a collected unroll for a single seat.
#[derive(Debug, Clone)]
pub struct AcStep {
    pub grid: Array3<f64>,
    pub extras: Vec<f64>,
    pub action: usize,
    pub behavior_logp: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcLearner {
    pub net: ConvAc,
    pub opt: Optimizer,
    pub hyper: AcHyper,
}

impl AcLearner {
    pub fn new<R: Rng + ?Sized>(
        in_channels: usize,
        in_size: usize,
        extras_len: usize,
        n_actions: usize,
        hidden: usize,
        learning_rate: f64,
        adam: AdamHyper,
        hyper: AcHyper,
        rng: &mut R,
    ) -> Self {
        let net = ConvAc::new(in_channels, in_size, extras_len, n_actions, hidden, rng);
        let opt = Optimizer::adam(AdamHyper { learning_rate, ..adam }, net.flat_len());
        AcLearner { net, opt, hyper }
    }

    /// Sample an action from the current policy; returns (action, log-prob, value).
    pub fn act<R: Rng + ?Sized>(
        &self,
        grid: &Array3<f64>,
        extras: &[f64],
        rng: &mut R,
    ) -> Result<(usize, f64, f64)> {
        let (probs, value) = self.net.policy_value(grid, extras, None)?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut action = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                action = i;
                break;
            }
        }
        Ok((action, probs[action].max(1e-300).ln(), value))
    }

    /// Mode of the policy distribution (frozen evaluation).
    pub fn act_greedy(&self, grid: &Array3<f64>, extras: &[f64]) -> Result<usize> {
        let (probs, _) = self.net.policy_value(grid, extras, None)?;
        let mut best = 0;
        for (i, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = i;
            }
        }
        Ok(best)
    }

    /// Accumulate the gradient for one unroll segment (an episode slice from
    /// a single environment). `bootstrap` is 0 at terminal boundaries and the
    /// current value estimate otherwise.
    ///
    /// Loss per step: -log pi(a) * advantage + baseline_cost * (V - v_s)^2 / 2
    /// - entropy_cost * H(pi); gradients are summed into `grads` and the
    /// caller averages over the batch.
    pub fn accumulate_unroll(
        &self,
        steps: &[AcStep],
        bootstrap: f64,
        grads: &mut super::net::ConvAcGrads,
    ) -> Result<usize> {
        let caches: Vec<_> = steps
            .iter()
            .map(|s| self.net.forward_cached(&s.grid, &s.extras))
            .collect::<Result<_>>()?;
        let values: Vec<f64> = caches.iter().map(|c| c.value).collect();
        let rewards: Vec<f64> = steps.iter().map(|s| s.reward).collect();
        let behavior: Vec<f64> = steps.iter().map(|s| s.behavior_logp).collect();
        let target_lp: Vec<f64> = caches
            .iter()
            .zip(steps)
            .map(|(c, s)| {
                let probs = masked_softmax(c.logits.as_slice().unwrap(), None)?;
                Ok(probs[s.action].max(1e-300).ln())
            })
            .collect::<Result<_>>()?;
        let vt = vtrace_targets(
            &behavior,
            &target_lp,
            &rewards,
            &values,
            bootstrap,
            self.hyper.gamma,
            self.hyper.rho_bar,
            self.hyper.c_bar,
        )?;
        for (s, cache) in caches.iter().enumerate() {
            let probs = masked_softmax(cache.logits.as_slice().unwrap(), None)?;
            let adv = vt.advantages[s];
            let mut dlogits = Array1::zeros(probs.len());
            // policy gradient: d(-logpi(a) * adv)/dlogits = (pi - onehot) * adv
            for (i, p) in probs.iter().enumerate() {
                dlogits[i] = p * adv;
            }
            dlogits[steps[s].action] -= adv;
            // entropy bonus: d(-beta H)/dlogit_k = beta * pi_k (log pi_k + H)
            let entropy: f64 =
                probs.iter().filter(|p| **p > 0.0).map(|p| -p * p.ln()).sum();
            for (i, p) in probs.iter().enumerate() {
                if *p > 0.0 {
                    dlogits[i] += self.hyper.entropy_cost * p * (p.ln() + entropy);
                }
            }
            let dvalue = self.hyper.baseline_cost * (cache.value - vt.targets[s]);
            let g = self.net.backward(cache, &dlogits, dvalue);
            grads.scale_add(1.0, &g, 1.0);
        }
        Ok(steps.len())
    }

    /// Average accumulated gradients over `count` steps and apply one step.
    pub fn apply(&mut self, grads: &mut super::net::ConvAcGrads, count: usize) {
        if count == 0 {
            return;
        }
        let scale = 1.0 / count as f64;
        let mut zero = self.net.zeros_like_grads();
        zero.scale_add(0.0, grads, scale);
        self.opt.step(&mut self.net, &zero);
    }

    pub fn params_finite(&self) -> bool {
        self.net.all_finite()
    }
}
