//! SARSA(lambda) with accumulating eligibility traces over the parameters of
//! a Q-value MLP, updated online through an Adam (or plain-gradient) step on
//! the TD-error-weighted trace.

use ndarray::Array1;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::{AdamHyper, Mlp, MlpGrads, Optimizer, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SarsaHyper {
    pub lambda: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SarsaLearner {
    pub net: Mlp,
    pub opt: Optimizer,
    pub hyper: SarsaHyper,
    trace: MlpGrads,
    #[serde(skip, default = "none_scratch")]
    scratch: Option<MlpGrads>,
}

fn none_scratch() -> Option<MlpGrads> {
    None
}

/// One on-policy transition. `next` carries the successor observation and the
/// action actually chosen there; `None` marks a terminal transition.
pub struct Transition<'a> {
    pub obs: &'a [f64],
    pub action: usize,
    pub reward: f64,
    pub next: Option<(&'a [f64], usize)>,
}

impl SarsaLearner {
    pub fn new(net: Mlp, opt: Optimizer, hyper: SarsaHyper) -> Self {
        let trace = net.zeros_like_grads();
        SarsaLearner { net, opt, hyper, trace, scratch: None }
    }

    pub fn adam<R: Rng + ?Sized>(
        dims: &[usize],
        learning_rate: f64,
        hyper: SarsaHyper,
        adam: AdamHyper,
        rng: &mut R,
    ) -> Self {
        let net = Mlp::new(dims, true, rng);
        let opt = Optimizer::adam(AdamHyper { learning_rate, ..adam }, net.flat_len());
        Self::new(net, opt, hyper)
    }

    pub fn q_values(&self, obs: &[f64]) -> Array1<f64> {
        self.net.forward(obs)
    }

    /// Greedy action over the legal set; ties break to the lowest index.
    pub fn greedy(&self, obs: &[f64], legal: &[usize]) -> usize {
        let q = self.q_values(obs);
        let mut best = legal[0];
        for &a in legal {
            if q[a] > q[best] {
                best = a;
            }
        }
        best
    }

    /// Epsilon-greedy over the legal set; illegal actions are never chosen.
    pub fn act<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        legal: &[usize],
        epsilon: f64,
        rng: &mut R,
    ) -> usize {
        if rng.gen::<f64>() < epsilon {
            legal[rng.gen_range(0..legal.len())]
        } else {
            self.greedy(obs, legal)
        }
    }

    /// Traces reset at episode boundaries.
    pub fn start_episode(&mut self) {
        self.trace.zero();
    }

    /// One online update:
    ///   delta = r + gamma Q(o', a') [not terminal] - Q(o, a)
    ///   z <- gamma lambda z + grad Q(o, a)
    ///   theta <- optimizer step on the gradient -delta * z
    pub fn update(&mut self, t: &Transition<'_>) {
        let (q, cache) = self.net.forward_cached(t.obs);
        let q_sa = q[t.action];
        let q_next = match t.next {
            Some((obs2, a2)) => self.net.forward(obs2)[a2],
            None => 0.0,
        };
        let delta = t.reward + self.hyper.gamma * q_next - q_sa;
        let mut dout = Array1::zeros(q.len());
        dout[t.action] = 1.0;
        let grad_q = self.net.backward(&cache, &dout);
        self.trace.scale_add(self.hyper.gamma * self.hyper.lambda, &grad_q, 1.0);
        // optimizer minimizes, so feed -delta * z
        let mut step = self.scratch.take().unwrap_or_else(|| self.net.zeros_like_grads());
        step.scale_add(0.0, &self.trace, -delta);
        self.opt.step(&mut self.net, &step);
        self.scratch = Some(step);
    }

    pub fn params_finite(&self) -> bool {
        self.net.all_finite()
    }
}

/// Free-function form of the update, mirroring the operation contract.
pub fn sarsa_lambda_update(learner: &mut SarsaLearner, transition: &Transition<'_>) {
    learner.update(transition);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut learner = SarsaLearner::adam(
            &[3, 8, 4],
            0.0,
            SarsaHyper { lambda: 0.1, gamma: 1.0 },
            AdamHyper::default(),
            &mut rng,
        );
        let before: Vec<f64> = learner.net.slices().concat();
        learner.start_episode();
        learner.update(&Transition { obs: &[1.0, 0.0, 0.5], action: 2, reward: 3.0, next: None });
        assert_eq!(before, learner.net.slices().concat());
    }

    #[test]
    fn zero_td_error_applies_a_zero_step() {
        // terminal transition with reward exactly Q(o,a): delta = 0, and with
        // fresh optimizer moments the applied step is zero
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut learner = SarsaLearner::adam(
            &[2, 4, 2],
            1e-2,
            SarsaHyper { lambda: 0.5, gamma: 1.0 },
            AdamHyper::default(),
            &mut rng,
        );
        let obs = [0.7, -0.3];
        let q = learner.q_values(&obs);
        let before: Vec<f64> = learner.net.slices().concat();
        learner.start_episode();
        learner.update(&Transition { obs: &obs, action: 0, reward: q[0], next: None });
        assert_eq!(before, learner.net.slices().concat());
    }

    /// One-hot tabular encoding, lambda = 0, plain SGD: the update must equal
    /// the classical rule Q(s,a) += alpha * delta on a 2-state chain.
    #[test]
    fn tabular_limit_matches_hand_computed_sarsa() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // linear net without bias: Q(s,.) = W . onehot(s)
        let mut net = Mlp::new(&[2, 2], false, &mut rng);
        // fix a known Q-table: Q(s0,.) = (1.0, 2.0), Q(s1,.) = (3.0, 4.0)
        {
            let mut s = net.slices_mut();
            s[0].copy_from_slice(&[1.0, 3.0, 2.0, 4.0]); // row-major (action, state)
        }
        let alpha = 0.1;
        let mut learner = SarsaLearner::new(
            net,
            Optimizer::sgd(alpha),
            SarsaHyper { lambda: 0.0, gamma: 1.0 },
        );
        let s0 = [1.0, 0.0];
        let s1 = [0.0, 1.0];
        learner.start_episode();
        // transition s0 --a=1, r=5--> s1 with next action 0
        learner.update(&Transition { obs: &s0, action: 1, reward: 5.0, next: Some((&s1, 0)) });
        // delta = 5 + Q(s1,0) - Q(s0,1) = 5 + 3 - 2 = 6; Q(s0,1) += 0.1*6
        let q0 = learner.q_values(&s0);
        assert!((q0[1] - 2.6).abs() < 1e-12, "Q(s0,1)={}", q0[1]);
        assert!((q0[0] - 1.0).abs() < 1e-12, "other entries untouched");
        let q1 = learner.q_values(&s1);
        assert!((q1[0] - 3.0).abs() < 1e-12);
        assert!((q1[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn traces_accumulate_across_steps() {
        // lambda = 1, gamma = 1, SGD: two visits to the same (s,a) make the
        // second delta apply through a doubled trace entry
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net = Mlp::new(&[1, 1], false, &mut rng);
        net.slices_mut()[0].copy_from_slice(&[0.0]);
        let mut learner =
            SarsaLearner::new(net, Optimizer::sgd(0.1), SarsaHyper { lambda: 1.0, gamma: 1.0 });
        let s = [1.0];
        learner.start_episode();
        // step 1: delta = 1 + 0 - 0 = 1, z = 1, w += 0.1
        learner.update(&Transition { obs: &s, action: 0, reward: 1.0, next: Some((&s, 0)) });
        assert!((learner.q_values(&s)[0] - 0.1).abs() < 1e-12);
        // step 2 (terminal): Q = 0.1, delta = 1 - 0.1 = 0.9, z = 2,
        // w += 0.1 * 0.9 * 2 = 0.18
        learner.update(&Transition { obs: &s, action: 0, reward: 1.0, next: None });
        assert!((learner.q_values(&s)[0] - 0.28).abs() < 1e-12);
    }

    #[test]
    fn masked_actions_are_never_selected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let learner = SarsaLearner::adam(
            &[2, 4, 6],
            1e-3,
            SarsaHyper { lambda: 0.1, gamma: 1.0 },
            AdamHyper::default(),
            &mut rng,
        );
        let legal = vec![1, 4];
        for _ in 0..200 {
            let a = learner.act(&[0.2, 0.8], &legal, 0.7, &mut rng);
            assert!(legal.contains(&a));
        }
    }
}
