//! The experiment operations: Shapley-correspondence runs, bot comparisons,
//! spatial perturbations, the supervised Shapley regression, and the
//! Nash-Shapley correlation. Each returns a typed report; CSV emission is a
//! thin layer on top.

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boards::{generate_split, BoardDistribution, BoardSet};
use crate::bots::BotMode;
use crate::coopgame::shapley;
use crate::env::propose_accept::PaConfig;
use crate::env::team_patches::TpConfig;
use crate::error::{Error, Result};
use crate::learner::net::{AdamHyper, Mlp, Optimizer, ParamSet};
use crate::learner::population::{
    evaluate_pa, evaluate_tp, train_pa_population, train_tp_population, EvalSeat, PaPopulation,
    PaSeat, RlConfig, SeatSpec, TpPopulation,
};
use crate::nash::{solve_backward_induction, ThresholdMode};
use crate::stats::{mann_whitney_u, pearson, spearman};

/// Which negotiation protocol an experiment runs on.
#[derive(Debug, Clone)]
pub enum EnvKind {
    ProposeAccept(PaConfig),
    TeamPatches(TpConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrespondencePair {
    pub board: usize,
    pub seat: usize,
    pub shapley: f64,
    pub share: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrespondenceReport {
    pub pairs: Vec<CorrespondencePair>,
    pub pearson: f64,
    /// Mean |share - shapley|: distance from the identity line.
    pub mean_abs_dev: f64,
}

/// Train populations on the train set, evaluate frozen on every test board,
/// and pair each seat's normalized empirical reward with its Shapley value.
pub fn shapley_correspondence(
    env: &EnvKind,
    train: &BoardSet,
    test: &BoardSet,
    rl: &RlConfig,
    populations: usize,
    eval_episodes: usize,
    seed: u64,
) -> Result<CorrespondenceReport> {
    if populations == 0 || test.boards.is_empty() {
        return Err(Error::Config("need at least one population and test board".into()));
    }
    let n = test.boards[0].n();
    let shares = match env {
        EnvKind::ProposeAccept(pa) => {
            let r = pa.total_reward as f64;
            let pops: Vec<PaPopulation> = (0..populations)
                .into_par_iter()
                .map(|k| {
                    train_pa_population(
                        train,
                        pa,
                        rl,
                        &vec![SeatSpec::Learner; n],
                        seed.wrapping_add(k as u64),
                    )
                })
                .collect::<Result<_>>()?;
            let mut shares = vec![vec![0.0; n]; test.boards.len()];
            for pop in &pops {
                let seats = pop.eval_seats();
                let per_board: Vec<Vec<f64>> = test
                    .boards
                    .par_iter()
                    .enumerate()
                    .map(|(j, board)| {
                        evaluate_pa(&seats, board, pa, eval_episodes, seed ^ (j as u64) << 17)
                            .map(|rep| rep.mean_rewards)
                    })
                    .collect::<Result<_>>()?;
                for (j, means) in per_board.iter().enumerate() {
                    for i in 0..n {
                        shares[j][i] += means[i] / r / populations as f64;
                    }
                }
            }
            shares
        }
        EnvKind::TeamPatches(tp) => {
            let r = tp.total_reward as f64;
            let pops: Vec<TpPopulation> = (0..populations)
                .into_par_iter()
                .map(|k| train_tp_population(train, tp, rl, seed.wrapping_add(k as u64)))
                .collect::<Result<_>>()?;
            let mut shares = vec![vec![0.0; n]; test.boards.len()];
            for pop in &pops {
                let per_board: Vec<Vec<f64>> = test
                    .boards
                    .par_iter()
                    .enumerate()
                    .map(|(j, board)| {
                        evaluate_tp(pop, board, tp, eval_episodes, seed ^ (j as u64) << 17)
                            .map(|rep| rep.mean_rewards)
                    })
                    .collect::<Result<_>>()?;
                for (j, means) in per_board.iter().enumerate() {
                    for i in 0..n {
                        shares[j][i] += means[i] / r / populations as f64;
                    }
                }
            }
            shares
        }
    };
    let mut pairs = Vec::with_capacity(test.boards.len() * n);
    for (j, board) in test.boards.iter().enumerate() {
        let phi = shapley(board)?;
        for i in 0..n {
            pairs.push(CorrespondencePair {
                board: j,
                seat: i,
                shapley: phi.get(i),
                share: shares[j][i],
            });
        }
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.shapley).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.share).collect();
    let r = pearson(&xs, &ys)?;
    let mad =
        pairs.iter().map(|p| (p.share - p.shapley).abs()).sum::<f64>() / pairs.len() as f64;
    Ok(CorrespondenceReport { pairs, pearson: r, mean_abs_dev: mad })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub rl_mean_share: f64,
    pub bot_mean_share: f64,
    /// d = rl_mean_share - bot_mean_share.
    pub difference: f64,
    pub u_statistic: f64,
    pub p_value: f64,
    pub n_rl: usize,
    pub n_bot: usize,
}

/// Paired all-RL vs single-bot comparison on the Propose-Accept protocol.
/// For each pair and each swept seat, co-train one all-RL group and one
/// group with the bot pinned in that seat, then compare the per-(board,seat)
/// mean shares of the RL agent and the bot with a Mann-Whitney test.
/// `eval_bot` swaps the bot heuristic at evaluation time only
/// (out-of-distribution bots).
#[allow(clippy::too_many_arguments)]
pub fn bot_comparison(
    train: &BoardSet,
    test: &BoardSet,
    pa: &PaConfig,
    rl: &RlConfig,
    bot: BotMode,
    eval_bot: Option<BotMode>,
    pairs: usize,
    bot_seats: &[usize],
    eval_episodes: usize,
    seed: u64,
) -> Result<ComparisonResult> {
    let n = train.boards[0].n();
    let seats: Vec<usize> =
        if bot_seats.is_empty() { (0..n).collect() } else { bot_seats.to_vec() };
    let r = pa.total_reward as f64;

    // train all groups up front (order fixed for determinism)
    let mut jobs: Vec<(u64, Option<usize>)> = Vec::new();
    for k in 0..pairs {
        jobs.push((seed.wrapping_add(1000 * k as u64), None));
        for &s in &seats {
            jobs.push((seed.wrapping_add(1000 * k as u64 + 100 + s as u64), Some(s)));
        }
    }
    let pops: Vec<PaPopulation> = jobs
        .par_iter()
        .map(|(job_seed, bot_seat)| {
            let spec: Vec<SeatSpec> = (0..n)
                .map(|i| {
                    if Some(i) == *bot_seat { SeatSpec::Bot(bot) } else { SeatSpec::Learner }
                })
                .collect();
            train_pa_population(train, pa, rl, &spec, *job_seed)
        })
        .collect::<Result<_>>()?;

    let mut rl_samples = Vec::new();
    let mut bot_samples = Vec::new();
    let per_pair = 1 + seats.len();
    for k in 0..pairs {
        let all_rl = &pops[k * per_pair];
        for (si, &s) in seats.iter().enumerate() {
            let single = &pops[k * per_pair + 1 + si];
            for (j, board) in test.boards.iter().enumerate() {
                let eval_seed = seed ^ ((k as u64) << 40) ^ ((j as u64) << 8) ^ s as u64;
                let rl_rep =
                    evaluate_pa(&all_rl.eval_seats(), board, pa, eval_episodes, eval_seed)?;
                rl_samples.push(rl_rep.mean_rewards[s] / r);
                // swap the bot mode at evaluation when requested
                let eval_seats: Vec<EvalSeat<'_>> = single
                    .seats
                    .iter()
                    .map(|seat| match seat {
                        PaSeat::Learner(l) => EvalSeat::Learner(l),
                        PaSeat::Bot(params) => {
                            let mut params = *params;
                            if let Some(m) = eval_bot {
                                params.mode = m;
                            }
                            EvalSeat::Bot(params)
                        }
                    })
                    .collect();
                let bot_rep = evaluate_pa(&eval_seats, board, pa, eval_episodes, eval_seed)?;
                bot_samples.push(bot_rep.mean_rewards[s] / r);
            }
        }
    }
    let mw = mann_whitney_u(&rl_samples, &bot_samples)?;
    let rl_mean = rl_samples.iter().sum::<f64>() / rl_samples.len() as f64;
    let bot_mean = bot_samples.iter().sum::<f64>() / bot_samples.len() as f64;
    Ok(ComparisonResult {
        rl_mean_share: rl_mean,
        bot_mean_share: bot_mean,
        difference: rl_mean - bot_mean,
        u_statistic: mw.u,
        p_value: mw.p,
        n_rl: rl_samples.len(),
        n_bot: bot_samples.len(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationRow {
    pub offset: usize,
    pub perturbed_share: f64,
    pub unperturbed_share: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub rows: Vec<PerturbationRow>,
    /// Spearman rank correlation between offset and perturbed share.
    pub spearman: f64,
}

/// Spatial perturbation sweep on the two-patch world: move the maximum-weight
/// agent's spawn 0..=max_offset squares from the nearest patch, train and
/// evaluate per offset, and report its mean share of the total reward next to
/// the unperturbed control.
pub fn spatial_perturbation(
    train: &BoardSet,
    test: &BoardSet,
    base: &TpConfig,
    rl: &RlConfig,
    max_offset: usize,
    eval_episodes: usize,
    seed: u64,
) -> Result<PerturbationReport> {
    let r = base.total_reward as f64;
    let share_of_max = |pop: &TpPopulation, tp: &TpConfig, arm_seed: u64| -> Result<f64> {
        let mut total = 0.0;
        for (j, board) in test.boards.iter().enumerate() {
            let rep = evaluate_tp(pop, board, tp, eval_episodes, arm_seed ^ (j as u64) << 9)?;
            // the perturbed seat is the max-weight agent of each board
            let mut heavy = 0;
            for i in 1..board.n() {
                if board.weights()[i] > board.weights()[heavy] {
                    heavy = i;
                }
            }
            total += rep.mean_rewards[heavy] / r;
        }
        Ok(total / test.boards.len() as f64)
    };

    let control_cfg = TpConfig {
        total_reward: base.total_reward,
        max_steps: base.max_steps,
        ..TpConfig::two_patch_unperturbed()
    };
    let offsets: Vec<usize> = (0..=max_offset).collect();
    let mut arms: Vec<Option<usize>> = vec![None];
    arms.extend(offsets.iter().copied().map(Some));
    let results: Vec<(Option<usize>, f64)> = arms
        .par_iter()
        .map(|arm| {
            let (cfg, arm_seed) = match arm {
                None => (control_cfg.clone(), seed),
                Some(off) => {
                    let cfg = TpConfig {
                        total_reward: base.total_reward,
                        max_steps: base.max_steps,
                        ..TpConfig::two_patch_perturbation(*off)
                    };
                    (cfg, seed.wrapping_add(31 + *off as u64))
                }
            };
            let pop = train_tp_population(train, &cfg, rl, arm_seed)?;
            let share = share_of_max(&pop, &cfg, arm_seed)?;
            Ok((*arm, share))
        })
        .collect::<Result<_>>()?;

    let unperturbed = results
        .iter()
        .find(|(arm, _)| arm.is_none())
        .map(|(_, s)| *s)
        .expect("control arm present");
    let mut rows = Vec::with_capacity(offsets.len());
    for off in &offsets {
        let share = results
            .iter()
            .find(|(arm, _)| *arm == Some(*off))
            .map(|(_, s)| *s)
            .unwrap();
        rows.push(PerturbationRow {
            offset: *off,
            perturbed_share: share,
            unperturbed_share: unperturbed,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.offset as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.perturbed_share).collect();
    let rho = spearman(&xs, &ys)?;
    Ok(PerturbationReport { rows, spearman: rho })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressionReport {
    pub train_mse: f64,
    pub test_mse: f64,
    pub test_r2: f64,
    pub n_train: usize,
    pub n_test: usize,
    /// Held-out (shapley, prediction) pairs, one row per (board, seat).
    pub pairs: Vec<CorrespondencePair>,
}

/// Supervised Shapley regression: unique Gaussian boards, an 80/20 split,
/// and a small MLP mapping (weights, quota) to the Shapley vector under MSE.
pub fn shapley_regression(
    dist: &BoardDistribution,
    n_boards: usize,
    hidden: usize,
    epochs: usize,
    seed: u64,
) -> Result<RegressionReport> {
    if n_boards < 5 {
        return Err(Error::Config("need at least 5 boards".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_test = n_boards / 5;
    let n_train = n_boards - n_test;
    let (train, test) = generate_split(dist, &mut rng, n_train, n_test, seed)?;
    let n = dist.n;

    // inputs are (weights, quota) / quota-scale; targets are Shapley vectors
    let scale = dist.quota.max(1.0);
    let featurize = |set: &BoardSet| -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let mut xs = Vec::with_capacity(set.boards.len());
        let mut ys = Vec::with_capacity(set.boards.len());
        for b in &set.boards {
            let mut x: Vec<f64> = b.weights().iter().map(|w| w / scale).collect();
            x.push(b.quota() / scale);
            xs.push(x);
            ys.push(shapley(b)?.values().to_vec());
        }
        Ok((xs, ys))
    };
    let (train_x, train_y) = featurize(&train)?;
    let (test_x, test_y) = featurize(&test)?;

    let mut net = Mlp::new(&[n + 1, hidden, hidden, n], true, &mut rng);
    let mut opt = Optimizer::adam(
        AdamHyper { learning_rate: 1e-3, ..Default::default() },
        net.flat_len(),
    );
    let batch = 32usize;
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    for epoch in 0..epochs {
        // step decay; the loss surface is piecewise flat in the weights
        if let Optimizer::Adam { hyper, .. } = &mut opt {
            let frac = epoch as f64 / epochs.max(1) as f64;
            hyper.learning_rate = if frac < 0.8 { 1e-3 } else { 2e-4 };
        }
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let mut grads = net.zeros_like_grads();
            for &idx in chunk {
                let (out, cache) = net.forward_cached(&train_x[idx]);
                let mut dout = Array1::zeros(n);
                for k in 0..n {
                    dout[k] = 2.0 * (out[k] - train_y[idx][k]) / (n * chunk.len()) as f64;
                }
                let g = net.backward(&cache, &dout);
                grads.scale_add(1.0, &g, 1.0);
            }
            opt.step(&mut net, &grads);
        }
    }

    let mse = |xs: &[Vec<f64>], ys: &[Vec<f64>]| -> f64 {
        let mut acc = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            let out = net.forward(x);
            for k in 0..n {
                acc += (out[k] - y[k]).powi(2);
            }
        }
        acc / (xs.len() * n) as f64
    };
    let train_mse = mse(&train_x, &train_y);
    let test_mse = mse(&test_x, &test_y);

    // pooled R^2 over all held-out outputs
    let flat_targets: Vec<f64> = test_y.iter().flatten().cloned().collect();
    let mean_t = flat_targets.iter().sum::<f64>() / flat_targets.len() as f64;
    let ss_tot: f64 = flat_targets.iter().map(|t| (t - mean_t).powi(2)).sum();
    let mut ss_res = 0.0;
    let mut pairs = Vec::with_capacity(test_x.len() * n);
    for (j, (x, y)) in test_x.iter().zip(&test_y).enumerate() {
        let out = net.forward(x);
        for k in 0..n {
            ss_res += (out[k] - y[k]).powi(2);
            pairs.push(CorrespondencePair {
                board: j,
                seat: k,
                shapley: y[k],
                share: out[k],
            });
        }
    }
    let test_r2 = 1.0 - ss_res / ss_tot;
    Ok(RegressionReport {
        train_mse,
        test_mse,
        test_r2,
        n_train: train.boards.len(),
        n_test: test.boards.len(),
        pairs,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NashCorrReport {
    /// (shapley, normalized equilibrium payoff) per (board, seat).
    pub pairs: Vec<CorrespondencePair>,
    pub pearson: f64,
}

/// Pair each board's Shapley values with its normalized backward-induction
/// payoffs and report the Pearson correlation.
pub fn nash_shapley_correlation(
    boards: &BoardSet,
    total_reward: u32,
    rounds: u32,
) -> Result<NashCorrReport> {
    let mut pairs = Vec::new();
    for (j, board) in boards.boards.iter().enumerate() {
        let phi = shapley(board)?;
        let sol = solve_backward_induction(board, total_reward, rounds, ThresholdMode::Real)?;
        for i in 0..board.n() {
            pairs.push(CorrespondencePair {
                board: j,
                seat: i,
                shapley: phi.get(i),
                share: sol.normalized[i],
            });
        }
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.shapley).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.share).collect();
    let r = pearson(&xs, &ys)?;
    Ok(NashCorrReport { pairs, pearson: r })
}

/// Convenience: a seeded split drawn from a distribution (the usual entry
/// point for CLI runs that do not load a board file).
pub fn seeded_split(
    dist: &BoardDistribution,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(BoardSet, BoardSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_split(dist, &mut rng, n_train, n_test, seed)
}

/// Derived per-arm seed helper so experiment arms never share streams.
pub fn arm_seed(base: u64, arm: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in arm.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    base ^ h
}
