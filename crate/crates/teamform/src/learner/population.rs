//! Training and frozen evaluation of independent agent populations: one
//! parameter set per seat, never shared. Propose-Accept seats run SARSA(lambda)
//! online; Team Patches seats run synchronous advantage actor-critic with
//! V-trace over a fixed set of parallel environment copies.

use std::collections::HashMap;
use std::path::Path;
use std::rc::Rc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::actor_critic::{AcHyper, AcLearner, AcStep};
use super::net::{AdamHyper, Optimizer};
use super::sarsa::{SarsaHyper, SarsaLearner, Transition};
use crate::boards::BoardSet;
use crate::bots::{Bot, BotMode, BotParams};
use crate::coopgame::Board;
use crate::env::propose_accept::{
    PaAction, PaConfig, PaEnv, PaObservation, Phase, Response, StepEvent,
};
use crate::env::team_patches::{CellColor, TpAction, TpConfig, TpEnv, TpObservation};
use crate::env::TrajectoryLog;
use crate::error::{Error, Result};
use ndarray::Array3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Sarsa,
    ActorCritic,
}

/// Learning hyperparameters. The paper pins lambda, the layer sizes, the
/// optimizer family, and the 16 parallel copies; everything else here is a
/// config-exposed default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RlConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Plain-gradient optimizer instead of Adam (tabular-limit tests).
    pub use_sgd: bool,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of the episode budget over which epsilon decays linearly.
    pub eps_fraction: f64,
    pub n_parallel_envs: usize,
    pub unroll_length: usize,
    pub entropy_cost: f64,
    pub baseline_cost: f64,
    pub rho_bar: f64,
    pub c_bar: f64,
    /// Total training episodes.
    pub episodes: usize,
    /// Constant added to the Q head's bias at initialization. Optimistic
    /// values make untried actions (and declining early lowball offers)
    /// attractive until real returns take over.
    pub optimistic_init: f64,
    pub mlp_hidden: Vec<usize>,
    pub ac_hidden: usize,
    /// Learning-curve aggregation window, in episodes.
    pub curve_window: usize,
}

impl Default for RlConfig {
    fn default() -> Self {
        RlConfig {
            lambda: 0.1,
            gamma: 1.0,
            learning_rate: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            use_sgd: false,
            eps_start: 0.2,
            eps_end: 0.01,
            eps_fraction: 0.5,
            n_parallel_envs: 16,
            unroll_length: 20,
            entropy_cost: 0.01,
            baseline_cost: 0.5,
            rho_bar: 1.0,
            c_bar: 1.0,
            episodes: 50_000,
            optimistic_init: 0.0,
            mlp_hidden: vec![64, 64, 64],
            ac_hidden: 32,
            curve_window: 1000,
        }
    }
}

impl RlConfig {
    pub fn adam_hyper(&self) -> AdamHyper {
        AdamHyper {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }

    pub fn ac_hyper(&self) -> AcHyper {
        AcHyper {
            gamma: self.gamma,
            entropy_cost: self.entropy_cost,
            baseline_cost: self.baseline_cost,
            rho_bar: self.rho_bar,
            c_bar: self.c_bar,
        }
    }

    pub fn epsilon_at(&self, episode: usize) -> f64 {
        let horizon = (self.episodes as f64 * self.eps_fraction).max(1.0);
        let t = (episode as f64 / horizon).min(1.0);
        self.eps_start + (self.eps_end - self.eps_start) * t
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) || !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config("lambda and gamma must lie in [0,1]".into()));
        }
        if self.learning_rate < 0.0 {
            return Err(Error::Config("learning_rate must be >= 0".into()));
        }
        if self.n_parallel_envs == 0 || self.unroll_length == 0 {
            return Err(Error::Config("parallel envs and unroll length must be >= 1".into()));
        }
        Ok(())
    }
}

/// Who occupies a seat during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeatSpec {
    Learner,
    Bot(BotMode),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum PaSeat {
    Learner(SarsaLearner),
    Bot(BotParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub seat: usize,
    pub mean_reward: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PaPopulation {
    pub seats: Vec<PaSeat>,
    pub curves: Vec<CurvePoint>,
    pub seed: u64,
    pub episodes_trained: usize,
    pub rng_word_pos: u128,
}

/// Per-(board, proposer) legal-proposal cache; boards repeat heavily within a
/// training run so the composition filter runs once per pair.
struct LegalCache {
    map: HashMap<(usize, usize), Rc<Vec<usize>>>,
}

impl LegalCache {
    fn new() -> Self {
        LegalCache { map: HashMap::new() }
    }

    fn get(&mut self, env: &PaEnv, board_id: usize, proposer: usize) -> Rc<Vec<usize>> {
        self.map
            .entry((board_id, proposer))
            .or_insert_with(|| Rc::new(env.legal_proposals(proposer)))
            .clone()
    }
}

enum SeatCtl<'a> {
    Train(&'a mut SarsaLearner, f64),
    Frozen(&'a SarsaLearner),
    Bot(Bot),
}

#[derive(Debug, Clone, Default)]
pub struct PaEpisodeStats {
    pub rewards: Vec<f64>,
    pub rounds: u32,
    pub declines: u32,
    pub continuations: u32,
    pub agreed: bool,
}

/// Drive one Propose-Accept episode. Learner seats in `Train` mode update
/// online at their own decision points (reward lands with the terminal
/// transition; gamma applies between an agent's consecutive decisions).
fn pa_episode(
    env: &mut PaEnv,
    seats: &mut [SeatCtl<'_>],
    cache: &mut LegalCache,
    board_id: usize,
    rng: &mut ChaCha8Rng,
    mut log: Option<(&mut TrajectoryLog, usize)>,
) -> Result<PaEpisodeStats> {
    let n = env.n();
    env.reset(rng);
    for seat in seats.iter_mut() {
        if let SeatCtl::Train(learner, _) = seat {
            learner.start_episode();
        }
    }
    let mut pending: Vec<Option<(Vec<f64>, usize)>> = vec![None; n];
    let mut stats = PaEpisodeStats { rewards: vec![0.0; n], ..Default::default() };

    fn decide(
        seats: &mut [SeatCtl<'_>],
        pending: &mut [Option<(Vec<f64>, usize)>],
        agent: usize,
        obs: &PaObservation,
        legal: &[usize],
        rng: &mut ChaCha8Rng,
        space: &crate::env::propose_accept::ActionSpace,
    ) -> Result<usize> {
        let flat = obs.flatten();
        let action = match &mut seats[agent] {
            SeatCtl::Train(learner, eps) => {
                let a = learner.act(&flat, legal, *eps, rng);
                if let Some((pobs, pact)) = pending[agent].take() {
                    learner.update(&Transition {
                        obs: &pobs,
                        action: pact,
                        reward: 0.0,
                        next: Some((&flat, a)),
                    });
                }
                pending[agent] = Some((flat, a));
                a
            }
            SeatCtl::Frozen(learner) => learner.greedy(&flat, legal),
            SeatCtl::Bot(bot) => {
                if obs.phase == Phase::Propose {
                    bot.propose(obs, space, legal, rng)?
                } else {
                    match bot.respond(obs, rng)? {
                        Response::Accept => space.accept_index(),
                        Response::Decline => space.decline_index(),
                    }
                }
            }
        };
        Ok(action)
    }

    loop {
        match env.state().phase {
            Phase::Propose => {
                let proposer = env.state().proposer;
                let obs = env.observation(proposer);
                let legal = cache.get(env, board_id, proposer);
                let space = env.action_space();
                let action = decide(seats, &mut pending, proposer, &obs, &legal, rng, space)?;
                let alloc = crate::env::propose_accept::Allocation::new(
                    space.composition(action).to_vec(),
                );
                if let Some((log, ep)) = log.as_mut() {
                    log.record(
                        *ep,
                        env.state().round,
                        "propose",
                        &proposer.to_string(),
                        &format!("{:?}", space.composition(action)),
                        None,
                    )?;
                }
                env.step(PaAction::Propose(alloc), rng)?;
            }
            Phase::Respond => {
                let proposees = env.proposees();
                let respond_legal =
                    [env.action_space().accept_index(), env.action_space().decline_index()];
                let mut responses = Vec::with_capacity(proposees.len());
                for &agent in &proposees {
                    let obs = env.observation(agent);
                    let space = env.action_space();
                    let action =
                        decide(seats, &mut pending, agent, &obs, &respond_legal, rng, space)?;
                    let response = if action == respond_legal[0] {
                        Response::Accept
                    } else {
                        Response::Decline
                    };
                    responses.push((agent, response));
                }
                if let Some((log, ep)) = log.as_mut() {
                    let acts: Vec<String> = responses
                        .iter()
                        .map(|(a, r)| format!("{a}:{}", if *r == Response::Accept { "A" } else { "D" }))
                        .collect();
                    log.record(
                        *ep,
                        env.state().round,
                        "respond",
                        &proposees.iter().map(|a| a.to_string()).collect::<Vec<_>>().join("+"),
                        &acts.join(","),
                        None,
                    )?;
                }
                let res = env.step(PaAction::Respond(responses), rng)?;
                match res.event {
                    StepEvent::DeclinedContinued => {
                        stats.declines += 1;
                        stats.continuations += 1;
                        stats.rounds += 1;
                    }
                    StepEvent::DeclinedTerminated | StepEvent::HorizonExhausted => {
                        stats.declines += 1;
                    }
                    StepEvent::Agreed => stats.agreed = true,
                    StepEvent::Proposed => {}
                }
                if res.done {
                    stats.rewards = res.rewards.clone();
                    if let Some((log, ep)) = log.as_mut() {
                        log.record(
                            *ep,
                            env.state().round,
                            "terminal",
                            "-",
                            "-",
                            Some(&res.rewards),
                        )?;
                    }
                    for agent in 0..n {
                        if let SeatCtl::Train(learner, _) = &mut seats[agent] {
                            if let Some((pobs, pact)) = pending[agent].take() {
                                learner.update(&Transition {
                                    obs: &pobs,
                                    action: pact,
                                    reward: res.rewards[agent],
                                    next: None,
                                });
                            }
                        }
                    }
                    return Ok(stats);
                }
            }
            Phase::Terminal => unreachable!("loop exits on done"),
        }
    }
}

/// Train one co-trained population on the Propose-Accept environment. Every
/// episode draws a uniformly random train board; seats marked as bots play
/// their fixed heuristics and never learn.
pub fn train_pa_population(
    boards: &BoardSet,
    pa: &PaConfig,
    rl: &RlConfig,
    seats: &[SeatSpec],
    seed: u64,
) -> Result<PaPopulation> {
    rl.validate()?;
    if boards.boards.is_empty() {
        return Err(Error::Config("empty train board set".into()));
    }
    let n = boards.boards[0].n();
    if seats.len() != n {
        return Err(Error::Config(format!("{} seats for n={n}", seats.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = PaEnv::new(boards.boards[0].clone(), pa.clone())?;
    let obs_dim = PaObservation::flat_len(n, pa.shapley_aware);
    let n_actions = env.action_space().n_actions();
    let mut dims = vec![obs_dim];
    dims.extend_from_slice(&rl.mlp_hidden);
    dims.push(n_actions);
    let hyper = SarsaHyper { lambda: rl.lambda, gamma: rl.gamma };

    let mut pop_seats: Vec<PaSeat> = seats
        .iter()
        .map(|spec| match spec {
            SeatSpec::Learner => {
                let mut net = super::net::Mlp::new(&dims, true, &mut rng);
                if rl.optimistic_init != 0.0 {
                    let head = net.layers.last_mut().unwrap();
                    head.b.fill(rl.optimistic_init);
                }
                let opt = if rl.use_sgd {
                    Optimizer::sgd(rl.learning_rate)
                } else {
                    use crate::learner::net::ParamSet;
                    Optimizer::adam(rl.adam_hyper(), net.flat_len())
                };
                PaSeat::Learner(SarsaLearner::new(net, opt, hyper))
            }
            SeatSpec::Bot(mode) => PaSeat::Bot(BotParams::new(*mode)),
        })
        .collect();

    let mut cache = LegalCache::new();
    let mut curves = Vec::new();
    let mut window_sum = vec![0.0; n];
    for episode in 0..rl.episodes {
        let board_id = rng.gen_range(0..boards.boards.len());
        env.set_board(boards.boards[board_id].clone())?;
        let eps = rl.epsilon_at(episode);
        let mut ctls: Vec<SeatCtl<'_>> = pop_seats
            .iter_mut()
            .map(|s| match s {
                PaSeat::Learner(l) => SeatCtl::Train(l, eps),
                PaSeat::Bot(p) => SeatCtl::Bot(Bot { params: *p }),
            })
            .collect();
        let stats = pa_episode(&mut env, &mut ctls, &mut cache, board_id, &mut rng, None)?;
        drop(ctls);
        for (i, r) in stats.rewards.iter().enumerate() {
            window_sum[i] += r;
        }
        if (episode + 1) % rl.curve_window == 0 || episode + 1 == rl.episodes {
            let span = if (episode + 1) % rl.curve_window == 0 {
                rl.curve_window
            } else {
                (episode + 1) % rl.curve_window
            };
            for (i, sum) in window_sum.iter_mut().enumerate() {
                curves.push(CurvePoint {
                    episode: episode + 1,
                    seat: i,
                    mean_reward: *sum / span as f64,
                });
                *sum = 0.0;
            }
            for (i, seat) in pop_seats.iter().enumerate() {
                if let PaSeat::Learner(l) = seat {
                    if !l.params_finite() {
                        return Err(Error::TrainingFailure { seat: i, episode });
                    }
                }
            }
        }
    }
    Ok(PaPopulation {
        seats: pop_seats,
        curves,
        seed,
        episodes_trained: rl.episodes,
        rng_word_pos: rng.get_word_pos(),
    })
}

/// A seat as seen by the evaluator; the bot slot lets callers swap the bot
/// mode between training and evaluation (out-of-distribution comparisons).
pub enum EvalSeat<'a> {
    Learner(&'a SarsaLearner),
    Bot(BotParams),
}

impl PaPopulation {
    pub fn eval_seats(&self) -> Vec<EvalSeat<'_>> {
        self.seats
            .iter()
            .map(|s| match s {
                PaSeat::Learner(l) => EvalSeat::Learner(l),
                PaSeat::Bot(p) => EvalSeat::Bot(*p),
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct PaEvalReport {
    pub mean_rewards: Vec<f64>,
    pub episodes: usize,
    pub agreement_rate: f64,
    pub mean_rounds: f64,
}

/// Frozen evaluation on one board: greedy learners, stochastic bots, no
/// parameter updates anywhere.
pub fn evaluate_pa(
    seats: &[EvalSeat<'_>],
    board: &Board,
    pa: &PaConfig,
    episodes: usize,
    seed: u64,
) -> Result<PaEvalReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = PaEnv::new(board.clone(), pa.clone())?;
    let n = board.n();
    let mut cache = LegalCache::new();
    let mut totals = vec![0.0; n];
    let mut agreements = 0usize;
    let mut rounds_total = 0u64;
    for _ in 0..episodes {
        let mut ctls: Vec<SeatCtl<'_>> = seats
            .iter()
            .map(|s| match s {
                EvalSeat::Learner(l) => SeatCtl::Frozen(l),
                EvalSeat::Bot(p) => SeatCtl::Bot(Bot { params: *p }),
            })
            .collect();
        let stats = pa_episode(&mut env, &mut ctls, &mut cache, 0, &mut rng, None)?;
        for (t, r) in totals.iter_mut().zip(&stats.rewards) {
            *t += r;
        }
        if stats.agreed {
            agreements += 1;
        }
        rounds_total += stats.rounds as u64;
    }
    Ok(PaEvalReport {
        mean_rewards: totals.iter().map(|t| t / episodes as f64).collect(),
        episodes,
        agreement_rate: agreements as f64 / episodes as f64,
        mean_rounds: rounds_total as f64 / episodes as f64,
    })
}

// ---------------------------------------------------------------------------
// Team Patches: synchronous actor-critic over parallel environment copies.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TpPopulation {
    pub seats: Vec<AcLearner>,
    pub curves: Vec<CurvePoint>,
    pub seed: u64,
    pub episodes_trained: usize,
    pub rng_word_pos: u128,
}

fn tp_net_input(obs: &TpObservation, window: usize, n: usize) -> (Array3<f64>, Vec<f64>) {
    let ch = CellColor::channel_count(n);
    let grid = Array3::from_shape_vec((ch, window, window), obs.grid_channels()).unwrap();
    (grid, obs.extras())
}

/// Train one Team Patches population with `rl.n_parallel_envs` synchronous
/// environment copies, unrolls of `rl.unroll_length`, and V-trace targets.
/// Behavior and target policies coincide during collection, so the ratios
/// are 1 and V-trace reduces to n-step returns; the correction machinery is
/// exercised end to end regardless.
pub fn train_tp_population(
    boards: &BoardSet,
    tp: &TpConfig,
    rl: &RlConfig,
    seed: u64,
) -> Result<TpPopulation> {
    rl.validate()?;
    if boards.boards.is_empty() {
        return Err(Error::Config("empty train board set".into()));
    }
    let n = boards.boards[0].n();
    let window = tp.window;
    let channels = CellColor::channel_count(n);
    let n_actions = TpAction::count(tp.total_reward);
    let mut master = ChaCha8Rng::seed_from_u64(seed);

    let mut seats: Vec<AcLearner> = (0..n)
        .map(|_| {
            AcLearner::new(
                channels,
                window,
                3 * n,
                n_actions,
                rl.ac_hidden,
                rl.learning_rate,
                rl.adam_hyper(),
                rl.ac_hyper(),
                &mut master,
            )
        })
        .collect();

    let mut env_rngs: Vec<ChaCha8Rng> =
        (0..rl.n_parallel_envs).map(|_| ChaCha8Rng::seed_from_u64(master.gen())).collect();
    let mut envs: Vec<TpEnv> = Vec::with_capacity(rl.n_parallel_envs);
    for rng in env_rngs.iter_mut() {
        let board = boards.boards[rng.gen_range(0..boards.boards.len())].clone();
        let mut env = TpEnv::new(board, tp.clone())?;
        env.reset(rng)?;
        envs.push(env);
    }

    // unroll buffers [env][seat]; segments close at episode boundaries
    let mut open: Vec<Vec<Vec<AcStep>>> =
        vec![vec![Vec::new(); n]; rl.n_parallel_envs];
    let mut closed: Vec<Vec<Vec<Vec<AcStep>>>> =
        vec![vec![Vec::new(); n]; rl.n_parallel_envs];

    let mut episodes_done = 0usize;
    let mut curves = Vec::new();
    let mut window_sum = vec![0.0; n];
    let mut window_count = 0usize;
    let mut next_curve_mark = rl.curve_window;

    while episodes_done < rl.episodes {
        for _ in 0..rl.unroll_length {
            for (e, env) in envs.iter_mut().enumerate() {
                let mut actions = Vec::with_capacity(n);
                let mut recorded = Vec::with_capacity(n);
                for (seat, learner) in seats.iter().enumerate() {
                    let obs = env.observation(seat);
                    let (grid, extras) = tp_net_input(&obs, window, n);
                    let (action, logp, _v) = learner.act(&grid, &extras, &mut env_rngs[e])?;
                    actions.push(TpAction::from_index(action, tp.total_reward)?);
                    recorded.push((grid, extras, action, logp));
                }
                let res = env.step(&actions)?;
                for (seat, (grid, extras, action, logp)) in recorded.into_iter().enumerate() {
                    open[e][seat].push(AcStep {
                        grid,
                        extras,
                        action,
                        behavior_logp: logp,
                        reward: res.rewards[seat],
                    });
                }
                if res.done {
                    for seat in 0..n {
                        let seg = std::mem::take(&mut open[e][seat]);
                        closed[e][seat].push(seg);
                        window_sum[seat] += res.rewards[seat];
                    }
                    window_count += 1;
                    episodes_done += 1;
                    let board =
                        boards.boards[env_rngs[e].gen_range(0..boards.boards.len())].clone();
                    env.set_board(board)?;
                    env.reset(&mut env_rngs[e])?;
                }
            }
        }
        // one optimizer step per seat over everything collected this round
        for (seat, learner) in seats.iter_mut().enumerate() {
            let mut grads = learner.net.zeros_like_grads();
            let mut count = 0usize;
            for e in 0..envs.len() {
                for seg in closed[e][seat].drain(..) {
                    if !seg.is_empty() {
                        count += learner.accumulate_unroll(&seg, 0.0, &mut grads)?;
                    }
                }
                let seg = std::mem::take(&mut open[e][seat]);
                if !seg.is_empty() {
                    let obs = envs[e].observation(seat);
                    let (grid, extras) = tp_net_input(&obs, window, n);
                    let bootstrap = learner.net.forward_cached(&grid, &extras)?.value;
                    count += learner.accumulate_unroll(&seg, bootstrap, &mut grads)?;
                }
            }
            learner.apply(&mut grads, count);
            if !learner.params_finite() {
                return Err(Error::TrainingFailure { seat, episode: episodes_done });
            }
        }
        if episodes_done >= next_curve_mark && window_count > 0 {
            for (i, sum) in window_sum.iter_mut().enumerate() {
                curves.push(CurvePoint {
                    episode: episodes_done,
                    seat: i,
                    mean_reward: *sum / window_count as f64,
                });
                *sum = 0.0;
            }
            window_count = 0;
            next_curve_mark += rl.curve_window;
        }
    }
    Ok(TpPopulation {
        seats,
        curves,
        seed,
        episodes_trained: episodes_done,
        rng_word_pos: master.get_word_pos(),
    })
}

#[derive(Debug, Clone)]
pub struct TpEvalReport {
    pub mean_rewards: Vec<f64>,
    pub episodes: usize,
    pub agreement_rate: f64,
    pub mean_steps: f64,
}

/// Frozen Team Patches evaluation: every seat plays the mode of its policy.
pub fn evaluate_tp(
    pop: &TpPopulation,
    board: &Board,
    tp: &TpConfig,
    episodes: usize,
    seed: u64,
) -> Result<TpEvalReport> {
    let n = board.n();
    let window = tp.window;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = TpEnv::new(board.clone(), tp.clone())?;
    let mut totals = vec![0.0; n];
    let mut agreements = 0usize;
    let mut steps_total = 0u64;
    for _ in 0..episodes {
        env.reset(&mut rng)?;
        loop {
            let mut actions = Vec::with_capacity(n);
            for (seat, learner) in pop.seats.iter().enumerate() {
                let obs = env.observation(seat);
                let (grid, extras) = tp_net_input(&obs, window, n);
                let a = learner.act_greedy(&grid, &extras)?;
                actions.push(TpAction::from_index(a, tp.total_reward)?);
            }
            let res = env.step(&actions)?;
            if res.done {
                for (t, r) in totals.iter_mut().zip(&res.rewards) {
                    *t += r;
                }
                if res.winning_patch.is_some() {
                    agreements += 1;
                }
                steps_total += env.state().step as u64;
                break;
            }
        }
    }
    Ok(TpEvalReport {
        mean_rewards: totals.iter().map(|t| t / episodes as f64).collect(),
        episodes,
        agreement_rate: agreements as f64 / episodes as f64,
        mean_steps: steps_total as f64 / episodes as f64,
    })
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

pub const CHECKPOINT_VERSION: u32 = 1;

/// Versioned text dump of a trained population: parameters, optimizer state,
/// and the training RNG position.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub pa: Option<PaPopulation>,
    pub tp: Option<TpPopulation>,
}

impl Checkpoint {
    pub fn for_pa(pop: PaPopulation) -> Self {
        Checkpoint { format_version: CHECKPOINT_VERSION, pa: Some(pop), tp: None }
    }

    pub fn for_tp(pop: TpPopulation) -> Self {
        Checkpoint { format_version: CHECKPOINT_VERSION, pa: None, tp: Some(pop) }
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        if ckpt.format_version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "checkpoint version {} unsupported",
                ckpt.format_version
            )));
        }
        Ok(ckpt)
    }
}

/// Write learning curves as CSV (`episode,seat,mean_reward`).
pub fn write_curves_csv<P: AsRef<Path>>(curves: &[CurvePoint], path: P) -> Result<()> {
    let mut out = String::from("episode,seat,mean_reward\n");
    for c in curves {
        out.push_str(&format!("{},{},{}\n", c.episode, c.seat, c.mean_reward));
    }
    std::fs::write(path, out)?;
    Ok(())
}
