//! The Propose-Accept negotiation game. Each round a uniformly random
//! proposer offers an integral split of the total reward to a viable team;
//! if every proposee accepts the episode ends with that allocation, and on
//! any decline the game continues with probability `p` or ends with zero
//! reward for everyone.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coopgame::{shapley, Board, Coalition, ShapleyVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaConfig {
    /// Total integer reward r split by an accepted proposal.
    pub total_reward: u32,
    /// Probability that a rejected proposal is followed by another round.
    pub continue_prob: f64,
    /// Append the board's Shapley values to every observation.
    pub shapley_aware: bool,
    /// Fixed horizon in rounds; `None` means geometric termination only.
    pub max_rounds: Option<u32>,
}

impl Default for PaConfig {
    fn default() -> Self {
        PaConfig {
            total_reward: 20,
            continue_prob: 0.9,
            shapley_aware: false,
            max_rounds: None,
        }
    }
}

impl PaConfig {
    fn validate(&self) -> Result<()> {
        if !(self.continue_prob > 0.0 && self.continue_prob < 1.0) {
            return Err(Error::Config("continue_prob must lie in (0,1)".into()));
        }
        if self.total_reward == 0 {
            return Err(Error::Config("total_reward must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Propose,
    Respond,
    Terminal,
}

/// An integral reward split; the proposed team is the set of agents with a
/// positive share.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    shares: Vec<u32>,
}

impl Allocation {
    pub fn new(shares: Vec<u32>) -> Self {
        Allocation { shares }
    }

    /// Validate the allocation invariants for a given board, total reward,
    /// and proposer: shares sum to r, the implied team wins, and the
    /// proposer keeps a positive share.
    pub fn validated(
        shares: Vec<u32>,
        board: &Board,
        total_reward: u32,
        proposer: usize,
    ) -> Result<Self> {
        if shares.len() != board.n() {
            return Err(Error::IllegalAction(format!(
                "allocation has {} entries for n={}",
                shares.len(),
                board.n()
            )));
        }
        let sum: u32 = shares.iter().sum();
        if sum != total_reward {
            return Err(Error::IllegalAction(format!(
                "allocation sums to {sum}, expected {total_reward}"
            )));
        }
        let alloc = Allocation { shares };
        if !alloc.team().contains(proposer) {
            return Err(Error::IllegalAction(format!(
                "proposer {proposer} must take a positive share"
            )));
        }
        if board.value(&alloc.team())? == 0 {
            return Err(Error::IllegalAction(format!(
                "proposed team {} is losing",
                alloc.team()
            )));
        }
        Ok(alloc)
    }

    pub fn shares(&self) -> &[u32] {
        &self.shares
    }

    pub fn share(&self, agent: usize) -> u32 {
        self.shares[agent]
    }

    /// The implied team: agents with a positive share.
    pub fn team(&self) -> Coalition {
        let members: Vec<usize> =
            self.shares.iter().enumerate().filter(|(_, &s)| s > 0).map(|(i, _)| i).collect();
        Coalition::from_members(&members)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaState {
    pub phase: Phase,
    pub proposer: usize,
    pub pending: Option<Allocation>,
    pub round: u32,
    pub terminal_rewards: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    Accept,
    Decline,
}

/// The action submitted to [`PaEnv::step`]: a proposal in the propose phase,
/// or one response per proposee (joint, simultaneous) in the respond phase.
#[derive(Debug, Clone, PartialEq)]
pub enum PaAction {
    Propose(Allocation),
    Respond(Vec<(usize, Response)>),
}

/// What a step did; lets callers tally protocol statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepEvent {
    Proposed,
    Agreed,
    DeclinedContinued,
    DeclinedTerminated,
    HorizonExhausted,
}

#[derive(Debug, Clone)]
pub struct PaStepResult {
    pub rewards: Vec<f64>,
    pub done: bool,
    pub event: StepEvent,
}

/// Per-agent view of the state. Raw fields for scripted bots; [`PaObservation::flatten`]
/// produces the fixed-length vector fed to function approximators.
#[derive(Debug, Clone, PartialEq)]
pub struct PaObservation {
    pub weights: Vec<f64>,
    pub quota: f64,
    pub agent: usize,
    pub phase: Phase,
    pub proposer: usize,
    pub pending: Option<Vec<u32>>,
    pub total_reward: u32,
    pub shapley: Option<Vec<f64>>,
}

impl PaObservation {
    /// Observation vector length for a given agent count and awareness flag.
    pub fn flat_len(n: usize, shapley_aware: bool) -> usize {
        4 * n + 3 + if shapley_aware { n } else { 0 }
    }

    /// Layout: weights/W, quota/W, one-hot self, [propose, respond] flags,
    /// one-hot proposer, pending shares / r (zeros when none), then the
    /// Shapley vector when the environment is Shapley-aware.
    pub fn flatten(&self) -> Vec<f64> {
        let n = self.weights.len();
        let total_w: f64 = self.weights.iter().sum();
        let mut v = Vec::with_capacity(Self::flat_len(n, self.shapley.is_some()));
        v.extend(self.weights.iter().map(|w| w / total_w));
        v.push(self.quota / total_w);
        for i in 0..n {
            v.push(if i == self.agent { 1.0 } else { 0.0 });
        }
        v.push(if self.phase == Phase::Propose { 1.0 } else { 0.0 });
        v.push(if self.phase == Phase::Respond { 1.0 } else { 0.0 });
        for i in 0..n {
            v.push(if i == self.proposer { 1.0 } else { 0.0 });
        }
        match &self.pending {
            Some(shares) => {
                v.extend(shares.iter().map(|&s| s as f64 / self.total_reward as f64))
            }
            None => v.extend(std::iter::repeat(0.0).take(n)),
        }
        if let Some(phi) = &self.shapley {
            v.extend_from_slice(phi);
        }
        v
    }
}

/// Composition enumeration shared by the environment, bots, and learners.
/// All n-tuples of nonnegative integers summing to r, in lexicographic
/// order; learners address proposals by index into this list, with two extra
/// trailing actions for Accept and Decline.
#[derive(Debug, Clone)]
pub struct ActionSpace {
    n: usize,
    total_reward: u32,
    comps: Vec<Vec<u32>>,
    team_masks: Vec<u64>,
}

impl ActionSpace {
    pub fn new(n: usize, total_reward: u32) -> Self {
        let mut comps = Vec::new();
        let mut cur = vec![0u32; n];
        fn rec(cur: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<Vec<u32>>) {
            if pos == cur.len() - 1 {
                cur[pos] = left;
                out.push(cur.clone());
                return;
            }
            for v in 0..=left {
                cur[pos] = v;
                rec(cur, pos + 1, left - v, out);
            }
        }
        rec(&mut cur, 0, total_reward, &mut comps);
        let team_masks = comps
            .iter()
            .map(|c| {
                c.iter().enumerate().fold(0u64, |m, (i, &s)| if s > 0 { m | (1 << i) } else { m })
            })
            .collect();
        ActionSpace { n, total_reward, comps, team_masks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total_reward(&self) -> u32 {
        self.total_reward
    }

    /// Number of proposal actions (compositions).
    pub fn n_compositions(&self) -> usize {
        self.comps.len()
    }

    /// Full action count: compositions plus Accept and Decline.
    pub fn n_actions(&self) -> usize {
        self.comps.len() + 2
    }

    pub fn accept_index(&self) -> usize {
        self.comps.len()
    }

    pub fn decline_index(&self) -> usize {
        self.comps.len() + 1
    }

    pub fn composition(&self, idx: usize) -> &[u32] {
        &self.comps[idx]
    }

    pub fn index_of(&self, shares: &[u32]) -> Option<usize> {
        self.comps.binary_search_by(|c| c.as_slice().cmp(shares)).ok()
    }

    /// Indices of the legal proposals for a proposer, given the 2^n winning
    /// table of the current board.
    pub fn legal_proposals(&self, winning: &[bool], proposer: usize) -> Vec<usize> {
        (0..self.comps.len())
            .filter(|&k| {
                self.comps[k][proposer] > 0 && winning[self.team_masks[k] as usize]
            })
            .collect()
    }
}

/// Every legal allocation for a proposer: shares sum to r, the implied team
/// wins, and the proposer takes a positive share.
pub fn legal_allocations(board: &Board, proposer: usize, total_reward: u32) -> Vec<Allocation> {
    let space = ActionSpace::new(board.n(), total_reward);
    let winning = winning_table(board);
    space
        .legal_proposals(&winning, proposer)
        .into_iter()
        .map(|k| Allocation::new(space.composition(k).to_vec()))
        .collect()
}

/// Table of `v(C)` for all 2^n coalitions, indexed by bitmask.
pub fn winning_table(board: &Board) -> Vec<bool> {
    let n = board.n();
    assert!(n <= 20, "winning table only built for small n");
    let mut out = vec![false; 1 << n];
    for (mask, slot) in out.iter_mut().enumerate() {
        let c = Coalition::from_mask(mask as u64);
        *slot = board.value(&c).unwrap() == 1;
    }
    out
}

pub struct PaEnv {
    config: PaConfig,
    board: Board,
    state: PaState,
    space: ActionSpace,
    winning: Vec<bool>,
    shapley: Option<ShapleyVector>,
}

impl PaEnv {
    pub fn new(board: Board, config: PaConfig) -> Result<Self> {
        config.validate()?;
        let space = ActionSpace::new(board.n(), config.total_reward);
        let mut env = PaEnv {
            config,
            space,
            winning: Vec::new(),
            shapley: None,
            state: PaState {
                phase: Phase::Terminal,
                proposer: 0,
                pending: None,
                round: 0,
                terminal_rewards: Some(vec![]),
            },
            board: Board::new(vec![1.0], 1.0)?,
        };
        env.install_board(board)?;
        Ok(env)
    }

    fn install_board(&mut self, board: Board) -> Result<()> {
        self.winning = winning_table(&board);
        self.shapley = if self.config.shapley_aware {
            Some(shapley(&board)?)
        } else {
            None
        };
        self.board = board;
        Ok(())
    }

    /// Swap the underlying board (training draws a new board per episode).
    /// The action space is preserved; call [`PaEnv::reset`] afterwards.
    pub fn set_board(&mut self, board: Board) -> Result<()> {
        if board.n() != self.space.n() {
            return Err(Error::Config("board size differs from the action space".into()));
        }
        self.install_board(board)
    }

    pub fn board(&self) -> &Board {
        &self.board
    }

    pub fn config(&self) -> &PaConfig {
        &self.config
    }

    pub fn state(&self) -> &PaState {
        &self.state
    }

    pub fn action_space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.board.n()
    }

    /// Proposees of the pending proposal: team members other than the proposer.
    pub fn proposees(&self) -> Vec<usize> {
        match &self.state.pending {
            Some(alloc) => {
                alloc.team().iter().filter(|&i| i != self.state.proposer).collect()
            }
            None => vec![],
        }
    }

    /// Legal proposal indices for an agent proposing on the current board.
    /// Callers that hit this repeatedly should cache per (board, proposer).
    pub fn legal_proposals(&self, proposer: usize) -> Vec<usize> {
        self.space.legal_proposals(&self.winning, proposer)
    }

    pub fn observation(&self, agent: usize) -> PaObservation {
        PaObservation {
            weights: self.board.weights().to_vec(),
            quota: self.board.quota(),
            agent,
            phase: self.state.phase,
            proposer: self.state.proposer,
            pending: self.state.pending.as_ref().map(|a| a.shares().to_vec()),
            total_reward: self.config.total_reward,
            shapley: self.shapley.as_ref().map(|s| s.values().to_vec()),
        }
    }

    pub fn observations(&self) -> Vec<PaObservation> {
        (0..self.n()).map(|i| self.observation(i)).collect()
    }

    /// Start an episode: propose phase, uniformly random proposer, round 0.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<PaObservation> {
        self.state = PaState {
            phase: Phase::Propose,
            proposer: rng.gen_range(0..self.n()),
            pending: None,
            round: 0,
            terminal_rewards: None,
        };
        self.observations()
    }

    pub fn step<R: Rng + ?Sized>(&mut self, action: PaAction, rng: &mut R) -> Result<PaStepResult> {
        let n = self.n();
        match (self.state.phase, action) {
            (Phase::Propose, PaAction::Propose(alloc)) => {
                let alloc = Allocation::validated(
                    alloc.shares().to_vec(),
                    &self.board,
                    self.config.total_reward,
                    self.state.proposer,
                )?;
                self.state.pending = Some(alloc);
                self.state.phase = Phase::Respond;
                Ok(PaStepResult { rewards: vec![0.0; n], done: false, event: StepEvent::Proposed })
            }
            (Phase::Respond, PaAction::Respond(responses)) => {
                let proposees = self.proposees();
                let mut seen = vec![false; n];
                for &(agent, _) in &responses {
                    if agent >= n || !proposees.contains(&agent) {
                        return Err(Error::IllegalAction(format!(
                            "agent {agent} is not a proposee"
                        )));
                    }
                    if seen[agent] {
                        return Err(Error::IllegalAction(format!(
                            "duplicate response from agent {agent}"
                        )));
                    }
                    seen[agent] = true;
                }
                if responses.len() != proposees.len() {
                    return Err(Error::IllegalAction(format!(
                        "expected responses from all {} proposees, got {}",
                        proposees.len(),
                        responses.len()
                    )));
                }
                let all_accept = responses.iter().all(|(_, r)| *r == Response::Accept);
                if all_accept {
                    let alloc = self.state.pending.take().unwrap();
                    let rewards: Vec<f64> = alloc.shares().iter().map(|&s| s as f64).collect();
                    self.state.phase = Phase::Terminal;
                    self.state.terminal_rewards = Some(rewards.clone());
                    return Ok(PaStepResult { rewards, done: true, event: StepEvent::Agreed });
                }
                // a decline: the horizon check precedes the continuation draw,
                // so a fixed-horizon game ends deterministically at round T-1
                let next_round = self.state.round + 1;
                if let Some(limit) = self.config.max_rounds {
                    if next_round >= limit {
                        return Ok(self.terminate_zero(StepEvent::HorizonExhausted));
                    }
                }
                if rng.gen::<f64>() < self.config.continue_prob {
                    self.state.round = next_round;
                    self.state.proposer = rng.gen_range(0..n);
                    self.state.pending = None;
                    self.state.phase = Phase::Propose;
                    Ok(PaStepResult {
                        rewards: vec![0.0; n],
                        done: false,
                        event: StepEvent::DeclinedContinued,
                    })
                } else {
                    Ok(self.terminate_zero(StepEvent::DeclinedTerminated))
                }
            }
            (Phase::Terminal, _) => {
                Err(Error::IllegalAction("episode already terminal".into()))
            }
            (phase, _) => Err(Error::IllegalAction(format!(
                "action does not match phase {phase:?}"
            ))),
        }
    }

    fn terminate_zero(&mut self, event: StepEvent) -> PaStepResult {
        let n = self.n();
        self.state.phase = Phase::Terminal;
        self.state.pending = None;
        self.state.terminal_rewards = Some(vec![0.0; n]);
        PaStepResult { rewards: vec![0.0; n], done: true, event }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn board(w: &[f64], q: f64) -> Board {
        Board::new(w.to_vec(), q).unwrap()
    }

    fn dictator() -> Board {
        board(&[16.0, 1.0, 1.0, 1.0, 1.0], 15.0)
    }

    #[test]
    fn reset_is_deterministic_per_seed() {
        let mut env = PaEnv::new(dictator(), PaConfig::default()).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(1);
        env.reset(&mut a);
        let p1 = env.state().proposer;
        env.reset(&mut b);
        assert_eq!(env.state().proposer, p1);
    }

    #[test]
    fn proposer_distribution_is_uniform() {
        let mut env = PaEnv::new(dictator(), PaConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0usize; 5];
        let trials = 10_000;
        for _ in 0..trials {
            env.reset(&mut rng);
            counts[env.state().proposer] += 1;
        }
        // chi^2 test with 4 dof at alpha=0.01 (critical value 13.277)
        let expected = trials as f64 / 5.0;
        let chi2: f64 =
            counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 13.277, "chi2={chi2} counts={counts:?}");
    }

    #[test]
    fn shapley_aware_extends_observation() {
        let cfg = PaConfig { shapley_aware: true, ..PaConfig::default() };
        let mut env = PaEnv::new(dictator(), cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let obs = env.reset(&mut rng);
        assert_eq!(obs[0].shapley.as_deref(), Some(&[1.0, 0.0, 0.0, 0.0, 0.0][..]));
        assert_eq!(obs[0].flatten().len(), PaObservation::flat_len(5, true));
        assert_eq!(
            PaObservation::flat_len(5, true),
            PaObservation::flat_len(5, false) + 5
        );
    }

    #[test]
    fn legal_allocations_examples() {
        // dictator may propose the singleton team keeping everything
        let allocs = legal_allocations(&dictator(), 0, 3);
        assert!(allocs.iter().any(|a| a.shares() == [3, 0, 0, 0, 0]));
        assert!(allocs.iter().all(|a| a.team().contains(0)));

        // three-player parliament, tiny reward
        let b = board(&[49.0, 49.0, 2.0], 50.0);
        let allocs = legal_allocations(&b, 2, 2);
        let shares: Vec<&[u32]> = allocs.iter().map(|a| a.shares()).collect();
        assert_eq!(shares, vec![&[0, 1, 1][..], &[1, 0, 1][..]]);

        // compositions bound: n=5, r=20 has C(24,4) = 10626 tuples
        let space = ActionSpace::new(5, 20);
        assert_eq!(space.n_compositions(), 10626);
        let fully_connected = board(&[1.0, 1.0, 1.0, 1.0, 1.0], 1.0);
        assert!(legal_allocations(&fully_connected, 0, 20).len() <= 10626);
    }

    #[test]
    fn action_space_is_lexicographic_and_indexable() {
        let space = ActionSpace::new(3, 4);
        for w in space.comps.windows(2) {
            assert!(w[0] < w[1], "not lexicographic: {:?} then {:?}", w[0], w[1]);
        }
        for (k, comp) in space.comps.iter().enumerate() {
            assert_eq!(space.index_of(comp), Some(k));
        }
    }

    #[test]
    fn agreement_pays_the_pending_allocation() {
        let b = board(&[5.0, 6.0, 7.0, 5.0, 4.0], 15.0);
        let mut env = PaEnv::new(b, PaConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        loop {
            env.reset(&mut rng);
            if env.state().proposer == 0 {
                break;
            }
        }
        let alloc = Allocation::new(vec![18, 1, 1, 0, 0]);
        env.step(PaAction::Propose(alloc), &mut rng).unwrap();
        assert_eq!(env.proposees(), vec![1, 2]);
        let res = env
            .step(
                PaAction::Respond(vec![(1, Response::Accept), (2, Response::Accept)]),
                &mut rng,
            )
            .unwrap();
        assert!(res.done);
        assert_eq!(res.rewards, vec![18.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn losing_team_proposal_is_rejected() {
        let b = board(&[5.0, 6.0, 7.0, 5.0, 4.0], 15.0);
        let mut env = PaEnv::new(b, PaConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        loop {
            env.reset(&mut rng);
            if env.state().proposer == 0 {
                break;
            }
        }
        // team {0,1} has weight 11 < 15
        let err = env
            .step(PaAction::Propose(Allocation::new(vec![10, 10, 0, 0, 0])), &mut rng)
            .unwrap_err();
        assert!(matches!(err, Error::IllegalAction(_)), "{err}");
    }

    #[test]
    fn decline_can_zero_out_the_episode() {
        let b = dictator();
        let mut env = PaEnv::new(b, PaConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut saw_zero_termination = false;
        for _ in 0..200 {
            env.reset(&mut rng);
            let proposer = env.state().proposer;
            let mut shares = vec![0u32; 5];
            shares[proposer] = 19;
            shares[0] = if proposer == 0 { 20 } else { 1 };
            env.step(PaAction::Propose(Allocation::new(shares)), &mut rng).unwrap();
            let responses: Vec<(usize, Response)> =
                env.proposees().iter().map(|&a| (a, Response::Decline)).collect();
            if responses.is_empty() {
                continue;
            }
            let res = env.step(PaAction::Respond(responses), &mut rng).unwrap();
            if res.done {
                assert_eq!(res.event, StepEvent::DeclinedTerminated);
                assert_eq!(res.rewards, vec![0.0; 5]);
                saw_zero_termination = true;
                break;
            } else {
                assert_eq!(res.event, StepEvent::DeclinedContinued);
            }
        }
        assert!(saw_zero_termination);
    }

    #[test]
    fn respond_from_non_proposee_errors() {
        let mut env = PaEnv::new(dictator(), PaConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        loop {
            env.reset(&mut rng);
            if env.state().proposer == 0 {
                break;
            }
        }
        env.step(PaAction::Propose(Allocation::new(vec![19, 1, 0, 0, 0])), &mut rng).unwrap();
        let err = env
            .step(PaAction::Respond(vec![(2, Response::Accept)]), &mut rng)
            .unwrap_err();
        assert!(matches!(err, Error::IllegalAction(_)));
    }

    #[test]
    fn fixed_horizon_ends_with_zeros() {
        let cfg = PaConfig { max_rounds: Some(1), ..PaConfig::default() };
        let mut env = PaEnv::new(dictator(), cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        loop {
            env.reset(&mut rng);
            if env.state().proposer == 0 {
                break;
            }
        }
        env.step(PaAction::Propose(Allocation::new(vec![19, 1, 0, 0, 0])), &mut rng).unwrap();
        let res = env
            .step(PaAction::Respond(vec![(1, Response::Decline)]), &mut rng)
            .unwrap();
        assert!(res.done);
        assert_eq!(res.event, StepEvent::HorizonExhausted);
        assert_eq!(res.rewards, vec![0.0; 5]);
    }

    #[test]
    fn singleton_proposal_goes_through_an_empty_respond_step() {
        let mut env = PaEnv::new(dictator(), PaConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        loop {
            env.reset(&mut rng);
            if env.state().proposer == 0 {
                break;
            }
        }
        env.step(PaAction::Propose(Allocation::new(vec![20, 0, 0, 0, 0])), &mut rng).unwrap();
        assert!(env.proposees().is_empty());
        let res = env.step(PaAction::Respond(vec![]), &mut rng).unwrap();
        assert!(res.done);
        assert_eq!(res.rewards, vec![20.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
