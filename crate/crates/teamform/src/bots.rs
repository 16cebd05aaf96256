//! Hand-crafted Propose-Accept baselines: a random bot, a weight-proportional
//! bot, and a Shapley-proportional bot. The proportional bots propose an
//! integral split close to a proportional target and accept offers with a
//! logistic probability in the offer's distance from that target.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coopgame::{shapley, Board, Coalition};
use crate::env::propose_accept::{
    winning_table, ActionSpace, Allocation, PaObservation, Phase, Response,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BotMode {
    Random,
    Weight,
    Shapley,
}

impl std::str::FromStr for BotMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(BotMode::Random),
            "weight" => Ok(BotMode::Weight),
            "shapley" => Ok(BotMode::Shapley),
            other => Err(Error::Config(format!("unknown bot mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BotParams {
    pub mode: BotMode,
    /// Logistic scale c; an offer matching the target is accepted with
    /// probability 1/2 and the probability steepens with c.
    pub acceptance_scale: f64,
}

impl BotParams {
    pub fn new(mode: BotMode) -> Self {
        BotParams { mode, acceptance_scale: 5.0 }
    }
}

/// A proportional target over a team and its integral rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetAllocation {
    pub team: Coalition,
    /// Real-valued target share per team member, in ascending agent order.
    pub targets: Vec<f64>,
    /// Integral shares (same order) minimizing the L1 distance to the
    /// targets among splits that keep every member's share positive.
    pub integral: Vec<u32>,
}

impl TargetAllocation {
    /// Expand to a full-length allocation over n agents.
    pub fn to_allocation(&self, n: usize) -> Allocation {
        let mut shares = vec![0u32; n];
        for (k, member) in self.team.iter().enumerate() {
            shares[member] = self.integral[k];
        }
        Allocation::new(shares)
    }
}

/// Proportional target for a viable team: weights mode uses w_i / w(C), the
/// Shapley mode uses phi_i renormalized over the team. The integral split is
/// the exact L1 minimizer; ties break to the lexicographically smallest
/// vector by agent index.
pub fn integral_target_allocation(
    board: &Board,
    team: &Coalition,
    total_reward: u32,
    mode: BotMode,
) -> Result<TargetAllocation> {
    if board.value(team)? == 0 {
        return Err(Error::Contract(format!("team {team} is losing")));
    }
    let members = team.members();
    if (total_reward as usize) < members.len() {
        return Err(Error::Contract(format!(
            "cannot give {} members a positive share of {total_reward}",
            members.len()
        )));
    }
    let raw: Vec<f64> = match mode {
        BotMode::Weight => members.iter().map(|&i| board.weights()[i]).collect(),
        BotMode::Shapley => {
            let phi = shapley(board)?;
            members.iter().map(|&i| phi.get(i)).collect()
        }
        BotMode::Random => {
            return Err(Error::Contract("random mode has no target allocation".into()))
        }
    };
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::Contract("degenerate target: zero total mass".into()));
    }
    let targets: Vec<f64> =
        raw.iter().map(|x| x / total * total_reward as f64).collect();
    let integral = l1_closest_positive_split(&targets, total_reward);
    Ok(TargetAllocation { team: *team, targets, integral })
}

/// Enumerate positive integer splits of `total` in lexicographic order and
/// keep the first one attaining the minimal L1 distance; lexicographic
/// enumeration makes the tie-break the lexicographically smallest vector.
fn l1_closest_positive_split(targets: &[f64], total: u32) -> Vec<u32> {
    let k = targets.len();
    let mut best: Option<(f64, Vec<u32>)> = None;
    let mut cur = vec![0u32; k];
    fn rec(
        targets: &[f64],
        cur: &mut Vec<u32>,
        pos: usize,
        left: u32,
        best: &mut Option<(f64, Vec<u32>)>,
    ) {
        let k = targets.len();
        if pos == k - 1 {
            cur[pos] = left;
            let dist: f64 =
                targets.iter().zip(cur.iter()).map(|(t, &x)| (t - x as f64).abs()).sum();
            match best {
                Some((d, _)) if dist >= *d - 1e-12 => {}
                _ => *best = Some((dist, cur.clone())),
            }
            return;
        }
        // every later member still needs at least one unit
        let remaining_members = (k - pos - 1) as u32;
        for v in 1..=left.saturating_sub(remaining_members) {
            cur[pos] = v;
            rec(targets, cur, pos + 1, left - v, best);
        }
    }
    if k == 1 {
        return vec![total];
    }
    rec(targets, &mut cur, 0, total, &mut best);
    best.expect("at least one positive split exists").1
}

/// Acceptance probability for an offer against a target share, measured in
/// reward fractions so the gap lies in [-1, 1]: sigma(c * (offer-target)/r).
pub fn respond_probability(offer: u32, target: f64, total_reward: u32, c: f64) -> f64 {
    let gap = (offer as f64 - target) / total_reward as f64;
    logistic(c * gap)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One bot decision in either phase.
#[derive(Debug, Clone, PartialEq)]
pub enum BotAction {
    Propose(Allocation),
    Respond(Response),
}

#[derive(Debug, Clone)]
pub struct Bot {
    pub params: BotParams,
}

impl Bot {
    pub fn new(mode: BotMode) -> Self {
        Bot { params: BotParams::new(mode) }
    }

    /// Choose a proposal, expressed as an index into the action space's
    /// composition list. `legal` must be the legal proposal indices for this
    /// bot as proposer on the current board.
    pub fn propose<R: Rng + ?Sized>(
        &self,
        obs: &PaObservation,
        space: &ActionSpace,
        legal: &[usize],
        rng: &mut R,
    ) -> Result<usize> {
        match self.params.mode {
            BotMode::Random => legal
                .choose(rng)
                .copied()
                .ok_or_else(|| Error::Contract("no legal proposal".into())),
            mode @ (BotMode::Weight | BotMode::Shapley) => {
                let board = Board::new(obs.weights.clone(), obs.quota)?;
                let winning = winning_table(&board);
                // viable teams containing the bot, chosen uniformly
                let me = obs.agent;
                let r = obs.total_reward;
                let candidates: Vec<u64> = (0..winning.len() as u64)
                    .filter(|&m| {
                        winning[m as usize]
                            && m & (1 << me) != 0
                            && (m.count_ones() as u64) <= r as u64
                    })
                    .collect();
                let mask = *candidates
                    .choose(rng)
                    .ok_or_else(|| Error::Contract("no viable team contains the bot".into()))?;
                let team = Coalition::from_mask(mask);
                let target = integral_target_allocation(&board, &team, r, mode)?;
                let alloc = target.to_allocation(board.n());
                space
                    .index_of(alloc.shares())
                    .ok_or_else(|| Error::Contract("allocation missing from space".into()))
            }
        }
    }

    /// Accept or decline the pending offer.
    pub fn respond<R: Rng + ?Sized>(&self, obs: &PaObservation, rng: &mut R) -> Result<Response> {
        let pending = obs
            .pending
            .as_ref()
            .ok_or_else(|| Error::Contract("respond called without a pending offer".into()))?;
        match self.params.mode {
            BotMode::Random => {
                Ok(if rng.gen::<f64>() < 0.5 { Response::Accept } else { Response::Decline })
            }
            mode @ (BotMode::Weight | BotMode::Shapley) => {
                let board = Board::new(obs.weights.clone(), obs.quota)?;
                let alloc = Allocation::new(pending.clone());
                let team = alloc.team();
                let target = integral_target_allocation(&board, &team, obs.total_reward, mode)?;
                let k = team
                    .iter()
                    .position(|m| m == obs.agent)
                    .ok_or_else(|| Error::Contract("bot is not in the proposed team".into()))?;
                let p = respond_probability(
                    alloc.share(obs.agent),
                    target.targets[k],
                    obs.total_reward,
                    self.params.acceptance_scale,
                );
                Ok(if rng.gen::<f64>() < p { Response::Accept } else { Response::Decline })
            }
        }
    }

    /// Phase dispatch over the observation, building the legal proposal set
    /// on the fly. Hot paths use [`Bot::propose`]/[`Bot::respond`] with a
    /// shared action space instead.
    pub fn act<R: Rng + ?Sized>(&self, obs: &PaObservation, rng: &mut R) -> Result<BotAction> {
        match obs.phase {
            Phase::Propose => {
                let board = Board::new(obs.weights.clone(), obs.quota)?;
                let space = ActionSpace::new(board.n(), obs.total_reward);
                let winning = winning_table(&board);
                let legal = space.legal_proposals(&winning, obs.agent);
                let idx = self.propose(obs, &space, &legal, rng)?;
                Ok(BotAction::Propose(Allocation::new(space.composition(idx).to_vec())))
            }
            Phase::Respond => Ok(BotAction::Respond(self.respond(obs, rng)?)),
            Phase::Terminal => Err(Error::Contract("bot asked to act in a terminal state".into())),
        }
    }
}
