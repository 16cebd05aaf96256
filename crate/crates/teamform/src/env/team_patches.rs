//! The Team Patches negotiation game: a 15x15 grid with colored rectangular
//! patches. Agents move, rotate, and declare reward demands; the episode ends
//! when some patch holds a viable team whose declared demands fit the budget,
//! paying each member its demand.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coopgame::{Board, Coalition};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchColor {
    Red,
    Green,
    Blue,
}

/// Inclusive cell rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchRect {
    pub color: PatchColor,
    pub row_min: usize,
    pub row_max: usize,
    pub col_min: usize,
    pub col_max: usize,
}

impl PatchRect {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row_min..=self.row_max).contains(&row)
            && (self.col_min..=self.col_max).contains(&col)
    }

    /// Cell-to-boundary distance: 0 when adjacent to (or on) the rectangle.
    pub fn boundary_distance(&self, row: usize, col: usize) -> usize {
        let dr = if row < self.row_min {
            self.row_min - row
        } else if row > self.row_max {
            row - self.row_max
        } else {
            0
        };
        let dc = if col < self.col_min {
            self.col_min - col
        } else if col > self.col_max {
            col - self.col_max
        } else {
            0
        };
        (dr + dc).saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpConfig {
    pub rows: usize,
    pub cols: usize,
    pub patches: Vec<PatchRect>,
    /// Total reward budget r; demands are integers in 1..=r.
    pub total_reward: u32,
    pub max_steps: u32,
    /// Candidate spawn cells for agents without an override.
    pub spawn_region: Vec<(usize, usize)>,
    /// Spawn override for the maximum-weight agent (spatial perturbations).
    pub max_weight_spawn: Option<(usize, usize)>,
    pub allow_patch_spawns: bool,
    /// Ego observation window edge (odd).
    pub window: usize,
}

impl Default for TpConfig {
    fn default() -> Self {
        TpConfig {
            rows: 15,
            cols: 15,
            patches: three_patch_layout(),
            total_reward: 7,
            max_steps: 100,
            spawn_region: center_block(),
            max_weight_spawn: None,
            allow_patch_spawns: false,
            window: 11,
        }
    }
}

/// Default layout: red on the left, green on top, blue on the right.
pub fn three_patch_layout() -> Vec<PatchRect> {
    vec![
        PatchRect { color: PatchColor::Red, row_min: 5, row_max: 9, col_min: 0, col_max: 2 },
        PatchRect { color: PatchColor::Green, row_min: 0, row_max: 2, col_min: 5, col_max: 9 },
        PatchRect { color: PatchColor::Blue, row_min: 5, row_max: 9, col_min: 12, col_max: 14 },
    ]
}

/// The 3x3 block in the middle of the default 15x15 grid.
fn center_block() -> Vec<(usize, usize)> {
    let mut cells = Vec::new();
    for r in 6..=8 {
        for c in 6..=8 {
            cells.push((r, c));
        }
    }
    cells
}

impl TpConfig {
    /// Two-patch layout for the spatial-perturbation experiment. Patches sit
    /// along the top edge; the non-moved agents spawn between them, and the
    /// maximum-weight agent starts `offset` squares (boundary distance) below
    /// the red patch, so its distance to the nearest patch grows with the
    /// offset while everyone else stays close.
    pub fn two_patch_perturbation(offset: usize) -> Self {
        let patches = vec![
            PatchRect { color: PatchColor::Red, row_min: 0, row_max: 2, col_min: 0, col_max: 4 },
            PatchRect { color: PatchColor::Blue, row_min: 0, row_max: 2, col_min: 10, col_max: 14 },
        ];
        TpConfig {
            patches,
            spawn_region: vec![(4, 5), (4, 6), (4, 8), (4, 9)],
            max_weight_spawn: Some((3 + offset, 2)),
            ..TpConfig::default()
        }
    }

    /// The same two-patch world without the spawn override (control arm).
    pub fn two_patch_unperturbed() -> Self {
        TpConfig {
            max_weight_spawn: None,
            spawn_region: vec![(4, 5), (4, 6), (4, 7), (4, 8), (4, 9)],
            ..Self::two_patch_perturbation(0)
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be >= 1".into()));
        }
        if self.window % 2 == 0 || self.window < 1 {
            return Err(Error::Config("window must be odd".into()));
        }
        if self.total_reward == 0 {
            return Err(Error::Config("total_reward must be positive".into()));
        }
        for p in &self.patches {
            if p.row_max >= self.rows || p.col_max >= self.cols || p.row_min > p.row_max
                || p.col_min > p.col_max
            {
                return Err(Error::Config("patch outside grid".into()));
            }
        }
        for (i, a) in self.patches.iter().enumerate() {
            for b in self.patches.iter().skip(i + 1) {
                let overlap = a.row_min <= b.row_max
                    && b.row_min <= a.row_max
                    && a.col_min <= b.col_max
                    && b.col_min <= a.col_max;
                if overlap {
                    return Err(Error::Config("patches overlap".into()));
                }
            }
        }
        let mut spawn_cells = self.spawn_region.clone();
        if let Some(cell) = self.max_weight_spawn {
            spawn_cells.push(cell);
        }
        for &(r, c) in &spawn_cells {
            if r >= self.rows || c >= self.cols {
                return Err(Error::Config(format!("spawn cell ({r},{c}) outside grid")));
            }
            if !self.allow_patch_spawns && self.patches.iter().any(|p| p.contains(r, c)) {
                return Err(Error::Config(format!("spawn cell ({r},{c}) overlaps a patch")));
            }
        }
        let needed = if self.max_weight_spawn.is_some() { n - 1 } else { n };
        if self.spawn_region.len() < needed {
            return Err(Error::Config("not enough spawn cells".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    North,
    East,
    South,
    West,
}

impl Orientation {
    fn delta(self) -> (isize, isize) {
        match self {
            Orientation::North => (-1, 0),
            Orientation::East => (0, 1),
            Orientation::South => (1, 0),
            Orientation::West => (0, -1),
        }
    }

    fn left(self) -> Self {
        match self {
            Orientation::North => Orientation::West,
            Orientation::West => Orientation::South,
            Orientation::South => Orientation::East,
            Orientation::East => Orientation::North,
        }
    }

    fn right(self) -> Self {
        self.left().left().left()
    }

    const ALL: [Orientation; 4] =
        [Orientation::North, Orientation::East, Orientation::South, Orientation::West];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pose {
    pub row: usize,
    pub col: usize,
    pub dir: Orientation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpAction {
    Forward,
    Backward,
    StrafeLeft,
    StrafeRight,
    RotateLeft,
    RotateRight,
    Noop,
    /// Demand k in 1..=r.
    SetDemand(u32),
}

impl TpAction {
    /// Flat index for function approximators: the six movement/rotation
    /// actions, then noop, then the r demand levels.
    pub fn to_index(self) -> usize {
        match self {
            TpAction::Forward => 0,
            TpAction::Backward => 1,
            TpAction::StrafeLeft => 2,
            TpAction::StrafeRight => 3,
            TpAction::RotateLeft => 4,
            TpAction::RotateRight => 5,
            TpAction::Noop => 6,
            TpAction::SetDemand(k) => 6 + k as usize,
        }
    }

    pub fn from_index(idx: usize, total_reward: u32) -> Result<Self> {
        Ok(match idx {
            0 => TpAction::Forward,
            1 => TpAction::Backward,
            2 => TpAction::StrafeLeft,
            3 => TpAction::StrafeRight,
            4 => TpAction::RotateLeft,
            5 => TpAction::RotateRight,
            6 => TpAction::Noop,
            k if k <= 6 + total_reward as usize => TpAction::SetDemand((k - 6) as u32),
            _ => return Err(Error::IllegalAction(format!("action index {idx} out of range"))),
        })
    }

    pub fn count(total_reward: u32) -> usize {
        7 + total_reward as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpState {
    pub poses: Vec<Pose>,
    /// 0 means "not yet demanded"; set demands are in 1..=r.
    pub demands: Vec<u32>,
    pub step: u32,
    pub terminal_rewards: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct TpStepResult {
    pub rewards: Vec<f64>,
    pub done: bool,
    /// Index of the patch that paid out, if the episode ended in agreement.
    pub winning_patch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchStatus {
    pub viable: bool,
    pub valid: bool,
    pub team: Coalition,
    pub demand_sum: u32,
}

/// Cell colors as seen by an observer. `Other` ranks the remaining agents by
/// index, skipping the observer (who always sees itself as `SelfAgent`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellColor {
    Empty,
    Border,
    Patch(PatchColor),
    SelfAgent,
    Other(usize),
}

impl CellColor {
    /// Channel index for one-hot encoding; `Empty` encodes as all-zeros.
    pub fn channel(self) -> Option<usize> {
        match self {
            CellColor::Empty => None,
            CellColor::Border => Some(0),
            CellColor::Patch(PatchColor::Red) => Some(1),
            CellColor::Patch(PatchColor::Green) => Some(2),
            CellColor::Patch(PatchColor::Blue) => Some(3),
            CellColor::SelfAgent => Some(4),
            CellColor::Other(k) => Some(5 + k),
        }
    }

    pub fn channel_count(n_agents: usize) -> usize {
        5 + (n_agents - 1)
    }
}

/// Ego-centric observation: a self-centered color window plus the public
/// index / weights / demands vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TpObservation {
    pub window: Vec<Vec<CellColor>>,
    pub agent: usize,
    pub weights: Vec<f64>,
    pub demands: Vec<u32>,
    pub total_reward: u32,
}

impl TpObservation {
    /// One-hot channel grid of shape (channels, window, window) flattened
    /// row-major, for the convolutional net.
    pub fn grid_channels(&self) -> Vec<f64> {
        let n = self.weights.len();
        let ch = CellColor::channel_count(n);
        let w = self.window.len();
        let mut out = vec![0.0; ch * w * w];
        for (i, row) in self.window.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                if let Some(c) = cell.channel() {
                    out[c * w * w + i * w + j] = 1.0;
                }
            }
        }
        out
    }

    /// Flat non-spatial features: one-hot index, normalized weights, and
    /// normalized demands.
    pub fn extras(&self) -> Vec<f64> {
        let n = self.weights.len();
        let total_w: f64 = self.weights.iter().sum();
        let mut v = Vec::with_capacity(3 * n);
        for i in 0..n {
            v.push(if i == self.agent { 1.0 } else { 0.0 });
        }
        v.extend(self.weights.iter().map(|w| w / total_w));
        v.extend(self.demands.iter().map(|&d| d as f64 / self.total_reward as f64));
        v
    }
}

pub struct TpEnv {
    config: TpConfig,
    board: Board,
    state: TpState,
}

impl TpEnv {
    pub fn new(board: Board, config: TpConfig) -> Result<Self> {
        config.validate(board.n())?;
        let n = board.n();
        Ok(TpEnv {
            config,
            board,
            state: TpState {
                poses: vec![Pose { row: 0, col: 0, dir: Orientation::North }; n],
                demands: vec![0; n],
                step: 0,
                terminal_rewards: Some(vec![0.0; n]),
            },
        })
    }

    /// Rebuild around a state assembled by hand (scenario tests, replay).
    pub fn with_state(board: Board, config: TpConfig, state: TpState) -> Result<Self> {
        config.validate(board.n())?;
        let mut env = TpEnv::new(board, config)?;
        env.state = state;
        Ok(env)
    }

    pub fn board(&self) -> &Board {
        &self.board
    }

    pub fn set_board(&mut self, board: Board) -> Result<()> {
        self.config.validate(board.n())?;
        self.board = board;
        Ok(())
    }

    pub fn config(&self) -> &TpConfig {
        &self.config
    }

    pub fn state(&self) -> &TpState {
        &self.state
    }

    pub fn n(&self) -> usize {
        self.board.n()
    }

    /// The agent whose spawn the perturbation override applies to: maximum
    /// weight, ties to the lowest index.
    pub fn max_weight_agent(&self) -> usize {
        let ws = self.board.weights();
        let mut best = 0;
        for i in 1..ws.len() {
            if ws[i] > ws[best] {
                best = i;
            }
        }
        best
    }

    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<TpObservation>> {
        let n = self.n();
        let moved = self.config.max_weight_spawn.map(|cell| (self.max_weight_agent(), cell));
        let mut region = self.config.spawn_region.clone();
        if let Some((_, cell)) = moved {
            region.retain(|&c| c != cell);
        }
        region.shuffle(rng);
        let mut poses = Vec::with_capacity(n);
        let mut next = region.into_iter();
        for agent in 0..n {
            let (row, col) = match moved {
                Some((a, cell)) if a == agent => cell,
                _ => next
                    .next()
                    .ok_or_else(|| Error::Config("spawn region exhausted".into()))?,
            };
            let dir = *Orientation::ALL.as_slice().choose(rng).unwrap();
            poses.push(Pose { row, col, dir });
        }
        self.state = TpState { poses, demands: vec![0; n], step: 0, terminal_rewards: None };
        Ok(self.observations())
    }

    pub fn patch_status(&self, patch: usize) -> Result<PatchStatus> {
        let rect = self
            .config
            .patches
            .get(patch)
            .ok_or_else(|| Error::Config(format!("no patch {patch}")))?;
        let members: Vec<usize> = (0..self.n())
            .filter(|&i| rect.contains(self.state.poses[i].row, self.state.poses[i].col))
            .collect();
        let team = Coalition::from_members(&members);
        let viable =
            !team.is_empty() && self.board.coalition_weight(&team) >= self.board.quota();
        let demand_sum: u32 = members.iter().map(|&i| self.state.demands[i]).sum();
        let valid = demand_sum <= self.config.total_reward;
        Ok(PatchStatus { viable, valid, team, demand_sum })
    }

    /// Termination requires a nonempty viable team, every member's demand
    /// set, and a positive demand total within the budget.
    fn patch_terminates(&self, patch: usize) -> bool {
        let status = self.patch_status(patch).unwrap();
        status.viable
            && status.valid
            && !status.team.is_empty()
            && status.team.iter().all(|i| self.state.demands[i] > 0)
    }

    pub fn step(&mut self, actions: &[TpAction]) -> Result<TpStepResult> {
        let n = self.n();
        if self.state.terminal_rewards.is_some() {
            return Err(Error::IllegalAction("episode already terminal".into()));
        }
        if actions.len() != n {
            return Err(Error::IllegalAction(format!(
                "expected {n} actions, got {}",
                actions.len()
            )));
        }
        for a in actions {
            if let TpAction::SetDemand(k) = a {
                if *k == 0 || *k > self.config.total_reward {
                    return Err(Error::IllegalAction(format!(
                        "demand {k} outside 1..={}",
                        self.config.total_reward
                    )));
                }
            }
        }
        // Movement resolves in agent-index order: lower indices win conflicts,
        // blocked movers stay put.
        for agent in 0..n {
            let pose = self.state.poses[agent];
            let target = match actions[agent] {
                TpAction::Forward => offset(pose, pose.dir.delta()),
                TpAction::Backward => {
                    offset(pose, neg(pose.dir.delta()))
                }
                TpAction::StrafeLeft => offset(pose, pose.dir.left().delta()),
                TpAction::StrafeRight => offset(pose, pose.dir.right().delta()),
                TpAction::RotateLeft => {
                    self.state.poses[agent].dir = pose.dir.left();
                    None
                }
                TpAction::RotateRight => {
                    self.state.poses[agent].dir = pose.dir.right();
                    None
                }
                TpAction::Noop => None,
                TpAction::SetDemand(k) => {
                    self.state.demands[agent] = k;
                    None
                }
            };
            if let Some((row, col)) = target {
                if row < self.config.rows && col < self.config.cols {
                    let occupied = (0..n).any(|other| {
                        other != agent
                            && self.state.poses[other].row == row
                            && self.state.poses[other].col == col
                    });
                    if !occupied {
                        self.state.poses[agent].row = row;
                        self.state.poses[agent].col = col;
                    }
                }
            }
        }
        // Patch termination check, lowest patch index first.
        for patch in 0..self.config.patches.len() {
            if self.patch_terminates(patch) {
                let status = self.patch_status(patch)?;
                let mut rewards = vec![0.0; n];
                for i in status.team.iter() {
                    rewards[i] = self.state.demands[i] as f64;
                }
                self.state.terminal_rewards = Some(rewards.clone());
                return Ok(TpStepResult { rewards, done: true, winning_patch: Some(patch) });
            }
        }
        self.state.step += 1;
        if self.state.step >= self.config.max_steps {
            self.state.terminal_rewards = Some(vec![0.0; n]);
            return Ok(TpStepResult { rewards: vec![0.0; n], done: true, winning_patch: None });
        }
        Ok(TpStepResult { rewards: vec![0.0; n], done: false, winning_patch: None })
    }

    fn cell_color(&self, row: isize, col: isize, observer: usize) -> CellColor {
        if row < 0 || col < 0 || row as usize >= self.config.rows || col as usize >= self.config.cols
        {
            return CellColor::Border;
        }
        let (row, col) = (row as usize, col as usize);
        for (i, p) in self.state.poses.iter().enumerate() {
            if p.row == row && p.col == col {
                if i == observer {
                    return CellColor::SelfAgent;
                }
                let rank = (0..self.n()).filter(|&j| j != observer).position(|j| j == i).unwrap();
                return CellColor::Other(rank);
            }
        }
        for p in &self.config.patches {
            if p.contains(row, col) {
                return CellColor::Patch(p.color);
            }
        }
        CellColor::Empty
    }

    pub fn observation(&self, agent: usize) -> TpObservation {
        let half = (self.config.window / 2) as isize;
        let pose = self.state.poses[agent];
        let mut window = Vec::with_capacity(self.config.window);
        for dr in -half..=half {
            let mut row = Vec::with_capacity(self.config.window);
            for dc in -half..=half {
                row.push(self.cell_color(pose.row as isize + dr, pose.col as isize + dc, agent));
            }
            window.push(row);
        }
        TpObservation {
            window,
            agent,
            weights: self.board.weights().to_vec(),
            demands: self.state.demands.clone(),
            total_reward: self.config.total_reward,
        }
    }

    pub fn observations(&self) -> Vec<TpObservation> {
        (0..self.n()).map(|i| self.observation(i)).collect()
    }

    /// Plain-text grid dump for debugging.
    pub fn ascii(&self) -> String {
        let mut out = String::new();
        for r in 0..self.config.rows {
            for c in 0..self.config.cols {
                let ch = if let Some(i) =
                    (0..self.n()).find(|&i| self.state.poses[i].row == r && self.state.poses[i].col == c)
                {
                    char::from_digit(i as u32, 10).unwrap_or('?')
                } else {
                    match self.config.patches.iter().find(|p| p.contains(r, c)) {
                        Some(p) => match p.color {
                            PatchColor::Red => 'r',
                            PatchColor::Green => 'g',
                            PatchColor::Blue => 'b',
                        },
                        None => '.',
                    }
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}

fn offset(pose: Pose, delta: (isize, isize)) -> Option<(usize, usize)> {
    let row = pose.row as isize + delta.0;
    let col = pose.col as isize + delta.1;
    if row < 0 || col < 0 {
        None
    } else {
        Some((row as usize, col as usize))
    }
}

fn neg(d: (isize, isize)) -> (isize, isize) {
    (-d.0, -d.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fig2_board() -> Board {
        Board::new(vec![5.0, 6.0, 7.0, 8.0, 9.0], 15.0).unwrap()
    }

    #[test]
    fn reset_spawns_in_the_center_block() {
        let mut env = TpEnv::new(fig2_board(), TpConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        env.reset(&mut rng).unwrap();
        for p in &env.state().poses {
            assert!((6..=8).contains(&p.row) && (6..=8).contains(&p.col));
        }
        let mut cells: Vec<(usize, usize)> =
            env.state().poses.iter().map(|p| (p.row, p.col)).collect();
        cells.sort();
        cells.dedup();
        assert_eq!(cells.len(), 5, "spawn collision");
        assert_eq!(env.state().demands, vec![0; 5]);
    }

    #[test]
    fn reset_is_deterministic_per_seed() {
        let mut env = TpEnv::new(fig2_board(), TpConfig::default()).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        env.reset(&mut a).unwrap();
        let poses1 = env.state().poses.clone();
        env.reset(&mut b).unwrap();
        assert_eq!(env.state().poses, poses1);
    }

    #[test]
    fn perturbation_offset_zero_touches_the_patch() {
        let cfg = TpConfig::two_patch_perturbation(0);
        let mut env = TpEnv::new(fig2_board(), cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        env.reset(&mut rng).unwrap();
        let heavy = env.max_weight_agent();
        assert_eq!(heavy, 4);
        let pose = env.state().poses[heavy];
        let d = env.config().patches.iter().map(|p| p.boundary_distance(pose.row, pose.col)).min();
        assert_eq!(d, Some(0));
    }

    #[test]
    fn perturbation_offsets_scale_the_distance() {
        for offset in [0usize, 3, 10] {
            let cfg = TpConfig::two_patch_perturbation(offset);
            let mut env = TpEnv::new(fig2_board(), cfg).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            env.reset(&mut rng).unwrap();
            let pose = env.state().poses[env.max_weight_agent()];
            let d = env
                .config()
                .patches
                .iter()
                .map(|p| p.boundary_distance(pose.row, pose.col))
                .min()
                .unwrap();
            assert_eq!(d, offset);
        }
    }

    fn make_state(cells: &[(usize, usize)], demands: &[u32]) -> TpState {
        TpState {
            poses: cells
                .iter()
                .map(|&(row, col)| Pose { row, col, dir: Orientation::North })
                .collect(),
            demands: demands.to_vec(),
            step: 0,
            terminal_rewards: None,
        }
    }

    /// The episode-termination scenario described for the example figure:
    /// weights [5,6,7,8,9], q=15, r=7. The red team {7,8} demands 3+4 and is
    /// paid; green holds a lone weight-5 agent; blue demands 4+4 > 7.
    #[test]
    fn fig2_scenario_pays_exactly_the_demands() {
        // agent order [5,6,7,8,9]: 2 and 3 on red, 0 on green, 1 and 4 on blue
        let state = make_state(
            &[(1, 6), (6, 13), (6, 1), (7, 1), (7, 13)],
            &[1, 4, 3, 4, 4],
        );
        let mut env = TpEnv::with_state(fig2_board(), TpConfig::default(), state).unwrap();

        let red = env.patch_status(0).unwrap();
        assert!(red.viable && red.valid);
        assert_eq!(red.team, Coalition::from_members(&[2, 3]));
        let green = env.patch_status(1).unwrap();
        assert!(!green.viable);
        let blue = env.patch_status(2).unwrap();
        assert!(blue.viable && !blue.valid);

        let res = env.step(&[TpAction::Noop; 5]).unwrap();
        assert!(res.done);
        assert_eq!(res.winning_patch, Some(0));
        assert_eq!(res.rewards, vec![0.0, 0.0, 3.0, 4.0, 0.0]);
    }

    #[test]
    fn empty_patch_status_is_vacuous() {
        let state = make_state(
            &[(7, 7), (7, 8), (7, 6), (8, 7), (6, 7)],
            &[0, 0, 0, 0, 0],
        );
        let env = TpEnv::with_state(fig2_board(), TpConfig::default(), state).unwrap();
        let s = env.patch_status(0).unwrap();
        assert_eq!(s, PatchStatus { viable: false, valid: true, team: Coalition::EMPTY, demand_sum: 0 });
    }

    #[test]
    fn boundary_cell_counts_as_in_the_patch() {
        // red patch corner cell (5,2)
        let state = make_state(
            &[(5, 2), (7, 8), (7, 6), (8, 7), (6, 7)],
            &[0, 0, 0, 0, 0],
        );
        let env = TpEnv::with_state(fig2_board(), TpConfig::default(), state).unwrap();
        assert!(env.patch_status(0).unwrap().team.contains(0));
    }

    #[test]
    fn unset_demands_block_termination() {
        // viable red team but one member never demanded
        let state = make_state(
            &[(1, 6), (6, 13), (6, 1), (7, 1), (7, 13)],
            &[1, 4, 3, 0, 4],
        );
        let mut env = TpEnv::with_state(fig2_board(), TpConfig::default(), state).unwrap();
        let res = env.step(&[TpAction::Noop; 5]).unwrap();
        assert!(!res.done);
    }

    #[test]
    fn movement_respects_walls_and_other_agents() {
        let mut state = make_state(
            &[(0, 0), (0, 1), (7, 7), (7, 8), (8, 8)],
            &[0, 0, 0, 0, 0],
        );
        state.poses[0].dir = Orientation::North;
        state.poses[1].dir = Orientation::West;
        let mut env = TpEnv::with_state(fig2_board(), TpConfig::default(), state).unwrap();
        // 0 walks into the wall, 1 walks into 0's cell: both blocked
        let res = env
            .step(&[
                TpAction::Forward,
                TpAction::Forward,
                TpAction::Noop,
                TpAction::Noop,
                TpAction::Noop,
            ])
            .unwrap();
        assert!(!res.done);
        assert_eq!(env.state().poses[0].row, 0);
        assert_eq!(env.state().poses[0].col, 0);
        assert_eq!(env.state().poses[1].col, 1);
    }

    #[test]
    fn simultaneous_conflicts_resolve_by_index_priority() {
        // agents 0 (at (5,6)) and 1 (at (7,6)) both target (6,6)
        let mut state = make_state(
            &[(5, 6), (7, 6), (7, 8), (8, 7), (8, 8)],
            &[0, 0, 0, 0, 0],
        );
        state.poses[0].dir = Orientation::South;
        state.poses[1].dir = Orientation::North;
        let mut env = TpEnv::with_state(fig2_board(), TpConfig::default(), state).unwrap();
        env.step(&[
            TpAction::Forward,
            TpAction::Forward,
            TpAction::Noop,
            TpAction::Noop,
            TpAction::Noop,
        ])
        .unwrap();
        assert_eq!((env.state().poses[0].row, env.state().poses[0].col), (6, 6));
        assert_eq!((env.state().poses[1].row, env.state().poses[1].col), (7, 6));
    }

    #[test]
    fn demand_out_of_range_is_illegal() {
        let mut env = TpEnv::new(fig2_board(), TpConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        env.reset(&mut rng).unwrap();
        let err = env
            .step(&[
                TpAction::SetDemand(8),
                TpAction::Noop,
                TpAction::Noop,
                TpAction::Noop,
                TpAction::Noop,
            ])
            .unwrap_err();
        assert!(matches!(err, Error::IllegalAction(_)));
    }

    #[test]
    fn timeout_pays_zero() {
        let mut env = TpEnv::new(fig2_board(), TpConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        env.reset(&mut rng).unwrap();
        let mut steps = 0;
        loop {
            let res = env.step(&[TpAction::RotateLeft; 5]).unwrap();
            steps += 1;
            if res.done {
                assert_eq!(res.rewards, vec![0.0; 5]);
                break;
            }
        }
        assert_eq!(steps, 100);
    }

    #[test]
    fn window_is_centered_with_border_fill() {
        let state = make_state(
            &[(0, 0), (7, 7), (7, 8), (8, 7), (8, 8)],
            &[0, 0, 0, 0, 0],
        );
        let env = TpEnv::with_state(fig2_board(), TpConfig::default(), state).unwrap();
        let obs = env.observation(0);
        assert_eq!(obs.window.len(), 11);
        assert_eq!(obs.window[5][5], CellColor::SelfAgent);
        // everything above and left of the corner is out of bounds
        assert_eq!(obs.window[0][0], CellColor::Border);
        assert_eq!(obs.window[4][5], CellColor::Border);
        let grid = obs.grid_channels();
        assert_eq!(grid.len(), CellColor::channel_count(5) * 11 * 11);
        assert_eq!(obs.extras().len(), 15);
    }
}
