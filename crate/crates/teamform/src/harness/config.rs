//! TOML experiment configuration with one section per module. Every field
//! has a desk-scale default; the full-scale settings from the experiments
//! (150 train boards, 500k episodes, r=20) are plain overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boards::BoardDistribution;
use crate::env::propose_accept::PaConfig;
use crate::env::team_patches::TpConfig;
use crate::error::{Error, Result};
use crate::learner::population::RlConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoardsSection {
    pub n: usize,
    pub quota: f64,
    pub weight_mean: f64,
    pub weight_std: f64,
    pub exclude_equal_power: bool,
    pub integer_weights: bool,
    pub n_train: usize,
    pub n_test: usize,
}

impl Default for BoardsSection {
    fn default() -> Self {
        let d = BoardDistribution::default();
        BoardsSection {
            n: d.n,
            quota: d.quota,
            weight_mean: d.weight_mean,
            weight_std: d.weight_std,
            exclude_equal_power: d.exclude_equal_power,
            integer_weights: d.integer_weights,
            n_train: 40,
            n_test: 10,
        }
    }
}

impl BoardsSection {
    pub fn distribution(&self) -> BoardDistribution {
        BoardDistribution {
            n: self.n,
            quota: self.quota,
            weight_mean: self.weight_mean,
            weight_std: self.weight_std,
            exclude_equal_power: self.exclude_equal_power,
            integer_weights: self.integer_weights,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProposeAcceptSection {
    pub total_reward: u32,
    pub continue_prob: f64,
    pub shapley_aware: bool,
    pub max_rounds: Option<u32>,
}

impl Default for ProposeAcceptSection {
    fn default() -> Self {
        // desk preset: r=10 keeps the composition action space small
        ProposeAcceptSection {
            total_reward: 10,
            continue_prob: 0.9,
            shapley_aware: false,
            max_rounds: None,
        }
    }
}

impl ProposeAcceptSection {
    pub fn pa_config(&self) -> PaConfig {
        PaConfig {
            total_reward: self.total_reward,
            continue_prob: self.continue_prob,
            shapley_aware: self.shapley_aware,
            max_rounds: self.max_rounds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TeamPatchesSection {
    pub total_reward: u32,
    pub max_steps: u32,
    /// "three-patch" (default) or "two-patch" (perturbation world).
    pub layout: String,
}

impl Default for TeamPatchesSection {
    fn default() -> Self {
        TeamPatchesSection { total_reward: 7, max_steps: 100, layout: "three-patch".into() }
    }
}

impl TeamPatchesSection {
    pub fn tp_config(&self) -> Result<TpConfig> {
        let base = match self.layout.as_str() {
            "three-patch" => TpConfig::default(),
            "two-patch" => TpConfig::two_patch_unperturbed(),
            other => return Err(Error::Config(format!("unknown layout {other:?}"))),
        };
        Ok(TpConfig { total_reward: self.total_reward, max_steps: self.max_steps, ..base })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSection {
    /// Independent co-trained populations per experiment arm.
    pub populations: usize,
    /// Frozen-evaluation episodes per (population, board).
    pub eval_episodes: usize,
    /// Population pairs for the bot comparison.
    pub pairs: usize,
    /// Bot seat positions to sweep; empty = all seats.
    pub bot_seats: Vec<usize>,
    pub regression_boards: usize,
    pub regression_hidden: usize,
    pub regression_epochs: usize,
    pub nash_reward: u32,
    pub nash_rounds: u32,
    pub perturb_max_offset: usize,
    /// Training episodes for each perturbation offset (spatial runs are the
    /// costly arm, so they get their own budget).
    pub perturb_episodes: usize,
    pub perturb_eval_episodes: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            populations: 3,
            eval_episodes: 2000,
            pairs: 1,
            bot_seats: vec![],
            regression_boards: 3000,
            regression_hidden: 20,
            regression_epochs: 5000,
            nash_reward: 20,
            nash_rounds: 10,
            perturb_max_offset: 10,
            perturb_episodes: 1500,
            perturb_eval_episodes: 300,
        }
    }
}

/// Root experiment configuration; sections mirror the library modules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub boards: BoardsSection,
    pub propose_accept: ProposeAcceptSection,
    pub team_patches: TeamPatchesSection,
    pub learner: RlConfig,
    pub run: RunSection,
}

impl ExperimentConfig {
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml();
        let parsed = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg, parsed);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = ExperimentConfig::parse(
            "seed = 9\n[boards]\nn_train = 150\nn_test = 50\n[learner]\nepisodes = 500000\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.boards.n_train, 150);
        assert_eq!(cfg.learner.episodes, 500_000);
        assert_eq!(cfg.boards.quota, 15.0);
        assert_eq!(cfg.run.populations, 3);
    }

    #[test]
    fn unknown_layout_is_rejected() {
        let section = TeamPatchesSection { layout: "maze".into(), ..Default::default() };
        assert!(section.tp_config().is_err());
    }
}
