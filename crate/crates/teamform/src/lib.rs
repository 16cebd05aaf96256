//! A negotiation and team-formation laboratory: weighted voting games with
//! exact Shapley values, two negotiation Markov games (turn-based
//! Propose-Accept and the spatial Team Patches grid world), hand-crafted
//! baseline bots, independent multi-agent reinforcement learning, a
//! backward-induction equilibrium solver for the fixed-horizon game, and an
//! experiment harness that ties them together.

pub mod boards;
pub mod bots;
pub mod coopgame;
pub mod env;
pub mod error;
pub mod harness;
pub mod learner;
pub mod nash;
pub mod stats;

pub use boards::{generate_split, sample_board, BoardDistribution, BoardSet, SetLabel};
pub use coopgame::{
    all_equal_power, shapley, shapley_dp, shapley_permutations, Board, Coalition, ShapleyVector,
};
pub use error::{Error, Result};
