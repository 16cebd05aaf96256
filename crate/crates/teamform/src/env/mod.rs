//! Negotiation environments built on a weighted voting game: the turn-based
//! Propose-Accept protocol and the spatial Team Patches grid world.

pub mod propose_accept;
pub mod team_patches;

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::Result;

/// Line-oriented trajectory log shared by both environments. One record per
/// step: episode, round/step, phase, acting agent(s), action, rewards.
/// Content is deterministic for a fixed seed.
pub struct TrajectoryLog {
    out: fs::File,
}

impl TrajectoryLog {
    pub fn create<P: AsRef<Path>>(path: P) -> Result<Self> {
        Ok(TrajectoryLog { out: fs::File::create(path)? })
    }

    pub fn record(
        &mut self,
        episode: usize,
        round: u32,
        phase: &str,
        actors: &str,
        action: &str,
        rewards: Option<&[f64]>,
    ) -> Result<()> {
        let rewards = match rewards {
            Some(r) => {
                let parts: Vec<String> = r.iter().map(|x| format!("{x}")).collect();
                parts.join(",")
            }
            None => "-".to_string(),
        };
        writeln!(
            self.out,
            "episode={episode} round={round} phase={phase} actors={actors} action={action} rewards={rewards}"
        )?;
        Ok(())
    }
}
