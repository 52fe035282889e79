use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mdp::stationary::{StationaryMdp, StationaryPolicy};
use crate::rng::{categorical, Rng};

/// Answers `query(s)` with a next state drawn by taking the hidden policy's
/// action at `s`. The action itself is never revealed.
#[derive(Clone, Debug)]
pub struct InteractiveOracle {
    mdp: Arc<StationaryMdp>,
    policy: StationaryPolicy,
    rng: Rng,
    queries: u64,
}

impl InteractiveOracle {
    pub fn new(mdp: Arc<StationaryMdp>, policy: StationaryPolicy, rng: Rng) -> Self {
        InteractiveOracle {
            mdp,
            policy,
            rng,
            queries: 0,
        }
    }

    pub fn query(&mut self, state: usize) -> Result<usize> {
        if state >= self.mdp.num_states() {
            return Err(Error::InvalidState { level: 0, state });
        }
        self.queries += 1;
        let a = categorical(self.policy.row(state), &mut self.rng);
        let row = self.mdp.transition(state, a);
        let probs: Vec<f64> = row.iter().map(|e| e.1).collect();
        Ok(row[categorical(&probs, &mut self.rng)].0)
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    /// Exact next-state distribution of a query at `state`.
    pub fn next_distribution(&self, state: usize) -> Vec<f64> {
        let mut d = vec![0.0; self.mdp.num_states()];
        d[state] = 1.0;
        self.mdp.next_state_distribution(&self.policy, &d)
    }
}
