use std::sync::Arc;

use rand::Rng as _;

use super::comb_lock::{ANTI_SHAPED_PENALTY, GOOD_STATES, LOCK_STATES};
use crate::error::{Error, Result};
use crate::mdp::stationary::{StationaryMdp, StationaryPolicy};
use crate::rng::stream;

const BAD: usize = 2;

/// Discounted three-state lock: the correct action in a good state pays 1 and
/// moves to a uniformly drawn good state; any other action pays the expected
/// anti-shaped penalty and falls into the absorbing bad state.
#[derive(Clone, Debug)]
pub struct StationaryLock {
    pub correct: [usize; 2],
    pub mdp: Arc<StationaryMdp>,
}

pub fn make_stationary_lock(actions: usize, seed: u64) -> Result<StationaryLock> {
    if actions < 2 {
        return Err(Error::Config("the stationary lock needs at least two actions".into()));
    }
    let mut rng = stream(seed, "stationary-lock", 0);
    let correct = [rng.gen_range(0..actions), rng.gen_range(0..actions)];
    let mut transitions = Vec::with_capacity(LOCK_STATES * actions);
    let mut rewards = Vec::with_capacity(LOCK_STATES * actions);
    for s in 0..LOCK_STATES {
        for a in 0..actions {
            if s != BAD && a == correct[s] {
                transitions.push(GOOD_STATES.iter().map(|&g| (g, 0.5)).collect());
                rewards.push(1.0);
            } else {
                transitions.push(vec![(BAD, 1.0)]);
                rewards.push(if s == BAD { 0.0 } else { 0.5 * ANTI_SHAPED_PENALTY });
            }
        }
    }
    let mdp = StationaryMdp::new(LOCK_STATES, actions, transitions, rewards, vec![0.5, 0.5, 0.0])?;
    Ok(StationaryLock {
        correct,
        mdp: Arc::new(mdp),
    })
}

impl StationaryLock {
    /// Correct action in good states, action 0 in the bad state.
    pub fn optimal_policy(&self) -> StationaryPolicy {
        StationaryPolicy::deterministic(self.mdp.num_actions(), &[self.correct[0], self.correct[1], 0])
    }

    /// The optimal policy with probability `1 - eps`, uniform otherwise.
    pub fn eps_greedy(&self, eps: f64) -> Result<StationaryPolicy> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::Config(format!("epsilon {eps} outside [0, 1]")));
        }
        let a_n = self.mdp.num_actions();
        let opt = self.optimal_policy();
        let rows = (0..LOCK_STATES)
            .map(|s| (0..a_n).map(|a| (1.0 - eps) * opt.prob(s, a) + eps / a_n as f64).collect())
            .collect();
        StationaryPolicy::new(a_n, rows)
    }
}
