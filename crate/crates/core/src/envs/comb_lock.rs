use std::sync::Arc;

use rand::Rng as _;

use super::encoder::{ObservationEncoder, NOISE_STD};
use crate::error::{Error, Result};
use crate::mdp::{LatentMdp, LatentMdpBuilder, Policy, Reward, RichSim, Rule, TabularRule, TabularSim};
use crate::rng::{stream, Rng};

pub const ACTIONS: usize = 10;
pub const LOCK_STATES: usize = 3;
pub const GOOD_STATES: [usize; 2] = [0, 1];
const BAD: usize = 2;
/// Paid with probability 1/2 when a wrong action is taken in a good state.
pub const ANTI_SHAPED_PENALTY: f64 = -0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationMode {
    Latent,
    Rich,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LockKind {
    Standard,
    /// The first transition splits good mass 0.1 / 0.9 and state 1 is a dead end at level 1.
    Adversarial,
}

/// Combination lock with `transitions` transitions, so `transitions + 1` levels
/// of three latent states. The last level pays 1 in either good state.
#[derive(Clone, Debug)]
pub struct CombLock {
    pub kind: LockKind,
    pub transitions: usize,
    pub mode: ObservationMode,
    /// `correct[h][i]`: the action that keeps good state `i` at level `h` alive.
    pub correct: Vec<[usize; 2]>,
    pub mdp: Arc<LatentMdp>,
    pub encoder: Option<Arc<ObservationEncoder>>,
}

fn good_to_bad(b: &mut LatentMdpBuilder, h: usize, s: usize, a: usize, next: Vec<(usize, f64)>) {
    b.transition(h, s, a, next);
    b.reward(h, s, a, Reward { value: ANTI_SHAPED_PENALTY, prob: 0.5 });
}

fn build(kind: LockKind, transitions: usize, seed: u64, mode: ObservationMode) -> Result<CombLock> {
    let levels = transitions + 1;
    let mut rng = stream(seed, "lock-correct", 0);
    let correct: Vec<[usize; 2]> = (0..transitions)
        .map(|_| [rng.gen_range(0..ACTIONS), rng.gen_range(0..ACTIONS)])
        .collect();
    let mut b = LatentMdpBuilder::new(vec![LOCK_STATES; levels], ACTIONS)
        .initial(vec![0.5, 0.5, 0.0])
        .reward_range(ANTI_SHAPED_PENALTY, 1.0);
    for (h, corr) in correct.iter().enumerate() {
        for a in 0..ACTIONS {
            b.transition(h, BAD, a, vec![(BAD, 1.0)]);
        }
        for i in GOOD_STATES {
            let dead_end = kind == LockKind::Adversarial && h == 1 && i == 1;
            for a in 0..ACTIONS {
                if dead_end {
                    b.transition(h, i, a, vec![(BAD, 1.0)]);
                } else if kind == LockKind::Adversarial && h == 0 {
                    if a == corr[i] {
                        b.transition(h, i, a, vec![(0, 0.1), (1, 0.9)]);
                    } else {
                        good_to_bad(&mut b, h, i, a, vec![(1, 0.05), (BAD, 0.95)]);
                    }
                } else if a == corr[i] {
                    b.transition(h, i, a, vec![(0, 0.5), (1, 0.5)]);
                } else {
                    good_to_bad(&mut b, h, i, a, vec![(BAD, 1.0)]);
                }
            }
        }
    }
    for i in GOOD_STATES {
        for a in 0..ACTIONS {
            b.reward(transitions, i, a, Reward::fixed(1.0));
        }
    }
    let mdp = Arc::new(b.build()?);
    let encoder = match mode {
        ObservationMode::Latent => None,
        ObservationMode::Rich => Some(Arc::new(ObservationEncoder::new(LOCK_STATES, levels, NOISE_STD))),
    };
    Ok(CombLock {
        kind,
        transitions,
        mode,
        correct,
        mdp,
        encoder,
    })
}

/// Standard lock with `transitions >= 1` transitions.
pub fn make_comb_lock(transitions: usize, seed: u64, mode: ObservationMode) -> Result<CombLock> {
    if transitions == 0 {
        return Err(Error::InvalidHorizon("a lock needs at least one transition".into()));
    }
    build(LockKind::Standard, transitions, seed, mode)
}

/// Lock whose first transition copies the one-step hardness construction.
pub fn make_adversarial_lock(transitions: usize, seed: u64, mode: ObservationMode) -> Result<CombLock> {
    if transitions < 3 {
        return Err(Error::InvalidHorizon("the adversarial lock needs at least three transitions".into()));
    }
    build(LockKind::Adversarial, transitions, seed, mode)
}

impl CombLock {
    pub fn levels(&self) -> usize {
        self.transitions + 1
    }

    /// Correct action in good states, action 0 elsewhere.
    pub fn optimal_policy(&self) -> Policy<usize> {
        let rules = (0..self.levels())
            .map(|h| {
                let choice = match self.correct.get(h) {
                    Some(c) => vec![c[0], c[1], 0],
                    None => vec![0; LOCK_STATES],
                };
                Arc::new(TabularRule::deterministic(ACTIONS, &choice)) as Rule<usize>
            })
            .collect();
        Policy::new(0, rules)
    }

    /// Success probability of the optimal policy.
    pub fn optimal_success(&self) -> f64 {
        match self.kind {
            LockKind::Standard => 1.0,
            LockKind::Adversarial => 0.1,
        }
    }

    pub fn latent_sim(&self, rng: Rng) -> TabularSim {
        TabularSim::new(self.mdp.clone(), rng)
    }

    pub fn rich_sim(&self, rng: Rng, noise: Rng) -> Result<RichSim> {
        let enc = self
            .encoder
            .clone()
            .ok_or_else(|| Error::Config("lock was built in latent mode".into()))?;
        Ok(RichSim::new(self.mdp.clone(), enc, rng, noise))
    }
}
