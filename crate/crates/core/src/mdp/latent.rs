use rand::Rng as _;

use crate::error::{Error, Result};
use crate::textfmt::renormalize;

/// Rows further than this from summing to 1 are rejected; closer ones are rescaled.
pub const ROW_TOLERANCE: f64 = 1e-6;

/// A reward that pays `value` with probability `prob` and 0 otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reward {
    pub value: f64,
    pub prob: f64,
}

impl Reward {
    pub const ZERO: Reward = Reward { value: 0.0, prob: 1.0 };

    pub fn fixed(value: f64) -> Reward {
        Reward { value, prob: 1.0 }
    }

    pub fn mean(&self) -> f64 {
        self.value * self.prob
    }

    pub fn sample(&self, rng: &mut impl rand::RngCore) -> f64 {
        if self.prob >= 1.0 || rng.gen::<f64>() < self.prob {
            self.value
        } else {
            0.0
        }
    }
}

/// Finite-horizon tabular MDP over latent states with sparse transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentMdp {
    /// Number of states at each level.
    states: Vec<usize>,
    actions: usize,
    /// Start distribution over level-0 states.
    initial: Vec<f64>,
    /// `transitions[h][s * A + a]` is a sparse distribution over level `h + 1`.
    /// Empty at the last level.
    transitions: Vec<Vec<Vec<(usize, f64)>>>,
    rewards: Vec<Vec<Reward>>,
    /// Declared bounds on reward values.
    reward_range: (f64, f64),
}

impl LatentMdp {
    pub fn horizon(&self) -> usize {
        self.states.len()
    }

    pub fn num_states(&self, level: usize) -> usize {
        self.states[level]
    }

    pub fn state_counts(&self) -> &[usize] {
        &self.states
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn reward_range(&self) -> (f64, f64) {
        self.reward_range
    }

    /// Sparse next-state distribution. Empty at the last level.
    pub fn transition(&self, level: usize, state: usize, action: usize) -> &[(usize, f64)] {
        if level + 1 >= self.horizon() {
            return &[];
        }
        &self.transitions[level][state * self.actions + action]
    }

    pub fn reward(&self, level: usize, state: usize, action: usize) -> Reward {
        self.rewards[level][state * self.actions + action]
    }

    /// Smallest and largest total reward collectible from `level` onwards.
    pub fn return_bounds(&self, level: usize) -> (f64, f64) {
        let steps = (self.horizon() - level) as f64;
        (
            steps * self.reward_range.0.min(0.0),
            steps * self.reward_range.1.max(0.0),
        )
    }

    pub fn check_state(&self, level: usize, state: usize) -> Result<()> {
        if level >= self.horizon() || state >= self.states[level] {
            return Err(Error::InvalidState { level, state });
        }
        Ok(())
    }
}

/// Incremental construction of a [`LatentMdp`]; validation happens in [`build`](Self::build).
#[derive(Clone, Debug)]
pub struct LatentMdpBuilder {
    mdp: LatentMdp,
}

impl LatentMdpBuilder {
    pub fn new(states: Vec<usize>, actions: usize) -> Self {
        let horizon = states.len();
        let transitions = (0..horizon)
            .map(|h| {
                if h + 1 < horizon {
                    vec![Vec::new(); states[h] * actions]
                } else {
                    Vec::new()
                }
            })
            .collect();
        let rewards = states.iter().map(|&s| vec![Reward::ZERO; s * actions]).collect();
        let initial = match states.first() {
            Some(&s) if s > 0 => {
                let mut p = vec![0.0; s];
                p[0] = 1.0;
                p
            }
            _ => Vec::new(),
        };
        LatentMdpBuilder {
            mdp: LatentMdp {
                states,
                actions,
                initial,
                transitions,
                rewards,
                reward_range: (0.0, 1.0),
            },
        }
    }

    pub fn initial(mut self, probs: Vec<f64>) -> Self {
        self.mdp.initial = probs;
        self
    }

    pub fn reward_range(mut self, lo: f64, hi: f64) -> Self {
        self.mdp.reward_range = (lo, hi);
        self
    }

    pub fn transition(&mut self, level: usize, state: usize, action: usize, next: Vec<(usize, f64)>) {
        let a = self.mdp.actions;
        self.mdp.transitions[level][state * a + action] = next;
    }

    pub fn reward(&mut self, level: usize, state: usize, action: usize, reward: Reward) {
        let a = self.mdp.actions;
        self.mdp.rewards[level][state * a + action] = reward;
    }

    pub fn build(self) -> Result<LatentMdp> {
        let mut mdp = self.mdp;
        let horizon = mdp.states.len();
        if horizon == 0 {
            return Err(Error::InvalidHorizon("an MDP needs at least one level".into()));
        }
        if mdp.actions == 0 {
            return Err(Error::InvalidAction(0));
        }
        if let Some(h) = mdp.states.iter().position(|&s| s == 0) {
            return Err(Error::InvalidHorizon(format!("level {h} has no states")));
        }
        if mdp.initial.len() != mdp.states[0] {
            return Err(Error::InvalidDistribution(format!(
                "initial distribution has {} entries for {} states",
                mdp.initial.len(),
                mdp.states[0]
            )));
        }
        renormalize(&mut mdp.initial, ROW_TOLERANCE, "initial distribution")?;
        let (lo, hi) = mdp.reward_range;
        if !(lo <= hi) {
            return Err(Error::InvalidDistribution(format!("empty reward range [{lo}, {hi}]")));
        }
        for h in 0..horizon.saturating_sub(1) {
            let next_count = mdp.states[h + 1];
            for (idx, row) in mdp.transitions[h].iter_mut().enumerate() {
                let (s, a) = (idx / mdp.actions, idx % mdp.actions);
                if row.is_empty() {
                    return Err(Error::InvalidDistribution(format!(
                        "missing transition at level {h}, state {s}, action {a}"
                    )));
                }
                row.sort_by_key(|e| e.0);
                row.dedup_by(|b, a| {
                    if a.0 == b.0 {
                        a.1 += b.1;
                        true
                    } else {
                        false
                    }
                });
                if let Some(&(n, _)) = row.iter().find(|e| e.0 >= next_count) {
                    return Err(Error::InvalidState { level: h + 1, state: n });
                }
                let mut probs: Vec<f64> = row.iter().map(|e| e.1).collect();
                renormalize(&mut probs, ROW_TOLERANCE, &format!("transition ({h}, {s}, {a})"))?;
                for (e, p) in row.iter_mut().zip(probs) {
                    e.1 = p;
                }
                row.retain(|e| e.1 > 0.0);
            }
        }
        for (h, level) in mdp.rewards.iter().enumerate() {
            for (idx, r) in level.iter().enumerate() {
                if !(r.value >= lo && r.value <= hi) || !(0.0..=1.0).contains(&r.prob) {
                    return Err(Error::InvalidDistribution(format!(
                        "reward at level {h}, entry {idx} is {:?}, outside [{lo}, {hi}]",
                        r
                    )));
                }
            }
        }
        Ok(mdp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level() -> LatentMdpBuilder {
        let mut b = LatentMdpBuilder::new(vec![1, 2], 2).initial(vec![1.0]);
        b.transition(0, 0, 0, vec![(0, 1.0)]);
        b.transition(0, 0, 1, vec![(0, 0.25), (1, 0.75)]);
        b
    }

    #[test]
    fn builds_and_validates() {
        let mut b = two_level();
        b.reward(1, 1, 0, Reward::fixed(1.0));
        let mdp = b.build().unwrap();
        assert_eq!(mdp.horizon(), 2);
        assert_eq!(mdp.transition(0, 0, 1), &[(0, 0.25), (1, 0.75)]);
        assert!(mdp.transition(1, 0, 0).is_empty());
        assert_eq!(mdp.return_bounds(0), (0.0, 2.0));
    }

    #[test]
    fn rejects_bad_rows() {
        let mut b = two_level();
        b.transition(0, 0, 0, vec![(0, 0.5), (1, 0.4)]);
        assert!(matches!(b.build(), Err(Error::InvalidDistribution(_))));
        let mut b = two_level();
        b.transition(0, 0, 0, vec![(5, 1.0)]);
        assert!(matches!(b.build(), Err(Error::InvalidState { level: 1, state: 5 })));
        let mut b = two_level();
        b.reward(0, 0, 0, Reward::fixed(3.0));
        assert!(b.build().is_err());
    }

    #[test]
    fn near_unit_rows_are_rescaled() {
        let mut b = two_level();
        b.transition(0, 0, 0, vec![(0, 0.5), (1, 0.5 + 4e-7)]);
        let mdp = b.build().unwrap();
        let s: f64 = mdp.transition(0, 0, 0).iter().map(|e| e.1).sum();
        assert!((s - 1.0).abs() < 1e-9);
    }
}
