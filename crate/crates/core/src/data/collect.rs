use std::sync::Arc;

use super::{Provenance, StateOnlyDataset};
use crate::envs::{CombLock, LOCK_STATES};
use crate::error::{Error, Result};
use crate::mdp::{rollout, ActionRule, Policy, Rule, TraceModel};
use crate::rng::{categorical, stream, Rng};

/// Follows `base` with probability `1 - eps`, otherwise a uniform action.
pub struct EpsGreedyRule<O> {
    pub base: Rule<O>,
    pub eps: f64,
}

impl<O> ActionRule<O> for EpsGreedyRule<O> {
    fn num_actions(&self) -> usize {
        self.base.num_actions()
    }
    fn fill_probs(&self, obs: &O, out: &mut [f64]) {
        self.base.fill_probs(obs, out);
        let u = self.eps / out.len() as f64;
        for p in out.iter_mut() {
            *p = (1.0 - self.eps) * *p + u;
        }
    }
}

pub fn eps_greedy_policy<O: 'static>(base: &Policy<O>, eps: f64) -> Result<Policy<O>> {
    let rules = base
        .rules()
        .ok_or_else(|| Error::Unsupported("eps-greedy over an episode mixture".into()))?;
    Ok(Policy::new(
        base.start(),
        rules
            .iter()
            .map(|r| Arc::new(EpsGreedyRule { base: r.clone(), eps }) as Rule<O>)
            .collect(),
    ))
}

/// `n` full episodes of the eps-greedy version of `expert`; one state per level per episode.
pub fn collect_eps_greedy<M: TraceModel>(
    model: &mut M,
    env_id: &str,
    expert: &Policy<M::Obs>,
    eps: f64,
    n: usize,
    seed: u64,
) -> Result<StateOnlyDataset<M::Obs>> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Config(format!("eps {eps} outside [0, 1]")));
    }
    let behavior = eps_greedy_policy(expert, eps)?;
    let mut rng = stream(seed, "eps-greedy", 0);
    let mut levels = vec![Vec::with_capacity(n); model.horizon()];
    for _ in 0..n {
        let traj = rollout(model, &behavior, &mut rng)?;
        for (h, obs) in traj.observations.into_iter().enumerate() {
            levels[h].push(obs);
        }
    }
    Ok(StateOnlyDataset::new(env_id, Provenance::EpsGreedy { eps }, seed, levels))
}

/// Latent-state marginal of the inadmissible lock datasets at `level`.
///
/// Level 0 matches the lock's start distribution, level 1 is the one-step
/// hardness distribution, and later levels put `0.05 h` on each good state.
pub fn inadmissible_marginal(level: usize) -> Result<[f64; LOCK_STATES]> {
    match level {
        0 => Ok([0.5, 0.5, 0.0]),
        1 => Ok([0.1, 0.05, 0.85]),
        h if h <= 10 => {
            let g = 0.05 * h as f64;
            Ok([g, g, (1.0 - 2.0 * g).max(0.0)])
        }
        h => Err(Error::InvalidHorizon(format!("inadmissible marginal undefined at level {h} (max 10)"))),
    }
}

/// I.i.d. latent states per level from the given marginals.
pub fn sample_latent_dataset(
    env_id: &str,
    provenance: Provenance,
    marginals: &[Vec<f64>],
    n: usize,
    seed: u64,
) -> StateOnlyDataset<usize> {
    let levels = marginals
        .iter()
        .enumerate()
        .map(|(h, m)| {
            let mut rng: Rng = stream(seed, "latent-dataset", h as u64);
            (0..n).map(|_| categorical(m, &mut rng)).collect()
        })
        .collect();
    StateOnlyDataset::new_latent(env_id, provenance, seed, levels)
}

fn inadmissible(lock: &CombLock, provenance: Provenance, n: usize, seed: u64) -> Result<StateOnlyDataset<usize>> {
    let marginals = (0..lock.levels())
        .map(|h| inadmissible_marginal(h).map(|m| m.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(sample_latent_dataset("comb-lock", provenance, &marginals, n, seed))
}

/// Benign inadmissible data; the lock may have at most 10 transitions.
pub fn collect_benign_inadmissible(lock: &CombLock, n: usize, seed: u64) -> Result<StateOnlyDataset<usize>> {
    inadmissible(lock, Provenance::BenignInadmissible, n, seed)
}

/// Same marginals, meant for the adversarial lock where level 1 is a trap.
pub fn collect_adversarial(lock: &CombLock, n: usize, seed: u64) -> Result<StateOnlyDataset<usize>> {
    inadmissible(lock, Provenance::Adversarial, n, seed)
}
