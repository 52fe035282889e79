use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::approx::{fit_least_squares, GreedyRule, QClass, QFunction};
use crate::data::StateOnlyDataset;
use crate::error::{Error, Result};
use crate::forward::per_level;
use crate::mdp::{rollout_from, Policy, ResetModel, Rule, TraceModel};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackwardConfig {
    /// Regression samples collected at every level.
    pub samples_per_level: usize,
}

pub struct BackwardResult<O> {
    /// Greedy rule of the fitted Q-function at every level.
    pub rules: Vec<Rule<O>>,
    pub q_functions: Vec<Arc<dyn QFunction<O>>>,
    /// Cumulative environment steps after each level, last level first.
    pub samples: Vec<u64>,
}

impl<O: 'static> BackwardResult<O> {
    pub fn policy(&self) -> Policy<O> {
        Policy::new(0, self.rules.clone())
    }

    /// The learned rules from `level` to the end.
    pub fn suffix(&self, level: usize) -> Policy<O> {
        Policy::new(level, self.rules[level..].to_vec())
    }
}

/// Follow `policy` from a fresh episode until the pending decision at `level`.
pub(crate) fn reach<M: TraceModel>(model: &mut M, policy: &Policy<M::Obs>, level: usize, rng: &mut Rng) -> Result<M::Obs> {
    let active = policy.resolve(rng);
    let mut buf = vec![0.0; model.num_actions()];
    let mut obs = model.reset();
    for l in 0..level {
        let a = active.act(l, &obs, &mut buf, rng)?;
        obs = model
            .step(a)?
            .next
            .ok_or_else(|| Error::Protocol("episode ended during roll-in".into()))?;
    }
    Ok(obs)
}

/// Shared backward sweep: `start` positions the model at a pending decision
/// of the given level and returns its observation.
fn sweep<M, F>(
    model: &mut M,
    classes: &[QClass<M::Obs>],
    reward_range: (f64, f64),
    config: &BackwardConfig,
    rng: &mut Rng,
    mut start: F,
) -> Result<BackwardResult<M::Obs>>
where
    M: TraceModel,
    F: FnMut(&mut M, usize, &mut Rng) -> Result<M::Obs>,
{
    if config.samples_per_level == 0 {
        return Err(Error::Config("samples_per_level must be positive".into()));
    }
    let levels = model.horizon();
    let actions = model.num_actions();
    let mut rules: Vec<Rule<M::Obs>> = Vec::with_capacity(levels);
    let mut qs: Vec<Arc<dyn QFunction<M::Obs>>> = Vec::with_capacity(levels);
    let mut samples = Vec::with_capacity(levels);
    for h in (0..levels).rev() {
        let phase = |e: Error| e.in_phase("backward", h);
        // rules are built back to front
        let suffix = Policy::new(h + 1, rules.iter().rev().cloned().collect());
        let mut data = Vec::with_capacity(config.samples_per_level);
        for _ in 0..config.samples_per_level {
            let obs = start(model, h, rng).map_err(phase)?;
            let a = rand::Rng::gen_range(rng, 0..actions);
            let out = model.step(a).map_err(phase)?;
            let tail = match out.next {
                Some(next) => rollout_from(model, &suffix, h + 1, next, rng).map_err(phase)?,
                None => 0.0,
            };
            data.push((obs, a, out.reward + tail));
        }
        let steps = (levels - h) as f64;
        let clamp = (steps * reward_range.0.min(0.0), steps * reward_range.1.max(0.0));
        let class = per_level(classes, h, "value class").map_err(phase)?;
        let q = fit_least_squares(&class, &data, actions, clamp, rng).map_err(phase)?;
        rules.push(Arc::new(GreedyRule { q: q.clone() }));
        qs.push(q);
        samples.push(model.steps_taken());
    }
    rules.reverse();
    qs.reverse();
    Ok(BackwardResult {
        rules,
        q_functions: qs,
        samples,
    })
}

/// Policy search by dynamic programming with a reset model: start states at
/// each level are drawn from the offline data at that level.
pub fn psdp_reset<M: ResetModel>(
    model: &mut M,
    offline: &StateOnlyDataset<M::Obs>,
    classes: &[QClass<M::Obs>],
    reward_range: (f64, f64),
    config: &BackwardConfig,
    rng: &mut Rng,
) -> Result<BackwardResult<M::Obs>> {
    if offline.horizon() != model.horizon() {
        return Err(Error::InvalidHorizon(format!(
            "dataset has {} levels, environment {}",
            offline.horizon(),
            model.horizon()
        )));
    }
    sweep(model, classes, reward_range, config, rng, |m, h, r| {
        let obs = offline
            .level(h)
            .choose(r)
            .ok_or_else(|| Error::Empty(format!("offline data at level {h}")))?
            .clone();
        m.reset_to(h, &obs)?;
        Ok(obs)
    })
}

/// Policy search by dynamic programming in the trace model: start states at
/// each level are reached by rolling in `roll_in`.
pub fn psdp_trace<M: TraceModel>(
    model: &mut M,
    roll_in: &Policy<M::Obs>,
    classes: &[QClass<M::Obs>],
    reward_range: (f64, f64),
    config: &BackwardConfig,
    rng: &mut Rng,
) -> Result<BackwardResult<M::Obs>> {
    if roll_in.start() != 0 || roll_in.end() + 1 < model.horizon() {
        return Err(Error::PolicyDomain(roll_in.end()));
    }
    sweep(model, classes, reward_range, config, rng, |m, h, r| reach(m, roll_in, h, r))
}
