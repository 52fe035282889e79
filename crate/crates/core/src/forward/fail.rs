use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::game::{minmax_game, GameConfig, GameTranscript, OnlineTuple};
use crate::approx::{DiscriminatorClass, PolicyClass};
use crate::data::StateOnlyDataset;
use crate::error::{Error, Result};
use crate::mdp::{Policy, Rule, TraceModel, UniformRule};
use crate::rng::{categorical, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardConfig {
    /// Online transitions collected for every trained level.
    pub samples_per_level: usize,
    pub game: GameConfig,
}

pub struct ForwardResult<O> {
    /// One rule per level; the last level is never trained and acts uniformly.
    pub rules: Vec<Rule<O>>,
    /// Game transcript of every trained level.
    pub transcripts: Vec<GameTranscript>,
    /// Cumulative environment steps after each trained level.
    pub samples: Vec<u64>,
    pub actions: usize,
}

impl<O: 'static> ForwardResult<O> {
    pub fn policy(&self) -> Policy<O> {
        Policy::new(0, self.rules.clone())
    }

    /// Learned rules on the first `trained` levels, uniform afterwards.
    pub fn partial(&self, trained: usize) -> Policy<O> {
        let rules = (0..self.rules.len())
            .map(|h| {
                if h < trained {
                    self.rules[h].clone()
                } else {
                    Arc::new(UniformRule { actions: self.actions }) as Rule<O>
                }
            })
            .collect();
        Policy::new(0, rules)
    }
}

/// Entry `level` of a per-level list, or the single shared entry.
pub(crate) fn per_level<T>(items: &[T], level: usize, what: &str) -> Result<T>
where
    T: Clone,
{
    match items.len() {
        0 => Err(Error::Empty(what.into())),
        1 => Ok(items[0].clone()),
        _ => items
            .get(level)
            .cloned()
            .ok_or_else(|| Error::Config(format!("no {what} for level {level}"))),
    }
}

/// Roll in `rules` from the start state up to the pending decision at `level`.
pub(crate) fn roll_in<M: TraceModel>(
    model: &mut M,
    rules: &[Rule<M::Obs>],
    level: usize,
    buf: &mut [f64],
    rng: &mut Rng,
) -> Result<M::Obs> {
    let mut obs = model.reset();
    for rule in &rules[..level] {
        rule.fill_probs(&obs, buf);
        let a = categorical(buf, rng);
        obs = model
            .step(a)?
            .next
            .ok_or_else(|| Error::Protocol("episode ended during roll-in".into()))?;
    }
    Ok(obs)
}

/// Learn one rule per level, in order, so that the next-level state
/// distribution matches the offline data at that level.
///
/// `policies` is indexed by decision level and `discriminators` by the level
/// of the matched state; a single entry is shared by every level.
pub fn fail_forward<M: TraceModel>(
    model: &mut M,
    offline: &StateOnlyDataset<M::Obs>,
    policies: &[PolicyClass<M::Obs>],
    discriminators: &[DiscriminatorClass<M::Obs>],
    config: &ForwardConfig,
    rng: &mut Rng,
) -> Result<ForwardResult<M::Obs>> {
    let levels = model.horizon();
    if offline.horizon() != levels {
        return Err(Error::InvalidHorizon(format!(
            "dataset has {} levels, environment {}",
            offline.horizon(),
            levels
        )));
    }
    if config.samples_per_level == 0 {
        return Err(Error::Config("samples_per_level must be positive".into()));
    }
    let actions = model.num_actions();
    let mut rules: Vec<Rule<M::Obs>> = Vec::with_capacity(levels);
    let mut transcripts = Vec::new();
    let mut samples = Vec::new();
    let mut buf = vec![0.0; actions];
    for h in 0..levels.saturating_sub(1) {
        let phase = |e: Error| e.in_phase("forward", h);
        let mut online = Vec::with_capacity(config.samples_per_level);
        for _ in 0..config.samples_per_level {
            let prev = roll_in(model, &rules, h, &mut buf, rng).map_err(phase)?;
            let action = rand::Rng::gen_range(rng, 0..actions);
            let next = model
                .step(action)
                .map_err(phase)?
                .next
                .ok_or_else(|| phase(Error::Protocol("episode ended before the matched level".into())))?;
            online.push(OnlineTuple { prev, action, next });
        }
        let class = per_level(policies, h, "policy class").map_err(phase)?;
        let disc = per_level(discriminators, h + 1, "discriminator class").map_err(phase)?;
        let out = minmax_game(&class, &disc, &online, offline.level(h + 1), actions, &config.game, rng).map_err(phase)?;
        rules.push(out.rule);
        transcripts.push(out.transcript);
        samples.push(model.steps_taken());
    }
    if levels > 0 {
        rules.push(Arc::new(UniformRule { actions }));
    }
    Ok(ForwardResult {
        rules,
        transcripts,
        samples,
        actions,
    })
}
