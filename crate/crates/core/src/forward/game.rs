use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::approx::{DiscriminatorClass, KernelWitness, PolicyClass, SoftmaxRule, TestFunction};
use crate::error::{Error, Result};
use crate::mdp::{MixtureRule, Observation, Rule, TabularRule};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub iterations: usize,
    /// Replaces the no-regret step size of the exponential-weights learners.
    #[serde(default)]
    pub step_size: Option<f64>,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            iterations: 1000,
            step_size: None,
        }
    }
}

/// One online transition whose action was drawn uniformly.
#[derive(Clone, Debug, PartialEq)]
pub struct OnlineTuple<O> {
    pub prev: O,
    pub action: usize,
    pub next: O,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GameRecord {
    /// 1-based iteration.
    pub iteration: usize,
    /// `max_g u(pi^t, g)`.
    pub value: f64,
    /// Best-response index for finite classes.
    pub discriminator: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameTranscript {
    pub records: Vec<GameRecord>,
    /// Index into `records` of the returned iterate.
    pub best: usize,
    /// Step size of the policy learner.
    pub step_size: f64,
}

impl GameTranscript {
    pub fn best_value(&self) -> f64 {
        self.records[self.best].value
    }

    /// First index attaining the minimum value.
    pub fn argmin(values: impl IntoIterator<Item = f64>) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, v) in values.into_iter().enumerate() {
            if v < best.0 {
                best = (v, i);
            }
        }
        best.1
    }
}

pub struct GameOutcome<O> {
    pub rule: Rule<O>,
    pub transcript: GameTranscript,
}

/// Normalized `exp(-eta * (cum - min cum))`.
pub fn exponential_weights(cum: &[f64], eta: f64) -> Vec<f64> {
    let m = cum.iter().cloned().fold(f64::INFINITY, f64::min);
    let e: Vec<f64> = cum.iter().map(|c| (-eta * (c - m)).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// No-regret step size `sqrt(8 ln K / T) / range` for `ln K = log_size`.
pub fn hedge_step(log_size: f64, iterations: usize, range: f64) -> f64 {
    (8.0 * log_size / iterations as f64).sqrt() / range
}

/// Discriminator side of the game over a fixed pair of samples.
pub(crate) enum Adversary {
    Finite {
        /// `values[j][n] = g_j(next_n)`.
        values: Vec<Vec<f64>>,
        off_means: Vec<f64>,
        range: f64,
    },
    Kernel(KernelWitness),
}

impl Adversary {
    pub(crate) fn new<O: Observation>(class: &DiscriminatorClass<O>, next: &[O], offline: &[O], rng: &mut Rng) -> Result<Self> {
        match class {
            DiscriminatorClass::Finite(gs) => finite_adversary(gs, next, offline),
            DiscriminatorClass::Mmd(bw) => Ok(Adversary::Kernel(KernelWitness::new(next, offline, *bw, rng)?)),
        }
    }

    /// Spread of discriminator values, used to scale the step size.
    pub(crate) fn range(&self) -> f64 {
        match self {
            Adversary::Finite { range, .. } => *range,
            Adversary::Kernel(_) => 2.0,
        }
    }

    /// Best response to importance weights: `(u, index, g on each online sample)`.
    pub(crate) fn respond(&self, weights: &[f64]) -> (f64, Option<usize>, Vec<f64>) {
        match self {
            Adversary::Finite { values, off_means, .. } => {
                let n = weights.len() as f64;
                let mut best = (f64::NEG_INFINITY, 0);
                for (j, (row, off)) in values.iter().zip(off_means).enumerate() {
                    let u = row.iter().zip(weights).map(|(g, w)| g * w).sum::<f64>() / n - off;
                    if u.is_nan() {
                        return (f64::NAN, Some(j), row.clone());
                    }
                    if u > best.0 {
                        best = (u, j);
                    }
                }
                (best.0, Some(best.1), values[best.1].clone())
            }
            Adversary::Kernel(k) => {
                let (mmd, g) = k.evaluate(weights);
                (mmd, None, g)
            }
        }
    }
}

fn finite_adversary<O>(gs: &[Arc<dyn TestFunction<O>>], next: &[O], offline: &[O]) -> Result<Adversary> {
    if gs.is_empty() {
        return Err(Error::Empty("discriminator class".into()));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut values = Vec::with_capacity(gs.len());
    let mut off_means = Vec::with_capacity(gs.len());
    for g in gs {
        let row: Vec<f64> = next.iter().map(|x| g.eval(x)).collect();
        let off: Vec<f64> = offline.iter().map(|x| g.eval(x)).collect();
        for &v in row.iter().chain(&off) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        off_means.push(off.iter().sum::<f64>() / off.len() as f64);
        values.push(row);
    }
    let range = if hi > lo { hi - lo } else { 1.0 };
    Ok(Adversary::Finite { values, off_means, range })
}

/// Policy side of the game.
enum Learner<O> {
    /// Per-state exponential weights over actions.
    Table {
        actions: usize,
        state_of: Vec<usize>,
        cum: Vec<Vec<f64>>,
        eta: f64,
    },
    /// Exponential weights over an explicit list.
    List {
        members: Vec<Rule<O>>,
        /// `probs[k][n]` = member `k`'s probability of the online action `n`.
        probs: Vec<Vec<f64>>,
        cum: Vec<f64>,
        eta: f64,
    },
    /// Gradient steps on linear-softmax logits.
    Softmax {
        rule: SoftmaxRule<O>,
        feats: Vec<Vec<f64>>,
        actions_taken: Vec<usize>,
        lr: f64,
        steps: usize,
    },
}

impl<O: Observation> Learner<O> {
    fn new(
        class: &PolicyClass<O>,
        online: &[OnlineTuple<O>],
        actions: usize,
        iterations: usize,
        range: f64,
        step_size: Option<f64>,
    ) -> Result<Self> {
        match class {
            PolicyClass::Tabular => {
                let state_of = online
                    .iter()
                    .map(|t| {
                        t.prev
                            .latent_index()
                            .ok_or_else(|| Error::Unsupported("tabular policies need latent observations".into()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let states = state_of.iter().max().map_or(0, |m| m + 1);
                let mut seen = state_of.clone();
                seen.sort_unstable();
                seen.dedup();
                let log_size = seen.len() as f64 * (actions as f64).ln();
                Ok(Learner::Table {
                    actions,
                    state_of,
                    cum: vec![vec![0.0; actions]; states],
                    eta: step_size.unwrap_or_else(|| hedge_step(log_size, iterations, range)),
                })
            }
            PolicyClass::Finite(members) => {
                if members.is_empty() {
                    return Err(Error::Empty("policy class".into()));
                }
                let mut buf = vec![0.0; actions];
                let probs = members
                    .iter()
                    .map(|m| {
                        online
                            .iter()
                            .map(|t| {
                                m.fill_probs(&t.prev, &mut buf);
                                buf[t.action]
                            })
                            .collect()
                    })
                    .collect();
                let log_size = (members.len() as f64).ln();
                Ok(Learner::List {
                    members: members.clone(),
                    probs,
                    cum: vec![0.0; members.len()],
                    eta: step_size.unwrap_or_else(|| hedge_step(log_size, iterations, range)),
                })
            }
            PolicyClass::Softmax { features, lr, steps } => {
                let rule = SoftmaxRule::zeros(features.clone(), actions);
                let feats = online
                    .iter()
                    .map(|t| {
                        let mut x = vec![0.0; features.dim()];
                        features.write(&t.prev, &mut x);
                        x
                    })
                    .collect();
                Ok(Learner::Softmax {
                    rule,
                    feats,
                    actions_taken: online.iter().map(|t| t.action).collect(),
                    lr: step_size.unwrap_or(*lr),
                    steps: *steps,
                })
            }
        }
    }

    fn step_size(&self) -> f64 {
        match self {
            Learner::Table { eta, .. } | Learner::List { eta, .. } => *eta,
            Learner::Softmax { lr, .. } => *lr,
        }
    }

    /// Current probability of every online action.
    fn sample_probs(&self, online: &[OnlineTuple<O>]) -> Vec<f64> {
        match self {
            Learner::Table { state_of, cum, eta, .. } => {
                let rows: Vec<Vec<f64>> = cum.iter().map(|c| exponential_weights(c, *eta)).collect();
                state_of.iter().zip(online).map(|(&s, t)| rows[s][t.action]).collect()
            }
            Learner::List { probs, cum, eta, .. } => {
                let p = exponential_weights(cum, *eta);
                (0..online.len())
                    .map(|n| p.iter().zip(probs).map(|(w, row)| w * row[n]).sum())
                    .collect()
            }
            Learner::Softmax {
                rule, feats, actions_taken, ..
            } => feats
                .iter()
                .zip(actions_taken)
                .map(|(x, &a)| softmax_logits(&rule.theta, x, rule.actions)[a])
                .collect(),
        }
    }

    /// Take the loss `pi -> sum_n pi(a_n | s_n) * coef[n]` into account.
    fn update(&mut self, coef: &[f64], online: &[OnlineTuple<O>]) {
        match self {
            Learner::Table { state_of, cum, .. } => {
                for ((&s, t), c) in state_of.iter().zip(online).zip(coef) {
                    cum[s][t.action] += c;
                }
            }
            Learner::List { probs, cum, .. } => {
                for (k, row) in probs.iter().enumerate() {
                    cum[k] += row.iter().zip(coef).map(|(p, c)| p * c).sum::<f64>();
                }
            }
            Learner::Softmax {
                rule,
                feats,
                actions_taken,
                lr,
                steps,
            } => {
                let d = rule.features.dim();
                let actions = rule.actions;
                let mut grad = vec![0.0; rule.theta.len()];
                for _ in 0..*steps {
                    grad.fill(0.0);
                    for ((x, &a), c) in feats.iter().zip(actions_taken.iter()).zip(coef) {
                        let p = softmax_logits(&rule.theta, x, actions);
                        for b in 0..actions {
                            let scale = c * p[a] * ((a == b) as u8 as f64 - p[b]);
                            if scale != 0.0 {
                                for (g, xi) in grad[b * d..(b + 1) * d].iter_mut().zip(x) {
                                    *g += scale * xi;
                                }
                            }
                        }
                    }
                    for (t, g) in rule.theta.iter_mut().zip(&grad) {
                        *t -= *lr * g;
                    }
                }
            }
        }
    }

    fn snapshot(&self) -> Result<Rule<O>> {
        match self {
            Learner::Table { actions, cum, eta, .. } => {
                let table = cum.iter().map(|c| exponential_weights(c, *eta)).collect();
                Ok(Arc::new(TabularSnapshot(TabularRule::new(*actions, table)?)))
            }
            Learner::List { members, cum, eta, .. } => {
                let p = exponential_weights(cum, *eta);
                let comps = p.into_iter().zip(members.iter().cloned()).filter(|c| c.0 > 0.0).collect();
                Ok(Arc::new(MixtureRule::new(comps)?))
            }
            Learner::Softmax { rule, .. } => Ok(Arc::new(rule.clone())),
        }
    }
}

fn softmax_logits(theta: &[f64], x: &[f64], actions: usize) -> Vec<f64> {
    let d = x.len();
    let logits: Vec<f64> = (0..actions)
        .map(|a| theta[a * d..(a + 1) * d].iter().zip(x).map(|(t, v)| t * v).sum())
        .collect();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// Per-state table applied to any latent observation.
struct TabularSnapshot(TabularRule);

impl<O: Observation> crate::mdp::ActionRule<O> for TabularSnapshot {
    fn num_actions(&self) -> usize {
        crate::mdp::ActionRule::<usize>::num_actions(&self.0)
    }
    fn fill_probs(&self, obs: &O, out: &mut [f64]) {
        match obs.latent_index() {
            Some(s) => self.0.fill_probs(&s, out),
            None => out.fill(1.0 / out.len() as f64),
        }
    }
}

/// Solve `min_pi max_g u(pi, g)` with
/// `u(pi, g) = mean_n A pi(a_n | s_n) g(s'_n) - mean_m g(x_m)`
/// by no-regret play, returning the iterate with the smallest best-response value.
pub fn minmax_game<O: Observation>(
    class: &PolicyClass<O>,
    discriminators: &DiscriminatorClass<O>,
    online: &[OnlineTuple<O>],
    offline: &[O],
    actions: usize,
    config: &GameConfig,
    rng: &mut Rng,
) -> Result<GameOutcome<O>> {
    if config.iterations == 0 {
        return Err(Error::Config("game needs at least one iteration".into()));
    }
    if online.is_empty() || offline.is_empty() {
        return Err(Error::Empty("game samples".into()));
    }
    if let Some(t) = online.iter().find(|t| t.action >= actions) {
        return Err(Error::InvalidAction(t.action));
    }
    let next: Vec<O> = online.iter().map(|t| t.next.clone()).collect();
    let adversary = Adversary::new(discriminators, &next, offline, rng)?;
    let mut learner = Learner::new(class, online, actions, config.iterations, adversary.range(), config.step_size)?;
    let a = actions as f64;
    let n = online.len() as f64;
    let mut records = Vec::with_capacity(config.iterations);
    let mut best_rule = learner.snapshot()?;
    let mut best = (f64::INFINITY, 0);
    for t in 1..=config.iterations {
        let weights: Vec<f64> = learner.sample_probs(online).into_iter().map(|p| a * p).collect();
        let (u, index, g) = adversary.respond(&weights);
        if !u.is_finite() {
            let mut losses: Vec<f64> = records.iter().map(|r: &GameRecord| r.value).collect();
            losses.push(u);
            return Err(Error::Diverged { iteration: t, losses });
        }
        records.push(GameRecord {
            iteration: t,
            value: u,
            discriminator: index,
        });
        if u < best.0 {
            best = (u, t - 1);
            if t > 1 {
                best_rule = learner.snapshot()?;
            }
        }
        let coef: Vec<f64> = g.iter().map(|v| a * v / n).collect();
        learner.update(&coef, online);
    }
    Ok(GameOutcome {
        rule: best_rule,
        transcript: GameTranscript {
            records,
            best: best.1,
            step_size: learner.step_size(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::TestFunction;
    use crate::rng::stream;

    struct Ind(usize);
    impl TestFunction<usize> for Ind {
        fn eval(&self, o: &usize) -> f64 {
            (*o == self.0) as u8 as f64
        }
    }

    fn indicators(n: usize) -> DiscriminatorClass<usize> {
        DiscriminatorClass::Finite((0..n).map(|i| Arc::new(Ind(i)) as Arc<dyn TestFunction<usize>>).collect())
    }

    #[test]
    fn single_iteration_returns_initial_policy() {
        let online = vec![OnlineTuple { prev: 0, action: 1, next: 1 }];
        let out = minmax_game(
            &PolicyClass::Tabular,
            &indicators(2),
            &online,
            &[0],
            2,
            &GameConfig { iterations: 1, step_size: None },
            &mut stream(0, "t", 0),
        )
        .unwrap();
        assert_eq!(out.transcript.records.len(), 1);
        let mut p = [0.0; 2];
        out.rule.fill_probs(&0, &mut p);
        assert_eq!(p, [0.5, 0.5]);
    }

    #[test]
    fn weights_are_distributions() {
        let w = exponential_weights(&[3.0, -1.0, 1e6], 0.7);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&x| x >= 0.0));
    }
}
