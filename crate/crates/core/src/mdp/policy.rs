use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::categorical;

/// Action distribution at one level.
pub trait ActionRule<O>: Send + Sync {
    fn num_actions(&self) -> usize;
    /// Write the action distribution for `obs` into `out` (length `num_actions`).
    fn fill_probs(&self, obs: &O, out: &mut [f64]);
    fn is_deterministic(&self) -> bool {
        false
    }
}

pub type Rule<O> = Arc<dyn ActionRule<O>>;

/// Uniform over all actions, for any observation type.
#[derive(Clone, Copy, Debug)]
pub struct UniformRule {
    pub actions: usize,
}

impl<O> ActionRule<O> for UniformRule {
    fn num_actions(&self) -> usize {
        self.actions
    }
    fn fill_probs(&self, _obs: &O, out: &mut [f64]) {
        out.fill(1.0 / self.actions as f64);
    }
    fn is_deterministic(&self) -> bool {
        self.actions == 1
    }
}

/// Per-state table over latent states. States past the end of the table act uniformly.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularRule {
    actions: usize,
    probs: Vec<Vec<f64>>,
}

impl TabularRule {
    pub fn new(actions: usize, probs: Vec<Vec<f64>>) -> Result<Self> {
        for (s, row) in probs.iter().enumerate() {
            if row.len() != actions {
                return Err(Error::InvalidDistribution(format!("state {s}: {} entries", row.len())));
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidDistribution(format!("state {s}: sums to {sum}")));
            }
        }
        Ok(TabularRule { actions, probs })
    }

    pub fn deterministic(actions: usize, choice: &[usize]) -> Self {
        let probs = choice
            .iter()
            .map(|&a| {
                let mut row = vec![0.0; actions];
                row[a] = 1.0;
                row
            })
            .collect();
        TabularRule { actions, probs }
    }

    pub fn uniform(actions: usize, states: usize) -> Self {
        TabularRule {
            actions,
            probs: vec![vec![1.0 / actions as f64; actions]; states],
        }
    }

    /// Materialize any rule over latent states `0..states`.
    pub fn tabulate(rule: &dyn ActionRule<usize>, states: usize) -> Self {
        let actions = rule.num_actions();
        let probs = (0..states)
            .map(|s| {
                let mut row = vec![0.0; actions];
                rule.fill_probs(&s, &mut row);
                row
            })
            .collect();
        TabularRule { actions, probs }
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn prob(&self, state: usize, action: usize) -> f64 {
        match self.probs.get(state) {
            Some(row) => row[action],
            None => 1.0 / self.actions as f64,
        }
    }
}

impl ActionRule<usize> for TabularRule {
    fn num_actions(&self) -> usize {
        self.actions
    }
    fn fill_probs(&self, obs: &usize, out: &mut [f64]) {
        match self.probs.get(*obs) {
            Some(row) => out.copy_from_slice(row),
            None => out.fill(1.0 / self.actions as f64),
        }
    }
    fn is_deterministic(&self) -> bool {
        self.probs.iter().all(|row| row.iter().any(|&p| p == 1.0))
    }
}

/// Per-state average of several rules. A one-step mixture acts this way.
pub struct MixtureRule<O> {
    components: Vec<(f64, Rule<O>)>,
}

impl<O> MixtureRule<O> {
    pub fn new(components: Vec<(f64, Rule<O>)>) -> Result<Self> {
        let total: f64 = components.iter().map(|c| c.0).sum();
        if components.is_empty() || components.iter().any(|c| c.0 < 0.0) || !(total > 0.0) {
            return Err(Error::InvalidDistribution("mixture weights".into()));
        }
        let actions = components[0].1.num_actions();
        if components.iter().any(|c| c.1.num_actions() != actions) {
            return Err(Error::InvalidDistribution("mixture components disagree on action count".into()));
        }
        Ok(MixtureRule {
            components: components.into_iter().map(|(w, r)| (w / total, r)).collect(),
        })
    }

    pub fn components(&self) -> &[(f64, Rule<O>)] {
        &self.components
    }
}

impl<O> ActionRule<O> for MixtureRule<O> {
    fn num_actions(&self) -> usize {
        self.components[0].1.num_actions()
    }
    fn fill_probs(&self, obs: &O, out: &mut [f64]) {
        out.fill(0.0);
        let mut buf = vec![0.0; out.len()];
        for (w, rule) in &self.components {
            if *w == 0.0 {
                continue;
            }
            rule.fill_probs(obs, &mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += w * b;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyKind {
    Deterministic,
    Stochastic,
    Mixture,
}

enum Body<O> {
    Rules(Vec<Rule<O>>),
    /// Sampled once per episode.
    Mixture(Vec<(f64, Policy<O>)>),
}

/// Non-stationary policy active on the levels `start..end`.
pub struct Policy<O> {
    start: usize,
    end: usize,
    body: Body<O>,
}

impl<O> Clone for Policy<O> {
    fn clone(&self) -> Self {
        let body = match &self.body {
            Body::Rules(r) => Body::Rules(r.clone()),
            Body::Mixture(m) => Body::Mixture(m.clone()),
        };
        Policy {
            start: self.start,
            end: self.end,
            body,
        }
    }
}

impl<O: 'static> fmt::Debug for Policy<O> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Policy")
            .field("start", &self.start)
            .field("end", &self.end)
            .field("kind", &self.kind())
            .finish()
    }
}

impl<O: 'static> Policy<O> {
    pub fn new(start: usize, rules: Vec<Rule<O>>) -> Self {
        Policy {
            start,
            end: start + rules.len(),
            body: Body::Rules(rules),
        }
    }

    /// A policy with no levels, starting (and ending) at `start`.
    pub fn empty(start: usize) -> Self {
        Policy::new(start, Vec::new())
    }

    pub fn uniform(start: usize, end: usize, actions: usize) -> Self {
        let rule: Rule<O> = Arc::new(UniformRule { actions });
        Policy::new(start, vec![rule; end.saturating_sub(start)])
    }

    /// Episode-level mixture; all components must share one interval.
    pub fn mixture(components: Vec<(f64, Policy<O>)>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidDistribution("empty mixture".into()))?;
        let (start, end) = (first.1.start, first.1.end);
        if components.iter().any(|c| c.1.start != start || c.1.end != end) {
            return Err(Error::IntervalMismatch {
                prefix_start: start,
                prefix_end: end,
                suffix_start: start,
                switch: start,
            });
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if components.iter().any(|c| c.0 < 0.0) || !(total > 0.0) {
            return Err(Error::InvalidDistribution("mixture weights".into()));
        }
        Ok(Policy {
            start,
            end,
            body: Body::Mixture(components.into_iter().map(|(w, p)| (w / total, p)).collect()),
        })
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// One past the last active level.
    pub fn end(&self) -> usize {
        self.end
    }

    pub fn covers(&self, level: usize) -> bool {
        level >= self.start && level < self.end
    }

    pub fn kind(&self) -> PolicyKind {
        match &self.body {
            Body::Mixture(_) => PolicyKind::Mixture,
            Body::Rules(rules) => {
                if rules.iter().all(|r| r.is_deterministic()) {
                    PolicyKind::Deterministic
                } else {
                    PolicyKind::Stochastic
                }
            }
        }
    }

    pub fn mixture_components(&self) -> Option<&[(f64, Policy<O>)]> {
        match &self.body {
            Body::Mixture(m) => Some(m),
            Body::Rules(_) => None,
        }
    }

    /// The rule at `level`. Mixtures have no single rule and report an error.
    pub fn rule(&self, level: usize) -> Result<&Rule<O>> {
        match &self.body {
            Body::Rules(rules) if self.covers(level) => Ok(&rules[level - self.start]),
            Body::Rules(_) => Err(Error::PolicyDomain(level)),
            Body::Mixture(_) => Err(Error::Unsupported("per-level rule of an episode mixture".into())),
        }
    }

    pub fn rules(&self) -> Option<&[Rule<O>]> {
        match &self.body {
            Body::Rules(r) => Some(r),
            Body::Mixture(_) => None,
        }
    }

    /// Pick the component to execute for one episode.
    pub fn resolve(&self, rng: &mut impl rand::RngCore) -> &Policy<O> {
        match &self.body {
            Body::Rules(_) => self,
            Body::Mixture(m) => {
                let weights: Vec<f64> = m.iter().map(|c| c.0).collect();
                m[categorical(&weights, rng)].1.resolve(rng)
            }
        }
    }

    /// Sample an action at `level`. `buf` is scratch space of length `A`.
    pub fn act(&self, level: usize, obs: &O, buf: &mut [f64], rng: &mut impl rand::RngCore) -> Result<usize> {
        let rule = self.rule(level)?;
        rule.fill_probs(obs, buf);
        Ok(categorical(buf, rng))
    }

    /// Run `prefix` on its levels below `switch` and `suffix` from `switch` on.
    pub fn compose(prefix: &Policy<O>, switch: usize, suffix: &Policy<O>) -> Result<Policy<O>> {
        let mismatch = Error::IntervalMismatch {
            prefix_start: prefix.start,
            prefix_end: prefix.end,
            suffix_start: suffix.start,
            switch,
        };
        if prefix.end != switch || suffix.start != switch {
            return Err(mismatch);
        }
        if prefix.start == prefix.end {
            return Ok(suffix.clone());
        }
        if suffix.start == suffix.end {
            return Ok(prefix.clone());
        }
        match (&prefix.body, &suffix.body) {
            (Body::Rules(a), Body::Rules(b)) => {
                let mut rules = a.clone();
                rules.extend(b.iter().cloned());
                Ok(Policy::new(prefix.start, rules))
            }
            _ => Err(Error::Unsupported("composing episode mixtures".into())),
        }
    }

    /// Restrict to the levels `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Policy<O>> {
        if start < self.start || end > self.end || start > end {
            return Err(Error::PolicyDomain(start));
        }
        match &self.body {
            Body::Rules(r) => Ok(Policy::new(start, r[start - self.start..end - self.start].to_vec())),
            Body::Mixture(m) => Policy::mixture(
                m.iter()
                    .map(|(w, p)| p.slice(start, end).map(|p| (*w, p)))
                    .collect::<Result<_>>()?,
            ),
        }
    }
}
