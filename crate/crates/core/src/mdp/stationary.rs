//! Stationary (discounted) tabular MDPs used by the interactive-oracle and
//! conservative-policy-iteration learners.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{ActionRule, Policy, Rule, StepOutcome, TraceModel};
use crate::error::{Error, Result};
use crate::rng::{categorical, Rng};
use crate::textfmt::renormalize;

#[derive(Clone, Debug, PartialEq)]
pub struct StationaryMdp {
    states: usize,
    actions: usize,
    /// `transitions[s * A + a]`, sparse.
    transitions: Vec<Vec<(usize, f64)>>,
    /// Deterministic reward per `(s, a)`.
    rewards: Vec<f64>,
    initial: Vec<f64>,
}

impl StationaryMdp {
    pub fn new(
        states: usize,
        actions: usize,
        mut transitions: Vec<Vec<(usize, f64)>>,
        rewards: Vec<f64>,
        mut initial: Vec<f64>,
    ) -> Result<Self> {
        if transitions.len() != states * actions || rewards.len() != states * actions || initial.len() != states {
            return Err(Error::InvalidDistribution("table sizes do not match states x actions".into()));
        }
        renormalize(&mut initial, super::ROW_TOLERANCE, "initial distribution")?;
        for (i, row) in transitions.iter_mut().enumerate() {
            if let Some(&(n, _)) = row.iter().find(|e| e.0 >= states) {
                return Err(Error::InvalidState { level: 0, state: n });
            }
            let mut p: Vec<f64> = row.iter().map(|e| e.1).collect();
            renormalize(&mut p, super::ROW_TOLERANCE, &format!("transition row {i}"))?;
            for (e, q) in row.iter_mut().zip(p) {
                e.1 = q;
            }
        }
        Ok(StationaryMdp {
            states,
            actions,
            transitions,
            rewards,
            initial,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.transitions[s * self.actions + a]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.actions + a]
    }

    pub fn reward_span(&self) -> f64 {
        let hi = self.rewards.iter().cloned().fold(0.0, f64::max);
        let lo = self.rewards.iter().cloned().fold(0.0, f64::min);
        (hi - lo).max(f64::MIN_POSITIVE)
    }

    fn policy_matrix(&self, pi: &StationaryPolicy) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.states, self.states);
        for s in 0..self.states {
            for a in 0..self.actions {
                let pa = pi.prob(s, a);
                if pa == 0.0 {
                    continue;
                }
                for &(n, q) in self.transition(s, a) {
                    p[(s, n)] += pa * q;
                }
            }
        }
        p
    }

    /// Normalized discounted state occupancy `(1 - gamma) sum_k gamma^k Pr(s_k = s)` from `start`.
    pub fn discounted_occupancy(&self, pi: &StationaryPolicy, gamma: f64, start: &[f64]) -> Vec<f64> {
        let p = self.policy_matrix(pi);
        let m = DMatrix::identity(self.states, self.states) - p.transpose() * gamma;
        let rhs = DVector::from_iterator(self.states, start.iter().map(|x| x * (1.0 - gamma)));
        let d = m.lu().solve(&rhs).expect("I - gamma P is invertible for gamma < 1");
        d.iter().copied().collect()
    }

    pub fn value(&self, pi: &StationaryPolicy, gamma: f64) -> Vec<f64> {
        let p = self.policy_matrix(pi);
        let r = DVector::from_iterator(
            self.states,
            (0..self.states).map(|s| (0..self.actions).map(|a| pi.prob(s, a) * self.reward(s, a)).sum::<f64>()),
        );
        let m = DMatrix::identity(self.states, self.states) - p * gamma;
        m.lu().solve(&r).expect("I - gamma P is invertible for gamma < 1").iter().copied().collect()
    }

    /// `Q[s * A + a]` for discount `gamma`.
    pub fn q_values(&self, pi: &StationaryPolicy, gamma: f64) -> Vec<f64> {
        let v = self.value(pi, gamma);
        let mut q = vec![0.0; self.states * self.actions];
        for s in 0..self.states {
            for a in 0..self.actions {
                q[s * self.actions + a] =
                    self.reward(s, a) + gamma * self.transition(s, a).iter().map(|&(n, p)| p * v[n]).sum::<f64>();
            }
        }
        q
    }

    /// Expected discounted return from the start distribution.
    pub fn start_value(&self, pi: &StationaryPolicy, gamma: f64) -> f64 {
        self.value(pi, gamma).iter().zip(&self.initial).map(|(v, p)| v * p).sum()
    }

    /// Distribution of the next state when the previous state is drawn from `d` and `pi` acts.
    pub fn next_state_distribution(&self, pi: &StationaryPolicy, d: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.states];
        for (s, &ds) in d.iter().enumerate() {
            for a in 0..self.actions {
                for &(n, p) in self.transition(s, a) {
                    out[n] += ds * pi.prob(s, a) * p;
                }
            }
        }
        out
    }
}

/// Per-state action table.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryPolicy {
    actions: usize,
    probs: Vec<Vec<f64>>,
}

impl StationaryPolicy {
    pub fn new(actions: usize, probs: Vec<Vec<f64>>) -> Result<Self> {
        for row in &probs {
            let sum: f64 = row.iter().sum();
            if row.len() != actions || row.iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidDistribution(format!("policy row {row:?}")));
            }
        }
        Ok(StationaryPolicy { actions, probs })
    }

    pub fn uniform(states: usize, actions: usize) -> Self {
        StationaryPolicy {
            actions,
            probs: vec![vec![1.0 / actions as f64; actions]; states],
        }
    }

    pub fn deterministic(actions: usize, choice: &[usize]) -> Self {
        let probs = choice
            .iter()
            .map(|&a| {
                let mut r = vec![0.0; actions];
                r[a] = 1.0;
                r
            })
            .collect();
        StationaryPolicy { actions, probs }
    }

    /// Every deterministic policy, in lexicographic order of action choices.
    pub fn enumerate_deterministic(states: usize, actions: usize) -> Vec<StationaryPolicy> {
        let total = actions.pow(states as u32);
        (0..total)
            .map(|mut k| {
                let choice: Vec<usize> = (0..states)
                    .map(|_| {
                        let a = k % actions;
                        k /= actions;
                        a
                    })
                    .collect();
                StationaryPolicy::deterministic(actions, &choice)
            })
            .collect()
    }

    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s][a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s]
    }

    /// Same rule at every level of a finite-horizon view.
    pub fn as_policy(&self, horizon: usize) -> Policy<usize> {
        let rule: Rule<usize> = Arc::new(self.clone());
        Policy::new(0, vec![rule; horizon])
    }
}

impl ActionRule<usize> for StationaryPolicy {
    fn num_actions(&self) -> usize {
        self.actions
    }
    fn fill_probs(&self, obs: &usize, out: &mut [f64]) {
        match self.probs.get(*obs) {
            Some(r) => out.copy_from_slice(r),
            None => out.fill(1.0 / self.actions as f64),
        }
    }
    fn is_deterministic(&self) -> bool {
        self.probs.iter().all(|r| r.iter().any(|&p| p == 1.0))
    }
}

/// Convex combination of stationary policies, mixed per state.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryMixture {
    components: Vec<(f64, StationaryPolicy)>,
}

impl StationaryMixture {
    pub fn new(initial: StationaryPolicy) -> Self {
        StationaryMixture {
            components: vec![(1.0, initial)],
        }
    }

    /// `(1 - alpha) * self + alpha * candidate`.
    pub fn update(&mut self, candidate: StationaryPolicy, alpha: f64) {
        for c in &mut self.components {
            c.0 *= 1.0 - alpha;
        }
        self.components.push((alpha, candidate));
    }

    pub fn initial_weight(&self) -> f64 {
        self.components[0].0
    }

    pub fn components(&self) -> &[(f64, StationaryPolicy)] {
        &self.components
    }

    /// Collapse to a single per-state table.
    pub fn flatten(&self) -> StationaryPolicy {
        let first = &self.components[0].1;
        let (states, actions) = (first.num_states(), first.num_actions());
        let mut probs = vec![vec![0.0; actions]; states];
        for (w, p) in &self.components {
            for (s, row) in probs.iter_mut().enumerate() {
                for (a, x) in row.iter_mut().enumerate() {
                    *x += w * p.prob(s, a);
                }
            }
        }
        StationaryPolicy { actions, probs }
    }
}

/// Episodic simulator that truncates after `max_steps` steps.
#[derive(Clone, Debug)]
pub struct StationarySim {
    mdp: Arc<StationaryMdp>,
    rng: Rng,
    max_steps: usize,
    cursor: Option<(usize, usize)>,
    steps: u64,
}

impl StationarySim {
    pub fn new(mdp: Arc<StationaryMdp>, max_steps: usize, rng: Rng) -> Self {
        StationarySim {
            mdp,
            rng,
            max_steps,
            cursor: None,
            steps: 0,
        }
    }

    /// Shortest truncation that emulates discount `gamma`.
    pub fn horizon_for(gamma: f64) -> usize {
        // tolerance keeps round-off such as 5 / 0.1 = 50.000000000000007 from adding a step
        (5.0 / (1.0 - gamma) - 1e-9).ceil() as usize
    }

    pub fn mdp(&self) -> &Arc<StationaryMdp> {
        &self.mdp
    }
}

impl TraceModel for StationarySim {
    type Obs = usize;

    fn horizon(&self) -> usize {
        self.max_steps
    }

    fn num_actions(&self) -> usize {
        self.mdp.num_actions()
    }

    fn reset(&mut self) -> usize {
        let s = categorical(self.mdp.initial(), &mut self.rng);
        self.cursor = Some((0, s));
        s
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome<usize>> {
        let (t, s) = self
            .cursor
            .ok_or_else(|| Error::Protocol("step called without an active episode".into()))?;
        if action >= self.mdp.num_actions() {
            return Err(Error::InvalidAction(action));
        }
        self.steps += 1;
        let reward = self.mdp.reward(s, action);
        let row = self.mdp.transition(s, action);
        let probs: Vec<f64> = row.iter().map(|e| e.1).collect();
        let next = row[categorical(&probs, &mut self.rng)].0;
        if t + 1 >= self.max_steps {
            self.cursor = None;
            return Ok(StepOutcome { reward, next: None });
        }
        self.cursor = Some((t + 1, next));
        Ok(StepOutcome {
            reward,
            next: Some(next),
        })
    }

    fn level(&self) -> Option<usize> {
        self.cursor.map(|c| c.0)
    }

    fn steps_taken(&self) -> u64 {
        self.steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    pub(crate) fn chain() -> StationaryMdp {
        // 0 -a0-> 0, 0 -a1-> 1, 1 -a0-> 2, 1 -a1-> 0, 2 -> 2 paying 1 under a0
        let t = vec![
            vec![(0, 1.0)],
            vec![(1, 1.0)],
            vec![(2, 1.0)],
            vec![(0, 1.0)],
            vec![(2, 1.0)],
            vec![(0, 0.5), (2, 0.5)],
        ];
        let r = vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        StationaryMdp::new(3, 2, t, r, vec![1.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn occupancy_is_a_distribution_and_matches_value() {
        let m = chain();
        let pi = StationaryPolicy::uniform(3, 2);
        let gamma = 0.9;
        let d = m.discounted_occupancy(&pi, gamma, m.initial());
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // V(rho) = sum_s d(s) r_pi(s) / (1 - gamma)
        let rpi: Vec<f64> = (0..3).map(|s| (0..2).map(|a| pi.prob(s, a) * m.reward(s, a)).sum()).collect();
        let v: f64 = d.iter().zip(&rpi).map(|(a, b)| a * b).sum::<f64>() / (1.0 - gamma);
        assert!((v - m.start_value(&pi, gamma)).abs() < 1e-10);
    }

    #[test]
    fn mixture_weight_decays_geometrically() {
        let mut mix = StationaryMixture::new(StationaryPolicy::uniform(3, 2));
        let alpha = 0.2;
        let mut expect = 1.0;
        for _ in 0..7 {
            mix.update(StationaryPolicy::deterministic(2, &[1, 0, 0]), alpha);
            expect *= 1.0 - alpha;
        }
        assert_eq!(mix.initial_weight(), expect);
        let total: f64 = mix.components().iter().map(|c| c.0).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simulator_truncates() {
        let m = Arc::new(chain());
        let mut sim = StationarySim::new(m, 4, stream(0, "s", 0));
        sim.reset();
        for i in 0..4 {
            let out = sim.step(0).unwrap();
            assert_eq!(out.next.is_none(), i == 3);
        }
        assert_eq!(StationarySim::horizon_for(0.9), 50);
    }
}
