use std::sync::Arc;

use super::{LatentMdp, Policy, Rule, TabularRule};
use crate::error::{Error, Result};

/// Ties within this distance count as equal in argmax.
const TIE_TOLERANCE: f64 = 1e-12;

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] + TIE_TOLERANCE {
            best = i;
        }
    }
    best
}

/// State distribution at every level.
#[derive(Clone, Debug, PartialEq)]
pub struct Occupancy {
    pub levels: Vec<Vec<f64>>,
}

impl Occupancy {
    pub fn level(&self, h: usize) -> &[f64] {
        &self.levels[h]
    }
}

/// `Q[h][s * A + a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    pub actions: usize,
    pub levels: Vec<Vec<f64>>,
}

impl QTable {
    pub fn get(&self, level: usize, state: usize, action: usize) -> f64 {
        self.levels[level][state * self.actions + action]
    }

    pub fn row(&self, level: usize, state: usize) -> &[f64] {
        &self.levels[level][state * self.actions..(state + 1) * self.actions]
    }
}

fn check_cover(mdp: &LatentMdp, pi: &Policy<usize>) -> Result<()> {
    if pi.start() != 0 {
        return Err(Error::PolicyDomain(0));
    }
    if pi.end() < mdp.horizon() {
        return Err(Error::PolicyDomain(pi.end()));
    }
    Ok(())
}

fn rule_table(mdp: &LatentMdp, rule: &Rule<usize>, level: usize) -> Vec<Vec<f64>> {
    TabularRule::tabulate(rule.as_ref(), mdp.num_states(level)).table().to_vec()
}

/// Exact state occupancy by forward propagation.
pub fn exact_occupancy(mdp: &LatentMdp, pi: &Policy<usize>) -> Result<Occupancy> {
    check_cover(mdp, pi)?;
    if let Some(components) = pi.mixture_components() {
        let mut total: Option<Occupancy> = None;
        for (w, p) in components {
            let occ = exact_occupancy(mdp, p)?;
            match &mut total {
                None => {
                    total = Some(Occupancy {
                        levels: occ.levels.iter().map(|l| l.iter().map(|x| w * x).collect()).collect(),
                    })
                }
                Some(t) => {
                    for (tl, ol) in t.levels.iter_mut().zip(&occ.levels) {
                        for (a, b) in tl.iter_mut().zip(ol) {
                            *a += w * b;
                        }
                    }
                }
            }
        }
        return Ok(total.expect("mixtures are nonempty"));
    }
    let mut levels = vec![mdp.initial().to_vec()];
    for h in 0..mdp.horizon() - 1 {
        let table = rule_table(mdp, pi.rule(h)?, h);
        let mut next = vec![0.0; mdp.num_states(h + 1)];
        for (s, &ds) in levels[h].iter().enumerate() {
            if ds == 0.0 {
                continue;
            }
            for (a, &pa) in table[s].iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                for &(n, p) in mdp.transition(h, s, a) {
                    next[n] += ds * pa * p;
                }
            }
        }
        levels.push(next);
    }
    Ok(Occupancy { levels })
}

/// Exact `Q^pi` by backward induction with `Q` at the last level equal to the mean reward.
pub fn exact_q(mdp: &LatentMdp, pi: &Policy<usize>) -> Result<QTable> {
    check_cover(mdp, pi)?;
    if pi.mixture_components().is_some() {
        return Err(Error::Unsupported("Q-function of an episode mixture".into()));
    }
    let a_count = mdp.num_actions();
    let horizon = mdp.horizon();
    let mut levels = vec![Vec::new(); horizon];
    let mut next_value: Vec<f64> = Vec::new();
    for h in (0..horizon).rev() {
        let states = mdp.num_states(h);
        let mut q = vec![0.0; states * a_count];
        for s in 0..states {
            for a in 0..a_count {
                let future: f64 = mdp.transition(h, s, a).iter().map(|&(n, p)| p * next_value[n]).sum();
                q[s * a_count + a] = mdp.reward(h, s, a).mean() + future;
            }
        }
        let table = rule_table(mdp, pi.rule(h)?, h);
        next_value = (0..states)
            .map(|s| (0..a_count).map(|a| table[s][a] * q[s * a_count + a]).sum())
            .collect();
        levels[h] = q;
    }
    Ok(QTable {
        actions: a_count,
        levels,
    })
}

/// Optimal `Q` and the greedy deterministic policy (lowest action wins ties).
pub fn optimal_q(mdp: &LatentMdp) -> (QTable, Policy<usize>) {
    let a_count = mdp.num_actions();
    let horizon = mdp.horizon();
    let mut levels = vec![Vec::new(); horizon];
    let mut choices = vec![Vec::new(); horizon];
    let mut next_value: Vec<f64> = Vec::new();
    for h in (0..horizon).rev() {
        let states = mdp.num_states(h);
        let mut q = vec![0.0; states * a_count];
        for s in 0..states {
            for a in 0..a_count {
                let future: f64 = mdp.transition(h, s, a).iter().map(|&(n, p)| p * next_value[n]).sum();
                q[s * a_count + a] = mdp.reward(h, s, a).mean() + future;
            }
        }
        choices[h] = (0..states)
            .map(|s| argmax_lowest(&q[s * a_count..(s + 1) * a_count]))
            .collect::<Vec<_>>();
        next_value = (0..states).map(|s| q[s * a_count + choices[h][s]]).collect();
        levels[h] = q;
    }
    let rules: Vec<Rule<usize>> = choices
        .iter()
        .map(|c| Arc::new(TabularRule::deterministic(a_count, c)) as Rule<usize>)
        .collect();
    (
        QTable {
            actions: a_count,
            levels,
        },
        Policy::new(0, rules),
    )
}

/// Expected total reward of `pi` from the start distribution.
pub fn policy_value(mdp: &LatentMdp, pi: &Policy<usize>) -> Result<f64> {
    if let Some(components) = pi.mixture_components() {
        let mut v = 0.0;
        for (w, p) in components {
            v += w * policy_value(mdp, p)?;
        }
        return Ok(v);
    }
    let q = exact_q(mdp, pi)?;
    let table = rule_table(mdp, pi.rule(0)?, 0);
    let mut v = 0.0;
    for (s, &p0) in mdp.initial().iter().enumerate() {
        for (a, &pa) in table[s].iter().enumerate() {
            v += p0 * pa * q.get(0, s, a);
        }
    }
    Ok(v)
}

/// Probability that the final decision pays a reward of 1.
pub fn success_probability(mdp: &LatentMdp, pi: &Policy<usize>) -> Result<f64> {
    let occ = exact_occupancy(mdp, pi)?;
    let last = mdp.horizon() - 1;
    let per_component: Vec<(f64, &Policy<usize>)> = match pi.mixture_components() {
        Some(c) => c.iter().map(|(w, p)| (*w, p)).collect(),
        None => vec![(1.0, pi)],
    };
    if per_component.len() > 1 {
        let mut total = 0.0;
        for (w, p) in per_component {
            total += w * success_probability(mdp, p)?;
        }
        return Ok(total);
    }
    let table = rule_table(mdp, pi.rule(last)?, last);
    let mut total = 0.0;
    for (s, &ds) in occ.level(last).iter().enumerate() {
        for (a, &pa) in table[s].iter().enumerate() {
            let r = mdp.reward(last, s, a);
            if r.value >= 1.0 - 1e-9 {
                total += ds * pa * r.prob;
            }
        }
    }
    Ok(total)
}
