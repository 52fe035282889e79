//! Coverage coefficients, distances between distributions and success rates.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mdp::{
    exact_occupancy, exact_q, rollout, LatentMdp, Occupancy, Policy, Rule, TabularRule, TraceModel,
};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverageKind {
    DensityRatio,
    ForwardPolicy,
    PerformanceDifference,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    pub kind: CoverageKind,
    /// Largest finite ratio at each level.
    pub per_level: Vec<f64>,
    /// Maximum of `per_level`.
    pub value: f64,
    /// Some state with positive target mass has zero reference mass.
    pub infinite: bool,
    /// First `(level, state)` with that property.
    pub witness: Option<(usize, usize)>,
}

impl CoverageReport {
    /// `value`, or infinity when the flag is set.
    pub fn aggregate(&self) -> f64 {
        if self.infinite {
            f64::INFINITY
        } else {
            self.value
        }
    }
}

/// `max_h max_s target_h(s) / reference_h(s)`. Missing reference entries count
/// as zero; states with zero mass on both sides are skipped.
pub fn coverage_density_ratio(target: &Occupancy, reference: &[Vec<f64>]) -> CoverageReport {
    ratio_report(CoverageKind::DensityRatio, target, reference)
}

/// Density-ratio coverage against the exact occupancy of a forward policy.
pub fn coverage_forward(target: &Occupancy, forward: &Occupancy) -> CoverageReport {
    ratio_report(CoverageKind::ForwardPolicy, target, &forward.levels)
}

fn ratio_report(kind: CoverageKind, target: &Occupancy, reference: &[Vec<f64>]) -> CoverageReport {
    let mut per_level = Vec::with_capacity(target.levels.len());
    let mut witness = None;
    for (h, row) in target.levels.iter().enumerate() {
        let mut best: f64 = 0.0;
        for (s, &d) in row.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            let m = reference.get(h).and_then(|r| r.get(s)).copied().unwrap_or(0.0);
            if m <= 0.0 {
                witness.get_or_insert((h, s));
            } else {
                best = best.max(d / m);
            }
        }
        per_level.push(best);
    }
    let value = per_level.iter().cloned().fold(0.0, f64::max);
    CoverageReport {
        kind,
        per_level,
        value,
        infinite: witness.is_some(),
        witness,
    }
}

/// Number of deterministic policies above which enumeration is refused.
pub const ENUMERATION_LIMIT: f64 = 1e6;

/// Every deterministic policy of `mdp`, as per-level action tables.
pub fn enumerate_deterministic(mdp: &LatentMdp) -> Result<Vec<Policy<usize>>> {
    let a = mdp.num_actions();
    let cells: Vec<usize> = mdp.state_counts().to_vec();
    let total: f64 = cells.iter().map(|&s| (a as f64).powi(s as i32)).product();
    if total > ENUMERATION_LIMIT {
        return Err(Error::Unsupported(format!("{total} deterministic policies")));
    }
    let n: usize = cells.iter().sum();
    let mut digits = vec![0usize; n];
    let mut out = Vec::with_capacity(total as usize);
    loop {
        let mut offset = 0;
        let rules: Vec<Rule<usize>> = cells
            .iter()
            .map(|&s| {
                let r = Arc::new(TabularRule::deterministic(a, &digits[offset..offset + s])) as Rule<usize>;
                offset += s;
                r
            })
            .collect();
        out.push(Policy::new(0, rules));
        let mut i = 0;
        loop {
            if i == n {
                return Ok(out);
            }
            digits[i] += 1;
            if digits[i] < a {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Ratio of summed expected maximal advantages, target occupancy over the
/// reference, maximized over `candidates` (all deterministic policies when `None`).
/// A zero-over-zero ratio counts as 1.
pub fn coverage_perf_diff(
    mdp: &LatentMdp,
    target: &Policy<usize>,
    reference: &[Vec<f64>],
    candidates: Option<&[Policy<usize>]>,
) -> Result<CoverageReport> {
    let owned;
    let candidates = match candidates {
        Some(c) => c,
        None => {
            owned = enumerate_deterministic(mdp)?;
            &owned[..]
        }
    };
    if candidates.is_empty() {
        return Err(Error::Empty("candidate policies".into()));
    }
    let occ = exact_occupancy(mdp, target)?;
    let a = mdp.num_actions();
    let mut best = CoverageReport {
        kind: CoverageKind::PerformanceDifference,
        per_level: vec![],
        value: f64::NEG_INFINITY,
        infinite: false,
        witness: None,
    };
    for pi in candidates {
        let q = exact_q(mdp, pi)?;
        let mut num = 0.0;
        let mut den = 0.0;
        let mut per_level = Vec::with_capacity(mdp.horizon());
        for h in 0..mdp.horizon() {
            let rule = pi.rule(h)?;
            let mut probs = vec![0.0; a];
            let (mut nh, mut dh) = (0.0, 0.0);
            for s in 0..mdp.num_states(h) {
                rule.fill_probs(&s, &mut probs);
                let row = q.row(h, s);
                let v: f64 = row.iter().zip(&probs).map(|(x, p)| x * p).sum();
                let gap = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v;
                nh += occ.levels[h][s] * gap;
                dh += reference.get(h).and_then(|r| r.get(s)).copied().unwrap_or(0.0) * gap;
            }
            per_level.push(if dh > 0.0 { nh / dh } else if nh > 0.0 { f64::INFINITY } else { 1.0 });
            num += nh;
            den += dh;
        }
        let (value, infinite) = if den > 0.0 {
            (num / den, false)
        } else if num > 0.0 {
            (f64::INFINITY, true)
        } else {
            (1.0, false)
        };
        if infinite {
            return Ok(CoverageReport {
                kind: CoverageKind::PerformanceDifference,
                per_level,
                value,
                infinite,
                witness: None,
            });
        }
        if value > best.value {
            best.value = value;
            best.per_level = per_level;
        }
    }
    Ok(best)
}

/// Candidate set for [`tv_minimizing_policy`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolicySet {
    Deterministic,
    /// Two-action mixtures `(p, 1 - p)` with `p` on a grid of the given step.
    Grid(f64),
}

/// Level-1 distribution of a single-decision MDP when the start action is drawn from `action_probs`.
pub fn one_step_distribution(mdp: &LatentMdp, action_probs: &[f64]) -> Result<Vec<f64>> {
    if mdp.horizon() != 2 || mdp.num_states(0) != 1 {
        return Err(Error::Unsupported("needs one start state and one decision".into()));
    }
    let mut d = vec![0.0; mdp.num_states(1)];
    for (a, &p) in action_probs.iter().enumerate() {
        for &(s, w) in mdp.transition(0, 0, a) {
            d[s] += p * w;
        }
    }
    Ok(d)
}

/// Start-state action distribution minimizing TV between the level-1
/// distribution and `mu`, with that TV. Lowest index or smallest `p` wins ties.
pub fn tv_minimizing_policy(mdp: &LatentMdp, mu: &[f64], set: PolicySet) -> Result<(Vec<f64>, f64)> {
    let a = mdp.num_actions();
    let candidates: Vec<Vec<f64>> = match set {
        PolicySet::Deterministic => (0..a)
            .map(|i| {
                let mut p = vec![0.0; a];
                p[i] = 1.0;
                p
            })
            .collect(),
        PolicySet::Grid(step) => {
            if a != 2 {
                return Err(Error::Unsupported("mixing grid needs two actions".into()));
            }
            if !(step > 0.0 && step <= 1.0) {
                return Err(Error::Config(format!("grid step {step} outside (0, 1]")));
            }
            let n = (1.0 / step).round() as usize;
            (0..=n)
                .map(|k| {
                    let p = k as f64 / n as f64;
                    vec![p, 1.0 - p]
                })
                .collect()
        }
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for c in candidates {
        let tv = divergences(&one_step_distribution(mdp, &c)?, mu)?.tv;
        if best.as_ref().map_or(true, |b| tv < b.1) {
            best = Some((c, tv));
        }
    }
    Ok(best.unwrap())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Divergences {
    pub tv: f64,
    /// Jensen-Shannon divergence in nats.
    pub js: f64,
}

pub fn divergences(p: &[f64], q: &[f64]) -> Result<Divergences> {
    if p.len() != q.len() {
        return Err(Error::Config(format!("support sizes differ: {} vs {}", p.len(), q.len())));
    }
    let tv = 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let kl = |x: f64, m: f64| if x > 0.0 { x * (x / m).ln() } else { 0.0 };
    let js = 0.5
        * p.iter()
            .zip(q)
            .map(|(&a, &b)| {
                let m = 0.5 * (a + b);
                kl(a, m) + kl(b, m)
            })
            .sum::<f64>();
    Ok(Divergences { tv, js: js.max(0.0) })
}

/// MMD between two distributions over latent states under the RBF kernel on
/// one-hot embeddings, where distinct states are at squared distance 2.
pub fn latent_mmd(p: &[f64], q: &[f64], sigma: f64) -> f64 {
    let n = p.len().max(q.len());
    let off = (-1.0 / (sigma * sigma)).exp();
    let diff: Vec<f64> = (0..n)
        .map(|i| p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0))
        .collect();
    let sum: f64 = diff.iter().sum();
    let sq: f64 = diff.iter().map(|d| d * d).sum();
    ((1.0 - off) * sq + off * sum * sum).max(0.0).sqrt()
}

/// Fraction of `episodes` rollouts whose final reward is 1.
pub fn success_rate<M: TraceModel>(model: &mut M, policy: &Policy<M::Obs>, episodes: usize, rng: &mut Rng) -> Result<f64> {
    if episodes == 0 {
        return Err(Error::Config("zero evaluation episodes".into()));
    }
    let mut hits = 0usize;
    for _ in 0..episodes {
        hits += rollout(model, policy, rng)?.success() as usize;
    }
    Ok(hits as f64 / episodes as f64)
}

/// Empirical success rate divided by the optimal success probability.
pub fn relative_success<M: TraceModel>(
    model: &mut M,
    policy: &Policy<M::Obs>,
    episodes: usize,
    optimal: f64,
    rng: &mut Rng,
) -> Result<f64> {
    if !(optimal > 0.0) {
        return Err(Error::Config(format!("optimal success {optimal} must be positive")));
    }
    Ok(success_rate(model, policy, episodes, rng)? / optimal)
}
