//! Trace-model versus reset-model demonstrations on the hardness constructions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng as _;

use crate::data::StateOnlyDataset;
use crate::envs::{make_one_step_hardness, HardnessTree};
use crate::error::{Error, Result};
use crate::mdp::{exact_occupancy, Policy, ResetModel, TabularRule, TraceModel, UniformRule};
use crate::metrics::{coverage_density_ratio, coverage_forward, tv_minimizing_policy, PolicySet};
use crate::rng::stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchStrategy {
    /// Uniform actions at every level.
    Random,
    /// Leaves in index order, wrapping around.
    Breadth,
}

impl FromStr for SearchStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SearchStrategy::Random),
            "breadth" => Ok(SearchStrategy::Breadth),
            other => Err(Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationReport {
    /// Trace-model episodes used.
    pub episodes: u64,
    /// Best TV between collected last-level states and the offline last level.
    pub tv: Option<f64>,
    pub reset_queries: u64,
    /// The recovered path ends at the rewarding leaf.
    pub path_recovered: bool,
    /// Recovered nodes, root first.
    pub path: Vec<usize>,
    /// First level the offline chain could not be extended to.
    pub broken_level: Option<usize>,
}

/// Empirical distribution of the dataset's last level.
fn last_level_target(data: &StateOnlyDataset<usize>) -> Result<BTreeMap<usize, f64>> {
    let last = data
        .levels()
        .last()
        .filter(|l| !l.is_empty())
        .ok_or_else(|| Error::Empty("offline last level".into()))?;
    let mut out = BTreeMap::new();
    for &s in last {
        *out.entry(s).or_insert(0.0) += 1.0 / last.len() as f64;
    }
    Ok(out)
}

/// Collect last-level states by `strategy` for `budget` episodes. The achieved
/// TV is the smallest over prefixes `k = 1..=budget` of the TV between the
/// first `k` collected leaves and the offline last level; 1 when `budget = 0`.
pub fn trace_search_demo(
    tree: &Arc<HardnessTree>,
    data: &StateOnlyDataset<usize>,
    budget: u64,
    strategy: SearchStrategy,
    seed: u64,
) -> Result<SeparationReport> {
    if data.horizon() != tree.depth {
        return Err(Error::InvalidHorizon("dataset depth differs from tree".into()));
    }
    let target = last_level_target(data)?;
    let mut sim = tree.sim();
    let mut rng = stream(seed, "trace-search", 0);
    let leaves = tree.nodes_at(tree.depth - 1) as u64;
    let decisions = tree.depth - 1;
    let mut hits: HashMap<usize, f64> = HashMap::new();
    let mut best = 1.0f64;
    for k in 0..budget {
        let mut node = sim.reset();
        for d in 0..decisions {
            let a = match strategy {
                SearchStrategy::Random => rng.gen_range(0..tree.branching),
                SearchStrategy::Breadth => {
                    let leaf = k % leaves;
                    let shift = (decisions - 1 - d) as u32;
                    ((leaf / (tree.branching as u64).pow(shift)) % tree.branching as u64) as usize
                }
            };
            node = sim.step(a)?.next.ok_or_else(|| Error::Protocol("tree ended early".into()))?;
        }
        sim.step(0)?;
        if target.contains_key(&node) {
            *hits.entry(node).or_insert(0.0) += 1.0;
        }
        let n = (k + 1) as f64;
        let overlap: f64 = target
            .iter()
            .map(|(s, &q)| (hits.get(s).copied().unwrap_or(0.0) / n).min(q))
            .sum();
        best = best.min(1.0 - overlap);
    }
    Ok(SeparationReport {
        episodes: budget,
        tv: Some(best.max(0.0)),
        reset_queries: 0,
        path_recovered: false,
        path: vec![],
        broken_level: None,
    })
}

/// Recover the rewarding path with the reset model: from every distinct
/// offline state try every action once and keep the transitions that land on
/// offline states of the next level; the chain from the root through offline
/// states is the path. Ambiguous chains are settled by querying the last step.
pub fn reset_solver_demo(tree: &Arc<HardnessTree>, data: &StateOnlyDataset<usize>) -> Result<SeparationReport> {
    if data.horizon() != tree.depth {
        return Err(Error::InvalidHorizon("dataset depth differs from tree".into()));
    }
    let mut sim = tree.sim();
    let distinct: Vec<BTreeSet<usize>> = data.levels().iter().map(|l| l.iter().copied().collect()).collect();
    // chains[h] maps a reachable offline node at level h to its parent
    let mut chains: Vec<BTreeMap<usize, Option<usize>>> = vec![BTreeMap::new(); tree.depth];
    if distinct[0].contains(&0) {
        chains[0].insert(0, None);
    }
    let mut broken = None;
    for h in 0..tree.depth - 1 {
        for &s in &distinct[h] {
            for a in 0..tree.branching {
                let next = sim
                    .query(h, &s, a)?
                    .next
                    .ok_or_else(|| Error::Protocol("tree ended early".into()))?;
                if chains[h].contains_key(&s) && distinct[h + 1].contains(&next) {
                    chains[h + 1].entry(next).or_insert(Some(s));
                }
            }
        }
        if chains[h + 1].is_empty() {
            broken = Some(h + 1);
            break;
        }
    }
    let last = tree.depth - 1;
    let mut leaf = None;
    if broken.is_none() {
        let candidates: Vec<usize> = chains[last].keys().copied().collect();
        if candidates.len() == 1 {
            leaf = Some(candidates[0]);
        } else {
            for c in candidates {
                if sim.query(last, &c, 0)?.reward >= 1.0 {
                    leaf = Some(c);
                    break;
                }
            }
        }
    }
    let mut path = vec![];
    if let Some(mut node) = leaf {
        for h in (0..tree.depth).rev() {
            path.push(node);
            if let Some(Some(p)) = chains[h].get(&node) {
                node = *p;
            }
        }
        path.reverse();
    }
    Ok(SeparationReport {
        episodes: 0,
        tv: None,
        reset_queries: sim.resets(),
        path_recovered: leaf == Some(tree.optimal[last]),
        path,
        broken_level: broken,
    })
}

/// Exact quantities of the one-step construction.
#[derive(Clone, Debug, PartialEq)]
pub struct OneStepReport {
    /// Coverage of the rewarding action's occupancy by the offline distribution.
    pub coverage: f64,
    /// Deterministic TV minimizer and its TV.
    pub tv_action: usize,
    pub tv: f64,
    /// Weight on action 0 of the best two-action mixture on the grid, and its TV.
    pub mixture_weight: f64,
    pub mixture_tv: f64,
    /// The rewarding policy is not covered by the TV minimizer.
    pub minimizer_covers: bool,
    pub witness: Option<(usize, usize)>,
}

pub fn one_step_report(grid_step: f64) -> Result<OneStepReport> {
    let hard = make_one_step_hardness()?;
    let det = |a: usize| -> Policy<usize> {
        Policy::new(
            0,
            vec![
                Arc::new(TabularRule::deterministic(2, &[a])),
                Arc::new(UniformRule { actions: 2 }),
            ],
        )
    };
    let star = exact_occupancy(&hard.mdp, &det(hard.best_action))?;
    let reference = vec![vec![1.0], hard.offline.to_vec()];
    let coverage = coverage_density_ratio(&star, &reference).aggregate();
    let (p, tv) = tv_minimizing_policy(&hard.mdp, &hard.offline, PolicySet::Deterministic)?;
    let tv_action = p.iter().position(|&x| x == 1.0).unwrap_or(0);
    let (mix, mixture_tv) = tv_minimizing_policy(&hard.mdp, &hard.offline, PolicySet::Grid(grid_step))?;
    let minimizer = exact_occupancy(&hard.mdp, &det(tv_action))?;
    let cover = coverage_forward(&star, &minimizer);
    Ok(OneStepReport {
        coverage,
        tv_action,
        tv,
        mixture_weight: mix[0],
        mixture_tv,
        minimizer_covers: !cover.infinite,
        witness: cover.witness,
    })
}
