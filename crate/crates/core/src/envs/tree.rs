use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::data::{Provenance, StateOnlyDataset};
use crate::error::{Error, Result};
use crate::mdp::{LatentMdp, LatentMdpBuilder, ResetModel, Reward, StepOutcome, TraceModel};
use crate::rng::stream;

pub const MAX_TREE_DEPTH: usize = 24;

/// Deterministic tree with `depth` levels and `branching` actions. Node `i` at
/// level `h` moves to node `i * branching + a` under action `a`. A single leaf
/// on the seeded optimal path pays 1.
#[derive(Clone, Debug)]
pub struct HardnessTree {
    pub depth: usize,
    pub branching: usize,
    /// Node on the optimal path at each level.
    pub optimal: Vec<usize>,
    /// Distractor node at each level; the root has none.
    pub distractors: Vec<Option<usize>>,
}

impl HardnessTree {
    pub fn nodes_at(&self, level: usize) -> usize {
        self.branching.pow(level as u32)
    }

    pub fn optimal_actions(&self) -> Vec<usize> {
        (1..self.depth).map(|h| self.optimal[h] % self.branching).collect()
    }

    /// Root-level subtree that contains `node` at `level`.
    pub fn top_branch(&self, level: usize, node: usize) -> usize {
        if level == 0 {
            return 0;
        }
        node / self.branching.pow(level as u32 - 1)
    }

    pub fn sim(self: &Arc<Self>) -> TreeSim {
        TreeSim {
            tree: self.clone(),
            cursor: None,
            steps: 0,
            resets: 0,
        }
    }

    /// Materialize as a tabular MDP; only sensible for small trees.
    pub fn latent_mdp(&self) -> Result<LatentMdp> {
        if self.nodes_at(self.depth - 1) > 1 << 16 {
            return Err(Error::Unsupported("tree too large to tabulate".into()));
        }
        let states: Vec<usize> = (0..self.depth).map(|h| self.nodes_at(h)).collect();
        let mut b = LatentMdpBuilder::new(states, self.branching).initial(vec![1.0]);
        for h in 0..self.depth - 1 {
            for s in 0..self.nodes_at(h) {
                for a in 0..self.branching {
                    b.transition(h, s, a, vec![(s * self.branching + a, 1.0)]);
                }
            }
        }
        for a in 0..self.branching {
            b.reward(self.depth - 1, self.optimal[self.depth - 1], a, Reward::fixed(1.0));
        }
        b.build()
    }
}

/// Build a tree and its two-state-per-level offline dataset: the optimal-path
/// node plus a distractor from a different root subtree. From level 3 on, the
/// distractor is never a child of the previous distractor, so following
/// distractors does not lead anywhere.
pub fn make_tree(depth: usize, branching: usize, seed: u64) -> Result<(Arc<HardnessTree>, StateOnlyDataset<usize>)> {
    if !(2..=MAX_TREE_DEPTH).contains(&depth) {
        return Err(Error::InvalidHorizon(format!("tree depth {depth} outside 2..={MAX_TREE_DEPTH}")));
    }
    if branching < 2 || (branching as f64).powi(depth as i32 - 1) > (1u64 << 40) as f64 {
        return Err(Error::Config(format!("unsupported branching {branching} at depth {depth}")));
    }
    let mut rng = stream(seed, "tree", 0);
    let mut optimal = vec![0usize];
    for _ in 1..depth {
        let a = rng.gen_range(0..branching);
        optimal.push(optimal.last().unwrap() * branching + a);
    }
    let mut tree = HardnessTree {
        depth,
        branching,
        optimal,
        distractors: vec![None],
    };
    for h in 1..depth {
        let width = tree.nodes_at(h);
        let sub = width / branching;
        let opt_branch = tree.top_branch(h, tree.optimal[h]);
        let prev = tree.distractors[h - 1];
        let pick = loop {
            let mut branch = rng.gen_range(0..branching - 1);
            if branch >= opt_branch {
                branch += 1;
            }
            let node = branch * sub + rng.gen_range(0..sub);
            let is_child = prev.is_some_and(|p| node / branching == p);
            if h < 3 || !is_child {
                break node;
            }
        };
        tree.distractors.push(Some(pick));
    }
    let mut levels = vec![vec![0, 0]];
    for h in 1..depth {
        let mut pair = vec![tree.optimal[h], tree.distractors[h].unwrap()];
        pair.shuffle(&mut rng);
        levels.push(pair);
    }
    let data = StateOnlyDataset::new_latent("hardness-tree", Provenance::HardnessTree, seed, levels);
    Ok((Arc::new(tree), data))
}

pub fn make_binary_tree(depth: usize, seed: u64) -> Result<(Arc<HardnessTree>, StateOnlyDataset<usize>)> {
    make_tree(depth, 2, seed)
}

/// Trace and reset access to a [`HardnessTree`].
#[derive(Clone, Debug)]
pub struct TreeSim {
    tree: Arc<HardnessTree>,
    cursor: Option<(usize, usize)>,
    steps: u64,
    resets: u64,
}

impl TraceModel for TreeSim {
    type Obs = usize;

    fn horizon(&self) -> usize {
        self.tree.depth
    }

    fn num_actions(&self) -> usize {
        self.tree.branching
    }

    fn reset(&mut self) -> usize {
        self.cursor = Some((0, 0));
        0
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome<usize>> {
        let (h, s) = self
            .cursor
            .ok_or_else(|| Error::Protocol("step called without an active episode".into()))?;
        if action >= self.tree.branching {
            return Err(Error::InvalidAction(action));
        }
        self.steps += 1;
        if h + 1 == self.tree.depth {
            self.cursor = None;
            let reward = if s == self.tree.optimal[h] { 1.0 } else { 0.0 };
            return Ok(StepOutcome { reward, next: None });
        }
        let next = s * self.tree.branching + action;
        self.cursor = Some((h + 1, next));
        Ok(StepOutcome {
            reward: 0.0,
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

impl ResetModel for TreeSim {
    fn reset_to(&mut self, level: usize, obs: &usize) -> Result<()> {
        if level >= self.tree.depth || *obs >= self.tree.nodes_at(level) {
            return Err(Error::InvalidState { level, state: *obs });
        }
        self.resets += 1;
        self.cursor = Some((level, *obs));
        Ok(())
    }

    fn resets(&self) -> u64 {
        self.resets
    }
}
