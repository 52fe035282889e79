//! Finite-horizon MDPs, policies, access models and exact dynamic programming.
//!
//! Levels are 0-based: an MDP of horizon `L` has levels `0..L`, one action per
//! level, and transitions from level `h` to `h + 1` for `h + 1 < L`.

mod access;
mod dp;
mod io;
mod latent;
mod policy;
pub mod stationary;

pub use access::{rollout, rollout_from, ResetModel, RichSim, StepOutcome, TabularSim, TraceModel, Trajectory};
pub use dp::{argmax_lowest, exact_occupancy, exact_q, optimal_q, policy_value, success_probability, Occupancy, QTable};
pub use io::{load_mdp, load_policy, parse_mdp, parse_policy, save_mdp, save_policy, write_mdp, write_policy};
pub use latent::{LatentMdp, LatentMdpBuilder, Reward, ROW_TOLERANCE};
pub use policy::{ActionRule, MixtureRule, Policy, PolicyKind, Rule, TabularRule, UniformRule};

use std::fmt::Debug;

/// What a learner sees of a state.
pub trait Observation: Clone + Debug + PartialEq + Send + Sync + 'static {
    /// Squared Euclidean distance between embeddings; latent states embed as one-hot vectors.
    fn sq_distance(&self, other: &Self) -> f64;
    /// Index of the underlying latent state, when the observation is one.
    fn latent_index(&self) -> Option<usize>;
    /// Raw vector, when the observation is one.
    fn embedding(&self) -> Option<&[f64]> {
        None
    }
}

impl Observation for usize {
    fn sq_distance(&self, other: &Self) -> f64 {
        if self == other {
            0.0
        } else {
            2.0
        }
    }
    fn latent_index(&self) -> Option<usize> {
        Some(*self)
    }
}

impl Observation for Vec<f64> {
    fn sq_distance(&self, other: &Self) -> f64 {
        self.iter().zip(other).map(|(a, b)| (a - b) * (a - b)).sum()
    }
    fn latent_index(&self) -> Option<usize> {
        None
    }
    fn embedding(&self) -> Option<&[f64]> {
        Some(self)
    }
}
