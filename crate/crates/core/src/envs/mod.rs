//! Environment constructors.

mod comb_lock;
mod encoder;
mod one_step;
mod stationary_lock;
mod tree;

pub use comb_lock::{make_adversarial_lock, make_comb_lock, CombLock, LockKind, ObservationMode, ACTIONS, ANTI_SHAPED_PENALTY, GOOD_STATES, LOCK_STATES};
pub use encoder::{hadamard, observation_dim, ObservationEncoder, NOISE_STD};
pub use one_step::{make_one_step_hardness, OneStepHardness};
pub use stationary_lock::{make_stationary_lock, StationaryLock};
pub use tree::{make_binary_tree, make_tree, HardnessTree, TreeSim, MAX_TREE_DEPTH};
