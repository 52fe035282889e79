//! Hybrid reinforcement learning from observation-only offline data.
//!
//! A forward phase matches per-level state distributions of an offline dataset
//! with a min-max game ([`forward`]), and a backward phase runs policy search by
//! dynamic programming using the forward policy as a roll-in ([`backward`]).
//! [`foobar`] chains the two. Environments, datasets, exact dynamic-programming
//! oracles, coverage metrics and the trace-versus-reset separation demos live in
//! the remaining modules.
//!
//! Runnable examples, one per capability:
//!
//! | example | shows |
//! |---|---|
//! | `comb_lock` | lock construction, exact success rates, rich observations |
//! | `offline_data` | admissible and inadmissible datasets, save and load |
//! | `minmax_game` | the distribution-matching game on a one-step instance |
//! | `foobar_lock` | forward then backward on the lock |
//! | `psdp_reset` | backward search with a reset model |
//! | `hardness_tree` | trace search versus reset solver on the binary tree |
//! | `one_step_hardness` | coverage and TV arithmetic of the one-step instance |
//! | `stationary_cpi` | Inter-FAIL and CPI-trace on a discounted chain |
//! | `mmd_kernels` | MMD estimates and median-trick bandwidths |
//! | `rich_lock` | the game with kernel discriminators on rich observations |
//! | `reproduce_table` | median success of each algorithm on the benign and adversarial locks |

pub mod approx;
pub mod backward;
pub mod data;
pub mod envs;
pub mod error;
pub mod foobar;
pub mod forward;
pub mod hardness;
pub mod harness;
pub mod mdp;
pub mod metrics;
pub mod rng;
pub mod textfmt;

pub use error::{Error, Result};
