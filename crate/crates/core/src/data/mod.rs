//! Observation-only offline datasets: generation, storage and the interactive oracle.

mod collect;
mod dataset;
mod io;
mod oracle;

pub use collect::{
    collect_adversarial, collect_benign_inadmissible, collect_eps_greedy, eps_greedy_policy, inadmissible_marginal,
    sample_latent_dataset, EpsGreedyRule,
};
pub use dataset::{DatasetObs, Provenance, StateOnlyDataset};
pub use io::{load_dataset, load_dataset_expecting, parse_dataset, save_dataset, write_dataset};
pub use oracle::InteractiveOracle;
