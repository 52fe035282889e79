//! Admissible and inadmissible observation-only datasets, their coverage, and storage.

use obsrl::data::{collect_benign_inadmissible, collect_eps_greedy, load_dataset, save_dataset};
use obsrl::envs::{make_comb_lock, ObservationMode};
use obsrl::mdp::exact_occupancy;
use obsrl::metrics::coverage_density_ratio;
use obsrl::rng::stream;

fn main() -> obsrl::Result<()> {
    let lock = make_comb_lock(10, 0, ObservationMode::Latent)?;
    let star = exact_occupancy(&lock.mdp, &lock.optimal_policy())?;
    let mut sim = lock.latent_sim(stream(0, "sim", 0));
    let admissible = collect_eps_greedy(&mut sim, "comb-lock", &lock.optimal_policy(), 0.1, 2000, 0)?;
    let benign = collect_benign_inadmissible(&lock, 2000, 0)?;
    for (name, data) in [("admissible", &admissible), ("benign", &benign)] {
        let marg = data.empirical_marginals(lock.mdp.state_counts())?;
        let cov = coverage_density_ratio(&star, &marg);
        println!("{name}: last-level marginal {:?}, coverage {:.3}", marg[10], cov.aggregate());
    }
    let dir = std::env::temp_dir().join("obsrl-offline-data");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("admissible.txt");
    save_dataset(&admissible, &path)?;
    let back = load_dataset::<usize>(&path)?;
    println!("reloaded {} levels, identical: {}", back.horizon(), back.levels() == admissible.levels());
    Ok(())
}
