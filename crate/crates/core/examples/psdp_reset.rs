//! Policy search with a reset model: start states come from the offline data.

use obsrl::approx::QClass;
use obsrl::backward::{psdp_reset, BackwardConfig};
use obsrl::data::collect_adversarial;
use obsrl::envs::{make_adversarial_lock, ObservationMode};
use obsrl::mdp::{success_probability, ResetModel};
use obsrl::rng::stream;

fn main() -> obsrl::Result<()> {
    let lock = make_adversarial_lock(10, 2, ObservationMode::Latent)?;
    let offline = collect_adversarial(&lock, 2000, 2)?;
    let mut model = lock.latent_sim(stream(2, "reset", 0));
    let result = psdp_reset(
        &mut model,
        &offline,
        &[QClass::Tabular],
        lock.mdp.reward_range(),
        &BackwardConfig { samples_per_level: 4000 },
        &mut stream(2, "psdp", 0),
    )?;
    let p = success_probability(&lock.mdp, &result.policy())?;
    println!("success {p:.4} of optimal {}", lock.optimal_success());
    println!("resets {}", model.resets());
    Ok(())
}
