//! Forward distribution matching followed by trace-model policy search on the lock.

use obsrl::approx::{Bandwidth, PolicyClass, QClass};
use obsrl::backward::BackwardConfig;
use obsrl::data::collect_eps_greedy;
use obsrl::envs::{make_comb_lock, ObservationMode};
use obsrl::foobar::{run_foobar, DiscriminatorMode, FoobarConfig};
use obsrl::forward::{ForwardConfig, GameConfig};
use obsrl::mdp::success_probability;
use obsrl::rng::stream;

fn main() -> obsrl::Result<()> {
    let lock = make_comb_lock(10, 1, ObservationMode::Latent)?;
    let mut sim = lock.latent_sim(stream(1, "offline", 0));
    let offline = collect_eps_greedy(&mut sim, "comb-lock", &lock.optimal_policy(), 0.1, 2000, 1)?;
    let config = FoobarConfig {
        forward: ForwardConfig {
            samples_per_level: 2000,
            game: GameConfig {
                iterations: 1000,
                step_size: None,
            },
        },
        backward: BackwardConfig { samples_per_level: 5000 },
        policy_classes: vec![PolicyClass::Tabular],
        q_classes: vec![QClass::Tabular],
        discriminators: DiscriminatorMode::Mmd(Bandwidth::Median),
        reward_range: lock.mdp.reward_range(),
    };
    let mut model = lock.latent_sim(stream(1, "online", 0));
    let run = run_foobar(&mut model, &offline, &config, 1)?;
    println!("forward-only success {:.3}", success_probability(&lock.mdp, &run.forward.policy())?);
    for switch in [10, 5, 0] {
        let p = success_probability(&lock.mdp, &run.mixed_policy(switch)?)?;
        println!("forward below level {switch}, backward after: success {p:.3}");
    }
    println!("environment steps {}", obsrl::mdp::TraceModel::steps_taken(&model));
    Ok(())
}
