//! Forward matching with kernel discriminators and a softmax policy on rich
//! lock observations, checked against the latent occupancy.

use std::sync::Arc;

use obsrl::approx::{Bandwidth, DiscriminatorClass, PolicyClass, RawFeatures};
use obsrl::data::collect_eps_greedy;
use obsrl::envs::{make_comb_lock, ObservationMode};
use obsrl::forward::{fail_forward, ForwardConfig, GameConfig};
use obsrl::rng::stream;

fn main() -> obsrl::Result<()> {
    let lock = make_comb_lock(3, 0, ObservationMode::Rich)?;
    let encoder = lock.encoder.clone().expect("rich lock");
    let mut sim = lock.latent_sim(stream(0, "offline", 0));
    let latent = collect_eps_greedy(&mut sim, "comb-lock", &lock.optimal_policy(), 0.1, 500, 0)?;
    let offline = latent.encode(&encoder, &mut stream(0, "noise", 0));
    let features = Arc::new(RawFeatures { dim: encoder.dim() });
    let config = ForwardConfig {
        samples_per_level: 500,
        game: GameConfig {
            iterations: 200,
            step_size: None,
        },
    };
    let mut model = lock.rich_sim(stream(0, "online", 0), stream(0, "online-noise", 0))?;
    let result = fail_forward(
        &mut model,
        &offline,
        &[PolicyClass::Softmax {
            features,
            lr: 0.5,
            steps: 1,
        }],
        &[DiscriminatorClass::Mmd(Bandwidth::Median)],
        &config,
        &mut stream(0, "forward", 0),
    )?;
    for (h, t) in result.transcripts.iter().enumerate() {
        println!("level {}: game value {:.4}", h + 1, t.best_value());
    }
    // decode rollouts of the learned policy to compare good-state mass with the data
    let mut eval = lock.rich_sim(stream(0, "eval", 0), stream(0, "eval-noise", 0))?;
    let mut good = vec![0.0; lock.levels()];
    let episodes = 500;
    let mut rng = stream(0, "eval-policy", 0);
    for _ in 0..episodes {
        let traj = obsrl::mdp::rollout(&mut eval, &result.policy(), &mut rng)?;
        for (h, o) in traj.observations.iter().enumerate() {
            if encoder.decode(o)?.0 != 2 {
                good[h] += 1.0 / episodes as f64;
            }
        }
    }
    let data_good: Vec<f64> = latent
        .levels()
        .iter()
        .map(|l| l.iter().filter(|&&s| s != 2).count() as f64 / l.len() as f64)
        .collect();
    println!("good-state mass, learned {good:.3?}");
    println!("good-state mass, data    {data_good:.3?}");
    Ok(())
}
