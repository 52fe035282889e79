//! Build a combination lock, check exact success rates and look at rich observations.

use obsrl::envs::{make_adversarial_lock, make_comb_lock, ObservationMode};
use obsrl::mdp::{rollout, success_probability, Policy};
use obsrl::rng::stream;

fn main() -> obsrl::Result<()> {
    let lock = make_comb_lock(10, 0, ObservationMode::Rich)?;
    let star = lock.optimal_policy();
    let uniform = Policy::uniform(0, lock.levels(), 10);
    println!("levels {}", lock.levels());
    println!("optimal success {}", success_probability(&lock.mdp, &star)?);
    println!("uniform success {:e}", success_probability(&lock.mdp, &uniform)?);

    let adversarial = make_adversarial_lock(10, 0, ObservationMode::Latent)?;
    let best = success_probability(&adversarial.mdp, &adversarial.optimal_policy())?;
    println!("adversarial optimal success {best}");

    let mut sim = lock.rich_sim(stream(0, "sim", 0), stream(0, "noise", 0))?;
    let rules = star.rules().expect("per-level policy").to_vec();
    let encoder = lock.encoder.clone().expect("rich lock");
    // the latent optimal policy acts on decoded observations
    let decoded: Vec<obsrl::mdp::Rule<Vec<f64>>> = rules
        .into_iter()
        .map(|r| std::sync::Arc::new(Decode(r, encoder.clone())) as obsrl::mdp::Rule<Vec<f64>>)
        .collect();
    let traj = rollout(&mut sim, &Policy::new(0, decoded), &mut stream(0, "policy", 0))?;
    println!("observation dim {}", traj.observations[0].len());
    println!("rich rollout return {}", traj.total_reward());
    Ok(())
}

struct Decode(obsrl::mdp::Rule<usize>, std::sync::Arc<obsrl::envs::ObservationEncoder>);

impl obsrl::mdp::ActionRule<Vec<f64>> for Decode {
    fn num_actions(&self) -> usize {
        self.0.num_actions()
    }
    fn fill_probs(&self, obs: &Vec<f64>, out: &mut [f64]) {
        let (state, _) = self.1.decode(obs).expect("noise is small");
        self.0.fill_probs(&state, out);
    }
}
