//! Interactive distribution matching then conservative policy iteration on the
//! discounted three-state lock.

use obsrl::approx::{Bandwidth, DiscriminatorClass};
use obsrl::backward::{cpi_trace, AdvantageMode, CpiConfig, StepSize};
use obsrl::data::InteractiveOracle;
use obsrl::envs::make_stationary_lock;
use obsrl::forward::{inter_fail, InterFailConfig};
use obsrl::mdp::stationary::{StationaryPolicy, StationarySim};
use obsrl::rng::stream;

fn main() -> obsrl::Result<()> {
    let gamma = 0.9;
    let lock = make_stationary_lock(10, 0)?;
    let mdp = lock.mdp.clone();
    let best = mdp.start_value(&lock.optimal_policy(), gamma);
    let mut sim = StationarySim::new(mdp.clone(), 200, stream(0, "sim", 0));
    let mut oracle = InteractiveOracle::new(mdp.clone(), lock.eps_greedy(0.1)?, stream(0, "oracle", 0));
    let config = InterFailConfig {
        gamma,
        iterations: 2000,
        step_size: None,
    };
    let matched = inter_fail(
        &mut sim,
        &mut oracle,
        &DiscriminatorClass::Mmd(Bandwidth::Median),
        &config,
        &mut stream(0, "inter-fail", 0),
    )?;
    println!("matched policy value {:.3} of {best:.3}", mdp.start_value(&matched.policy, gamma));

    let class = StationaryPolicy::enumerate_deterministic(3, 10);
    let cpi = CpiConfig {
        gamma,
        epsilon: 0.002,
        step: StepSize::Fixed(0.3),
        samples_per_iteration: 10000,
        max_iterations: None,
        advantage: AdvantageMode::MonteCarlo,
    };
    let mut sim = StationarySim::new(mdp.clone(), 200, stream(0, "cpi-sim", 0));
    let result = cpi_trace(&mut sim, &matched.policy, &class, &cpi, &mut stream(0, "cpi", 0))?;
    println!(
        "after {} updates: value {:.3} of {best:.3}",
        result.updates(),
        mdp.start_value(&result.policy(), gamma)
    );
    Ok(())
}
