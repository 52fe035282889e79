mod common;

use std::sync::Arc;

use common::games::{check_replay, finite_class, indicators, instance, minimax_bracket};
use common::{median, tv};
use obsrl::approx::{Bandwidth, DiscriminatorClass, PolicyClass};
use obsrl::data::InteractiveOracle;
use obsrl::envs::make_one_step_hardness;
use obsrl::forward::{
    exponential_weights, fail_forward, inter_fail, minmax_game, ForwardConfig, GameConfig, InterFailConfig, OnlineTuple,
};
use obsrl::mdp::stationary::{StationaryMdp, StationaryPolicy, StationarySim};
use obsrl::mdp::{Rule, TabularRule, TabularSim, TraceModel};
use obsrl::rng::{categorical, geometric_stop, stream, Rng};
use proptest::prelude::*;
use rand::Rng as _;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transcript_replays_exponential_weights_with_exact_best_responses(seed in 0u64..100_000, k in 1usize..5, s in 2usize..5) {
        let inst = instance(seed, k, s);
        let out = minmax_game(
            &finite_class(&inst),
            &DiscriminatorClass::Finite(inst.tests.clone()),
            &inst.online,
            &inst.offline,
            inst.actions,
            &GameConfig { iterations: 200, step_size: None },
            &mut stream(seed, "game", 0),
        )
        .unwrap();
        if let Err(e) = check_replay(&inst, &out.transcript) {
            return Err(TestCaseError::fail(e));
        }
    }

    #[test]
    fn game_value_is_close_to_the_brute_force_minimax(seed in 0u64..100_000, k in 1usize..5, s in 2usize..5) {
        let inst = instance(seed, k, s);
        let (lower, upper) = minimax_bracket(&inst.payoff());
        prop_assert!(upper - lower < 5e-3);
        let t = 1000;
        let out = minmax_game(
            &finite_class(&inst),
            &DiscriminatorClass::Finite(inst.tests.clone()),
            &inst.online,
            &inst.offline,
            inst.actions,
            &GameConfig { iterations: t, step_size: None },
            &mut stream(seed, "game", 0),
        )
        .unwrap();
        let v = out.transcript.best_value();
        let a = inst.actions as f64;
        prop_assert!(v >= lower - 1e-9);
        prop_assert!(v <= upper + (a * a / t as f64).sqrt(), "game {v}, minimax in [{lower}, {upper}]");
    }

    #[test]
    fn exponential_weights_are_distributions(cum in prop::collection::vec(-1e3f64..1e3, 1..20), eta in 1e-4f64..10.0) {
        let w = exponential_weights(&cum, eta);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|&x| x >= 0.0));
    }

}

#[test]
fn importance_weights_average_to_one() {
    for seed in 0..24u64 {
        let inst = instance(seed, 1, 3);
        let pi = &inst.members[0];
        let w: Vec<f64> = inst.online.iter().map(|t| inst.actions as f64 * pi.prob(t.prev, t.action)).collect();
        let (m, se) = common::mean_and_stderr(&w);
        assert!((m - 1.0).abs() <= 3.0 * se, "seed {seed}: mean {m} se {se}");
    }
}

#[test]
fn importance_weights_average_to_one_on_a_large_sample() {
    let mut rng = stream(3, "iw", 0);
    let pi = [0.9, 0.1];
    let w: Vec<f64> = (0..100_000).map(|_| 2.0 * pi[rng.gen_range(0..2)]).collect();
    let (m, se) = common::mean_and_stderr(&w);
    assert!((m - 1.0).abs() <= 3.0 * se);
}

fn one_step_online(n: usize, seed: u64) -> (Vec<OnlineTuple<usize>>, Vec<usize>) {
    let hard = make_one_step_hardness().unwrap();
    let mdp = Arc::new(hard.mdp.clone());
    let mut sim = TabularSim::new(mdp, stream(seed, "one-step-sim", 0));
    let mut rng = stream(seed, "one-step", 0);
    let online = (0..n)
        .map(|_| {
            let prev = sim.reset();
            let action = rng.gen_range(0..2);
            let next = sim.step(action).unwrap().next.unwrap();
            OnlineTuple { prev, action, next }
        })
        .collect();
    let offline = (0..n).map(|_| categorical(&hard.offline, &mut rng)).collect();
    (online, offline)
}

#[test]
fn one_step_game_selects_the_tv_minimizing_action() {
    let (online, offline) = one_step_online(4000, 0);
    let class = PolicyClass::Finite(vec![
        Arc::new(TabularRule::deterministic(2, &[0])) as Rule<usize>,
        Arc::new(TabularRule::deterministic(2, &[1])),
    ]);
    let out = minmax_game(
        &class,
        &DiscriminatorClass::Finite(indicators(3, true)),
        &online,
        &offline,
        2,
        &GameConfig::default(),
        &mut stream(0, "game", 0),
    )
    .unwrap();
    let mut p = [0.0; 2];
    out.rule.fill_probs(&0, &mut p);
    assert!(p[0] > 0.8, "weight on the first action {}", p[0]);
}

#[test]
fn single_iteration_returns_the_initial_policy() {
    let (online, offline) = one_step_online(200, 1);
    for class in [
        PolicyClass::Tabular,
        PolicyClass::Finite(vec![
            Arc::new(TabularRule::deterministic(2, &[0])) as Rule<usize>,
            Arc::new(TabularRule::deterministic(2, &[1])),
        ]),
    ] {
        let out = minmax_game(
            &class,
            &DiscriminatorClass::Finite(indicators(3, true)),
            &online,
            &offline,
            2,
            &GameConfig { iterations: 1, step_size: None },
            &mut stream(1, "game", 0),
        )
        .unwrap();
        assert_eq!(out.transcript.records.len(), 1);
        let mut p = [0.0; 2];
        out.rule.fill_probs(&0, &mut p);
        assert_eq!(p, [0.5, 0.5]);
    }
}

#[test]
fn matched_distributions_give_a_value_within_noise() {
    // uniform actions already produce the offline marginal
    let hard = make_one_step_hardness().unwrap();
    let (online, _) = one_step_online(2000, 2);
    let uniform = obsrl::metrics::one_step_distribution(&hard.mdp, &[0.5, 0.5]).unwrap();
    let mut rng = stream(2, "matched", 0);
    let offline: Vec<usize> = (0..2000).map(|_| categorical(&uniform, &mut rng)).collect();
    let out = minmax_game(
        &PolicyClass::Tabular,
        &DiscriminatorClass::Finite(indicators(3, true)),
        &online,
        &offline,
        2,
        &GameConfig::default(),
        &mut rng,
    )
    .unwrap();
    let range: f64 = 2.0;
    let bound = 3.0 * (range * range * (1.0 / 2000.0 + 1.0 / 2000.0)).sqrt();
    assert!(out.transcript.best_value() <= bound, "{} > {bound}", out.transcript.best_value());
}

#[test]
fn one_decision_forward_phase_is_a_single_game() {
    let hard = make_one_step_hardness().unwrap();
    let mdp = Arc::new(hard.mdp.clone());
    let mut rng = stream(5, "offline", 0);
    let offline_states: Vec<usize> = (0..500).map(|_| categorical(&hard.offline, &mut rng)).collect();
    let data = obsrl::data::StateOnlyDataset::new_latent(
        "one-step",
        obsrl::data::Provenance::Other("test".into()),
        5,
        vec![vec![0; 500], offline_states.clone()],
    );
    let disc = DiscriminatorClass::Finite(indicators(3, true));
    let config = ForwardConfig { samples_per_level: 400, game: GameConfig { iterations: 300, step_size: None } };
    let mut sim = TabularSim::new(mdp.clone(), stream(5, "sim", 0));
    let forward = fail_forward(&mut sim, &data, &[PolicyClass::Tabular], &[disc.clone()], &config, &mut stream(5, "fwd", 0)).unwrap();
    assert_eq!(forward.transcripts.len(), 1);
    let mut sim = TabularSim::new(mdp, stream(5, "sim", 0));
    let mut rng: Rng = stream(5, "fwd", 0);
    let online: Vec<OnlineTuple<usize>> = (0..400)
        .map(|_| {
            let prev = sim.reset();
            let action = rng.gen_range(0..2);
            OnlineTuple { prev, action, next: sim.step(action).unwrap().next.unwrap() }
        })
        .collect();
    let direct = minmax_game(&PolicyClass::Tabular, &disc, &online, &offline_states, 2, &config.game, &mut rng).unwrap();
    assert_eq!(direct.transcript, forward.transcripts[0]);
}

#[test]
fn forward_phase_matches_admissible_lock_marginals() {
    let fits: Vec<common::LockFit> = (0..5u64).map(common::admissible_forward_fit).collect();
    for h in 0..fits[0].tv.len() {
        let v: Vec<f64> = fits.iter().map(|f| f.tv[h]).collect();
        assert!(median(&v) <= 0.15, "level {h}: median tv {}", median(&v));
    }
    assert!(fits.iter().all(|f| f.within_envelope()));
}

/// Three-state chain where every state is reachable under both actions.
fn friendly_chain() -> Arc<StationaryMdp> {
    let mut transitions = Vec::new();
    let mut rewards = Vec::new();
    for s in 0..3 {
        transitions.push(vec![((s + 1) % 3, 0.8), (s, 0.2)]);
        rewards.push(0.0);
        transitions.push(vec![(s, 0.7), ((s + 2) % 3, 0.3)]);
        rewards.push(if s == 2 { 1.0 } else { 0.0 });
    }
    Arc::new(StationaryMdp::new(3, 2, transitions, rewards, vec![1.0, 0.0, 0.0]).unwrap())
}

#[test]
fn inter_fail_matches_the_oracle_occupancy_on_a_small_chain() {
    let mdp = friendly_chain();
    let gamma = 0.9;
    let oracle_policy = StationaryPolicy::new(2, vec![vec![0.7, 0.3], vec![0.4, 0.6], vec![0.2, 0.8]]).unwrap();
    let target = mdp.discounted_occupancy(&oracle_policy, gamma, mdp.initial());
    let mut values = Vec::new();
    for seed in 0..5u64 {
        let mut sim = StationarySim::new(mdp.clone(), StationarySim::horizon_for(gamma), stream(seed, "chain", 0));
        let mut oracle = InteractiveOracle::new(mdp.clone(), oracle_policy.clone(), stream(seed, "oracle", 0));
        let out = inter_fail(
            &mut sim,
            &mut oracle,
            &DiscriminatorClass::Mmd(Bandwidth::Median),
            &InterFailConfig { gamma, iterations: 2000, step_size: None },
            &mut stream(seed, "inter-fail", 0),
        )
        .unwrap();
        let got = mdp.discounted_occupancy(&out.policy, gamma, mdp.initial());
        values.push(tv(&got, &target));
    }
    assert!(values.iter().all(|&v| v <= 0.1), "{values:?}");
}

#[test]
fn inter_fail_against_itself_has_value_near_zero() {
    let mdp = friendly_chain();
    let gamma = 0.9;
    let uniform = StationaryPolicy::uniform(3, 2);
    let n = 2000;
    let mut sim = StationarySim::new(mdp.clone(), StationarySim::horizon_for(gamma), stream(0, "self", 0));
    let mut oracle = InteractiveOracle::new(mdp.clone(), uniform, stream(0, "self-oracle", 0));
    let out = inter_fail(
        &mut sim,
        &mut oracle,
        &DiscriminatorClass::Finite(indicators(3, true)),
        &InterFailConfig { gamma, iterations: n, step_size: None },
        &mut stream(0, "self-game", 0),
    )
    .unwrap();
    let bound = 3.0 * (4.0 * (2.0 / n as f64)).sqrt();
    assert!(out.transcript.best_value() <= bound, "{} > {bound}", out.transcript.best_value());
}

#[test]
fn geometric_stopping_has_the_discounted_mean() {
    let mut rng = stream(0, "geom", 0);
    for gamma in [0.5, 0.9, 0.99] {
        let xs: Vec<f64> = (0..10_000).map(|_| geometric_stop(gamma, &mut rng) as f64).collect();
        let (m, _) = common::mean_and_stderr(&xs);
        let sigma = (gamma as f64).sqrt() / (1.0 - gamma) / (10_000f64).sqrt();
        assert!((m - 1.0 / (1.0 - gamma)).abs() <= 3.0 * sigma, "gamma {gamma}: {m}");
    }
}
