mod common;

use std::sync::Arc;

use common::{probs, random_mdp, random_policy};
use obsrl::approx::{Bandwidth, DiscriminatorClass, PolicyClass, QClass, QFunction, TabularQ};
use obsrl::backward::BackwardConfig;
use obsrl::data::collect_eps_greedy;
use obsrl::envs::{make_binary_tree, make_comb_lock, make_one_step_hardness, ObservationMode, ACTIONS};
use obsrl::foobar::{discriminators_from_values, run_foobar, DiscriminatorMode, FoobarConfig};
use obsrl::forward::{ForwardConfig, GameConfig};
use obsrl::hardness::{one_step_report, reset_solver_demo, trace_search_demo, SearchStrategy};
use obsrl::mdp::{exact_occupancy, success_probability, LatentMdpBuilder, Policy, Reward, TabularSim};
use obsrl::metrics::{
    coverage_density_ratio, coverage_perf_diff, divergences, relative_success, tv_minimizing_policy, PolicySet,
};
use obsrl::rng::stream;
use proptest::prelude::*;
use rand::Rng;

fn small_foobar(seed: u64) -> (obsrl::envs::CombLock, obsrl::foobar::FoobarRun<usize>) {
    let lock = make_comb_lock(4, seed, ObservationMode::Latent).unwrap();
    let mut sim = lock.latent_sim(stream(seed, "offline-sim", 0));
    let data = collect_eps_greedy(&mut sim, "comb-lock", &lock.optimal_policy(), 0.1, 1000, seed).unwrap();
    let config = FoobarConfig {
        forward: ForwardConfig { samples_per_level: 1000, game: GameConfig { iterations: 300, step_size: None } },
        backward: BackwardConfig { samples_per_level: 2000 },
        policy_classes: vec![PolicyClass::Tabular],
        q_classes: vec![QClass::Tabular],
        discriminators: DiscriminatorMode::Mmd(Bandwidth::Median),
        reward_range: lock.mdp.reward_range(),
    };
    let mut sim = lock.latent_sim(stream(seed, "foobar-sim", 0));
    let run = run_foobar(&mut sim, &data, &config, seed).unwrap();
    (lock, run)
}

fn same_actions(a: &Policy<usize>, b: &Policy<usize>, states: &[usize]) -> bool {
    states
        .iter()
        .enumerate()
        .all(|(h, &n)| (0..n).all(|s| probs(a, h, s, ACTIONS) == probs(b, h, s, ACTIONS)))
}

#[test]
fn foobar_is_deterministic_given_the_seed() {
    let (lock, a) = small_foobar(7);
    let (_, b) = small_foobar(7);
    assert_eq!(a.forward.transcripts, b.forward.transcripts);
    assert_eq!(a.backward.samples, b.backward.samples);
    assert!(same_actions(&a.backward.policy(), &b.backward.policy(), lock.mdp.state_counts()));
    assert!(same_actions(&a.forward.policy(), &b.forward.policy(), lock.mdp.state_counts()));
}

#[test]
fn mixed_policy_endpoints_are_the_pure_phases() {
    let (lock, run) = small_foobar(3);
    let states = lock.mdp.state_counts();
    let levels = lock.levels();
    assert!(same_actions(&run.mixed_policy(0).unwrap(), &run.backward.policy(), states));
    assert!(same_actions(&run.mixed_policy(levels).unwrap(), &run.forward.policy(), states));
    assert!(run.mixed_policy(levels + 1).is_err());
    let start = success_probability(&lock.mdp, &run.mixed_policy(0).unwrap()).unwrap();
    let end = success_probability(&lock.mdp, &run.mixed_policy(levels).unwrap()).unwrap();
    assert!(start >= end - 0.05, "{start} vs {end}");
}

#[test]
fn value_discriminators_come_from_the_value_class() {
    let members: Vec<Arc<dyn QFunction<usize>>> = (0..4u64)
        .map(|i| {
            let mut rng = stream(i, "members", 0);
            Arc::new(TabularQ {
                actions: ACTIONS,
                table: (0..3).map(|_| (0..ACTIONS).map(|_| rng.gen_range(0.0..1.0)).collect()).collect(),
            }) as Arc<dyn QFunction<usize>>
        })
        .collect();
    let classes = discriminators_from_values(&[QClass::Finite { members: members.clone() }], 5).unwrap();
    assert_eq!(classes.len(), 5);
    for class in &classes {
        match class {
            DiscriminatorClass::Finite(gs) => assert_eq!(gs.len(), members.len() * ACTIONS),
            _ => panic!("expected a finite class"),
        }
    }
    assert!(discriminators_from_values::<usize>(&[QClass::Tabular], 5).is_err());
}

#[test]
fn coverage_of_a_distribution_against_itself_is_one() {
    let mdp = random_mdp(1, &[2, 3, 3], 2);
    let occ = exact_occupancy(&mdp, &random_policy(1, &mdp)).unwrap();
    let report = coverage_density_ratio(&occ, &occ.levels);
    assert!((report.aggregate() - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn advantage_coverage_is_at_most_density_coverage(seed in 0u64..100_000) {
        let mdp = random_mdp(seed, &[2, 2, 2], 2);
        let target = random_policy(seed, &mdp);
        let reference = exact_occupancy(&mdp, &random_policy(seed + 1, &mdp)).unwrap();
        let density = coverage_density_ratio(&exact_occupancy(&mdp, &target).unwrap(), &reference.levels).aggregate();
        let pd = coverage_perf_diff(&mdp, &target, &reference.levels, None).unwrap().aggregate();
        prop_assert!(pd <= density + 1e-9, "{pd} > {density}");
    }

    #[test]
    fn divergences_are_symmetric_and_bounded(
        a in prop::collection::vec(0.0f64..1.0, 5),
        b in prop::collection::vec(0.0f64..1.0, 5),
        c in prop::collection::vec(0.0f64..1.0, 5),
    ) {
        let norm = |v: Vec<f64>| -> Vec<f64> {
            let z: f64 = v.iter().sum::<f64>() + 1e-9;
            v.into_iter().map(|x| (x + 1e-9 / 5.0) / z).collect()
        };
        let (p, q, r) = (norm(a), norm(b), norm(c));
        let pq = divergences(&p, &q).unwrap();
        let qp = divergences(&q, &p).unwrap();
        prop_assert!((pq.tv - qp.tv).abs() < 1e-15 && (pq.js - qp.js).abs() < 1e-12);
        let pr = divergences(&p, &r).unwrap();
        let rq = divergences(&r, &q).unwrap();
        prop_assert!(pq.tv <= pr.tv + rq.tv + 1e-12);
        prop_assert!(pq.js >= 0.0 && pq.js <= std::f64::consts::LN_2 + 1e-12);
        prop_assert!((pq.tv - common::tv(&p, &q)).abs() < 1e-12);
    }
}

#[test]
fn single_action_instances_have_unit_advantage_coverage() {
    let mdp = random_mdp(2, &[2, 3], 1);
    let pi = Policy::uniform(0, 2, 1);
    let reference = vec![vec![1.0, 0.0], vec![0.0, 0.0, 1.0]];
    assert_eq!(coverage_perf_diff(&mdp, &pi, &reference, None).unwrap().aggregate(), 1.0);
}

#[test]
fn disjoint_point_masses_are_maximally_apart() {
    let d = divergences(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
    assert_eq!(d.tv, 1.0);
    assert!((d.js - std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn one_step_mixture_and_witness() {
    let r = one_step_report(1e-4).unwrap();
    // balance 0.95 p - 0.85 = 0.85 - 0.95 p at the weight where the TV bottoms out
    let p = 0.85 / 0.95;
    assert!((r.mixture_weight - p).abs() <= 1e-4, "{}", r.mixture_weight);
    assert!((r.mixture_tv - 0.1 * p).abs() <= 1e-4, "{}", r.mixture_tv);
    assert!((r.mixture_weight - 0.8947).abs() < 1e-4 && (r.mixture_tv - 0.0895).abs() < 1e-4);
    assert_eq!(r.witness, Some((1, 2)));
    assert!(!r.minimizer_covers);
    let hard = make_one_step_hardness().unwrap();
    let det = tv_minimizing_policy(&hard.mdp, &hard.offline, PolicySet::Deterministic).unwrap();
    let coarse = tv_minimizing_policy(&hard.mdp, &hard.offline, PolicySet::Grid(1.0)).unwrap();
    assert_eq!(det.0, coarse.0);
    assert_eq!(det.1, coarse.1);
}

#[test]
fn relative_success_divides_by_the_optimum() {
    let mut b = LatentMdpBuilder::new(vec![1], 1).initial(vec![1.0]).reward_range(0.0, 1.0);
    b.reward(0, 0, 0, Reward::fixed(1.0));
    let mut sim = TabularSim::new(Arc::new(b.build().unwrap()), stream(0, "sim", 0));
    let pi = Policy::uniform(0, 1, 1);
    let r = relative_success(&mut sim, &pi, 100, 0.8, &mut stream(0, "eval", 0)).unwrap();
    assert!((r - 1.25).abs() < 1e-12);
    assert!(relative_success(&mut sim, &pi, 100, 0.0, &mut stream(0, "eval", 0)).is_err());
}

#[test]
fn random_trace_search_stays_far_from_the_data_on_deep_trees() {
    let mut far = 0;
    let mut recovered = 0;
    for seed in 0..100u64 {
        let (tree, data) = make_binary_tree(12, seed).unwrap();
        let r = trace_search_demo(&tree, &data, 1 << 10, SearchStrategy::Random, seed).unwrap();
        far += (r.tv.unwrap() >= 0.5) as usize;
        let reset = reset_solver_demo(&tree, &data).unwrap();
        recovered += (reset.path_recovered && reset.reset_queries <= 48) as usize;
    }
    assert_eq!(far, 100);
    assert_eq!(recovered, 100);
}

#[test]
fn shallow_trees_are_solved_by_both_models() {
    for seed in 0..20u64 {
        let (tree, data) = make_binary_tree(2, seed).unwrap();
        assert_eq!(trace_search_demo(&tree, &data, 4, SearchStrategy::Breadth, seed).unwrap().tv, Some(0.0));
        assert_eq!(trace_search_demo(&tree, &data, 0, SearchStrategy::Breadth, seed).unwrap().tv, Some(1.0));
        let r = reset_solver_demo(&tree, &data).unwrap();
        assert!(r.path_recovered && r.reset_queries <= 8);
    }
}

#[test]
fn breadth_search_tv_is_non_increasing_in_the_budget() {
    let (tree, data) = make_binary_tree(8, 4).unwrap();
    let mut last = 1.0;
    for budget in 0..=160u64 {
        let tv = trace_search_demo(&tree, &data, budget, SearchStrategy::Breadth, 0).unwrap().tv.unwrap();
        assert!(tv <= last + 1e-15, "budget {budget}: {tv} > {last}");
        last = tv;
    }
}

#[test]
fn reset_queries_grow_linearly_with_depth() {
    for depth in 4..=16 {
        for seed in 0..5u64 {
            let (tree, data) = make_binary_tree(depth, seed).unwrap();
            let r = reset_solver_demo(&tree, &data).unwrap();
            assert!(r.path_recovered);
            assert!(r.reset_queries as usize <= 4 * depth, "depth {depth}: {}", r.reset_queries);
            assert!(r.reset_queries as usize >= depth - 1);
        }
    }
}
