mod common;

use std::sync::Arc;

use common::{histogram, random_policy, tv};
use obsrl::data::{
    collect_adversarial, collect_benign_inadmissible, collect_eps_greedy, eps_greedy_policy, inadmissible_marginal,
    load_dataset, load_dataset_expecting, parse_dataset, save_dataset, write_dataset, Provenance, StateOnlyDataset,
};
use obsrl::envs::{
    hadamard, make_adversarial_lock, make_binary_tree, make_comb_lock, make_one_step_hardness, observation_dim,
    ObservationEncoder, ObservationMode, ACTIONS, GOOD_STATES,
};
use obsrl::mdp::{exact_occupancy, optimal_q, parse_mdp, success_probability, write_mdp, Policy, Rule, TabularRule};
use obsrl::metrics::{coverage_density_ratio, divergences};
use obsrl::rng::stream;
use proptest::prelude::*;

#[test]
fn observation_width_is_the_next_power_of_two() {
    assert_eq!(observation_dim(10), 16);
    assert_eq!(observation_dim(100), 128);
    let lock = make_comb_lock(10, 0, ObservationMode::Rich).unwrap();
    assert_eq!(lock.encoder.unwrap().dim(), 16);
    let lock = make_comb_lock(100, 0, ObservationMode::Rich).unwrap();
    assert_eq!(lock.encoder.unwrap().dim(), 128);
}

#[test]
fn hadamard_rows_are_exactly_orthogonal() {
    for d in [1usize, 2, 4, 8, 16, 32, 64, 128, 256] {
        let m = hadamard(d);
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = m[i].iter().zip(&m[j]).map(|(a, b)| a * b).sum();
                assert_eq!(dot, if i == j { d as f64 } else { 0.0 });
            }
        }
    }
}

#[test]
fn noiseless_encodings_decode_exactly_and_differ() {
    let enc = ObservationEncoder::new(3, 11, 0.0);
    let mut rng = stream(0, "enc", 0);
    let mut seen = Vec::new();
    for h in 0..11 {
        for z in 0..3 {
            let x = enc.encode(z, h, &mut rng);
            assert_eq!(enc.decode(&x).unwrap(), (z, h));
            assert!(!seen.contains(&x));
            seen.push(x);
        }
    }
}

#[test]
fn noisy_encoding_mean_is_the_noiseless_encoding() {
    let noisy = ObservationEncoder::new(3, 11, 0.1);
    let clean = ObservationEncoder::new(3, 11, 0.0);
    let mut rng = stream(1, "enc", 0);
    let target = clean.encode(1, 4, &mut rng);
    let n = 10_000;
    let mut mean = vec![0.0; noisy.dim()];
    for _ in 0..n {
        for (m, x) in mean.iter_mut().zip(noisy.encode(1, 4, &mut rng)) {
            *m += x / n as f64;
        }
    }
    // each output sums 14 independent noise coordinates with unit weights
    let sigma = (14.0f64).sqrt() * 0.1 / (n as f64).sqrt();
    for (m, t) in mean.iter().zip(&target) {
        assert!((m - t).abs() <= 3.0 * sigma, "{m} vs {t}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lock_good_mass_never_increases(seed in 0u64..100_000, adversarial in any::<bool>()) {
        let lock = if adversarial {
            make_adversarial_lock(10, seed, ObservationMode::Latent).unwrap()
        } else {
            make_comb_lock(10, seed, ObservationMode::Latent).unwrap()
        };
        let occ = exact_occupancy(&lock.mdp, &random_policy(seed, &lock.mdp)).unwrap();
        let good: Vec<f64> = (0..lock.levels()).map(|h| GOOD_STATES.iter().map(|&s| occ.level(h)[s]).sum()).collect();
        for w in good.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn one_wrong_action_forfeits_the_terminal_reward(seed in 0u64..100_000, level in 0usize..10, state in 0usize..2) {
        let lock = make_comb_lock(10, seed, ObservationMode::Latent).unwrap();
        let star = lock.optimal_policy();
        let mut rules: Vec<Rule<usize>> = star.rules().unwrap().to_vec();
        let mut choice = vec![lock.correct[level][0], lock.correct[level][1], 0];
        choice[state] = (choice[state] + 1) % ACTIONS;
        rules[level] = Arc::new(TabularRule::deterministic(ACTIONS, &choice));
        let p = success_probability(&lock.mdp, &Policy::new(0, rules)).unwrap();
        // the branch through the altered state never reaches the reward
        let mass = exact_occupancy(&lock.mdp, &star).unwrap().level(level)[state];
        prop_assert!((p - (1.0 - mass)).abs() < 1e-12);
    }
}

#[test]
fn adversarial_lock_structure() {
    let lock = make_adversarial_lock(10, 0, ObservationMode::Latent).unwrap();
    let (q, greedy) = optimal_q(&lock.mdp);
    assert!((success_probability(&lock.mdp, &lock.optimal_policy()).unwrap() - 0.1).abs() < 1e-12);
    assert!((success_probability(&lock.mdp, &greedy).unwrap() - 0.1).abs() < 1e-12);
    let _ = q;
    for a in 0..ACTIONS {
        assert_eq!(lock.mdp.transition(1, 1, a), &[(2, 1.0)]);
    }
    for h in 0..lock.transitions {
        for s in 0..3 {
            for a in 0..ACTIONS {
                let total: f64 = lock.mdp.transition(h, s, a).iter().map(|e| e.1).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn tree_dataset_has_two_states_and_constant_coverage() {
    let (tree, data) = make_binary_tree(12, 4).unwrap();
    assert!(data.levels().iter().all(|l| l.len() == 2));
    for h in 1..tree.depth {
        let level = data.level(h);
        assert!(level.contains(&tree.optimal[h]));
        assert!(level.contains(&tree.distractors[h].unwrap()));
        assert_ne!(tree.optimal[h], tree.distractors[h].unwrap());
    }
    for h in 3..tree.depth {
        assert_ne!(tree.distractors[h].unwrap() / 2, tree.distractors[h - 1].unwrap());
    }
    let mdp = tree.latent_mdp().unwrap();
    let rules: Vec<Rule<usize>> = (0..tree.depth)
        .map(|h| {
            let choice: Vec<usize> = (0..mdp.num_states(h))
                .map(|s| if h + 1 < tree.depth && tree.optimal[h] == s { tree.optimal[h + 1] % 2 } else { 0 })
                .collect();
            Arc::new(TabularRule::deterministic(2, &choice)) as Rule<usize>
        })
        .collect();
    let star = Policy::new(0, rules);
    assert_eq!(success_probability(&mdp, &star).unwrap(), 1.0);
    let marginals = data.empirical_marginals(mdp.state_counts()).unwrap();
    for h in 1..tree.depth {
        assert_eq!(marginals[h][tree.optimal[h]], 0.5);
    }
    let cov = coverage_density_ratio(&exact_occupancy(&mdp, &star).unwrap(), &marginals);
    assert_eq!(cov.aggregate(), 2.0);
}

#[test]
fn one_step_constants() {
    let hard = make_one_step_hardness().unwrap();
    let d = |p: [f64; 2]| obsrl::metrics::one_step_distribution(&hard.mdp, &p).unwrap();
    assert!((divergences(&d([1.0, 0.0]), &hard.offline).unwrap().tv - 0.1).abs() < 1e-12);
    assert!((divergences(&d([0.0, 1.0]), &hard.offline).unwrap().tv - 0.85).abs() < 1e-12);
    let star = d([0.0, 1.0]);
    let ratio = (0..3).filter(|&s| star[s] > 0.0).map(|s| star[s] / hard.offline[s]).fold(0.0, f64::max);
    assert!((ratio - 18.0).abs() < 1e-12);
    let reparsed = parse_mdp(&write_mdp(&hard.mdp)).unwrap();
    assert_eq!(reparsed, hard.mdp);
}

/// Product of per-level probabilities of keeping a good state under eps-greedy.
fn eps_greedy_coverage(transitions: usize, eps: f64) -> f64 {
    let keep = 1.0 - eps + eps / ACTIONS as f64;
    (0..transitions).map(|_| 1.0 / keep).product()
}

#[test]
fn admissible_exact_coverage() {
    for transitions in [9usize, 10] {
        let lock = make_comb_lock(transitions, 0, ObservationMode::Latent).unwrap();
        let star = exact_occupancy(&lock.mdp, &lock.optimal_policy()).unwrap();
        let behavior = exact_occupancy(&lock.mdp, &eps_greedy_policy(&lock.optimal_policy(), 0.1).unwrap()).unwrap();
        let c = coverage_density_ratio(&star, &behavior.levels).aggregate();
        assert!((c - eps_greedy_coverage(transitions, 0.1)).abs() < 1e-9, "{transitions}: {c}");
    }
    assert!((eps_greedy_coverage(9, 0.1) - 2.33).abs() < 0.01);
    assert!((eps_greedy_coverage(10, 0.1) - 2.568).abs() < 0.001);
}

#[test]
fn admissible_empirical_marginals_converge() {
    for eps in [0.0, 0.1] {
        let lock = make_comb_lock(10, 3, ObservationMode::Latent).unwrap();
        let behavior = eps_greedy_policy(&lock.optimal_policy(), eps).unwrap();
        let mut sim = lock.latent_sim(stream(3, "admissible", 0));
        let data = collect_eps_greedy(&mut sim, "comb-lock", &lock.optimal_policy(), eps, 10_000, 3).unwrap();
        let exact = exact_occupancy(&lock.mdp, &behavior).unwrap();
        let emp = data.empirical_marginals(lock.mdp.state_counts()).unwrap();
        for h in 0..lock.levels() {
            assert!(tv(&emp[h], exact.level(h)) <= 0.03, "eps {eps} level {h}");
        }
        if eps == 0.0 {
            assert!(tv(&emp[1], &[0.5, 0.5, 0.0]) <= 0.03);
            let star = exact_occupancy(&lock.mdp, &lock.optimal_policy()).unwrap();
            assert_eq!(star, exact);
        }
    }
}

#[test]
fn measured_admissible_coverage_lies_between_two_and_three() {
    let lock = make_comb_lock(10, 0, ObservationMode::Latent).unwrap();
    let star = exact_occupancy(&lock.mdp, &lock.optimal_policy()).unwrap();
    let mut values = Vec::new();
    for seed in 0..10 {
        let mut sim = lock.latent_sim(stream(seed, "offline-sim", 0));
        let data = collect_eps_greedy(&mut sim, "comb-lock", &lock.optimal_policy(), 0.1, 2000, seed).unwrap();
        let emp = data.empirical_marginals(lock.mdp.state_counts()).unwrap();
        values.push(coverage_density_ratio(&star, &emp).aggregate());
    }
    let m = common::median(&values);
    assert!((2.0..=3.0).contains(&m), "median coverage {m}");
}

#[test]
fn inadmissible_marginals() {
    let good = |h: usize| -> f64 {
        let m = inadmissible_marginal(h).unwrap();
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        m[0] + m[1]
    };
    assert!((good(1) - 0.15).abs() < 1e-12);
    assert!((good(10) - 1.0).abs() < 1e-12);
    for h in 1..10 {
        assert!(good(h + 1) > good(h));
    }
    assert!(inadmissible_marginal(11).is_err());
    let lock = make_comb_lock(10, 0, ObservationMode::Latent).unwrap();
    let data = collect_benign_inadmissible(&lock, 20_000, 0).unwrap();
    let emp = data.empirical_marginals(lock.mdp.state_counts()).unwrap();
    for h in 0..lock.levels() {
        assert!(tv(&emp[h], &inadmissible_marginal(h).unwrap()) <= 0.02);
    }
    // increasing good mass is unreachable by any policy, whose good mass never grows
    let occ = exact_occupancy(&lock.mdp, &random_policy(9, &lock.mdp)).unwrap();
    let g = |h: usize| occ.level(h)[0] + occ.level(h)[1];
    assert!(g(10) <= g(1));
}

#[test]
fn provenance_and_seed_determine_content() {
    let lock = make_comb_lock(10, 0, ObservationMode::Latent).unwrap();
    let a = collect_benign_inadmissible(&lock, 500, 4).unwrap();
    let b = collect_benign_inadmissible(&lock, 500, 4).unwrap();
    let c = collect_benign_inadmissible(&lock, 500, 5).unwrap();
    let d = collect_adversarial(&lock, 500, 4).unwrap();
    assert_eq!(write_dataset(&a), write_dataset(&b));
    assert_ne!(a.levels(), c.levels());
    assert_eq!(a.levels(), d.levels());
    assert_ne!(write_dataset(&a), write_dataset(&d));
    let run = |seed| {
        let mut sim = lock.latent_sim(stream(seed, "offline-sim", 0));
        collect_eps_greedy(&mut sim, "comb-lock", &lock.optimal_policy(), 0.1, 300, seed).unwrap()
    };
    assert_eq!(write_dataset(&run(2)), write_dataset(&run(2)));
}

#[test]
fn dataset_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let lock = make_comb_lock(10, 0, ObservationMode::Rich).unwrap();
    let latent = collect_benign_inadmissible(&lock, 50, 1).unwrap();
    let path = dir.path().join("latent.txt");
    save_dataset(&latent, &path).unwrap();
    assert_eq!(load_dataset::<usize>(&path).unwrap(), latent);
    assert!(load_dataset_expecting::<usize>(&path, 11).is_ok());
    assert!(load_dataset_expecting::<usize>(&path, 10).is_err());
    let rich = latent.encode(lock.encoder.as_ref().unwrap(), &mut stream(1, "enc", 0));
    let text = write_dataset(&rich);
    let back: StateOnlyDataset<Vec<f64>> = parse_dataset(&text).unwrap();
    for (x, y) in back.levels().iter().flatten().zip(rich.levels().iter().flatten()) {
        assert!(x.iter().zip(y).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn single_state_dataset_is_a_point_mass() {
    let data = StateOnlyDataset::new_latent("t", Provenance::Other("test".into()), 0, vec![vec![2; 7]]);
    assert_eq!(data.empirical_marginals(&[3]).unwrap()[0], vec![0.0, 0.0, 1.0]);
    assert!(tv(&histogram(data.level(0), 3), &[0.0, 0.0, 1.0]) < 1e-12);
}
