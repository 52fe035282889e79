#![allow(dead_code)]

pub mod games;

use std::sync::Arc;

use obsrl::mdp::{LatentMdp, LatentMdpBuilder, Policy, Reward, Rule, TabularRule};
use obsrl::rng::stream;
use rand::Rng;

/// Random finite-horizon MDP: every transition row has random support and
/// weights, rewards are Bernoulli-scaled values in `[0, 1]`.
pub fn random_mdp(seed: u64, states: &[usize], actions: usize) -> LatentMdp {
    let mut rng = stream(seed, "test-mdp", 0);
    let initial: Vec<f64> = (0..states[0]).map(|_| rng.gen_range(0.05..1.0)).collect();
    let z: f64 = initial.iter().sum();
    let mut b = LatentMdpBuilder::new(states.to_vec(), actions).initial(initial.iter().map(|x| x / z).collect());
    for h in 0..states.len() {
        for s in 0..states[h] {
            for a in 0..actions {
                if h + 1 < states.len() {
                    let mut row: Vec<(usize, f64)> = Vec::new();
                    for n in 0..states[h + 1] {
                        if rng.gen_bool(0.7) {
                            row.push((n, rng.gen_range(0.05..1.0)));
                        }
                    }
                    if row.is_empty() {
                        row.push((rng.gen_range(0..states[h + 1]), 1.0));
                    }
                    let z: f64 = row.iter().map(|e| e.1).sum();
                    b.transition(h, s, a, row.into_iter().map(|(n, p)| (n, p / z)).collect());
                }
                let value = (rng.gen_range(0.0..1.0f64) * 100.0).round() / 100.0;
                let prob = if rng.gen_bool(0.5) { 1.0 } else { 0.5 };
                b.reward(h, s, a, Reward { value, prob });
            }
        }
    }
    b.build().expect("valid random MDP")
}

/// Random stochastic policy over every level of `mdp`.
pub fn random_policy(seed: u64, mdp: &LatentMdp) -> Policy<usize> {
    let mut rng = stream(seed, "test-policy", 0);
    let a = mdp.num_actions();
    let rules = (0..mdp.horizon())
        .map(|h| {
            let probs = (0..mdp.num_states(h))
                .map(|_| {
                    let w: Vec<f64> = (0..a).map(|_| rng.gen_range(0.0..1.0f64) + 1e-3).collect();
                    let z: f64 = w.iter().sum();
                    w.into_iter().map(|x| x / z).collect()
                })
                .collect();
            Arc::new(TabularRule::new(a, probs).unwrap()) as Rule<usize>
        })
        .collect();
    Policy::new(0, rules)
}

/// Action probabilities of a tabular policy at `(h, s)`.
pub fn probs(pi: &Policy<usize>, h: usize, s: usize, actions: usize) -> Vec<f64> {
    let mut p = vec![0.0; actions];
    pi.rule(h).unwrap().fill_probs(&s, &mut p);
    p
}

/// Occupancy and expected return by enumerating every trajectory.
pub fn enumerate_paths(mdp: &LatentMdp, pi: &Policy<usize>) -> (Vec<Vec<f64>>, f64) {
    let mut occ: Vec<Vec<f64>> = (0..mdp.horizon()).map(|h| vec![0.0; mdp.num_states(h)]).collect();
    let mut value = 0.0;
    fn walk(
        mdp: &LatentMdp,
        pi: &Policy<usize>,
        h: usize,
        s: usize,
        mass: f64,
        occ: &mut Vec<Vec<f64>>,
        value: &mut f64,
    ) {
        occ[h][s] += mass;
        let a_n = mdp.num_actions();
        for (a, pa) in probs(pi, h, s, a_n).into_iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            *value += mass * pa * mdp.reward(h, s, a).mean();
            if h + 1 < mdp.horizon() {
                for &(n, p) in mdp.transition(h, s, a) {
                    walk(mdp, pi, h + 1, n, mass * pa * p, occ, value);
                }
            }
        }
    }
    for (s, &p0) in mdp.initial().iter().enumerate() {
        if p0 > 0.0 {
            walk(mdp, pi, 0, s, p0, &mut occ, &mut value);
        }
    }
    (occ, value)
}

pub fn tv(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Empirical distribution of `xs` over `0..n`.
pub fn histogram(xs: &[usize], n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n];
    for &x in xs {
        h[x] += 1.0 / xs.len() as f64;
    }
    h
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Forward phase on the admissible lock against exact occupancies.
pub struct LockFit {
    /// TV between the forward policy's occupancy and the behavior occupancy, per level.
    pub tv: Vec<f64>,
    /// Indicator IPM between the forward occupancy and the empirical offline marginals.
    pub ipm: Vec<f64>,
    /// Per-level error allowance: first matched level IPM plus sampling noise.
    pub slope: f64,
}

impl LockFit {
    /// `ipm_h <= slope * h` at every matched level.
    pub fn within_envelope(&self) -> bool {
        (1..self.ipm.len()).all(|h| self.ipm[h] <= self.slope * h as f64)
    }
}

pub fn admissible_forward_fit(seed: u64) -> LockFit {
    use obsrl::approx::{Bandwidth, DiscriminatorClass, PolicyClass};
    use obsrl::data::{collect_eps_greedy, eps_greedy_policy};
    use obsrl::envs::{make_comb_lock, ObservationMode, ACTIONS};
    use obsrl::forward::{ForwardConfig, GameConfig};
    use obsrl::mdp::exact_occupancy;

    let n = 2000;
    let lock = make_comb_lock(10, seed, ObservationMode::Latent).unwrap();
    let behavior = eps_greedy_policy(&lock.optimal_policy(), 0.1).unwrap();
    let mu = exact_occupancy(&lock.mdp, &behavior).unwrap();
    let mut sim = lock.latent_sim(stream(seed, "offline-sim", 0));
    let data = collect_eps_greedy(&mut sim, "comb-lock", &lock.optimal_policy(), 0.1, n, seed).unwrap();
    let config = ForwardConfig { samples_per_level: n, game: GameConfig { iterations: 1000, step_size: None } };
    let mut sim = lock.latent_sim(stream(seed, "forward-sim", 0));
    let forward = obsrl::forward::fail_forward(
        &mut sim,
        &data,
        &[PolicyClass::Tabular],
        &[DiscriminatorClass::Mmd(Bandwidth::Median)],
        &config,
        &mut stream(seed, "forward", 0),
    )
    .unwrap();
    let occ = exact_occupancy(&lock.mdp, &forward.policy()).unwrap();
    let levels = lock.levels();
    let tv_levels = (0..levels).map(|h| tv(occ.level(h), mu.level(h))).collect();
    let emp = data.empirical_marginals(lock.mdp.state_counts()).unwrap();
    let ipm: Vec<f64> = (0..levels)
        .map(|h| (0..emp[h].len()).map(|s| (occ.level(h)[s] - emp[h][s]).abs()).fold(0.0, f64::max))
        .collect();
    let slope = ipm[1] + 3.0 * (ACTIONS as f64 / n as f64).sqrt();
    LockFit { tv: tv_levels, ipm, slope }
}
