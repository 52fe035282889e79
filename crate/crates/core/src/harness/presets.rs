use std::path::Path;
use std::sync::Arc;

use rand::RngCore;

use super::config::{Algorithm, ExperimentConfig, Preset};
use super::records::{Record, Recorder};
use crate::approx::{Bandwidth, DiscriminatorClass, PolicyClass, QClass, RawFeatures};
use crate::backward::{cpi_trace, psdp_reset, psdp_trace, AdvantageMode, BackwardConfig, CpiConfig};
use crate::data::{
    collect_adversarial, collect_benign_inadmissible, collect_eps_greedy, eps_greedy_policy, save_dataset,
    InteractiveOracle, StateOnlyDataset,
};
use crate::envs::{
    make_adversarial_lock, make_binary_tree, make_comb_lock, make_stationary_lock, CombLock, ObservationEncoder,
    ObservationMode,
};
use crate::error::{Error, Result};
use crate::foobar::{run_foobar, DiscriminatorMode, FoobarConfig};
use crate::forward::{inter_fail, ForwardConfig, GameConfig, InterFailConfig};
use crate::hardness::{one_step_report, reset_solver_demo, trace_search_demo, SearchStrategy};
use crate::mdp::stationary::{StationaryMixture, StationaryPolicy, StationarySim};
use crate::mdp::{
    exact_occupancy, save_mdp, save_policy, success_probability, ActionRule, LatentMdp, Observation, Policy,
    ResetModel, Rule, TraceModel,
};
use crate::metrics::{coverage_density_ratio, divergences, success_rate};
use crate::rng::stream;

/// Run every configured algorithm for one seed. Latent lock runs also leave
/// the MDP, the offline data and the learned policy in `dir`.
pub(crate) fn run_seed(c: &ExperimentConfig, seed: u64, dir: &Path) -> Result<Vec<Record>> {
    let mut rec = Recorder::new(seed);
    match c.preset {
        p if p.is_lock() => run_lock(c, seed, dir, &mut rec)?,
        Preset::HardnessTree => run_tree(c, seed, &mut rec)?,
        Preset::HardnessOnestep => run_onestep(c, &mut rec)?,
        Preset::StationaryLock => run_stationary(c, seed, &mut rec)?,
        _ => unreachable!("every preset is handled"),
    }
    Ok(rec.into_records())
}

fn build_lock(c: &ExperimentConfig, seed: u64) -> Result<CombLock> {
    match c.preset {
        Preset::LockAdversarial => make_adversarial_lock(c.lock.transitions, seed, c.lock.mode),
        _ => make_comb_lock(c.lock.transitions, seed, c.lock.mode),
    }
}

fn lock_epsilon(c: &ExperimentConfig) -> f64 {
    c.lock.epsilon.unwrap_or(1.0 / c.lock.transitions as f64)
}

fn latent_offline(c: &ExperimentConfig, lock: &CombLock, seed: u64) -> Result<StateOnlyDataset<usize>> {
    let n = c.lock.offline_samples;
    match c.preset {
        Preset::LockAdmissible => {
            let mut sim = lock.latent_sim(stream(seed, "offline-sim", 0));
            collect_eps_greedy(&mut sim, "comb-lock", &lock.optimal_policy(), lock_epsilon(c), n, seed)
        }
        Preset::LockBenign => collect_benign_inadmissible(lock, n, seed),
        _ => collect_adversarial(lock, n, seed),
    }
}

/// Latent rule applied to decoded rich observations; undecodable ones act uniformly.
struct DecodedRule {
    inner: Rule<usize>,
    encoder: Arc<ObservationEncoder>,
}

impl ActionRule<Vec<f64>> for DecodedRule {
    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }
    fn fill_probs(&self, obs: &Vec<f64>, out: &mut [f64]) {
        match self.encoder.decode(obs) {
            Ok((state, _)) => self.inner.fill_probs(&state, out),
            Err(_) => out.fill(1.0 / out.len() as f64),
        }
    }
}

/// Everything a lock run needs in one observation type.
struct LockSetup<'a, O: Observation> {
    offline: StateOnlyDataset<O>,
    foobar: FoobarConfig<O>,
    /// Expert roll-in for the trace-model search.
    expert: Policy<O>,
    optimal: f64,
    episodes: usize,
    /// Exact success probability, latent mode only.
    exact: &'a dyn Fn(&Policy<O>) -> Result<Option<f64>>,
    /// Exact per-level TV and JS to the offline marginals, latent mode only.
    fit: &'a dyn Fn(&Policy<O>) -> Result<Option<Vec<(f64, f64)>>>,
}

fn run_lock(c: &ExperimentConfig, seed: u64, dir: &Path, rec: &mut Recorder) -> Result<()> {
    let lock = build_lock(c, seed)?;
    let mdp = lock.mdp.clone();
    let latent = latent_offline(c, &lock, seed)?;
    let marginals = latent.empirical_marginals(mdp.state_counts())?;
    let star = exact_occupancy(&mdp, &lock.optimal_policy())?;
    rec.push("data", 0, 0, "coverage", coverage_density_ratio(&star, &marginals).aggregate());
    let forward = ForwardConfig {
        samples_per_level: c.forward.samples_per_level,
        game: GameConfig {
            iterations: c.forward.iterations,
            step_size: c.forward.step_size,
        },
    };
    let backward = BackwardConfig {
        samples_per_level: c.backward.samples_per_level.unwrap_or(4000),
    };
    let reward_range = mdp.reward_range();
    let expert = eps_greedy_policy(&lock.optimal_policy(), lock_epsilon(c))?;
    match c.lock.mode {
        ObservationMode::Latent => {
            let exact = |p: &Policy<usize>| -> Result<Option<f64>> { Ok(Some(success_probability(&mdp, p)?)) };
            let fit = |p: &Policy<usize>| -> Result<Option<Vec<(f64, f64)>>> {
                let occ = exact_occupancy(&mdp, p)?;
                let per = occ
                    .levels
                    .iter()
                    .zip(&marginals)
                    .map(|(d, m)| divergences(d, m).map(|x| (x.tv, x.js)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Some(per))
            };
            let setup = LockSetup {
                offline: latent.clone(),
                foobar: FoobarConfig {
                    forward,
                    backward,
                    policy_classes: vec![PolicyClass::Tabular],
                    q_classes: vec![QClass::Tabular],
                    discriminators: DiscriminatorMode::Mmd(c.forward.bandwidth),
                    reward_range,
                },
                expert,
                optimal: lock.optimal_success(),
                episodes: c.lock.evaluation_episodes,
                exact: &exact,
                fit: &fit,
            };
            let make = |name: &str| lock.latent_sim(stream(seed, name, 0));
            let learned = lock_algorithms(c, seed, rec, &setup, make)?;
            let tag = |name: &str| dir.join(format!("seed-{seed}-{name}.txt"));
            save_mdp(&mdp, &tag("mdp"))?;
            save_dataset(&latent, &tag("data"))?;
            for (name, policy) in learned {
                save_policy(&policy, mdp.state_counts(), &tag(&format!("policy-{name}")))?;
            }
        }
        ObservationMode::Rich => {
            let encoder = lock.encoder.clone().ok_or_else(|| Error::Config("lock has no encoder".into()))?;
            let features = Arc::new(RawFeatures { dim: encoder.dim() });
            let decoded = |p: &Policy<usize>| -> Result<Policy<Vec<f64>>> {
                let rules = p
                    .rules()
                    .ok_or_else(|| Error::Unsupported("mixture expert".into()))?
                    .iter()
                    .map(|r| {
                        Arc::new(DecodedRule {
                            inner: r.clone(),
                            encoder: encoder.clone(),
                        }) as Rule<Vec<f64>>
                    })
                    .collect();
                Ok(Policy::new(p.start(), rules))
            };
            let none_f = |_: &Policy<Vec<f64>>| -> Result<Option<f64>> { Ok(None) };
            let none_d = |_: &Policy<Vec<f64>>| -> Result<Option<Vec<(f64, f64)>>> { Ok(None) };
            let setup = LockSetup {
                offline: latent.encode(&encoder, &mut stream(seed, "offline-noise", 0)),
                foobar: FoobarConfig {
                    forward,
                    backward,
                    policy_classes: vec![PolicyClass::Softmax {
                        features: features.clone(),
                        lr: c.forward.policy_lr,
                        steps: c.forward.policy_steps,
                    }],
                    q_classes: vec![QClass::Regressor {
                        features,
                        config: c.backward.regressor,
                    }],
                    discriminators: DiscriminatorMode::Mmd(c.forward.bandwidth),
                    reward_range,
                },
                expert: decoded(&expert)?,
                optimal: lock.optimal_success(),
                episodes: c.lock.evaluation_episodes,
                exact: &none_f,
                fit: &none_d,
            };
            let make = |name: &str| {
                lock.rich_sim(stream(seed, name, 0), stream(seed, name, 1))
                    .expect("rich lock has an encoder")
            };
            lock_algorithms(c, seed, rec, &setup, make)?;
        }
    }
    Ok(())
}

/// Push the empirical and, when available, exact relative success of `policy`.
fn push_success<M: TraceModel>(
    rec: &mut Recorder,
    setup: &LockSetup<'_, M::Obs>,
    eval: &mut M,
    phase: &str,
    prefix: &str,
    step: usize,
    samples: u64,
    policy: &Policy<M::Obs>,
    seed: u64,
) -> Result<()> {
    let mut rng = stream(seed, "evaluation", step as u64);
    let rate = success_rate(eval, policy, setup.episodes, &mut rng)?;
    rec.push(phase, step, samples, &format!("{prefix}relative_success"), rate / setup.optimal);
    if let Some(p) = (setup.exact)(policy)? {
        rec.push(phase, step, samples, &format!("{prefix}exact_relative_success"), p / setup.optimal);
    }
    Ok(())
}

fn lock_algorithms<M, F>(
    c: &ExperimentConfig,
    seed: u64,
    rec: &mut Recorder,
    setup: &LockSetup<'_, M::Obs>,
    make: F,
) -> Result<Vec<(&'static str, Policy<M::Obs>)>>
where
    M: ResetModel,
    F: Fn(&str) -> M,
{
    let mut learned = vec![];
    let mut eval = make("evaluation-sim");
    let levels = setup.offline.horizon();
    for alg in c.algorithms() {
        match alg {
            Algorithm::Foobar => {
                let mut model = make("foobar-sim");
                let run = run_foobar(&mut model, &setup.offline, &setup.foobar, seed)?;
                let fwd = run.forward.policy();
                let fits = (setup.fit)(&fwd)?;
                for (h, t) in run.forward.transcripts.iter().enumerate() {
                    let samples = run.forward.samples[h];
                    rec.push("forward", h + 1, samples, "game_value", t.best_value());
                    if let Some(f) = &fits {
                        rec.push("forward", h + 1, samples, "tv", f[h + 1].0);
                        rec.push("forward", h + 1, samples, "js", f[h + 1].1);
                    }
                }
                let fwd_total = run.forward.samples.last().copied().unwrap_or(0);
                push_success(rec, setup, &mut eval, "foobar", "forward_", 0, fwd_total, &fwd, seed)?;
                for h in (0..levels).rev() {
                    let samples = run.backward.samples[levels - 1 - h];
                    let mixed = run.mixed_policy(h)?;
                    push_success(rec, setup, &mut eval, "backward", "", h, samples, &mixed, seed)?;
                }
                let total = model.steps_taken();
                push_success(rec, setup, &mut eval, "foobar", "", 0, total, &run.mixed_policy(0)?, seed)?;
                learned.push(("forward", fwd));
                learned.push(("foobar", run.mixed_policy(0)?));
            }
            Algorithm::PsdpReset | Algorithm::PsdpTrace => {
                let mut model = make(alg.name());
                let mut rng = stream(seed, alg.name(), 0);
                let f = &setup.foobar;
                let result = if alg == Algorithm::PsdpReset {
                    psdp_reset(&mut model, &setup.offline, &f.q_classes, f.reward_range, &f.backward, &mut rng)?
                } else {
                    psdp_trace(&mut model, &setup.expert, &f.q_classes, f.reward_range, &f.backward, &mut rng)?
                };
                let samples = model.steps_taken() + model.resets();
                push_success(rec, setup, &mut eval, alg.name(), "", 0, samples, &result.policy(), seed)?;
                learned.push((alg.name(), result.policy()));
            }
            Algorithm::Cpi | Algorithm::InterFail => {
                return Err(Error::Config(format!("{} does not apply to lock presets", alg.name())))
            }
        }
    }
    Ok(learned)
}

fn run_tree(c: &ExperimentConfig, seed: u64, rec: &mut Recorder) -> Result<()> {
    let strategy: SearchStrategy = c.tree.strategy.parse()?;
    let (mut episodes, mut queries) = (0u64, 0u64);
    for r in 0..c.tree.runs {
        let tree_seed = stream(seed, "tree", r as u64).next_u64();
        let (tree, data) = make_binary_tree(c.tree.depth, tree_seed)?;
        let trace = trace_search_demo(&tree, &data, c.tree.budget, strategy, tree_seed)?;
        episodes += trace.episodes;
        rec.push("trace-search", r, episodes, "tv", trace.tv.unwrap_or(1.0));
        let reset = reset_solver_demo(&tree, &data)?;
        queries += reset.reset_queries;
        rec.push("reset-solver", r, queries, "recovered", f64::from(u8::from(reset.path_recovered)));
        rec.push("reset-solver", r, queries, "queries", reset.reset_queries as f64);
    }
    Ok(())
}

fn run_onestep(c: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let r = one_step_report(c.onestep.grid_step)?;
    for (metric, value) in [
        ("coverage", r.coverage),
        ("tv_action", r.tv_action as f64),
        ("tv", r.tv),
        ("mixture_weight", r.mixture_weight),
        ("mixture_tv", r.mixture_tv),
        ("minimizer_covers", f64::from(u8::from(r.minimizer_covers))),
    ] {
        rec.push("onestep", 0, 0, metric, value);
    }
    Ok(())
}

fn run_stationary(c: &ExperimentConfig, seed: u64, rec: &mut Recorder) -> Result<()> {
    let s = &c.stationary;
    let lock = make_stationary_lock(s.actions, seed)?;
    let mdp = lock.mdp.clone();
    let horizon = s.horizon.unwrap_or_else(|| StationarySim::horizon_for(s.gamma));
    let oracle_policy = lock.eps_greedy(s.oracle_epsilon)?;
    let optimal = mdp.start_value(&lock.optimal_policy(), s.gamma);
    let relative = |v: f64| v / optimal;
    let oracle_occ = mdp.discounted_occupancy(&oracle_policy, s.gamma, mdp.initial());
    rec.push("oracle", 0, 0, "relative_value", relative(mdp.start_value(&oracle_policy, s.gamma)));
    let mut roll_in = StationaryPolicy::uniform(mdp.num_states(), s.actions);
    let mut spent = 0u64;
    for alg in c.algorithms() {
        match alg {
            Algorithm::InterFail => {
                let mut sim = StationarySim::new(mdp.clone(), horizon, stream(seed, "inter-fail-sim", 0));
                let mut oracle = InteractiveOracle::new(mdp.clone(), oracle_policy.clone(), stream(seed, "oracle", 0));
                let config = InterFailConfig {
                    gamma: s.gamma,
                    iterations: s.iterations,
                    step_size: s.step_size,
                };
                let r = inter_fail(
                    &mut sim,
                    &mut oracle,
                    &DiscriminatorClass::Mmd(Bandwidth::Median),
                    &config,
                    &mut stream(seed, "inter-fail", 0),
                )?;
                spent += r.env_steps + r.oracle_queries;
                let occ = mdp.discounted_occupancy(&r.policy, s.gamma, mdp.initial());
                let t = s.iterations;
                rec.push("inter-fail", t, spent, "game_value", r.transcript.best_value());
                rec.push("inter-fail", t, spent, "occupancy_tv", divergences(&occ, &oracle_occ)?.tv);
                rec.push("inter-fail", t, spent, "relative_value", relative(mdp.start_value(&r.policy, s.gamma)));
                roll_in = r.policy;
            }
            Algorithm::Cpi => {
                let class = StationaryPolicy::enumerate_deterministic(mdp.num_states(), s.actions);
                let mut sim = StationarySim::new(mdp.clone(), horizon, stream(seed, "cpi-sim", 0));
                let config = CpiConfig {
                    gamma: s.gamma,
                    epsilon: s.epsilon,
                    step: s.step,
                    samples_per_iteration: s.samples_per_iteration,
                    max_iterations: s.max_iterations,
                    advantage: AdvantageMode::MonteCarlo,
                };
                let r = cpi_trace(&mut sim, &roll_in, &class, &config, &mut stream(seed, "cpi", 0))?;
                let mut mixture = StationaryMixture::new(roll_in.clone());
                for it in &r.iterations {
                    let samples = spent + it.samples;
                    let value = mdp.start_value(&mixture.flatten(), s.gamma);
                    rec.push("cpi", it.iteration, samples, "advantage", it.advantage);
                    rec.push("cpi", it.iteration, samples, "relative_value", relative(value));
                    if it.alpha > 0.0 {
                        mixture.update(class[it.candidate].clone(), it.alpha);
                    }
                }
                spent += sim.steps_taken();
            }
            other => return Err(Error::Config(format!("{} does not apply to the stationary preset", other.name()))),
        }
    }
    Ok(())
}

/// Fixed-order report of a stored latent policy against an MDP and a dataset.
pub fn eval_report(mdp: &LatentMdp, policy: &Policy<usize>, data: &StateOnlyDataset<usize>) -> Result<Vec<(String, String)>> {
    if data.horizon() != mdp.horizon() {
        return Err(Error::InvalidHorizon(format!(
            "dataset has {} levels, MDP has {}",
            data.horizon(),
            mdp.horizon()
        )));
    }
    let occ = exact_occupancy(mdp, policy)?;
    let marginals = data.empirical_marginals(mdp.state_counts())?;
    let cover = coverage_density_ratio(&occ, &marginals);
    let mut out = vec![
        ("levels".to_string(), mdp.horizon().to_string()),
        ("success_probability".into(), success_probability(mdp, policy)?.to_string()),
        ("value".into(), crate::mdp::policy_value(mdp, policy)?.to_string()),
        ("coverage".into(), cover.aggregate().to_string()),
        (
            "coverage_witness".into(),
            cover.witness.map_or("none".into(), |(h, s)| format!("{h}:{s}")),
        ),
    ];
    let mut tv_max = 0.0f64;
    for (h, (d, m)) in occ.levels.iter().zip(&marginals).enumerate() {
        let x = divergences(d, m)?;
        tv_max = tv_max.max(x.tv);
        out.push((format!("tv_{h}"), x.tv.to_string()));
        out.push((format!("js_{h}"), x.js.to_string()));
    }
    out.push(("tv_max".into(), tv_max.to_string()));
    Ok(out)
}
