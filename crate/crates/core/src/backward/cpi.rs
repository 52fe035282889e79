use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::stationary::{StationaryMdp, StationaryMixture, StationaryPolicy, StationarySim};
use crate::mdp::TraceModel;
use crate::rng::{categorical, geometric_stop, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepSize {
    Fixed(f64),
    /// `(1 - gamma) * A / (4 gamma)` for the normalized advantage `A`, capped at 1.
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdvantageMode {
    MonteCarlo,
    /// Exact dynamic programming on the simulator's MDP.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpiConfig {
    pub gamma: f64,
    /// Termination threshold on the normalized advantage.
    pub epsilon: f64,
    pub step: StepSize,
    /// State samples per advantage estimate.
    pub samples_per_iteration: usize,
    /// Update cap; `ceil(8 gamma / epsilon^2)` when absent.
    #[serde(default)]
    pub max_iterations: Option<usize>,
    pub advantage: AdvantageMode,
}

impl CpiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma {} outside (0, 1)", self.gamma)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if let StepSize::Fixed(a) = self.step {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::Config(format!("step {a} outside (0, 1]")));
            }
        }
        if self.samples_per_iteration == 0 {
            return Err(Error::Config("samples_per_iteration must be positive".into()));
        }
        Ok(())
    }

    /// Number of conservative updates after which the search gives up.
    pub fn cap(&self) -> usize {
        self.max_iterations
            .unwrap_or_else(|| (8.0 * self.gamma / (self.epsilon * self.epsilon)).ceil() as usize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CpiIteration {
    /// 1-based.
    pub iteration: usize,
    /// Normalized advantage of the selected candidate.
    pub advantage: f64,
    pub candidate: usize,
    /// Mixing weight applied, 0 on the terminating iteration.
    pub alpha: f64,
    pub samples: u64,
}

pub struct CpiResult {
    pub mixture: StationaryMixture,
    pub iterations: Vec<CpiIteration>,
}

impl CpiResult {
    pub fn policy(&self) -> StationaryPolicy {
        self.mixture.flatten()
    }

    /// Conservative updates performed.
    pub fn updates(&self) -> usize {
        self.iterations.iter().filter(|i| i.alpha > 0.0).count()
    }
}

/// One Monte-Carlo sample for advantage estimation: a state from the
/// geometric roll-in, a uniform action and a discounted return estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdvantageSample {
    pub state: usize,
    pub action: usize,
    pub ret: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdvantageEstimate {
    pub mean: f64,
    pub stderr: f64,
}

fn act(pi: &StationaryPolicy, s: usize, rng: &mut Rng) -> usize {
    categorical(pi.row(s), rng)
}

/// Draw `budget` samples: roll in `roll_in` for a geometric number of steps,
/// then `base` for another, take a uniform action and sum rewards under `base`
/// until a third geometric stop. States are distributed as the discounted
/// occupancy of `base` started from that of `roll_in`, and returns are
/// unbiased for `Q_base(state, action)` up to truncation.
pub fn advantage_samples(
    sim: &mut StationarySim,
    base: &StationaryPolicy,
    roll_in: &StationaryPolicy,
    gamma: f64,
    budget: usize,
    rng: &mut Rng,
) -> Result<Vec<AdvantageSample>> {
    let actions = sim.num_actions();
    let mut out = Vec::with_capacity(budget);
    while out.len() < budget {
        let mut s = sim.reset();
        let mut alive = true;
        'roll: for (policy, stops) in [(roll_in, geometric_stop(gamma, rng)), (base, geometric_stop(gamma, rng))] {
            for _ in 1..stops {
                let a = act(policy, s, rng);
                match sim.step(a)?.next {
                    Some(n) => s = n,
                    None => {
                        alive = false;
                        break 'roll;
                    }
                }
            }
        }
        if !alive {
            // truncated before reaching a sample state; draw again
            continue;
        }
        let action = rand::Rng::gen_range(rng, 0..actions);
        let horizon = geometric_stop(gamma, rng);
        let mut ret = 0.0;
        let mut a = action;
        let mut cur = s;
        for k in 0..horizon {
            if k > 0 {
                a = act(base, cur, rng);
            }
            let o = sim.step(a)?;
            ret += o.reward;
            match o.next {
                Some(n) => cur = n,
                None => break,
            }
        }
        out.push(AdvantageSample { state: s, action, ret });
    }
    Ok(out)
}

/// Importance-weighted `E[Q(s, candidate) - Q(s, base)]` from uniform-action samples.
pub fn advantage_from_samples(
    samples: &[AdvantageSample],
    base: &StationaryPolicy,
    candidate: &StationaryPolicy,
) -> AdvantageEstimate {
    let a = base.num_actions() as f64;
    let vals: Vec<f64> = samples
        .iter()
        .map(|x| a * (candidate.prob(x.state, x.action) - base.prob(x.state, x.action)) * x.ret)
        .collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = if vals.len() > 1 {
        vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    AdvantageEstimate {
        mean,
        stderr: (var / n).sqrt(),
    }
}

/// Monte-Carlo estimate of `E_{s ~ d}[A_base(s, candidate)]`, with `d` the
/// discounted occupancy of `base` started from that of `roll_in`.
pub fn estimate_advantage(
    sim: &mut StationarySim,
    base: &StationaryPolicy,
    candidate: &StationaryPolicy,
    roll_in: &StationaryPolicy,
    gamma: f64,
    budget: usize,
    rng: &mut Rng,
) -> Result<AdvantageEstimate> {
    if budget == 0 {
        return Err(Error::Config("advantage budget must be positive".into()));
    }
    let samples = advantage_samples(sim, base, roll_in, gamma, budget, rng)?;
    Ok(advantage_from_samples(&samples, base, candidate))
}

/// Exact counterpart of [`estimate_advantage`].
pub fn exact_advantage(
    mdp: &StationaryMdp,
    base: &StationaryPolicy,
    candidate: &StationaryPolicy,
    roll_in: &StationaryPolicy,
    gamma: f64,
) -> f64 {
    let rho = mdp.discounted_occupancy(roll_in, gamma, mdp.initial());
    let d = mdp.discounted_occupancy(base, gamma, &rho);
    let q = mdp.q_values(base, gamma);
    let a_n = mdp.num_actions();
    (0..mdp.num_states())
        .map(|s| {
            d[s] * (0..a_n)
                .map(|a| (candidate.prob(s, a) - base.prob(s, a)) * q[s * a_n + a])
                .sum::<f64>()
        })
        .sum()
}

/// Conservative policy iteration in the trace model. Starting from `roll_in`,
/// each iteration picks the class member with the largest estimated advantage
/// under the current policy's discounted occupancy (started from the roll-in's),
/// stops when the normalized advantage is at most `epsilon`, and otherwise
/// mixes the member in per state.
pub fn cpi_trace(
    sim: &mut StationarySim,
    roll_in: &StationaryPolicy,
    class: &[StationaryPolicy],
    config: &CpiConfig,
    rng: &mut Rng,
) -> Result<CpiResult> {
    config.validate()?;
    if class.is_empty() {
        return Err(Error::Empty("policy class".into()));
    }
    let mdp = sim.mdp().clone();
    let scale = (1.0 - config.gamma) / mdp.reward_span();
    let cap = config.cap();
    let mut mixture = StationaryMixture::new(roll_in.clone());
    let mut iterations = Vec::new();
    for t in 1.. {
        let current = mixture.flatten();
        let advantages: Vec<f64> = match config.advantage {
            AdvantageMode::Exact => class
                .iter()
                .map(|c| exact_advantage(&mdp, &current, c, roll_in, config.gamma))
                .collect(),
            AdvantageMode::MonteCarlo => {
                let samples = advantage_samples(sim, &current, roll_in, config.gamma, config.samples_per_iteration, rng)?;
                class
                    .iter()
                    .map(|c| advantage_from_samples(&samples, &current, c).mean)
                    .collect()
            }
        };
        let (k, best) = advantages
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let adv = best * scale;
        if !adv.is_finite() {
            return Err(Error::Diverged {
                iteration: t,
                losses: iterations.iter().map(|i: &CpiIteration| i.advantage).collect(),
            });
        }
        if adv <= config.epsilon {
            iterations.push(CpiIteration {
                iteration: t,
                advantage: adv,
                candidate: k,
                alpha: 0.0,
                samples: sim.steps_taken(),
            });
            return Ok(CpiResult { mixture, iterations });
        }
        if t > cap {
            return Err(Error::NonTermination {
                cap,
                advantages: iterations.iter().map(|i| i.advantage).chain([adv]).collect(),
            });
        }
        let alpha = match config.step {
            StepSize::Fixed(a) => a,
            StepSize::Adaptive => ((1.0 - config.gamma) * adv / (4.0 * config.gamma)).min(1.0),
        };
        mixture.update(class[k].clone(), alpha);
        iterations.push(CpiIteration {
            iteration: t,
            advantage: adv,
            candidate: k,
            alpha,
            samples: sim.steps_taken(),
        });
    }
    unreachable!("the loop returns")
}
