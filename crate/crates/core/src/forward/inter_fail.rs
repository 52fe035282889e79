use serde::{Deserialize, Serialize};

use super::game::{exponential_weights, hedge_step, GameRecord, GameTranscript};
use crate::approx::{median_bandwidth, Bandwidth, DiscriminatorClass, Rbf};
use crate::data::InteractiveOracle;
use crate::error::{Error, Result};
use crate::mdp::stationary::{StationaryPolicy, StationarySim};
use crate::mdp::TraceModel;
use crate::rng::{categorical, geometric_stop, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterFailConfig {
    pub gamma: f64,
    pub iterations: usize,
    #[serde(default)]
    pub step_size: Option<f64>,
}

pub struct InterFailResult {
    pub policy: StationaryPolicy,
    /// Values of every iterate re-evaluated on the final data; `best` is their argmin.
    pub transcript: GameTranscript,
    /// Values seen during play, on the data collected so far.
    pub online_values: Vec<f64>,
    pub env_steps: u64,
    pub oracle_queries: u64,
}

/// Test functions tabulated over the state space.
enum Tests {
    Table(Vec<Vec<f64>>),
    Kernel(Bandwidth),
}

/// Counts of online `(s, a, s')` and offline `s'` tuples.
struct Counts {
    states: usize,
    actions: usize,
    on: Vec<f64>,
    off: Vec<f64>,
    n: f64,
}

impl Counts {
    /// Signed measure `(1/n) sum A pi(a|s) delta_{s'} - (1/n) sum delta_{x}`.
    fn residual(&self, pi: &[Vec<f64>]) -> Vec<f64> {
        let (s_n, a_n) = (self.states, self.actions);
        let mut c: Vec<f64> = self.off.iter().map(|o| -o / self.n).collect();
        for s in 0..s_n {
            for a in 0..a_n {
                let w = a_n as f64 * pi[s][a] / self.n;
                let row = &self.on[(s * a_n + a) * s_n..(s * a_n + a + 1) * s_n];
                for (ci, r) in c.iter_mut().zip(row) {
                    *ci += w * r;
                }
            }
        }
        c
    }

    /// Loss coefficient of every `(s, a)` for test values `g` on states.
    fn coefficients(&self, g: &[f64]) -> Vec<Vec<f64>> {
        let (s_n, a_n) = (self.states, self.actions);
        (0..s_n)
            .map(|s| {
                (0..a_n)
                    .map(|a| {
                        let row = &self.on[(s * a_n + a) * s_n..(s * a_n + a + 1) * s_n];
                        a_n as f64 * row.iter().zip(g).map(|(r, x)| r * x).sum::<f64>() / self.n
                    })
                    .collect()
            })
            .collect()
    }
}

impl Tests {
    /// Best response to the residual: `(value, index, g on states)`.
    fn respond(&self, c: &[f64], seen: &[bool]) -> (f64, Option<usize>, Vec<f64>) {
        match self {
            Tests::Table(gs) => {
                let mut best = (f64::NEG_INFINITY, 0);
                for (j, g) in gs.iter().enumerate() {
                    let u: f64 = g.iter().zip(c).map(|(a, b)| a * b).sum();
                    if u > best.0 || u.is_nan() {
                        best = (u, j);
                        if u.is_nan() {
                            break;
                        }
                    }
                }
                (best.0, Some(best.1), gs[best.1].clone())
            }
            Tests::Kernel(bw) => {
                let sigma = match bw {
                    Bandwidth::Fixed(s) => *s,
                    Bandwidth::Median => {
                        let pts: Vec<usize> = (0..c.len()).filter(|&s| seen[s]).collect();
                        median_bandwidth(&pts.iter().collect::<Vec<_>>())
                    }
                };
                let k = Rbf { sigma };
                let n = c.len();
                let kc: Vec<f64> = (0..n)
                    .map(|i| (0..n).map(|j| k.eval(&i, &j) * c[j]).sum())
                    .collect();
                let sq: f64 = kc.iter().zip(c).map(|(a, b)| a * b).sum();
                let mmd = sq.max(0.0).sqrt();
                let g = if mmd > 1e-15 {
                    kc.iter().map(|v| v / mmd).collect()
                } else {
                    vec![0.0; n]
                };
                (mmd, None, g)
            }
        }
    }

    fn range(&self) -> f64 {
        match self {
            Tests::Table(gs) => {
                let lo = gs.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
                let hi = gs.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
                if hi > lo {
                    hi - lo
                } else {
                    1.0
                }
            }
            Tests::Kernel(_) => 2.0,
        }
    }
}

/// Interactive distribution matching on a discounted chain: every iteration
/// rolls the current policy in for a geometric number of steps, records one
/// uniform-action transition and one oracle transition from the same state,
/// then plays one round of the game on all data so far.
pub fn inter_fail(
    sim: &mut StationarySim,
    oracle: &mut InteractiveOracle,
    discriminators: &DiscriminatorClass<usize>,
    config: &InterFailConfig,
    rng: &mut Rng,
) -> Result<InterFailResult> {
    if !(config.gamma > 0.0 && config.gamma < 1.0) {
        return Err(Error::Config(format!("gamma {} outside (0, 1)", config.gamma)));
    }
    if config.iterations == 0 {
        return Err(Error::Config("iterations must be positive".into()));
    }
    if sim.horizon() < 2 {
        return Err(Error::InvalidHorizon("simulator must allow two steps".into()));
    }
    let states = sim.mdp().num_states();
    let actions = sim.mdp().num_actions();
    let tests = match discriminators {
        DiscriminatorClass::Finite(gs) => {
            if gs.is_empty() {
                return Err(Error::Empty("discriminator class".into()));
            }
            Tests::Table(gs.iter().map(|g| (0..states).map(|s| g.eval(&s)).collect()).collect())
        }
        DiscriminatorClass::Mmd(bw) => Tests::Kernel(*bw),
    };
    let eta = config
        .step_size
        .unwrap_or_else(|| hedge_step(states as f64 * (actions as f64).ln(), config.iterations, tests.range()));
    let mut counts = Counts {
        states,
        actions,
        on: vec![0.0; states * actions * states],
        off: vec![0.0; states],
        n: 0.0,
    };
    let mut seen = vec![false; states];
    let mut cum = vec![vec![0.0; actions]; states];
    let mut snapshots: Vec<Vec<Vec<f64>>> = Vec::with_capacity(config.iterations);
    let mut online_values = Vec::with_capacity(config.iterations);
    let max_roll = sim.horizon() - 2;
    for t in 1..=config.iterations {
        let pi: Vec<Vec<f64>> = cum.iter().map(|c| exponential_weights(c, eta)).collect();
        let stop = geometric_stop(config.gamma, rng);
        let mut s = sim.reset();
        for _ in 0..(stop - 1).min(max_roll) {
            let a = categorical(&pi[s], rng);
            s = sim
                .step(a)?
                .next
                .ok_or_else(|| Error::Protocol("episode ended during roll-in".into()))?;
        }
        let a = rand::Rng::gen_range(rng, 0..actions);
        let next = sim
            .step(a)?
            .next
            .ok_or_else(|| Error::Protocol("episode ended at the recorded transition".into()))?;
        let off = oracle.query(s)?;
        counts.on[(s * actions + a) * states + next] += 1.0;
        counts.off[off] += 1.0;
        counts.n += 1.0;
        seen[next] = true;
        seen[off] = true;
        let (u, _, g) = tests.respond(&counts.residual(&pi), &seen);
        if !u.is_finite() {
            online_values.push(u);
            return Err(Error::Diverged {
                iteration: t,
                losses: online_values,
            });
        }
        online_values.push(u);
        for (row, coef) in cum.iter_mut().zip(counts.coefficients(&g)) {
            for (x, c) in row.iter_mut().zip(coef) {
                *x += c;
            }
        }
        snapshots.push(pi);
    }
    let records: Vec<GameRecord> = snapshots
        .iter()
        .enumerate()
        .map(|(i, pi)| {
            let (value, discriminator, _) = tests.respond(&counts.residual(pi), &seen);
            GameRecord {
                iteration: i + 1,
                value,
                discriminator,
            }
        })
        .collect();
    let best = GameTranscript::argmin(records.iter().map(|r| r.value));
    let policy = StationaryPolicy::new(actions, snapshots.swap_remove(best))?;
    Ok(InterFailResult {
        policy,
        transcript: GameTranscript {
            records,
            best,
            step_size: eta,
        },
        online_values,
        env_steps: sim.steps_taken(),
        oracle_queries: oracle.queries(),
    })
}
