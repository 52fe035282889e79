//! Random finite games and an independent minimax oracle.

use std::sync::Arc;

use obsrl::approx::{PolicyClass, TestFunction};
use obsrl::forward::OnlineTuple;
use obsrl::mdp::{Rule, TabularRule};
use obsrl::rng::{categorical, stream};
use rand::Rng;

pub struct Indicator {
    pub state: usize,
    pub sign: f64,
}

impl TestFunction<usize> for Indicator {
    fn eval(&self, obs: &usize) -> f64 {
        if *obs == self.state {
            self.sign
        } else {
            0.0
        }
    }
}

pub fn indicators(states: usize, signed: bool) -> Vec<Arc<dyn TestFunction<usize>>> {
    let signs: &[f64] = if signed { &[1.0, -1.0] } else { &[1.0] };
    (0..states)
        .flat_map(|s| signs.iter().map(move |&sign| Arc::new(Indicator { state: s, sign }) as Arc<dyn TestFunction<usize>>))
        .collect()
}

/// Random finite game: online tuples with uniform actions, an offline sample,
/// a list of tabular member policies and signed indicator tests.
pub struct Instance {
    pub online: Vec<OnlineTuple<usize>>,
    pub offline: Vec<usize>,
    pub members: Vec<TabularRule>,
    pub tests: Vec<Arc<dyn TestFunction<usize>>>,
    pub actions: usize,
}

pub fn instance(seed: u64, members: usize, next_states: usize) -> Instance {
    let mut rng = stream(seed, "game-instance", 0);
    let (prev_states, actions) = (3, 2);
    let kernel: Vec<Vec<Vec<f64>>> = (0..prev_states)
        .map(|_| {
            (0..actions)
                .map(|_| {
                    let w: Vec<f64> = (0..next_states).map(|_| rng.gen_range(0.0..1.0)).collect();
                    let z: f64 = w.iter().sum();
                    w.into_iter().map(|x| x / z).collect()
                })
                .collect()
        })
        .collect();
    let online = (0..300)
        .map(|_| {
            let prev = rng.gen_range(0..prev_states);
            let action = rng.gen_range(0..actions);
            let next = categorical(&kernel[prev][action], &mut rng);
            OnlineTuple { prev, action, next }
        })
        .collect();
    let target: Vec<f64> = {
        let w: Vec<f64> = (0..next_states).map(|_| rng.gen_range(0.0..1.0)).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    };
    let offline = (0..300).map(|_| categorical(&target, &mut rng)).collect();
    let members = (0..members)
        .map(|_| {
            let probs = (0..prev_states)
                .map(|_| {
                    let p = rng.gen_range(0.0..1.0);
                    vec![p, 1.0 - p]
                })
                .collect();
            TabularRule::new(actions, probs).unwrap()
        })
        .collect();
    Instance {
        online,
        offline,
        members,
        tests: indicators(next_states, true),
        actions,
    }
}

impl Instance {
    /// `U[k][j] = u(member k, test j)`.
    pub fn payoff(&self) -> Vec<Vec<f64>> {
        let a = self.actions as f64;
        let n = self.online.len() as f64;
        self.members
            .iter()
            .map(|m| {
                self.tests
                    .iter()
                    .map(|g| {
                        let on: f64 = self.online.iter().map(|t| a * m.prob(t.prev, t.action) * g.eval(&t.next)).sum::<f64>() / n;
                        let off: f64 = self.offline.iter().map(|x| g.eval(x)).sum::<f64>() / self.offline.len() as f64;
                        on - off
                    })
                    .collect()
            })
            .collect()
    }
}

/// Certified bracket `[lower, upper]` on `min_w max_j (w U)_j` from long fictitious play.
pub fn minimax_bracket(u: &[Vec<f64>]) -> (f64, f64) {
    let (k, m) = (u.len(), u[0].len());
    let mut row_counts = vec![0.0; k];
    let mut col_counts = vec![0.0; m];
    let mut row_payoff = vec![0.0; m];
    let mut col_payoff = vec![0.0; k];
    let (mut r, mut c) = (0, 0);
    for _ in 0..200_000 {
        row_counts[r] += 1.0;
        col_counts[c] += 1.0;
        for j in 0..m {
            row_payoff[j] += u[r][j];
        }
        for (i, p) in col_payoff.iter_mut().enumerate() {
            *p += u[i][c];
        }
        c = (0..m).max_by(|&a, &b| row_payoff[a].partial_cmp(&row_payoff[b]).unwrap()).unwrap();
        r = (0..k).min_by(|&a, &b| col_payoff[a].partial_cmp(&col_payoff[b]).unwrap()).unwrap();
    }
    let rt: f64 = row_counts.iter().sum();
    let ct: f64 = col_counts.iter().sum();
    let upper = (0..m)
        .map(|j| (0..k).map(|i| row_counts[i] / rt * u[i][j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let lower = (0..k)
        .map(|i| (0..m).map(|j| col_counts[j] / ct * u[i][j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    (lower, upper)
}

pub fn finite_class(inst: &Instance) -> PolicyClass<usize> {
    PolicyClass::Finite(inst.members.iter().map(|m| Arc::new(m.clone()) as Rule<usize>).collect())
}

/// Replay exponential weights over the members with the recorded best
/// responses and check every recorded value is the exact best response.
pub fn check_replay(inst: &Instance, tr: &obsrl::forward::GameTranscript) -> Result<(), String> {
    let u = inst.payoff();
    let k = u.len();
    let mut cum = vec![0.0; k];
    for rec in &tr.records {
        let w = obsrl::forward::exponential_weights(&cum, tr.step_size);
        if (w.iter().sum::<f64>() - 1.0).abs() >= 1e-12 || w.iter().any(|&x| x < 0.0) {
            return Err(format!("iteration {}: weights {w:?}", rec.iteration));
        }
        let values: Vec<f64> = (0..u[0].len()).map(|j| (0..k).map(|i| w[i] * u[i][j]).sum()).collect();
        let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let j = rec.discriminator.ok_or("missing best-response index")?;
        if (rec.value - best).abs() >= 1e-9 || (values[j] - best).abs() >= 1e-9 {
            return Err(format!("iteration {}: recorded {} vs best response {best}", rec.iteration, rec.value));
        }
        for (i, c) in cum.iter_mut().enumerate() {
            *c += u[i][j];
        }
    }
    let argmin = obsrl::forward::GameTranscript::argmin(tr.records.iter().map(|r| r.value));
    if tr.best != argmin || tr.records.iter().any(|r| r.value < tr.best_value()) {
        return Err(format!("returned iterate {} is not the first minimizer {argmin}", tr.best));
    }
    Ok(())
}
