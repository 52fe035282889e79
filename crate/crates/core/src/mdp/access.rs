use std::sync::Arc;

use super::{LatentMdp, Observation, Policy};
use crate::envs::ObservationEncoder;
use crate::error::{Error, Result};
use crate::rng::{categorical, Rng};

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome<O> {
    pub reward: f64,
    /// `None` once the episode is over.
    pub next: Option<O>,
}

/// Episodic access: reset, then one step per level until the episode ends.
pub trait TraceModel {
    type Obs: Observation;
    fn horizon(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn reset(&mut self) -> Self::Obs;
    fn step(&mut self, action: usize) -> Result<StepOutcome<Self::Obs>>;
    /// Level of the pending decision, if an episode is in progress.
    fn level(&self) -> Option<usize>;
    /// Total environment steps taken so far.
    fn steps_taken(&self) -> u64;
}

/// Trace access plus the ability to start from any previously seen state.
pub trait ResetModel: TraceModel {
    fn reset_to(&mut self, level: usize, obs: &Self::Obs) -> Result<()>;
    fn resets(&self) -> u64;
    fn query(&mut self, level: usize, obs: &Self::Obs, action: usize) -> Result<StepOutcome<Self::Obs>> {
        self.reset_to(level, obs)?;
        self.step(action)
    }
}

/// Simulator over latent states.
#[derive(Clone, Debug)]
pub struct TabularSim {
    mdp: Arc<LatentMdp>,
    rng: Rng,
    cursor: Option<(usize, usize)>,
    steps: u64,
    resets: u64,
}

impl TabularSim {
    pub fn new(mdp: Arc<LatentMdp>, rng: Rng) -> Self {
        TabularSim {
            mdp,
            rng,
            cursor: None,
            steps: 0,
            resets: 0,
        }
    }

    pub fn mdp(&self) -> &Arc<LatentMdp> {
        &self.mdp
    }

    /// Current latent state, if an episode is in progress.
    pub fn latent(&self) -> Option<(usize, usize)> {
        self.cursor
    }
}

impl TraceModel for TabularSim {
    type Obs = usize;

    fn horizon(&self) -> usize {
        self.mdp.horizon()
    }

    fn num_actions(&self) -> usize {
        self.mdp.num_actions()
    }

    fn reset(&mut self) -> usize {
        let s = categorical(self.mdp.initial(), &mut self.rng);
        self.cursor = Some((0, s));
        s
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome<usize>> {
        let (h, s) = self
            .cursor
            .ok_or_else(|| Error::Protocol("step called without an active episode".into()))?;
        if action >= self.mdp.num_actions() {
            return Err(Error::InvalidAction(action));
        }
        self.steps += 1;
        let reward = self.mdp.reward(h, s, action).sample(&mut self.rng);
        if h + 1 == self.mdp.horizon() {
            self.cursor = None;
            return Ok(StepOutcome { reward, next: None });
        }
        let row = self.mdp.transition(h, s, action);
        let probs: Vec<f64> = row.iter().map(|e| e.1).collect();
        let next = row[categorical(&probs, &mut self.rng)].0;
        self.cursor = Some((h + 1, next));
        Ok(StepOutcome {
            reward,
            next: Some(next),
        })
    }

    fn level(&self) -> Option<usize> {
        self.cursor.map(|c| c.0)
    }

    fn steps_taken(&self) -> u64 {
        self.steps
    }
}

impl ResetModel for TabularSim {
    fn reset_to(&mut self, level: usize, obs: &usize) -> Result<()> {
        self.mdp.check_state(level, *obs)?;
        self.resets += 1;
        self.cursor = Some((level, *obs));
        Ok(())
    }

    fn resets(&self) -> u64 {
        self.resets
    }
}

/// Simulator that emits noisy rich observations of latent states.
#[derive(Clone, Debug)]
pub struct RichSim {
    inner: TabularSim,
    encoder: Arc<ObservationEncoder>,
    noise: Rng,
}

impl RichSim {
    pub fn new(mdp: Arc<LatentMdp>, encoder: Arc<ObservationEncoder>, rng: Rng, noise: Rng) -> Self {
        RichSim {
            inner: TabularSim::new(mdp, rng),
            encoder,
            noise,
        }
    }

    pub fn encoder(&self) -> &Arc<ObservationEncoder> {
        &self.encoder
    }
}

impl TraceModel for RichSim {
    type Obs = Vec<f64>;

    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }

    fn reset(&mut self) -> Vec<f64> {
        let s = self.inner.reset();
        self.encoder.encode(s, 0, &mut self.noise)
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome<Vec<f64>>> {
        let out = self.inner.step(action)?;
        let next = match (out.next, self.inner.level()) {
            (Some(s), Some(h)) => Some(self.encoder.encode(s, h, &mut self.noise)),
            _ => None,
        };
        Ok(StepOutcome {
            reward: out.reward,
            next,
        })
    }

    fn level(&self) -> Option<usize> {
        self.inner.level()
    }

    fn steps_taken(&self) -> u64 {
        self.inner.steps_taken()
    }
}

impl ResetModel for RichSim {
    fn reset_to(&mut self, level: usize, obs: &Vec<f64>) -> Result<()> {
        let (state, decoded_level) = self.encoder.decode(obs)?;
        if decoded_level != level {
            return Err(Error::Protocol(format!(
                "observation encodes level {decoded_level}, reset requested at level {level}"
            )));
        }
        self.inner.reset_to(level, &state)
    }

    fn resets(&self) -> u64 {
        self.inner.resets()
    }
}

/// One episode: the observation before each decision, the action and its reward.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<O> {
    pub observations: Vec<O>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
}

impl<O> Trajectory<O> {
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// The final decision paid a reward of 1.
    pub fn success(&self) -> bool {
        self.rewards.last().is_some_and(|&r| r >= 1.0 - 1e-9)
    }
}

/// Execute `policy` for one full episode.
pub fn rollout<M: TraceModel>(model: &mut M, policy: &Policy<M::Obs>, rng: &mut Rng) -> Result<Trajectory<M::Obs>> {
    let obs = model.reset();
    let mut traj = Trajectory {
        observations: Vec::with_capacity(model.horizon()),
        actions: Vec::with_capacity(model.horizon()),
        rewards: Vec::with_capacity(model.horizon()),
    };
    let active = policy.resolve(rng);
    let mut buf = vec![0.0; model.num_actions()];
    let mut current = Some(obs);
    let mut level = 0;
    while let Some(obs) = current {
        let a = active.act(level, &obs, &mut buf, rng)?;
        let out = model.step(a)?;
        traj.observations.push(obs);
        traj.actions.push(a);
        traj.rewards.push(out.reward);
        current = out.next;
        level += 1;
    }
    Ok(traj)
}

/// Continue the active episode with `policy` from the pending decision at `level`.
/// Returns the sum of rewards collected until the episode ends.
pub fn rollout_from<M: TraceModel>(
    model: &mut M,
    policy: &Policy<M::Obs>,
    level: usize,
    obs: M::Obs,
    rng: &mut Rng,
) -> Result<f64> {
    let active = policy.resolve(rng);
    let mut buf = vec![0.0; model.num_actions()];
    let mut total = 0.0;
    let mut current = Some(obs);
    let mut h = level;
    while let Some(obs) = current {
        let a = active.act(h, &obs, &mut buf, rng)?;
        let out = model.step(a)?;
        total += out.reward;
        current = out.next;
        h += 1;
    }
    Ok(total)
}
