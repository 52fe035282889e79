//! Forward then backward: distribution matching produces a roll-in policy,
//! and trace-model policy search improves on it.

use crate::approx::{build_discriminators, Bandwidth, DiscriminatorClass, PolicyClass, QClass};
use crate::backward::{psdp_trace, BackwardConfig, BackwardResult};
use crate::data::StateOnlyDataset;
use crate::error::{Error, Result};
use crate::forward::{fail_forward, ForwardConfig, ForwardResult};
use crate::mdp::{Observation, Policy, TraceModel};
use crate::metrics::success_rate;
use crate::rng::{stream, Rng};

/// How the forward discriminators are obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DiscriminatorMode {
    /// Gap tests `max_a f(s, a) - f(s, b)` of every member of a finite value class.
    FromValues,
    /// Unit ball of an RBF kernel space.
    Mmd(Bandwidth),
}

pub struct FoobarConfig<O> {
    pub forward: ForwardConfig,
    pub backward: BackwardConfig,
    /// Per decision level, or one shared entry.
    pub policy_classes: Vec<PolicyClass<O>>,
    /// Per level, or one shared entry.
    pub q_classes: Vec<QClass<O>>,
    pub discriminators: DiscriminatorMode,
    pub reward_range: (f64, f64),
}

pub struct FoobarRun<O> {
    pub forward: ForwardResult<O>,
    pub backward: BackwardResult<O>,
    /// Discriminator class at every level.
    pub discriminators: Vec<DiscriminatorClass<O>>,
    pub seed: u64,
}

impl<O: 'static> FoobarRun<O> {
    /// The forward rules below `switch`, the backward rules from `switch` on.
    pub fn mixed_policy(&self, switch: usize) -> Result<Policy<O>> {
        let levels = self.backward.rules.len();
        if switch > levels {
            return Err(Error::PolicyDomain(switch));
        }
        Policy::compose(&self.forward.policy().slice(0, switch)?, switch, &self.backward.suffix(switch))
    }
}

/// Discriminators for every level from finite value classes.
pub fn discriminators_from_values<O: Observation>(
    q_classes: &[QClass<O>],
    levels: usize,
) -> Result<Vec<DiscriminatorClass<O>>> {
    (0..levels)
        .map(|h| {
            let class = crate::forward::per_level(q_classes, h, "value class")?;
            match class {
                QClass::Finite { members } if !members.is_empty() => {
                    Ok(DiscriminatorClass::Finite(build_discriminators(&members)))
                }
                QClass::Finite { .. } => Err(Error::Empty(format!("value class at level {h}"))),
                other => Err(Error::Config(format!(
                    "discriminators from values need a finite class, level {h} has {}",
                    other.name()
                ))),
            }
        })
        .collect()
}

pub fn run_foobar<M: TraceModel>(
    model: &mut M,
    offline: &StateOnlyDataset<M::Obs>,
    config: &FoobarConfig<M::Obs>,
    seed: u64,
) -> Result<FoobarRun<M::Obs>> {
    let levels = model.horizon();
    let discriminators = match config.discriminators {
        DiscriminatorMode::FromValues => discriminators_from_values(&config.q_classes, levels)?,
        DiscriminatorMode::Mmd(bw) => vec![DiscriminatorClass::Mmd(bw); levels],
    };
    let forward = fail_forward(
        model,
        offline,
        &config.policy_classes,
        &discriminators,
        &config.forward,
        &mut stream(seed, "forward", 0),
    )?;
    let backward = psdp_trace(
        model,
        &forward.policy(),
        &config.q_classes,
        config.reward_range,
        &config.backward,
        &mut stream(seed, "backward", 0),
    )?;
    Ok(FoobarRun {
        forward,
        backward,
        discriminators,
        seed,
    })
}

/// Success rate of forward rules below `switch` followed by backward rules.
pub fn evaluate_mixed<M: TraceModel>(
    run: &FoobarRun<M::Obs>,
    switch: usize,
    model: &mut M,
    episodes: usize,
    rng: &mut Rng,
) -> Result<f64> {
    success_rate(model, &run.mixed_policy(switch)?, episodes, rng)
}
