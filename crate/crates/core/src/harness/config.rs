use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::approx::{Bandwidth, RegressorConfig};
use crate::backward::StepSize;
use crate::envs::ObservationMode;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    LockAdmissible,
    LockBenign,
    LockAdversarial,
    HardnessTree,
    HardnessOnestep,
    StationaryLock,
}

pub const PRESETS: [Preset; 6] = [
    Preset::LockAdmissible,
    Preset::LockBenign,
    Preset::LockAdversarial,
    Preset::HardnessTree,
    Preset::HardnessOnestep,
    Preset::StationaryLock,
];

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::LockAdmissible => "lock-admissible",
            Preset::LockBenign => "lock-benign",
            Preset::LockAdversarial => "lock-adversarial",
            Preset::HardnessTree => "hardness-tree",
            Preset::HardnessOnestep => "hardness-onestep",
            Preset::StationaryLock => "stationary-lock",
        }
    }

    pub fn is_lock(self) -> bool {
        matches!(self, Preset::LockAdmissible | Preset::LockBenign | Preset::LockAdversarial)
    }

    fn default_algorithms(self) -> Vec<Algorithm> {
        match self {
            Preset::LockAdmissible => vec![Algorithm::Foobar],
            Preset::LockBenign | Preset::LockAdversarial => vec![Algorithm::Foobar, Algorithm::PsdpReset],
            Preset::StationaryLock => vec![Algorithm::InterFail, Algorithm::Cpi],
            Preset::HardnessTree | Preset::HardnessOnestep => vec![],
        }
    }

    fn allows(self, a: Algorithm) -> bool {
        match self {
            p if p.is_lock() => matches!(a, Algorithm::Foobar | Algorithm::PsdpReset | Algorithm::PsdpTrace),
            Preset::StationaryLock => matches!(a, Algorithm::InterFail | Algorithm::Cpi),
            _ => false,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PRESETS
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Foobar,
    PsdpReset,
    /// Backward search rolled in with the eps-greedy expert.
    PsdpTrace,
    Cpi,
    InterFail,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Foobar => "foobar",
            Algorithm::PsdpReset => "psdp-reset",
            Algorithm::PsdpTrace => "psdp-trace",
            Algorithm::Cpi => "cpi",
            Algorithm::InterFail => "inter-fail",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            Algorithm::Foobar,
            Algorithm::PsdpReset,
            Algorithm::PsdpTrace,
            Algorithm::Cpi,
            Algorithm::InterFail,
        ]
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LockSection {
    pub transitions: usize,
    pub mode: ObservationMode,
    /// Offline episodes, one state per level each.
    pub offline_samples: usize,
    /// Exploration of the admissible data and the trace roll-in; `1 / transitions` when absent.
    pub epsilon: Option<f64>,
    pub evaluation_episodes: usize,
}

impl Default for LockSection {
    fn default() -> Self {
        LockSection {
            transitions: 10,
            mode: ObservationMode::Latent,
            offline_samples: 2000,
            epsilon: None,
            evaluation_episodes: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForwardSection {
    pub samples_per_level: usize,
    pub iterations: usize,
    pub step_size: Option<f64>,
    pub bandwidth: Bandwidth,
    /// Softmax policy class used in rich mode.
    pub policy_lr: f64,
    pub policy_steps: usize,
}

impl Default for ForwardSection {
    fn default() -> Self {
        ForwardSection {
            samples_per_level: 2000,
            iterations: 1000,
            step_size: None,
            bandwidth: Bandwidth::Median,
            policy_lr: 0.5,
            policy_steps: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackwardSection {
    /// 5000 for admissible data and 4000 otherwise when absent.
    pub samples_per_level: Option<usize>,
    /// Regressor used in rich mode.
    pub regressor: RegressorConfig,
}

impl Default for BackwardSection {
    fn default() -> Self {
        BackwardSection {
            samples_per_level: None,
            regressor: RegressorConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeSection {
    pub depth: usize,
    pub runs: usize,
    /// Trace-model episodes per run.
    pub budget: u64,
    /// `random` or `breadth`.
    pub strategy: String,
}

impl Default for TreeSection {
    fn default() -> Self {
        TreeSection {
            depth: 12,
            runs: 100,
            budget: 1024,
            strategy: "random".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OneStepSection {
    /// Grid spacing of the two-action mixture search.
    pub grid_step: f64,
}

impl Default for OneStepSection {
    fn default() -> Self {
        OneStepSection { grid_step: 0.001 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StationarySection {
    pub actions: usize,
    pub gamma: f64,
    /// Exploration of the oracle policy.
    pub oracle_epsilon: f64,
    /// Rounds of the interactive game.
    pub iterations: usize,
    pub step_size: Option<f64>,
    /// Termination threshold of the conservative search.
    pub epsilon: f64,
    pub step: StepSize,
    pub samples_per_iteration: usize,
    pub max_iterations: Option<usize>,
    /// Simulator truncation; `ceil(20 / (1 - gamma))` when absent.
    pub horizon: Option<usize>,
}

impl Default for StationarySection {
    fn default() -> Self {
        StationarySection {
            actions: 10,
            gamma: 0.9,
            oracle_epsilon: 0.1,
            iterations: 2000,
            step_size: None,
            epsilon: 0.002,
            step: StepSize::Fixed(0.3),
            samples_per_iteration: 10000,
            max_iterations: None,
            horizon: None,
        }
    }
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    /// Preset default when absent.
    #[serde(default)]
    pub algorithms: Option<Vec<Algorithm>>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Multiplier on every sample budget.
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub lock: LockSection,
    #[serde(default)]
    pub forward: ForwardSection,
    #[serde(default)]
    pub backward: BackwardSection,
    #[serde(default)]
    pub tree: TreeSection,
    #[serde(default)]
    pub onestep: OneStepSection,
    #[serde(default)]
    pub stationary: StationarySection,
}

fn scaled(n: usize, scale: f64) -> usize {
    ((n as f64 * scale).round() as usize).max(1)
}

impl ExperimentConfig {
    pub fn new(preset: Preset) -> Self {
        ExperimentConfig {
            preset,
            algorithms: None,
            seeds: default_seeds(),
            scale: 1.0,
            output_dir: None,
            lock: LockSection::default(),
            forward: ForwardSection::default(),
            backward: BackwardSection::default(),
            tree: TreeSection::default(),
            onestep: OneStepSection::default(),
            stationary: StationarySection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Algorithms to run, preset default when unset.
    pub fn algorithms(&self) -> Vec<Algorithm> {
        self.algorithms.clone().unwrap_or_else(|| self.preset.default_algorithms())
    }

    /// Check ranges, fill preset defaults and fold `scale` into the budgets.
    /// The result has `scale = 1` and runs identically when resolved again.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = self.clone();
        if !(c.scale > 0.0 && c.scale.is_finite()) {
            return Err(Error::Config(format!("scale {} must be positive", c.scale)));
        }
        if c.seeds.is_empty() {
            return Err(Error::Config("no seeds".into()));
        }
        let mut unique = c.seeds.clone();
        unique.sort_unstable();
        unique.dedup();
        if unique.len() != c.seeds.len() {
            return Err(Error::Config("duplicate seeds".into()));
        }
        let algorithms = c.algorithms();
        if let Some(a) = algorithms.iter().find(|a| !c.preset.allows(**a)) {
            return Err(Error::Config(format!("algorithm {} does not apply to preset {}", a.name(), c.preset)));
        }
        c.algorithms = Some(algorithms);
        if c.preset.is_lock() {
            if c.lock.transitions == 0 {
                return Err(Error::Config("lock.transitions must be positive".into()));
            }
            let eps = c.lock.epsilon.unwrap_or(1.0 / c.lock.transitions as f64);
            if !(0.0..=1.0).contains(&eps) {
                return Err(Error::Config(format!("lock.epsilon {eps} outside [0, 1]")));
            }
            c.lock.epsilon = Some(eps);
            if c.lock.evaluation_episodes == 0 || c.forward.iterations == 0 {
                return Err(Error::Config("evaluation episodes and game iterations must be positive".into()));
            }
        }
        let backward = c.backward.samples_per_level.unwrap_or(match c.preset {
            Preset::LockAdmissible => 5000,
            _ => 4000,
        });
        c.backward.samples_per_level = Some(backward);
        if c.preset == Preset::StationaryLock {
            let s = &c.stationary;
            if !(s.gamma > 0.0 && s.gamma < 1.0) {
                return Err(Error::Config(format!("stationary.gamma {} outside (0, 1)", s.gamma)));
            }
            if !(0.0..=1.0).contains(&s.oracle_epsilon) || !(s.epsilon > 0.0) || s.iterations == 0 {
                return Err(Error::Config("stationary epsilons or iterations out of range".into()));
            }
            let horizon = s.horizon.unwrap_or((20.0 / (1.0 - s.gamma) - 1e-9).ceil() as usize);
            c.stationary.horizon = Some(horizon);
        }
        if c.preset == Preset::HardnessTree {
            c.tree.strategy.parse::<crate::hardness::SearchStrategy>()?;
            if c.tree.depth < 2 || c.tree.runs == 0 {
                return Err(Error::Config("tree.depth must be at least 2 and tree.runs positive".into()));
            }
        }
        if c.preset == Preset::HardnessOnestep && !(c.onestep.grid_step > 0.0 && c.onestep.grid_step <= 1.0) {
            return Err(Error::Config("onestep.grid_step outside (0, 1]".into()));
        }
        if c.scale != 1.0 {
            let k = c.scale;
            c.lock.offline_samples = scaled(c.lock.offline_samples, k);
            c.forward.samples_per_level = scaled(c.forward.samples_per_level, k);
            c.backward.samples_per_level = Some(scaled(backward, k));
            c.stationary.iterations = scaled(c.stationary.iterations, k);
            c.stationary.samples_per_iteration = scaled(c.stationary.samples_per_iteration, k);
            c.scale = 1.0;
        }
        Ok(c)
    }
}
