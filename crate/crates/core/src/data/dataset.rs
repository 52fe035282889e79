use std::fmt;
use std::str::FromStr;

use crate::envs::ObservationEncoder;
use crate::error::{Error, Result};
use crate::mdp::Observation;
use crate::textfmt::{fmt_f64, parse_f64, parse_usize};

/// How a dataset was produced.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    EpsGreedy { eps: f64 },
    BenignInadmissible,
    Adversarial,
    HardnessTree,
    Other(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::EpsGreedy { eps } => write!(f, "eps-greedy:{}", fmt_f64(*eps)),
            Provenance::BenignInadmissible => f.write_str("benign-inadmissible"),
            Provenance::Adversarial => f.write_str("adversarial"),
            Provenance::HardnessTree => f.write_str("hardness-tree"),
            Provenance::Other(s) => write!(f, "other:{s}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "benign-inadmissible" => Provenance::BenignInadmissible,
            "adversarial" => Provenance::Adversarial,
            "hardness-tree" => Provenance::HardnessTree,
            _ => {
                if let Some(eps) = s.strip_prefix("eps-greedy:") {
                    Provenance::EpsGreedy { eps: parse_f64(eps)? }
                } else if let Some(rest) = s.strip_prefix("other:") {
                    Provenance::Other(rest.to_string())
                } else {
                    return Err(Error::Parse(format!("unknown provenance {s:?}")));
                }
            }
        })
    }
}

/// Observation types that can be written to a dataset file.
pub trait DatasetObs: Observation {
    const MODE: &'static str;
    fn width(&self) -> usize;
    fn write_line(&self) -> String;
    fn parse_line(line: &str, width: usize) -> Result<Self>;
}

impl DatasetObs for usize {
    const MODE: &'static str = "latent";
    fn width(&self) -> usize {
        0
    }
    fn write_line(&self) -> String {
        self.to_string()
    }
    fn parse_line(line: &str, _width: usize) -> Result<Self> {
        parse_usize(line.trim())
    }
}

impl DatasetObs for Vec<f64> {
    const MODE: &'static str = "rich";
    fn width(&self) -> usize {
        self.len()
    }
    fn write_line(&self) -> String {
        self.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(" ")
    }
    fn parse_line(line: &str, width: usize) -> Result<Self> {
        let v = line.split_whitespace().map(parse_f64).collect::<Result<Vec<_>>>()?;
        if v.len() != width {
            return Err(Error::Parse(format!("observation has {} entries, expected {width}", v.len())));
        }
        Ok(v)
    }
}

/// States (no actions, no rewards) at each level.
#[derive(Clone, Debug, PartialEq)]
pub struct StateOnlyDataset<O> {
    pub env_id: String,
    pub provenance: Provenance,
    pub seed: u64,
    levels: Vec<Vec<O>>,
}

impl<O: Observation> StateOnlyDataset<O> {
    pub fn new(env_id: &str, provenance: Provenance, seed: u64, levels: Vec<Vec<O>>) -> Self {
        StateOnlyDataset {
            env_id: env_id.to_string(),
            provenance,
            seed,
            levels,
        }
    }

    pub fn horizon(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, h: usize) -> &[O] {
        &self.levels[h]
    }

    pub fn levels(&self) -> &[Vec<O>] {
        &self.levels
    }

    pub fn levels_mut(&mut self) -> &mut Vec<Vec<O>> {
        &mut self.levels
    }

    pub fn counts(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }
}

impl StateOnlyDataset<usize> {
    pub fn new_latent(env_id: &str, provenance: Provenance, seed: u64, levels: Vec<Vec<usize>>) -> Self {
        StateOnlyDataset::new(env_id, provenance, seed, levels)
    }

    /// Empirical state frequencies per level.
    pub fn empirical_marginals(&self, states: &[usize]) -> Result<Vec<Vec<f64>>> {
        if states.len() != self.horizon() {
            return Err(Error::InvalidHorizon(format!(
                "dataset has {} levels, MDP has {}",
                self.horizon(),
                states.len()
            )));
        }
        self.levels
            .iter()
            .zip(states)
            .enumerate()
            .map(|(h, (level, &count))| {
                let mut freq = vec![0.0; count];
                for &s in level {
                    *freq.get_mut(s).ok_or(Error::InvalidState { level: h, state: s })? += 1.0;
                }
                let n = level.len().max(1) as f64;
                Ok(freq.into_iter().map(|c| c / n).collect())
            })
            .collect()
    }

    /// Replace every latent state by a noisy rich observation.
    pub fn encode(&self, encoder: &ObservationEncoder, rng: &mut impl rand::RngCore) -> StateOnlyDataset<Vec<f64>> {
        let levels = self
            .levels
            .iter()
            .enumerate()
            .map(|(h, level)| level.iter().map(|&s| encoder.encode(s, h, rng)).collect())
            .collect();
        StateOnlyDataset::new(&self.env_id, self.provenance.clone(), self.seed, levels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_round_trip() {
        for p in [
            Provenance::EpsGreedy { eps: 0.1 },
            Provenance::BenignInadmissible,
            Provenance::Adversarial,
            Provenance::HardnessTree,
            Provenance::Other("x".into()),
        ] {
            assert_eq!(p.to_string().parse::<Provenance>().unwrap(), p);
        }
    }

    #[test]
    fn marginals() {
        let d = StateOnlyDataset::new_latent("t", Provenance::HardnessTree, 0, vec![vec![0, 0], vec![1, 2, 2, 0]]);
        let m = d.empirical_marginals(&[1, 3]).unwrap();
        assert_eq!(m[1], vec![0.25, 0.25, 0.5]);
        assert!(d.empirical_marginals(&[1, 2]).is_err());
    }
}
