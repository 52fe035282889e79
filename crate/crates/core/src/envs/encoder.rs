use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Standard deviation of the Gaussian noise added before mixing.
pub const NOISE_STD: f64 = 0.1;

/// Sylvester Hadamard matrix of order `d` (a power of two), entries +-1.
pub fn hadamard(d: usize) -> Vec<Vec<f64>> {
    assert!(d.is_power_of_two(), "Hadamard order must be a power of two");
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 })
                .collect()
        })
        .collect()
}

/// Observation width for a lock with `transitions` transitions: the next power
/// of two above the one-hot width `3 + (transitions + 1)`.
pub fn observation_dim(transitions: usize) -> usize {
    (transitions + 4).next_power_of_two()
}

/// Maps `(latent state, level)` to `M (onehot(z) ++ onehot(h) + noise)`, zero-padded to `d`.
#[derive(Clone, Debug)]
pub struct ObservationEncoder {
    latent_states: usize,
    levels: usize,
    dim: usize,
    matrix: Vec<Vec<f64>>,
    noise_std: f64,
}

impl ObservationEncoder {
    pub fn new(latent_states: usize, levels: usize, noise_std: f64) -> Self {
        let dim = (latent_states + levels).next_power_of_two();
        ObservationEncoder {
            latent_states,
            levels,
            dim,
            matrix: hadamard(dim),
            noise_std,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn encode(&self, state: usize, level: usize, rng: &mut impl rand::RngCore) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        x[state] = 1.0;
        x[self.latent_states + level] = 1.0;
        if self.noise_std > 0.0 {
            let normal = Normal::new(0.0, self.noise_std).expect("finite std");
            for v in x.iter_mut().take(self.latent_states + self.levels) {
                *v += normal.sample(rng);
            }
        }
        self.matrix
            .iter()
            .map(|row| row.iter().zip(&x).map(|(m, v)| m * v).sum())
            .collect()
    }

    /// Invert the mixing and read off the most likely latent state and level.
    pub fn decode(&self, obs: &[f64]) -> Result<(usize, usize)> {
        if obs.len() != self.dim {
            return Err(Error::Protocol(format!("observation has width {}, expected {}", obs.len(), self.dim)));
        }
        let x: Vec<f64> = (0..self.dim)
            .map(|i| self.matrix[i].iter().zip(obs).map(|(m, o)| m * o).sum::<f64>() / self.dim as f64)
            .collect();
        let z = crate::mdp::argmax_lowest(&x[..self.latent_states]);
        let h = crate::mdp::argmax_lowest(&x[self.latent_states..self.latent_states + self.levels]);
        Ok((z, h))
    }
}
