//! Small fully connected network with tanh hidden layers and hand-written backprop.

use rand_distr::{Distribution, Normal};

#[derive(Clone, Debug)]
pub struct Mlp {
    sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Per-layer activations from a forward pass; `acts[0]` is the input.
pub struct Cache {
    acts: Vec<Vec<f64>>,
}

impl Mlp {
    /// `sizes = [input, hidden..., output]`; Glorot-scaled normal weights, zero biases.
    pub fn new(sizes: &[usize], rng: &mut impl rand::RngCore) -> Self {
        let mut params = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
            let normal = Normal::new(0.0, std).unwrap();
            params.extend((0..fan_in * fan_out).map(|_| normal.sample(rng)));
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Mlp {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn forward_cached(&self, x: &[f64]) -> Cache {
        let mut acts = vec![x.to_vec()];
        let mut off = 0;
        let layers = self.sizes.len() - 1;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let input = &acts[l];
            let mut out: Vec<f64> = (0..n_out)
                .map(|j| b[j] + w[j * n_in..(j + 1) * n_in].iter().zip(input).map(|(a, c)| a * c).sum::<f64>())
                .collect();
            if l + 1 < layers {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(out);
            off += n_in * n_out + n_out;
        }
        Cache { acts }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).acts.pop().unwrap()
    }

    pub fn output(cache: &Cache) -> &[f64] {
        cache.acts.last().unwrap()
    }

    /// Accumulate `d loss / d params` into `grad`, given `d loss / d output`.
    pub fn backward(&self, cache: &Cache, dout: &[f64], grad: &mut [f64]) {
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut delta = dout.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let input = &cache.acts[l];
            for j in 0..n_out {
                let row = off + j * n_in;
                for i in 0..n_in {
                    grad[row + i] += delta[j] * input[i];
                }
                grad[off + n_in * n_out + j] += delta[j];
            }
            if l > 0 {
                let w = &self.params[off..off + n_in * n_out];
                delta = (0..n_in)
                    .map(|i| {
                        let back: f64 = (0..n_out).map(|j| w[j * n_in + i] * delta[j]).sum();
                        back * (1.0 - input[i] * input[i])
                    })
                    .collect();
            }
        }
    }
}

/// Adam optimizer state.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}
