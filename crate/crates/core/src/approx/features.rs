/// Fixed-width feature vector for an observation.
pub trait FeatureMap<O>: Send + Sync {
    fn dim(&self) -> usize;
    fn write(&self, obs: &O, out: &mut [f64]);
}

/// One-hot encoding of latent states `0..size`; larger indices map to zeros.
#[derive(Clone, Copy, Debug)]
pub struct OneHot {
    pub size: usize,
}

impl FeatureMap<usize> for OneHot {
    fn dim(&self) -> usize {
        self.size
    }
    fn write(&self, obs: &usize, out: &mut [f64]) {
        out.fill(0.0);
        if *obs < self.size {
            out[*obs] = 1.0;
        }
    }
}

/// Rich observations used as-is.
#[derive(Clone, Copy, Debug)]
pub struct RawFeatures {
    pub dim: usize,
}

impl FeatureMap<Vec<f64>> for RawFeatures {
    fn dim(&self) -> usize {
        self.dim
    }
    fn write(&self, obs: &Vec<f64>, out: &mut [f64]) {
        out.copy_from_slice(obs);
    }
}
