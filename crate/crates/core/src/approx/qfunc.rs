use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;

use super::features::FeatureMap;
use super::mlp::{Adam, Mlp};
use crate::error::{Error, Result};
use crate::mdp::Observation;
use crate::rng::Rng;

/// Action values at one level.
pub trait QFunction<O>: Send + Sync {
    fn num_actions(&self) -> usize;
    fn values(&self, obs: &O, out: &mut [f64]);
    fn value(&self, obs: &O, action: usize) -> f64 {
        let mut out = vec![0.0; self.num_actions()];
        self.values(obs, &mut out);
        out[action]
    }
}

/// Table over latent states; unseen cells and unknown states predict 0.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularQ {
    pub actions: usize,
    pub table: Vec<Vec<f64>>,
}

impl<O: Observation> QFunction<O> for TabularQ {
    fn num_actions(&self) -> usize {
        self.actions
    }
    fn values(&self, obs: &O, out: &mut [f64]) {
        match obs.latent_index().and_then(|s| self.table.get(s)) {
            Some(row) => out.copy_from_slice(row),
            None => out.fill(0.0),
        }
    }
}

/// One weight vector per action over a feature map.
pub struct LinearQ<O> {
    pub features: Arc<dyn FeatureMap<O>>,
    /// `weights[a]` has length `features.dim()`.
    pub weights: Vec<Vec<f64>>,
}

impl<O> QFunction<O> for LinearQ<O> {
    fn num_actions(&self) -> usize {
        self.weights.len()
    }
    fn values(&self, obs: &O, out: &mut [f64]) {
        let mut x = vec![0.0; self.features.dim()];
        self.features.write(obs, &mut x);
        for (o, w) in out.iter_mut().zip(&self.weights) {
            *o = w.iter().zip(&x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Network with one output per action.
pub struct MlpQ<O> {
    pub features: Arc<dyn FeatureMap<O>>,
    pub net: Mlp,
}

impl<O> QFunction<O> for MlpQ<O> {
    fn num_actions(&self) -> usize {
        self.net.output_dim()
    }
    fn values(&self, obs: &O, out: &mut [f64]) {
        let mut x = vec![0.0; self.features.dim()];
        self.features.write(obs, &mut x);
        out.copy_from_slice(&self.net.forward(&x));
    }
}

/// Clamps every output of `inner` to `[lo, hi]`.
pub struct Clamped<O> {
    pub inner: Arc<dyn QFunction<O>>,
    pub lo: f64,
    pub hi: f64,
}

impl<O> QFunction<O> for Clamped<O> {
    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }
    fn values(&self, obs: &O, out: &mut [f64]) {
        self.inner.values(obs, out);
        for v in out.iter_mut() {
            *v = v.clamp(self.lo, self.hi);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressorConfig {
    pub hidden: usize,
    pub layers: usize,
    pub lr: f64,
    pub batch: usize,
    pub steps: usize,
}

impl Default for RegressorConfig {
    fn default() -> Self {
        RegressorConfig {
            hidden: 128,
            layers: 2,
            lr: 1e-3,
            batch: 128,
            steps: 1500,
        }
    }
}

/// Regression class for one level.
pub enum QClass<O> {
    Tabular,
    Linear { features: Arc<dyn FeatureMap<O>> },
    Regressor { features: Arc<dyn FeatureMap<O>>, config: RegressorConfig },
    /// Explicit list; fitting picks the member with the smallest squared error.
    Finite { members: Vec<Arc<dyn QFunction<O>>> },
}

impl<O> Clone for QClass<O> {
    fn clone(&self) -> Self {
        match self {
            QClass::Tabular => QClass::Tabular,
            QClass::Linear { features } => QClass::Linear {
                features: features.clone(),
            },
            QClass::Regressor { features, config } => QClass::Regressor {
                features: features.clone(),
                config: *config,
            },
            QClass::Finite { members } => QClass::Finite {
                members: members.clone(),
            },
        }
    }
}

impl<O> QClass<O> {
    pub fn name(&self) -> &'static str {
        match self {
            QClass::Tabular => "tabular",
            QClass::Linear { .. } => "linear",
            QClass::Regressor { .. } => "regressor",
            QClass::Finite { .. } => "finite",
        }
    }
}

/// Ridge added when the normal equations are singular.
const RIDGE: f64 = 1e-6;

fn solve_normal(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    if let Some(ch) = xtx.clone().cholesky() {
        let w = ch.solve(&xty);
        let det_ok = xtx.diagonal().iter().all(|d| *d > 0.0);
        if det_ok && w.iter().all(|v| v.is_finite()) {
            // a nearly singular system still gets the ridge
            let recon = &xtx * &w - &xty;
            if recon.norm() <= 1e-8 * (1.0 + xty.norm()) {
                return w;
            }
        }
    }
    let n = xtx.nrows();
    let ridged = xtx + DMatrix::identity(n, n) * RIDGE;
    ridged.cholesky().expect("ridge makes the system positive definite").solve(&xty)
}

/// Least-squares fit of `(obs, action, target)` triples within `class`,
/// clamped to `clamp` afterwards.
pub fn fit_least_squares<O: Observation>(
    class: &QClass<O>,
    data: &[(O, usize, f64)],
    actions: usize,
    clamp: (f64, f64),
    rng: &mut Rng,
) -> Result<Arc<dyn QFunction<O>>> {
    if data.iter().any(|d| d.1 >= actions) {
        return Err(Error::InvalidAction(actions));
    }
    let fitted: Arc<dyn QFunction<O>> = match class {
        QClass::Tabular => {
            let mut sums: Vec<Vec<(f64, usize)>> = Vec::new();
            for (obs, a, y) in data {
                let s = obs
                    .latent_index()
                    .ok_or_else(|| Error::Unsupported("tabular class needs latent observations".into()))?;
                if sums.len() <= s {
                    sums.resize(s + 1, vec![(0.0, 0); actions]);
                }
                sums[s][*a].0 += y;
                sums[s][*a].1 += 1;
            }
            let table = sums
                .into_iter()
                .map(|row| row.into_iter().map(|(t, n)| if n > 0 { t / n as f64 } else { 0.0 }).collect())
                .collect();
            Arc::new(TabularQ { actions, table })
        }
        QClass::Linear { features } => {
            let d = features.dim();
            let mut weights = vec![vec![0.0; d]; actions];
            for (a, w) in weights.iter_mut().enumerate() {
                let rows: Vec<&(O, usize, f64)> = data.iter().filter(|t| t.1 == a).collect();
                if rows.is_empty() {
                    continue;
                }
                let mut x = DMatrix::zeros(rows.len(), d);
                let mut buf = vec![0.0; d];
                for (i, r) in rows.iter().enumerate() {
                    features.write(&r.0, &mut buf);
                    for j in 0..d {
                        x[(i, j)] = buf[j];
                    }
                }
                let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.2));
                *w = solve_normal(&x, &y).iter().copied().collect();
            }
            Arc::new(LinearQ {
                features: features.clone(),
                weights,
            })
        }
        QClass::Regressor { features, config } => {
            let d = features.dim();
            let mut sizes = vec![d];
            sizes.extend(std::iter::repeat(config.hidden).take(config.layers));
            sizes.push(actions);
            let mut net = Mlp::new(&sizes, rng);
            let mut opt = Adam::new(net.num_params(), config.lr);
            let xs: Vec<Vec<f64>> = data
                .iter()
                .map(|t| {
                    let mut v = vec![0.0; d];
                    features.write(&t.0, &mut v);
                    v
                })
                .collect();
            if !data.is_empty() {
                let batch = config.batch.min(data.len());
                let mut grad = vec![0.0; net.num_params()];
                let mut dout = vec![0.0; actions];
                for _ in 0..config.steps {
                    grad.fill(0.0);
                    for i in sample(rng, data.len(), batch) {
                        let cache = net.forward_cached(&xs[i]);
                        dout.fill(0.0);
                        let a = data[i].1;
                        dout[a] = (Mlp::output(&cache)[a] - data[i].2) / batch as f64;
                        net.backward(&cache, &dout, &mut grad);
                    }
                    opt.step(&mut net.params, &grad);
                }
            }
            Arc::new(MlpQ {
                features: features.clone(),
                net,
            })
        }
        QClass::Finite { members } => {
            if members.is_empty() {
                return Err(Error::Empty("finite Q class".into()));
            }
            let mut best = (f64::INFINITY, 0);
            for (k, f) in members.iter().enumerate() {
                let err: f64 = data
                    .iter()
                    .map(|(o, a, y)| {
                        let e = f.value(o, *a).clamp(clamp.0, clamp.1) - y;
                        e * e
                    })
                    .sum();
                if err < best.0 {
                    best = (err, k);
                }
            }
            members[best.1].clone()
        }
    };
    Ok(Arc::new(Clamped {
        inner: fitted,
        lo: clamp.0,
        hi: clamp.1,
    }))
}
