use std::collections::HashMap;

use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};
use crate::mdp::Observation;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    Fixed(f64),
    /// Median of the nonzero pooled pairwise distances.
    Median,
}

/// `k(x, y) = exp(-|x - y|^2 / (2 sigma^2))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rbf {
    pub sigma: f64,
}

impl Rbf {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::ZeroBandwidth);
        }
        Ok(Rbf { sigma })
    }

    pub fn eval<O: Observation>(&self, a: &O, b: &O) -> f64 {
        (-a.sq_distance(b) / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Pools larger than this are thinned before taking the median.
const MEDIAN_POOL: usize = 2000;

/// Distinct observations with multiplicities. Latent observations merge by
/// index; others stay separate.
fn atoms<'a, O: Observation>(points: impl Iterator<Item = &'a O>) -> (Vec<O>, Vec<f64>, Vec<usize>) {
    let mut atoms = Vec::new();
    let mut counts = Vec::new();
    let mut assign = Vec::new();
    let mut by_index: HashMap<usize, usize> = HashMap::new();
    for p in points {
        let slot = match p.latent_index() {
            Some(i) => *by_index.entry(i).or_insert_with(|| {
                atoms.push(p.clone());
                counts.push(0.0);
                atoms.len() - 1
            }),
            None => {
                atoms.push(p.clone());
                counts.push(0.0);
                atoms.len() - 1
            }
        };
        counts[slot] += 1.0;
        assign.push(slot);
    }
    (atoms, counts, assign)
}

fn thin<O: Observation>(atoms: Vec<O>, counts: Vec<f64>) -> (Vec<O>, Vec<f64>) {
    if atoms.len() <= MEDIAN_POOL || atoms[0].embedding().is_none() {
        return (atoms, counts);
    }
    // order-independent subsample: sort by embedding, then take evenly spaced points
    let mut idx: Vec<usize> = (0..atoms.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (atoms[a].embedding().unwrap(), atoms[b].embedding().unwrap());
        x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal)
    });
    let stride = atoms.len() as f64 / MEDIAN_POOL as f64;
    let pick: Vec<usize> = (0..MEDIAN_POOL).map(|k| idx[(k as f64 * stride) as usize]).collect();
    (
        pick.iter().map(|&i| atoms[i].clone()).collect(),
        pick.iter().map(|&i| counts[i]).collect(),
    )
}

/// Median of the nonzero pairwise distances in `points`; 1 when all points coincide.
pub fn median_bandwidth<O: Observation>(points: &[&O]) -> f64 {
    let (atoms, counts, _) = atoms(points.iter().copied());
    let (atoms, counts) = thin(atoms, counts);
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for i in 0..atoms.len() {
        for j in i + 1..atoms.len() {
            let d = atoms[i].sq_distance(&atoms[j]).sqrt();
            if d > 0.0 {
                pairs.push((d, counts[i] * counts[j]));
            }
        }
    }
    if pairs.is_empty() {
        return 1.0;
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for (d, w) in &pairs {
        acc += w;
        if acc >= total / 2.0 {
            return *d;
        }
    }
    pairs.last().unwrap().0
}

fn resolve<O: Observation>(bw: Bandwidth, p: &[O], q: &[O]) -> Result<Rbf> {
    match bw {
        Bandwidth::Fixed(s) => Rbf::new(s),
        Bandwidth::Median => {
            let pool: Vec<&O> = p.iter().chain(q).collect();
            Rbf::new(median_bandwidth(&pool))
        }
    }
}

/// Squared maximum mean discrepancy (V-statistic). `weights_p` reweights the
/// `p` sample: its embedding is `(1/n) sum_i w_i phi(x_i)`.
pub fn mmd2<O: Observation>(p: &[O], q: &[O], bw: Bandwidth, weights_p: Option<&[f64]>) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::Empty("mmd sample".into()));
    }
    if let Some(w) = weights_p {
        if w.len() != p.len() {
            return Err(Error::Config("weights length differs from sample".into()));
        }
    }
    let k = resolve(bw, p, q)?;
    let (atoms, _, assign) = atoms(p.iter().chain(q));
    let mut c = vec![0.0; atoms.len()];
    for (i, &slot) in assign.iter().enumerate() {
        if i < p.len() {
            c[slot] += weights_p.map_or(1.0, |w| w[i]) / p.len() as f64;
        } else {
            c[slot] -= 1.0 / q.len() as f64;
        }
    }
    let mut total = 0.0;
    for i in 0..atoms.len() {
        if c[i] == 0.0 {
            continue;
        }
        total += c[i] * c[i];
        for j in i + 1..atoms.len() {
            total += 2.0 * c[i] * c[j] * k.eval(&atoms[i], &atoms[j]);
        }
    }
    Ok(total.max(0.0))
}

/// Number of random Fourier features used when the atom set is too large for a Gram matrix.
const FOURIER_FEATURES: usize = 512;
const GRAM_LIMIT: usize = 3000;

enum Backend {
    Gram(Vec<f64>),
    Fourier(Vec<Vec<f64>>),
}

/// Precomputed kernel quantities for a fixed reweighted sample versus a fixed
/// reference sample. For any weights it returns the discrepancy and the
/// unit-norm witness function evaluated on the reweighted sample.
pub struct KernelWitness {
    atoms: usize,
    on_atom: Vec<usize>,
    off_coef: Vec<f64>,
    backend: Backend,
    pub sigma: f64,
}

impl KernelWitness {
    pub fn new<O: Observation>(on: &[O], off: &[O], bw: Bandwidth, rng: &mut Rng) -> Result<Self> {
        if on.is_empty() || off.is_empty() {
            return Err(Error::Empty("kernel witness sample".into()));
        }
        let k = resolve(bw, on, off)?;
        let (atoms, _, assign) = atoms(on.iter().chain(off));
        let u = atoms.len();
        let mut off_coef = vec![0.0; u];
        for &slot in &assign[on.len()..] {
            off_coef[slot] -= 1.0 / off.len() as f64;
        }
        let backend = if u <= GRAM_LIMIT {
            let mut g = vec![0.0; u * u];
            for i in 0..u {
                g[i * u + i] = 1.0;
                for j in i + 1..u {
                    let v = k.eval(&atoms[i], &atoms[j]);
                    g[i * u + j] = v;
                    g[j * u + i] = v;
                }
            }
            Backend::Gram(g)
        } else {
            let dim = atoms[0]
                .embedding()
                .ok_or_else(|| Error::Unsupported("large non-vector sample".into()))?
                .len();
            let normal = Normal::new(0.0, 1.0 / k.sigma).unwrap();
            let phase = Uniform::new(0.0, std::f64::consts::TAU);
            let omegas: Vec<(Vec<f64>, f64)> = (0..FOURIER_FEATURES)
                .map(|_| ((0..dim).map(|_| normal.sample(rng)).collect(), phase.sample(rng)))
                .collect();
            let scale = (2.0 / FOURIER_FEATURES as f64).sqrt();
            Backend::Fourier(
                atoms
                    .iter()
                    .map(|a| {
                        let x = a.embedding().unwrap();
                        omegas
                            .iter()
                            .map(|(w, b)| scale * (w.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() + b).cos())
                            .collect()
                    })
                    .collect(),
            )
        };
        Ok(KernelWitness {
            atoms: u,
            on_atom: assign[..on.len()].to_vec(),
            off_coef,
            backend,
            sigma: k.sigma,
        })
    }

    /// `(MMD, g(x_n) for every reweighted sample point)` with `g` the unit-norm witness.
    pub fn evaluate(&self, weights: &[f64]) -> (f64, Vec<f64>) {
        let n = self.on_atom.len() as f64;
        let mut c = self.off_coef.clone();
        for (&slot, &w) in self.on_atom.iter().zip(weights) {
            c[slot] += w / n;
        }
        let kc: Vec<f64> = match &self.backend {
            Backend::Gram(g) => (0..self.atoms)
                .map(|i| g[i * self.atoms..(i + 1) * self.atoms].iter().zip(&c).map(|(a, b)| a * b).sum())
                .collect(),
            Backend::Fourier(phi) => {
                let d = phi[0].len();
                let mut v = vec![0.0; d];
                for (ci, row) in c.iter().zip(phi) {
                    for (vk, pk) in v.iter_mut().zip(row) {
                        *vk += ci * pk;
                    }
                }
                phi.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect()
            }
        };
        let sq: f64 = c.iter().zip(&kc).map(|(a, b)| a * b).sum();
        let mmd = sq.max(0.0).sqrt();
        let witness: Vec<f64> = if mmd > 1e-15 {
            self.on_atom.iter().map(|&slot| kc[slot] / mmd).collect()
        } else {
            vec![0.0; self.on_atom.len()]
        };
        (mmd, witness)
    }
}
