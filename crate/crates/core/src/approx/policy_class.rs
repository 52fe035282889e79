use std::sync::Arc;

use super::features::FeatureMap;
use super::qfunc::QFunction;
use crate::mdp::{argmax_lowest, ActionRule, Rule};

/// Deterministic greedy policy of a Q-function; the lowest action wins ties.
pub struct GreedyRule<O> {
    pub q: Arc<dyn QFunction<O>>,
}

impl<O> ActionRule<O> for GreedyRule<O> {
    fn num_actions(&self) -> usize {
        self.q.num_actions()
    }
    fn fill_probs(&self, obs: &O, out: &mut [f64]) {
        let mut v = vec![0.0; out.len()];
        self.q.values(obs, &mut v);
        out.fill(0.0);
        out[argmax_lowest(&v)] = 1.0;
    }
    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Categorical policy with logits linear in the features: `theta[a * d + i]`.
pub struct SoftmaxRule<O> {
    pub features: Arc<dyn FeatureMap<O>>,
    pub actions: usize,
    pub theta: Vec<f64>,
}

impl<O> Clone for SoftmaxRule<O> {
    fn clone(&self) -> Self {
        SoftmaxRule {
            features: self.features.clone(),
            actions: self.actions,
            theta: self.theta.clone(),
        }
    }
}

impl<O> SoftmaxRule<O> {
    pub fn zeros(features: Arc<dyn FeatureMap<O>>, actions: usize) -> Self {
        let d = features.dim();
        SoftmaxRule {
            features,
            actions,
            theta: vec![0.0; actions * d],
        }
    }

    /// Action probabilities and the feature vector they were computed from.
    pub fn probs_and_features(&self, obs: &O) -> (Vec<f64>, Vec<f64>) {
        let d = self.features.dim();
        let mut x = vec![0.0; d];
        self.features.write(obs, &mut x);
        let logits: Vec<f64> = (0..self.actions)
            .map(|a| self.theta[a * d..(a + 1) * d].iter().zip(&x).map(|(t, v)| t * v).sum())
            .collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = e.iter().sum();
        (e.into_iter().map(|v| v / z).collect(), x)
    }
}

impl<O> ActionRule<O> for SoftmaxRule<O> {
    fn num_actions(&self) -> usize {
        self.actions
    }
    fn fill_probs(&self, obs: &O, out: &mut [f64]) {
        out.copy_from_slice(&self.probs_and_features(obs).0);
    }
}

/// Policy class used by the forward game at one level.
pub enum PolicyClass<O> {
    /// Any per-state distribution over latent states, learned by multiplicative weights
    /// (the product of per-state exponential weights over all deterministic tables).
    Tabular,
    /// Explicit list of candidate rules, learned by exponential weights over the list.
    Finite(Vec<Rule<O>>),
    /// Linear-softmax logits, learned by gradient steps.
    Softmax {
        features: Arc<dyn FeatureMap<O>>,
        lr: f64,
        steps: usize,
    },
}

impl<O> Clone for PolicyClass<O> {
    fn clone(&self) -> Self {
        match self {
            PolicyClass::Tabular => PolicyClass::Tabular,
            PolicyClass::Finite(v) => PolicyClass::Finite(v.clone()),
            PolicyClass::Softmax { features, lr, steps } => PolicyClass::Softmax {
                features: features.clone(),
                lr: *lr,
                steps: *steps,
            },
        }
    }
}
