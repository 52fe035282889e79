use std::sync::Arc;

use super::kernel::Bandwidth;
use super::qfunc::QFunction;
use crate::error::{Error, Result};

/// Real-valued test function on observations.
pub trait TestFunction<O>: Send + Sync {
    fn eval(&self, obs: &O) -> f64;
}

/// `g(s) = max_a f(s, a) - f(s, action)`.
pub struct GapTest<O> {
    pub q: Arc<dyn QFunction<O>>,
    pub action: usize,
}

impl<O> TestFunction<O> for GapTest<O> {
    fn eval(&self, obs: &O) -> f64 {
        let mut v = vec![0.0; self.q.num_actions()];
        self.q.values(obs, &mut v);
        let best = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        best - v[self.action]
    }
}

pub enum DiscriminatorClass<O> {
    Finite(Vec<Arc<dyn TestFunction<O>>>),
    /// Unit ball of the RBF kernel space.
    Mmd(Bandwidth),
}

impl<O> Clone for DiscriminatorClass<O> {
    fn clone(&self) -> Self {
        match self {
            DiscriminatorClass::Finite(v) => DiscriminatorClass::Finite(v.clone()),
            DiscriminatorClass::Mmd(b) => DiscriminatorClass::Mmd(*b),
        }
    }
}

/// One gap test per `(member, action)` pair, member-major.
pub fn build_discriminators<O: 'static>(members: &[Arc<dyn QFunction<O>>]) -> Vec<Arc<dyn TestFunction<O>>> {
    members
        .iter()
        .flat_map(|f| {
            (0..f.num_actions()).map(move |a| {
                Arc::new(GapTest {
                    q: f.clone(),
                    action: a,
                }) as Arc<dyn TestFunction<O>>
            })
        })
        .collect()
}

/// `max_g |(1/n) sum_i w_i g(p_i) - mean_j g(q_j)|` over a finite class, with
/// the index of the maximizer (lowest index on ties).
pub fn ipm_finite<O>(
    p: &[O],
    weights_p: Option<&[f64]>,
    q: &[O],
    class: &[Arc<dyn TestFunction<O>>],
) -> Result<(f64, usize)> {
    if p.is_empty() || q.is_empty() || class.is_empty() {
        return Err(Error::Empty("ipm input".into()));
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for (j, g) in class.iter().enumerate() {
        let mp: f64 = p
            .iter()
            .enumerate()
            .map(|(i, x)| weights_p.map_or(1.0, |w| w[i]) * g.eval(x))
            .sum::<f64>()
            / p.len() as f64;
        let mq: f64 = q.iter().map(|x| g.eval(x)).sum::<f64>() / q.len() as f64;
        let v = (mp - mq).abs();
        if v > best.0 {
            best = (v, j);
        }
    }
    Ok(best)
}
