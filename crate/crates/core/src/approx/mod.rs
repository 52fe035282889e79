//! Function classes: Q-functions, discriminators, kernels and policy classes.

mod discriminator;
mod features;
mod kernel;
mod mlp;
mod policy_class;
mod qfunc;

pub use discriminator::{build_discriminators, ipm_finite, DiscriminatorClass, GapTest, TestFunction};
pub use features::{FeatureMap, OneHot, RawFeatures};
pub use kernel::{median_bandwidth, mmd2, Bandwidth, KernelWitness, Rbf};
pub use mlp::{Adam, Mlp};
pub use policy_class::{GreedyRule, PolicyClass, SoftmaxRule};
pub use qfunc::{fit_least_squares, Clamped, LinearQ, MlpQ, QClass, QFunction, RegressorConfig, TabularQ};
