//! Backward phase: policy search by dynamic programming from a reset model or
//! from a roll-in policy, and conservative policy iteration for discounted chains.

mod cpi;
mod psdp;

pub use cpi::{
    advantage_from_samples, advantage_samples, cpi_trace, estimate_advantage, exact_advantage, AdvantageEstimate,
    AdvantageMode, AdvantageSample, CpiConfig, CpiIteration, CpiResult, StepSize,
};
pub use psdp::{psdp_reset, psdp_trace, BackwardConfig, BackwardResult};

