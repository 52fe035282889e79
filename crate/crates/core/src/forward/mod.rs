//! Forward phase: per-level distribution matching by a min-max game, and its
//! interactive stationary variant.

mod fail;
mod game;
mod inter_fail;

pub use fail::{fail_forward, ForwardConfig, ForwardResult};
pub use game::{
    exponential_weights, hedge_step, minmax_game, GameConfig, GameOutcome, GameRecord, GameTranscript, OnlineTuple,
};
pub use inter_fail::{inter_fail, InterFailConfig, InterFailResult};

pub(crate) use fail::per_level;
