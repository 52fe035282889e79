use crate::error::Result;
use crate::mdp::{LatentMdp, LatentMdpBuilder, Reward};

/// Two-level construction where the offline state distribution is closest in
/// total variation to the wrong action.
///
/// Level 1 states are indexed `0, 1, 2`; state 2 is the only rewarding one.
#[derive(Clone, Debug)]
pub struct OneStepHardness {
    pub mdp: LatentMdp,
    /// Offline distribution over level-1 states.
    pub offline: [f64; 3],
    /// The rewarding action at the start state.
    pub best_action: usize,
}

pub fn make_one_step_hardness() -> Result<OneStepHardness> {
    let mut b = LatentMdpBuilder::new(vec![1, 3], 2).initial(vec![1.0]);
    b.transition(0, 0, 0, vec![(0, 0.95), (1, 0.05)]);
    b.transition(0, 0, 1, vec![(1, 0.9), (2, 0.1)]);
    b.reward(1, 2, 0, Reward::fixed(1.0));
    b.reward(1, 2, 1, Reward::fixed(1.0));
    Ok(OneStepHardness {
        mdp: b.build()?,
        offline: [0.85, 0.05, 0.1],
        best_action: 1,
    })
}
