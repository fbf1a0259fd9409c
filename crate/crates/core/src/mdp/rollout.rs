use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{ActionId, LayeredMdp, Policy, StateRef};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RolloutStep {
    pub state: StateRef,
    pub action: ActionId,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub steps: Vec<RolloutStep>,
    pub total: f64,
}

/// Samples one episode from the initial state; fully determined by `seed`.
pub fn rollout<P: Policy + ?Sized>(mdp: &dyn LayeredMdp, policy: &P, seed: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = mdp.initial_state();
    let mut steps = Vec::with_capacity(mdp.horizon() as usize);
    let mut total = 0.0;
    while !mdp.is_terminal(&s) {
        let action = policy.action(mdp, &s);
        let reward = mdp.reward(&s, action);
        total += reward;
        steps.push(RolloutStep {
            state: s,
            action,
            reward,
        });
        s = mdp.transition(&s, action).sample(&mut rng);
    }
    Trajectory { steps, total }
}
