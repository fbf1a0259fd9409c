//! Layered finite-horizon MDPs, policies and exact evaluation.

mod model;
mod policy;
mod rollout;
mod state;
mod tabular;
mod transition;
mod value;

pub use model::{
    actions, dot, ensure_pair, is_unit, normalize, LayeredMdp, Representation,
    FEATURE_NORM_TOLERANCE,
};
pub use policy::{linear_action, DeterministicPolicy, LinearPolicy, Policy, SequencePolicy};
pub use rollout::{rollout, RolloutStep, Trajectory};
pub use state::{ActionId, StateRef, TreePath};
pub use tabular::{TabularMdp, TabularState};
pub use transition::{tv_distance, TransitionSupport, PROBABILITY_TOLERANCE};
pub use value::{
    backup, greedy_policy, optimal_value, optimal_value_dp, optimal_values, optimal_values_from,
    optimal_values_over,
    policy_value, q_from_table, PolicyEvaluator, ValueTable, DEFAULT_STATE_CAP,
};
