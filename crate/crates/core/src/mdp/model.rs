use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ActionId, StateRef, TransitionSupport};
use crate::error::{Error, Result};

pub const FEATURE_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    /// Reachable states can be enumerated within the default cap.
    Explicit,
    /// States are generated on demand; only analytic values are available at scale.
    Implicit,
}

/// Finite-horizon MDP whose states are partitioned into levels `0..=H`.
///
/// Every transition raises the level. States at level `H` and the zero-exit marker
/// are terminal. Implementations must be immutable so that members can be shared
/// across concurrent trials.
pub trait LayeredMdp: Send + Sync + fmt::Debug {
    fn horizon(&self) -> u32;

    fn action_count(&self) -> u32;

    fn initial_state(&self) -> StateRef {
        StateRef::root()
    }

    fn is_terminal(&self, s: &StateRef) -> bool {
        s.level() >= self.horizon() || matches!(s, StateRef::TerminalZero { .. })
    }

    /// Whether `s` is addressable in this MDP (not whether it is reachable).
    fn contains(&self, s: &StateRef) -> bool;

    /// Successor distribution; only called on non-terminal states it contains.
    fn transition(&self, s: &StateRef, a: ActionId) -> TransitionSupport;

    fn reward(&self, s: &StateRef, a: ActionId) -> f64;

    fn feature_dim(&self) -> usize;

    fn feature(&self, s: &StateRef, a: ActionId) -> Vec<f64>;

    fn representation(&self) -> Representation;

    /// Closed-form optimal value, when the construction provides one.
    ///
    /// Must agree bit-for-bit with dynamic programming over [`backup`](super::backup).
    fn analytic_optimal_value(&self, _s: &StateRef) -> Option<f64> {
        None
    }
}

pub fn actions(mdp: &dyn LayeredMdp) -> impl Iterator<Item = ActionId> {
    (0..mdp.action_count()).map(ActionId)
}

/// Rejects terminal, foreign or out-of-range inputs before a model call.
pub fn ensure_pair(mdp: &dyn LayeredMdp, s: &StateRef, a: ActionId) -> Result<()> {
    if a.0 >= mdp.action_count() || mdp.is_terminal(s) || !mdp.contains(s) {
        return Err(Error::InvalidState(*s));
    }
    Ok(())
}

pub fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn is_unit(v: &[f64]) -> bool {
    (dot(v, v).sqrt() - 1.0).abs() <= FEATURE_NORM_TOLERANCE
}
