use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{dot, is_unit, normalize, ActionId, LayeredMdp, StateRef, TreePath};
use crate::error::{Error, Result};

/// A deterministic Markov policy.
pub trait Policy: Send + Sync {
    fn action(&self, mdp: &dyn LayeredMdp, s: &StateRef) -> ActionId;
}

/// Explicit state-to-action map; states outside the map take the fallback action.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeterministicPolicy {
    actions: HashMap<StateRef, ActionId>,
    fallback: ActionId,
}

impl DeterministicPolicy {
    pub fn new(actions: HashMap<StateRef, ActionId>, fallback: ActionId) -> Self {
        DeterministicPolicy { actions, fallback }
    }

    pub fn insert(&mut self, s: StateRef, a: ActionId) {
        self.actions.insert(s, a);
    }

    pub fn get(&self, s: &StateRef) -> ActionId {
        self.actions.get(s).copied().unwrap_or(self.fallback)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateRef, &ActionId)> {
        self.actions.iter()
    }
}

impl Policy for DeterministicPolicy {
    fn action(&self, _mdp: &dyn LayeredMdp, s: &StateRef) -> ActionId {
        self.get(s)
    }
}

/// One action per timestep, independent of the state reached.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SequencePolicy {
    actions: Vec<ActionId>,
}

impl SequencePolicy {
    pub fn new(actions: Vec<ActionId>) -> Self {
        SequencePolicy { actions }
    }

    pub fn constant(a: ActionId, horizon: u32) -> Self {
        SequencePolicy::new(vec![a; horizon as usize])
    }

    /// Follows `path` and then action 0 until `horizon`.
    pub fn from_path(path: TreePath, horizon: u32) -> Self {
        let mut actions = path.actions();
        actions.resize(horizon as usize, ActionId(0));
        SequencePolicy::new(actions)
    }

    pub fn actions(&self) -> &[ActionId] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn at(&self, t: u32) -> ActionId {
        self.actions.get(t as usize).copied().unwrap_or(ActionId(0))
    }
}

impl Policy for SequencePolicy {
    fn action(&self, _mdp: &dyn LayeredMdp, s: &StateRef) -> ActionId {
        self.at(s.level())
    }
}

/// Per-level unit parameter vectors; the action maximizes `feature · theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPolicy {
    thetas: Vec<Vec<f64>>,
}

impl LinearPolicy {
    pub fn new(thetas: Vec<Vec<f64>>) -> Result<Self> {
        let dim = thetas.first().map_or(0, Vec::len);
        for (h, t) in thetas.iter().enumerate() {
            if t.len() != dim {
                return Err(Error::InvalidParams(format!(
                    "theta at level {h} has dimension {} instead of {dim}",
                    t.len()
                )));
            }
            if !is_unit(t) {
                return Err(Error::InvalidParams(format!("theta at level {h} is not unit norm")));
            }
        }
        Ok(LinearPolicy { thetas })
    }

    pub fn normalized(thetas: Vec<Vec<f64>>) -> Result<Self> {
        LinearPolicy::new(thetas.into_iter().map(normalize).collect())
    }

    pub fn thetas(&self) -> &[Vec<f64>] {
        &self.thetas
    }

    pub fn theta(&self, level: u32) -> &[f64] {
        &self.thetas[level as usize]
    }

    pub fn horizon(&self) -> u32 {
        self.thetas.len() as u32
    }

    pub fn dim(&self) -> usize {
        self.thetas.first().map_or(0, Vec::len)
    }
}

/// Argmax of `feature(s, a) · theta_level(s)`; ties go to the smallest action.
pub fn linear_action(mdp: &dyn LayeredMdp, lin: &LinearPolicy, s: &StateRef) -> ActionId {
    let level = s.level().min(lin.horizon().saturating_sub(1));
    let theta = lin.theta(level);
    let mut best = ActionId(0);
    let mut best_score = f64::NEG_INFINITY;
    for a in 0..mdp.action_count() {
        let score = dot(&mdp.feature(s, ActionId(a)), theta);
        if score > best_score {
            best = ActionId(a);
            best_score = score;
        }
    }
    best
}

impl Policy for LinearPolicy {
    fn action(&self, mdp: &dyn LayeredMdp, s: &StateRef) -> ActionId {
        linear_action(mdp, self, s)
    }
}

impl<P: Policy + ?Sized> Policy for &P {
    fn action(&self, mdp: &dyn LayeredMdp, s: &StateRef) -> ActionId {
        (**self).action(mdp, s)
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn action(&self, mdp: &dyn LayeredMdp, s: &StateRef) -> ActionId {
        (**self).action(mdp, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::TabularMdp;

    #[test]
    fn linear_policy_requires_unit_thetas() {
        assert!(LinearPolicy::new(vec![vec![1.0, 1.0]]).is_err());
        assert!(LinearPolicy::normalized(vec![vec![1.0, 1.0]]).is_ok());
        assert!(LinearPolicy::new(vec![vec![1.0, 0.0], vec![1.0]]).is_err());
    }

    #[test]
    fn indicator_features_pick_heaviest_coordinate() {
        let m = TabularMdp::chain(&[0.0, 0.0], 3).unwrap();
        let lin = LinearPolicy::normalized(vec![vec![0.1, 0.9, 0.3]; 2]).unwrap();
        assert_eq!(linear_action(&m, &lin, &StateRef::root()), ActionId(1));
        let tied = LinearPolicy::normalized(vec![vec![0.5, 0.5, 0.1]; 2]).unwrap();
        assert_eq!(linear_action(&m, &tied, &StateRef::root()), ActionId(0));
    }

    #[test]
    fn sequence_pads_from_path() {
        let p = TreePath::from_bits(0b10, 2);
        let seq = SequencePolicy::from_path(p, 4);
        assert_eq!(seq.actions(), &[ActionId(1), ActionId(0), ActionId(0), ActionId(0)]);
    }
}
