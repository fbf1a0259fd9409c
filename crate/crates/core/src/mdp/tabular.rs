use std::collections::HashMap;

use super::{ActionId, LayeredMdp, Representation, StateRef, TransitionSupport};
use crate::error::{Error, Result};

/// One explicitly listed state: per-action reward and successor distribution.
#[derive(Debug, Clone)]
pub struct TabularState {
    pub state: StateRef,
    pub rewards: Vec<f64>,
    pub transitions: Vec<TransitionSupport>,
}

/// Explicit MDP given by a state table. Features are the action indicators.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    horizon: u32,
    action_count: u32,
    index: HashMap<StateRef, usize>,
    states: Vec<TabularState>,
}

impl TabularMdp {
    pub fn new(horizon: u32, action_count: u32, states: Vec<TabularState>) -> Result<Self> {
        if action_count < 2 {
            return Err(Error::InvalidParams("action count must be at least 2".into()));
        }
        let mut index = HashMap::with_capacity(states.len());
        for (i, st) in states.iter().enumerate() {
            if st.rewards.len() != action_count as usize
                || st.transitions.len() != action_count as usize
            {
                return Err(Error::InvalidParams(format!(
                    "state {:?} must list one reward and transition per action",
                    st.state
                )));
            }
            if st.state.level() >= horizon {
                return Err(Error::InvalidParams(format!(
                    "state {:?} lies at or beyond the horizon",
                    st.state
                )));
            }
            if let Some(r) = st.rewards.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                return Err(Error::InvalidParams(format!("reward {r} outside [0, 1]")));
            }
            for t in &st.transitions {
                t.validate_from(st.state.level())?;
            }
            if index.insert(st.state, i).is_some() {
                return Err(Error::InvalidParams(format!("duplicate state {:?}", st.state)));
            }
        }
        if !index.contains_key(&StateRef::root()) {
            return Err(Error::InvalidParams("missing initial state".into()));
        }
        Ok(TabularMdp {
            horizon,
            action_count,
            index,
            states,
        })
    }

    /// Single path of `rewards.len()` steps where every action leads to the next state.
    pub fn chain(rewards: &[f64], action_count: u32) -> Result<Self> {
        let horizon = rewards.len() as u32;
        let state_at = |level: u32| {
            if level == 0 {
                StateRef::root()
            } else {
                StateRef::Tabular { index: 0, level }
            }
        };
        let states = rewards
            .iter()
            .enumerate()
            .map(|(l, &r)| TabularState {
                state: state_at(l as u32),
                rewards: vec![r; action_count as usize],
                transitions: vec![
                    TransitionSupport::deterministic(state_at(l as u32 + 1));
                    action_count as usize
                ],
            })
            .collect();
        TabularMdp::new(horizon, action_count, states)
    }

    pub fn states(&self) -> impl Iterator<Item = &StateRef> {
        self.states.iter().map(|s| &s.state)
    }

    fn entry(&self, s: &StateRef) -> &TabularState {
        &self.states[self.index[s]]
    }
}

impl LayeredMdp for TabularMdp {
    fn horizon(&self) -> u32 {
        self.horizon
    }

    fn action_count(&self) -> u32 {
        self.action_count
    }

    fn contains(&self, s: &StateRef) -> bool {
        self.index.contains_key(s)
    }

    fn transition(&self, s: &StateRef, a: ActionId) -> TransitionSupport {
        self.entry(s).transitions[a.index()].clone()
    }

    fn reward(&self, s: &StateRef, a: ActionId) -> f64 {
        self.entry(s).rewards[a.index()]
    }

    fn feature_dim(&self) -> usize {
        self.action_count as usize
    }

    fn feature(&self, _s: &StateRef, a: ActionId) -> Vec<f64> {
        let mut v = vec![0.0; self.action_count as usize];
        v[a.index()] = 1.0;
        v
    }

    fn representation(&self) -> Representation {
        Representation::Explicit
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_shape() {
        let m = TabularMdp::chain(&[0.1, 0.2, 0.3], 2).unwrap();
        assert_eq!(m.horizon(), 3);
        assert_eq!(m.states().count(), 3);
        let next = m.transition(&StateRef::root(), ActionId(1));
        assert_eq!(next.entries()[0].0, StateRef::Tabular { index: 0, level: 1 });
        assert!(m.is_terminal(&StateRef::Tabular { index: 0, level: 3 }));
    }

    #[test]
    fn rejects_out_of_range_reward() {
        assert!(TabularMdp::chain(&[1.5], 2).is_err());
    }
}
