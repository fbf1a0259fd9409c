use std::collections::HashMap;

use super::{ActionId, DeterministicPolicy, LayeredMdp, Policy, StateRef};
use crate::error::{Error, Result};

pub const DEFAULT_STATE_CAP: usize = 1 << 20;

/// One Bellman backup: `reward + sum(p * v)` accumulated in entry order.
///
/// Every value computation in the crate, analytic or not, goes through this
/// function so that closed forms reproduce dynamic programming bit-for-bit.
pub fn backup(reward: f64, terms: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let mut acc = reward;
    for (p, v) in terms {
        acc += p * v;
    }
    acc
}

/// Optimal values and greedy actions of every state reachable from a start.
#[derive(Debug, Clone, Default)]
pub struct ValueTable {
    values: HashMap<StateRef, f64>,
    greedy: HashMap<StateRef, ActionId>,
}

impl ValueTable {
    pub fn value(&self, s: &StateRef) -> Option<f64> {
        self.values.get(s).copied()
    }

    /// Greedy action, absent for terminal states.
    pub fn action(&self, s: &StateRef) -> Option<ActionId> {
        self.greedy.get(s).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateRef, &f64)> {
        self.values.iter()
    }

    /// Non-terminal states in the table.
    pub fn decision_states(&self) -> impl Iterator<Item = &StateRef> {
        self.greedy.keys()
    }
}

struct Solver<'a> {
    mdp: &'a dyn LayeredMdp,
    cap: usize,
    table: ValueTable,
}

impl Solver<'_> {
    fn solve(&mut self, s: StateRef) -> Result<f64> {
        if let Some(v) = self.table.values.get(&s) {
            return Ok(*v);
        }
        let (value, action) = if self.mdp.is_terminal(&s) {
            (0.0, None)
        } else {
            let mut best = (f64::NEG_INFINITY, ActionId(0));
            for a in 0..self.mdp.action_count() {
                let a = ActionId(a);
                let q = self.q_value(&s, a)?;
                if q > best.0 {
                    best = (q, a);
                }
            }
            (best.0, Some(best.1))
        };
        if self.table.values.len() >= self.cap {
            return Err(Error::CapExceeded { cap: self.cap });
        }
        self.table.values.insert(s, value);
        if let Some(a) = action {
            self.table.greedy.insert(s, a);
        }
        Ok(value)
    }

    fn q_value(&mut self, s: &StateRef, a: ActionId) -> Result<f64> {
        let support = self.mdp.transition(s, a);
        let mut terms = smallvec::SmallVec::<[(f64, f64); 2]>::new();
        for &(next, p) in support.entries() {
            terms.push((p, self.solve(next)?));
        }
        Ok(backup(self.mdp.reward(s, a), terms))
    }
}

/// Exact optimal values over everything reachable from the initial state.
pub fn optimal_values(mdp: &dyn LayeredMdp) -> Result<ValueTable> {
    optimal_values_from(mdp, mdp.initial_state(), DEFAULT_STATE_CAP)
}

pub fn optimal_values_from(mdp: &dyn LayeredMdp, start: StateRef, cap: usize) -> Result<ValueTable> {
    let mut solver = Solver {
        mdp,
        cap,
        table: ValueTable::default(),
    };
    solver.solve(start)?;
    Ok(solver.table)
}

/// Optimal values over everything reachable from any of `starts`.
pub fn optimal_values_over<'s>(
    mdp: &dyn LayeredMdp,
    starts: impl IntoIterator<Item = &'s StateRef>,
    cap: usize,
) -> Result<ValueTable> {
    let mut solver = Solver {
        mdp,
        cap,
        table: ValueTable::default(),
    };
    for s in starts {
        solver.solve(*s)?;
    }
    Ok(solver.table)
}

/// Optimal Q-value of `(s, a)` given a table covering the successors of `s`.
pub fn q_from_table(mdp: &dyn LayeredMdp, table: &ValueTable, s: &StateRef, a: ActionId) -> Option<f64> {
    let support = mdp.transition(s, a);
    let mut terms = smallvec::SmallVec::<[(f64, f64); 2]>::new();
    for &(next, p) in support.entries() {
        terms.push((p, table.value(&next)?));
    }
    Some(backup(mdp.reward(s, a), terms))
}

/// Dynamic-programming optimal value from `s`, ignoring any closed form.
pub fn optimal_value_dp(mdp: &dyn LayeredMdp, s: &StateRef) -> Result<f64> {
    let table = optimal_values_from(mdp, *s, DEFAULT_STATE_CAP)?;
    Ok(table.value(s).unwrap_or(0.0))
}

/// Optimal value from `s`: the closed form when available, otherwise DP.
pub fn optimal_value(mdp: &dyn LayeredMdp, s: &StateRef) -> Result<f64> {
    match mdp.analytic_optimal_value(s) {
        Some(v) => Ok(v),
        None => optimal_value_dp(mdp, s),
    }
}

/// Greedy policy read off a value table, falling back to action 0.
pub fn greedy_policy(table: &ValueTable) -> DeterministicPolicy {
    DeterministicPolicy::new(table.greedy.clone(), ActionId(0))
}

/// Memoized evaluation of one policy, touching only the states it reaches.
pub struct PolicyEvaluator<'a, P: Policy + ?Sized> {
    mdp: &'a dyn LayeredMdp,
    policy: &'a P,
    cap: usize,
    memo: HashMap<StateRef, f64>,
}

impl<'a, P: Policy + ?Sized> PolicyEvaluator<'a, P> {
    pub fn new(mdp: &'a dyn LayeredMdp, policy: &'a P) -> Self {
        PolicyEvaluator::with_cap(mdp, policy, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(mdp: &'a dyn LayeredMdp, policy: &'a P, cap: usize) -> Self {
        PolicyEvaluator {
            mdp,
            policy,
            cap,
            memo: HashMap::new(),
        }
    }

    pub fn value(&mut self, s: &StateRef) -> Result<f64> {
        if self.mdp.is_terminal(s) {
            return Ok(0.0);
        }
        if let Some(v) = self.memo.get(s) {
            return Ok(*v);
        }
        let a = self.policy.action(self.mdp, s);
        let support = self.mdp.transition(s, a);
        let mut terms = smallvec::SmallVec::<[(f64, f64); 2]>::new();
        for &(next, p) in support.entries() {
            terms.push((p, self.value(&next)?));
        }
        let v = backup(self.mdp.reward(s, a), terms);
        if self.memo.len() >= self.cap {
            return Err(Error::CapExceeded { cap: self.cap });
        }
        self.memo.insert(*s, v);
        Ok(v)
    }
}

/// Exact expected cumulative reward of `policy` from `start`.
pub fn policy_value<P: Policy + ?Sized>(mdp: &dyn LayeredMdp, policy: &P, start: &StateRef) -> Result<f64> {
    PolicyEvaluator::new(mdp, policy).value(start)
}
