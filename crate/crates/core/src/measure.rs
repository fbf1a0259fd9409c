//! Measurement of family similarity and proximity parameters.
//!
//! All measurements range over state-action pairs reachable in at least one
//! member under some policy; unreachable pairs cannot influence any value.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{MdpDistribution, SharedMdp};
use crate::mdp::{
    backup, optimal_value, optimal_values_over, tv_distance, ActionId, DeterministicPolicy, Policy, PolicyEvaluator, StateRef, DEFAULT_STATE_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    /// Largest reward difference between two members at one pair.
    pub eps_r: f64,
    /// Largest total variation between two members' successor distributions.
    pub eps_p: f64,
    pub states: usize,
}

impl GapReport {
    /// Right-hand side of the simulation-lemma inequality.
    pub fn simulation_bound(&self, horizon: u32) -> f64 {
        (self.eps_r + self.eps_p) * horizon as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AlphaMode {
    /// Suboptimality from the initial state only.
    Weak,
    /// Suboptimality from every reachable state.
    Strong,
}

fn all_members(dist: &MdpDistribution) -> Vec<SharedMdp> {
    (0..dist.len()).map(|id| dist.member(id)).collect()
}

/// Non-terminal states reachable in at least one member, in sorted order.
pub fn union_reachable_states(dist: &MdpDistribution, cap: usize) -> Result<Vec<StateRef>> {
    let mut union: HashSet<StateRef> = HashSet::new();
    for m in all_members(dist) {
        let mut seen: HashSet<StateRef> = HashSet::new();
        let mut stack = vec![m.initial_state()];
        while let Some(s) = stack.pop() {
            if m.is_terminal(&s) || !seen.insert(s) {
                continue;
            }
            if seen.len() > cap {
                return Err(Error::CapExceeded { cap });
            }
            for a in 0..m.action_count() {
                stack.extend(m.transition(&s, ActionId(a)).entries().iter().map(|e| e.0));
            }
        }
        union.extend(seen);
        if union.len() > cap {
            return Err(Error::CapExceeded { cap });
        }
    }
    let mut out: Vec<StateRef> = union.into_iter().collect();
    out.sort();
    Ok(out)
}

/// Exact reward and transition gaps of the family.
pub fn measure_gaps(dist: &MdpDistribution) -> Result<GapReport> {
    if !dist.flags().shared_state_space {
        return Err(Error::NotSharedSpace);
    }
    let members = all_members(dist);
    let states = union_reachable_states(dist, DEFAULT_STATE_CAP)?;
    let (eps_r, eps_p) = states
        .par_iter()
        .map(|s| {
            let mut eps_r: f64 = 0.0;
            let mut eps_p: f64 = 0.0;
            for a in 0..dist.action_count() {
                let a = ActionId(a);
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                let mut supports = Vec::new();
                for m in &members {
                    let r = m.reward(s, a);
                    lo = lo.min(r);
                    hi = hi.max(r);
                    let t = m.transition(s, a);
                    if !supports.iter().any(|u| *u == t) {
                        supports.push(t);
                    }
                }
                eps_r = eps_r.max(hi - lo);
                for i in 0..supports.len() {
                    for j in i + 1..supports.len() {
                        eps_p = eps_p.max(tv_distance(&supports[i], &supports[j]));
                    }
                }
            }
            (eps_r, eps_p)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(GapReport {
        eps_r,
        eps_p,
        states: states.len(),
    })
}

/// Largest suboptimality of `candidate` across members, from the initial state
/// (weak) or from every reachable state (strong).
pub fn measure_alpha<P: Policy + ?Sized>(dist: &MdpDistribution, candidate: &P, mode: AlphaMode) -> Result<f64> {
    let members = all_members(dist);
    let per_member: Vec<f64> = match mode {
        AlphaMode::Weak => members
            .par_iter()
            .map(|m| {
                let s0 = m.initial_state();
                let best = optimal_value(&**m, &s0)?;
                let mut eval = PolicyEvaluator::new(&**m, candidate);
                Ok(best - eval.value(&s0)?)
            })
            .collect::<Result<_>>()?,
        AlphaMode::Strong => {
            let states = union_reachable_states(dist, DEFAULT_STATE_CAP)?;
            members
                .par_iter()
                .map(|m| {
                    let table = optimal_values_over(&**m, states.iter(), DEFAULT_STATE_CAP)?;
                    let mut eval = PolicyEvaluator::new(&**m, candidate);
                    let mut worst: f64 = 0.0;
                    for s in &states {
                        let best = table.value(s).unwrap_or(0.0);
                        worst = worst.max(best - eval.value(s)?);
                    }
                    Ok(worst)
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(per_member.into_iter().fold(0.0, f64::max))
}

struct Candidate {
    values: Vec<f64>,
    assignment: Vec<(StateRef, ActionId)>,
}

/// Exhaustive search for the deterministic policy minimizing weak alpha.
///
/// Enumerates policies restricted to the states they can reach (choices at
/// unreachable states cannot change any value), so the count is
/// `N(s) = sum_a prod_{s'} N(s')` over the union successor graph. Requires every
/// non-terminal state to have a unique parent state and `N(s0) <= cap`.
pub fn brute_force_shared_policy(dist: &MdpDistribution, cap: usize) -> Result<(DeterministicPolicy, f64)> {
    if !dist.flags().shared_state_space {
        return Err(Error::NotSharedSpace);
    }
    let members = all_members(dist);
    let s0 = members[0].initial_state();
    let mut graph = UnionGraph {
        members: &members,
        successors: HashMap::new(),
        parents: HashMap::new(),
        counts: HashMap::new(),
    };
    let count = graph.count(s0, cap)?;
    if count > cap as u128 {
        return Err(Error::CapExceeded { cap });
    }
    let optimal: Vec<f64> = members
        .iter()
        .map(|m| optimal_value(&**m, &s0))
        .collect::<Result<_>>()?;
    let candidates = graph.enumerate(s0);
    let mut best: Option<(f64, &Candidate)> = None;
    for c in &candidates {
        let alpha = optimal
            .iter()
            .zip(&c.values)
            .map(|(o, v)| o - v)
            .fold(0.0, f64::max);
        if best.map_or(true, |(b, _)| alpha < b) {
            best = Some((alpha, c));
        }
    }
    let (alpha, c) = best.expect("at least one policy");
    let policy = DeterministicPolicy::new(c.assignment.iter().copied().collect(), ActionId(0));
    Ok((policy, alpha))
}

struct UnionGraph<'a> {
    members: &'a [SharedMdp],
    successors: HashMap<(StateRef, ActionId), Vec<StateRef>>,
    parents: HashMap<StateRef, StateRef>,
    counts: HashMap<StateRef, u128>,
}

impl UnionGraph<'_> {
    fn is_terminal(&self, s: &StateRef) -> bool {
        self.members[0].is_terminal(s)
    }

    fn count(&mut self, s: StateRef, cap: usize) -> Result<u128> {
        if self.is_terminal(&s) {
            return Ok(1);
        }
        if let Some(c) = self.counts.get(&s) {
            return Ok(*c);
        }
        let mut total: u128 = 0;
        for a in 0..self.members[0].action_count() {
            let a = ActionId(a);
            let mut succ: Vec<StateRef> = Vec::new();
            for m in self.members {
                for &(next, _) in m.transition(&s, a).entries() {
                    if !succ.contains(&next) {
                        succ.push(next);
                    }
                }
            }
            let mut product: u128 = 1;
            for &next in &succ {
                if !self.is_terminal(&next) {
                    if let Some(prev) = self.parents.insert(next, s) {
                        if prev != s {
                            return Err(Error::InvalidParams(format!(
                                "state {next:?} has several parents; policy enumeration needs a tree"
                            )));
                        }
                    }
                }
                product = product.saturating_mul(self.count(next, cap)?);
            }
            total = total.saturating_add(product);
            if total > cap as u128 {
                return Err(Error::CapExceeded { cap });
            }
            self.successors.insert((s, a), succ);
        }
        self.counts.insert(s, total);
        Ok(total)
    }

    fn enumerate(&self, s: StateRef) -> Vec<Candidate> {
        if self.is_terminal(&s) {
            return vec![Candidate {
                values: vec![0.0; self.members.len()],
                assignment: Vec::new(),
            }];
        }
        let mut out = Vec::new();
        for a in 0..self.members[0].action_count() {
            let a = ActionId(a);
            let succ = &self.successors[&(s, a)];
            let children: Vec<Vec<Candidate>> = succ.iter().map(|&n| self.enumerate(n)).collect();
            let mut index = vec![0usize; succ.len()];
            loop {
                let mut assignment = vec![(s, a)];
                for (k, &i) in index.iter().enumerate() {
                    assignment.extend_from_slice(&children[k][i].assignment);
                }
                let values = self
                    .members
                    .iter()
                    .enumerate()
                    .map(|(mi, m)| {
                        let support = m.transition(&s, a);
                        let terms = support.entries().iter().map(|(next, p)| {
                            let k = succ.iter().position(|x| x == next).expect("successor listed");
                            (*p, children[k][index[k]].values[mi])
                        });
                        backup(m.reward(&s, a), terms.collect::<Vec<_>>())
                    })
                    .collect();
                out.push(Candidate { values, assignment });
                // Odometer over the successor choices.
                let mut k = 0;
                loop {
                    if k == index.len() {
                        break;
                    }
                    index[k] += 1;
                    if index[k] < children[k].len() {
                        break;
                    }
                    index[k] = 0;
                    k += 1;
                }
                if k == index.len() {
                    break;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationRow {
    /// Largest value difference of the policy between two members.
    pub gap: f64,
    pub bound: f64,
    pub pass: bool,
}

pub const SIMULATION_TOLERANCE: f64 = 1e-9;

/// Checks `|V_i(pi) - V_j(pi)| <= (eps_r + eps_p) * H` for every policy and member pair.
pub fn simulation_lemma_check<P: Policy + Sync>(
    dist: &MdpDistribution,
    policies: &[P],
    gaps: &GapReport,
) -> Result<Vec<SimulationRow>> {
    let bound = gaps.simulation_bound(dist.horizon());
    let members = all_members(dist);
    policies
        .par_iter()
        .map(|p| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for m in &members {
                let v = PolicyEvaluator::new(&**m, p).value(&m.initial_state())?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let gap = hi - lo;
            Ok(SimulationRow {
                gap,
                bound,
                pass: gap <= bound + SIMULATION_TOLERANCE,
            })
        })
        .collect()
}
