//! Single-member solvers that locate a rewarded path with few generative queries.

use serde::Serialize;

use super::linear::path_to_linear_policy;
use crate::error::{Error, Result};
use crate::mdp::{backup, ActionId, LinearPolicy, SequencePolicy, StateRef, TreePath};
use crate::query::GenerativeModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SioVariant {
    /// Deterministic tree whose first rewarded edge lies `gap` levels below the split.
    Deterministic { gap: u32 },
    /// Stochastic tree with jump probability `1/H^(k-1)`; each action is tried
    /// `ceil(c * H^(k-1))` times per level.
    Stochastic { k: u32, repeats_factor: f64 },
}

impl SioVariant {
    pub fn repeats(&self, horizon: u32) -> u64 {
        match *self {
            SioVariant::Deterministic { .. } => 1,
            SioVariant::Stochastic { k, repeats_factor } => {
                (repeats_factor * (horizon as f64).powi(k as i32 - 1)).ceil() as u64
            }
        }
    }
}

/// Query budget of the deterministic variant: probes plus two per descent level.
pub fn sio_query_bound(horizon: u32, gap: u32) -> u64 {
    (1u64 << (gap + 1)) + 2 * horizon as u64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SioSolution {
    /// One action per level; levels before the start state take action 0.
    pub path: SequencePolicy,
    /// Leaf (or last tree node) the path ends at.
    pub end: TreePath,
    pub value: f64,
    pub queries: u64,
    pub found: bool,
}

impl SioSolution {
    pub fn linear_policy(&self, dim: usize) -> Result<LinearPolicy> {
        path_to_linear_policy(&self.path, dim)
    }
}

pub fn sio_greedy_solve(gm: &mut GenerativeModel<'_>, start: &StateRef, variant: SioVariant) -> Result<SioSolution> {
    let before = gm.ledger().generative_queries();
    let Some(start_path) = start.tree_path() else {
        return Err(Error::InvalidState(*start));
    };
    let mut solution = match variant {
        SioVariant::Deterministic { gap } => solve_deterministic(gm, start_path, gap)?,
        SioVariant::Stochastic { .. } => solve_stochastic(gm, start_path, variant.repeats(gm.mdp().horizon()))?,
    };
    solution.queries = gm.ledger().generative_queries() - before;
    Ok(solution)
}

fn finish(horizon: u32, start: TreePath, end: TreePath, value: f64, found: bool) -> SioSolution {
    let mut actions = vec![ActionId(0); horizon as usize];
    for h in start.len()..end.len() {
        actions[h as usize] = end.action_at(h);
    }
    SioSolution {
        path: SequencePolicy::new(actions),
        end,
        value,
        queries: 0,
        found,
    }
}

/// Rewarded action at `p`, trying `a0` first; `None` if neither pays.
fn rewarded_action(gm: &mut GenerativeModel<'_>, p: TreePath) -> Result<Option<(ActionId, f64)>> {
    for a in [ActionId::LEFT, ActionId::RIGHT] {
        let (r, _) = gm.query(&StateRef::Tree(p), a)?;
        if r > 0.0 {
            return Ok(Some((a, r)));
        }
    }
    Ok(None)
}

fn solve_deterministic(gm: &mut GenerativeModel<'_>, start: TreePath, gap: u32) -> Result<SioSolution> {
    let h = gm.mdp().horizon();
    let (half, probe) = (h / 2, h / 2 + gap);
    if probe >= h {
        return Err(Error::InvalidParams(format!("gap {gap} leaves no rewarded level below {half}")));
    }
    if start.len() >= h {
        return Ok(finish(h, start, start, 0.0, false));
    }
    let base = if start.len() < half { start.extend(0, half - start.len()) } else { start };

    let mut rewards = Vec::new();
    let mut node = base;
    if base.len() <= probe {
        let width = probe - base.len();
        let mut hit = None;
        for offset in 0..1u64 << width {
            let q = base.extend(offset, width);
            if let Some(found) = rewarded_action(gm, q)? {
                hit = Some((q, found));
                break;
            }
        }
        let Some((q, (a, r))) = hit else {
            return Ok(finish(h, start, base, 0.0, false));
        };
        rewards.resize((q.len() - start.len()) as usize, 0.0);
        rewards.push(r);
        node = q.child(a);
    }
    while node.len() < h {
        match rewarded_action(gm, node)? {
            Some((a, r)) => {
                rewards.push(r);
                node = node.child(a);
            }
            None if rewards.is_empty() => return Ok(finish(h, start, node, 0.0, false)),
            None => break,
        }
    }
    let value = rewards.iter().rev().fold(0.0, |v, &r| backup(r, [(1.0, v)]));
    Ok(finish(h, start, node, value, true))
}

fn solve_stochastic(gm: &mut GenerativeModel<'_>, start: TreePath, repeats: u64) -> Result<SioSolution> {
    let h = gm.mdp().horizon();
    let (quarter, half) = (h / 4, h / 2);
    if start.len() > half {
        return Ok(finish(h, start, start, 0.0, false));
    }
    let mut node = if start.len() < quarter { start.extend(0, quarter - start.len()) } else { start };
    let mut found = true;
    while node.len() < half {
        let mut chosen = None;
        'actions: for a in [ActionId::LEFT, ActionId::RIGHT] {
            for _ in 0..repeats {
                let (_, next) = gm.query(&StateRef::Tree(node), a)?;
                if matches!(next, StateRef::TerminalOne { .. }) {
                    chosen = Some(a);
                    break 'actions;
                }
            }
        }
        found &= chosen.is_some();
        node = node.child(chosen.unwrap_or(ActionId::LEFT));
    }
    Ok(finish(h, start, node, if found { 1.0 } else { 0.0 }, found))
}
