//! Best-effort search for the shared optimal leaf of a deterministic tree family.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::sio::{sio_greedy_solve, SioVariant};
use crate::error::{Error, Result};
use crate::family::MdpDistribution;
use crate::mdp::{StateRef, TreePath};
use crate::query::{GenerativeModel, QueryLedger};
use crate::seed::mix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub found: Option<TreePath>,
    pub subtrees_probed: u64,
    pub generative_queries: u64,
}

/// Visits split-level subtrees in a uniformly random order. In each, finds the
/// rewarded path of one member and checks it edge by edge in a second member;
/// only the shared optimal path is rewarded in both.
pub fn locate_shared_leaf(dist: &MdpDistribution, gap: u32, ledger: &mut QueryLedger, seed: u64) -> Result<SearchOutcome> {
    if dist.len() < 2 {
        return Err(Error::InvalidParams("search needs at least two members".into()));
    }
    let horizon = dist.horizon();
    let half = horizon / 2;
    if half > 30 {
        return Err(Error::InvalidParams(format!("too many subtrees to enumerate at horizon {horizon}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, 0x5EA2]));
    let (a_id, first) = dist.sample_mdp(ledger, &mut rng)?;
    let mut second = dist.sample_mdp(ledger, &mut rng)?;
    while second.0 == a_id {
        second = dist.sample_mdp(ledger, &mut rng)?;
    }
    let second = second.1;

    let mut order: Vec<u32> = (0..1u32 << half).collect();
    order.shuffle(&mut rng);
    let mut gm = GenerativeModel::new(first.as_ref(), ledger, rng.random());
    let mut probed = 0;
    for &subtree in &order {
        probed += 1;
        gm.switch_mdp(first.as_ref());
        let root = StateRef::Tree(TreePath::from_bits(subtree as u64, half));
        let sol = sio_greedy_solve(&mut gm, &root, SioVariant::Deterministic { gap })?;
        if !sol.found {
            continue;
        }
        gm.switch_mdp(second.as_ref());
        let mut shared = true;
        for level in half + gap..horizon {
            let (r, _) = gm.query(&StateRef::Tree(sol.end.prefix(level)), sol.end.action_at(level))?;
            if r <= 0.0 {
                shared = false;
                break;
            }
        }
        if shared {
            return Ok(SearchOutcome {
                found: Some(sol.end),
                subtrees_probed: probed,
                generative_queries: gm.ledger().generative_queries(),
            });
        }
    }
    Ok(SearchOutcome {
        found: None,
        subtrees_probed: probed,
        generative_queries: gm.ledger().generative_queries(),
    })
}
