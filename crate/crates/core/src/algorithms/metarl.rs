//! Train-then-test protocol: training records rewarded paths that replay in a
//! second member; testing replays them before falling back to the solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::sio::{sio_greedy_solve, SioVariant};
use crate::error::{Error, Result};
use crate::family::MdpDistribution;
use crate::mdp::{ActionId, StateRef, TreePath};
use crate::query::{open_episode, GenerativeModel, QueryLedger};
use crate::seed::mix;

/// Return a test-time policy must reach: within 1/4 of the best linear value 1.
pub const META_SUCCESS_THRESHOLD: f64 = 0.75;

/// Replay return that marks a path as optimal in the checking member.
const SHARED_RETURN: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetaParams {
    pub gap: u32,
    pub training_budget: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetaOutcome {
    pub training_cost: u64,
    pub training_rounds: u64,
    pub shared_paths: Vec<TreePath>,
    pub budget_exhausted: bool,
    pub test_cost: u64,
    pub test_queries: u64,
    pub test_steps: u64,
    pub replay_success: bool,
    pub success: bool,
    pub test_return: f64,
}

fn replay_return(mdp: &dyn crate::mdp::LayeredMdp, ledger: &mut QueryLedger, path: &TreePath, seed: u64) -> Result<f64> {
    let actions: Vec<ActionId> = path.actions();
    open_episode(mdp, ledger, seed).replay(&actions)
}

#[derive(Default)]
struct Training {
    rounds: u64,
    shared: Vec<TreePath>,
}

impl Training {
    /// One round: solve a random subtree of a fresh member, then replay the
    /// found path in a different member. Only a path optimal for both is kept.
    fn round(&mut self, dist: &MdpDistribution, gap: u32, ledger: &mut QueryLedger, rng: &mut ChaCha8Rng) -> Result<()> {
        let half = dist.horizon() / 2;
        let (id, member) = dist.sample_mdp(ledger, rng)?;
        let root = StateRef::Tree(TreePath::from_bits(rng.random_range(0..1u64 << half), half));
        let mut gm = GenerativeModel::new(member.as_ref(), ledger, rng.random());
        let sol = sio_greedy_solve(&mut gm, &root, SioVariant::Deterministic { gap })?;
        self.rounds += 1;
        if !sol.found {
            return Ok(());
        }
        let mut check = dist.sample_mdp(ledger, rng)?;
        while check.0 == id {
            check = dist.sample_mdp(ledger, rng)?;
        }
        let ret = replay_return(check.1.as_ref(), ledger, &sol.end, rng.random())?;
        if ret >= SHARED_RETURN && !self.shared.contains(&sol.end) {
            self.shared.push(sol.end);
        }
        Ok(())
    }
}

/// Runs training until its budget is spent, then tests on a fresh member with
/// a separate, unbudgeted ledger.
pub fn run_meta_protocol(dist: &MdpDistribution, params: MetaParams) -> Result<MetaOutcome> {
    if dist.len() < 2 || !dist.flags().shared_deterministic_transitions {
        return Err(Error::InvalidParams("meta protocol needs a deterministic family with two or more members".into()));
    }
    let horizon = dist.horizon();
    let mut train_ledger = QueryLedger::new(dist.sample_cost(), horizon).with_budget(params.training_budget);
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[params.seed, 0x7EA1]));
    let mut training = Training::default();
    let budget_exhausted = loop {
        match training.round(dist, params.gap, &mut train_ledger, &mut rng) {
            Ok(()) => {}
            Err(Error::BudgetExhausted { .. }) => break true,
            Err(e) => return Err(e),
        }
    };
    let (rounds, shared_paths) = (training.rounds, training.shared);

    let mut test_ledger = QueryLedger::new(dist.sample_cost(), horizon);
    rng = ChaCha8Rng::seed_from_u64(mix(&[params.seed, 0x7E57]));
    let (_, test_member) = dist.sample_mdp(&mut test_ledger, &mut rng)?;
    let mut replay_success = false;
    let mut test_return = 0.0;
    for path in &shared_paths {
        let ret = replay_return(test_member.as_ref(), &mut test_ledger, path, rng.random())?;
        if ret >= META_SUCCESS_THRESHOLD {
            replay_success = true;
            test_return = ret;
            break;
        }
    }
    if !replay_success {
        let mut gm = GenerativeModel::new(test_member.as_ref(), &mut test_ledger, rng.random());
        let sol = sio_greedy_solve(&mut gm, &StateRef::root(), SioVariant::Deterministic { gap: params.gap })?;
        test_return = sol.value;
    }
    Ok(MetaOutcome {
        training_cost: train_ledger.total_cost(),
        training_rounds: rounds,
        shared_paths,
        budget_exhausted,
        test_cost: test_ledger.total_cost(),
        test_queries: test_ledger.generative_queries(),
        test_steps: test_ledger.episode_steps(),
        replay_success,
        success: test_return >= META_SUCCESS_THRESHOLD,
        test_return,
    })
}
