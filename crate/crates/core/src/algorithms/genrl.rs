//! Greedy multi-task planner: fixes one action per timestep by averaging
//! reward plus estimated optimal value over freshly sampled members.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::oracle::ValueOracle;
use crate::error::{Error, Result};
use crate::family::MdpDistribution;
use crate::mdp::{ActionId, SequencePolicy, StateRef};
use crate::query::{open_episode, QueryLedger};
use crate::seed::mix;

/// `ceil((H^2 / eps^2) * ln(2 H A / delta))`.
pub fn genrl_sample_size(epsilon: f64, delta: f64, horizon: u32, action_count: u32) -> u64 {
    let h = horizon as f64;
    let lead = h * h / (epsilon * epsilon);
    (lead * (2.0 * h * action_count as f64 / delta).ln()).ceil() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieBreak {
    Smallest,
    /// Uniform among tied actions, from the run's seeded stream.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GenRlConfig {
    pub samples: u64,
    pub tie_break: TieBreak,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenRlStep {
    pub t: u32,
    /// Shared state reached by the chosen prefix.
    pub state: StateRef,
    pub members: Vec<u64>,
    /// `q[i][a]`: reward plus estimated value after action `a` in member `i`.
    pub q: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub action: ActionId,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GenRlTrace {
    pub steps: Vec<GenRlStep>,
}

fn argmax(means: &[f64], tie_break: TieBreak, rng: &mut ChaCha8Rng) -> ActionId {
    let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..means.len()).filter(|&a| means[a] == best).collect();
    let pick = match tie_break {
        TieBreak::Smallest => tied[0],
        TieBreak::Random => tied[rng.random_range(0..tied.len())],
    };
    ActionId(pick as u32)
}

/// Runs the planner with episodic access only; each `(t, i, a)` opens a new
/// episode and replays the fixed prefix before taking `a`.
pub fn genrl_train(
    dist: &MdpDistribution,
    oracle: &dyn ValueOracle,
    ledger: &mut QueryLedger,
    config: GenRlConfig,
) -> Result<(SequencePolicy, GenRlTrace)> {
    let flags = dist.flags();
    if !(flags.shared_state_space && flags.shared_deterministic_transitions) {
        return Err(Error::NotDeterministicFamily);
    }
    if config.samples < 1 {
        return Err(Error::InvalidParams("need at least one sample per step".into()));
    }
    let horizon = dist.horizon();
    let actions = dist.action_count();
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[config.seed, 0x6E41]));
    let mut prefix: Vec<ActionId> = Vec::with_capacity(horizon as usize);
    let mut trace = GenRlTrace::default();
    let mut state = dist.member(0).initial_state();

    for t in 0..horizon {
        let n = config.samples as usize;
        let mut members = Vec::with_capacity(n);
        let mut q = Vec::with_capacity(n);
        for i in 0..n {
            let (id, mdp) = dist.sample_mdp(ledger, &mut rng)?;
            let mut row = Vec::with_capacity(actions as usize);
            for a in 0..actions {
                let episode_seed = mix(&[config.seed, t as u64, i as u64, a as u64]);
                let mut episode = open_episode(mdp.as_ref(), ledger, episode_seed);
                episode.replay(&prefix)?;
                let step = episode.step(ActionId(a))?;
                drop(episode);
                let estimate = oracle.query(ledger, id, mdp.as_ref(), &step.next)?;
                row.push(step.reward + estimate);
            }
            members.push(id);
            q.push(row);
        }
        let means: Vec<f64> = (0..actions as usize)
            .map(|a| q.iter().map(|row: &Vec<f64>| row[a]).sum::<f64>() / n as f64)
            .collect();
        let action = argmax(&means, config.tie_break, &mut rng);
        trace.steps.push(GenRlStep {
            t,
            state,
            members,
            q,
            means,
            action,
        });
        prefix.push(action);
        state = dist.member(0).transition(&state, action).entries()[0].0;
    }
    Ok((SequencePolicy::new(prefix), trace))
}
