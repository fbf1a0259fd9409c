//! Query models and cost accounting.
//!
//! [`GenerativeModel`] answers arbitrary state-action queries; [`EpisodicSession`]
//! only moves forward from the initial state. Both charge a shared
//! [`QueryLedger`], which refuses (without charging) any call that would exceed
//! its budget.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{ensure_pair, ActionId, LayeredMdp, StateRef};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    sample_cost: u64,
    oracle_charge: u64,
    budget: Option<u64>,
    mdp_samples: u64,
    generative_queries: u64,
    episode_steps: u64,
    oracle_calls: u64,
}

impl QueryLedger {
    /// Ledger charging `sample_cost` per MDP draw and `horizon` per oracle call.
    pub fn new(sample_cost: u64, horizon: u32) -> Self {
        assert!(sample_cost >= 1, "per-MDP sample cost must be at least 1");
        QueryLedger {
            sample_cost,
            oracle_charge: horizon as u64,
            budget: None,
            mdp_samples: 0,
            generative_queries: 0,
            episode_steps: 0,
            oracle_calls: 0,
        }
    }

    pub fn with_oracle_charge(mut self, charge: u64) -> Self {
        self.oracle_charge = charge;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn sample_cost(&self) -> u64 {
        self.sample_cost
    }

    pub fn oracle_charge(&self) -> u64 {
        self.oracle_charge
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    pub fn mdp_samples(&self) -> u64 {
        self.mdp_samples
    }

    pub fn generative_queries(&self) -> u64 {
        self.generative_queries
    }

    pub fn episode_steps(&self) -> u64 {
        self.episode_steps
    }

    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls
    }

    pub fn total_cost(&self) -> u64 {
        self.sample_cost * self.mdp_samples
            + self.generative_queries
            + self.episode_steps
            + self.oracle_charge * self.oracle_calls
    }

    pub fn remaining(&self) -> Option<u64> {
        self.budget.map(|b| b.saturating_sub(self.total_cost()))
    }

    /// Whether the counters are consistent with the cost formula and the budget.
    pub fn audit(&self) -> bool {
        let recomputed = self
            .mdp_samples
            .checked_mul(self.sample_cost)
            .and_then(|x| x.checked_add(self.generative_queries))
            .and_then(|x| x.checked_add(self.episode_steps))
            .and_then(|x| x.checked_add(self.oracle_calls.checked_mul(self.oracle_charge)?));
        recomputed == Some(self.total_cost()) && self.budget.map_or(true, |b| self.total_cost() <= b)
    }

    fn reserve(&self, amount: u64) -> Result<()> {
        match self.budget {
            Some(budget) if self.total_cost() + amount > budget => Err(Error::BudgetExhausted {
                budget,
                spent: self.total_cost(),
                requested: amount,
            }),
            _ => Ok(()),
        }
    }

    pub fn charge_sample(&mut self) -> Result<()> {
        self.reserve(self.sample_cost)?;
        self.mdp_samples += 1;
        Ok(())
    }

    pub fn charge_query(&mut self) -> Result<()> {
        self.reserve(1)?;
        self.generative_queries += 1;
        Ok(())
    }

    pub fn charge_step(&mut self) -> Result<()> {
        self.reserve(1)?;
        self.episode_steps += 1;
        Ok(())
    }

    pub fn charge_oracle(&mut self) -> Result<()> {
        self.reserve(self.oracle_charge)?;
        self.oracle_calls += 1;
        Ok(())
    }
}

/// Generative access to one MDP; every call costs one query.
pub struct GenerativeModel<'a> {
    mdp: &'a dyn LayeredMdp,
    ledger: &'a mut QueryLedger,
    rng: ChaCha8Rng,
}

impl<'a> GenerativeModel<'a> {
    pub fn new(mdp: &'a dyn LayeredMdp, ledger: &'a mut QueryLedger, seed: u64) -> Self {
        GenerativeModel {
            mdp,
            ledger,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn mdp(&self) -> &'a dyn LayeredMdp {
        self.mdp
    }

    pub fn ledger(&self) -> &QueryLedger {
        self.ledger
    }

    /// Rebinds to another MDP, keeping the ledger and random stream.
    pub fn switch_mdp(&mut self, mdp: &'a dyn LayeredMdp) {
        self.mdp = mdp;
    }

    pub fn query(&mut self, s: &StateRef, a: ActionId) -> Result<(f64, StateRef)> {
        ensure_pair(self.mdp, s, a)?;
        self.ledger.charge_query()?;
        let reward = self.mdp.reward(s, a);
        let next = self.mdp.transition(s, a).sample(&mut self.rng);
        Ok((reward, next))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub next: StateRef,
    pub done: bool,
}

/// Forward-only interaction from the initial state; opening is free, each step costs one.
pub struct EpisodicSession<'a> {
    mdp: &'a dyn LayeredMdp,
    ledger: &'a mut QueryLedger,
    rng: ChaCha8Rng,
    state: StateRef,
    finished: bool,
}

pub fn open_episode<'a>(
    mdp: &'a dyn LayeredMdp,
    ledger: &'a mut QueryLedger,
    seed: u64,
) -> EpisodicSession<'a> {
    let state = mdp.initial_state();
    EpisodicSession {
        mdp,
        ledger,
        rng: ChaCha8Rng::seed_from_u64(seed),
        finished: mdp.is_terminal(&state),
        state,
    }
}

impl EpisodicSession<'_> {
    pub fn state(&self) -> StateRef {
        self.state
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn ledger(&self) -> &QueryLedger {
        self.ledger
    }

    pub fn step(&mut self, a: ActionId) -> Result<StepOutcome> {
        if self.finished {
            return Err(Error::EpisodeFinished);
        }
        ensure_pair(self.mdp, &self.state, a)?;
        self.ledger.charge_step()?;
        let reward = self.mdp.reward(&self.state, a);
        let next = self.mdp.transition(&self.state, a).sample(&mut self.rng);
        self.state = next;
        self.finished = self.mdp.is_terminal(&next);
        Ok(StepOutcome {
            reward,
            next,
            done: self.finished,
        })
    }

    /// Steps through `actions`, returning the summed reward.
    pub fn replay(&mut self, actions: &[ActionId]) -> Result<f64> {
        let mut total = 0.0;
        for &a in actions {
            total += self.step(a)?.reward;
        }
        Ok(total)
    }
}
