//! Approximate optimal-value oracles.
//!
//! Every oracle returns, for a member `M` and state `s`, an estimate within
//! `[V*(s, M) - beta, V*(s, M)]`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::Result;
use crate::family::{MdpDistribution, Members};
use crate::instances::{BoundaryRule, Prop1OracleSpec};
use crate::mdp::{optimal_value, optimal_values, LayeredMdp, StateRef, ValueTable};
use crate::query::QueryLedger;
use crate::seed::unit_interval;

pub trait ValueOracle: Send + Sync + fmt::Debug {
    /// Largest shortfall below the optimal value.
    fn beta(&self) -> f64;

    /// Uncharged estimate, for audits.
    fn estimate(&self, member: u64, mdp: &dyn LayeredMdp, s: &StateRef) -> Result<f64>;

    fn query(&self, ledger: &mut QueryLedger, member: u64, mdp: &dyn LayeredMdp, s: &StateRef) -> Result<f64> {
        ledger.charge_oracle()?;
        self.estimate(member, mdp, s)
    }
}

/// Exact optimal values: closed forms where available, else dynamic programming.
#[derive(Debug, Clone, Default)]
pub struct ExactOracle {
    /// Precomputed tables for listed members without closed forms.
    tables: Vec<Option<Arc<ValueTable>>>,
}

impl ExactOracle {
    pub fn new(dist: &MdpDistribution) -> Result<Self> {
        let tables = match dist.members() {
            Members::Listed(members) => members
                .par_iter()
                .map(|(_, m)| {
                    let root = m.initial_state();
                    if m.analytic_optimal_value(&root).is_some() {
                        Ok(None)
                    } else {
                        optimal_values(m.as_ref()).map(|t| Some(Arc::new(t)))
                    }
                })
                .collect::<Result<Vec<_>>>()?,
            Members::Uniform { .. } => Vec::new(),
        };
        Ok(ExactOracle { tables })
    }
}

impl ValueOracle for ExactOracle {
    fn beta(&self) -> f64 {
        0.0
    }

    fn estimate(&self, member: u64, mdp: &dyn LayeredMdp, s: &StateRef) -> Result<f64> {
        if mdp.is_terminal(s) {
            return Ok(0.0);
        }
        if let Some(Some(table)) = self.tables.get(member as usize) {
            if let Some(v) = table.value(s) {
                return Ok(v);
            }
        }
        optimal_value(mdp, s)
    }
}

/// Exact values lowered by a seeded fraction of `beta`, fixed per `(member, s)`.
#[derive(Debug, Clone)]
pub struct PerturbedOracle {
    exact: ExactOracle,
    beta: f64,
    seed: u64,
}

impl PerturbedOracle {
    pub fn new(exact: ExactOracle, beta: f64, seed: u64) -> Result<Self> {
        if !(0.0..0.25).contains(&beta) {
            return Err(crate::Error::InvalidParams(format!("beta must be in [0, 1/4), got {beta}")));
        }
        Ok(PerturbedOracle { exact, beta, seed })
    }

    pub fn shortfall(&self, member: u64, s: &StateRef) -> f64 {
        let [k0, k1, k2] = s.key_words();
        unit_interval(&[self.seed, member, k0, k1, k2]) * self.beta
    }
}

impl ValueOracle for PerturbedOracle {
    fn beta(&self) -> f64 {
        self.beta
    }

    fn estimate(&self, member: u64, mdp: &dyn LayeredMdp, s: &StateRef) -> Result<f64> {
        let v = self.exact.estimate(member, mdp, s)?;
        if self.beta == 0.0 || mdp.is_terminal(s) {
            return Ok(v);
        }
        Ok(v - self.shortfall(member, s))
    }
}

/// Pessimistic oracle that hides the special nodes of the block tree.
#[derive(Debug, Clone)]
pub struct Prop1Oracle {
    spec: Prop1OracleSpec,
    rule: BoundaryRule,
}

impl Prop1Oracle {
    pub fn new(spec: Prop1OracleSpec, rule: BoundaryRule) -> Self {
        Prop1Oracle { spec, rule }
    }

    pub fn rule(&self) -> BoundaryRule {
        self.rule
    }
}

impl ValueOracle for Prop1Oracle {
    fn beta(&self) -> f64 {
        self.spec.beta()
    }

    fn estimate(&self, _member: u64, _mdp: &dyn LayeredMdp, s: &StateRef) -> Result<f64> {
        Ok(self.spec.value(s, self.rule))
    }
}
