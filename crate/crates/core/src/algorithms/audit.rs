//! Checks of the planner's per-step guarantees against exact quantities.

use rayon::prelude::*;
use serde::Serialize;

use super::genrl::{genrl_train, GenRlConfig, GenRlTrace, TieBreak};
use super::oracle::{ExactOracle, ValueOracle};
use crate::error::Result;
use crate::family::MdpDistribution;
use crate::mdp::{ActionId, StateRef};
use crate::query::QueryLedger;
use crate::seed::mix;

pub const AUDIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QGapViolation {
    pub t: u32,
    pub star_action: ActionId,
    pub other: ActionId,
    /// How far the shared optimal action's mean falls below the allowed slack.
    pub excess: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct QGapReport {
    pub steps: usize,
    pub violations: Vec<QGapViolation>,
}

/// At every step, the shared optimal action's mean must be within
/// `alpha + beta` of every other action's mean.
pub fn q_gap_audit(
    trace: &GenRlTrace,
    star_action: &dyn Fn(&StateRef) -> ActionId,
    alpha: f64,
    beta: f64,
) -> QGapReport {
    let mut report = QGapReport {
        steps: trace.steps.len(),
        violations: Vec::new(),
    };
    for step in &trace.steps {
        let star = star_action(&step.state);
        let star_mean = step.means[star.index()];
        for (a, &mean) in step.means.iter().enumerate() {
            let shortfall = mean - alpha - beta - AUDIT_TOLERANCE - star_mean;
            if shortfall > 0.0 {
                report.violations.push(QGapViolation {
                    t: step.t,
                    star_action: star,
                    other: ActionId(a as u32),
                    excess: shortfall,
                });
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub repetitions: usize,
    pub slack: f64,
    pub threshold: f64,
    /// Per step, the fraction of runs whose every action mean was within slack.
    pub frequencies: Vec<f64>,
    /// Per step, the largest deviation seen over all runs and actions.
    pub max_deviation: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationParams {
    pub samples: u64,
    pub repetitions: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
}

/// Repeats the planner and compares each step's action means with the exact
/// expectation of reward plus optimal value; slack is `beta + eps / (2H)`.
pub fn concentration_audit(
    dist: &MdpDistribution,
    oracle: &dyn ValueOracle,
    params: ConcentrationParams,
) -> Result<ConcentrationReport> {
    let horizon = dist.horizon();
    let exact = ExactOracle::new(dist)?;
    let slack = oracle.beta() + params.epsilon / (2.0 * horizon as f64);
    let runs: Vec<Vec<f64>> = (0..params.repetitions)
        .into_par_iter()
        .map(|r| {
            let config = GenRlConfig {
                samples: params.samples,
                tie_break: TieBreak::Smallest,
                seed: mix(&[params.seed, r as u64]),
            };
            let mut ledger = QueryLedger::new(dist.sample_cost(), horizon);
            let (_, trace) = genrl_train(dist, oracle, &mut ledger, config)?;
            trace
                .steps
                .iter()
                .map(|step| {
                    let expected = expected_q(dist, &exact, &step.state)?;
                    Ok(step
                        .means
                        .iter()
                        .zip(&expected)
                        .map(|(m, e)| (m - e).abs())
                        .fold(0.0, f64::max))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let mut frequencies = Vec::with_capacity(horizon as usize);
    let mut max_deviation = Vec::with_capacity(horizon as usize);
    for t in 0..horizon as usize {
        let within = runs.iter().filter(|r| r[t] <= slack + AUDIT_TOLERANCE).count();
        frequencies.push(within as f64 / params.repetitions.max(1) as f64);
        max_deviation.push(runs.iter().map(|r| r[t]).fold(0.0, f64::max));
    }
    let threshold = 1.0 - params.delta / horizon as f64;
    let passed = frequencies.iter().all(|&f| f >= threshold);
    Ok(ConcentrationReport {
        repetitions: params.repetitions,
        slack,
        threshold,
        frequencies,
        max_deviation,
        passed,
    })
}

/// Weighted expectation over members of reward plus optimal successor value.
pub fn expected_q(dist: &MdpDistribution, exact: &ExactOracle, s: &StateRef) -> Result<Vec<f64>> {
    let mut out = vec![0.0; dist.action_count() as usize];
    for id in 0..dist.len() {
        let m = dist.member(id);
        let w = dist.weight(id);
        for (a, slot) in out.iter_mut().enumerate() {
            let a = ActionId(a as u32);
            let mut q = m.reward(s, a);
            for &(next, p) in m.transition(s, a).entries() {
                q += p * exact.estimate(id, m.as_ref(), &next)?;
            }
            *slot += w * q;
        }
    }
    Ok(out)
}
