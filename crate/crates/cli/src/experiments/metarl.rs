//! Train-then-test protocol with and without a training budget.

use std::collections::BTreeMap;

use proxgen_core::algorithms::{run_meta_protocol, sio_query_bound, MetaOutcome, MetaParams};
use proxgen_core::instances::Theorem1Instance;

use super::{fraction, par_trials, RunResult};
use crate::config::ExperimentConfig;
use crate::report::{Check, Report, ResultRow, Summary};

/// Largest acceptable fraction of test tasks solved by replaying training paths.
pub const REPLAY_CEILING: f64 = 0.01;

fn row(arm: &str, trial: u64, seed: u64, hash: &str, h: u32, sample_cost: u64, out: &MetaOutcome, bound: u64) -> ResultRow {
    let mut row = ResultRow::new("metarl", arm, trial, seed, hash.to_string(), h);
    row.value = Some(out.test_return);
    row.optimum = Some(1.0);
    row.gap = Some(1.0 - out.test_return);
    row.bound = Some(bound as f64);
    row.mdp_samples = (out.test_cost - out.test_queries - out.test_steps) / sample_cost;
    row.generative_queries = out.test_queries;
    row.episode_steps = out.test_steps;
    row.total_cost = out.test_cost;
    row.training_cost = out.training_cost;
    row.pass = out.success;
    row
}

pub(super) fn run(config: &ExperimentConfig) -> RunResult<Report> {
    let h = config.horizon();
    let gap = config.family.gap;
    let sample_cost = config.family.sample_cost;
    // One member draw plus the solver's queries.
    let bound = sample_cost + sio_query_bound(h, gap);
    let trials = par_trials(config.seed, config.trials, |trial, seed| {
        let inst = Theorem1Instance::build(config.theorem1_params(h, seed))?;
        let dist = inst.distribution();
        let hash = dist.manifest().hash();
        let mut params = MetaParams {
            gap,
            training_budget: config.budget.unwrap_or(0),
            seed,
        };
        let trained = run_meta_protocol(&dist, params)?;
        params.training_budget = 0;
        let cold = run_meta_protocol(&dist, params)?;
        Ok([
            (row("trained", trial, seed, &hash, h, sample_cost, &trained, bound), trained.replay_success),
            (row("zero-budget", trial, seed, &hash, h, sample_cost, &cold, bound), cold.replay_success),
        ])
    })?;
    let pairs: Vec<(ResultRow, bool)> = trials.into_iter().flatten().collect();

    let trained: Vec<&(ResultRow, bool)> = pairs.iter().filter(|p| p.0.arm == "trained").collect();
    let replay_rate = trained.iter().filter(|p| p.1).count() as f64 / trained.len().max(1) as f64;
    let cold = pairs.iter().map(|p| &p.0).filter(|r| r.arm == "zero-budget");
    let cold_worst = cold.clone().map(|r| r.total_cost).max().unwrap_or(0);
    let mut replay_check = Check::at_most("replay_success_rate", replay_rate, REPLAY_CEILING);
    replay_check.relation = "<";
    replay_check.passed = replay_rate < REPLAY_CEILING;
    let checks = vec![
        replay_check,
        Check::at_least("zero_budget_success_fraction", fraction(cold, |r| r.pass), 1.0),
        Check::at_most("zero_budget_max_test_cost", cold_worst as f64, bound as f64),
    ];
    let mut aggregates = BTreeMap::new();
    let mean = |arm: &str, f: fn(&ResultRow) -> f64| {
        let v: Vec<f64> = pairs.iter().filter(|p| p.0.arm == arm).map(|p| f(&p.0)).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    };
    aggregates.insert("trained_mean_training_cost".to_string(), mean("trained", |r| r.training_cost as f64));
    aggregates.insert("trained_mean_test_cost".into(), mean("trained", |r| r.total_cost as f64));
    aggregates.insert("zero_budget_mean_test_cost".into(), mean("zero-budget", |r| r.total_cost as f64));
    let notes = vec![
        "the lower bounds quantify over every meta-learning algorithm; this run can only falsify the tested replay-then-solve strategy".into(),
        "row costs are test-phase costs; training_cost is the training ledger total".into(),
    ];
    let rows: Vec<ResultRow> = pairs.into_iter().map(|p| p.0).collect();
    let summary = Summary::new(config, &rows, checks, aggregates, notes);
    Ok(Report { rows, summary })
}
