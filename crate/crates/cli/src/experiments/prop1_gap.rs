//! Greedy planner on the block tree with a pessimistic value oracle.

use std::collections::BTreeMap;

use proxgen_core::instances::build_prop1_instance;
use proxgen_core::seed::mix;
use proxgen_core::{
    genrl_train, optimal_value, policy_value, GenRlConfig, Prop1Oracle, QueryLedger, StateRef,
};

use super::{pass_fraction, par_trials, RunResult, VALUE_TOLERANCE};
use crate::config::ExperimentConfig;
use crate::report::{Check, Report, ResultRow, Summary};

pub const GAP_FRACTION: f64 = 0.5;

pub(super) fn run(config: &ExperimentConfig) -> RunResult<Report> {
    let a = &config.algorithm;
    let h = config.horizon();
    let n = super::genrl_strong::samples(config);
    let tie_break = a.tie_break.modes()[0];
    let rows = par_trials(config.seed, config.trials, |trial, seed| {
        let params = config.prop1_params(seed);
        let (dist, spec) = build_prop1_instance(params)?;
        let oracle = Prop1Oracle::new(spec, a.boundary_rule);
        let mut ledger = QueryLedger::new(dist.sample_cost(), h);
        let planner = GenRlConfig {
            samples: n,
            tie_break,
            seed: mix(&[seed, 0x9A9]),
        };
        let (policy, _) = genrl_train(&dist, &oracle, &mut ledger, planner)?;
        let mdp = dist.member(0);
        let root = StateRef::root();
        let value = policy_value(mdp.as_ref(), &policy, &root)?;
        let optimum = optimal_value(mdp.as_ref(), &root)?;
        let bound = params.full_gap();
        let mut row = ResultRow::new("prop1-gap", "genrl", trial, seed, dist.manifest().hash(), h).with_ledger(&ledger);
        row.value = Some(value);
        row.optimum = Some(optimum);
        row.gap = Some(optimum - value);
        row.bound = Some(bound);
        row.pass = optimum - value >= bound - VALUE_TOLERANCE;
        Ok(row)
    })?;
    let mut aggregates = BTreeMap::new();
    aggregates.insert("samples_per_step".to_string(), n as f64);
    let mean_gap = rows.iter().filter_map(|r| r.gap).sum::<f64>() / rows.len().max(1) as f64;
    aggregates.insert("mean_gap".into(), mean_gap);
    let checks = vec![Check::at_least("large_gap_fraction", pass_fraction(&rows), GAP_FRACTION)];
    let summary = Summary::new(config, &rows, checks, aggregates, Vec::new());
    Ok(Report { rows, summary })
}
