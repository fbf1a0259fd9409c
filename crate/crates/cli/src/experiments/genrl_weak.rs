//! Greedy planner on the deterministic tree family, where one shared linear
//! policy is optimal but the planner cannot find it.

use std::collections::BTreeMap;

use proxgen_core::algorithms::{linear_trajectory, path_to_linear_policy};
use proxgen_core::instances::Theorem1Instance;
use proxgen_core::seed::{mix, trial_seed};
use proxgen_core::{
    expected_policy_value, genrl_train, measure_alpha, measure_gaps, AlphaMode, ExactOracle, GenRlConfig,
    QueryLedger, SequencePolicy, TieBreak,
};

use super::{fraction, par_trials, RunResult, VALUE_TOLERANCE};
use crate::config::ExperimentConfig;
use crate::report::{Check, Report, ResultRow, Summary};

const EXACTNESS: f64 = 1e-12;

fn tie_name(t: TieBreak) -> &'static str {
    match t {
        TieBreak::Smallest => "smallest",
        TieBreak::Random => "random",
    }
}

pub(super) fn run(config: &ExperimentConfig) -> RunResult<Report> {
    let a = &config.algorithm;
    let h = config.horizon();
    let n = super::genrl_strong::samples(config);
    let modes = a.tie_break.modes();
    let ceiling = 2.0 / h as f64;
    let trials = par_trials(config.seed, config.trials, |trial, seed| {
        let inst = Theorem1Instance::build(config.theorem1_params(h, seed))?;
        let dist = inst.distribution();
        let oracle = ExactOracle::new(&dist)?;
        let optimum = expected_policy_value(&dist, &SequencePolicy::from_path(inst.star_leaf(), h))?;
        modes
            .iter()
            .map(|&tie_break| {
                let mut ledger = QueryLedger::new(dist.sample_cost(), h);
                let planner = GenRlConfig {
                    samples: n,
                    tie_break,
                    seed: mix(&[seed, tie_break as u64]),
                };
                let (policy, _) = genrl_train(&dist, &oracle, &mut ledger, planner)?;
                let value = expected_policy_value(&dist, &policy)?;
                let mut row = ResultRow::new("genrl-weak", tie_name(tie_break), trial, seed, dist.manifest().hash(), h)
                    .with_ledger(&ledger);
                row.value = Some(value);
                row.optimum = Some(optimum);
                row.gap = Some(optimum - value);
                row.bound = Some(ceiling);
                row.pass = value <= ceiling + VALUE_TOLERANCE;
                Ok(row)
            })
            .collect::<RunResult<Vec<_>>>()
    })?;
    let rows: Vec<ResultRow> = trials.into_iter().flatten().collect();

    // Structural measurements on the first trial's family.
    let inst = Theorem1Instance::build(config.theorem1_params(h, trial_seed(config.seed, 0)))?;
    let dist = inst.distribution();
    let params = *inst.params();
    let gaps = measure_gaps(&dist)?;
    let star = SequencePolicy::from_path(inst.star_leaf(), h);
    let weak_alpha = measure_alpha(&dist, &star, AlphaMode::Weak)?;
    let linear = path_to_linear_policy(&star, params.feature_dim)?;
    let actions = linear_trajectory(dist.member(0).as_ref(), &linear);
    let witness_value = expected_policy_value(&dist, &SequencePolicy::new(actions))?;

    let mut checks = vec![
        Check::equals("eps_r", gaps.eps_r, params.epsilon(), EXACTNESS),
        Check::equals("eps_p", gaps.eps_p, 0.0, EXACTNESS),
        Check::equals("weak_alpha", weak_alpha, 0.0, EXACTNESS),
        Check::equals("linear_witness_value", witness_value, 1.0, VALUE_TOLERANCE),
    ];
    let mut aggregates = BTreeMap::new();
    aggregates.insert("samples_per_step".to_string(), n as f64);
    for &mode in &modes {
        let name = tie_name(mode);
        let arm: Vec<&ResultRow> = rows.iter().filter(|r| r.arm == name).collect();
        checks.push(Check::at_least(&format!("{name}_low_value_fraction"), fraction(arm.iter().copied(), |r| r.pass), 0.95));
        let mean = arm.iter().filter_map(|r| r.value).sum::<f64>() / arm.len().max(1) as f64;
        aggregates.insert(format!("{name}_mean_value"), mean);
        let gap = arm.iter().filter(|r| r.pass).filter_map(|r| r.gap).fold(f64::INFINITY, f64::min);
        aggregates.insert(format!("{name}_min_gap_to_linear"), gap);
    }
    let summary = Summary::new(config, &rows, checks, aggregates, Vec::new());
    Ok(Report { rows, summary })
}
