//! Greedy planner on strong-proximity families: value, per-step gap audit and
//! concentration audit.

use std::collections::BTreeMap;

use proxgen_core::algorithms::{concentration_audit, q_gap_audit, ConcentrationParams};
use proxgen_core::instances::StrongFamily;
use proxgen_core::seed::{mix, trial_seed};
use proxgen_core::{
    expected_policy_value, genrl_sample_size, genrl_train, max_expected_value, measure_alpha, AlphaMode,
    ExactOracle, GenRlConfig, MdpDistribution, PerturbedOracle, Policy, QueryLedger, TieBreak,
    ValueOracle,
};

use super::{fraction, par_trials, RunResult, VALUE_TOLERANCE};
use crate::config::{ExperimentConfig, OracleKind};
use crate::report::{Check, Report, ResultRow, Summary};

pub(super) fn samples(config: &ExperimentConfig) -> u64 {
    let a = &config.algorithm;
    a.samples
        .unwrap_or_else(|| genrl_sample_size(a.epsilon, a.delta, config.horizon(), 2))
}

fn oracle(config: &ExperimentConfig, dist: &MdpDistribution, kind: OracleKind, seed: u64) -> RunResult<Box<dyn ValueOracle>> {
    let exact = ExactOracle::new(dist)?;
    Ok(match kind {
        OracleKind::Perturbed => Box::new(PerturbedOracle::new(exact, config.algorithm.oracle_beta, mix(&[seed, 0xBE7A]))?),
        _ => Box::new(exact),
    })
}

struct Outcome {
    row: ResultRow,
    q_gap_violations: usize,
}

pub(super) fn run(config: &ExperimentConfig) -> RunResult<Report> {
    let a = &config.algorithm;
    let h = config.horizon();
    let n = samples(config);
    let arms = a.oracle.arms();
    let trials = par_trials(config.seed, config.trials, |trial, seed| {
        let family = StrongFamily::build(config.strong_params(seed))?;
        let dist = family.distribution();
        let (optimum, _) = max_expected_value(&dist)?;
        let alpha = measure_alpha(&dist, family.star_policy.as_ref(), AlphaMode::Strong)?;
        let probe = dist.member(0);
        let star = |s: &proxgen_core::StateRef| family.star_policy.action(probe.as_ref(), s);
        arms.iter()
            .map(|&kind| {
                let oracle = oracle(config, &dist, kind, seed)?;
                let mut ledger = QueryLedger::new(dist.sample_cost(), h);
                let planner = GenRlConfig {
                    samples: n,
                    tie_break: TieBreak::Smallest,
                    seed: mix(&[seed, kind as u64]),
                };
                let (policy, trace) = genrl_train(&dist, oracle.as_ref(), &mut ledger, planner)?;
                let value = expected_policy_value(&dist, &policy)?;
                let beta = oracle.beta();
                let bound = a.epsilon + 3.0 * alpha * h as f64 + 3.0 * beta * h as f64;
                let mut row = ResultRow::new("genrl-strong", kind.name(), trial, seed, dist.manifest().hash(), h)
                    .with_ledger(&ledger);
                row.value = Some(value);
                row.optimum = Some(optimum);
                row.gap = Some(optimum - value);
                row.bound = Some(bound);
                row.pass = optimum - value <= bound + VALUE_TOLERANCE;
                let audit = q_gap_audit(&trace, &star, alpha, beta);
                Ok(Outcome {
                    row,
                    q_gap_violations: audit.violations.len(),
                })
            })
            .collect::<RunResult<Vec<_>>>()
    })?;
    let outcomes: Vec<Outcome> = trials.into_iter().flatten().collect();

    let mut checks = Vec::new();
    let mut aggregates = BTreeMap::new();
    aggregates.insert("samples_per_step".to_string(), n as f64);
    for kind in &arms {
        let rows = outcomes.iter().map(|o| &o.row).filter(|r| r.arm == kind.name());
        checks.push(Check::at_least(
            &format!("{}_within_bound_fraction", kind.name()),
            fraction(rows, |r| r.pass),
            1.0 - a.delta,
        ));
        let violations: usize = outcomes
            .iter()
            .filter(|o| o.row.arm == kind.name())
            .map(|o| o.q_gap_violations)
            .sum();
        if *kind == OracleKind::Exact {
            checks.push(Check::at_most("exact_q_gap_violations", violations as f64, 0.0));
        } else {
            aggregates.insert(format!("{}_q_gap_violations", kind.name()), violations as f64);
        }
        let worst = outcomes
            .iter()
            .filter(|o| o.row.arm == kind.name())
            .filter_map(|o| o.row.gap)
            .fold(0.0, f64::max);
        aggregates.insert(format!("{}_max_suboptimality", kind.name()), worst);
    }

    if a.concentration_repetitions > 0 {
        let seed = trial_seed(config.seed, 0);
        let dist = StrongFamily::build(config.strong_params(seed))?.distribution();
        let oracle = oracle(config, &dist, arms[0], seed)?;
        let report = concentration_audit(
            &dist,
            oracle.as_ref(),
            ConcentrationParams {
                samples: n,
                repetitions: a.concentration_repetitions as usize,
                epsilon: a.epsilon,
                delta: a.delta,
                seed: mix(&[seed, 0xC0C0]),
            },
        )?;
        let lowest = report.frequencies.iter().copied().fold(1.0, f64::min);
        aggregates.insert("concentration_slack".into(), report.slack);
        aggregates.insert(
            "concentration_max_deviation".into(),
            report.max_deviation.iter().copied().fold(0.0, f64::max),
        );
        checks.push(Check::at_least("concentration_min_frequency", lowest, report.threshold));
    }

    let rows: Vec<ResultRow> = outcomes.into_iter().map(|o| o.row).collect();
    let summary = Summary::new(config, &rows, checks, aggregates, Vec::new());
    Ok(Report { rows, summary })
}
