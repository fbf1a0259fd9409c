//! Queries needed to locate the shared optimal leaf as the horizon grows.

use std::collections::BTreeMap;

use proxgen_core::algorithms::locate_shared_leaf;
use proxgen_core::instances::Theorem1Instance;
use proxgen_core::seed::mix;
use proxgen_core::QueryLedger;

use super::{median, par_trials, slope, RunResult};
use crate::config::ExperimentConfig;
use crate::report::{Check, Report, ResultRow, Summary};

/// Expected growth of log2 queries per unit of horizon, and its tolerance.
pub const EXPECTED_SLOPE: f64 = 0.5;
pub const SLOPE_TOLERANCE: f64 = 0.15;

pub(super) fn run(config: &ExperimentConfig) -> RunResult<Report> {
    let gap = config.family.gap;
    let mut rows = Vec::new();
    let mut medians = Vec::new();
    for &h in &config.family.horizons {
        let scan = par_trials(mix(&[config.seed, h as u64]), config.trials, |trial, seed| {
            let inst = Theorem1Instance::build(config.theorem1_params(h, seed))?;
            let dist = inst.distribution();
            let mut ledger = QueryLedger::new(dist.sample_cost(), h);
            let out = locate_shared_leaf(&dist, gap, &mut ledger, seed)?;
            let mut row = ResultRow::new("lb-scan", "search", trial, seed, dist.manifest().hash(), h).with_ledger(&ledger);
            row.value = Some(out.generative_queries as f64);
            row.optimum = Some(out.subtrees_probed as f64);
            row.bound = Some(inst.params().member_count() as f64);
            row.pass = out.found == Some(inst.star_leaf());
            Ok(row)
        })?;
        let mut queries: Vec<f64> = scan.iter().filter_map(|r| r.value).collect();
        medians.push(median(&mut queries));
        rows.extend(scan);
    }

    let xs: Vec<f64> = config.family.horizons.iter().map(|&h| h as f64).collect();
    let ys: Vec<f64> = medians.iter().map(|m| m.log2()).collect();
    let mut aggregates = BTreeMap::new();
    for (h, m) in config.family.horizons.iter().zip(&medians) {
        aggregates.insert(format!("median_queries_h{h:02}"), *m);
    }
    let mut checks = vec![Check::at_least("located_fraction", super::pass_fraction(&rows), 1.0)];
    let monotone = medians.windows(2).all(|w| w[0] <= w[1]);
    checks.push(Check::equals("medians_nondecreasing", monotone as u8 as f64, 1.0, 0.0));
    if xs.len() >= 2 {
        let fit = slope(&xs, &ys);
        checks.push(Check::equals("log2_median_slope", fit, EXPECTED_SLOPE, SLOPE_TOLERANCE));
    }
    let notes = vec![
        "value is generative queries until the shared leaf is confirmed; optimum is subtrees probed; bound is the subtree count".into(),
    ];
    let summary = Summary::new(config, &rows, checks, aggregates, notes);
    Ok(Report { rows, summary })
}
