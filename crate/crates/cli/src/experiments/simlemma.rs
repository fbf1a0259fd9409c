//! Fixed-policy value gaps between members against the simulation bound.

use std::collections::BTreeMap;

use proxgen_core::instances::{Corollary2Instance, Theorem1Instance};
use proxgen_core::measure::GapReport;
use proxgen_core::{measure_gaps, simulation_lemma_check, MdpDistribution, SequencePolicy, TreePath};

use super::{par_trials, RunResult};
use crate::config::ExperimentConfig;
use crate::report::{Check, Report, ResultRow, Summary};

/// Gap measurements must reproduce the construction parameters this closely.
const EXACTNESS: f64 = 1e-12;

/// Every path policy through the first `depth` levels, padded with action 0.
fn path_policies(depth: u32, horizon: u32) -> Vec<SequencePolicy> {
    (0..1u64 << depth)
        .map(|bits| {
            let mut actions = TreePath::from_bits(bits, depth).actions();
            actions.resize(horizon as usize, proxgen_core::ActionId(0));
            SequencePolicy::new(actions)
        })
        .collect()
}

struct Arm {
    row: ResultRow,
    violations: usize,
    gaps: GapReport,
    expected: (f64, f64),
}

fn measure(
    name: &str,
    trial: u64,
    seed: u64,
    dist: &MdpDistribution,
    policies: &[SequencePolicy],
    expected: (f64, f64),
) -> RunResult<Arm> {
    let gaps = measure_gaps(dist)?;
    let checks = simulation_lemma_check(dist, policies, &gaps)?;
    let mut row = ResultRow::new("simlemma", name, trial, seed, dist.manifest().hash(), dist.horizon());
    let worst = checks.iter().map(|c| c.gap).fold(0.0, f64::max);
    let bound = gaps.simulation_bound(dist.horizon());
    row.value = Some(worst);
    row.bound = Some(bound);
    row.gap = Some(bound - worst);
    let violations = checks.iter().filter(|c| !c.pass).count();
    row.pass = violations == 0;
    Ok(Arm {
        row,
        violations,
        gaps,
        expected,
    })
}

pub(super) fn run(config: &ExperimentConfig) -> RunResult<Report> {
    let (h_tree, h_stoch) = (config.family.horizons[0], config.family.horizons[1]);
    let tree_policies = path_policies(h_tree, h_tree);
    let trials = par_trials(config.seed, config.trials, |trial, seed| {
        let t1 = Theorem1Instance::build(config.theorem1_params(h_tree, seed))?;
        let eps = t1.params().epsilon();
        let a = measure("theorem1", trial, seed, &t1.distribution(), &tree_policies, (eps, 0.0))?;

        let c2 = Corollary2Instance::build(config.corollary2_params(h_stoch, seed))?;
        let p = c2.params();
        let policies = path_policies(p.leaf_level(), h_stoch);
        let b = measure("corollary2", trial, seed, &c2.distribution(), &policies, (0.0, p.p_exit().max(p.p_jump())))?;
        Ok([a, b])
    })?;

    let arms: Vec<Arm> = trials.into_iter().flatten().collect();
    let violations = arms.iter().map(|a| a.violations).sum::<usize>() as f64;
    let deviation = |pick: fn(&Arm) -> f64| arms.iter().map(pick).fold(0.0, f64::max);
    let eps_r_error = deviation(|a| (a.gaps.eps_r - a.expected.0).abs());
    let eps_p_error = deviation(|a| (a.gaps.eps_p - a.expected.1).abs());

    let mut aggregates = BTreeMap::new();
    for name in ["theorem1", "corollary2"] {
        if let Some(a) = arms.iter().find(|a| a.row.arm == name) {
            aggregates.insert(format!("{name}_eps_r"), a.gaps.eps_r);
            aggregates.insert(format!("{name}_eps_p"), a.gaps.eps_p);
            aggregates.insert(format!("{name}_bound"), a.gaps.simulation_bound(a.row.horizon));
        }
        let worst = arms.iter().filter(|a| a.row.arm == name).filter_map(|a| a.row.value).fold(0.0, f64::max);
        aggregates.insert(format!("{name}_max_gap"), worst);
    }
    let checks = vec![
        Check::at_most("simulation_violations", violations, 0.0),
        Check::at_most("eps_r_error", eps_r_error, EXACTNESS),
        Check::at_most("eps_p_error", eps_p_error, EXACTNESS),
    ];
    let rows: Vec<ResultRow> = arms.into_iter().map(|a| a.row).collect();
    let summary = Summary::new(config, &rows, checks, aggregates, Vec::new());
    Ok(Report { rows, summary })
}
