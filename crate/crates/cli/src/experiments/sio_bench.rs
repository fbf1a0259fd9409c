//! Single-member solver cost and exactness on the tree families.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use proxgen_core::algorithms::{linear_trajectory, sio_query_bound};
use proxgen_core::instances::{Corollary2Instance, Theorem1Instance};
use proxgen_core::seed::mix;
use proxgen_core::{
    optimal_value, sio_greedy_solve, GenerativeModel, LayeredMdp, QueryLedger, SioVariant, StateRef, TreePath,
};

use super::{fraction, par_trials, RunResult};
use crate::config::ExperimentConfig;
use crate::report::{Check, Report, ResultRow, Summary};

pub const STOCHASTIC_SUCCESS: f64 = 0.9;

struct Solve {
    row: ResultRow,
    /// Whether the linear policy built from the path replays it; root starts only.
    linear_replays: Option<bool>,
}

pub(super) fn run(config: &ExperimentConfig) -> RunResult<Report> {
    let a = &config.algorithm;
    let h = config.horizon();
    let gap = config.family.gap;
    let bound = sio_query_bound(h, gap);
    let deterministic = par_trials(config.seed, config.trials, |trial, seed| {
        let inst = Theorem1Instance::build(config.theorem1_params(h, seed))?;
        let hash = inst.manifest().hash();
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, 0x510]));
        let member = inst.member(rng.random_range(0..inst.params().member_count()));
        let mut starts = vec![StateRef::root()];
        for _ in 0..a.interior_starts {
            let level = rng.random_range(1..=h / 2);
            starts.push(StateRef::Tree(TreePath::from_bits(rng.random_range(0..1u64 << level), level)));
        }
        starts
            .iter()
            .map(|start| {
                let mut ledger = QueryLedger::new(config.family.sample_cost, h);
                let mut gm = GenerativeModel::new(&member, &mut ledger, rng.random());
                let sol = sio_greedy_solve(&mut gm, start, SioVariant::Deterministic { gap })?;
                let optimum = optimal_value(&member, start)?;
                let mut row = ResultRow::new("sio-bench", "deterministic", trial, seed, hash.clone(), h).with_ledger(&ledger);
                row.value = Some(sol.value);
                row.optimum = Some(optimum);
                row.gap = Some(optimum - sol.value);
                row.bound = Some(bound as f64);
                row.pass = sol.value == 1.0 && sol.value == optimum && sol.queries <= bound;
                let linear_replays = if start.level() == 0 {
                    let lin = sol.linear_policy(member.feature_dim())?;
                    Some(linear_trajectory(&member, &lin) == sol.path.actions())
                } else {
                    None
                };
                Ok(Solve { row, linear_replays })
            })
            .collect::<RunResult<Vec<_>>>()
    })?;
    let deterministic: Vec<Solve> = deterministic.into_iter().flatten().collect();

    let hs = a.stochastic_horizon;
    let variant = SioVariant::Stochastic {
        k: config.family.k,
        repeats_factor: a.repeats_factor,
    };
    let stochastic = par_trials(mix(&[config.seed, 0x570C]), a.stochastic_trials, |trial, seed| {
        let inst = Corollary2Instance::build(config.corollary2_params(hs, seed))?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, 0x511]));
        let member = inst.member(rng.random_range(0..inst.params().member_count()));
        let mut ledger = QueryLedger::new(config.family.sample_cost, hs);
        let mut gm = GenerativeModel::new(&member, &mut ledger, rng.random());
        let sol = sio_greedy_solve(&mut gm, &StateRef::root(), variant)?;
        let optimum = optimal_value(&member, &StateRef::root())?;
        let mut row = ResultRow::new("sio-bench", "stochastic", trial, seed, inst.manifest().hash(), hs).with_ledger(&ledger);
        row.value = Some(sol.value);
        row.optimum = Some(optimum);
        row.gap = Some(optimum - sol.value);
        row.pass = sol.found && sol.value == 1.0;
        Ok(row)
    })?;

    let det_rows = deterministic.iter().map(|s| &s.row);
    let max_queries = det_rows.clone().map(|r| r.generative_queries).max().unwrap_or(0);
    let replays: Vec<bool> = deterministic.iter().filter_map(|s| s.linear_replays).collect();
    let replay_fraction = replays.iter().filter(|&&ok| ok).count() as f64 / replays.len().max(1) as f64;
    let mut checks = vec![
        Check::at_least("deterministic_exact_fraction", fraction(det_rows, |r| r.pass), 1.0),
        Check::at_most("deterministic_max_queries", max_queries as f64, bound as f64),
        Check::at_least("linear_replay_fraction", replay_fraction, 1.0),
    ];
    if a.stochastic_trials > 0 {
        checks.push(Check::at_least(
            "stochastic_success_fraction",
            fraction(&stochastic, |r| r.pass),
            STOCHASTIC_SUCCESS,
        ));
    }
    let mut aggregates = BTreeMap::new();
    aggregates.insert("stochastic_repeats_per_action".to_string(), variant.repeats(hs) as f64);
    let mean = stochastic.iter().map(|r| r.generative_queries as f64).sum::<f64>() / stochastic.len().max(1) as f64;
    aggregates.insert("stochastic_mean_queries".into(), mean);

    let mut rows: Vec<ResultRow> = deterministic.into_iter().map(|s| s.row).collect();
    rows.extend(stochastic);
    let summary = Summary::new(config, &rows, checks, aggregates, Vec::new());
    Ok(Report { rows, summary })
}
