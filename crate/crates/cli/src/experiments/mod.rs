//! The named experiments. Each returns one row per trial and arm plus a summary
//! whose checks decide the exit status.

mod genrl_strong;
mod genrl_weak;
mod lb_scan;
mod metarl;
mod prop1_gap;
mod simlemma;
mod sio_bench;

use rayon::prelude::*;
use thiserror::Error;

use proxgen_core::seed::trial_seed;

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::report::{Report, ResultRow};

/// Slack on comparisons between computed values and their bounds.
pub const VALUE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("experiment failed: {0}")]
    Core(#[from] proxgen_core::Error),
}

pub type RunResult<T> = std::result::Result<T, RunError>;

/// Validates `config` and runs its experiment; rows come back in trial order.
pub fn run_experiment(config: &ExperimentConfig) -> RunResult<Report> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::SimLemma => simlemma::run(config),
        ExperimentKind::GenRlStrong => genrl_strong::run(config),
        ExperimentKind::GenRlWeak => genrl_weak::run(config),
        ExperimentKind::LbScan => lb_scan::run(config),
        ExperimentKind::SioBench => sio_bench::run(config),
        ExperimentKind::Prop1Gap => prop1_gap::run(config),
        ExperimentKind::MetaRl => metarl::run(config),
    }
}

/// Runs `trial(index, seed)` for `count` trials concurrently and returns the
/// results in index order.
fn par_trials<T, F>(master: u64, count: u64, trial: F) -> RunResult<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> RunResult<T> + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| trial(i, trial_seed(master, i)))
        .collect()
}

fn fraction<'a>(rows: impl IntoIterator<Item = &'a ResultRow>, pred: impl Fn(&ResultRow) -> bool) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for r in rows {
        total += 1;
        hit += pred(r) as usize;
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

fn pass_fraction<'a>(rows: impl IntoIterator<Item = &'a ResultRow>) -> f64 {
    fraction(rows, |r| r.pass)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
