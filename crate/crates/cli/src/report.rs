//! Result rows, run summaries and their CSV and JSON files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use proxgen_core::QueryLedger;
use serde::Serialize;

use crate::config::ExperimentConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// CSV column order; fixed and documented in the README.
pub const COLUMNS: [&str; 17] = [
    "experiment",
    "arm",
    "trial",
    "seed",
    "manifest_hash",
    "horizon",
    "value",
    "optimum",
    "gap",
    "bound",
    "mdp_samples",
    "generative_queries",
    "episode_steps",
    "oracle_calls",
    "total_cost",
    "training_cost",
    "pass",
];

/// One measured trial. Quantities an experiment does not define are left empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub arm: String,
    pub trial: u64,
    pub seed: u64,
    pub manifest_hash: String,
    pub horizon: u32,
    pub value: Option<f64>,
    pub optimum: Option<f64>,
    pub gap: Option<f64>,
    pub bound: Option<f64>,
    pub mdp_samples: u64,
    pub generative_queries: u64,
    pub episode_steps: u64,
    pub oracle_calls: u64,
    pub total_cost: u64,
    pub training_cost: u64,
    pub pass: bool,
}

impl ResultRow {
    pub fn new(experiment: &str, arm: &str, trial: u64, seed: u64, manifest_hash: String, horizon: u32) -> Self {
        ResultRow {
            experiment: experiment.to_string(),
            arm: arm.to_string(),
            trial,
            seed,
            manifest_hash,
            horizon,
            value: None,
            optimum: None,
            gap: None,
            bound: None,
            mdp_samples: 0,
            generative_queries: 0,
            episode_steps: 0,
            oracle_calls: 0,
            total_cost: 0,
            training_cost: 0,
            pass: false,
        }
    }

    /// Copies every counter and the total of `ledger`.
    pub fn with_ledger(mut self, ledger: &QueryLedger) -> Self {
        self.mdp_samples = ledger.mdp_samples();
        self.generative_queries = ledger.generative_queries();
        self.episode_steps = ledger.episode_steps();
        self.oracle_calls = ledger.oracle_calls();
        self.total_cost = ledger.total_cost();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// One of `>=`, `<=` or `==`.
    pub relation: &'static str,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_least(name: &str, measured: f64, threshold: f64) -> Self {
        Check::new(name, measured, ">=", threshold, measured >= threshold)
    }

    pub fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        Check::new(name, measured, "<=", threshold, measured <= threshold)
    }

    /// Equality within `tol`.
    pub fn equals(name: &str, measured: f64, expected: f64, tol: f64) -> Self {
        Check::new(name, measured, "==", expected, (measured - expected).abs() <= tol)
    }

    fn new(name: &str, measured: f64, relation: &'static str, threshold: f64, passed: bool) -> Self {
        Check {
            name: name.to_string(),
            measured,
            relation,
            threshold,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub aggregates: BTreeMap<String, f64>,
    /// Family manifest hash of every row, in row order.
    pub manifest_hashes: Vec<String>,
    pub rows: usize,
    pub empty: bool,
    pub passed: bool,
    pub notes: Vec<String>,
}

impl Summary {
    pub fn new(
        config: &ExperimentConfig,
        rows: &[ResultRow],
        checks: Vec<Check>,
        aggregates: BTreeMap<String, f64>,
        notes: Vec<String>,
    ) -> Self {
        Summary {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            experiment: config.experiment.to_string(),
            config: config.clone(),
            passed: checks.iter().all(|c| c.passed),
            checks,
            aggregates,
            manifest_hashes: rows.iter().map(|r| r.manifest_hash.clone()).collect(),
            rows: rows.len(),
            empty: rows.is_empty(),
            notes,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
}

/// Writes `<dir>/<experiment>.csv` and `<dir>/<experiment>.summary.json`.
pub fn write_results(rows: &[ResultRow], summary: &Summary, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", summary.experiment));
    let json_path = dir.join(format!("{}.summary.json", summary.experiment));

    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(&csv_path)?;
    writer.write_record(COLUMNS)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;

    let mut json = serde_json::to_string_pretty(summary)?;
    json.push('\n');
    fs::write(&json_path, json)?;
    Ok((csv_path, json_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;

    fn row(trial: u64) -> ResultRow {
        let mut r = ResultRow::new("simlemma", "theorem1", trial, 9, "abc".into(), 12);
        r.value = Some(0.25);
        r.pass = true;
        r
    }

    #[test]
    fn empty_rows_give_header_only_csv() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig::defaults(ExperimentKind::SimLemma);
        let summary = Summary::new(&config, &[], Vec::new(), BTreeMap::new(), Vec::new());
        let (csv_path, json_path) = write_results(&[], &summary, dir.path()).unwrap();
        assert_eq!(fs::read_to_string(csv_path).unwrap(), COLUMNS.join(",") + "\n");
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(json_path).unwrap()).unwrap();
        assert_eq!(json["empty"], true);
        assert_eq!(json["schema_version"], SCHEMA_VERSION);
    }

    #[test]
    fn row_fields_match_columns() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig::defaults(ExperimentKind::SimLemma);
        let rows = vec![row(0), row(1)];
        let summary = Summary::new(&config, &rows, Vec::new(), BTreeMap::new(), Vec::new());
        let (csv_path, _) = write_results(&rows, &summary, dir.path()).unwrap();
        let text = fs::read_to_string(csv_path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').count(), COLUMNS.len());
        assert_eq!(lines[1], "simlemma,theorem1,0,9,abc,12,0.25,,,,0,0,0,0,0,0,true");
        assert_eq!(summary.manifest_hashes, vec!["abc", "abc"]);
    }

    #[test]
    fn checks_compare_as_named() {
        assert!(Check::at_least("x", 0.9, 0.9).passed);
        assert!(!Check::at_most("x", 0.2, 0.1).passed);
        assert!(Check::equals("x", 0.25 + 1e-13, 0.25, 1e-12).passed);
    }
}
