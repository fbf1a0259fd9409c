use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use proxgen_cli::config::{ConfigError, ExperimentConfig, ExperimentKind};
use proxgen_cli::report::COLUMNS;

fn proxgen(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxgen"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn load_config_fills_defaults_and_names_bad_keys() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(dir.path(), "[run]\nexperiment = sio-bench\n");
    let c = ExperimentConfig::load(Path::new(&ok)).unwrap();
    assert_eq!(c, ExperimentConfig::defaults(ExperimentKind::SioBench));

    let odd = write_config(dir.path(), "[run]\nexperiment = metarl\n[family]\nhorizon = 41\n");
    match ExperimentConfig::load(Path::new(&odd)) {
        Err(ConfigError::Validation(v)) => assert_eq!(v[0].key, "horizon"),
        other => panic!("expected a validation error, got {other:?}"),
    }

    let unknown = write_config(dir.path(), "[run]\nexperiment = metarl\n[algorithm]\nlearning_rate = 3\n");
    assert_eq!(ExperimentConfig::load(Path::new(&unknown)).unwrap_err().keys(), vec!["learning_rate"]);
}

#[test]
fn invalid_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[run]\nexperiment = genrl-weak\n[family]\nhorizon = 13\n");
    let o = proxgen(&["genrl-weak", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("horizon"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "[run]\nexperiment = genrl-weak\n[family]\nsize = 3\n");
    let o = proxgen(&["genrl-weak", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("size"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "[run]\nexperiment = metarl\n");
    let o = proxgen(&["lb-scan", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.cfg").display().to_string();
    let o = proxgen(&["metarl", "--config", &missing], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn zero_beta_block_tree_passes_trivially() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[run]\nexperiment = prop1-gap\n[family]\nbeta = 0\n");
    let o = proxgen(&["prop1-gap", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("prop1-gap.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 20);
}

#[test]
fn missed_threshold_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // Far too few repeats for the stochastic solver to find its jumps.
    let cfg = write_config(
        dir.path(),
        "[run]\nexperiment = sio-bench\ntrials = 1\n[algorithm]\nrepeats_factor = 0.001\nstochastic_trials = 10\n",
    );
    let o = proxgen(&["sio-bench", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sio-bench.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], false);
}

#[test]
fn scan_writes_one_row_per_horizon_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[run]\nexperiment = lb-scan\n[family]\nhorizon = 12, 16\ngap = 2\n");
    let o = proxgen(&["lb-scan", "--config", &cfg, "--trials", "3"], dir.path());
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("lb-scan.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], COLUMNS.join(","));
    assert_eq!(lines.len(), 1 + 2 * 3);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("lb-scan.summary.json")).unwrap()).unwrap();
    let hashes = summary["manifest_hashes"].as_array().unwrap();
    assert_eq!(hashes.len(), 6);
    for (line, hash) in lines[1..].iter().zip(hashes) {
        assert_eq!(line.split(',').nth(4).unwrap(), hash.as_str().unwrap());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = proxgen(&["metarl", "--trials", "4", "--seed", "11"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for file in ["metarl.csv", "metarl.summary.json"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
    }
    let c = tempfile::tempdir().unwrap();
    proxgen(&["metarl", "--trials", "4", "--seed", "12"], c.path());
    assert_ne!(fs::read(a.path().join("metarl.csv")).unwrap(), fs::read(c.path().join("metarl.csv")).unwrap());
}

#[test]
fn ledger_totals_match_their_counters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[run]\nexperiment = genrl-weak\ntrials = 3\n[family]\nsample_cost = 5\n[algorithm]\nsamples = 10\n",
    );
    proxgen(&["genrl-weak", "--config", &cfg], dir.path());
    let mut reader = csv::Reader::from_path(dir.path().join("genrl-weak.csv")).unwrap();
    let mut rows = 0;
    for record in reader.records() {
        let r = record.unwrap();
        let num = |i: usize| r[i].parse::<u64>().unwrap();
        let horizon = num(5);
        // q_D * samples + queries + steps + H * oracle calls.
        assert_eq!(num(14), 5 * num(10) + num(11) + num(12) + horizon * num(13));
        rows += 1;
    }
    assert_eq!(rows, 6);
}
