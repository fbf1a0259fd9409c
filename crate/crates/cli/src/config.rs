//! Experiment configuration: sectioned `key = value` text.
//!
//! ```text
//! [run]
//! experiment = genrl-strong
//! seed = 7
//!
//! [family]
//! horizon = 10
//! ```
//!
//! Missing keys take the experiment's defaults. Lists are comma separated.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use proxgen_core::algorithms::TieBreak;
use proxgen_core::instances::{
    default_feature_dim, BoundaryRule, Corollary2Params, Prop1Params, StrongParams, Theorem1Params,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExperimentKind {
    SimLemma,
    GenRlStrong,
    GenRlWeak,
    LbScan,
    SioBench,
    Prop1Gap,
    MetaRl,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::SimLemma,
        ExperimentKind::GenRlStrong,
        ExperimentKind::GenRlWeak,
        ExperimentKind::LbScan,
        ExperimentKind::SioBench,
        ExperimentKind::Prop1Gap,
        ExperimentKind::MetaRl,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::SimLemma => "simlemma",
            ExperimentKind::GenRlStrong => "genrl-strong",
            ExperimentKind::GenRlWeak => "genrl-weak",
            ExperimentKind::LbScan => "lb-scan",
            ExperimentKind::SioBench => "sio-bench",
            ExperimentKind::Prop1Gap => "prop1-gap",
            ExperimentKind::MetaRl => "metarl",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OracleKind {
    Exact,
    Perturbed,
    /// Runs every trial once per oracle.
    Both,
}

impl OracleKind {
    pub fn arms(&self) -> Vec<OracleKind> {
        match self {
            OracleKind::Both => vec![OracleKind::Exact, OracleKind::Perturbed],
            k => vec![*k],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OracleKind::Exact => "exact",
            OracleKind::Perturbed => "perturbed",
            OracleKind::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TieBreakMode {
    Smallest,
    Random,
    /// Runs every trial once per mode.
    Both,
}

impl TieBreakMode {
    pub fn modes(&self) -> Vec<TieBreak> {
        match self {
            TieBreakMode::Smallest => vec![TieBreak::Smallest],
            TieBreakMode::Random => vec![TieBreak::Random],
            TieBreakMode::Both => vec![TieBreak::Smallest, TieBreak::Random],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyConfig {
    /// One horizon, or the scan list for `lb-scan`.
    pub horizons: Vec<u32>,
    pub gap: u32,
    pub k: u32,
    pub block: u32,
    /// Per-block value drop of the block tree.
    pub beta: f64,
    pub members: u64,
    pub spread: f64,
    pub feature_dim: Option<usize>,
    pub sample_cost: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Samples per planner step; derived from epsilon and delta when absent.
    pub samples: Option<u64>,
    pub oracle: OracleKind,
    pub oracle_beta: f64,
    pub tie_break: TieBreakMode,
    pub boundary_rule: BoundaryRule,
    pub repeats_factor: f64,
    pub stochastic_horizon: u32,
    pub stochastic_trials: u64,
    pub interior_starts: u64,
    pub concentration_repetitions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub trials: u64,
    pub out_dir: Option<String>,
    /// Training budget of the meta-learning protocol.
    pub budget: Option<u64>,
    pub family: FamilyConfig,
    pub algorithm: AlgorithmConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, key: Option<String>, message: String },
    #[error("invalid configuration: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Violation>),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    /// Keys named by the error, for diagnostics.
    pub fn keys(&self) -> Vec<&str> {
        match self {
            ConfigError::Parse { key, .. } => key.iter().map(String::as_str).collect(),
            ConfigError::Validation(v) => v.iter().map(|x| x.key.as_str()).collect(),
            ConfigError::Io { .. } => Vec::new(),
        }
    }
}

impl ExperimentConfig {
    /// Documented defaults; these reproduce the acceptance settings.
    pub fn defaults(experiment: ExperimentKind) -> Self {
        let mut family = FamilyConfig {
            horizons: vec![12],
            gap: 2,
            k: 3,
            block: 3,
            beta: 0.05,
            members: 8,
            spread: 1.0,
            feature_dim: None,
            sample_cost: 1,
        };
        let mut algorithm = AlgorithmConfig {
            epsilon: 0.2,
            delta: 0.2,
            samples: None,
            oracle: OracleKind::Exact,
            oracle_beta: 0.02,
            tie_break: TieBreakMode::Smallest,
            boundary_rule: BoundaryRule::Pessimistic,
            repeats_factor: 5.0,
            stochastic_horizon: 16,
            stochastic_trials: 50,
            interior_starts: 10,
            concentration_repetitions: 200,
        };
        let trials = match experiment {
            ExperimentKind::SimLemma => 1,
            ExperimentKind::GenRlStrong => 50,
            ExperimentKind::GenRlWeak => 100,
            ExperimentKind::LbScan => 25,
            ExperimentKind::SioBench => 10,
            ExperimentKind::Prop1Gap => 20,
            ExperimentKind::MetaRl => 100,
        };
        match experiment {
            ExperimentKind::SimLemma => family.horizons = vec![12, 16],
            ExperimentKind::GenRlStrong => {
                family.horizons = vec![10];
                algorithm.oracle = OracleKind::Both;
            }
            ExperimentKind::GenRlWeak => {
                algorithm.samples = Some(100);
                algorithm.tie_break = TieBreakMode::Both;
            }
            ExperimentKind::LbScan => {
                family.horizons = vec![16, 24, 32, 40];
                family.gap = 4;
            }
            ExperimentKind::SioBench => {}
            ExperimentKind::Prop1Gap => {
                algorithm.samples = Some(1);
                algorithm.tie_break = TieBreakMode::Random;
            }
            ExperimentKind::MetaRl => {
                family.horizons = vec![40];
                family.gap = 4;
            }
        }
        let budget = (experiment == ExperimentKind::MetaRl).then_some(10_000);
        ExperimentConfig {
            experiment,
            seed: 0,
            trials,
            out_dir: None,
            budget,
            family,
            algorithm,
        }
    }

    pub fn horizon(&self) -> u32 {
        self.family.horizons[0]
    }

    pub fn feature_dim(&self, horizon: u32) -> usize {
        self.family.feature_dim.unwrap_or_else(|| default_feature_dim(horizon))
    }

    pub fn theorem1_params(&self, horizon: u32, seed: u64) -> Theorem1Params {
        let mut p = Theorem1Params::new(horizon, self.family.gap, seed);
        p.k = self.family.k;
        p.feature_dim = self.feature_dim(horizon);
        p.sample_cost = self.family.sample_cost;
        p
    }

    pub fn corollary2_params(&self, horizon: u32, seed: u64) -> Corollary2Params {
        let mut p = Corollary2Params::new(horizon, self.family.k, seed);
        p.feature_dim = self.feature_dim(horizon);
        p.sample_cost = self.family.sample_cost;
        p
    }

    pub fn prop1_params(&self, seed: u64) -> Prop1Params {
        let mut p = Prop1Params::new(self.horizon(), self.family.block, self.family.beta, seed);
        p.feature_dim = self.feature_dim(self.horizon());
        p.sample_cost = self.family.sample_cost;
        p
    }

    pub fn strong_params(&self, seed: u64) -> StrongParams {
        let mut p = StrongParams::new(self.horizon(), self.family.members, seed);
        p.spread = self.family.spread;
        p.feature_dim = self.family.feature_dim.unwrap_or(16);
        p.sample_cost = self.family.sample_cost;
        p
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut section = String::new();
        let mut experiment = None;
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                if !["run", "family", "algorithm"].contains(&section.as_str()) {
                    return Err(ConfigError::Parse {
                        line,
                        key: None,
                        message: format!("unknown section [{section}]"),
                    });
                }
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Parse {
                    line,
                    key: None,
                    message: format!("expected 'key = value', got '{content}'"),
                });
            };
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if section.is_empty() {
                return Err(ConfigError::Parse {
                    line,
                    key: Some(key),
                    message: "key outside of any section".into(),
                });
            }
            if section == "run" && key == "experiment" {
                experiment = Some(value.parse::<ExperimentKind>().map_err(|message| ConfigError::Parse {
                    line,
                    key: Some(key.clone()),
                    message,
                })?);
            } else {
                pairs.push((line, format!("{section}.{key}"), key, value));
            }
        }
        let Some(experiment) = experiment else {
            return Err(ConfigError::Parse {
                line: 0,
                key: Some("experiment".into()),
                message: "missing [run] experiment".into(),
            });
        };
        let mut config = ExperimentConfig::defaults(experiment);
        for (line, qualified, key, value) in pairs {
            config.set(&qualified, &value).map_err(|message| ConfigError::Parse {
                line,
                key: Some(key),
                message,
            })?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config = ExperimentConfig::parse(&text)?;
        config.validate()?;
        Ok(config)
    }

    /// Applies one `section.key = value` assignment.
    pub fn set(&mut self, qualified: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse '{v}'"))
        }
        let (f, a) = (&mut self.family, &mut self.algorithm);
        match qualified {
            "run.seed" => self.seed = num(value)?,
            "run.trials" => self.trials = num(value)?,
            "run.out_dir" => self.out_dir = Some(value.to_string()),
            "run.budget" => self.budget = Some(num(value)?),
            "family.horizon" => {
                f.horizons = value.split(',').map(|v| num(v.trim())).collect::<Result<_, _>>()?;
            }
            "family.gap" => f.gap = num(value)?,
            "family.k" => f.k = num(value)?,
            "family.block" => f.block = num(value)?,
            "family.beta" => f.beta = num(value)?,
            "family.members" => f.members = num(value)?,
            "family.spread" => f.spread = num(value)?,
            "family.feature_dim" => f.feature_dim = Some(num(value)?),
            "family.sample_cost" => f.sample_cost = num(value)?,
            "algorithm.epsilon" => a.epsilon = num(value)?,
            "algorithm.delta" => a.delta = num(value)?,
            "algorithm.samples" => a.samples = Some(num(value)?),
            "algorithm.oracle" => {
                a.oracle = match value {
                    "exact" => OracleKind::Exact,
                    "perturbed" => OracleKind::Perturbed,
                    "both" => OracleKind::Both,
                    _ => return Err(format!("expected exact, perturbed or both, got '{value}'")),
                }
            }
            "algorithm.oracle_beta" => a.oracle_beta = num(value)?,
            "algorithm.tie_break" => {
                a.tie_break = match value {
                    "smallest" => TieBreakMode::Smallest,
                    "random" => TieBreakMode::Random,
                    "both" => TieBreakMode::Both,
                    _ => return Err(format!("expected smallest, random or both, got '{value}'")),
                }
            }
            "algorithm.boundary_rule" => {
                a.boundary_rule = match value {
                    "pessimistic" => BoundaryRule::Pessimistic,
                    "exact" => BoundaryRule::Exact,
                    _ => return Err(format!("expected pessimistic or exact, got '{value}'")),
                }
            }
            "algorithm.repeats_factor" => a.repeats_factor = num(value)?,
            "algorithm.stochastic_horizon" => a.stochastic_horizon = num(value)?,
            "algorithm.stochastic_trials" => a.stochastic_trials = num(value)?,
            "algorithm.interior_starts" => a.interior_starts = num(value)?,
            "algorithm.concentration_repetitions" => a.concentration_repetitions = num(value)?,
            _ => return Err(format!("unknown key '{qualified}'")),
        }
        Ok(())
    }

    /// Every precondition the run depends on; empty when the config is usable.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |key: &str, message: String| {
            out.push(Violation {
                key: key.to_string(),
                message,
            })
        };
        let (f, a) = (&self.family, &self.algorithm);
        if self.trials < 1 {
            bad("trials", "must be at least 1".into());
        }
        if f.horizons.is_empty() {
            bad("horizon", "needs at least one value".into());
            return out;
        }
        let tree_check = |bad: &mut dyn FnMut(&str, String), h: u32, p: Theorem1Params| {
            if h % 2 != 0 {
                bad("horizon", format!("must be even for the tree family, got {h}"));
            } else if let Err(e) = p.validate() {
                let key = if h < 8 || h > 62 { "horizon" } else { "gap" };
                bad(key, e.to_string());
            }
        };
        match self.experiment {
            ExperimentKind::SimLemma => {
                if f.horizons.len() != 2 {
                    bad("horizon", "expects two horizons: tree family, then stochastic family".into());
                } else {
                    tree_check(&mut bad, f.horizons[0], self.theorem1_params(f.horizons[0], 0));
                    if let Err(e) = self.corollary2_params(f.horizons[1], 0).validate() {
                        bad("horizon", e.to_string());
                    }
                }
            }
            ExperimentKind::GenRlStrong => {
                if let Err(e) = self.strong_params(0).validate() {
                    bad("horizon", e.to_string());
                }
                if !(a.epsilon > 0.0 && a.epsilon < 1.0) {
                    bad("epsilon", format!("must lie in (0, 1), got {}", a.epsilon));
                }
                if !(a.delta > 0.0 && a.delta < 1.0) {
                    bad("delta", format!("must lie in (0, 1), got {}", a.delta));
                }
                if !(0.0..0.25).contains(&a.oracle_beta) {
                    bad("oracle_beta", format!("must lie in [0, 1/4), got {}", a.oracle_beta));
                }
            }
            ExperimentKind::GenRlWeak | ExperimentKind::SioBench | ExperimentKind::MetaRl => {
                tree_check(&mut bad, self.horizon(), self.theorem1_params(self.horizon(), 0));
                if self.experiment == ExperimentKind::SioBench {
                    if let Err(e) = self.corollary2_params(a.stochastic_horizon, 0).validate() {
                        bad("stochastic_horizon", e.to_string());
                    }
                    if !(a.repeats_factor > 0.0) {
                        bad("repeats_factor", "must be positive".into());
                    }
                }
            }
            ExperimentKind::LbScan => {
                for &h in &f.horizons {
                    tree_check(&mut bad, h, self.theorem1_params(h, 0));
                    if h > 60 {
                        bad("horizon", format!("scan horizon {h} exceeds 60"));
                    }
                }
            }
            ExperimentKind::Prop1Gap => {
                let p = self.prop1_params(0);
                if p.block < 1 || p.horizon % p.block != 0 {
                    bad("block", format!("must divide horizon {}", p.horizon));
                } else if let Err(e) = p.validate() {
                    bad("beta", e.to_string());
                }
            }
        }
        if matches!(self.experiment, ExperimentKind::GenRlWeak | ExperimentKind::Prop1Gap | ExperimentKind::GenRlStrong)
            && a.samples == Some(0)
        {
            bad("samples", "must be at least 1".into());
        }
        if self.budget.is_some() != (self.experiment == ExperimentKind::MetaRl) {
            bad("budget", "is required by metarl and used by no other experiment".into());
        }
        if f.sample_cost < 1 {
            bad("sample_cost", "must be at least 1".into());
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Validation(v))
        }
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let (f, a) = (&self.family, &self.algorithm);
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        line("[run]\nexperiment", self.experiment.to_string());
        line("seed", self.seed.to_string());
        line("trials", self.trials.to_string());
        if let Some(dir) = &self.out_dir {
            line("out_dir", dir.clone());
        }
        if let Some(b) = self.budget {
            line("budget", b.to_string());
        }
        let horizons: Vec<String> = f.horizons.iter().map(ToString::to_string).collect();
        line("\n[family]\nhorizon", horizons.join(", "));
        line("gap", f.gap.to_string());
        line("k", f.k.to_string());
        line("block", f.block.to_string());
        line("beta", f.beta.to_string());
        line("members", f.members.to_string());
        line("spread", f.spread.to_string());
        if let Some(d) = f.feature_dim {
            line("feature_dim", d.to_string());
        }
        line("sample_cost", f.sample_cost.to_string());
        line("\n[algorithm]\nepsilon", a.epsilon.to_string());
        line("delta", a.delta.to_string());
        if let Some(n) = a.samples {
            line("samples", n.to_string());
        }
        line("oracle", a.oracle.name().into());
        line("oracle_beta", a.oracle_beta.to_string());
        let tie = match a.tie_break {
            TieBreakMode::Smallest => "smallest",
            TieBreakMode::Random => "random",
            TieBreakMode::Both => "both",
        };
        line("tie_break", tie.into());
        let rule = match a.boundary_rule {
            BoundaryRule::Pessimistic => "pessimistic",
            BoundaryRule::Exact => "exact",
        };
        line("boundary_rule", rule.into());
        line("repeats_factor", a.repeats_factor.to_string());
        line("stochastic_horizon", a.stochastic_horizon.to_string());
        line("stochastic_trials", a.stochastic_trials.to_string());
        line("interior_starts", a.interior_starts.to_string());
        line("concentration_repetitions", a.concentration_repetitions.to_string());
        s
    }
}
