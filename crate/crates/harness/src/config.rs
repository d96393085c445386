//! Experiment configuration and the TOML suite format.
//!
//! ```toml
//! output_dir = "results"        # optional
//! format = "csv"                # optional: csv | json
//!
//! [[experiment]]
//! name = "branin-clbo"          # optional, defaults to <problem>-<optimizer>
//! problem = "branin2"
//! optimizer = "clbo"            # clbo, clbo-mfgpN[-nosogp], ego, cl[N], pei[N], msbo[N]
//! repeats = 20
//! base_seed = 0
//! n_init = 12                   # optional, default 6·d
//! n_budget = 60                 # optional, default 30·d
//! t_max = 40                    # optional
//! epsilon = 0.001
//! failure_rate = 0.0
//! own_query_retention = true
//! record_ambiguity = false
//! ambiguity_grid = 256
//! ```

use std::path::{Path, PathBuf};

use clbo_core::{benchmark, BenchmarkProblem, OptimizerKind, RunConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn default_repeats() -> usize {
    20
}
fn default_epsilon() -> f64 {
    0.001
}
fn default_true() -> bool {
    true
}
fn default_grid() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub problem: String,
    pub optimizer: String,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub n_init: Option<usize>,
    #[serde(default)]
    pub n_budget: Option<usize>,
    #[serde(default)]
    pub t_max: Option<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub failure_rate: f64,
    #[serde(default = "default_true")]
    pub own_query_retention: bool,
    #[serde(default)]
    pub record_ambiguity: bool,
    #[serde(default = "default_grid")]
    pub ambiguity_grid: usize,
}

impl ExperimentConfig {
    pub fn new(problem: &str, optimizer: &str) -> Self {
        Self {
            name: None,
            problem: problem.to_string(),
            optimizer: optimizer.to_string(),
            repeats: default_repeats(),
            base_seed: 0,
            n_init: None,
            n_budget: None,
            t_max: None,
            epsilon: default_epsilon(),
            failure_rate: 0.0,
            own_query_retention: true,
            record_ambiguity: false,
            ambiguity_grid: default_grid(),
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("{}-{}", self.problem, self.optimizer))
    }

    /// Checks every field; errors name the offending one.
    pub fn validate(&self) -> Result<ResolvedExperiment> {
        let field = |f: &str, msg: String| HarnessError::Config(format!("field `{f}`: {msg}"));
        let problem = benchmark::<f64>(&self.problem).ok_or_else(|| {
            field(
                "problem",
                format!("unknown problem `{}` (known: {})", self.problem, clbo_core::BENCHMARK_NAMES.join(", ")),
            )
        })?;
        let kind = parse_optimizer(&self.optimizer).map_err(|m| field("optimizer", m))?;
        if self.repeats == 0 {
            return Err(field("repeats", "must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(field("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        if !(0.0..1.0).contains(&self.failure_rate) {
            return Err(field("failure_rate", format!("must be in [0, 1), got {}", self.failure_rate)));
        }
        let d = problem.bounds.len();
        if let Some(n) = self.n_init {
            if n < d + 1 {
                return Err(field("n_init", format!("must be at least d+1 = {} for {}", d + 1, self.problem)));
            }
        }
        if let (Some(b), n) = (self.n_budget, self.n_init.unwrap_or(6 * d)) {
            if b < n {
                return Err(field("n_budget", format!("{b} is below the initial design size {n}")));
            }
        }
        if self.record_ambiguity && self.ambiguity_grid == 0 {
            return Err(field("ambiguity_grid", "must be positive".into()));
        }
        let problem = if self.failure_rate > 0.0 {
            problem.with_failures(self.failure_rate, self.base_seed)
        } else {
            problem
        };
        Ok(ResolvedExperiment {
            config: self.clone(),
            problem,
            kind,
        })
    }

    pub fn run_config(&self, seed: u64) -> RunConfig {
        RunConfig {
            n_init: self.n_init,
            n_budget: self.n_budget,
            t_max: self.t_max,
            epsilon: self.epsilon,
            seed,
            own_query_retention: self.own_query_retention,
            ..RunConfig::default()
        }
    }
}

/// A validated experiment with its problem and optimizer looked up.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub config: ExperimentConfig,
    pub problem: BenchmarkProblem<f64>,
    pub kind: OptimizerKind,
}

/// Parses optimizer names such as `clbo`, `clbo-mfgp3`, `clbo-mfgp2-nosogp`,
/// `ego`, `cl`, `cl3`, `pei4`, `msbo`.
pub fn parse_optimizer(name: &str) -> std::result::Result<OptimizerKind, String> {
    let bad = || format!("unknown optimizer `{name}` (expected clbo, clbo-mfgpN[-nosogp], ego, cl[N], pei[N], msbo[N])");
    let count = |digits: &str, default: usize| -> std::result::Result<usize, String> {
        if digits.is_empty() {
            return Ok(default);
        }
        match digits.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(bad()),
        }
    };
    let lower = name.to_ascii_lowercase();
    let n = lower.as_str();
    if n == "ego" {
        return Ok(OptimizerKind::Ego);
    }
    if let Some(rest) = n.strip_prefix("clbo") {
        let (rest, use_sogp) = match rest.strip_suffix("-nosogp") {
            Some(r) => (r, false),
            None => (rest, true),
        };
        let m = match rest {
            "" => 2,
            r => count(r.strip_prefix("-mfgp").ok_or_else(bad)?, 2)?,
        };
        return Ok(OptimizerKind::Clbo { m, use_sogp });
    }
    if let Some(r) = n.strip_prefix("msbo") {
        return Ok(OptimizerKind::Msbo { m: count(r, 2)? });
    }
    if let Some(r) = n.strip_prefix("pei") {
        return Ok(OptimizerKind::PeiBatch { batch: count(r, 3)? });
    }
    if let Some(r) = n.strip_prefix("cl") {
        return Ok(OptimizerKind::ConstantLiar { batch: count(r, 3)? });
    }
    Err(bad())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub experiment: Vec<ExperimentConfig>,
}

impl SuiteConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let suite: SuiteConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        if suite.experiment.is_empty() {
            return Err(HarnessError::Config("field `experiment`: at least one [[experiment]] table is required".into()));
        }
        for (i, e) in suite.experiment.iter().enumerate() {
            e.validate()
                .map_err(|err| HarnessError::Config(format!("experiment[{i}] {}", strip_prefix(&err))))?;
        }
        Ok(suite)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

fn strip_prefix(e: &HarnessError) -> String {
    match e {
        HarnessError::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimizer_names() {
        assert_eq!(parse_optimizer("clbo"), Ok(OptimizerKind::Clbo { m: 2, use_sogp: true }));
        assert_eq!(parse_optimizer("CLBO-MFGP4"), Ok(OptimizerKind::Clbo { m: 4, use_sogp: true }));
        assert_eq!(parse_optimizer("clbo-mfgp3-nosogp"), Ok(OptimizerKind::Clbo { m: 3, use_sogp: false }));
        assert_eq!(parse_optimizer("clbo-nosogp"), Ok(OptimizerKind::Clbo { m: 2, use_sogp: false }));
        assert_eq!(parse_optimizer("ego"), Ok(OptimizerKind::Ego));
        assert_eq!(parse_optimizer("cl"), Ok(OptimizerKind::ConstantLiar { batch: 3 }));
        assert_eq!(parse_optimizer("pei5"), Ok(OptimizerKind::PeiBatch { batch: 5 }));
        assert_eq!(parse_optimizer("msbo3"), Ok(OptimizerKind::Msbo { m: 3 }));
        for bad in ["", "clbo-mfgp0", "clbox", "cl0", "random", "pei-2"] {
            assert!(parse_optimizer(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn suite_round_trip() {
        let s = SuiteConfig::parse(
            r#"
format = "json"
[[experiment]]
problem = "branin2"
optimizer = "ego"
repeats = 2
"#,
        )
        .unwrap();
        assert_eq!(s.format, Some(Format::Json));
        assert_eq!(s.experiment[0].repeats, 2);
        assert_eq!(s.experiment[0].epsilon, 0.001);
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            ("[[experiment]]\nproblem = \"branin2\"\noptimizer = \"foo\"\n", "optimizer"),
            ("[[experiment]]\nproblem = \"nope\"\noptimizer = \"ego\"\n", "problem"),
            ("[[experiment]]\nproblem = \"branin2\"\noptimizer = \"ego\"\nrepeats = 0\n", "repeats"),
            ("[[experiment]]\nproblem = \"branin2\"\noptimizer = \"ego\"\nrepeets = 3\n", "repeets"),
            ("[[experiment]]\nproblem = \"branin2\"\noptimizer = \"ego\"\nrepeats = \"x\"\n", "repeats"),
            ("[[experiment]]\noptimizer = \"ego\"\n", "problem"),
            ("[[experiment]]\nproblem = \"branin2\"\noptimizer = \"ego\"\nn_init = 2\n", "n_init"),
            ("format = \"xml\"\n", "format"),
        ];
        for (text, field) in cases {
            let err = SuiteConfig::parse(text).unwrap_err().to_string();
            assert!(err.contains(field), "{err} should mention {field}");
        }
    }
}
