//! Experiment harness for the `clbo-core` optimizers: seeded multi-repeat
//! studies, regret summaries, ambiguity diagnostics, CSV/JSON output and the
//! `clbo` command line.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod output;
pub mod summary;

pub use cli::cli_main;
pub use config::{parse_optimizer, ExperimentConfig, Format, SuiteConfig};
pub use diagnostics::{ambiguity_decomposition, invariant_violations, Ambiguity};
pub use error::{HarnessError, Result};
pub use experiment::{compare, run_experiment, Comparison, ExperimentResult, RunOutcome};
pub use summary::{median, quartiles, summarize, Quartiles, RunSummary};
