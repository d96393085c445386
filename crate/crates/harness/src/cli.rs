//! The `clbo` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, Format, SuiteConfig};
use crate::error::{HarnessError, Result};
use crate::experiment::{compare, run_experiment};
use crate::{oracle, output};

pub const OUT_DIR_ENV: &str = "CLBO_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "clbo-out";

#[derive(Debug, Parser)]
#[command(name = "clbo", version, about = "Co-learning Bayesian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment (several seeded repeats).
    Run(RunArgs),
    /// Run every experiment in a TOML config file.
    Suite(SuiteArgs),
    /// Paired median-regret table of several optimizers on shared seeds.
    Compare(CompareArgs),
    /// Regenerate the oracle reference values.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Base seed; repeat k uses seed + k.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $CLBO_OUT_DIR, else ./clbo-out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct Budget {
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    n_init: Option<usize>,
    #[arg(long)]
    n_budget: Option<usize>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    failure_rate: Option<f64>,
    /// Do not keep a subset's own query in that subset after exchange.
    #[arg(long)]
    no_own_query_retention: bool,
}

impl Budget {
    fn apply(&self, c: &mut ExperimentConfig) {
        if let Some(r) = self.repeats {
            c.repeats = r;
        }
        c.n_init = self.n_init.or(c.n_init);
        c.n_budget = self.n_budget.or(c.n_budget);
        c.t_max = self.t_max.or(c.t_max);
        if let Some(e) = self.epsilon {
            c.epsilon = e;
        }
        if let Some(f) = self.failure_rate {
            c.failure_rate = f;
        }
        if self.no_own_query_retention {
            c.own_query_retention = false;
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    problem: String,
    #[arg(long)]
    optimizer: String,
    #[arg(long)]
    name: Option<String>,
    #[command(flatten)]
    budget: Budget,
    /// Log the subset-ensemble ambiguity decomposition each iteration.
    #[arg(long)]
    record_ambiguity: bool,
    #[arg(long)]
    ambiguity_grid: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SuiteArgs {
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long, value_delimiter = ',', default_value = "branin2,michalewicz2,forrester1")]
    problems: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "clbo,ego")]
    optimizers: Vec<String>,
    #[command(flatten)]
    budget: Budget,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Directory to write oracle.json into.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn out_dir(cli: Option<&Path>, config: Option<&Path>) -> PathBuf {
    cli.or(config)
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn report(files: &[PathBuf], out: &mut dyn Write) {
    for f in files {
        let _ = writeln!(out, "wrote {}", f.display());
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Run(a) => {
            let mut c = ExperimentConfig::new(&a.problem, &a.optimizer);
            c.name = a.name;
            a.budget.apply(&mut c);
            c.base_seed = a.common.seed.unwrap_or(0);
            c.record_ambiguity = a.record_ambiguity;
            if let Some(g) = a.ambiguity_grid {
                c.ambiguity_grid = g;
            }
            let result = run_experiment(&c.validate()?)?;
            let _ = writeln!(
                out,
                "{}: median final regret {} over {} runs",
                result.name,
                result.median_final_regret(),
                result.runs.len()
            );
            let dir = out_dir(a.common.out.as_deref(), None);
            let files = output::write_experiments(&dir, &[result], a.common.format.unwrap_or_default())?;
            report(&files, out);
        }
        Command::Suite(a) => {
            let suite = SuiteConfig::load(&a.config)?;
            let mut results = Vec::new();
            for mut c in suite.experiment.clone() {
                if let Some(s) = a.common.seed {
                    c.base_seed = s;
                }
                let r = run_experiment(&c.validate()?)?;
                let _ = writeln!(out, "{}: median final regret {}", r.name, r.median_final_regret());
                results.push(r);
            }
            let dir = out_dir(a.common.out.as_deref(), suite.output_dir.as_deref());
            let format = a.common.format.or(suite.format).unwrap_or_default();
            report(&output::write_experiments(&dir, &results, format)?, out);
        }
        Command::Compare(a) => {
            if a.problems.is_empty() || a.optimizers.is_empty() {
                return Err(HarnessError::Config("field `problems`/`optimizers`: lists must be non-empty".into()));
            }
            let mut template = ExperimentConfig::new(&a.problems[0], &a.optimizers[0]);
            a.budget.apply(&mut template);
            template.base_seed = a.common.seed.unwrap_or(0);
            for o in &a.optimizers {
                crate::config::parse_optimizer(o).map_err(|m| HarnessError::Config(format!("field `optimizer`: {m}")))?;
            }
            for p in &a.problems {
                let mut c = template.clone();
                c.problem = p.clone();
                c.validate()?;
            }
            let c = compare(&template, &a.problems, &a.optimizers)?;
            let _ = write!(out, "{}", output::compare_table(&c));
            let dir = out_dir(a.common.out.as_deref(), None);
            report(&output::write_comparison(&dir, &c, a.common.format.unwrap_or_default())?, out);
        }
        Command::Oracle(a) => {
            let dir = out_dir(a.out.as_deref(), None);
            std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
            let path = dir.join("oracle.json");
            let bytes = oracle::to_bytes(&oracle::generate())?;
            std::fs::write(&path, bytes).map_err(|e| HarnessError::io(&path, e))?;
            report(&[path], out);
        }
    }
    Ok(())
}

/// Parses `argv` (program name first) and runs the command. Returns the
/// process exit code: 0 success, 1 configuration error, 2 runtime failure.
pub fn cli_main<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
