//! Seeded multi-repeat experiments.

use clbo_core::design::latin_hypercube;
use clbo_core::engine::{self, ModelView, SubsetModelKind};
use clbo_core::{run_optimizer, OptimizationResult, OptimizerKind, Problem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ResolvedExperiment};
use crate::diagnostics::{mean_ambiguity, Ambiguity};
use crate::error::{HarnessError, Result};
use crate::summary::{summarize, RunSummary};

/// Salt for the held-out ambiguity grids, which are redrawn every iteration
/// from streams separate from the run's own generator.
const GRID_SALT: u64 = 0xa5a5_0f0f_3c3c_9696;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityRecord {
    pub iteration: usize,
    #[serde(flatten)]
    pub ambiguity: Ambiguity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub run: usize,
    pub seed: u64,
    pub result: OptimizationResult<f64>,
    /// Regret after each function call.
    pub regret: Vec<f64>,
    pub ambiguity: Vec<AmbiguityRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub problem: String,
    pub optimizer: String,
    pub batch_size: usize,
    pub config: ExperimentConfig,
    pub runs: Vec<RunOutcome>,
    pub summary: RunSummary,
}

impl ExperimentResult {
    pub fn final_regrets(&self) -> Vec<f64> {
        self.runs.iter().map(|r| *r.regret.last().unwrap_or(&f64::NAN)).collect()
    }

    pub fn median_final_regret(&self) -> f64 {
        self.summary.final_regret.median
    }
}

/// Runs `repeats` seeds (`base_seed + k`) in parallel. The result does not
/// depend on thread count or scheduling.
pub fn run_experiment(exp: &ResolvedExperiment) -> Result<ExperimentResult> {
    let cfg = &exp.config;
    let runs: Vec<RunOutcome> = (0..cfg.repeats)
        .into_par_iter()
        .map(|k| run_once(exp, k))
        .collect::<Result<_>>()?;
    let traces: Vec<Vec<f64>> = runs.iter().map(|r| r.regret.clone()).collect();
    Ok(ExperimentResult {
        name: cfg.label(),
        problem: exp.problem.name.clone(),
        optimizer: exp.kind.label(),
        batch_size: exp.kind.batch_size(),
        config: cfg.clone(),
        runs,
        summary: summarize(&traces),
    })
}

fn run_once(exp: &ResolvedExperiment, k: usize) -> Result<RunOutcome> {
    let cfg = &exp.config;
    let seed = cfg.base_seed.wrapping_add(k as u64);
    let run_cfg = cfg.run_config(seed);
    let problem = &exp.problem;
    let fail = |e: clbo_core::Error| HarnessError::Runtime(format!("{} run {k} (seed {seed}): {e}", cfg.label()));

    let subset_kind = match exp.kind {
        OptimizerKind::Clbo { m, use_sogp } => Some(run_cfg.clbo(m, use_sogp, SubsetModelKind::Mfgp)),
        OptimizerKind::Msbo { m } => Some(run_cfg.clbo(m, true, SubsetModelKind::IndependentSogp)),
        _ => None,
    };
    let mut ambiguity = Vec::new();
    let result = match subset_kind {
        Some(clbo_cfg) if cfg.record_ambiguity => {
            let mut err = None;
            let r = engine::run_observed(problem, &clbo_cfg, |v: &ModelView<'_, f64>| {
                if err.is_some() {
                    return;
                }
                let stream = (seed ^ GRID_SALT).wrapping_mul(0x9e37_79b9).wrapping_add(v.iteration as u64);
                let grid: Vec<Vec<f64>> = latin_hypercube(cfg.ambiguity_grid, problem.dim(), &mut ChaCha8Rng::seed_from_u64(stream));
                let truth: Vec<f64> = grid.iter().map(|u| (problem.function)(&problem.to_raw(u))).collect();
                let preds: Vec<Vec<f64>> = grid
                    .iter()
                    .map(|u| {
                        (0..v.subsets.outputs())
                            .map(|i| v.subsets.predict(i, u).destandardize(&v.transform).mean)
                            .collect()
                    })
                    .collect();
                match mean_ambiguity(&preds, &truth) {
                    Ok(a) => ambiguity.push(AmbiguityRecord {
                        iteration: v.iteration,
                        ambiguity: a,
                    }),
                    Err(e) => err = Some(e),
                }
            })
            .map_err(fail)?;
            if let Some(e) = err {
                return Err(e);
            }
            r
        }
        _ => run_optimizer(exp.kind, problem, &run_cfg).map_err(fail)?,
    };
    let regret = result
        .regret_by_call()
        .unwrap_or_else(|| result.best_by_call());
    Ok(RunOutcome {
        run: k,
        seed,
        result,
        regret,
        ambiguity,
    })
}

/// Paired comparison: every optimizer on every problem with shared seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub problems: Vec<String>,
    pub optimizers: Vec<String>,
    /// `median[p][o]` is the median final regret of optimizer `o` on problem `p`.
    pub median: Vec<Vec<f64>>,
    pub experiments: Vec<ExperimentResult>,
}

impl Comparison {
    /// 1-based rank of optimizer `o` on problem `p` (ties share the better rank).
    pub fn rank(&self, p: usize, o: usize) -> usize {
        let v = self.median[p][o];
        1 + self.median[p].iter().filter(|&&w| w < v).count()
    }

    pub fn median_of(&self, problem: &str, optimizer: &str) -> Option<f64> {
        let p = self.problems.iter().position(|x| x == problem)?;
        let o = self.optimizers.iter().position(|x| x == optimizer)?;
        Some(self.median[p][o])
    }
}

pub fn compare(template: &ExperimentConfig, problems: &[String], optimizers: &[String]) -> Result<Comparison> {
    let mut experiments = Vec::new();
    let mut labels = Vec::new();
    for p in problems {
        for o in optimizers {
            let mut c = template.clone();
            c.problem = p.clone();
            c.optimizer = o.clone();
            c.name = None;
            experiments.push(run_experiment(&c.validate()?)?);
        }
    }
    for o in optimizers {
        labels.push(crate::config::parse_optimizer(o).map_err(HarnessError::Config)?.label());
    }
    let median = experiments
        .chunks(optimizers.len())
        .map(|row| row.iter().map(ExperimentResult::median_final_regret).collect())
        .collect();
    Ok(Comparison {
        problems: problems.to_vec(),
        optimizers: labels,
        median,
        experiments,
    })
}
