//! Comparison optimizers: sequential EGO, constant-liar and pseudo-EI
//! batches on a single GP, and the MSBO ablation (the co-learning loop with
//! independently fitted subset GPs).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{
    ei_z, expected_improvement, influence_function, maximize_acquisition, unit_box, AcquisitionConfig, Regime,
};
use crate::engine::{self, evaluate_candidates, initial_design, Budget, Candidate, ClboConfig, SubsetModelKind};
use crate::error::{Error, Result};
use crate::gp::{fit_sogp_from, Dataset, FitConfig, SogpModel, SogpParams};
use crate::problem::Problem;
use crate::record::{IterationRecord, OptimizationResult, Provenance};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Ego,
    ConstantLiar { batch: usize },
    PeiBatch { batch: usize },
    Msbo { m: usize },
    Clbo { m: usize, use_sogp: bool },
}

impl OptimizerKind {
    /// Evaluations per optimization cycle.
    pub fn batch_size(&self) -> usize {
        match *self {
            OptimizerKind::Ego => 1,
            OptimizerKind::ConstantLiar { batch } | OptimizerKind::PeiBatch { batch } => batch,
            OptimizerKind::Msbo { m } => m + 1,
            OptimizerKind::Clbo { m, use_sogp } => m + usize::from(use_sogp),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            OptimizerKind::Ego => "ego".into(),
            OptimizerKind::ConstantLiar { batch } => format!("cl{batch}"),
            OptimizerKind::PeiBatch { batch } => format!("pei{batch}"),
            OptimizerKind::Msbo { m } => format!("msbo{m}"),
            OptimizerKind::Clbo { m, use_sogp: true } => format!("clbo-mfgp{m}"),
            OptimizerKind::Clbo { m, use_sogp: false } => format!("clbo-mfgp{m}-nosogp"),
        }
    }
}

/// Settings shared by every optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_init: Option<usize>,
    pub n_budget: Option<usize>,
    pub t_max: Option<usize>,
    pub epsilon: f64,
    pub seed: u64,
    pub own_query_retention: bool,
    pub fit: FitConfig,
    pub acquisition: AcquisitionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let c = ClboConfig::default();
        Self {
            n_init: c.n_init,
            n_budget: c.n_budget,
            t_max: c.t_max,
            epsilon: c.epsilon,
            seed: c.seed,
            own_query_retention: c.own_query_retention,
            fit: c.fit,
            acquisition: c.acquisition,
        }
    }
}

impl RunConfig {
    pub fn clbo(&self, m: usize, use_sogp: bool, subset_model: SubsetModelKind) -> ClboConfig {
        ClboConfig {
            m_subsets: m,
            use_sogp,
            n_init: self.n_init,
            n_budget: self.n_budget,
            t_max: self.t_max,
            epsilon: self.epsilon,
            seed: self.seed,
            own_query_retention: self.own_query_retention,
            subset_model,
            fit: self.fit.clone(),
            acquisition: self.acquisition.clone(),
        }
    }
}

/// Runs `kind` on `problem`.
pub fn run_optimizer<T: Scalar, P: Problem<T> + ?Sized>(
    kind: OptimizerKind,
    problem: &P,
    config: &RunConfig,
) -> Result<OptimizationResult<T>> {
    match kind {
        OptimizerKind::Ego => run_ego(problem, config),
        OptimizerKind::ConstantLiar { batch } => run_constant_liar(problem, config, batch),
        OptimizerKind::PeiBatch { batch } => run_pei_batch(problem, config, batch),
        OptimizerKind::Msbo { m } => run_msbo(problem, config, m),
        OptimizerKind::Clbo { m, use_sogp } => engine::run(problem, &config.clbo(m, use_sogp, SubsetModelKind::Mfgp)),
    }
}

pub fn run_ego<T: Scalar, P: Problem<T> + ?Sized>(problem: &P, config: &RunConfig) -> Result<OptimizationResult<T>> {
    single_model_loop(problem, config, 1, BatchRule::ConstantLiar)
}

/// Batch selection against a model conditioned on lies `y = f_min` at
/// already-selected points (hyperparameters held fixed within the cycle).
pub fn run_constant_liar<T: Scalar, P: Problem<T> + ?Sized>(
    problem: &P,
    config: &RunConfig,
    batch: usize,
) -> Result<OptimizationResult<T>> {
    single_model_loop(problem, config, batch, BatchRule::ConstantLiar)
}

/// First point maximizes EI, each later one maximizes
/// `EI(x)·Π_j IF(x, x_j)` over the points already selected.
pub fn run_pei_batch<T: Scalar, P: Problem<T> + ?Sized>(
    problem: &P,
    config: &RunConfig,
    batch: usize,
) -> Result<OptimizationResult<T>> {
    single_model_loop(problem, config, batch, BatchRule::PseudoEi)
}

/// The co-learning loop with one independently fitted SOGP per subset.
pub fn run_msbo<T: Scalar, P: Problem<T> + ?Sized>(
    problem: &P,
    config: &RunConfig,
    m: usize,
) -> Result<OptimizationResult<T>> {
    engine::run(problem, &config.clbo(m, true, SubsetModelKind::IndependentSogp))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BatchRule {
    ConstantLiar,
    PseudoEi,
}

fn single_model_loop<T: Scalar, P: Problem<T> + ?Sized>(
    problem: &P,
    config: &RunConfig,
    batch: usize,
    rule: BatchRule,
) -> Result<OptimizationResult<T>> {
    if batch == 0 {
        return Err(Error::InvalidInput("batch size must be at least 1".into()));
    }
    let dim = problem.dim();
    let budget = Budget::resolve(config.n_init, config.n_budget, config.t_max, dim, batch);
    if budget.n_init < dim + 1 {
        return Err(Error::InvalidInput(format!("n_init must be at least d+1 = {}", dim + 1)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = initial_design::<T, _, _>(problem, budget.n_init, &mut rng)?;
    let mut warm: Option<SogpParams<T>> = None;

    while state.n_total < budget.n_budget && state.t_total < budget.t_max {
        let iteration = state.t_total + 1;
        let master = state.master_dataset()?;
        let params = fit_sogp_from(&master, &config.fit, warm.as_ref(), &mut rng)?;
        warm = Some(params.clone());
        let model = SogpModel::new(&master, params)?;
        let candidates = select_batch(&state.master_x, &state.master_y, &state.incumbent.x_min, &model, config, batch, rule, &mut rng)?;
        let queries = evaluate_candidates(problem, candidates, &mut rng)?;
        state.failures += queries.iter().filter(|q| q.substituted).count();
        engine::exchange_samples(&mut state, &queries, false, &mut rng);
        state.t_total = iteration;
        state.history.push(IterationRecord {
            iteration,
            queries,
            f_min: state.incumbent.f_min,
            n_total: state.n_total,
        });
    }
    Ok(state.into_result(problem))
}

#[allow(clippy::too_many_arguments)]
fn select_batch<T: Scalar, R: rand::Rng + ?Sized>(
    xs: &[Vec<T>],
    ys: &[T],
    x_min: &[T],
    model: &SogpModel<T>,
    config: &RunConfig,
    batch: usize,
    rule: BatchRule,
    rng: &mut R,
) -> Result<Vec<Candidate<T>>> {
    let dim = x_min.len();
    let bounds = unit_box::<T>(dim);
    let transform = model.transform();
    let f_min_raw = ys.iter().copied().fold(T::infinity(), T::min);
    let f_min = transform.standardize(f_min_raw);
    let seeds = [x_min.to_vec()];

    let mut selected: Vec<Candidate<T>> = Vec::with_capacity(batch);
    let mut current = model.clone();
    let (mut lie_x, mut lie_y) = (xs.to_vec(), ys.to_vec());
    for k in 0..batch {
        let x = {
            let ei = |x: &[T]| {
                let p = current.predict(x);
                expected_improvement(p.mean, p.variance, f_min)
            };
            let ls = &model.params().lengthscales;
            match rule {
                BatchRule::PseudoEi if k > 0 => {
                    let acq = |x: &[T]| {
                        selected
                            .iter()
                            .fold(ei(x), |a, c| a * influence_function(x, &c.x, ls))
                    };
                    maximize_acquisition(acq, &bounds, &config.acquisition, &[], rng).0
                }
                _ => maximize_acquisition(ei, &bounds, &config.acquisition, &seeds, rng).0,
            }
        };
        let p = current.predict(&x);
        let z = ei_z(p.mean, p.variance, f_min).ok();
        selected.push(Candidate {
            x: x.clone(),
            provenance: Provenance::Batch(k),
            z,
            regime: z.map(Regime::of),
            pei_invoked: rule == BatchRule::PseudoEi && k > 0,
        });
        if rule == BatchRule::ConstantLiar && k + 1 < batch {
            lie_x.push(x);
            lie_y.push(f_min_raw);
            let data = Dataset::with_transform(lie_x.clone(), &lie_y, transform)?;
            current = SogpModel::new(&data, model.params().clone())?;
        }
    }
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::benchmark;

    fn small() -> RunConfig {
        RunConfig {
            n_init: Some(4),
            n_budget: Some(10),
            seed: 5,
            ..RunConfig::default()
        }
    }

    #[test]
    fn labels_and_batch_sizes() {
        assert_eq!(OptimizerKind::Ego.batch_size(), 1);
        assert_eq!(OptimizerKind::Msbo { m: 2 }.batch_size(), 3);
        assert_eq!(OptimizerKind::Clbo { m: 3, use_sogp: false }.batch_size(), 3);
        assert_eq!(OptimizerKind::Clbo { m: 2, use_sogp: true }.label(), "clbo-mfgp2");
    }

    #[test]
    fn cl_batch_one_is_ego() {
        let p = benchmark::<f64>("forrester1").unwrap();
        let a = run_ego(&p, &small()).unwrap();
        let b = run_constant_liar(&p, &small(), 1).unwrap();
        let c = run_pei_batch(&p, &small(), 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn batch_runs_respect_budget() {
        let p = benchmark::<f64>("branin2").unwrap();
        let cfg = RunConfig {
            n_init: Some(6),
            n_budget: Some(12),
            ..RunConfig::default()
        };
        for r in [run_constant_liar(&p, &cfg, 3).unwrap(), run_pei_batch(&p, &cfg, 3).unwrap()] {
            assert_eq!(r.n_total, 12);
            assert!(r.history.iter().all(|h| h.queries.len() == 3));
            assert!(r
                .evaluations()
                .all(|q| q.x.iter().all(|&v| (0.0..=1.0).contains(&v) && v.is_finite())));
        }
    }

    #[test]
    fn zero_batch_rejected() {
        let p = benchmark::<f64>("forrester1").unwrap();
        assert!(run_constant_liar(&p, &small(), 0).is_err());
    }
}
