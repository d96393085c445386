//! Co-learning Bayesian optimization loop.
//!
//! Each cycle fits a full-data SOGP (optional) and a multi-output model over
//! bootstrap subsets, proposes one EI maximizer per model output, replaces
//! subset proposals that land within `epsilon` of known points by a
//! pseudo-EI maximizer, evaluates the batch and exchanges the new samples
//! between the training sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{
    ei_z, expected_improvement, influence_function, maximize_acquisition, unit_box, AcquisitionConfig, Incumbent,
    Regime,
};
use crate::design::{latin_hypercube, uniform_point};
use crate::error::{Error, Result};
use crate::gp::{fit_sogp_from, Dataset, FitConfig, OutputTransform, Posterior, SogpModel, SogpParams};
use crate::mfgp::{bootstrap_rows, fit_mfgp_from, MfgpModel, MfgpParams, SubsetCollection};
use crate::problem::Problem;
use crate::record::{IterationRecord, OptimizationResult, Provenance, QueryRecord};
use crate::scalar::{dist, Scalar};

/// Attempts at finding an evaluable replacement point before giving up.
const MAX_SUBSTITUTIONS: usize = 100;

/// How the per-subset surrogates are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubsetModelKind {
    /// One multi-output GP with shared lengthscales (CLBO).
    Mfgp,
    /// Independent SOGPs with their own hyperparameters (MSBO ablation).
    IndependentSogp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClboConfig {
    pub m_subsets: usize,
    pub use_sogp: bool,
    /// Defaults to `6·d`.
    pub n_init: Option<usize>,
    /// Defaults to `30·d`.
    pub n_budget: Option<usize>,
    /// Defaults to `2·⌈(n_budget − n_init)/batch⌉`.
    pub t_max: Option<usize>,
    /// Minimum distance (normalized space) before a subset proposal is
    /// replaced by its pseudo-EI alternative.
    pub epsilon: f64,
    pub seed: u64,
    /// Each subset output's own proposal joins its own training subset.
    pub own_query_retention: bool,
    pub subset_model: SubsetModelKind,
    pub fit: FitConfig,
    pub acquisition: AcquisitionConfig,
}

impl Default for ClboConfig {
    fn default() -> Self {
        Self {
            m_subsets: 2,
            use_sogp: true,
            n_init: None,
            n_budget: None,
            t_max: None,
            epsilon: 0.001,
            seed: 0,
            own_query_retention: true,
            subset_model: SubsetModelKind::Mfgp,
            fit: FitConfig::default(),
            acquisition: AcquisitionConfig::default(),
        }
    }
}

/// Budget numbers after applying dimension-dependent defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub n_init: usize,
    pub n_budget: usize,
    pub t_max: usize,
}

impl Budget {
    pub fn resolve(n_init: Option<usize>, n_budget: Option<usize>, t_max: Option<usize>, dim: usize, batch: usize) -> Self {
        let n_init = n_init.unwrap_or(6 * dim);
        let n_budget = n_budget.unwrap_or(30 * dim).max(n_init);
        let t_max = t_max.unwrap_or(2 * (n_budget - n_init).div_ceil(batch.max(1)));
        Self { n_init, n_budget, t_max }
    }
}

impl ClboConfig {
    pub fn batch_size(&self) -> usize {
        self.m_subsets + usize::from(self.use_sogp)
    }

    pub fn budget(&self, dim: usize) -> Budget {
        Budget::resolve(self.n_init, self.n_budget, self.t_max, dim, self.batch_size())
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.m_subsets == 0 {
            return Err(Error::InvalidInput("m_subsets must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput("epsilon must be positive".into()));
        }
        let b = self.budget(dim);
        if b.n_init < dim + 1 {
            return Err(Error::InvalidInput(format!("n_init must be at least d+1 = {}", dim + 1)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ClboState<T: Scalar> {
    /// Every evaluated point (normalized coordinates), in call order.
    pub master_x: Vec<Vec<T>>,
    /// Raw objective values aligned with `master_x`.
    pub master_y: Vec<T>,
    /// Master row indices of each training subset.
    pub subset_rows: Vec<Vec<usize>>,
    pub incumbent: Incumbent<T>,
    pub n_total: usize,
    pub t_total: usize,
    pub initial: Vec<QueryRecord<T>>,
    pub history: Vec<IterationRecord<T>>,
    pub failures: usize,
}

impl<T: Scalar> ClboState<T> {
    pub fn master_dataset(&self) -> Result<Dataset<T>> {
        Dataset::new(self.master_x.clone(), &self.master_y)
    }

    pub fn subsets(&self, master: &Dataset<T>) -> Result<SubsetCollection<T>> {
        SubsetCollection::from_rows(master, &self.subset_rows)
    }

    fn push_row(&mut self, x: Vec<T>, y: T) -> usize {
        self.master_x.push(x);
        self.master_y.push(y);
        self.n_total = self.master_x.len();
        self.master_x.len() - 1
    }

    /// Adds master row `row` to subset `i` unless an identical input is
    /// already there.
    fn add_to_subset(&mut self, i: usize, row: usize) {
        let x = &self.master_x[row];
        if !self.subset_rows[i].iter().any(|&r| self.master_x[r] == *x) {
            self.subset_rows[i].push(row);
        }
    }

    pub(crate) fn into_result<P: Problem<T> + ?Sized>(self, problem: &P) -> OptimizationResult<T> {
        OptimizationResult {
            problem: problem.name().to_string(),
            x_best: problem.to_raw(&self.incumbent.x_min),
            f_best: self.incumbent.f_min,
            known_optimum: problem.known_optimum(),
            n_init: self.initial.len(),
            initial: self.initial,
            history: self.history,
            n_total: self.n_total,
            t_total: self.t_total,
            failures: self.failures,
        }
    }
}

/// Evaluates `x` (normalized); on failure draws uniform random points until
/// one evaluates. Returns the point actually used, its value and whether a
/// substitution happened.
pub(crate) fn evaluate_with_substitution<T: Scalar, P: Problem<T> + ?Sized, R: Rng + ?Sized>(
    problem: &P,
    x: Vec<T>,
    rng: &mut R,
) -> Result<(Vec<T>, T, bool)> {
    if let Ok(v) = problem.evaluate(&problem.to_raw(&x)) {
        return Ok((x, v, false));
    }
    for _ in 0..MAX_SUBSTITUTIONS {
        let candidate = uniform_point(problem.dim(), rng);
        if let Ok(v) = problem.evaluate(&problem.to_raw(&candidate)) {
            return Ok((candidate, v, true));
        }
    }
    Err(Error::Evaluation(format!(
        "{}: no evaluable point after {MAX_SUBSTITUTIONS} random substitutions",
        problem.name()
    )))
}

/// Evaluates a Latin-hypercube design and returns a state with an empty
/// subset list.
pub(crate) fn initial_design<T: Scalar, P: Problem<T> + ?Sized, R: Rng + ?Sized>(
    problem: &P,
    n_init: usize,
    rng: &mut R,
) -> Result<ClboState<T>> {
    if n_init == 0 {
        return Err(Error::InvalidInput("n_init must be positive".into()));
    }
    let design: Vec<Vec<T>> = latin_hypercube(n_init, problem.dim(), rng);
    let mut state = ClboState {
        master_x: Vec::with_capacity(n_init),
        master_y: Vec::with_capacity(n_init),
        subset_rows: Vec::new(),
        incumbent: Incumbent {
            f_min: T::infinity(),
            x_min: Vec::new(),
        },
        n_total: 0,
        t_total: 0,
        initial: Vec::with_capacity(n_init),
        history: Vec::new(),
        failures: 0,
    };
    for x in design {
        let (x, value, substituted) = evaluate_with_substitution(problem, x, rng)?;
        state.failures += usize::from(substituted);
        if value < state.incumbent.f_min {
            state.incumbent = Incumbent {
                f_min: value,
                x_min: x.clone(),
            };
        }
        state.initial.push(QueryRecord {
            x_raw: problem.to_raw(&x),
            x: x.clone(),
            value,
            provenance: Provenance::Initial,
            z: None,
            regime: None,
            pei_invoked: false,
            substituted,
        });
        state.push_row(x, value);
    }
    Ok(state)
}

/// Evaluates the initial design and draws the bootstrap subsets.
pub fn initialize<T: Scalar, P: Problem<T> + ?Sized, R: Rng + ?Sized>(
    problem: &P,
    config: &ClboConfig,
    rng: &mut R,
) -> Result<ClboState<T>> {
    config.validate(problem.dim())?;
    let budget = config.budget(problem.dim());
    let mut state = initial_design(problem, budget.n_init, rng)?;
    let master = state.master_dataset()?;
    state.subset_rows = bootstrap_rows(&master, config.m_subsets, rng);
    Ok(state)
}

/// Predictions of the per-subset models consumed by the batch search.
pub trait SubsetSurrogate<T: Scalar> {
    fn outputs(&self) -> usize;
    /// Standardized posterior of output `i`.
    fn predict(&self, output: usize, x: &[T]) -> Posterior<T>;
    /// Lengthscales used for the pseudo-EI influence function of output `i`.
    fn lengthscales(&self, output: usize) -> &[T];
}

impl<T: Scalar> SubsetSurrogate<T> for MfgpModel<T> {
    fn outputs(&self) -> usize {
        MfgpModel::outputs(self)
    }

    fn predict(&self, output: usize, x: &[T]) -> Posterior<T> {
        self.predict_output(output, x)
    }

    fn lengthscales(&self, _output: usize) -> &[T] {
        &self.params().shared_lengthscales
    }
}

/// One independently fitted SOGP per subset.
#[derive(Debug, Clone)]
pub struct IndependentSogps<T: Scalar>(pub Vec<SogpModel<T>>);

impl<T: Scalar> SubsetSurrogate<T> for IndependentSogps<T> {
    fn outputs(&self) -> usize {
        self.0.len()
    }

    fn predict(&self, output: usize, x: &[T]) -> Posterior<T> {
        self.0[output].predict(x)
    }

    fn lengthscales(&self, output: usize) -> &[T] {
        &self.0[output].params().lengthscales
    }
}

/// A proposed query before evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T: Scalar> {
    pub x: Vec<T>,
    pub provenance: Provenance,
    pub z: Option<T>,
    pub regime: Option<Regime>,
    pub pei_invoked: bool,
}

/// Batch search: the SOGP EI maximizer, then one EI maximizer per subset
/// output. A subset proposal closer than `epsilon` to the master set or to
/// an earlier proposal is replaced by the maximizer of
/// `EI(x)·IF(x, proposal)`. If that replacement is still too close it is
/// accepted as is.
pub fn search_samples<T: Scalar, R: Rng + ?Sized>(
    state: &ClboState<T>,
    transform: &OutputTransform<T>,
    sogp: Option<&SogpModel<T>>,
    subsets: &dyn SubsetSurrogate<T>,
    config: &ClboConfig,
    rng: &mut R,
) -> Vec<Candidate<T>> {
    let dim = state.incumbent.x_min.len();
    let bounds = unit_box::<T>(dim);
    let f_min = transform.standardize(state.incumbent.f_min);
    let seeds = [state.incumbent.x_min.clone()];
    let diagnose = |p: Posterior<T>| {
        let z = ei_z(p.mean, p.variance, f_min).ok();
        (z, z.map(Regime::of))
    };

    let mut batch: Vec<Candidate<T>> = Vec::with_capacity(config.batch_size());
    if let Some(model) = sogp {
        let (x, _) = maximize_acquisition(
            |x: &[T]| {
                let p = model.predict(x);
                expected_improvement(p.mean, p.variance, f_min)
            },
            &bounds,
            &config.acquisition,
            &seeds,
            rng,
        );
        let (z, regime) = diagnose(model.predict(&x));
        batch.push(Candidate {
            x,
            provenance: Provenance::Sogp,
            z,
            regime,
            pei_invoked: false,
        });
    }

    let epsilon = T::lit(config.epsilon);
    for i in 0..subsets.outputs() {
        let ei_i = |x: &[T]| {
            let p = subsets.predict(i, x);
            expected_improvement(p.mean, p.variance, f_min)
        };
        let (mut x, _) = maximize_acquisition(ei_i, &bounds, &config.acquisition, &seeds, rng);
        let d_min = state
            .master_x
            .iter()
            .chain(batch.iter().map(|c| &c.x))
            .map(|p| dist(&x, p))
            .fold(T::infinity(), T::min);
        let pei_invoked = d_min < epsilon;
        if pei_invoked {
            let anchor = x.clone();
            let ls = subsets.lengthscales(i);
            let (replacement, _) = maximize_acquisition(
                |x: &[T]| ei_i(x) * influence_function(x, &anchor, ls),
                &bounds,
                &config.acquisition,
                &[],
                rng,
            );
            x = replacement;
        }
        let (z, regime) = diagnose(subsets.predict(i, &x));
        batch.push(Candidate {
            x,
            provenance: Provenance::Subset(i),
            z,
            regime,
            pei_invoked,
        });
    }
    batch
}

/// Adds an evaluated batch to the master set, updates the incumbent and
/// routes new samples into the subsets:
///
/// * incumbent improved by the SOGP query → it joins every subset;
/// * incumbent improved by subset query `nbest` → it joins every other
///   subset, and the SOGP query joins one random subset;
/// * no improvement → the SOGP query joins one random subset;
/// * with `own_query_retention`, subset output `i`'s query always joins
///   subset `i`.
pub fn exchange_samples<T: Scalar, R: Rng + ?Sized>(
    state: &mut ClboState<T>,
    batch: &[QueryRecord<T>],
    own_query_retention: bool,
    rng: &mut R,
) {
    let m = state.subset_rows.len();
    let previous = state.incumbent.f_min;
    let mut best_row = None;
    let mut rows = Vec::with_capacity(batch.len());
    for q in batch {
        let row = state.push_row(q.x.clone(), q.value);
        rows.push((row, q.provenance, q.value));
        if q.value < state.incumbent.f_min {
            state.incumbent = Incumbent {
                f_min: q.value,
                x_min: q.x.clone(),
            };
            best_row = Some((row, q.provenance));
        }
    }
    if m == 0 {
        return;
    }
    let sogp_row = rows.iter().find(|r| r.1 == Provenance::Sogp).map(|r| r.0);

    if own_query_retention {
        for &(row, prov, _) in &rows {
            if let Provenance::Subset(i) = prov {
                if i < m {
                    state.add_to_subset(i, row);
                }
            }
        }
    }

    let improved = state.incumbent.f_min < previous;
    match best_row {
        Some((row, Provenance::Sogp)) if improved => {
            for i in 0..m {
                state.add_to_subset(i, row);
            }
        }
        Some((_, Provenance::Subset(_))) if improved => {
            // nbest: the best of the subset queries
            let (nbest_row, nbest) = rows
                .iter()
                .filter_map(|&(row, prov, v)| match prov {
                    Provenance::Subset(i) => Some((row, i, v)),
                    _ => None,
                })
                .fold(None, |acc: Option<(usize, usize, T)>, cur| match acc {
                    Some(a) if a.2 <= cur.2 => Some(a),
                    _ => Some(cur),
                })
                .map(|(row, i, _)| (row, i))
                .expect("improvement came from a subset query");
            for i in (0..m).filter(|&i| i != nbest) {
                state.add_to_subset(i, nbest_row);
            }
            if let Some(s) = sogp_row {
                let j = rng.random_range(0..m);
                state.add_to_subset(j, s);
            }
        }
        _ => {
            if let Some(s) = sogp_row {
                let j = rng.random_range(0..m);
                state.add_to_subset(j, s);
            }
        }
    }
}

/// Everything an observer can inspect right after the models of a cycle
/// are fitted.
pub struct ModelView<'a, T: Scalar> {
    pub iteration: usize,
    pub state: &'a ClboState<T>,
    pub transform: OutputTransform<T>,
    pub sogp: Option<&'a SogpModel<T>>,
    pub subsets: &'a dyn SubsetSurrogate<T>,
}

#[derive(Debug, Clone, Default)]
struct WarmStarts<T: Scalar> {
    sogp: Option<SogpParams<T>>,
    mfgp: Option<MfgpParams<T>>,
    subsets: Vec<Option<SogpParams<T>>>,
}

enum SubsetModels<T: Scalar> {
    Mfgp(MfgpModel<T>),
    Independent(IndependentSogps<T>),
}

impl<T: Scalar> SubsetModels<T> {
    fn as_surrogate(&self) -> &dyn SubsetSurrogate<T> {
        match self {
            SubsetModels::Mfgp(m) => m,
            SubsetModels::Independent(m) => m,
        }
    }
}

fn fit_models<T: Scalar, R: Rng + ?Sized>(
    state: &ClboState<T>,
    master: &Dataset<T>,
    config: &ClboConfig,
    warm: &mut WarmStarts<T>,
    rng: &mut R,
) -> Result<(Option<SogpModel<T>>, SubsetModels<T>)> {
    let sogp = if config.use_sogp {
        let params = fit_sogp_from(master, &config.fit, warm.sogp.as_ref(), rng)?;
        warm.sogp = Some(params.clone());
        Some(SogpModel::new(master, params)?)
    } else {
        None
    };
    let collection = state.subsets(master)?;
    let models = match config.subset_model {
        SubsetModelKind::Mfgp => {
            let params = fit_mfgp_from(&collection, &config.fit, warm.mfgp.as_ref(), rng)?;
            warm.mfgp = Some(params.clone());
            SubsetModels::Mfgp(MfgpModel::new(&collection, params)?)
        }
        SubsetModelKind::IndependentSogp => {
            warm.subsets.resize(collection.len(), None);
            let mut models = Vec::with_capacity(collection.len());
            for (i, s) in collection.subsets().iter().enumerate() {
                let data = s.to_dataset(collection.transform());
                let params = fit_sogp_from(&data, &config.fit, warm.subsets[i].as_ref(), rng)?;
                warm.subsets[i] = Some(params.clone());
                models.push(SogpModel::new(&data, params)?);
            }
            SubsetModels::Independent(IndependentSogps(models))
        }
    };
    Ok((sogp, models))
}

/// Runs the full optimization loop.
pub fn run<T: Scalar, P: Problem<T> + ?Sized>(problem: &P, config: &ClboConfig) -> Result<OptimizationResult<T>> {
    run_observed(problem, config, |_| {})
}

/// As [`run`], calling `observer` once per cycle after the models are fitted.
pub fn run_observed<T: Scalar, P: Problem<T> + ?Sized>(
    problem: &P,
    config: &ClboConfig,
    mut observer: impl FnMut(&ModelView<'_, T>),
) -> Result<OptimizationResult<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let budget = config.budget(problem.dim());
    let mut state = initialize(problem, config, &mut rng)?;
    let mut warm = WarmStarts::default();

    while state.n_total < budget.n_budget && state.t_total < budget.t_max {
        let iteration = state.t_total + 1;
        let master = state.master_dataset()?;
        let transform = master.transform();
        let (sogp, models) = fit_models(&state, &master, config, &mut warm, &mut rng)?;
        observer(&ModelView {
            iteration,
            state: &state,
            transform,
            sogp: sogp.as_ref(),
            subsets: models.as_surrogate(),
        });
        let candidates = search_samples(&state, &transform, sogp.as_ref(), models.as_surrogate(), config, &mut rng);
        let queries = evaluate_candidates(problem, candidates, &mut rng)?;
        state.failures += queries.iter().filter(|q| q.substituted).count();
        exchange_samples(&mut state, &queries, config.own_query_retention, &mut rng);
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

pub(crate) fn evaluate_candidates<T: Scalar, P: Problem<T> + ?Sized, R: Rng + ?Sized>(
    problem: &P,
    candidates: Vec<Candidate<T>>,
    rng: &mut R,
) -> Result<Vec<QueryRecord<T>>> {
    candidates
        .into_iter()
        .map(|c| {
            let (x, value, substituted) = evaluate_with_substitution(problem, c.x, rng)?;
            Ok(QueryRecord {
                x_raw: problem.to_raw(&x),
                x,
                value,
                provenance: c.provenance,
                z: c.z,
                regime: c.regime,
                pei_invoked: c.pei_invoked,
                substituted,
            })
        })
        .collect()
}
