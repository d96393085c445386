mod common;

use clbo_core::acquisition::{expected_improvement, maximize_acquisition, unit_box};
use clbo_core::engine::{self, initialize, search_samples, ClboConfig, ModelView, SubsetModelKind};
use clbo_core::{benchmark, AcquisitionConfig, FitConfig, Problem, Provenance, SogpModel};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn quick(seed: u64, m: usize, use_sogp: bool, budget: usize) -> ClboConfig {
    ClboConfig {
        m_subsets: m,
        use_sogp,
        n_init: Some(6),
        n_budget: Some(budget),
        seed,
        fit: FitConfig { starts: 3, warm_starts: 2, max_iters: 50, ..FitConfig::default() },
        acquisition: AcquisitionConfig { starts: Some(20), refine: 2, max_evals: 100 },
        ..ClboConfig::default()
    }
}

/// Runs the engine and returns every invariant violation it observes.
fn violations(problem: &dyn Problem<f64>, config: &ClboConfig) -> Vec<String> {
    let mut bad = Vec::new();
    let mut last_fmin = f64::INFINITY;
    let result = engine::run_observed(problem, config, |v: &ModelView<'_, f64>| {
        let s = v.state;
        if s.incumbent.f_min > last_fmin {
            bad.push(format!("iteration {}: f_min increased", v.iteration));
        }
        last_fmin = s.incumbent.f_min;
        let true_min = s.master_y.iter().copied().fold(f64::INFINITY, f64::min);
        if s.incumbent.f_min != true_min {
            bad.push("incumbent is not the master minimum".into());
        }
        if s.n_total != s.master_x.len() {
            bad.push("n_total out of sync".into());
        }
        for rows in &s.subset_rows {
            if rows.iter().any(|&r| r >= s.master_x.len()) {
                bad.push("subset row outside master".into());
            }
            for (k, &a) in rows.iter().enumerate() {
                if rows[..k].iter().any(|&b| s.master_x[b] == s.master_x[a]) {
                    bad.push("duplicate row in subset".into());
                }
            }
        }
    })
    .unwrap();
    let budget = config.budget(problem.dim());
    let batch = config.batch_size();
    for h in &result.history {
        if h.queries.len() != batch {
            bad.push(format!("batch of {} at iteration {}", h.queries.len(), h.iteration));
        }
    }
    if result.n_total > budget.n_budget + batch - 1 || result.t_total > budget.t_max {
        bad.push("termination bound exceeded".into());
    }
    let by_call = result.best_by_call();
    if by_call.windows(2).any(|w| w[1] > w[0]) {
        bad.push("best-by-call increased".into());
    }
    if engine::run::<f64, _>(problem, config).unwrap() != result {
        bad.push("not deterministic".into());
    }
    bad
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn engine_invariants(seed in 0u64..10_000, m in 1usize..4, use_sogp: bool, which in 0usize..3, budget in 6usize..16) {
        let name = ["branin2", "michalewicz2", "forrester1"][which];
        let p = benchmark::<f64>(name).unwrap();
        let v = violations(&p, &quick(seed, m, use_sogp, budget));
        prop_assert!(v.is_empty(), "{:?}", v);
    }
}

#[test]
fn initialize_defaults() {
    let p = benchmark::<f64>("branin2").unwrap();
    let config = ClboConfig::default();
    let s = initialize(&p, &config, &mut rng(1)).unwrap();
    assert_eq!(s.n_total, 12);
    assert_eq!(s.subset_rows.len(), 2);
    assert_eq!(s, initialize(&p, &config, &mut rng(1)).unwrap());
    let s = initialize(&p, &ClboConfig { m_subsets: 1, use_sogp: false, ..config }, &mut rng(1)).unwrap();
    assert_eq!(s.subset_rows.len(), 1);
}

#[test]
fn budget_equal_to_init_runs_no_iterations() {
    let p = benchmark::<f64>("forrester1").unwrap();
    let r = engine::run::<f64, _>(&p, &quick(3, 2, true, 6)).unwrap();
    assert_eq!((r.n_total, r.t_total), (6, 0));
    assert!(r.history.is_empty());
}

#[test]
fn default_batch_is_three() {
    let p = benchmark::<f64>("branin2").unwrap();
    let r = engine::run::<f64, _>(&p, &ClboConfig { n_budget: Some(18), seed: 2, ..ClboConfig::default() }).unwrap();
    assert_eq!(r.t_total, 2);
    for h in &r.history {
        let tags: Vec<_> = h.queries.iter().map(|q| q.provenance).collect();
        assert_eq!(tags, vec![Provenance::Sogp, Provenance::Subset(0), Provenance::Subset(1)]);
    }
}

#[test]
fn failures_are_substituted() {
    let p = benchmark::<f64>("branin2").unwrap().with_failures(0.3, 9);
    let r = engine::run::<f64, _>(&p, &quick(4, 2, true, 15)).unwrap();
    assert!(r.failures > 0);
    assert!(r.evaluations().all(|q| q.value.is_finite()));
    assert_eq!(r.evaluations().filter(|q| q.substituted).count(), r.failures);
}

#[test]
fn rejects_bad_config() {
    let p = benchmark::<f64>("branin2").unwrap();
    for c in [
        ClboConfig { m_subsets: 0, ..ClboConfig::default() },
        ClboConfig { epsilon: 0.0, ..ClboConfig::default() },
        ClboConfig { n_init: Some(2), ..ClboConfig::default() },
    ] {
        assert!(engine::run::<f64, _>(&p, &c).is_err());
    }
}

/// Surrogate whose EI peaks exactly at `peak`.
struct Spike {
    peak: f64,
    ls: Vec<f64>,
}

impl clbo_core::engine::SubsetSurrogate<f64> for Spike {
    fn outputs(&self) -> usize {
        1
    }
    fn predict(&self, _: usize, x: &[f64]) -> clbo_core::Posterior<f64> {
        clbo_core::Posterior { mean: 40.0 * (x[0] - self.peak).powi(2) - 2.0, variance: 0.01 }
    }
    fn lengthscales(&self, _: usize) -> &[f64] {
        &self.ls
    }
}

/// A subset candidate sitting on a master row must be replaced by a PEI
/// maximizer at least ε away from it in ≥ 95% of trials.
#[test]
fn pei_moves_colliding_candidates() {
    let config = ClboConfig { m_subsets: 1, use_sogp: false, n_init: Some(8), ..ClboConfig::default() };
    let p = benchmark::<f64>("forrester1").unwrap();
    let trials = 40;
    let mut moved = 0;
    for seed in 0..trials {
        let mut r = rng(300 + seed);
        let state = initialize(&p, &config, &mut r).unwrap();
        let row = r.random_range(0..state.n_total);
        let spike = Spike { peak: state.master_x[row][0], ls: vec![r.random_range(0.02..0.3)] };
        let t = state.master_dataset().unwrap().transform();
        let batch = search_samples(&state, &t, None, &spike, &config, &mut r);
        let c = &batch[0];
        assert!(c.pei_invoked, "seed {seed}: no collision detected");
        if (c.x[0] - spike.peak).abs() >= config.epsilon {
            moved += 1;
        }
    }
    assert!(moved * 100 >= 95 * trials as usize, "{moved}/{trials}");
}

/// On (x − 0.3)², final regret < 1e-3 in at least 18 of 20 seeds.
#[test]
fn quadratic_regret() {
    let p = benchmark::<f64>("quadratic1").unwrap();
    let good = (0..20)
        .filter(|&seed| {
            let config = ClboConfig { n_budget: Some(30), seed, ..ClboConfig::default() };
            engine::run::<f64, _>(&p, &config).unwrap().final_regret().unwrap() < 1e-3
        })
        .count();
    assert!(good >= 18, "{good}/20");
}

#[test]
fn msbo_collapses_without_bootstrap_diversity() {
    // identical subsets give identical independent fits, so candidates coincide
    let p = benchmark::<f64>("michalewicz2").unwrap();
    let mut boot = 0.0;
    let mut same = 0.0;
    for seed in 0..10 {
        let config = ClboConfig { subset_model: SubsetModelKind::IndependentSogp, use_sogp: false, seed, ..ClboConfig::default() };
        let mut r = rng(seed);
        let mut state = initialize(&p, &config, &mut r).unwrap();
        let master = state.master_dataset().unwrap();
        let spread = |state: &clbo_core::ClboState<f64>, r: &mut rand_chacha::ChaCha8Rng| {
            let subsets = state.subsets(&master).unwrap();
            let models: Vec<SogpModel<f64>> = subsets
                .subsets()
                .iter()
                .map(|s| SogpModel::fit(&s.to_dataset(subsets.transform()), &config.fit, &mut rng(7)).unwrap())
                .collect();
            let surrogate = clbo_core::engine::IndependentSogps(models);
            let b = search_samples(state, &master.transform(), None, &surrogate, &config, r);
            clbo_core::scalar::dist(&b[0].x, &b[1].x)
        };
        boot += spread(&state, &mut r);
        let all: Vec<usize> = (0..state.n_total).collect();
        state.subset_rows = vec![all.clone(), all];
        same += spread(&state, &mut r);
    }
    assert!(same < boot, "identical {same} vs bootstrap {boot}");
}

#[test]
fn ei_maximizer_on_fitted_model_is_in_box() {
    let mut r = rng(50);
    let data = random_dataset(10, 2, &mut r);
    let model = SogpModel::fit(&data, &FitConfig::default(), &mut r).unwrap();
    let f_min = data.outputs().iter().copied().fold(f64::INFINITY, f64::min);
    let (x, v) = maximize_acquisition(
        |x: &[f64]| {
            let p = model.predict(x);
            expected_improvement(p.mean, p.variance, f_min)
        },
        &unit_box(2),
        &AcquisitionConfig::default(),
        &[],
        &mut r,
    );
    assert!(v >= 0.0 && x.iter().all(|c| (0.0..=1.0).contains(c)));
}
