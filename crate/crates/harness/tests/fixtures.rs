//! The library against the committed oracle fixtures.

use clbo_core::acquisition::expected_improvement;
use clbo_core::gp::sogp_nlml;
use clbo_core::linalg::Matrix;
use clbo_core::mfgp::mfgp_nlml;
use clbo_core::{benchmark, Dataset, MfgpModel, MfgpParams, OutputTransform, Problem, SogpModel, SogpParams, SubsetCollection};
use clbo_harness::oracle::{self, Fixtures};

fn committed() -> Fixtures {
    oracle::parse(&std::fs::read(oracle::committed_path()).unwrap()).unwrap()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300) || (a - b).abs() <= 1e-300
}

#[test]
fn committed_fixtures_are_current() {
    let fresh = oracle::to_bytes(&oracle::generate()).unwrap();
    let disk = std::fs::read(oracle::committed_path()).unwrap();
    assert!(fresh == disk, "fixtures/oracle.json is stale; run `clbo oracle --out crates/harness/fixtures`");
}

#[test]
fn optima_match_registry() {
    for o in committed().optima {
        let p = benchmark::<f64>(&o.problem).unwrap();
        let known = p.known_optimum().unwrap();
        assert!((known - o.value).abs() < 1e-9, "{}: {known} vs {}", o.problem, o.value);
        let at = p.evaluate(&o.x).unwrap();
        assert!((at - o.value).abs() < 1e-9, "{}: f(x*) = {at}", o.problem);
    }
}

#[test]
fn expected_improvement_within_three_standard_errors() {
    for e in committed().expected_improvement {
        let ei = expected_improvement(e.mean, e.sigma * e.sigma, e.f_min);
        assert!(
            (ei - e.mc_estimate).abs() <= 3.0 * e.mc_std_error + 1e-15,
            "z={} sigma={}: {ei} vs {} ± {}",
            e.z,
            e.sigma,
            e.mc_estimate,
            e.mc_std_error
        );
    }
}

#[test]
fn gp_posterior_and_nlml() {
    for c in committed().gp {
        let data = Dataset::with_transform(c.inputs.clone(), &c.outputs, OutputTransform::identity()).unwrap();
        let params = SogpParams::new(c.lengthscales.clone(), c.signal_variance, c.noise_variance).unwrap();
        let model = SogpModel::new(&data, params.clone()).unwrap();
        for (q, &(m, v)) in c.queries.iter().zip(&c.predictions) {
            let p = model.predict(q);
            assert!(rel_close(p.mean, m, 1e-8) && rel_close(p.variance, v, 1e-8), "{p:?} vs ({m}, {v})");
        }
        assert!(rel_close(sogp_nlml(&data, &params).unwrap(), c.nlml, 1e-8));
    }
}

#[test]
fn multi_output_posterior_and_nlml() {
    for c in committed().multi_gp {
        let inputs: Vec<Vec<f64>> = c.subsets.iter().flatten().cloned().collect();
        let master = Dataset::with_transform(inputs, &c.outputs, OutputTransform::identity()).unwrap();
        let mut start = 0;
        let rows: Vec<Vec<usize>> = c
            .subsets
            .iter()
            .map(|s| {
                let r = (start..start + s.len()).collect();
                start += s.len();
                r
            })
            .collect();
        let subsets = SubsetCollection::from_rows(&master, &rows).unwrap();
        let m = c.output_covariance.len();
        let kf = &c.output_covariance;
        let corr = Matrix::from_fn(m, m, |i, j| kf[i][j] / (kf[i][i] * kf[j][j]).sqrt());
        let scales = (0..m).map(|i| kf[i][i]).collect();
        let params = MfgpParams::from_correlation(c.lengthscales.clone(), scales, c.noise.clone(), &corr).unwrap();
        let cov = params.output_covariance();
        for i in 0..m {
            for j in 0..m {
                assert!((cov[(i, j)] - kf[i][j]).abs() < 1e-12);
            }
        }
        let model = MfgpModel::new(&subsets, params.clone()).unwrap();
        for (i, preds) in c.predictions.iter().enumerate() {
            for (q, &(mean, var)) in c.queries.iter().zip(preds) {
                let p = model.predict_output(i, q);
                assert!(rel_close(p.mean, mean, 1e-8), "output {i}: {} vs {mean}", p.mean);
                assert!(rel_close(p.variance, var, 1e-8), "output {i}: {} vs {var}", p.variance);
            }
        }
        assert!(rel_close(mfgp_nlml(&subsets, &params).unwrap(), c.nlml, 1e-8));
    }
}

#[test]
fn bootstrap_coverage_is_near_one_minus_one_over_e() {
    let c = committed().bootstrap_coverage_50;
    // 1 − (1 − 1/50)^50
    let exact = 1.0 - (1.0f64 - 1.0 / 50.0).powi(50);
    assert!((c - exact).abs() < 2e-3, "{c} vs {exact}");
}
