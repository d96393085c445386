//! Reference values computed by the independent oracles in `clbo-testkit`.
//! `clbo oracle` writes them to `oracle.json`; the committed copy lives in
//! `fixtures/oracle.json` and the test suite checks the library against it.

use clbo_testkit as tk;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const FIXTURE_SCHEMA: &str = "clbo-oracle/v1";
const SEED: u64 = 20_240_917;
const EI_DRAWS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub problem: String,
    pub x: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EiPoint {
    pub z: f64,
    pub sigma: f64,
    pub mean: f64,
    pub f_min: f64,
    pub mc_estimate: f64,
    pub mc_std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpCase {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub queries: Vec<Vec<f64>>,
    /// Posterior mean and variance (noise included) at each query.
    pub predictions: Vec<(f64, f64)>,
    pub nlml: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiGpCase {
    pub subsets: Vec<Vec<Vec<f64>>>,
    pub outputs: Vec<f64>,
    pub lengthscales: Vec<f64>,
    pub output_covariance: Vec<Vec<f64>>,
    pub noise: Vec<f64>,
    pub queries: Vec<Vec<f64>>,
    /// `predictions[i][q]` is output `i` at query `q`.
    pub predictions: Vec<Vec<(f64, f64)>>,
    pub nlml: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixtures {
    pub schema: String,
    pub seed: u64,
    pub optima: Vec<Optimum>,
    pub expected_improvement: Vec<EiPoint>,
    pub gp: Vec<GpCase>,
    pub multi_gp: Vec<MultiGpCase>,
    /// Mean distinct fraction of a bootstrap resample of 50 items.
    pub bootstrap_coverage_50: f64,
}

fn points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

fn gp_case(rng: &mut ChaCha8Rng, n: usize, d: usize) -> GpCase {
    let inputs = points(rng, n, d);
    let outputs: Vec<f64> = inputs
        .iter()
        .map(|x| x.iter().enumerate().map(|(i, v)| ((i + 2) as f64 * v).sin()).sum())
        .collect();
    let h = tk::Hyper {
        ls: (0..d).map(|_| 0.2 + 0.6 * rng.random::<f64>()).collect(),
        sf2: 0.5 + rng.random::<f64>(),
        sn2: 1e-4 * (1.0 + rng.random::<f64>()),
    };
    let queries = points(rng, 5, d);
    let predictions = queries.iter().map(|q| tk::gp_predict(&inputs, &outputs, &h, q)).collect();
    GpCase {
        nlml: tk::gp_nlml(&inputs, &outputs, &h),
        inputs,
        outputs,
        lengthscales: h.ls,
        signal_variance: h.sf2,
        noise_variance: h.sn2,
        queries,
        predictions,
    }
}

fn multi_case(rng: &mut ChaCha8Rng, sizes: &[usize], d: usize) -> MultiGpCase {
    let subsets: Vec<Vec<Vec<f64>>> = sizes.iter().map(|&n| points(rng, n, d)).collect();
    let outputs: Vec<f64> = subsets
        .iter()
        .flatten()
        .map(|x| x.iter().map(|v| (3.0 * v).cos()).sum::<f64>() + 0.1 * rng.random::<f64>())
        .collect();
    let m = sizes.len();
    // Random lower-triangular factor; kf = L Lᵀ is positive definite.
    let l: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| if j < i { rng.random::<f64>() - 0.5 } else if j == i { 0.5 + rng.random::<f64>() } else { 0.0 }).collect())
        .collect();
    let kf: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| tk::dot(&l[i], &l[j])).collect()).collect();
    let h = tk::MultiHyper {
        ls: (0..d).map(|_| 0.2 + 0.6 * rng.random::<f64>()).collect(),
        kf,
        noise: (0..m).map(|_| 1e-4 * (1.0 + rng.random::<f64>())).collect(),
    };
    let queries = points(rng, 4, d);
    let predictions = (0..m)
        .map(|i| queries.iter().map(|q| tk::multi_predict(&subsets, &outputs, &h, i, q)).collect())
        .collect();
    MultiGpCase {
        nlml: tk::multi_nlml(&subsets, &outputs, &h),
        subsets,
        outputs,
        lengthscales: h.ls,
        output_covariance: h.kf,
        noise: h.noise,
        queries,
        predictions,
    }
}

/// Recomputes every fixture. Deterministic: same bytes on every call.
pub fn generate() -> Fixtures {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut optima = Vec::new();
    for d in [2, 5] {
        let (x, v) = tk::optima::michalewicz(d);
        optima.push(Optimum {
            problem: format!("michalewicz{d}"),
            x,
            value: v,
        });
    }
    let (x, v) = tk::optima::branin();
    optima.push(Optimum {
        problem: "branin2".into(),
        x: x.to_vec(),
        value: v,
    });
    let (x, v) = tk::optima::forrester();
    optima.push(Optimum {
        problem: "forrester1".into(),
        x: vec![x],
        value: v,
    });
    let (x, v) = tk::optima::hartman6();
    optima.push(Optimum {
        problem: "hartman6".into(),
        x,
        value: v,
    });
    let trid_x: Vec<f64> = (1..=10).map(|i| (i * (11 - i)) as f64).collect();
    optima.push(Optimum {
        problem: "trid10".into(),
        value: tk::functions::trid(&trid_x),
        x: trid_x,
    });

    let mut expected_improvement = Vec::new();
    for sigma in [0.1, 1.0, 10.0] {
        for z in -3..=3 {
            let z = z as f64;
            let f_min = z * sigma;
            let (est, se) = tk::mc_expected_improvement(0.0, sigma, f_min, EI_DRAWS, &mut rng);
            expected_improvement.push(EiPoint {
                z,
                sigma,
                mean: 0.0,
                f_min,
                mc_estimate: est,
                mc_std_error: se,
            });
        }
    }

    let gp = vec![gp_case(&mut rng, 8, 1), gp_case(&mut rng, 12, 2), gp_case(&mut rng, 15, 3)];
    let multi_gp = vec![multi_case(&mut rng, &[6, 5], 2), multi_case(&mut rng, &[5, 4, 6], 3)];
    let bootstrap_coverage_50 = tk::bootstrap_coverage(50, 20_000, &mut rng);

    Fixtures {
        schema: FIXTURE_SCHEMA.into(),
        seed: SEED,
        optima,
        expected_improvement,
        gp,
        multi_gp,
        bootstrap_coverage_50,
    }
}

pub fn to_bytes(f: &Fixtures) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(f).map_err(|e| HarnessError::Runtime(format!("json: {e}")))?;
    v.push(b'\n');
    Ok(v)
}

pub fn parse(bytes: &[u8]) -> Result<Fixtures> {
    serde_json::from_slice(bytes).map_err(|e| HarnessError::Config(format!("oracle fixtures: {e}")))
}

/// Path of the committed fixtures file.
pub fn committed_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("oracle.json")
}
