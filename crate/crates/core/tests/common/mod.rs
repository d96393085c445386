#![allow(dead_code)]

use clbo_core::{Dataset, SogpParams};
use clbo_testkit::Hyper;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(n: usize, d: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

pub fn random_dataset(n: usize, d: usize, rng: &mut impl Rng) -> Dataset<f64> {
    let x = random_points(n, d, rng);
    let y: Vec<f64> = x
        .iter()
        .map(|p| p.iter().enumerate().map(|(h, v)| ((h + 2) as f64 * v).sin()).sum::<f64>() + 0.1 * rng.random::<f64>())
        .collect();
    Dataset::new(x, &y).unwrap()
}

pub fn random_params(d: usize, rng: &mut impl Rng) -> SogpParams<f64> {
    SogpParams::new(
        (0..d).map(|_| rng.random_range(0.15..0.8)).collect(),
        rng.random_range(0.5..2.0),
        rng.random_range(1e-4..1e-2),
    )
    .unwrap()
}

pub fn hyper(p: &SogpParams<f64>) -> Hyper {
    Hyper {
        ls: p.lengthscales.clone(),
        sf2: p.signal_variance,
        sn2: p.noise_variance,
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
