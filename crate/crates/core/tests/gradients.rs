mod common;

use clbo_core::gp::{sogp_nlml, sogp_nlml_grad};
use clbo_core::linalg::Matrix;
use clbo_core::mfgp::{bootstrap_subsets, mfgp_nlml, mfgp_nlml_grad};
use clbo_core::{MfgpParams, SogpParams};
use clbo_testkit::central_diff;
use common::*;
use rand::Rng;

fn agrees(analytic: &[f64], numeric: &[f64]) -> bool {
    analytic
        .iter()
        .zip(numeric)
        .all(|(a, n)| (a - n).abs() <= 1e-4 * a.abs().max(n.abs()).max(1e-3))
}

#[test]
fn sogp_gradient_matches_central_differences() {
    let mut r = rng(31);
    for _ in 0..20 {
        let d = r.random_range(1..=3);
        let data = random_dataset(r.random_range(4..=15), d, &mut r);
        let p = random_params(d, &mut r);
        let (v, g) = sogp_nlml_grad(&data, &p).unwrap();
        assert!(rel_close(v, sogp_nlml(&data, &p).unwrap(), 1e-12));
        let f = |x: &[f64]| sogp_nlml(&data, &SogpParams::from_log_vec(x)).unwrap();
        let fd = central_diff(f, &p.to_log_vec(), 1e-5);
        assert!(agrees(&g, &fd), "{g:?}\n{fd:?}");
    }
}

#[test]
fn mfgp_gradient_matches_central_differences() {
    let mut r = rng(32);
    for _ in 0..20 {
        let d = r.random_range(1..=3);
        let m = r.random_range(1..=3);
        let master = random_dataset(r.random_range(5..=12), d, &mut r);
        let subsets = bootstrap_subsets(&master, m, &mut r);
        let corr = Matrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.4 });
        let p = MfgpParams::from_correlation(
            (0..d).map(|_| r.random_range(0.15..0.8)).collect(),
            (0..m).map(|_| r.random_range(0.5..2.0)).collect(),
            (0..m).map(|_| r.random_range(1e-3..1e-2)).collect(),
            &corr,
        )
        .unwrap();
        let mut x = p.to_log_vec();
        // move the factor off the symmetric start
        let tail = d + 2 * m;
        for v in &mut x[tail..] {
            *v += r.random_range(-0.5..0.5);
        }
        let p = MfgpParams::from_log_vec(&x, d, m);
        let (v, g) = mfgp_nlml_grad(&subsets, &p).unwrap();
        assert!(rel_close(v, mfgp_nlml(&subsets, &p).unwrap(), 1e-12));
        let f = |x: &[f64]| mfgp_nlml(&subsets, &MfgpParams::from_log_vec(x, d, m)).unwrap();
        let fd = central_diff(f, &x, 1e-5);
        assert!(agrees(&g, &fd), "{g:?}\n{fd:?}");
    }
}
