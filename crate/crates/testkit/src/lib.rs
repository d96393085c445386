//! Reference implementations used to check the optimized code paths.
//!
//! Everything here is plain `f64` and deliberately naive: explicit matrix
//! inverses, LU determinants, brute-force grids and Monte-Carlo sampling.
//! None of it shares code with `clbo-core`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Mat = Vec<Vec<f64>>;

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn inverse(a: &Mat) -> Option<Mat> {
    let n = a.len();
    let mut m: Mat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col] == 0.0 {
            return None;
        }
        m.swap(col, pivot);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// `ln |det a|` from an LU factorization with partial pivoting.
pub fn log_abs_det(a: &Mat) -> f64 {
    let n = a.len();
    let mut m = a.clone();
    let mut acc = 0.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        acc += p.abs().ln();
        for r in col + 1..n {
            let f = m[r][col] / p;
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    acc
}

pub fn mat_vec(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared-exponential kernel; `ls` holds lengthscales `l` (not `l²`).
pub fn se(a: &[f64], b: &[f64], ls: &[f64], sf2: f64) -> f64 {
    let mut s = 0.0;
    for h in 0..a.len() {
        let r = (a[h] - b[h]) / ls[h];
        s += r * r;
    }
    sf2 * (-0.5 * s).exp()
}

/// Single-output GP hyperparameters, in the same units as the library.
#[derive(Debug, Clone)]
pub struct Hyper {
    pub ls: Vec<f64>,
    pub sf2: f64,
    pub sn2: f64,
}

fn gram(x: &[Vec<f64>], h: &Hyper) -> Mat {
    let n = x.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| se(&x[i], &x[j], &h.ls, h.sf2) + if i == j { h.sn2 } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Posterior mean and variance (including noise) by explicit inverse.
pub fn gp_predict(x: &[Vec<f64>], y: &[f64], h: &Hyper, q: &[f64]) -> (f64, f64) {
    let kinv = inverse(&gram(x, h)).expect("singular Gram matrix");
    let k: Vec<f64> = x.iter().map(|xi| se(q, xi, &h.ls, h.sf2)).collect();
    let alpha = mat_vec(&kinv, y);
    let mean = dot(&k, &alpha);
    let var = (h.sf2 - dot(&k, &mat_vec(&kinv, &k))).max(0.0) + h.sn2;
    (mean, var)
}

pub fn gp_nlml(x: &[Vec<f64>], y: &[f64], h: &Hyper) -> f64 {
    let c = gram(x, h);
    let kinv = inverse(&c).expect("singular Gram matrix");
    let n = y.len() as f64;
    0.5 * dot(y, &mat_vec(&kinv, y)) + 0.5 * log_abs_det(&c) + 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

/// Multi-output GP with shared lengthscales: `cov((x,i),(x',j)) =
/// kf[i][j]·exp(−½‖(x−x')/l‖²)` plus `noise[i]` on the diagonal.
#[derive(Debug, Clone)]
pub struct MultiHyper {
    pub ls: Vec<f64>,
    pub kf: Mat,
    pub noise: Vec<f64>,
}

fn stacked(subsets: &[Vec<Vec<f64>>]) -> Vec<(usize, &Vec<f64>)> {
    subsets
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.iter().map(move |x| (i, x)))
        .collect()
}

pub fn multi_gram(subsets: &[Vec<Vec<f64>>], h: &MultiHyper) -> Mat {
    let rows = stacked(subsets);
    rows.iter()
        .enumerate()
        .map(|(a, &(i, xa))| {
            rows.iter()
                .enumerate()
                .map(|(b, &(j, xb))| se(xa, xb, &h.ls, h.kf[i][j]) + if a == b { h.noise[i] } else { 0.0 })
                .collect()
        })
        .collect()
}

pub fn multi_predict(subsets: &[Vec<Vec<f64>>], y: &[f64], h: &MultiHyper, output: usize, q: &[f64]) -> (f64, f64) {
    let kinv = inverse(&multi_gram(subsets, h)).expect("singular block covariance");
    let k: Vec<f64> = stacked(subsets)
        .iter()
        .map(|&(i, x)| se(q, x, &h.ls, h.kf[output][i]))
        .collect();
    let mean = dot(&k, &mat_vec(&kinv, y));
    let var = (h.kf[output][output] - dot(&k, &mat_vec(&kinv, &k))).max(0.0) + h.noise[output];
    (mean, var)
}

pub fn multi_nlml(subsets: &[Vec<Vec<f64>>], y: &[f64], h: &MultiHyper) -> f64 {
    let c = multi_gram(subsets, h);
    let kinv = inverse(&c).expect("singular block covariance");
    0.5 * dot(y, &mat_vec(&kinv, y)) + 0.5 * log_abs_det(&c) + 0.5 * y.len() as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Monte-Carlo estimate of `E[max(f_min − Y, 0)]`, `Y ~ N(mean, sigma²)`,
/// with its standard error.
pub fn mc_expected_improvement<R: Rng>(mean: f64, sigma: f64, f_min: f64, draws: usize, rng: &mut R) -> (f64, f64) {
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..draws {
        let e: f64 = StandardNormal.sample(rng);
        let v = (f_min - (mean + sigma * e)).max(0.0);
        s += v;
        s2 += v * v;
    }
    let n = draws as f64;
    let m = s / n;
    let var = (s2 / n - m * m).max(0.0) * n / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Draws `N(0, k + noise·I)` through a hand-rolled Cholesky factor.
pub fn sample_mvn<R: Rng>(k: &Mat, noise: f64, rng: &mut R) -> Vec<f64> {
    let n = k.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = k[i][j] + if i == j { noise + 1e-10 } else { 0.0 };
            for p in 0..j {
                s -= l[i][p] * l[j][p];
            }
            l[i][j] = if i == j { s.sqrt() } else { s / l[j][j] };
        }
    }
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    (0..n).map(|i| (0..=i).map(|j| l[i][j] * z[j]).sum()).collect()
}

/// Central finite differences of `f` at `x`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += step;
            b[i] -= step;
            (f(&a) - f(&b)) / (2.0 * step)
        })
        .collect()
}

/// Argmax of `f` on an evenly spaced grid of `n` points over `[lo, hi]`.
pub fn grid_argmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    (0..n)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            (x, f(x))
        })
        .fold((lo, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
}

/// Golden-section minimization on `[lo, hi]`, assumed unimodal there.
pub fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Global minimum of a 1-D function: dense grid, then golden section in
/// the bracket around the best grid point.
pub fn min_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let h = (hi - lo) / (n - 1) as f64;
    let (x0, _) = grid_argmax(|x| -f(x), lo, hi, n);
    golden_min(&f, (x0 - h).max(lo), (x0 + h).min(hi))
}

/// Minimum of a 2-D function: `n×n` grid, then coordinate-wise refinement.
pub fn min_2d(f: impl Fn(f64, f64) -> f64, b: [(f64, f64); 2], n: usize) -> ([f64; 2], f64) {
    let step = |k: usize| (b[k].1 - b[k].0) / (n - 1) as f64;
    let mut best = ([b[0].0, b[1].0], f64::INFINITY);
    for i in 0..n {
        let x = b[0].0 + step(0) * i as f64;
        for j in 0..n {
            let y = b[1].0 + step(1) * j as f64;
            let v = f(x, y);
            if v < best.1 {
                best = ([x, y], v);
            }
        }
    }
    let (x, v) = compass_min(|p| f(p[0], p[1]), &best.0, &[b[0], b[1]], step(0).max(step(1)));
    ([x[0], x[1]], v)
}

/// Compass (pattern) search in a box, halving the step until it drops
/// below 1e-13.
pub fn compass_min(f: impl Fn(&[f64]) -> f64, x0: &[f64], bounds: &[(f64, f64)], step: f64) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut v = f(&x);
    let mut s = step;
    while s > 1e-13 {
        let mut moved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut c = x.clone();
                c[i] = (c[i] + dir * s).clamp(bounds[i].0, bounds[i].1);
                let cv = f(&c);
                if cv < v {
                    x = c;
                    v = cv;
                    moved = true;
                }
            }
        }
        if !moved {
            s *= 0.5;
        }
    }
    (x, v)
}

/// Mean unique fraction of `n` draws with replacement from `n` items.
pub fn bootstrap_coverage<R: Rng>(n: usize, reps: usize, rng: &mut R) -> f64 {
    let mut total = 0usize;
    let mut seen = vec![false; n];
    for _ in 0..reps {
        seen.iter_mut().for_each(|s| *s = false);
        for _ in 0..n {
            seen[rng.random_range(0..n)] = true;
        }
        total += seen.iter().filter(|&&s| s).count();
    }
    total as f64 / (reps * n) as f64
}

/// Independent benchmark definitions, written from the textbook formulas.
pub mod functions {
    use std::f64::consts::PI;

    pub fn michalewicz_term(i: usize, x: f64) -> f64 {
        -x.sin() * ((i as f64) * x * x / PI).sin().powi(20)
    }

    pub fn michalewicz(x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(i, &v)| michalewicz_term(i + 1, v)).sum()
    }

    pub fn rastrigin(x: &[f64]) -> f64 {
        x.iter().map(|&v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0).sum()
    }

    pub fn ackley(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let r = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        let c = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
        20.0 + std::f64::consts::E - 20.0 * (-0.2 * r).exp() - c.exp()
    }

    pub fn hartman6(x: &[f64]) -> f64 {
        let alpha = [1.0, 1.2, 3.0, 3.2];
        let a = [
            [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
            [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
            [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
            [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
        ];
        let p = [
            [1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
            [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
            [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
            [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0],
        ];
        let mut s = 0.0;
        for i in 0..4 {
            let mut e = 0.0;
            for j in 0..6 {
                e += a[i][j] * (x[j] - p[i][j] * 1e-4).powi(2);
            }
            s += alpha[i] * (-e).exp();
        }
        -s
    }

    pub fn trid(x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, &v) in x.iter().enumerate() {
            s += (v - 1.0).powi(2);
            if i > 0 {
                s -= v * x[i - 1];
            }
        }
        s
    }

    pub fn branin(x: f64, y: f64) -> f64 {
        let b = 5.1 / (4.0 * PI * PI);
        let c = 5.0 / PI;
        let t = 1.0 / (8.0 * PI);
        (y - b * x * x + c * x - 6.0).powi(2) + 10.0 * (1.0 - t) * x.cos() + 10.0
    }

    pub fn forrester(x: f64) -> f64 {
        (6.0 * x - 2.0).powi(2) * (12.0 * x - 4.0).sin()
    }
}

/// Reference optima recomputed from scratch.
pub mod optima {
    use super::functions::*;
    use super::*;

    /// Michalewicz is a sum of one-dimensional terms, so its minimum over
    /// `[0, π]^d` is the sum of the per-coordinate minima.
    pub fn michalewicz(d: usize) -> (Vec<f64>, f64) {
        let per: Vec<(f64, f64)> = (1..=d)
            .map(|i| min_1d(|x| michalewicz_term(i, x), 0.0, PI, 1_000_001))
            .collect();
        (per.iter().map(|p| p.0).collect(), per.iter().map(|p| p.1).sum())
    }

    pub fn branin() -> ([f64; 2], f64) {
        min_2d(super::functions::branin, [(-5.0, 10.0), (0.0, 15.0)], 4096)
    }

    pub fn forrester() -> (f64, f64) {
        min_1d(super::functions::forrester, 0.0, 1.0, 1_000_001)
    }

    /// Compass refinement from the published minimizer.
    pub fn hartman6() -> (Vec<f64>, f64) {
        let x0 = [0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573];
        compass_min(super::functions::hartman6, &x0, &[(0.0, 1.0); 6], 1e-3)
    }

    use std::f64::consts::PI;
}
