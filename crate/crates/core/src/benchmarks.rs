//! Analytic test functions with their standard boxes and reference optima.

use crate::error::Error;
use crate::problem::Problem;
use crate::scalar::Scalar;

/// Minimum of the 5-D Michalewicz function (m = 10) on `[0, π]^5`. The
/// function is a sum of per-coordinate terms, so this is the sum of five
/// 1-D minima (dense grid plus golden-section refinement; see `clbo oracle`).
pub const MICHALEWICZ5_OPTIMUM: f64 = -4.687_658_179_088_148;
/// Same procedure, first two coordinates.
pub const MICHALEWICZ2_OPTIMUM: f64 = -1.801_303_410_098_551;
/// Hartman-6 minimum, compass-refined from the canonical minimizer.
pub const HARTMAN6_OPTIMUM: f64 = -3.322_368_011_415_514_3;
pub const HARTMAN6_MINIMIZER: [f64; 6] = [0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573];
/// 4096² grid plus local refinement.
pub const BRANIN_OPTIMUM: f64 = 0.397_887_357_729_738_16;
/// Forrester function `(6x−2)² sin(12x−4)` minimum on `[0, 1]`.
pub const FORRESTER_OPTIMUM: f64 = -6.020_740_055_767_082_5;

const MICHALEWICZ_STEEPNESS: i32 = 10;

pub fn michalewicz<T: Scalar>(x: &[T]) -> T {
    let pi = T::PI();
    -x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let k = T::from_usize_lossy(i + 1);
            xi.sin() * (k * xi * xi / pi).sin().powi(2 * MICHALEWICZ_STEEPNESS)
        })
        .sum::<T>()
}

pub fn rastrigin<T: Scalar>(x: &[T]) -> T {
    let ten = T::lit(10.0);
    ten * T::from_usize_lossy(x.len())
        + x.iter()
            .map(|&xi| xi * xi - ten * (T::TAU() * xi).cos())
            .sum::<T>()
}

pub fn ackley<T: Scalar>(x: &[T]) -> T {
    let (a, b) = (T::lit(20.0), T::lit(0.2));
    let n = T::from_usize_lossy(x.len());
    let sq = x.iter().map(|&v| v * v).sum::<T>() / n;
    let cs = x.iter().map(|&v| (T::TAU() * v).cos()).sum::<T>() / n;
    let v = -a * (-b * sq.sqrt()).exp() - cs.exp() + a + T::E();
    // rounding can leave a tiny negative residue at the origin
    v.max(T::zero())
}

const HARTMAN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMAN_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMAN_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

pub fn hartman6<T: Scalar>(x: &[T]) -> T {
    -(0..4)
        .map(|i| {
            let inner: T = (0..6)
                .map(|j| {
                    let d = x[j] - T::lit(HARTMAN_P[i][j]);
                    T::lit(HARTMAN_A[i][j]) * d * d
                })
                .sum();
            T::lit(HARTMAN_ALPHA[i]) * (-inner).exp()
        })
        .sum::<T>()
}

pub fn trid<T: Scalar>(x: &[T]) -> T {
    let one = T::one();
    let a: T = x.iter().map(|&v| (v - one) * (v - one)).sum();
    let b: T = x.windows(2).map(|w| w[0] * w[1]).sum();
    a - b
}

/// `−d(d+4)(d−1)/6`, attained at `x_i = i(d+1−i)`.
pub fn trid_optimum(d: usize) -> f64 {
    let d = d as f64;
    -d * (d + 4.0) * (d - 1.0) / 6.0
}

pub fn trid_minimizer(d: usize) -> Vec<f64> {
    (1..=d).map(|i| (i * (d + 1 - i)) as f64).collect()
}

pub fn branin<T: Scalar>(x: &[T]) -> T {
    let pi = T::PI();
    let b = T::lit(5.1) / (T::lit(4.0) * pi * pi);
    let c = T::lit(5.0) / pi;
    let t = T::one() / (T::lit(8.0) * pi);
    let u = x[1] - b * x[0] * x[0] + c * x[0] - T::lit(6.0);
    u * u + T::lit(10.0) * (T::one() - t) * x[0].cos() + T::lit(10.0)
}

pub fn forrester<T: Scalar>(x: &[T]) -> T {
    let a = T::lit(6.0) * x[0] - T::lit(2.0);
    a * a * (T::lit(12.0) * x[0] - T::lit(4.0)).sin()
}

/// `(x − 0.3)²`, a smoke-test objective with minimum 0.
pub fn quadratic<T: Scalar>(x: &[T]) -> T {
    x.iter().map(|&v| (v - T::lit(0.3)) * (v - T::lit(0.3))).sum()
}

#[derive(Debug, Clone)]
pub struct BenchmarkProblem<T: Scalar> {
    pub name: String,
    pub bounds: Vec<(T, T)>,
    pub function: fn(&[T]) -> T,
    pub known_optimum: Option<T>,
    /// Probability that an evaluation fails; decided by a hash of the point
    /// and `failure_seed`, so a given point always fails or always succeeds.
    pub failure_rate: f64,
    pub failure_seed: u64,
}

impl<T: Scalar> BenchmarkProblem<T> {
    fn new(name: &str, bounds: Vec<(f64, f64)>, function: fn(&[T]) -> T, known_optimum: Option<f64>) -> Self {
        Self {
            name: name.to_string(),
            bounds: bounds.into_iter().map(|(a, b)| (T::lit(a), T::lit(b))).collect(),
            function,
            known_optimum: known_optimum.map(T::lit),
            failure_rate: 0.0,
            failure_seed: 0,
        }
    }

    pub fn with_failures(mut self, rate: f64, seed: u64) -> Self {
        self.failure_rate = rate.clamp(0.0, 1.0);
        self.failure_seed = seed;
        self
    }

    fn injected_failure(&self, x: &[T]) -> bool {
        if self.failure_rate <= 0.0 {
            return false;
        }
        let mut h = self.failure_seed ^ 0x9e37_79b9_7f4a_7c15;
        for v in x {
            h = splitmix(h ^ v.as_f64().to_bits());
        }
        (h >> 11) as f64 / (1u64 << 53) as f64 <= self.failure_rate
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl<T: Scalar> Problem<T> for BenchmarkProblem<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn bounds(&self) -> &[(T, T)] {
        &self.bounds
    }

    fn evaluate(&self, x: &[T]) -> Result<T, Error> {
        if x.len() != self.bounds.len() {
            return Err(Error::DimensionMismatch {
                expected: self.bounds.len(),
                found: x.len(),
            });
        }
        if self.injected_failure(x) {
            return Err(Error::Evaluation(format!("{}: injected failure", self.name)));
        }
        let v = (self.function)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(format!("{} returned {v}", self.name)))
        }
    }

    fn known_optimum(&self) -> Option<T> {
        self.known_optimum
    }
}

/// Registry names accepted by [`benchmark`].
pub const BENCHMARK_NAMES: [&str; 9] = [
    "michalewicz5",
    "rastrigin5",
    "ackley5",
    "hartman6",
    "trid10",
    "branin2",
    "michalewicz2",
    "forrester1",
    "quadratic1",
];

pub fn benchmark<T: Scalar>(name: &str) -> Option<BenchmarkProblem<T>> {
    use std::f64::consts::PI;
    let p = match name {
        "michalewicz5" => BenchmarkProblem::new(name, vec![(0.0, PI); 5], michalewicz, Some(MICHALEWICZ5_OPTIMUM)),
        "michalewicz2" => BenchmarkProblem::new(name, vec![(0.0, PI); 2], michalewicz, Some(MICHALEWICZ2_OPTIMUM)),
        "rastrigin5" => BenchmarkProblem::new(name, vec![(-5.12, 5.12); 5], rastrigin, Some(0.0)),
        "ackley5" => BenchmarkProblem::new(name, vec![(-2.0, 2.0); 5], ackley, Some(0.0)),
        "hartman6" => BenchmarkProblem::new(name, vec![(0.0, 1.0); 6], hartman6, Some(HARTMAN6_OPTIMUM)),
        "trid10" => BenchmarkProblem::new(name, vec![(-100.0, 100.0); 10], trid, Some(trid_optimum(10))),
        "branin2" => BenchmarkProblem::new(name, vec![(-5.0, 10.0), (0.0, 15.0)], branin, Some(BRANIN_OPTIMUM)),
        "forrester1" => BenchmarkProblem::new(name, vec![(0.0, 1.0)], forrester, Some(FORRESTER_OPTIMUM)),
        "quadratic1" => BenchmarkProblem::new(name, vec![(0.0, 1.0)], quadratic, Some(0.0)),
        _ => return None,
    };
    Some(p)
}

/// Fast problems for CI-scale studies: 2-D Branin, 2-D Michalewicz and the
/// 1-D multimodal Forrester function.
pub fn desk_scale_suite<T: Scalar>() -> Vec<BenchmarkProblem<T>> {
    ["branin2", "michalewicz2", "forrester1"]
        .iter()
        .map(|n| benchmark(n).expect("registered"))
        .collect()
}
