//! Expected improvement, the pseudo-EI influence penalty, z-regime labels
//! and bounded multi-start acquisition maximization.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::latin_hypercube;
use crate::error::{Error, Result};
use crate::gp::Posterior;
use crate::local::{nelder_mead_bounded, NelderMeadOptions};
use crate::scalar::Scalar;

/// Below this predictive standard deviation EI falls back to the
/// deterministic improvement `max(f_min − mean, 0)`.
pub const SIGMA_FLOOR: f64 = 1e-12;
/// |z| at or beyond which a query is labelled with an EI failure regime.
pub const REGIME_THRESHOLD: f64 = 3.0;

/// Best observed objective and where it was observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Incumbent<T: Scalar> {
    pub f_min: T,
    pub x_min: Vec<T>,
}

/// `(f_min − μ) Φ(z) + σ φ(z)` with `z = (f_min − μ)/σ`.
pub fn expected_improvement<T: Scalar>(mean: T, variance: T, f_min: T) -> T {
    let sigma = variance.max(T::zero()).sqrt();
    let improvement = f_min - mean;
    if sigma < T::lit(SIGMA_FLOOR) {
        return improvement.max(T::zero());
    }
    let z = improvement / sigma;
    (improvement * z.norm_cdf() + sigma * z.norm_pdf()).max(T::zero())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// z ≥ 3: EI is driven by the mean term.
    OverExploitation,
    /// z ≤ −3: EI is driven by the variance term.
    OverExploration,
    Balanced,
}

impl Regime {
    pub fn of<T: Scalar>(z: T) -> Self {
        let t = T::lit(REGIME_THRESHOLD);
        if z >= t {
            Regime::OverExploitation
        } else if z <= -t {
            Regime::OverExploration
        } else {
            Regime::Balanced
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::OverExploitation => "over-exploitation",
            Regime::OverExploration => "over-exploration",
            Regime::Balanced => "balanced",
        }
    }
}

/// Standardized improvement `z = (f_min − mean)/σ`.
pub fn ei_z<T: Scalar>(mean: T, variance: T, f_min: T) -> Result<T> {
    if !(variance > T::zero()) {
        return Err(Error::UndefinedZ);
    }
    Ok((f_min - mean) / variance.sqrt())
}

/// `1 − exp(−Σ_h (x_h − x*_h)² / (2 l_h²))`: zero at the anchor, tending to
/// one far from it.
pub fn influence_function<T: Scalar>(x: &[T], x_star: &[T], lengthscales: &[T]) -> T {
    debug_assert_eq!(x.len(), x_star.len());
    debug_assert_eq!(x.len(), lengthscales.len());
    let s: T = x
        .iter()
        .zip(x_star)
        .zip(lengthscales)
        .map(|((&a, &b), &l)| (a - b) * (a - b) / (T::lit(2.0) * l * l))
        .sum();
    // 1 − e^{−s} without cancellation for small s
    -(-s).exp_m1()
}

pub fn pseudo_ei<T: Scalar>(posterior: &Posterior<T>, f_min: T, x: &[T], x_star: &[T], lengthscales: &[T]) -> T {
    expected_improvement(posterior.mean, posterior.variance, f_min) * influence_function(x, x_star, lengthscales)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    /// Latin-hypercube start count; `None` means `20·d` capped at 200.
    pub starts: Option<usize>,
    /// How many of the best starts get local refinement.
    pub refine: usize,
    /// Evaluation cap per local refinement.
    pub max_evals: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            starts: None,
            refine: 5,
            max_evals: 300,
        }
    }
}

impl AcquisitionConfig {
    pub fn start_count(&self, dim: usize) -> usize {
        self.starts.unwrap_or((20 * dim).min(200)).max(1)
    }
}

/// Maximizes `acquisition` over the box `bounds`. Candidates are a Latin
/// hypercube scaled to the box plus any `extra_starts` (clamped); the best
/// `config.refine` of them are polished with bounded Nelder-Mead. Ties keep
/// the lowest start index.
pub fn maximize_acquisition<T: Scalar, R: Rng + ?Sized>(
    acquisition: impl Fn(&[T]) -> T,
    bounds: &[(T, T)],
    config: &AcquisitionConfig,
    extra_starts: &[Vec<T>],
    rng: &mut R,
) -> (Vec<T>, T) {
    let dim = bounds.len();
    let lower: Vec<T> = bounds.iter().map(|b| b.0).collect();
    let upper: Vec<T> = bounds.iter().map(|b| b.1).collect();
    let value_of = |x: &[T]| {
        let v = acquisition(x);
        if v.is_nan() {
            T::neg_infinity()
        } else {
            v
        }
    };

    let mut starts: Vec<Vec<T>> = latin_hypercube::<T, _>(config.start_count(dim), dim, rng)
        .into_iter()
        .map(|u| {
            u.iter()
                .zip(bounds)
                .map(|(&t, &(lo, hi))| lo + t * (hi - lo))
                .collect()
        })
        .collect();
    for s in extra_starts {
        if s.len() == dim {
            starts.push(
                s.iter()
                    .zip(bounds)
                    .map(|(&v, &(lo, hi))| v.max(lo).min(hi))
                    .collect(),
            );
        }
    }

    let mut scored: Vec<(usize, T)> = starts.iter().enumerate().map(|(i, s)| (i, value_of(s))).collect();
    // stable sort keeps lower start indices first among equal values
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));

    let (mut best_x, mut best_v) = (starts[scored[0].0].clone(), scored[0].1);
    let opts = NelderMeadOptions {
        max_evals: config.max_evals,
        ..NelderMeadOptions::default()
    };
    for &(i, _) in scored.iter().take(config.refine) {
        let r = nelder_mead_bounded(|x: &[T]| -value_of(x), &starts[i], &lower, &upper, opts);
        let v = -r.value;
        if v > best_v {
            best_v = v;
            best_x = r.x;
        }
    }
    (best_x, best_v)
}

/// The unit hypercube `[0,1]^dim`.
pub fn unit_box<T: Scalar>(dim: usize) -> Vec<(T, T)> {
    vec![(T::zero(), T::one()); dim]
}
