//! Ensemble ambiguity decomposition and run invariant checks.

use clbo_core::{OptimizationResult, Provenance};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Squared-error decomposition of a weighted ensemble at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ambiguity {
    /// `(ŷ − y)²` for the combined prediction `ŷ = Σ wᵢ ŷᵢ`.
    pub ensemble: f64,
    /// `Σ wᵢ (ŷᵢ − y)²`.
    pub individual: f64,
    /// `Σ wᵢ (ŷᵢ − ŷ)²`.
    pub diversity: f64,
}

impl Ambiguity {
    fn zero() -> Self {
        Self {
            ensemble: 0.0,
            individual: 0.0,
            diversity: 0.0,
        }
    }
}

const WEIGHT_TOL: f64 = 1e-9;

/// Returns `(E, E_ind, Div)`; `E = E_ind − Div` holds up to rounding.
pub fn ambiguity_decomposition(predictions: &[f64], weights: &[f64], truth: f64) -> Result<Ambiguity> {
    if predictions.is_empty() || predictions.len() != weights.len() {
        return Err(HarnessError::Runtime(format!(
            "ambiguity: {} predictions but {} weights",
            predictions.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(HarnessError::Runtime("ambiguity: weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(HarnessError::Runtime(format!("ambiguity: weights sum to {total}, not 1")));
    }
    let mean: f64 = predictions.iter().zip(weights).map(|(p, w)| w * p).sum();
    let individual = predictions.iter().zip(weights).map(|(p, w)| w * (p - truth).powi(2)).sum();
    let diversity = predictions.iter().zip(weights).map(|(p, w)| w * (p - mean).powi(2)).sum();
    Ok(Ambiguity {
        ensemble: (mean - truth).powi(2),
        individual,
        diversity,
    })
}

/// Average decomposition over many points with equal weights.
pub fn mean_ambiguity(predictions: &[Vec<f64>], truths: &[f64]) -> Result<Ambiguity> {
    let mut acc = Ambiguity::zero();
    if truths.is_empty() {
        return Ok(acc);
    }
    for (p, &y) in predictions.iter().zip(truths) {
        let w = vec![1.0 / p.len() as f64; p.len()];
        let a = ambiguity_decomposition(p, &w, y)?;
        acc.ensemble += a.ensemble;
        acc.individual += a.individual;
        acc.diversity += a.diversity;
    }
    let n = truths.len() as f64;
    Ok(Ambiguity {
        ensemble: acc.ensemble / n,
        individual: acc.individual / n,
        diversity: acc.diversity / n,
    })
}

/// Checks the recorded history of a finished run against the loop's
/// contracts: monotone incumbent, budget and cycle bounds, exact batch sizes
/// and provenance bookkeeping. Returns a description of each violation.
pub fn invariant_violations(
    r: &OptimizationResult<f64>,
    batch: usize,
    n_budget: usize,
    t_max: usize,
) -> Vec<String> {
    let mut out = Vec::new();
    let mut prev = r.initial.iter().map(|q| q.value).fold(f64::INFINITY, f64::min);
    let mut n = r.initial.len();
    if n != r.n_init {
        out.push(format!("initial design has {n} points, expected {}", r.n_init));
    }
    if r.initial.iter().any(|q| q.provenance != Provenance::Initial) {
        out.push("initial design point with non-initial provenance".into());
    }
    for h in &r.history {
        if h.queries.len() != batch {
            out.push(format!("iteration {} evaluated {} points, batch is {batch}", h.iteration, h.queries.len()));
        }
        if h.queries.iter().any(|q| q.provenance == Provenance::Initial) {
            out.push(format!("iteration {} has an initial-design query", h.iteration));
        }
        let best_here = h.queries.iter().map(|q| q.value).fold(prev, f64::min);
        if h.f_min > prev {
            out.push(format!("incumbent rose at iteration {}: {} > {prev}", h.iteration, h.f_min));
        }
        if h.f_min != best_here {
            out.push(format!("iteration {} incumbent {} is not the best value seen {best_here}", h.iteration, h.f_min));
        }
        prev = h.f_min;
        n += h.queries.len();
        if h.n_total != n {
            out.push(format!("iteration {} reports n_total {} but {n} evaluations were recorded", h.iteration, h.n_total));
        }
        for q in &h.queries {
            if q.x.iter().any(|v| !(0.0..=1.0).contains(v)) {
                out.push(format!("iteration {} queried outside the unit box", h.iteration));
            }
        }
    }
    if r.n_total != n {
        out.push(format!("n_total {} disagrees with {n} recorded evaluations", r.n_total));
    }
    if r.t_total != r.history.len() {
        out.push(format!("t_total {} but {} iterations recorded", r.t_total, r.history.len()));
    }
    if r.t_total > t_max {
        out.push(format!("{} iterations exceed t_max {t_max}", r.t_total));
    }
    if r.n_total >= n_budget + batch && r.n_total > r.n_init {
        out.push(format!("n_total {} overshoots budget {n_budget} by a full batch", r.n_total));
    }
    let stopped_early = r.n_total < n_budget && r.t_total < t_max;
    if stopped_early {
        out.push(format!("stopped at n_total {} < {n_budget} and t {} < {t_max}", r.n_total, r.t_total));
    }
    if r.f_best != prev {
        out.push(format!("f_best {} differs from final incumbent {prev}", r.f_best));
    }
    out
}
