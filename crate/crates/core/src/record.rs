//! Per-query and per-iteration records emitted by every optimizer, and the
//! run result built from them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::acquisition::Regime;
use crate::scalar::Scalar;

/// Which model (or stage) proposed a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    /// Initial space-filling design.
    Initial,
    /// Full-data single-output GP.
    Sogp,
    /// Subset model output `i` (MFGP output or MSBO subset GP).
    Subset(usize),
    /// `k`-th point of a single-model batch (EGO, constant liar, PEI batch).
    Batch(usize),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Initial => write!(f, "init"),
            Provenance::Sogp => write!(f, "sogp"),
            Provenance::Subset(i) => write!(f, "subset:{i}"),
            Provenance::Batch(k) => write!(f, "batch:{k}"),
        }
    }
}

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct QueryRecord<T: Scalar> {
    /// Point in normalized coordinates.
    pub x: Vec<T>,
    pub x_raw: Vec<T>,
    pub value: T,
    pub provenance: Provenance,
    /// `(f_min − μ)/σ` of the proposing model at `x`, when σ > 0.
    pub z: Option<T>,
    pub regime: Option<Regime>,
    pub pei_invoked: bool,
    /// The proposed point failed to evaluate and a random point was used.
    pub substituted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct IterationRecord<T: Scalar> {
    /// 1-based optimization cycle.
    pub iteration: usize,
    pub queries: Vec<QueryRecord<T>>,
    /// Incumbent after the exchange step.
    pub f_min: T,
    pub n_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OptimizationResult<T: Scalar> {
    pub problem: String,
    pub x_best: Vec<T>,
    pub f_best: T,
    pub known_optimum: Option<T>,
    /// Initial design evaluations, in order.
    pub initial: Vec<QueryRecord<T>>,
    pub history: Vec<IterationRecord<T>>,
    pub n_init: usize,
    pub n_total: usize,
    pub t_total: usize,
    /// Evaluations replaced by a random point after a failure.
    pub failures: usize,
}

impl<T: Scalar> OptimizationResult<T> {
    /// Every evaluation in call order.
    pub fn evaluations(&self) -> impl Iterator<Item = &QueryRecord<T>> {
        self.initial.iter().chain(self.history.iter().flat_map(|r| r.queries.iter()))
    }

    /// Best value after each function call.
    pub fn best_by_call(&self) -> Vec<T> {
        let mut best = T::infinity();
        self.evaluations()
            .map(|q| {
                if q.value < best {
                    best = q.value;
                }
                best
            })
            .collect()
    }

    /// `f_min − known optimum` after each function call.
    pub fn regret_by_call(&self) -> Option<Vec<T>> {
        let opt = self.known_optimum?;
        Some(self.best_by_call().into_iter().map(|b| b - opt).collect())
    }

    /// Regret after each iteration (index 0 is after the initial design).
    pub fn regret_by_iteration(&self) -> Option<Vec<T>> {
        let opt = self.known_optimum?;
        let init_best = self.initial.iter().map(|q| q.value).fold(T::infinity(), T::min);
        Some(
            std::iter::once(init_best - opt)
                .chain(self.history.iter().map(|r| r.f_min - opt))
                .collect(),
        )
    }

    pub fn final_regret(&self) -> Option<T> {
        self.known_optimum.map(|o| self.f_best - o)
    }

    pub fn pei_invocations(&self) -> usize {
        self.evaluations().filter(|q| q.pei_invoked).count()
    }
}
