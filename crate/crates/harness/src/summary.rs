//! Regret traces and cross-run summaries.

use serde::{Deserialize, Serialize};

/// Median and quartiles of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Median of a sorted slice; even lengths average the middle pair.
fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn median(values: &[f64]) -> f64 {
    quartiles(values).median
}

/// Tukey hinges: q1 and q3 are the medians of the lower and upper halves,
/// each including the overall median when the length is odd.
pub fn quartiles(values: &[f64]) -> Quartiles {
    assert!(!values.is_empty(), "quartiles of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let half = n.div_ceil(2);
    Quartiles {
        q1: median_sorted(&v[..half]),
        median: median_sorted(&v),
        q3: median_sorted(&v[n - half..]),
    }
}

/// Quartiles of regret after each function call, across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub runs: usize,
    /// Entry `k` summarizes regret after `k + 1` evaluations, over runs long
    /// enough to reach that call.
    pub by_call: Vec<Quartiles>,
    pub final_regret: Quartiles,
}

/// Aligns traces by call count. Shorter traces drop out of later columns.
pub fn summarize(traces: &[Vec<f64>]) -> RunSummary {
    assert!(!traces.is_empty(), "no traces to summarize");
    let len = traces.iter().map(Vec::len).max().unwrap_or(0);
    let by_call = (0..len)
        .map(|k| {
            let col: Vec<f64> = traces.iter().filter_map(|t| t.get(k).copied()).collect();
            quartiles(&col)
        })
        .collect();
    let finals: Vec<f64> = traces.iter().filter_map(|t| t.last().copied()).collect();
    RunSummary {
        runs: traces.len(),
        by_call,
        final_regret: quartiles(&finals),
    }
}
