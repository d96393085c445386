//! Co-learning Bayesian optimization.
//!
//! Gaussian-process surrogates (single-output and multi-output over
//! bootstrap subsets), expected-improvement acquisition, the co-learning
//! batch loop, baseline optimizers and benchmark problems. Everything is
//! generic over the floating-point type; `f64` aliases are re-exported at
//! the crate root.

pub mod acquisition;
pub mod baselines;
pub mod benchmarks;
pub mod design;
pub mod engine;
pub mod error;
pub mod gp;
pub mod linalg;
pub mod local;
pub mod mfgp;
pub mod problem;
pub mod record;
pub mod scalar;

pub use acquisition::{expected_improvement, influence_function, pseudo_ei, AcquisitionConfig, Incumbent, Regime};
pub use baselines::{run_optimizer, OptimizerKind, RunConfig};
pub use benchmarks::{benchmark, BenchmarkProblem, BENCHMARK_NAMES};
pub use engine::{ClboConfig, ClboState, SubsetModelKind};
pub use error::{Error, Result};
pub use gp::{Dataset, FitConfig, OutputTransform, Posterior, SogpModel, SogpParams};
pub use mfgp::{MfgpModel, MfgpParams, SubsetCollection};
pub use problem::{FnProblem, Problem};
pub use record::{IterationRecord, OptimizationResult, Provenance, QueryRecord};
pub use scalar::Scalar;

pub type Dataset64 = Dataset<f64>;
pub type SogpParams64 = SogpParams<f64>;
pub type SogpModel64 = SogpModel<f64>;
pub type MfgpParams64 = MfgpParams<f64>;
pub type MfgpModel64 = MfgpModel<f64>;
pub type OptimizationResult64 = OptimizationResult<f64>;
pub type BenchmarkProblem64 = BenchmarkProblem<f64>;

pub type Dataset32 = Dataset<f32>;
pub type SogpModel32 = SogpModel<f32>;
pub type MfgpModel32 = MfgpModel<f32>;
