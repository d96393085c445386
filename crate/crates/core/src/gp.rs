//! Single-output Gaussian-process regression with a squared-exponential
//! kernel over the unit hypercube.
//!
//! Inputs are expected in normalized coordinates and outputs are stored
//! standardized; the prior mean is zero in standardized units. Hyperparameters
//! are fitted by minimizing the negative log marginal likelihood (NLML) in
//! log space with a multi-start projected BFGS that uses analytic gradients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::local::{projected_bfgs, BfgsOptions};
use crate::scalar::Scalar;

/// Affine map between raw objective values and standardized outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OutputTransform<T: Scalar> {
    pub mean: T,
    pub scale: T,
}

impl<T: Scalar> OutputTransform<T> {
    pub fn identity() -> Self {
        Self {
            mean: T::zero(),
            scale: T::one(),
        }
    }

    /// Sample mean and standard deviation; a zero spread maps to scale one.
    pub fn fit(raw: &[T]) -> Self {
        if raw.is_empty() {
            return Self::identity();
        }
        let n = T::from_usize_lossy(raw.len());
        let mean = raw.iter().copied().sum::<T>() / n;
        let var = raw.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
        let sd = var.sqrt();
        let scale = if sd > T::epsilon() * (T::one() + mean.abs()) && sd.is_finite() {
            sd
        } else {
            T::one()
        };
        Self { mean, scale }
    }

    #[inline]
    pub fn standardize(&self, raw: T) -> T {
        (raw - self.mean) / self.scale
    }

    #[inline]
    pub fn destandardize(&self, z: T) -> T {
        z * self.scale + self.mean
    }

    #[inline]
    pub fn destandardize_variance(&self, v: T) -> T {
        v * self.scale * self.scale
    }
}

/// Training data: normalized inputs with standardized outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Dataset<T: Scalar> {
    inputs: Vec<Vec<T>>,
    outputs: Vec<T>,
    transform: OutputTransform<T>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from normalized inputs and raw outputs, fitting the
    /// standardizing transform from the outputs.
    pub fn new(inputs: Vec<Vec<T>>, raw_outputs: &[T]) -> Result<Self> {
        let transform = OutputTransform::fit(raw_outputs);
        Self::with_transform(inputs, raw_outputs, transform)
    }

    /// Builds a dataset whose outputs are standardized with a given transform.
    pub fn with_transform(inputs: Vec<Vec<T>>, raw_outputs: &[T], transform: OutputTransform<T>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::InvalidInput("dataset needs at least one row".into()));
        }
        if inputs.len() != raw_outputs.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                found: raw_outputs.len(),
            });
        }
        let dim = inputs[0].len();
        for row in &inputs {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
                return Err(Error::InvalidInput(format!(
                    "input coordinate outside the unit hypercube: {row:?}"
                )));
            }
        }
        if raw_outputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite output".into()));
        }
        let outputs = raw_outputs.iter().map(|&y| transform.standardize(y)).collect();
        Ok(Self {
            inputs,
            outputs,
            transform,
        })
    }

    /// Rows whose outputs are already standardized with `transform`.
    pub(crate) fn from_standardized(inputs: Vec<Vec<T>>, outputs: Vec<T>, transform: OutputTransform<T>) -> Self {
        Self {
            inputs,
            outputs,
            transform,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn inputs(&self) -> &[Vec<T>] {
        &self.inputs
    }

    /// Standardized outputs.
    pub fn outputs(&self) -> &[T] {
        &self.outputs
    }

    pub fn raw_output(&self, i: usize) -> T {
        self.transform.destandardize(self.outputs[i])
    }

    pub fn transform(&self) -> OutputTransform<T> {
        self.transform
    }

    /// Drops rows whose inputs repeat an earlier row exactly (keeps the first
    /// occurrence). The transform is left untouched.
    pub fn deduplicated(&self) -> Self {
        let keep = unique_rows(&self.inputs);
        Self {
            inputs: keep.iter().map(|&i| self.inputs[i].clone()).collect(),
            outputs: keep.iter().map(|&i| self.outputs[i]).collect(),
            transform: self.transform,
        }
    }
}

/// Indices of the first occurrence of every distinct row.
pub(crate) fn unique_rows<T: Scalar>(rows: &[Vec<T>]) -> Vec<usize> {
    let mut keep: Vec<usize> = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if !keep.iter().any(|&k| rows[k] == *r) {
            keep.push(i);
        }
    }
    keep
}

/// Squared-exponential kernel hyperparameters. `lengthscales` holds the
/// characteristic lengths `l_h`; the kernel divides squared distances by
/// `l_h²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SogpParams<T: Scalar> {
    pub lengthscales: Vec<T>,
    pub signal_variance: T,
    pub noise_variance: T,
}

impl<T: Scalar> SogpParams<T> {
    pub fn new(lengthscales: Vec<T>, signal_variance: T, noise_variance: T) -> Result<Self> {
        let p = Self {
            lengthscales,
            signal_variance,
            noise_variance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn isotropic(dim: usize, lengthscale: T, signal_variance: T, noise_variance: T) -> Self {
        Self {
            lengthscales: vec![lengthscale; dim],
            signal_variance,
            noise_variance,
        }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.iter().any(|&l| !(l > T::zero()) || !l.is_finite()) {
            return Err(Error::InvalidInput("lengthscales must be positive".into()));
        }
        if !(self.signal_variance > T::zero()) {
            return Err(Error::InvalidInput("signal variance must be positive".into()));
        }
        if !(self.noise_variance >= T::zero()) {
            return Err(Error::InvalidInput("noise variance must be non-negative".into()));
        }
        Ok(())
    }

    /// `[ln l_1 .. ln l_d, ln σ_f², ln σ_n²]`
    pub fn to_log_vec(&self) -> Vec<T> {
        let mut v: Vec<T> = self.lengthscales.iter().map(|l| l.ln()).collect();
        v.push(self.signal_variance.ln());
        v.push(self.noise_variance.max(T::min_positive_value()).ln());
        v
    }

    pub fn from_log_vec(v: &[T]) -> Self {
        let d = v.len() - 2;
        Self {
            lengthscales: v[..d].iter().map(|x| x.exp()).collect(),
            signal_variance: v[d].exp(),
            noise_variance: v[d + 1].exp(),
        }
    }

    fn inv_sq_lengthscales(&self) -> Vec<T> {
        self.lengthscales.iter().map(|&l| T::one() / (l * l)).collect()
    }
}

/// `exp(-½ Σ_h (a_h − b_h)² · inv_l2_h)`, the unit-variance SE correlation.
#[inline]
pub(crate) fn se_unit<T: Scalar>(a: &[T], b: &[T], inv_l2: &[T]) -> T {
    let mut s = T::zero();
    for h in 0..a.len() {
        let d = a[h] - b[h];
        s += d * d * inv_l2[h];
    }
    (-T::lit(0.5) * s).exp()
}

/// Squared-exponential covariance `σ_f² exp(−½ Σ_h (x_h − x2_h)² / l_h²)`.
pub fn se_kernel<T: Scalar>(x: &[T], x2: &[T], params: &SogpParams<T>) -> Result<T> {
    check_dim(params.dim(), x.len())?;
    check_dim(params.dim(), x2.len())?;
    Ok(params.signal_variance * se_unit(x, x2, &params.inv_sq_lengthscales()))
}

/// Gram matrix `K[i][j] = k(x_i, x_j)`; each off-diagonal pair is computed
/// once and mirrored.
pub fn build_gram<T: Scalar>(inputs: &[Vec<T>], params: &SogpParams<T>) -> Result<Matrix<T>> {
    for row in inputs {
        check_dim(params.dim(), row.len())?;
    }
    let inv_l2 = params.inv_sq_lengthscales();
    let n = inputs.len();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = params.signal_variance;
        for j in 0..i {
            let v = params.signal_variance * se_unit(&inputs[i], &inputs[j], &inv_l2);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn ill_conditioned<T: Scalar>(params: &SogpParams<T>) -> Error {
    Error::IllConditioned {
        jitter: crate::linalg::JITTER_MAX,
        params: params.to_log_vec().iter().map(|v| v.exp().as_f64()).collect(),
    }
}

/// `½ yᵀ C⁻¹ y + ½ log|C| + (n/2) log 2π` with `C = K + σ_n² I` (+ jitter).
pub fn sogp_nlml<T: Scalar>(data: &Dataset<T>, params: &SogpParams<T>) -> Result<T> {
    let mut c = build_gram(data.inputs(), params)?;
    c.add_diagonal(params.noise_variance);
    let (chol, _) = Cholesky::with_jitter(&c).map_err(|_| ill_conditioned(params))?;
    Ok(nlml_from_factor(&chol, data.outputs()))
}

pub(crate) fn nlml_from_factor<T: Scalar>(chol: &Cholesky<T>, y: &[T]) -> T {
    let half = T::lit(0.5);
    let v = chol.solve_lower(y);
    let quad: T = v.iter().map(|&a| a * a).sum();
    let n = T::from_usize_lossy(y.len());
    half * quad + half * chol.log_det() + half * n * T::TAU().ln()
}

/// NLML and its gradient with respect to the log-parameter vector
/// `[ln l_h.., ln σ_f², ln σ_n²]`.
pub fn sogp_nlml_grad<T: Scalar>(data: &Dataset<T>, params: &SogpParams<T>) -> Result<(T, Vec<T>)> {
    let d = params.dim();
    let x = data.inputs();
    let n = x.len();
    let k = build_gram(x, params)?;
    let mut c = k.clone();
    c.add_diagonal(params.noise_variance);
    let (chol, _) = Cholesky::with_jitter(&c).map_err(|_| ill_conditioned(params))?;
    let value = nlml_from_factor(&chol, data.outputs());

    // W = C⁻¹ − α αᵀ ; ∂NLML/∂θ = ½ tr(W ∂C/∂θ)
    let alpha = chol.solve(data.outputs());
    let mut w = chol.inverse();
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] -= alpha[i] * alpha[j];
        }
    }
    let half = T::lit(0.5);
    let inv_l2 = params.inv_sq_lengthscales();
    let mut grad = vec![T::zero(); d + 2];
    let mut g_signal = T::zero();
    for i in 0..n {
        g_signal += w[(i, i)] * k[(i, i)];
        for j in 0..i {
            let wk = w[(i, j)] * k[(i, j)];
            g_signal += T::lit(2.0) * wk;
            for h in 0..d {
                let diff = x[i][h] - x[j][h];
                grad[h] += T::lit(2.0) * wk * diff * diff * inv_l2[h];
            }
        }
    }
    for g in grad.iter_mut().take(d) {
        *g *= half;
    }
    grad[d] = half * g_signal;
    let trace_w: T = (0..n).map(|i| w[(i, i)]).sum();
    grad[d + 1] = half * params.noise_variance * trace_w;
    Ok((value, grad))
}

/// Hyperparameter search settings shared by single- and multi-output fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Multi-start count for a cold fit.
    pub starts: usize,
    /// Start count when a warm-start parameter set is supplied (the warm
    /// start is one of them).
    pub warm_starts: usize,
    pub max_iters: usize,
    /// When false the noise variance is pinned to `noise_floor`.
    pub learn_noise: bool,
    pub noise_floor: f64,
    pub noise_max: f64,
    pub lengthscale_bounds: (f64, f64),
    pub signal_bounds: (f64, f64),
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            starts: 10,
            warm_starts: 3,
            max_iters: 100,
            learn_noise: true,
            noise_floor: 1e-8,
            noise_max: 1.0,
            lengthscale_bounds: (1e-3, 10.0),
            signal_bounds: (1e-4, 1e2),
        }
    }
}

impl FitConfig {
    pub(crate) fn noise_log_bounds(&self) -> (f64, f64) {
        let lo = self.noise_floor.ln();
        if self.learn_noise {
            (lo, self.noise_max.max(self.noise_floor).ln())
        } else {
            (lo, lo)
        }
    }

    /// Log-space box for `[ln l (d), ln σ_f², ln σ_n²]`.
    pub(crate) fn sogp_log_bounds(&self, d: usize) -> (Vec<f64>, Vec<f64>) {
        let (nl, nu) = self.noise_log_bounds();
        let mut lo = vec![self.lengthscale_bounds.0.ln(); d];
        let mut hi = vec![self.lengthscale_bounds.1.ln(); d];
        lo.push(self.signal_bounds.0.ln());
        hi.push(self.signal_bounds.1.ln());
        lo.push(nl);
        hi.push(nu);
        (lo, hi)
    }

    pub(crate) fn bfgs(&self) -> BfgsOptions {
        BfgsOptions {
            max_iters: self.max_iters,
            ..BfgsOptions::default()
        }
    }
}

/// Start points in log space shared by the SOGP and MFGP fits so that a
/// single-output MFGP sees exactly the same starts as an SOGP.
pub(crate) fn kernel_log_starts<R: Rng + ?Sized>(
    config: &FitConfig,
    d: usize,
    outputs: usize,
    count: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let (lo, hi) = config.sogp_log_bounds(d);
    let (nl, nu) = (lo[d + 1], hi[d + 1]);
    let noise0 = (1e-4f64).ln().clamp(nl, nu);
    let mut starts = Vec::with_capacity(count);
    for s in 0..count {
        let mut v = Vec::with_capacity(d + 2 * outputs);
        if s == 0 {
            v.extend(std::iter::repeat((0.3f64).ln().clamp(lo[0], hi[0])).take(d));
            v.extend(std::iter::repeat(0.0f64).take(outputs));
            v.extend(std::iter::repeat(noise0).take(outputs));
        } else {
            for h in 0..d {
                v.push(rng.random_range(lo[h]..=hi[h]).clamp(lo[h], hi[h]));
            }
            // signal variance drawn around the standardized scale
            for _ in 0..outputs {
                v.push(rng.random_range(-1.5f64..=1.5));
            }
            for _ in 0..outputs {
                v.push(if nl < nu { rng.random_range(nl..=nu.min(-2.0).max(nl)) } else { nl });
            }
        }
        starts.push(v);
    }
    starts
}

/// Fits SOGP hyperparameters by multi-start minimization of the NLML.
pub fn fit_sogp<T: Scalar, R: Rng + ?Sized>(data: &Dataset<T>, config: &FitConfig, rng: &mut R) -> Result<SogpParams<T>> {
    fit_sogp_from(data, config, None, rng)
}

/// As [`fit_sogp`], optionally warm-started from a previous fit.
pub fn fit_sogp_from<T: Scalar, R: Rng + ?Sized>(
    data: &Dataset<T>,
    config: &FitConfig,
    warm: Option<&SogpParams<T>>,
    rng: &mut R,
) -> Result<SogpParams<T>> {
    let data = data.deduplicated();
    let d = data.dim();
    let count = if warm.is_some() { config.warm_starts.max(1) } else { config.starts.max(1) };
    let mut starts: Vec<Vec<T>> = kernel_log_starts(config, d, 1, count, rng)
        .into_iter()
        .map(|v| v.into_iter().map(T::lit).collect())
        .collect();
    if let Some(w) = warm {
        if w.dim() == d {
            starts[0] = w.to_log_vec();
        }
    }
    let (lo, hi) = config.sogp_log_bounds(d);
    let lo: Vec<T> = lo.into_iter().map(T::lit).collect();
    let hi: Vec<T> = hi.into_iter().map(T::lit).collect();
    multi_start_minimize(
        &starts,
        &lo,
        &hi,
        config,
        |theta| sogp_nlml_grad(&data, &SogpParams::from_log_vec(theta)).ok(),
    )
    .map(|theta| SogpParams::from_log_vec(&theta))
    .ok_or_else(|| ill_conditioned(&SogpParams::from_log_vec(starts.last().expect("at least one start"))))
}

/// Runs projected BFGS from every start; returns the best point found,
/// including the (clamped) starts themselves.
pub(crate) fn multi_start_minimize<T: Scalar>(
    starts: &[Vec<T>],
    lo: &[T],
    hi: &[T],
    config: &FitConfig,
    mut fg: impl FnMut(&[T]) -> Option<(T, Vec<T>)>,
) -> Option<Vec<T>> {
    let mut best: Option<(Vec<T>, T)> = None;
    let consider = |x: Vec<T>, v: T, best: &mut Option<(Vec<T>, T)>| {
        if v.is_finite() && best.as_ref().is_none_or(|(_, bv)| v < *bv) {
            *best = Some((x, v));
        }
    };
    for s in starts {
        let mut s = s.clone();
        for ((v, &l), &h) in s.iter_mut().zip(lo).zip(hi) {
            *v = v.max(l).min(h);
        }
        if let Some((v0, _)) = fg(&s) {
            consider(s.clone(), v0, &mut best);
        }
        if let Some(r) = projected_bfgs(&mut fg, &s, lo, hi, config.bfgs()) {
            consider(r.x, r.value, &mut best);
        }
    }
    best.map(|(x, _)| x)
}

/// Predictive distribution at one point, in standardized units unless
/// de-standardized explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Posterior<T: Scalar> {
    pub mean: T,
    pub variance: T,
}

impl<T: Scalar> Posterior<T> {
    pub fn std_dev(&self) -> T {
        self.variance.max(T::zero()).sqrt()
    }

    pub fn destandardize(&self, transform: &OutputTransform<T>) -> Self {
        Self {
            mean: transform.destandardize(self.mean),
            variance: transform.destandardize_variance(self.variance),
        }
    }
}

/// Fitted SOGP with a cached Cholesky factor. Immutable after construction.
#[derive(Debug, Clone)]
pub struct SogpModel<T: Scalar> {
    data: Dataset<T>,
    params: SogpParams<T>,
    inv_l2: Vec<T>,
    chol: Cholesky<T>,
    alpha: Vec<T>,
    jitter: T,
}

impl<T: Scalar> SogpModel<T> {
    /// Conditions a GP with fixed hyperparameters on `data` (deduplicated).
    pub fn new(data: &Dataset<T>, params: SogpParams<T>) -> Result<Self> {
        params.validate()?;
        let data = data.deduplicated();
        check_dim(params.dim(), data.dim())?;
        let mut c = build_gram(data.inputs(), &params)?;
        c.add_diagonal(params.noise_variance);
        let (chol, jitter) = Cholesky::with_jitter(&c).map_err(|_| ill_conditioned(&params))?;
        let alpha = chol.solve(data.outputs());
        let inv_l2 = params.inv_sq_lengthscales();
        Ok(Self {
            data,
            params,
            inv_l2,
            chol,
            alpha,
            jitter,
        })
    }

    /// Fits hyperparameters and conditions on `data`.
    pub fn fit<R: Rng + ?Sized>(data: &Dataset<T>, config: &FitConfig, rng: &mut R) -> Result<Self> {
        let params = fit_sogp(data, config, rng)?;
        Self::new(data, params)
    }

    pub fn params(&self) -> &SogpParams<T> {
        &self.params
    }

    pub fn data(&self) -> &Dataset<T> {
        &self.data
    }

    pub fn jitter(&self) -> T {
        self.jitter
    }

    pub fn transform(&self) -> OutputTransform<T> {
        self.data.transform()
    }

    pub fn nlml(&self) -> T {
        nlml_from_factor(&self.chol, self.data.outputs())
    }

    /// Posterior mean and variance (standardized units). The variance
    /// includes the noise term.
    pub fn predict(&self, x: &[T]) -> Posterior<T> {
        let sf2 = self.params.signal_variance;
        let kx: Vec<T> = self
            .data
            .inputs()
            .iter()
            .map(|xi| sf2 * se_unit(x, xi, &self.inv_l2))
            .collect();
        let mean = kx.iter().zip(&self.alpha).map(|(&a, &b)| a * b).sum();
        let v = self.chol.solve_lower(&kx);
        let reduction: T = v.iter().map(|&a| a * a).sum();
        let variance = (sf2 - reduction).max(T::zero()) + self.params.noise_variance;
        Posterior { mean, variance }
    }

    pub fn predict_raw(&self, x: &[T]) -> Posterior<T> {
        self.predict(x).destandardize(&self.data.transform())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params1(l: f64, sf2: f64, sn2: f64) -> SogpParams<f64> {
        SogpParams::new(vec![l], sf2, sn2).unwrap()
    }

    #[test]
    fn kernel_closed_form_values() {
        let p = params1(1.0, 1.0, 0.0);
        assert_eq!(se_kernel(&[0.3], &[0.3], &p).unwrap(), 1.0);
        assert!((se_kernel(&[0.0], &[2.0], &p).unwrap() - 0.135_335_283_236_612_7).abs() < 1e-15);
        let far = se_kernel(&[0.0], &[100.0], &params1(1.0, 1.0, 0.0)).unwrap();
        assert!(far < 1e-300);
    }

    #[test]
    fn kernel_rejects_dimension_mismatch() {
        let p = params1(1.0, 1.0, 0.0);
        assert!(matches!(se_kernel(&[0.0, 1.0], &[0.0], &p), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gram_single_and_duplicate_rows() {
        let p = SogpParams::new(vec![0.5, 0.5], 2.0, 0.0).unwrap();
        let k = build_gram(&[vec![0.1, 0.2]], &p).unwrap();
        assert_eq!(k[(0, 0)], 2.0);
        let k = build_gram(&[vec![0.1, 0.2], vec![0.1, 0.2]], &p).unwrap();
        assert!(k.is_symmetric());
        assert!((0..2).all(|i| (0..2).all(|j| k[(i, j)] == 2.0)));
    }

    #[test]
    fn nlml_scalar_cases() {
        let data = Dataset::with_transform(vec![vec![0.5]], &[0.0], OutputTransform::identity()).unwrap();
        let v = sogp_nlml(&data, &params1(0.3, 0.5, 0.5)).unwrap();
        assert!((v - 0.918_938_533_204_672_7).abs() < 1e-12);

        let data = Dataset::with_transform(vec![vec![0.5]], &[1.7], OutputTransform::identity()).unwrap();
        let total = 0.8 + 0.05;
        let v = sogp_nlml(&data, &params1(0.3, 0.8, 0.05)).unwrap();
        let expect = 1.7f64.powi(2) / (2.0 * total) + 0.5 * total.ln() + 0.5 * std::f64::consts::TAU.ln();
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn transform_round_trip() {
        let raw = [3.0f64, -1.5, 10.25, 7.0];
        let t = OutputTransform::fit(&raw);
        for &r in &raw {
            let back = t.destandardize(t.standardize(r));
            assert!((back - r).abs() <= 1e-12 * r.abs().max(1.0));
        }
        let c = OutputTransform::fit(&[4.0, 4.0]);
        assert_eq!(c.scale, 1.0);
        assert_eq!(c.standardize(4.0), 0.0);
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::<f64>::new(vec![], &[]).is_err());
        assert!(Dataset::new(vec![vec![1.5]], &[0.0]).is_err());
        assert!(Dataset::new(vec![vec![0.5], vec![0.5, 0.1]], &[0.0, 1.0]).is_err());
        let d = Dataset::new(vec![vec![0.5], vec![0.2], vec![0.5]], &[1.0, 2.0, 3.0]).unwrap();
        let u = d.deduplicated();
        assert_eq!(u.len(), 2);
        assert_eq!(u.raw_output(0), 1.0);
    }

    #[test]
    fn interpolates_training_points_with_tiny_noise() {
        let xs = vec![vec![0.1], vec![0.4], vec![0.8]];
        let data = Dataset::new(xs.clone(), &[1.0, -0.5, 0.3]).unwrap();
        let m = SogpModel::new(&data, params1(0.2, 1.0, 1e-12)).unwrap();
        for (i, x) in xs.iter().enumerate() {
            let p = m.predict(x);
            assert!((p.mean - data.outputs()[i]).abs() < 1e-5);
            assert!((p.variance - 1e-12).abs() < 1e-5);
        }
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let data = Dataset::new(vec![vec![0.1], vec![0.2]], &[1.0, -1.0]).unwrap();
        let m = SogpModel::new(&data, params1(0.01, 1.3, 1e-4)).unwrap();
        let p = m.predict(&[0.9]);
        assert!(p.mean.abs() < 1e-12);
        assert!((p.variance - (1.3 + 1e-4)).abs() < 1e-12);
    }

    #[test]
    fn constant_outputs_fit_to_flat_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
        let data = Dataset::new(xs, &[2.5; 8]).unwrap();
        let m = SogpModel::fit(&data, &FitConfig::default(), &mut rng).unwrap();
        for q in [0.0, 0.33, 0.71, 1.0] {
            assert!(m.predict(&[q]).mean.abs() < 1e-6);
            assert!((m.predict_raw(&[q]).mean - 2.5).abs() < 1e-6);
        }
    }

    #[test]
    fn fit_never_worse_than_its_starts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 9.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (6.0 * x[0]).sin()).collect();
        let data = Dataset::new(xs, &ys).unwrap();
        let config = FitConfig::default();
        let fitted = fit_sogp(&data, &config, &mut rng).unwrap();
        let best = sogp_nlml(&data, &fitted).unwrap();
        let starts = kernel_log_starts(&config, 1, 1, 2, &mut ChaCha8Rng::seed_from_u64(9));
        for s in starts {
            let p = SogpParams::from_log_vec(&s);
            assert!(best <= sogp_nlml(&data, &p).unwrap() + 1e-12);
        }
        // warm start at the optimum cannot get worse
        let warm = fit_sogp_from(&data, &config, Some(&fitted), &mut rng).unwrap();
        assert!(sogp_nlml(&data, &warm).unwrap() <= best + 1e-12);
    }

    #[test]
    fn fixed_noise_stays_at_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x[0] * x[0]).collect();
        let config = FitConfig {
            learn_noise: false,
            ..FitConfig::default()
        };
        let p = fit_sogp(&Dataset::new(xs, &ys).unwrap(), &config, &mut rng).unwrap();
        assert!((p.noise_variance - 1e-8).abs() < 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let xs: Vec<Vec<f32>> = (0..5).map(|i| vec![i as f32 / 4.0]).collect();
        let ys: Vec<f32> = xs.iter().map(|x| x[0].sin()).collect();
        let data = Dataset::new(xs, &ys).unwrap();
        let m = SogpModel::new(&data, SogpParams::new(vec![0.3f32], 1.0, 1e-4).unwrap()).unwrap();
        let p = m.predict(&[0.5]);
        assert!(p.variance >= 0.0 && p.mean.is_finite());
    }
}
