//! Multi-form Gaussian process: one multi-output GP over `m` bootstrap
//! subsets of the same training set.
//!
//! All outputs share a single lengthscale vector (the agreement constraint
//! on curve bumpiness is structural: [`MfgpParams`] carries exactly one
//! lengthscale vector). Outputs are coupled through an output covariance
//! `K^f = S R S`, where `S = diag(σ_f,i)` and `R` is a correlation matrix
//! represented by its row-normalized lower Cholesky factor, which keeps
//! `K^f` positive semi-definite for every parameter value.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{check_dim, kernel_log_starts, multi_start_minimize, nlml_from_factor, se_unit, unique_rows};
use crate::gp::{Dataset, FitConfig, OutputTransform, Posterior};
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::Scalar;

/// Bound on the free entries of the unnormalized correlation factor.
const CORRELATION_RAW_BOUND: f64 = 20.0;
/// Off-diagonal correlation of the deterministic start point.
const INITIAL_CORRELATION: f64 = 0.3;

/// One bootstrap subset: indices into the master dataset plus the rows they
/// select (standardized with the master transform).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Subset<T: Scalar> {
    pub rows: Vec<usize>,
    pub inputs: Vec<Vec<T>>,
    pub outputs: Vec<T>,
}

impl<T: Scalar> Subset<T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_dataset(&self, transform: OutputTransform<T>) -> Dataset<T> {
        Dataset::from_standardized(self.inputs.clone(), self.outputs.clone(), transform)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SubsetCollection<T: Scalar> {
    subsets: Vec<Subset<T>>,
    transform: OutputTransform<T>,
    dim: usize,
}

impl<T: Scalar> SubsetCollection<T> {
    /// Materializes subsets from master row indices. Indices repeating an
    /// input already present in the same subset are dropped.
    pub fn from_rows(master: &Dataset<T>, rows: &[Vec<usize>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("at least one subset is required".into()));
        }
        let mut subsets = Vec::with_capacity(rows.len());
        for idx in rows {
            if let Some(&bad) = idx.iter().find(|&&i| i >= master.len()) {
                return Err(Error::InvalidInput(format!("subset row {bad} is not in the master set")));
            }
            let inputs: Vec<Vec<T>> = idx.iter().map(|&i| master.inputs()[i].clone()).collect();
            let keep = unique_rows(&inputs);
            subsets.push(Subset {
                rows: keep.iter().map(|&k| idx[k]).collect(),
                inputs: keep.iter().map(|&k| inputs[k].clone()).collect(),
                outputs: keep.iter().map(|&k| master.outputs()[idx[k]]).collect(),
            });
        }
        Ok(Self {
            subsets,
            transform: master.transform(),
            dim: master.dim(),
        })
    }

    /// Number of subsets (`m`).
    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total stacked row count `N`.
    pub fn total_len(&self) -> usize {
        self.subsets.iter().map(Subset::len).sum()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.subsets.iter().map(Subset::len).collect()
    }

    pub fn subset(&self, i: usize) -> &Subset<T> {
        &self.subsets[i]
    }

    pub fn subsets(&self) -> &[Subset<T>] {
        &self.subsets
    }

    pub fn transform(&self) -> OutputTransform<T> {
        self.transform
    }

    fn stacked(&self) -> (Vec<(usize, &[T])>, Vec<T>) {
        let mut points = Vec::with_capacity(self.total_len());
        let mut y = Vec::with_capacity(self.total_len());
        for (b, s) in self.subsets.iter().enumerate() {
            for (x, &v) in s.inputs.iter().zip(&s.outputs) {
                points.push((b, x.as_slice()));
                y.push(v);
            }
        }
        (points, y)
    }
}

/// Draws `m` bootstrap index sets over the master rows: `n` draws with
/// replacement, then duplicates removed. Subsets with fewer than two rows are
/// topped up with distinct master rows when the master has them.
pub fn bootstrap_rows<T: Scalar, R: Rng + ?Sized>(master: &Dataset<T>, m: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let n = master.len();
    let distinct = unique_rows(master.inputs());
    (0..m)
        .map(|_| {
            let mut idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            idx.sort_unstable();
            idx.dedup();
            let inputs: Vec<Vec<T>> = idx.iter().map(|&i| master.inputs()[i].clone()).collect();
            let mut rows: Vec<usize> = unique_rows(&inputs).into_iter().map(|k| idx[k]).collect();
            while rows.len() < 2 && distinct.len() >= 2 {
                let &pick = distinct.choose(rng).expect("nonempty");
                if !rows.iter().any(|&r| master.inputs()[r] == master.inputs()[pick]) {
                    rows.push(pick);
                }
            }
            rows
        })
        .collect()
}

pub fn bootstrap_subsets<T: Scalar, R: Rng + ?Sized>(master: &Dataset<T>, m: usize, rng: &mut R) -> SubsetCollection<T> {
    let rows = bootstrap_rows(master, m, rng);
    SubsetCollection::from_rows(master, &rows).expect("bootstrap rows index the master set")
}

/// MFGP hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MfgpParams<T: Scalar> {
    pub shared_lengthscales: Vec<T>,
    /// Per-output signal variances `σ_f,i²` (the diagonal of `K^f`).
    pub output_scales: Vec<T>,
    pub noise_variances: Vec<T>,
    /// Lower-triangular factor with unit-norm rows and positive diagonal;
    /// `R = F Fᵀ` is the output correlation matrix.
    pub correlation_factor: Vec<Vec<T>>,
}

impl<T: Scalar> MfgpParams<T> {
    /// Builds parameters from an explicit correlation matrix.
    pub fn from_correlation(
        shared_lengthscales: Vec<T>,
        output_scales: Vec<T>,
        noise_variances: Vec<T>,
        correlation: &Matrix<T>,
    ) -> Result<Self> {
        let m = output_scales.len();
        if noise_variances.len() != m || correlation.rows() != m || correlation.cols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: correlation.rows(),
            });
        }
        let (chol, _) = Cholesky::with_jitter(correlation)?;
        let l = chol.factor();
        let factor = (0..m)
            .map(|i| {
                let row: Vec<T> = (0..m).map(|j| if j <= i { l[(i, j)] } else { T::zero() }).collect();
                let norm = row.iter().map(|&v| v * v).sum::<T>().sqrt();
                row.into_iter().map(|v| v / norm).collect()
            })
            .collect();
        let p = Self {
            shared_lengthscales,
            output_scales,
            noise_variances,
            correlation_factor: factor,
        };
        p.validate()?;
        Ok(p)
    }

    /// Independent outputs (identity correlation).
    pub fn uncorrelated(shared_lengthscales: Vec<T>, output_scales: Vec<T>, noise_variances: Vec<T>) -> Result<Self> {
        let m = output_scales.len();
        Self::from_correlation(shared_lengthscales, output_scales, noise_variances, &Matrix::identity(m))
    }

    pub fn outputs(&self) -> usize {
        self.output_scales.len()
    }

    pub fn dim(&self) -> usize {
        self.shared_lengthscales.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.outputs();
        if m == 0 {
            return Err(Error::InvalidInput("MFGP needs at least one output".into()));
        }
        if self.noise_variances.len() != m || self.correlation_factor.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: self.noise_variances.len().min(self.correlation_factor.len()),
            });
        }
        if self.shared_lengthscales.iter().any(|&l| !(l > T::zero())) {
            return Err(Error::InvalidInput("lengthscales must be positive".into()));
        }
        if self.output_scales.iter().any(|&s| !(s > T::zero())) {
            return Err(Error::InvalidInput("output scales must be positive".into()));
        }
        if self.noise_variances.iter().any(|&s| !(s >= T::zero())) {
            return Err(Error::InvalidInput("noise variances must be non-negative".into()));
        }
        Ok(())
    }

    /// Correlation matrix `R = F Fᵀ` (unit diagonal).
    pub fn correlation(&self) -> Matrix<T> {
        let f = &self.correlation_factor;
        let m = self.outputs();
        Matrix::from_fn(m, m, |i, j| {
            if i == j {
                T::one()
            } else {
                (0..=i.min(j)).map(|k| f[i][k] * f[j][k]).sum()
            }
        })
    }

    /// Output covariance `K^f`, entries `ρ_ij = R_ij σ_f,i σ_f,j`.
    pub fn output_covariance(&self) -> Matrix<T> {
        let r = self.correlation();
        let s: Vec<T> = self.output_scales.iter().map(|v| v.sqrt()).collect();
        let m = self.outputs();
        let mut k = Matrix::from_fn(m, m, |i, j| r[(i, j)] * s[i] * s[j]);
        for i in 0..m {
            k[(i, i)] = self.output_scales[i];
        }
        k
    }

    /// Log-space vector `[ln l (d), ln σ_f,i² (m), ln σ_n,i² (m), a (m(m−1)/2)]`
    /// where `a_ij = F_ij / F_ii` are the free factor entries below the
    /// diagonal, row by row.
    pub fn to_log_vec(&self) -> Vec<T> {
        let mut v: Vec<T> = self.shared_lengthscales.iter().map(|l| l.ln()).collect();
        v.extend(self.output_scales.iter().map(|s| s.ln()));
        v.extend(self.noise_variances.iter().map(|s| s.max(T::min_positive_value()).ln()));
        for (i, row) in self.correlation_factor.iter().enumerate() {
            for j in 0..i {
                v.push(row[j] / row[i]);
            }
        }
        v
    }

    pub fn from_log_vec(v: &[T], dim: usize, outputs: usize) -> Self {
        let m = outputs;
        let ls = v[..dim].iter().map(|x| x.exp()).collect();
        let scales = v[dim..dim + m].iter().map(|x| x.exp()).collect();
        let noise = v[dim + m..dim + 2 * m].iter().map(|x| x.exp()).collect();
        let raw = &v[dim + 2 * m..];
        let mut factor = Vec::with_capacity(m);
        let mut k = 0;
        for i in 0..m {
            let mut row = vec![T::zero(); m];
            row[..i].copy_from_slice(&raw[k..k + i]);
            k += i;
            row[i] = T::one();
            let norm = row.iter().map(|&a| a * a).sum::<T>().sqrt();
            row.iter_mut().for_each(|a| *a /= norm);
            factor.push(row);
        }
        Self {
            shared_lengthscales: ls,
            output_scales: scales,
            noise_variances: noise,
            correlation_factor: factor,
        }
    }

    fn inv_sq_lengthscales(&self) -> Vec<T> {
        self.shared_lengthscales.iter().map(|&l| T::one() / (l * l)).collect()
    }

    fn check_against(&self, subsets: &SubsetCollection<T>) -> Result<()> {
        self.validate()?;
        check_dim(self.outputs(), subsets.len())?;
        check_dim(self.dim(), subsets.dim())
    }
}

fn ill_conditioned<T: Scalar>(params: &MfgpParams<T>) -> Error {
    Error::IllConditioned {
        jitter: crate::linalg::JITTER_MAX,
        params: params.to_log_vec().iter().map(|v| v.as_f64()).collect(),
    }
}

/// Stacked covariance `K_M`: block `(i, j)` is `ρ_ij K_ij` with `K_ij` the
/// unit-variance SE cross-Gram under the shared lengthscales, plus
/// `σ_n,i²` on the diagonal of block `i`.
pub fn build_block_covariance<T: Scalar>(subsets: &SubsetCollection<T>, params: &MfgpParams<T>) -> Result<Matrix<T>> {
    params.check_against(subsets)?;
    let (points, _) = subsets.stacked();
    Ok(block_covariance(&points, params).0)
}

/// Returns `K_M` and the unit-variance kernel values it was built from.
fn block_covariance<T: Scalar>(points: &[(usize, &[T])], params: &MfgpParams<T>) -> (Matrix<T>, Matrix<T>) {
    let kf = params.output_covariance();
    let inv_l2 = params.inv_sq_lengthscales();
    let n = points.len();
    let mut k = Matrix::zeros(n, n);
    let mut unit = Matrix::zeros(n, n);
    for a in 0..n {
        let (ba, xa) = points[a];
        unit[(a, a)] = T::one();
        k[(a, a)] = kf[(ba, ba)] + params.noise_variances[ba];
        for b in 0..a {
            let (bb, xb) = points[b];
            let u = se_unit(xa, xb, &inv_l2);
            unit[(a, b)] = u;
            unit[(b, a)] = u;
            let v = kf[(ba, bb)] * u;
            k[(a, b)] = v;
            k[(b, a)] = v;
        }
    }
    (k, unit)
}

pub fn mfgp_nlml<T: Scalar>(subsets: &SubsetCollection<T>, params: &MfgpParams<T>) -> Result<T> {
    let k = build_block_covariance(subsets, params)?;
    let (_, y) = subsets.stacked();
    let (chol, _) = Cholesky::with_jitter(&k).map_err(|_| ill_conditioned(params))?;
    Ok(nlml_from_factor(&chol, &y))
}

/// NLML and its gradient with respect to [`MfgpParams::to_log_vec`].
pub fn mfgp_nlml_grad<T: Scalar>(subsets: &SubsetCollection<T>, params: &MfgpParams<T>) -> Result<(T, Vec<T>)> {
    params.check_against(subsets)?;
    let (points, y) = subsets.stacked();
    let (k, unit) = block_covariance(&points, params);
    let (chol, _) = Cholesky::with_jitter(&k).map_err(|_| ill_conditioned(params))?;
    let value = nlml_from_factor(&chol, &y);

    let n = points.len();
    let d = params.dim();
    let m = params.outputs();
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let alpha = chol.solve(&y);
    let mut w = chol.inverse();
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] -= alpha[i] * alpha[j];
        }
    }

    let kf = params.output_covariance();
    let inv_l2 = params.inv_sq_lengthscales();
    // c[i][j] = Σ_{a∈i, b∈j} W_ab u_ab over ordered pairs
    let mut c = Matrix::<T>::zeros(m, m);
    let mut g_len = vec![T::zero(); d];
    let mut noise_trace = vec![T::zero(); m];
    for a in 0..n {
        let (ba, xa) = points[a];
        c[(ba, ba)] += w[(a, a)];
        noise_trace[ba] += w[(a, a)];
        for b in 0..a {
            let (bb, xb) = points[b];
            let wu = w[(a, b)] * unit[(a, b)];
            c[(ba, bb)] += wu;
            c[(bb, ba)] += wu;
            let wk = two * wu * kf[(ba, bb)];
            for h in 0..d {
                let diff = xa[h] - xb[h];
                g_len[h] += wk * diff * diff * inv_l2[h];
            }
        }
    }

    let mut grad = Vec::with_capacity(d + 2 * m + m * (m - 1) / 2);
    grad.extend(g_len.into_iter().map(|g| half * g));
    // gradient with respect to each K^f entry (ordered pairs)
    let gkf = Matrix::from_fn(m, m, |i, j| half * c[(i, j)]);
    for k_out in 0..m {
        grad.push((0..m).map(|j| gkf[(k_out, j)] * kf[(k_out, j)]).sum());
    }
    for (i, tr) in noise_trace.iter().enumerate() {
        grad.push(half * params.noise_variances[i] * *tr);
    }
    // R = F Fᵀ with F rows a_i/‖a_i‖
    let s: Vec<T> = params.output_scales.iter().map(|v| v.sqrt()).collect();
    let bmat = Matrix::from_fn(m, m, |i, j| gkf[(i, j)] * s[i] * s[j]);
    let f = &params.correlation_factor;
    for i in 1..m {
        let g_row: Vec<T> = (0..m)
            .map(|col| two * (0..m).map(|j| bmat[(i, j)] * f[j][col]).sum::<T>())
            .collect();
        let proj: T = (0..=i).map(|col| g_row[col] * f[i][col]).sum();
        // ‖a_i‖ = 1 / F_ii because the unnormalized diagonal is one
        let norm = T::one() / f[i][i];
        for col in 0..i {
            grad.push((g_row[col] - proj * f[i][col]) / norm);
        }
    }
    Ok((value, grad))
}

fn mfgp_log_bounds(config: &FitConfig, d: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let (nl, nu) = config.noise_log_bounds();
    let mut lo = vec![config.lengthscale_bounds.0.ln(); d];
    let mut hi = vec![config.lengthscale_bounds.1.ln(); d];
    lo.extend(std::iter::repeat(config.signal_bounds.0.ln()).take(m));
    hi.extend(std::iter::repeat(config.signal_bounds.1.ln()).take(m));
    lo.extend(std::iter::repeat(nl).take(m));
    hi.extend(std::iter::repeat(nu).take(m));
    let q = m * (m - 1) / 2;
    lo.extend(std::iter::repeat(-CORRELATION_RAW_BOUND).take(q));
    hi.extend(std::iter::repeat(CORRELATION_RAW_BOUND).take(q));
    (lo, hi)
}

/// Free factor entries of the correlation matrix with every off-diagonal
/// entry equal to `rho`.
fn equicorrelated_raw(m: usize, rho: f64) -> Vec<f64> {
    let r = Matrix::<f64>::from_fn(m, m, |i, j| if i == j { 1.0 } else { rho });
    let chol = r.cholesky().expect("equicorrelation matrix with rho in (0,1) is PD");
    let l = chol.factor();
    let mut out = Vec::with_capacity(m * (m - 1) / 2);
    for i in 1..m {
        for j in 0..i {
            out.push(l[(i, j)] / l[(i, i)]);
        }
    }
    out
}

pub fn fit_mfgp<T: Scalar, R: Rng + ?Sized>(
    subsets: &SubsetCollection<T>,
    config: &FitConfig,
    rng: &mut R,
) -> Result<MfgpParams<T>> {
    fit_mfgp_from(subsets, config, None, rng)
}

/// Joint multi-start NLML minimization over the shared lengthscales, output
/// scales, noise variances and correlation factor.
pub fn fit_mfgp_from<T: Scalar, R: Rng + ?Sized>(
    subsets: &SubsetCollection<T>,
    config: &FitConfig,
    warm: Option<&MfgpParams<T>>,
    rng: &mut R,
) -> Result<MfgpParams<T>> {
    let m = subsets.len();
    let d = subsets.dim();
    if subsets.subsets().iter().any(Subset::is_empty) || subsets.total_len() < 2 {
        return Err(Error::InvalidInput("every subset needs a row and N must be at least 2".into()));
    }
    let warm = warm.filter(|w| w.outputs() == m && w.dim() == d);
    let count = if warm.is_some() { config.warm_starts.max(1) } else { config.starts.max(1) };
    let mut starts: Vec<Vec<f64>> = kernel_log_starts(config, d, m, count, rng);
    let q = m * (m - 1) / 2;
    for (s, v) in starts.iter_mut().enumerate() {
        if s == 0 {
            v.extend(equicorrelated_raw(m, INITIAL_CORRELATION));
        } else {
            v.extend((0..q).map(|_| rng.random_range(-1.5f64..=1.5)));
        }
    }
    let mut starts: Vec<Vec<T>> = starts.into_iter().map(|v| v.into_iter().map(T::lit).collect()).collect();
    if let Some(w) = warm {
        starts[0] = w.to_log_vec();
    }
    let (lo, hi) = mfgp_log_bounds(config, d, m);
    let lo: Vec<T> = lo.into_iter().map(T::lit).collect();
    let hi: Vec<T> = hi.into_iter().map(T::lit).collect();
    multi_start_minimize(&starts, &lo, &hi, config, |theta| {
        mfgp_nlml_grad(subsets, &MfgpParams::from_log_vec(theta, d, m)).ok()
    })
    .map(|theta| MfgpParams::from_log_vec(&theta, d, m))
    .ok_or_else(|| ill_conditioned(&MfgpParams::from_log_vec(starts.last().expect("a start"), d, m)))
}

/// Per-output predictive means and variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MfgpPosterior<T: Scalar> {
    pub means: Vec<T>,
    pub variances: Vec<T>,
}

impl<T: Scalar> MfgpPosterior<T> {
    pub fn output(&self, j: usize) -> Posterior<T> {
        Posterior {
            mean: self.means[j],
            variance: self.variances[j],
        }
    }
}

/// Fitted MFGP with cached factorization. Immutable after construction.
#[derive(Debug, Clone)]
pub struct MfgpModel<T: Scalar> {
    subsets: SubsetCollection<T>,
    params: MfgpParams<T>,
    kf: Matrix<T>,
    inv_l2: Vec<T>,
    blocks: Vec<usize>,
    inputs: Vec<Vec<T>>,
    chol: Cholesky<T>,
    alpha: Vec<T>,
    jitter: T,
}

impl<T: Scalar> MfgpModel<T> {
    pub fn new(subsets: &SubsetCollection<T>, params: MfgpParams<T>) -> Result<Self> {
        params.check_against(subsets)?;
        let (points, y) = subsets.stacked();
        let (k, _) = block_covariance(&points, &params);
        let (chol, jitter) = Cholesky::with_jitter(&k).map_err(|_| ill_conditioned(&params))?;
        let alpha = chol.solve(&y);
        let blocks = points.iter().map(|&(b, _)| b).collect();
        let inputs = points.iter().map(|&(_, x)| x.to_vec()).collect();
        Ok(Self {
            kf: params.output_covariance(),
            inv_l2: params.inv_sq_lengthscales(),
            subsets: subsets.clone(),
            params,
            blocks,
            inputs,
            chol,
            alpha,
            jitter,
        })
    }

    pub fn fit<R: Rng + ?Sized>(subsets: &SubsetCollection<T>, config: &FitConfig, rng: &mut R) -> Result<Self> {
        let params = fit_mfgp(subsets, config, rng)?;
        Self::new(subsets, params)
    }

    pub fn params(&self) -> &MfgpParams<T> {
        &self.params
    }

    pub fn subsets(&self) -> &SubsetCollection<T> {
        &self.subsets
    }

    pub fn outputs(&self) -> usize {
        self.params.outputs()
    }

    pub fn jitter(&self) -> T {
        self.jitter
    }

    pub fn nlml(&self) -> T {
        let (_, y) = self.subsets.stacked();
        nlml_from_factor(&self.chol, &y)
    }

    fn unit_cross(&self, x: &[T]) -> Vec<T> {
        self.inputs.iter().map(|xi| se_unit(x, xi, &self.inv_l2)).collect()
    }

    fn predict_with(&self, j: usize, unit: &[T]) -> Posterior<T> {
        let kx: Vec<T> = unit
            .iter()
            .zip(&self.blocks)
            .map(|(&u, &b)| self.kf[(j, b)] * u)
            .collect();
        let mean = kx.iter().zip(&self.alpha).map(|(&a, &b)| a * b).sum();
        let v = self.chol.solve_lower(&kx);
        let reduction: T = v.iter().map(|&a| a * a).sum();
        let variance = (self.kf[(j, j)] - reduction).max(T::zero()) + self.params.noise_variances[j];
        Posterior { mean, variance }
    }

    /// Prediction of output `j` (standardized units).
    pub fn predict_output(&self, j: usize, x: &[T]) -> Posterior<T> {
        self.predict_with(j, &self.unit_cross(x))
    }

    pub fn predict(&self, x: &[T]) -> MfgpPosterior<T> {
        let unit = self.unit_cross(x);
        let (means, variances) = (0..self.outputs())
            .map(|j| {
                let p = self.predict_with(j, &unit);
                (p.mean, p.variance)
            })
            .unzip();
        MfgpPosterior { means, variances }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{build_gram, sogp_nlml, SogpParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn master(n: usize, seed: u64) -> Dataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (5.0 * x[0]).sin() + x[1]).collect();
        Dataset::new(xs, &ys).unwrap()
    }

    #[test]
    fn single_row_master_bootstrap() {
        let m = Dataset::new(vec![vec![0.3]], &[1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows = bootstrap_rows(&m, 4, &mut rng);
        assert!(rows.iter().all(|r| r == &vec![0]));
    }

    #[test]
    fn bootstrap_rows_are_unique_members() {
        let m = master(30, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let c = bootstrap_subsets(&m, 3, &mut rng);
            for s in c.subsets() {
                assert!(s.len() >= 2 && s.len() <= 30);
                let mut r = s.rows.clone();
                r.sort_unstable();
                r.dedup();
                assert_eq!(r.len(), s.len());
                for (k, &row) in s.rows.iter().enumerate() {
                    assert_eq!(s.inputs[k], m.inputs()[row]);
                }
            }
        }
    }

    #[test]
    fn tiny_master_is_topped_up() {
        let m = Dataset::new(vec![vec![0.1], vec![0.9]], &[0.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            for r in bootstrap_rows(&m, 3, &mut rng) {
                assert_eq!(r.len(), 2);
            }
        }
    }

    #[test]
    fn from_rows_rejects_foreign_index() {
        let m = master(5, 1);
        assert!(SubsetCollection::from_rows(&m, &[vec![0, 7]]).is_err());
    }

    #[test]
    fn single_output_reduces_to_sogp_gram() {
        let m = master(6, 4);
        let c = SubsetCollection::from_rows(&m, &[vec![0, 2, 3, 5]]).unwrap();
        let p = MfgpParams::uncorrelated(vec![0.4, 0.7], vec![1.7], vec![1e-3]).unwrap();
        let km = build_block_covariance(&c, &p).unwrap();
        let sp = SogpParams::new(vec![0.4, 0.7], 1.7, 1e-3).unwrap();
        let mut k = build_gram(&c.subset(0).inputs, &sp).unwrap();
        k.add_diagonal(1e-3);
        assert_eq!(km, k);
        let ds = c.subset(0).to_dataset(c.transform());
        let a = mfgp_nlml(&c, &p).unwrap();
        let b = sogp_nlml(&ds, &sp).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn log_vector_round_trip_keeps_correlation() {
        let r = Matrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.4 - 0.1 * (i + j) as f64 });
        let p = MfgpParams::from_correlation(vec![0.2], vec![1.0, 2.0, 0.5], vec![1e-4; 3], &r).unwrap();
        let q = MfgpParams::from_log_vec(&p.to_log_vec(), 1, 3);
        let (a, b) = (p.correlation(), q.correlation());
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[(i, j)] - r[(i, j)]).abs() < 1e-12);
                assert!((b[(i, j)] - r[(i, j)]).abs() < 1e-12);
            }
        }
        let kf = p.output_covariance();
        assert!(kf.is_symmetric());
        assert!((kf[(1, 2)] - r[(1, 2)] * (2.0f64 * 0.5).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn agreement_lengthscale_moves_every_output() {
        // perturbing the one lengthscale vector changes each block's NLML term
        let m = master(12, 8);
        let c = SubsetCollection::from_rows(&m, &[vec![0, 1, 2, 3, 4, 5], vec![6, 7, 8, 9, 10, 11]]).unwrap();
        let p = MfgpParams::uncorrelated(vec![0.3, 0.3], vec![1.0, 1.0], vec![1e-4, 1e-4]).unwrap();
        let mut q = p.clone();
        q.shared_lengthscales[0] = 0.6;
        for j in 0..2 {
            let single = SubsetCollection::from_rows(&m, &[c.subset(j).rows.clone()]).unwrap();
            let pj = MfgpParams::uncorrelated(p.shared_lengthscales.clone(), vec![1.0], vec![1e-4]).unwrap();
            let qj = MfgpParams::uncorrelated(q.shared_lengthscales.clone(), vec![1.0], vec![1e-4]).unwrap();
            assert!((mfgp_nlml(&single, &pj).unwrap() - mfgp_nlml(&single, &qj).unwrap()).abs() > 1e-6);
        }
    }

    #[test]
    fn variance_bounds_hold() {
        let m = master(10, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = bootstrap_subsets(&m, 2, &mut rng);
        let model = MfgpModel::fit(&c, &FitConfig::default(), &mut rng).unwrap();
        let kf = model.params().output_covariance();
        for k in 0..50 {
            let x = [k as f64 / 49.0, 1.0 - k as f64 / 49.0];
            let p = model.predict(&x);
            for j in 0..2 {
                assert!(p.variances[j] >= 0.0);
                assert!(p.variances[j] <= kf[(j, j)] + model.params().noise_variances[j] + 1e-9);
            }
        }
    }

    #[test]
    fn constant_outputs_fit() {
        let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
        let m = Dataset::new(xs, &[1.0; 8]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = bootstrap_subsets(&m, 2, &mut rng);
        let model = MfgpModel::fit(&c, &FitConfig::default(), &mut rng).unwrap();
        for q in [0.0, 0.4, 0.9] {
            assert!(model.predict(&[q]).means.iter().all(|v| v.abs() < 1e-6));
        }
    }

    #[test]
    fn rejects_mismatched_params() {
        let m = master(6, 1);
        let c = SubsetCollection::from_rows(&m, &[vec![0, 1], vec![2, 3]]).unwrap();
        let p = MfgpParams::uncorrelated(vec![0.3, 0.3], vec![1.0], vec![1e-4]).unwrap();
        assert!(build_block_covariance(&c, &p).is_err());
    }
}
