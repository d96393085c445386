//! Bounded local minimizers: a clamped Nelder-Mead simplex for
//! derivative-free problems and a projected BFGS for smooth objectives with
//! analytic gradients.

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalMinimum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Initial simplex edge as a fraction of each box side.
    pub initial_step: f64,
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 400,
            initial_step: 0.1,
            f_tol: 1e-12,
            x_tol: 1e-9,
        }
    }
}

fn clamp_into<T: Scalar>(x: &mut [T], lower: &[T], upper: &[T]) {
    for ((v, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
        if *v < lo || v.is_nan() {
            *v = lo;
        } else if *v > hi {
            *v = hi;
        }
    }
}

/// NaN-safe objective wrapper: non-finite values count as +inf.
#[inline]
fn sanitize<T: Scalar>(v: T) -> T {
    if v.is_nan() {
        T::infinity()
    } else {
        v
    }
}

/// Nelder-Mead restricted to the box `[lower, upper]`; every trial point is
/// clamped into the box before evaluation.
pub fn nelder_mead_bounded<T: Scalar>(
    mut f: impl FnMut(&[T]) -> T,
    x0: &[T],
    lower: &[T],
    upper: &[T],
    opts: NelderMeadOptions,
) -> LocalMinimum<T> {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[T], evals: &mut usize| {
        *evals += 1;
        sanitize(f(x))
    };

    let mut start = x0.to_vec();
    clamp_into(&mut start, lower, upper);
    if n == 0 {
        let value = eval(&start, &mut evals);
        return LocalMinimum {
            x: start,
            value,
            evaluations: evals,
        };
    }

    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    let v0 = eval(&start, &mut evals);
    simplex.push((start.clone(), v0));
    for h in 0..n {
        let mut p = start.clone();
        let width = upper[h] - lower[h];
        let mut step = width * T::lit(opts.initial_step);
        if step == T::zero() {
            step = T::lit(opts.initial_step);
        }
        if p[h] + step > upper[h] {
            step = -step;
        }
        p[h] += step;
        clamp_into(&mut p, lower, upper);
        let v = eval(&p, &mut evals);
        simplex.push((p, v));
    }

    let (alpha, gamma, rho, sigma) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));
    let inv_n = T::one() / T::from_usize_lossy(n);

    while evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = (worst - best).abs();
        let size = simplex[1..]
            .iter()
            .map(|(p, _)| {
                p.iter()
                    .zip(&simplex[0].0)
                    .map(|(&a, &b)| (a - b).abs())
                    .fold(T::zero(), T::max)
            })
            .fold(T::zero(), T::max);
        if (spread <= T::lit(opts.f_tol) * (T::one() + best.abs()) && size <= T::lit(opts.x_tol))
            || size <= T::lit(opts.x_tol) * T::lit(1e-3)
        {
            break;
        }

        let mut centroid = vec![T::zero(); n];
        for (p, _) in &simplex[..n] {
            for (c, &v) in centroid.iter_mut().zip(p) {
                *c += v;
            }
        }
        centroid.iter_mut().for_each(|c| *c *= inv_n);

        let along = |coef: T| -> Vec<T> {
            let mut p: Vec<T> = centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(&c, &w)| c + coef * (c - w))
                .collect();
            clamp_into(&mut p, lower, upper);
            p
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink towards the best vertex
        let best_point = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut p: Vec<T> = best_point
                .iter()
                .zip(&vertex.0)
                .map(|(&b, &v)| b + sigma * (v - b))
                .collect();
            clamp_into(&mut p, lower, upper);
            let v = eval(&p, &mut evals);
            *vertex = (p, v);
        }
    }

    let (x, value) = simplex
        .into_iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .expect("simplex is nonempty");
    LocalMinimum {
        x,
        value,
        evaluations: evals,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iters: usize,
    /// Largest coordinate step per iteration.
    pub max_step: f64,
    pub grad_tol: f64,
    pub f_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            max_step: 2.0,
            grad_tol: 1e-6,
            f_tol: 1e-10,
        }
    }
}

/// Projected BFGS on a box. `fg` returns the objective and its gradient, or
/// `None` where the objective is undefined (treated as +inf during line
/// search). Returns `None` only if the start point itself is undefined.
pub fn projected_bfgs<T: Scalar>(
    mut fg: impl FnMut(&[T]) -> Option<(T, Vec<T>)>,
    x0: &[T],
    lower: &[T],
    upper: &[T],
    opts: BfgsOptions,
) -> Option<LocalMinimum<T>> {
    let n = x0.len();
    let mut x = x0.to_vec();
    clamp_into(&mut x, lower, upper);
    let mut evals = 1usize;
    let (mut f, mut g) = fg(&x).filter(|(v, g)| v.is_finite() && g.iter().all(|c| c.is_finite()))?;

    let mut h = identity(n);
    let armijo = T::lit(1e-4);
    let max_step = T::lit(opts.max_step);

    for _ in 0..opts.max_iters {
        let free: Vec<bool> = (0..n)
            .map(|i| {
                let at_lo = x[i] <= lower[i] && g[i] > T::zero();
                let at_hi = x[i] >= upper[i] && g[i] < T::zero();
                !(at_lo || at_hi) && lower[i] < upper[i]
            })
            .collect();
        let pg = (0..n)
            .filter(|&i| free[i])
            .map(|i| g[i].abs())
            .fold(T::zero(), T::max);
        if pg <= T::lit(opts.grad_tol) {
            break;
        }

        let mut d = direction(&h, &g, &free);
        let mut slope: T = d.iter().zip(&g).map(|(&a, &b)| a * b).sum();
        if !(slope < T::zero()) {
            h = identity(n);
            d = (0..n).map(|i| if free[i] { -g[i] } else { T::zero() }).collect();
            slope = d.iter().zip(&g).map(|(&a, &b)| a * b).sum();
            if !(slope < T::zero()) {
                break;
            }
        }
        let dmax = d.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        if dmax > max_step {
            let s = max_step / dmax;
            d.iter_mut().for_each(|v| *v *= s);
        }

        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..40 {
            let mut xn: Vec<T> = x.iter().zip(&d).map(|(&a, &b)| a + t * b).collect();
            clamp_into(&mut xn, lower, upper);
            evals += 1;
            if let Some((fnew, gnew)) = fg(&xn) {
                if fnew.is_finite() && gnew.iter().all(|c| c.is_finite()) {
                    let decrease: T = g.iter().zip(xn.iter().zip(&x)).map(|(&gi, (&a, &b))| gi * (a - b)).sum();
                    if fnew <= f + armijo * decrease {
                        accepted = Some((xn, fnew, gnew));
                        break;
                    }
                }
            }
            t *= T::lit(0.5);
        }
        let Some((xn, fnew, gnew)) = accepted else {
            break;
        };

        let s: Vec<T> = xn.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = gnew.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy: T = s.iter().zip(&y).map(|(&a, &b)| a * b).sum();
        if sy > T::lit(1e-12) {
            bfgs_update(&mut h, &s, &y, sy);
        }
        let converged = (f - fnew).abs() <= T::lit(opts.f_tol) * (T::one() + f.abs());
        x = xn;
        f = fnew;
        g = gnew;
        if converged {
            break;
        }
    }

    Some(LocalMinimum {
        x,
        value: f,
        evaluations: evals,
    })
}

fn identity<T: Scalar>(n: usize) -> Vec<Vec<T>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect()
}

fn direction<T: Scalar>(h: &[Vec<T>], g: &[T], free: &[bool]) -> Vec<T> {
    let n = g.len();
    (0..n)
        .map(|i| {
            if !free[i] {
                return T::zero();
            }
            -(0..n)
                .filter(|&j| free[j])
                .map(|j| h[i][j] * g[j])
                .fold(T::zero(), |a, v| a + v)
        })
        .collect()
}

fn bfgs_update<T: Scalar>(h: &mut [Vec<T>], s: &[T], y: &[T], sy: T) {
    let n = s.len();
    let rho = T::one() / sy;
    let hy: Vec<T> = (0..n)
        .map(|i| (0..n).map(|j| h[i][j] * y[j]).fold(T::zero(), |a, v| a + v))
        .collect();
    let yhy: T = y.iter().zip(&hy).map(|(&a, &b)| a * b).sum();
    let coef = (T::one() + rho * yhy) * rho;
    for i in 0..n {
        for j in 0..n {
            h[i][j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}
