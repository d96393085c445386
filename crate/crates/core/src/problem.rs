//! Black-box objective interface and the unit-cube ↔ raw-box mapping.

use crate::error::Error;
use crate::scalar::Scalar;

/// A minimization problem over a box. Optimizers work in `[0,1]^d` and map
/// to raw coordinates with [`Problem::to_raw`] before evaluating.
pub trait Problem<T: Scalar>: Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize {
        self.bounds().len()
    }

    fn bounds(&self) -> &[(T, T)];

    /// Evaluates at raw coordinates. Failures are recoverable: the caller
    /// substitutes another point.
    fn evaluate(&self, x: &[T]) -> Result<T, Error>;

    fn known_optimum(&self) -> Option<T> {
        None
    }

    fn to_raw(&self, unit: &[T]) -> Vec<T> {
        unit.iter()
            .zip(self.bounds())
            .map(|(&u, &(lo, hi))| lo + u * (hi - lo))
            .collect()
    }

    fn to_unit(&self, raw: &[T]) -> Vec<T> {
        raw.iter()
            .zip(self.bounds())
            .map(|(&x, &(lo, hi))| ((x - lo) / (hi - lo)).max(T::zero()).min(T::one()))
            .collect()
    }
}

/// Problem backed by a plain function pointer.
#[derive(Debug, Clone)]
pub struct FnProblem<T: Scalar> {
    pub name: String,
    pub bounds: Vec<(T, T)>,
    pub function: fn(&[T]) -> T,
    pub known_optimum: Option<T>,
}

impl<T: Scalar> FnProblem<T> {
    pub fn new(name: impl Into<String>, bounds: Vec<(T, T)>, function: fn(&[T]) -> T, known_optimum: Option<T>) -> Self {
        Self {
            name: name.into(),
            bounds,
            function,
            known_optimum,
        }
    }
}

impl<T: Scalar> Problem<T> for FnProblem<T> {
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

#[cfg(test)]
mod tests {
    use super::*;

    fn sum(x: &[f64]) -> f64 {
        x.iter().sum()
    }

    #[test]
    fn unit_raw_round_trip() {
        let p = FnProblem::new("sum", vec![(-5.12, 5.12), (0.0, std::f64::consts::PI), (-100.0, 100.0)], sum, None);
        for u in [[0.0, 0.5, 1.0], [0.123, 0.987, 0.5001]] {
            let raw = p.to_raw(&u);
            let back = p.to_unit(&raw);
            for (a, b) in u.iter().zip(&back) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn dimension_checked() {
        let p = FnProblem::new("sum", vec![(0.0, 1.0)], sum, None);
        assert!(p.evaluate(&[0.1, 0.2]).is_err());
        assert_eq!(p.evaluate(&[0.25]).unwrap(), 0.25);
    }
}
