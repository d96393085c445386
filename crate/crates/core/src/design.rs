//! Space-filling designs on the unit hypercube.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::scalar::Scalar;

/// Latin-hypercube sample of `n` points in `[0,1]^dim`: every axis is cut
/// into `n` equal strata and each stratum holds exactly one point.
pub fn latin_hypercube<T: Scalar, R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Vec<Vec<T>> {
    let mut points = vec![vec![T::zero(); dim]; n];
    if n == 0 {
        return points;
    }
    let scale = 1.0 / n as f64;
    let mut perm: Vec<usize> = (0..n).collect();
    for h in 0..dim {
        perm.shuffle(rng);
        for (i, &slot) in perm.iter().enumerate() {
            let u: f64 = rng.random();
            points[i][h] = T::lit(((slot as f64 + u) * scale).min(1.0));
        }
    }
    points
}

pub fn uniform_point<T: Scalar, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<T> {
    (0..dim).map(|_| T::lit(rng.random::<f64>())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_point_per_stratum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 17;
        let pts: Vec<Vec<f64>> = latin_hypercube(n, 4, &mut rng);
        for h in 0..4 {
            let mut strata: Vec<usize> = pts.iter().map(|p| (p[h] * n as f64) as usize).collect();
            strata.sort_unstable();
            assert_eq!(strata, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn empty_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(latin_hypercube::<f64, _>(0, 3, &mut rng).is_empty());
    }
}
