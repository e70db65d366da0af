use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::point::distance;
use super::{GeometryError, Point};

/// Distance from `q` to the closest of `points` and that point's index.
/// Ties go to the lowest index.
pub fn nearest_distance(q: &[f64], points: &[Point]) -> Result<(f64, usize), GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::Empty);
    }
    let mut best = (f64::INFINITY, 0);
    for (i, p) in points.iter().enumerate() {
        if p.dim() != q.len() {
            return Err(GeometryError::DimensionMismatch { expected: q.len(), found: p.dim() });
        }
        let d = distance(q, p);
        if d < best.0 {
            best = (d, i);
        }
    }
    Ok(best)
}

/// Monte-Carlo estimate of `E|X - Y|` for `X`, `Y` uniform on `[0,1]^d`.
pub fn mean_pairwise_distance_unit_cube(d: usize, n_mc: usize, rng_seed: u64) -> Result<f64, GeometryError> {
    if d == 0 {
        return Err(GeometryError::Dimension { dim: 0, max: usize::MAX });
    }
    if n_mc == 0 {
        return Err(GeometryError::TooFewPoints { needed: 1, got: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut x = vec![0.0; d];
    let mut y = vec![0.0; d];
    let mut total = 0.0;
    for _ in 0..n_mc {
        x.iter_mut().for_each(|v| *v = rng.gen());
        y.iter_mut().for_each(|v| *v = rng.gen());
        total += distance(&x, &y);
    }
    Ok(total / n_mc as f64)
}
