use serde::{Deserialize, Serialize};

use super::{SamplerError, SeedWeighting};
use crate::geometry::Point;
use crate::models::Trajectory;

/// Per-dimension min–max map onto `[0, 1]`. Dimensions without spread map
/// everything to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Normalizer {
    /// Bounds of the `subset` components over all `rows`.
    pub fn fit<'a, I>(rows: I, subset: &[usize]) -> Option<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut lower = vec![f64::INFINITY; subset.len()];
        let mut upper = vec![f64::NEG_INFINITY; subset.len()];
        let mut any = false;
        for row in rows {
            any = true;
            for (k, &i) in subset.iter().enumerate() {
                lower[k] = lower[k].min(row[i]);
                upper[k] = upper[k].max(row[i]);
            }
        }
        any.then_some(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Normalizes the already-extracted coordinates `x`.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }

    /// Picks the `subset` components of a full row, then normalizes them.
    pub fn normalize_subset(&self, row: &[f64], subset: &[usize]) -> Vec<f64> {
        let picked: Vec<f64> = subset.iter().map(|&i| row[i]).collect();
        self.normalize(&picked)
    }

    pub fn denormalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| lo + v * (hi - lo))
            .collect()
    }
}

/// The point representing one run in output space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub run_id: usize,
    pub epoch: usize,
    /// Weighted mean output, normalized.
    pub y_bar: Point,
    /// Mean control vector in unit input coordinates.
    pub u_bar: Vec<f64>,
}

/// Weighted mean of the trajectory's `subset` outputs in normalized
/// coordinates.
pub fn compute_seed(
    traj: &Trajectory,
    weighting: SeedWeighting,
    normalizer: &Normalizer,
    subset: &[usize],
) -> Result<Point, SamplerError> {
    if traj.outputs.is_empty() {
        return Err(SamplerError::EmptyTrajectory);
    }
    let mut acc = vec![0.0; subset.len()];
    let mut total = 0.0;
    for (k, y) in traj.outputs.iter().enumerate() {
        let w = weighting.weight(k);
        total += w;
        for (a, &i) in acc.iter_mut().zip(subset) {
            *a += w * y[i];
        }
    }
    acc.iter_mut().for_each(|a| *a /= total);
    Ok(Point::new(normalizer.normalize(&acc))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::RunStatus;

    fn traj(outputs: Vec<Vec<f64>>) -> Trajectory {
        let n = outputs.len();
        Trajectory {
            dt: 1.0,
            times: (0..n).map(|k| k as f64).collect(),
            states: outputs.clone(),
            controls: vec![vec![0.0]; n],
            outputs,
            status: RunStatus::Completed,
        }
    }

    fn identity(d: usize) -> Normalizer {
        Normalizer { lower: vec![0.0; d], upper: vec![1.0; d] }
    }

    #[test]
    fn constant_trajectory_seed() {
        let t = traj(vec![vec![3.0, -1.0]; 5]);
        let n = Normalizer { lower: vec![1.0, -2.0], upper: vec![5.0, 0.0] };
        for w in [SeedWeighting::Uniform, SeedWeighting::Discount { gamma: 0.3 }] {
            let s = compute_seed(&t, w, &n, &[0, 1]).unwrap();
            assert!((s[0] - 0.5).abs() < 1e-15 && (s[1] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn weighted_means() {
        let t = traj(vec![vec![0.0], vec![1.0]]);
        let s = compute_seed(&t, SeedWeighting::Uniform, &identity(1), &[0]).unwrap();
        assert_eq!(s[0], 0.5);

        let t = traj(vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0]]);
        let s = compute_seed(&t, SeedWeighting::Discount { gamma: 0.5 }, &identity(1), &[0]).unwrap();
        let expected = (0.875 + 0.9375) / (0.5 + 0.75 + 0.875 + 0.9375);
        assert!((s[0] - expected).abs() < 1e-15);
        assert!((s[0] - 0.5918).abs() < 1e-4);
    }

    #[test]
    fn empty_trajectory_is_an_error() {
        let t = traj(vec![]);
        assert!(matches!(
            compute_seed(&t, SeedWeighting::Uniform, &identity(1), &[0]),
            Err(SamplerError::EmptyTrajectory)
        ));
    }

    #[test]
    fn normalizer_round_trip_and_flat_dims() {
        let rows = [vec![1.0, 5.0, 2.0], vec![3.0, 5.0, 0.0]];
        let n = Normalizer::fit(rows.iter().map(|r| r.as_slice()), &[0, 1]).unwrap();
        assert_eq!(n.lower, vec![1.0, 5.0]);
        assert_eq!(n.normalize_subset(&rows[1], &[0, 1]), vec![1.0, 0.0]);
        assert_eq!(n.denormalize(&[0.5, 0.0]), vec![2.0, 5.0]);
        assert!(Normalizer::fit(std::iter::empty(), &[0]).is_none());
    }
}
