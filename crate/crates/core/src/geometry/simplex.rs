use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::point::{distance, sub};
use super::{GeometryError, Point};

/// `d + 1` points of a point set together with their circumsphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Simplex {
    pub vertex_indices: Vec<usize>,
    pub circumcenter: Point,
    pub circumradius: f64,
}

/// Relative determinant threshold below which a simplex counts as flat.
const SINGULAR_REL: f64 = 1e-12;

/// Center and radius of the sphere through `d + 1` points in `d` dimensions.
///
/// Solves `2 (p_i - p_0) . w = |p_i - p_0|^2` for `i = 1..=d` and returns
/// `p_0 + w`.
pub fn circumcenter<P: AsRef<[f64]>>(points: &[P]) -> Result<(Point, f64), GeometryError> {
    let first = points
        .first()
        .ok_or(GeometryError::TooFewPoints { needed: 2, got: 0 })?
        .as_ref();
    let dim = first.len();
    if points.len() != dim + 1 {
        return Err(GeometryError::TooFewPoints { needed: dim + 1, got: points.len() });
    }
    if let Some(p) = points.iter().find(|p| p.as_ref().len() != dim) {
        return Err(GeometryError::DimensionMismatch { expected: dim, found: p.as_ref().len() });
    }

    let rows: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p.as_ref(), first)).collect();
    let a = DMatrix::from_fn(dim, dim, |i, j| 2.0 * rows[i][j]);
    let b = DVector::from_iterator(dim, rows.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>()));

    let row_scale: f64 = (0..dim).map(|i| a.row(i).norm()).product();
    let lu = a.lu();
    let det = lu.determinant();
    if !det.is_finite() || row_scale == 0.0 || det.abs() <= SINGULAR_REL * row_scale {
        return Err(GeometryError::Singular("affinely dependent simplex"));
    }
    let w = lu
        .solve(&b)
        .ok_or(GeometryError::Singular("affinely dependent simplex"))?;

    let center: Vec<f64> = first.iter().zip(w.iter()).map(|(p, wi)| p + wi).collect();
    let radius = distance(&center, first);
    Ok((Point::new(center)?, radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn right_triangle() {
        let (c, r) = circumcenter(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_relative_eq!(c[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(c[1], 0.5, epsilon = 1e-15);
        assert_relative_eq!(r, 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn segment_midpoint() {
        let (c, r) = circumcenter(&[[0.0], [2.0]]).unwrap();
        assert_eq!(c[0], 1.0);
        assert_eq!(r, 1.0);
    }

    #[test]
    fn equilateral_triangle() {
        let s3 = 3f64.sqrt();
        let (c, r) = circumcenter(&[[0.0, 0.0], [2.0, 0.0], [1.0, s3]]).unwrap();
        assert_relative_eq!(c[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(c[1], 1.0 / s3, epsilon = 1e-14);
        assert_relative_eq!(r, 2.0 / s3, epsilon = 1e-14);
    }

    #[test]
    fn collinear_is_singular() {
        let err = circumcenter(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).unwrap_err();
        assert!(matches!(err, GeometryError::Singular(_)));
        assert!(circumcenter(&[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn wrong_point_count() {
        assert!(circumcenter(&[[0.0, 0.0], [1.0, 0.0]]).is_err());
    }
}
