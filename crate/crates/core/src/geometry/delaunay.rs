//! Delaunay simplices by lifting to the paraboloid, and Voronoi vertices as
//! their circumcenters.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hull::quickhull;
use super::point::norm;
use super::simplex::{circumcenter, Simplex};
use super::{GeometryError, Point};

pub const MAX_DELAUNAY_DIM: usize = 6;

/// Joggle seed used by [`delaunay`].
pub const DEFAULT_JOGGLE_SEED: u64 = 0x005e_ed0f_de1a;

/// Joggle magnitudes relative to the bounding-box diagonal. The first
/// attempt is unperturbed.
const JOGGLE_SCHEDULE: [f64; 4] = [0.0, 1e-10, 1e-9, 1e-8];

/// Lifted facets whose normal has a last component above `-LOWER_NORMAL`
/// are treated as vertical. In unit-diagonal coordinates this drops simplices
/// whose circumcenter lies further than ~5e5 away.
const LOWER_NORMAL: f64 = 1e-6;

/// One Voronoi vertex: the center of the empty sphere through `d + 1` points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoronoiVertex {
    pub vertex: Point,
    pub defining_indices: Vec<usize>,
    pub radius: f64,
}

/// Delaunay simplices of `points` (dimension `1..=6`).
pub fn delaunay(points: &[Point]) -> Result<Vec<Simplex>, GeometryError> {
    delaunay_seeded(points, DEFAULT_JOGGLE_SEED)
}

/// As [`delaunay`], with an explicit seed for the degeneracy joggle.
///
/// Points are shifted and scaled into a unit-diagonal box, lifted to
/// `(p, |p|^2)`, and the lower facets of the lifted hull become simplices.
/// Co-spherical or otherwise degenerate inputs are retried with a seeded
/// random perturbation of growing magnitude; circumcenters always come from
/// the original coordinates.
pub fn delaunay_seeded(points: &[Point], seed: u64) -> Result<Vec<Simplex>, GeometryError> {
    let dim = points.first().map(Point::dim).ok_or(GeometryError::Empty)?;
    if dim > MAX_DELAUNAY_DIM {
        return Err(GeometryError::Dimension { dim, max: MAX_DELAUNAY_DIM });
    }
    if let Some(p) = points.iter().find(|p| p.dim() != dim) {
        return Err(GeometryError::DimensionMismatch { expected: dim, found: p.dim() });
    }
    if points.len() < dim + 1 {
        return Err(GeometryError::TooFewPoints { needed: dim + 1, got: points.len() });
    }

    let mut lo = points[0].to_vec();
    let mut hi = points[0].to_vec();
    for p in points {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let diag = norm(&lo.iter().zip(&hi).map(|(a, b)| b - a).collect::<Vec<_>>());
    if diag == 0.0 {
        return Err(GeometryError::Singular("all points coincide"));
    }
    let unit: Vec<Vec<f64>> = points
        .iter()
        .map(|p| (0..dim).map(|k| (p[k] - 0.5 * (lo[k] + hi[k])) / diag).collect())
        .collect();
    let required = first_occurrences(points);
    if required.len() < dim + 1 {
        return Err(GeometryError::Singular("fewer than d + 1 distinct points"));
    }
    if required.len() == dim + 1 {
        // the lifted hull would be flat; the distinct points are the only simplex
        let corners: Vec<&[f64]> = required.iter().map(|&i| points[i].coords()).collect();
        let (center, radius) = circumcenter(&corners)?;
        return Ok(vec![Simplex { vertex_indices: required, circumcenter: center, circumradius: radius }]);
    }

    let mut last_err = GeometryError::Singular("persistent degeneracy");
    for magnitude in JOGGLE_SCHEDULE {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lifted: Vec<Vec<f64>> = unit
            .iter()
            .map(|q| {
                let mut l: Vec<f64> = q
                    .iter()
                    .map(|&x| if magnitude > 0.0 { x + rng.gen_range(-magnitude..=magnitude) } else { x })
                    .collect();
                l.push(l.iter().map(|x| x * x).sum());
                l
            })
            .collect();
        match attempt(points, &lifted, dim, &required) {
            Ok(simplices) => return Ok(simplices),
            Err(e) => {
                log::debug!("delaunay attempt with joggle {magnitude:e} failed: {e}");
                last_err = e;
            }
        }
    }
    Err(match last_err {
        GeometryError::DegenerateHull(_) | GeometryError::Singular(_) => {
            GeometryError::Singular("persistent degeneracy after joggling")
        }
        other => other,
    })
}

/// Indices of points not exactly equal to an earlier point.
fn first_occurrences(points: &[Point]) -> Vec<usize> {
    let mut seen = HashSet::new();
    (0..points.len())
        .filter(|&i| seen.insert(points[i].iter().map(|c| c.to_bits()).collect::<Vec<_>>()))
        .collect()
}

fn attempt(
    points: &[Point],
    lifted: &[Vec<f64>],
    dim: usize,
    required: &[usize],
) -> Result<Vec<Simplex>, GeometryError> {
    let facets = quickhull(lifted, dim + 1)?;
    let mut simplices = Vec::new();
    let mut used = vec![false; points.len()];
    for f in facets.iter().filter(|f| f.normal[dim] < -LOWER_NORMAL) {
        let mut idx = f.vertices.clone();
        idx.sort_unstable();
        let corners: Vec<&[f64]> = idx.iter().map(|&i| points[i].coords()).collect();
        let (center, radius) = circumcenter(&corners)?;
        idx.iter().for_each(|&i| used[i] = true);
        simplices.push(Simplex { vertex_indices: idx, circumcenter: center, circumradius: radius });
    }
    if let Some(&missing) = required.iter().find(|&&i| !used[i]) {
        return Err(GeometryError::DegenerateHull(format!("point {missing} missing from triangulation")));
    }
    simplices.sort_by(|a, b| a.vertex_indices.cmp(&b.vertex_indices));
    Ok(simplices)
}

/// Voronoi vertices of `points`, one per Delaunay simplex. Vertices outside
/// the convex hull of the points are included.
pub fn voronoi_vertices(points: &[Point]) -> Result<Vec<VoronoiVertex>, GeometryError> {
    Ok(delaunay(points)?
        .into_iter()
        .map(|s| VoronoiVertex {
            vertex: s.circumcenter,
            defining_indices: s.vertex_indices,
            radius: s.circumradius,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point::distance;

    fn pts(raw: &[[f64; 2]]) -> Vec<Point> {
        raw.iter().copied().map(Point::from).collect()
    }

    #[test]
    fn single_triangle() {
        let s = delaunay(&pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].vertex_indices, vec![0, 1, 2]);
        assert!((s[0].circumcenter[0] - 0.5).abs() < 1e-12);
        assert!((s[0].circumcenter[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn square_splits_along_a_diagonal() {
        let p = pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let s = delaunay(&p).unwrap();
        assert_eq!(s.len(), 2);
        for simplex in &s {
            assert!(distance(&simplex.circumcenter, &[0.5, 0.5]) < 1e-12);
            // the fourth corner sits on the circle, not inside it
            let other = (0..4).find(|i| !simplex.vertex_indices.contains(i)).unwrap();
            let d = distance(&p[other], &simplex.circumcenter);
            assert!(d >= simplex.circumradius - 1e-9);
        }
        let mut shared: Vec<usize> = s[0]
            .vertex_indices
            .iter()
            .filter(|i| s[1].vertex_indices.contains(i))
            .copied()
            .collect();
        shared.sort_unstable();
        assert!(shared == vec![0, 3] || shared == vec![1, 2]);
    }

    #[test]
    fn one_dimensional_midpoints() {
        let p: Vec<Point> = [0.0, 3.0, 1.0].into_iter().map(|x| Point::from([x])).collect();
        let v = voronoi_vertices(&p).unwrap();
        let mut centers: Vec<f64> = v.iter().map(|v| v.vertex[0]).collect();
        centers.sort_by(f64::total_cmp);
        assert_eq!(centers, vec![0.5, 2.0]);
    }

    #[test]
    fn right_isosceles_voronoi() {
        let v = voronoi_vertices(&pts(&[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]])).unwrap();
        assert_eq!(v.len(), 1);
        assert!(distance(&v[0].vertex, &[1.0, 1.0]) < 1e-12);
        assert!((v[0].radius - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn collinear_points_fail() {
        let p = pts(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]);
        assert!(delaunay(&p).is_err());
    }

    #[test]
    fn duplicates_are_tolerated() {
        let p = pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.3, 0.3]]);
        let s = delaunay(&p).unwrap();
        assert!(s.iter().all(|s| !s.vertex_indices.contains(&3)));
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn grid_is_triangulated() {
        let mut raw = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                raw.push([i as f64, j as f64]);
            }
        }
        let p = pts(&raw);
        let s = delaunay(&p).unwrap();
        assert_eq!(s.len(), 32);
        let area: f64 = s
            .iter()
            .map(|s| {
                let [a, b, c] = [&p[s.vertex_indices[0]], &p[s.vertex_indices[1]], &p[s.vertex_indices[2]]];
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs()
            })
            .sum();
        assert!((area - 16.0).abs() < 1e-9);
    }
}
