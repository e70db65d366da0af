//! Quickhull in up to seven dimensions.
//!
//! Facets are simplicial: each stores `dim` vertex indices, an outward unit
//! normal, and the neighbor across each of its ridges (`neighbors[i]` is the
//! facet sharing every vertex except `vertices[i]`). The centroid of the
//! initial simplex stays strictly inside the growing hull and orients every
//! new facet.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::point::{centroid, dot, norm, sub};
use super::{GeometryError, Point, MAX_DIM};

/// Points closer than `EPS_REL * scale` to a facet plane count as on it.
const EPS_REL: f64 = 1e-12;
/// Post-construction containment tolerance, relative to the point scale.
const CONTAIN_REL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullFacet {
    pub vertices: Vec<usize>,
    /// Outward unit normal.
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HullFacet {
    /// Positive outside the hull, negative inside.
    pub fn signed_distance(&self, p: &[f64]) -> f64 {
        dot(&self.normal, p) - self.offset
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexHull {
    pub dim: usize,
    /// Sorted indices of the input points that are hull vertices.
    pub vertices: Vec<usize>,
    pub facets: Vec<HullFacet>,
    pub volume: f64,
}

impl ConvexHull {
    /// Largest signed facet distance of `p`; `<= 0` means inside or on the hull.
    pub fn max_signed_distance(&self, p: &[f64]) -> f64 {
        self.facets
            .iter()
            .map(|f| f.signed_distance(p))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Convex hull of `points` (dimension `1..=7`).
///
/// Needs at least `d + 1` affinely independent points; otherwise returns
/// [`GeometryError::DegenerateHull`].
pub fn convex_hull(points: &[Point]) -> Result<ConvexHull, GeometryError> {
    let dim = points.first().map(Point::dim).ok_or(GeometryError::Empty)?;
    if dim > MAX_DIM {
        return Err(GeometryError::Dimension { dim, max: MAX_DIM });
    }
    if let Some(p) = points.iter().find(|p| p.dim() != dim) {
        return Err(GeometryError::DimensionMismatch { expected: dim, found: p.dim() });
    }
    let facets = quickhull(points, dim)?;

    let mut vertices: Vec<usize> = facets.iter().flat_map(|f| f.vertices.iter().copied()).collect();
    vertices.sort_unstable();
    vertices.dedup();

    let center = centroid(&vertices.iter().map(|&i| points[i].coords()).collect::<Vec<_>>());
    let volume = fan_volume(points, &facets, &center);
    Ok(ConvexHull { dim, vertices, facets, volume })
}

/// Sum of simplex volumes spanned by `apex` and each facet.
fn fan_volume<P: AsRef<[f64]>>(points: &[P], facets: &[HullFacet], apex: &[f64]) -> f64 {
    let dim = apex.len();
    let factorial: f64 = (1..=dim).map(|k| k as f64).product();
    facets
        .iter()
        .map(|f| {
            let m = DMatrix::from_fn(dim, dim, |r, c| points[f.vertices[r]].as_ref()[c] - apex[c]);
            m.determinant().abs()
        })
        .sum::<f64>()
        / factorial
}

struct Facet {
    vertices: Vec<usize>,
    neighbors: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

impl Facet {
    fn distance(&self, p: &[f64]) -> f64 {
        dot(&self.normal, p) - self.offset
    }
}

struct Builder<'a, P> {
    points: &'a [P],
    dim: usize,
    eps: f64,
    interior: Vec<f64>,
    facets: Vec<Facet>,
}

/// Removes from `v` its components along the orthonormal `basis` (two passes).
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let proj = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, bi)| *x -= proj * bi);
        }
    }
}

pub(crate) fn quickhull<P: AsRef<[f64]>>(points: &[P], dim: usize) -> Result<Vec<HullFacet>, GeometryError> {
    if dim == 0 {
        return Err(GeometryError::Dimension { dim, max: MAX_DIM });
    }
    if points.len() < dim + 1 {
        return Err(GeometryError::TooFewPoints { needed: dim + 1, got: points.len() });
    }
    if points.iter().any(|p| p.as_ref().iter().any(|c| !c.is_finite())) {
        return Err(GeometryError::NonFinite);
    }
    let scale = points
        .iter()
        .flat_map(|p| p.as_ref().iter())
        .fold(0.0f64, |m, c| m.max(c.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };

    let mut builder = Builder {
        points,
        dim,
        eps: EPS_REL * scale,
        interior: Vec::new(),
        facets: Vec::new(),
    };
    let simplex = builder.initial_simplex()?;
    builder.build_initial_facets(&simplex)?;
    builder.expand()?;

    let hull: Vec<HullFacet> = builder
        .facets
        .into_iter()
        .filter(|f| f.alive)
        .map(|f| HullFacet { vertices: f.vertices, normal: f.normal, offset: f.offset })
        .collect();

    let tol = CONTAIN_REL * scale;
    for p in points {
        if hull.iter().any(|f| f.signed_distance(p.as_ref()) > tol) {
            return Err(GeometryError::DegenerateHull("point left outside the constructed hull".into()));
        }
    }
    Ok(hull)
}

impl<P: AsRef<[f64]>> Builder<'_, P> {
    fn pt(&self, i: usize) -> &[f64] {
        self.points[i].as_ref()
    }

    /// Picks `dim + 1` affinely independent points with large spread.
    fn initial_simplex(&self) -> Result<Vec<usize>, GeometryError> {
        let n = self.points.len();
        let (mut best_extent, mut lo, mut hi) = (-1.0, 0, 0);
        for axis in 0..self.dim {
            let (mut imin, mut imax) = (0, 0);
            for i in 1..n {
                if self.pt(i)[axis] < self.pt(imin)[axis] {
                    imin = i;
                }
                if self.pt(i)[axis] > self.pt(imax)[axis] {
                    imax = i;
                }
            }
            let extent = self.pt(imax)[axis] - self.pt(imin)[axis];
            if extent > best_extent {
                (best_extent, lo, hi) = (extent, imin, imax);
            }
        }
        if best_extent <= self.eps {
            return Err(GeometryError::DegenerateHull("all points coincide".into()));
        }

        let origin = self.pt(lo).to_vec();
        let mut chosen = vec![lo, hi];
        let first = sub(self.pt(hi), &origin);
        let first_norm = norm(&first);
        let mut basis = vec![first.iter().map(|x| x / first_norm).collect::<Vec<_>>()];

        while chosen.len() < self.dim + 1 {
            let mut best: Option<(usize, f64, Vec<f64>)> = None;
            for i in 0..n {
                let mut r = sub(self.pt(i), &origin);
                orthogonalize(&mut r, &basis);
                let h = norm(&r);
                if best.as_ref().is_none_or(|b| h > b.1) {
                    best = Some((i, h, r));
                }
            }
            let (i, h, r) = best.expect("non-empty point set");
            if h <= self.eps {
                return Err(GeometryError::DegenerateHull(format!(
                    "points span only {} of {} dimensions",
                    chosen.len() - 1,
                    self.dim
                )));
            }
            chosen.push(i);
            basis.push(r.iter().map(|x| x / h).collect());
        }
        Ok(chosen)
    }

    /// Outward hyperplane through `vertices`, oriented away from the interior point.
    fn hyperplane(&self, vertices: &[usize]) -> Option<(Vec<f64>, f64)> {
        let p0 = self.pt(vertices[0]);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(self.dim - 1);
        for &v in &vertices[1..] {
            let mut e = sub(self.pt(v), p0);
            orthogonalize(&mut e, &basis);
            let len = norm(&e);
            if len <= self.eps * 1e-3 {
                return None;
            }
            basis.push(e.iter().map(|x| x / len).collect());
        }
        let mut w = sub(p0, &self.interior);
        orthogonalize(&mut w, &basis);
        let len = norm(&w);
        if len <= self.eps * 1e-3 {
            return None;
        }
        let normal: Vec<f64> = w.iter().map(|x| x / len).collect();
        let offset = dot(&normal, p0);
        Some((normal, offset))
    }

    fn build_initial_facets(&mut self, simplex: &[usize]) -> Result<(), GeometryError> {
        self.interior = centroid(&simplex.iter().map(|&i| self.pt(i)).collect::<Vec<_>>());
        // Facet j omits simplex vertex j; its neighbor across vertex s_i is facet i.
        for j in 0..simplex.len() {
            let idx: Vec<usize> = (0..simplex.len()).filter(|&i| i != j).collect();
            let vertices: Vec<usize> = idx.iter().map(|&i| simplex[i]).collect();
            let (normal, offset) = self
                .hyperplane(&vertices)
                .ok_or_else(|| GeometryError::DegenerateHull("flat initial simplex".into()))?;
            self.facets.push(Facet {
                vertices,
                neighbors: idx,
                normal,
                offset,
                outside: Vec::new(),
                alive: true,
            });
        }
        let in_simplex = |i: usize| simplex.contains(&i);
        for i in (0..self.points.len()).filter(|&i| !in_simplex(i)) {
            if let Some(f) = self.best_facet(i, 0..self.facets.len()) {
                self.facets[f].outside.push(i);
            }
        }
        Ok(())
    }

    /// The facet among `candidates` that `i` lies furthest above, if any.
    fn best_facet(&self, i: usize, candidates: impl Iterator<Item = usize>) -> Option<usize> {
        let p = self.pt(i);
        let mut best: Option<(usize, f64)> = None;
        for f in candidates {
            let d = self.facets[f].distance(p);
            if d > self.eps && best.is_none_or(|b| d > b.1) {
                best = Some((f, d));
            }
        }
        best.map(|b| b.0)
    }

    fn expand(&mut self) -> Result<(), GeometryError> {
        let mut pending: Vec<usize> = (0..self.facets.len())
            .filter(|&f| !self.facets[f].outside.is_empty())
            .collect();

        while let Some(start) = pending.pop() {
            if !self.facets[start].alive || self.facets[start].outside.is_empty() {
                continue;
            }
            let eye = {
                let f = &self.facets[start];
                *f.outside
                    .iter()
                    .max_by(|&&a, &&b| f.distance(self.pt(a)).total_cmp(&f.distance(self.pt(b))))
                    .expect("non-empty outside set")
            };

            let visible = self.visible_set(start, eye);
            let mut is_visible = vec![false; self.facets.len()];
            visible.iter().for_each(|&f| is_visible[f] = true);

            let new_ids = self.stitch_horizon(&visible, &is_visible, eye)?;

            let mut orphans = Vec::new();
            for &f in &visible {
                self.facets[f].alive = false;
                orphans.append(&mut self.facets[f].outside);
            }
            for i in orphans.into_iter().filter(|&i| i != eye) {
                if let Some(f) = self.best_facet(i, new_ids.iter().copied()) {
                    self.facets[f].outside.push(i);
                }
            }
            pending.extend(new_ids.into_iter().filter(|&f| !self.facets[f].outside.is_empty()));
        }
        Ok(())
    }

    fn visible_set(&self, start: usize, eye: usize) -> Vec<usize> {
        let p = self.pt(eye);
        let mut visited = vec![false; self.facets.len()];
        visited[start] = true;
        let mut visible = vec![start];
        let mut stack = vec![start];
        while let Some(f) = stack.pop() {
            for &n in &self.facets[f].neighbors {
                if !visited[n] {
                    visited[n] = true;
                    if self.facets[n].distance(p) > self.eps {
                        visible.push(n);
                        stack.push(n);
                    }
                }
            }
        }
        visible
    }

    /// Creates one facet per horizon ridge joined to `eye` and wires up neighbors.
    fn stitch_horizon(
        &mut self,
        visible: &[usize],
        is_visible: &[bool],
        eye: usize,
    ) -> Result<Vec<usize>, GeometryError> {
        let mut new_ids = Vec::new();
        let mut open: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();

        for &f in visible {
            for pos in 0..self.dim {
                let across = self.facets[f].neighbors[pos];
                if is_visible[across] {
                    continue;
                }
                let ridge: Vec<usize> = self.facets[f]
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != pos)
                    .map(|(_, &v)| v)
                    .collect();
                let mut vertices = ridge.clone();
                vertices.push(eye);
                let (normal, offset) = self
                    .hyperplane(&vertices)
                    .ok_or_else(|| GeometryError::DegenerateHull("flat facet at horizon".into()))?;

                let id = self.facets.len();
                let mut neighbors = vec![usize::MAX; self.dim];
                neighbors[self.dim - 1] = across;
                let slot = self.facets[across]
                    .neighbors
                    .iter()
                    .position(|&n| n == f)
                    .expect("neighbor relation is symmetric");
                self.facets[across].neighbors[slot] = id;

                for k in 0..ridge.len() {
                    let mut key: Vec<usize> = ridge
                        .iter()
                        .enumerate()
                        .filter(|&(m, _)| m != k)
                        .map(|(_, &v)| v)
                        .collect();
                    key.sort_unstable();
                    match open.remove(&key) {
                        Some((other, other_pos)) => {
                            neighbors[k] = other;
                            self.facets[other].neighbors[other_pos] = id;
                        }
                        None => {
                            open.insert(key, (id, k));
                        }
                    }
                }
                self.facets.push(Facet {
                    vertices,
                    neighbors,
                    normal,
                    offset,
                    outside: Vec::new(),
                    alive: true,
                });
                new_ids.push(id);
            }
        }
        if !open.is_empty() {
            return Err(GeometryError::DegenerateHull("horizon is not a closed ridge cycle".into()));
        }
        Ok(new_ids)
    }
}
