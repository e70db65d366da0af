//! Phase 3: fill empty regions inside the hull. Candidates come from the
//! Delaunay simplices of the seeds and are scored by how empty the balls
//! around their targets are.

use super::{Candidate, Provenance, SamplerError, Seed};
use crate::geometry::{distance, squared_distance, voronoi_vertices, GeometryError, Point};

/// One candidate per Voronoi vertex of the seeds. The target is the centroid
/// of the vertex's defining seeds; the vertex itself is kept alongside.
pub fn population_candidates(seeds: &[Seed]) -> Result<Vec<Candidate>, SamplerError> {
    let Some(first) = seeds.first() else {
        return Err(GeometryError::Empty.into());
    };
    let d = first.y_bar.dim();
    if seeds.len() < d + 1 {
        return Err(GeometryError::TooFewPoints { needed: d + 1, got: seeds.len() }.into());
    }
    let ys: Vec<Point> = seeds.iter().map(|s| s.y_bar.clone()).collect();
    let vertices = voronoi_vertices(&ys)?;

    let mut out = Vec::with_capacity(vertices.len());
    for v in vertices {
        let members: Vec<&Seed> = v.defining_indices.iter().map(|&i| &seeds[i]).collect();
        let k = members.len() as f64;
        let mut t = vec![0.0; d];
        let mut u = vec![0.0; first.u_bar.len()];
        for s in &members {
            t.iter_mut().zip(s.y_bar.iter()).for_each(|(a, b)| *a += b / k);
            u.iter_mut().zip(&s.u_bar).for_each(|(a, b)| *a += b / k);
        }
        let r = members.iter().map(|s| distance(&t, &s.y_bar)).fold(f64::INFINITY, f64::min);
        let mut runs: Vec<usize> = members.iter().map(|s| s.run_id).collect();
        runs.sort_unstable();
        out.push(Candidate {
            u_star: u,
            t_star: Point::new(t)?,
            score: 0.0,
            provenance: Provenance::Simplex { runs },
            l_star: None,
            r_star: r,
            voronoi_vertex: Some(v.vertex),
        });
    }
    Ok(out)
}

/// Cumulative counts `n_j` of samples within the closed ball of radius
/// `j * r_star` around `t_star`, for `j = 1..=kappa`.
pub fn count_in_balls<P: AsRef<[f64]>>(t_star: &[f64], r_star: f64, kappa: usize, samples: &[P]) -> Vec<usize> {
    let mut shell = vec![0usize; kappa];
    let radii2: Vec<f64> = (1..=kappa).map(|j| (j as f64 * r_star).powi(2)).collect();
    for s in samples {
        let d2 = squared_distance(t_star, s.as_ref());
        if let Some(j) = radii2.iter().position(|&r2| d2 <= r2) {
            shell[j] += 1;
        }
    }
    let mut acc = 0;
    shell
        .into_iter()
        .map(|n| {
            acc += n;
            acc
        })
        .collect()
}

/// `r* / (1 + sum_j w_j n_j)` with `w_j = (kappa - j + 1) / kappa`.
pub fn score_population(r_star: f64, counts: &[usize]) -> f64 {
    let kappa = counts.len() as f64;
    let penalty: f64 = counts
        .iter()
        .enumerate()
        .map(|(j, &n)| (kappa - j as f64) / kappa * n as f64)
        .sum();
    r_star / (1.0 + penalty)
}

/// Tracks relative changes of the mean phase-3 radius between iterations.
#[derive(Clone, Debug)]
pub struct RadiusPlateau {
    tol: f64,
    iters: usize,
    last: Option<f64>,
    streak: usize,
}

impl RadiusPlateau {
    pub fn new(tol: f64, iters: usize) -> Self {
        Self { tol, iters, last: None, streak: 0 }
    }

    /// Records the mean radius of a new iteration; true once the change has
    /// stayed below the tolerance for the configured number of iterations.
    pub fn push(&mut self, mean_r: f64) -> bool {
        if let Some(prev) = self.last {
            let change = if prev == 0.0 {
                if mean_r == 0.0 { 0.0 } else { f64::INFINITY }
            } else {
                ((mean_r - prev) / prev).abs()
            };
            if change < self.tol {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
        }
        self.last = Some(mean_r);
        self.streak >= self.iters
    }
}
