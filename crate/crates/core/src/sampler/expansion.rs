//! Phase 2: push the hull of the seeds outward by simulating midpoints of
//! seed pairs that lie far from the seed center.

use super::{Candidate, Provenance, Seed};
use crate::geometry::{centroid, distance, Point};

/// Distance from `t_star` to the mean of the seeds (`l*`) and to the nearest
/// seed (`r*`). Both are infinite for an empty seed set.
pub fn expansion_metrics<P: AsRef<[f64]>>(t_star: &[f64], seeds: &[P]) -> (f64, f64) {
    if seeds.is_empty() {
        return (f64::INFINITY, f64::INFINITY);
    }
    let center = centroid(seeds);
    (distance(t_star, &center), nearest(t_star, seeds))
}

fn nearest<P: AsRef<[f64]>>(t_star: &[f64], seeds: &[P]) -> f64 {
    seeds.iter().map(|s| distance(t_star, s.as_ref())).fold(f64::INFINITY, f64::min)
}

pub fn score_expansion(l_star: f64, r_star: f64) -> f64 {
    l_star * r_star
}

/// Every pair of seeds as a scored candidate, in lexicographic pair order.
pub fn pair_candidates(seeds: &[Seed]) -> Vec<Candidate> {
    let ys: Vec<&[f64]> = seeds.iter().map(|s| s.y_bar.coords()).collect();
    if ys.is_empty() {
        return Vec::new();
    }
    let center = centroid(&ys);
    let mut out = Vec::with_capacity(seeds.len() * seeds.len().saturating_sub(1) / 2);
    for (i, a) in seeds.iter().enumerate() {
        for b in &seeds[i + 1..] {
            let t: Vec<f64> = a.y_bar.iter().zip(b.y_bar.iter()).map(|(p, q)| 0.5 * (p + q)).collect();
            let u: Vec<f64> = a.u_bar.iter().zip(&b.u_bar).map(|(p, q)| 0.5 * (p + q)).collect();
            let l = distance(&t, &center);
            let r = nearest(&t, &ys);
            let (lo, hi) = if a.run_id < b.run_id { (a.run_id, b.run_id) } else { (b.run_id, a.run_id) };
            out.push(Candidate {
                u_star: u,
                t_star: Point::new(t).expect("midpoint of finite seeds"),
                score: score_expansion(l, r),
                provenance: Provenance::Pair { runs: [lo, hi] },
                l_star: Some(l),
                r_star: r,
                voronoi_vertex: None,
            });
        }
    }
    out
}
