use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dynsample::geometry::{convex_hull, delaunay, distance, hammersley, voronoi_vertices, Point};

fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

fn sub3(p: &[f64], q: &[f64]) -> [f64; 3] {
    [p[0] - q[0], p[1] - q[1], p[2] - q[2]]
}

/// Every triangle with all other points on one side is a facet; the volume is
/// the sum of the cones from an interior point over those facets.
fn brute_force_volume(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let mut inner = [0.0; 3];
    for p in points {
        for k in 0..3 {
            inner[k] += p[k] / n as f64;
        }
    }
    let mut volume = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (&points[i], &points[j], &points[k]);
                let side = |p: &[f64]| det3(sub3(b, a), sub3(c, a), sub3(p, a));
                let mut pos = false;
                let mut neg = false;
                for (m, p) in points.iter().enumerate() {
                    if m == i || m == j || m == k {
                        continue;
                    }
                    let s = side(p);
                    pos |= s > 0.0;
                    neg |= s < 0.0;
                }
                if !(pos && neg) {
                    volume += side(&inner).abs() / 6.0;
                }
            }
        }
    }
    volume
}

#[test]
fn hull_volume_matches_facet_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..10 {
        let raw: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.gen()).collect()).collect();
        let points: Vec<Point> = raw.iter().map(|p| Point::new(p.clone()).unwrap()).collect();
        let hull = convex_hull(&points).unwrap();
        let oracle = brute_force_volume(&raw);
        assert!((hull.volume - oracle).abs() < 1e-9, "{} vs {oracle}", hull.volume);
    }
}

#[test]
fn voronoi_vertices_are_empty_sphere_centers() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let points: Vec<Point> = (0..30).map(|_| Point::new(vec![rng.gen(), rng.gen(), rng.gen()]).unwrap()).collect();
    for v in voronoi_vertices(&points).unwrap() {
        for &i in &v.defining_indices {
            assert!((distance(v.vertex.coords(), points[i].coords()) - v.radius).abs() < 1e-9);
        }
        assert!(points.iter().all(|p| distance(v.vertex.coords(), p.coords()) >= v.radius * (1.0 - 1e-9)));
    }
}

fn point_set(d: usize) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(prop::collection::vec(0f64..1.0, d), d + 2..25)
        .prop_map(|rows| rows.into_iter().map(|r| Point::new(r).unwrap()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hull_contains_its_input(points in point_set(3)) {
        if let Ok(hull) = convex_hull(&points) {
            for p in &points {
                prop_assert!(hull.max_signed_distance(p.coords()) <= 1e-9);
            }
            prop_assert!(hull.volume >= 0.0);
        }
    }

    #[test]
    fn hull_volume_grows_with_points(points in point_set(2), extra in prop::collection::vec(0f64..1.0, 2)) {
        if let Ok(h) = convex_hull(&points) {
            let mut more = points.clone();
            more.push(Point::new(extra).unwrap());
            let g = convex_hull(&more).unwrap();
            prop_assert!(g.volume >= h.volume * (1.0 - 1e-12));
        }
    }

    #[test]
    fn delaunay_circumspheres_are_empty(points in point_set(2)) {
        if let Ok(simplices) = delaunay(&points) {
            for s in &simplices {
                for p in &points {
                    prop_assert!(distance(s.circumcenter.coords(), p.coords()) >= s.circumradius * (1.0 - 1e-9));
                }
            }
        }
    }

    #[test]
    fn hammersley_stays_in_unit_cube(n in 1usize..200, d in 1usize..7) {
        let pts = hammersley(n, d).unwrap();
        prop_assert_eq!(pts.len(), n);
        for p in &pts {
            prop_assert!(p.coords().iter().all(|v| (0.0..1.0).contains(v)));
        }
    }
}
