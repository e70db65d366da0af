//! Low-discrepancy and structured designs on the unit hypercube.

use super::{GeometryError, Point, MAX_DIM};

/// Prime bases for Hammersley coordinates 1..=6. Coordinate 0 is `i / n`.
const PRIMES: [u64; MAX_DIM - 1] = [2, 3, 5, 7, 11, 13];

/// Van der Corput radical inverse of `i` in `base`.
pub fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut factor = inv;
    let mut value = 0.0;
    while i > 0 {
        value += (i % base) as f64 * factor;
        i /= base;
        factor *= inv;
    }
    value
}

fn check_dim(d: usize) -> Result<(), GeometryError> {
    if d == 0 || d > MAX_DIM {
        return Err(GeometryError::Dimension { dim: d, max: MAX_DIM });
    }
    Ok(())
}

/// `n` Hammersley points in `[0,1]^d`.
///
/// Point `i` has coordinate 0 equal to `i / n`; coordinate `j >= 1` is the
/// radical inverse of `i` in the `j`-th prime.
pub fn hammersley(n: usize, d: usize) -> Result<Vec<Point>, GeometryError> {
    check_dim(d)?;
    if n == 0 {
        return Err(GeometryError::TooFewPoints { needed: 1, got: 0 });
    }
    Ok((0..n)
        .map(|i| {
            let mut coords = Vec::with_capacity(d);
            coords.push(i as f64 / n as f64);
            coords.extend(PRIMES[..d - 1].iter().map(|&b| radical_inverse(i as u64, b)));
            Point::new(coords).expect("hammersley coordinates are finite")
        })
        .collect())
}

/// The `2^d` corners of the unit hypercube followed by its `2d` face centers.
///
/// Corner `k` has coordinate `j` equal to bit `j` of `k`. Face centers come in
/// pairs per axis (that axis at 0, then at 1, every other coordinate at 0.5).
/// For `d = 1` face centers coincide with the corners.
pub fn corner_and_face_points(d: usize) -> Result<Vec<Point>, GeometryError> {
    check_dim(d)?;
    let mut out = Vec::with_capacity((1 << d) + 2 * d);
    for k in 0..(1usize << d) {
        let coords = (0..d).map(|j| ((k >> j) & 1) as f64).collect();
        out.push(Point::new(coords)?);
    }
    for axis in 0..d {
        for side in [0.0, 1.0] {
            let coords = (0..d).map(|j| if j == axis { side } else { 0.5 }).collect();
            out.push(Point::new(coords)?);
        }
    }
    Ok(out)
}

/// Removes exact coordinate duplicates, keeping the first occurrence.
pub fn dedup_exact(points: Vec<Point>) -> Vec<Point> {
    let mut seen = std::collections::HashSet::new();
    points
        .into_iter()
        .filter(|p| seen.insert(p.iter().map(|c| c.to_bits()).collect::<Vec<_>>()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Base-2 radical inverse by reversing the bits of a 32-bit index.
    fn bit_reversal_oracle(i: u32) -> f64 {
        i.reverse_bits() as f64 / 2f64.powi(32)
    }

    #[test]
    fn base_two_matches_bit_reversal() {
        for i in 0..1024u32 {
            assert_eq!(radical_inverse(i as u64, 2), bit_reversal_oracle(i));
        }
    }

    #[test]
    fn single_point_is_origin() {
        let pts = hammersley(1, 3).unwrap();
        assert_eq!(pts, vec![Point::from([0.0, 0.0, 0.0])]);
    }

    #[test]
    fn one_dimensional_is_regular_grid() {
        let pts: Vec<f64> = hammersley(4, 1).unwrap().iter().map(|p| p[0]).collect();
        assert_eq!(pts, vec![0.0, 0.25, 0.5, 0.75]);
    }

    #[test]
    fn two_dimensional_four_points() {
        let expected: Vec<Point> = (0..4u32)
            .map(|i| Point::from([i as f64 / 4.0, bit_reversal_oracle(i)]))
            .collect();
        let pts = hammersley(4, 2).unwrap();
        assert_eq!(pts, expected);
        assert_eq!(
            pts,
            vec![
                Point::from([0.0, 0.0]),
                Point::from([0.25, 0.5]),
                Point::from([0.5, 0.25]),
                Point::from([0.75, 0.75])
            ]
        );
    }

    #[test]
    fn base_three_digits() {
        // 5 = 12 in base 3 -> 0.21 in base 3 = 2/3 + 1/9
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn dimension_bounds() {
        assert!(hammersley(4, 0).is_err());
        assert!(hammersley(4, 8).is_err());
        assert_eq!(hammersley(3, 7).unwrap()[2].dim(), 7);
        assert!(corner_and_face_points(8).is_err());
    }

    #[test]
    fn points_are_distinct_and_deterministic() {
        let a = hammersley(200, 5).unwrap();
        assert_eq!(a, hammersley(200, 5).unwrap());
        assert_eq!(dedup_exact(a.clone()).len(), a.len());
    }

    #[test]
    fn corners_and_faces_in_two_dims() {
        let pts = corner_and_face_points(2).unwrap();
        let expected: Vec<Point> = [
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [1.0, 1.0],
            [0.0, 0.5],
            [1.0, 0.5],
            [0.5, 0.0],
            [0.5, 1.0],
        ]
        .into_iter()
        .map(Point::from)
        .collect();
        assert_eq!(pts, expected);
    }

    #[test]
    fn corner_face_counts() {
        for d in 1..=7 {
            assert_eq!(corner_and_face_points(d).unwrap().len(), (1 << d) + 2 * d);
        }
        let one = corner_and_face_points(1).unwrap();
        assert_eq!(dedup_exact(one), vec![Point::from([0.0]), Point::from([1.0])]);
    }
}
