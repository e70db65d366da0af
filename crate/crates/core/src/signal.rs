//! FAPRBS excitation: concatenated amplitude-modulated pseudo-random binary
//! segments with different hold durations, drawn around a mean input.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("control channel {channel}: {reason}")]
    InvalidBounds { channel: usize, reason: String },
    #[error("expected {expected} control channels, got {found}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("signal needs at least one segment")]
    NoSegments,
    #[error("segment {index}: {reason}")]
    InvalidSegment { index: usize, reason: String },
    #[error("mean input for channel {channel} ({value}) lies outside [{lower}, {upper}]")]
    MeanOutOfBounds { channel: usize, value: f64, lower: f64, upper: f64 },
    #[error("time {t} outside signal range [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },
}

/// `n_holds` plateaus of `hold_duration` seconds each.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaprbsSegment {
    pub hold_duration: f64,
    pub n_holds: usize,
}

impl FaprbsSegment {
    pub fn new(hold_duration: f64, n_holds: usize) -> Self {
        Self { hold_duration, n_holds }
    }

    pub fn duration(&self) -> f64 {
        self.hold_duration * self.n_holds as f64
    }
}

/// Per-channel control box plus the FAPRBS amplitude, in engineering units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub faprbs_amplitude: Vec<f64>,
}

impl ControlBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, faprbs_amplitude: Vec<f64>) -> Result<Self, SignalError> {
        let bounds = Self { lower, upper, faprbs_amplitude };
        bounds.validate()?;
        Ok(bounds)
    }

    pub fn n_channels(&self) -> usize {
        self.lower.len()
    }

    /// Checks `lower < upper` and `0 < amplitude <= (upper - lower) / 2` per channel.
    pub fn validate(&self) -> Result<(), SignalError> {
        let n = self.lower.len();
        if n == 0 {
            return Err(SignalError::InvalidBounds { channel: 0, reason: "no control channels".into() });
        }
        for found in [self.upper.len(), self.faprbs_amplitude.len()] {
            if found != n {
                return Err(SignalError::ChannelMismatch { expected: n, found });
            }
        }
        for c in 0..n {
            let (lo, hi, a) = (self.lower[c], self.upper[c], self.faprbs_amplitude[c]);
            let bad = |reason: String| Err(SignalError::InvalidBounds { channel: c, reason });
            if !(lo.is_finite() && hi.is_finite() && a.is_finite()) {
                return bad("bounds and amplitude must be finite".into());
            }
            if lo >= hi {
                return bad(format!("lower bound {lo} is not below upper bound {hi}"));
            }
            if a <= 0.0 {
                return bad(format!("amplitude {a} must be positive"));
            }
            if a > 0.5 * (hi - lo) {
                return bad(format!("amplitude {a} exceeds half the range ({})", 0.5 * (hi - lo)));
            }
        }
        Ok(())
    }

    /// Maps engineering units to `[0,1]` per channel.
    pub fn to_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(c, x)| (x - self.lower[c]) / (self.upper[c] - self.lower[c]))
            .collect()
    }

    /// Maps `[0,1]` coordinates back to engineering units.
    pub fn from_unit(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(c, x)| self.lower[c] + x * (self.upper[c] - self.lower[c]))
            .collect()
    }
}

/// Piecewise-constant multichannel input. All channels switch together.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    breakpoints: Vec<f64>,
    levels: Vec<Vec<f64>>,
    mean_u: Vec<f64>,
    duration: f64,
}

impl ControlSignal {
    /// A single plateau at `u` lasting `duration`.
    pub fn constant(u: Vec<f64>, duration: f64) -> Self {
        Self { breakpoints: vec![0.0], levels: vec![u.clone()], mean_u: u, duration }
    }

    /// Start time of every plateau; the first is always 0.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn mean_u(&self) -> &[f64] {
        &self.mean_u
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn n_channels(&self) -> usize {
        self.mean_u.len()
    }

    /// Plateau lengths in order.
    pub fn plateau_lengths(&self) -> Vec<f64> {
        let mut ends = self.breakpoints[1..].to_vec();
        ends.push(self.duration);
        ends.iter().zip(&self.breakpoints).map(|(e, s)| e - s).collect()
    }

    fn time_tolerance(&self) -> f64 {
        1e-9 * self.duration.max(1.0)
    }

    /// Level of the plateau containing `t`. Plateaus are right-open, so a
    /// breakpoint time returns the new level; `t == duration` returns the last.
    /// Times within a relative 1e-9 of a breakpoint snap to it.
    pub fn sample_at(&self, t: f64) -> Result<&[f64], SignalError> {
        let tol = self.time_tolerance();
        if !(t >= -tol && t <= self.duration + tol) {
            return Err(SignalError::TimeOutOfRange { t, duration: self.duration });
        }
        let k = self.breakpoints.partition_point(|&b| b <= t + tol);
        Ok(&self.levels[k.saturating_sub(1)])
    }
}

/// Draws a FAPRBS around `mean_u`.
///
/// Every plateau level is drawn per channel uniformly from
/// `[mean - A, mean + A]` and then clipped to `[lower, upper]`. Segments are
/// concatenated in order. The result depends only on the arguments.
pub fn generate_faprbs(
    mean_u: &[f64],
    segments: &[FaprbsSegment],
    bounds: &ControlBounds,
    rng_seed: u64,
) -> Result<ControlSignal, SignalError> {
    bounds.validate()?;
    let n = bounds.n_channels();
    if mean_u.len() != n {
        return Err(SignalError::ChannelMismatch { expected: n, found: mean_u.len() });
    }
    for (c, &m) in mean_u.iter().enumerate() {
        let (lower, upper) = (bounds.lower[c], bounds.upper[c]);
        if !(m >= lower && m <= upper) {
            return Err(SignalError::MeanOutOfBounds { channel: c, value: m, lower, upper });
        }
    }
    validate_segments(segments)?;

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let total: usize = segments.iter().map(|s| s.n_holds).sum();
    let mut breakpoints = Vec::with_capacity(total);
    let mut levels = Vec::with_capacity(total);
    let mut segment_start = 0.0;
    for seg in segments {
        for j in 0..seg.n_holds {
            breakpoints.push(segment_start + j as f64 * seg.hold_duration);
            let level = (0..n)
                .map(|c| {
                    let a = bounds.faprbs_amplitude[c];
                    (mean_u[c] + rng.gen_range(-a..=a)).clamp(bounds.lower[c], bounds.upper[c])
                })
                .collect();
            levels.push(level);
        }
        segment_start += seg.duration();
    }
    Ok(ControlSignal { breakpoints, levels, mean_u: mean_u.to_vec(), duration: segment_start })
}

pub fn validate_segments(segments: &[FaprbsSegment]) -> Result<(), SignalError> {
    if segments.is_empty() {
        return Err(SignalError::NoSegments);
    }
    for (index, s) in segments.iter().enumerate() {
        if !(s.hold_duration.is_finite() && s.hold_duration > 0.0) {
            return Err(SignalError::InvalidSegment { index, reason: "hold duration must be positive".into() });
        }
        if s.n_holds == 0 {
            return Err(SignalError::InvalidSegment { index, reason: "needs at least one hold".into() });
        }
    }
    Ok(())
}

/// Total duration of a segment list.
pub fn total_duration(segments: &[FaprbsSegment]) -> f64 {
    segments.iter().map(FaprbsSegment::duration).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_segments() -> Vec<FaprbsSegment> {
        vec![FaprbsSegment::new(10.0, 30), FaprbsSegment::new(40.0, 10)]
    }

    fn bounds3() -> ControlBounds {
        ControlBounds::new(vec![5000.0, 59.0, 0.05], vec![6000.0, 89.0, 0.07], vec![200.0, 6.0, 0.004]).unwrap()
    }

    #[test]
    fn two_frequency_structure() {
        let s = generate_faprbs(&[5500.0, 74.0, 0.06], &two_segments(), &bounds3(), 9).unwrap();
        assert_eq!(s.levels().len(), 40);
        assert_eq!(s.duration(), 700.0);
        let lengths = s.plateau_lengths();
        assert!(lengths[..30].iter().all(|&l| l == 10.0));
        assert!(lengths[30..].iter().all(|&l| l == 40.0));
        let changes = s.levels().windows(2).filter(|w| w[0] != w[1]).count();
        assert!(changes <= 39);
    }

    #[test]
    fn clipping_at_lower_bound() {
        let b = ControlBounds::new(vec![0.05], vec![0.07], vec![0.004]).unwrap();
        let s = generate_faprbs(&[0.05], &two_segments(), &b, 3).unwrap();
        assert!(s.levels().iter().all(|l| (0.05..=0.054).contains(&l[0])));
        assert!(s.levels().iter().any(|l| l[0] == 0.05));
    }

    #[test]
    fn single_plateau_is_constant() {
        let b = ControlBounds::new(vec![0.0], vec![1.0], vec![0.1]).unwrap();
        let s = generate_faprbs(&[0.5], &[FaprbsSegment::new(5.0, 1)], &b, 0).unwrap();
        assert_eq!(s.levels().len(), 1);
        let level = s.levels()[0][0];
        assert!((0.4..=0.6).contains(&level));
        for t in [0.0, 2.5, 5.0] {
            assert_eq!(s.sample_at(t).unwrap()[0], level);
        }
    }

    #[test]
    fn sample_at_conventions() {
        let b = ControlBounds::new(vec![0.0], vec![1.0], vec![0.5]).unwrap();
        let s = generate_faprbs(&[0.5], &[FaprbsSegment::new(1.0, 5)], &b, 11).unwrap();
        assert_eq!(s.sample_at(0.0).unwrap(), s.levels()[0].as_slice());
        for k in 0..4 {
            assert_eq!(s.sample_at((k + 1) as f64).unwrap(), s.levels()[k + 1].as_slice());
            assert_eq!(s.sample_at(k as f64 + 0.999).unwrap(), s.levels()[k].as_slice());
        }
        assert_eq!(s.sample_at(5.0).unwrap(), s.levels()[4].as_slice());
        // 0.1 * 30 = 3.0000000000000004 still lands on plateau 3
        assert_eq!(s.sample_at(0.1 * 30.0).unwrap(), s.levels()[3].as_slice());
        assert!(s.sample_at(-0.1).is_err());
        assert!(s.sample_at(5.1).is_err());
    }

    #[test]
    fn amplitude_rule_names_channel() {
        let err = ControlBounds::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![0.1, 0.6]).unwrap_err();
        assert!(matches!(err, SignalError::InvalidBounds { channel: 1, .. }));
        assert!(err.to_string().contains("channel 1"));
        assert!(ControlBounds::new(vec![1.0], vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let b = bounds3();
        assert_eq!(generate_faprbs(&[5500.0, 74.0, 0.06], &[], &b, 0), Err(SignalError::NoSegments));
        assert!(matches!(
            generate_faprbs(&[4000.0, 74.0, 0.06], &two_segments(), &b, 0),
            Err(SignalError::MeanOutOfBounds { channel: 0, .. })
        ));
        assert!(generate_faprbs(&[5500.0], &two_segments(), &b, 0).is_err());
        assert!(generate_faprbs(&[5500.0, 74.0, 0.06], &[FaprbsSegment::new(1.0, 0)], &b, 0).is_err());
    }

    proptest! {
        #[test]
        fn invariants_hold(
            seed in any::<u64>(),
            frac in proptest::collection::vec(0.0f64..=1.0, 3),
            holds in proptest::collection::vec((1u32..20, 1usize..15), 1..4),
        ) {
            let b = bounds3();
            let mean = b.from_unit(&frac);
            let segments: Vec<FaprbsSegment> =
                holds.iter().map(|&(h, n)| FaprbsSegment::new(h as f64 * 0.5, n)).collect();
            let s = generate_faprbs(&mean, &segments, &b, seed).unwrap();

            prop_assert_eq!(&s, &generate_faprbs(&mean, &segments, &b, seed).unwrap());
            prop_assert_eq!(s.duration(), total_duration(&segments));
            for level in s.levels() {
                for c in 0..3 {
                    prop_assert!(level[c] >= b.lower[c] && level[c] <= b.upper[c]);
                    prop_assert!((level[c] - mean[c]).abs() <= b.faprbs_amplitude[c] * (1.0 + 1e-12));
                }
            }
            let mut got = s.plateau_lengths();
            let mut want: Vec<f64> = segments
                .iter()
                .flat_map(|seg| std::iter::repeat_n(seg.hold_duration, seg.n_holds))
                .collect();
            got.sort_by(f64::total_cmp);
            want.sort_by(f64::total_cmp);
            prop_assert_eq!(got, want);
        }
    }
}
