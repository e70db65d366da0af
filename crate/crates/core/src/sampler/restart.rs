//! Phase 4: choose the initial condition of the next epoch from states that
//! earlier runs actually visited.

use serde::{Deserialize, Serialize};

use super::Normalizer;
use crate::geometry::{distance, squared_distance};
use crate::models::Trajectory;

/// A recorded state chosen as the next initial condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartPoint {
    /// Full state vector, copied from the trajectory.
    pub state: Vec<f64>,
    /// Index into the trajectories passed to [`phase4_next_ic`].
    pub trajectory: usize,
    pub sample: usize,
    /// Normalized distance to the center of all recorded states.
    pub distance_to_center: f64,
}

/// Picks the recorded state farthest from the center of all recorded states
/// (normalized over `state_subset`) that keeps at least `min_distance` to every
/// used initial condition. Only completed trajectories supply candidates;
/// all trajectories contribute to the center and the normalization.
pub fn phase4_next_ic(
    trajectories: &[&Trajectory],
    used_ics: &[Vec<f64>],
    state_subset: &[usize],
    min_distance: f64,
) -> Option<RestartPoint> {
    let rows = trajectories.iter().flat_map(|t| t.states.iter().map(Vec::as_slice));
    let normalizer = Normalizer::fit(rows, state_subset)?;

    let d = state_subset.len();
    let mut center = vec![0.0; d];
    let mut count = 0usize;
    let mut normalized: Vec<Vec<Vec<f64>>> = Vec::with_capacity(trajectories.len());
    for t in trajectories {
        let z: Vec<Vec<f64>> = t.states.iter().map(|x| normalizer.normalize_subset(x, state_subset)).collect();
        for p in &z {
            center.iter_mut().zip(p).for_each(|(c, v)| *c += v);
        }
        count += z.len();
        normalized.push(z);
    }
    center.iter_mut().for_each(|c| *c /= count as f64);

    let used: Vec<Vec<f64>> = used_ics.iter().map(|x| normalizer.normalize_subset(x, state_subset)).collect();

    let mut ranked: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, t) in trajectories.iter().enumerate() {
        if !t.is_completed() {
            continue;
        }
        for (k, p) in normalized[ti].iter().enumerate() {
            ranked.push((squared_distance(p, &center), ti, k));
        }
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    ranked
        .into_iter()
        .find(|&(_, ti, k)| used.iter().all(|u| distance(&normalized[ti][k], u) >= min_distance))
        .map(|(d2, ti, k)| RestartPoint {
            state: trajectories[ti].states[k].clone(),
            trajectory: ti,
            sample: k,
            distance_to_center: d2.sqrt(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::RunStatus;

    fn traj(states: Vec<Vec<f64>>) -> Trajectory {
        let n = states.len();
        Trajectory {
            dt: 1.0,
            times: (0..n).map(|k| k as f64).collect(),
            outputs: states.clone(),
            states,
            controls: vec![vec![0.0]; n],
            status: RunStatus::Completed,
        }
    }

    #[test]
    fn constant_trajectory_gives_none() {
        let t = traj(vec![vec![1.0, 2.0]; 10]);
        assert!(phase4_next_ic(&[&t], &[vec![1.0, 2.0]], &[0, 1], 0.5).is_none());
    }

    #[test]
    fn picks_far_cluster() {
        // cluster A near the origin holds the used IC; B sits far away
        let a = traj(vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![0.0, 0.1]]);
        let b = traj(vec![vec![0.9, 0.8], vec![1.0, 1.0], vec![0.95, 0.9]]);
        let got = phase4_next_ic(&[&a, &b], &[vec![0.0, 0.0]], &[0, 1], 0.5).unwrap();
        assert_eq!(got.state, vec![1.0, 1.0]);
        assert_eq!((got.trajectory, got.sample), (1, 1));
    }

    #[test]
    fn exclusion_can_empty_the_pool() {
        let a = traj(vec![vec![0.0], vec![1.0]]);
        assert!(phase4_next_ic(&[&a], &[vec![0.0], vec![1.0]], &[0], 0.1).is_none());
    }

    #[test]
    fn diverged_runs_only_shift_the_center() {
        let mut bad = traj(vec![vec![10.0]]);
        bad.status = RunStatus::Diverged { at: 1.0 };
        let good = traj(vec![vec![0.0], vec![1.0], vec![2.0]]);
        let got = phase4_next_ic(&[&good, &bad], &[vec![2.0]], &[0], 0.05).unwrap();
        // center is 3.25 (unnormalized); the far admissible state is 0
        assert_eq!(got.state, vec![0.0]);
    }
}
