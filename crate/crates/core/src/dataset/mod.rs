//! Campaign records: runs with provenance, per-epoch bookkeeping, and
//! persistence.

mod coverage;
mod io;

pub use coverage::{coverage, coverage_in_box, output_box};
pub use io::{export_csv, export_jsonl, load_jsonl, read_jsonl, write_jsonl};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::Trajectory;
use crate::sampler::{CampaignConfig, Candidate, Normalizer, Seed, StopReason};
use crate::signal::{ControlBounds, ControlSignal};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dataset line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("inconsistent dataset: {0}")]
    Invalid(String),
    #[error("dataset has no output samples")]
    Empty,
}

/// Statistics of one phase-2 or phase-3 iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationStat {
    pub phase: u8,
    pub candidates: usize,
    pub valid: usize,
    /// Mean radius over all candidates (phase 3 only).
    pub mean_r_star: Option<f64>,
    pub best_score: Option<f64>,
    /// Run simulated in this iteration, if any.
    pub run_id: Option<usize>,
    /// Distance evaluations spent on ball counting (phase 3 only).
    pub distance_evaluations: usize,
}

/// A target that has been simulated, in raw output units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UsedTarget {
    pub epoch: usize,
    pub run_id: usize,
    pub t_star: Vec<f64>,
    /// Exclusion radius in the normalized coordinates of the epoch that used it.
    pub r_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub x0: Vec<f64>,
    /// Run and sample index the initial condition was taken from.
    pub x0_source: Option<(usize, usize)>,
    /// Output normalization frozen after phase 1.
    pub normalization: Normalizer,
    /// Phase-1 design size before removing coincident points.
    pub phase1_design: usize,
    pub phase_counts: [usize; 3],
    pub used_targets: Vec<UsedTarget>,
    pub iterations: Vec<IterationStat>,
    pub phase2_stop: Option<StopReason>,
    pub phase3_stop: Option<StopReason>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema_version: u32,
    pub model: String,
    pub rng_seed: u64,
    pub config: CampaignConfig,
    pub control_bounds: ControlBounds,
    pub output_subset: Vec<usize>,
    pub state_subset: Vec<usize>,
    pub n_states: usize,
    pub n_controls: usize,
    pub n_outputs: usize,
    pub horizon: f64,
    pub ic_min_distance: f64,
    pub epochs: Vec<EpochRecord>,
    /// Why the campaign stopped adding epochs.
    pub termination: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: usize,
    pub epoch: usize,
    pub phase: u8,
    /// Mean control vector in raw units.
    pub u_bar: Vec<f64>,
    pub signal: ControlSignal,
    pub trajectory: Trajectory,
    pub seed: Option<Seed>,
    pub provenance: Option<Candidate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub runs: Vec<RunRecord>,
}

impl Dataset {
    pub fn new(meta: DatasetMeta) -> Self {
        Self { meta, runs: Vec::new() }
    }

    /// Runs of one phase (1, 2 or 3).
    pub fn runs_in_phase(&self, phase: u8) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(move |r| r.phase == phase)
    }

    /// Number of runs per phase.
    pub fn phase_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for r in &self.runs {
            c[(r.phase - 1) as usize] += 1;
        }
        c
    }

    pub fn n_samples(&self) -> usize {
        self.runs.iter().map(|r| r.trajectory.len()).sum()
    }

    /// All used targets of all epochs, in use order.
    pub fn used_targets(&self) -> impl Iterator<Item = &UsedTarget> {
        self.meta.epochs.iter().flat_map(|e| e.used_targets.iter())
    }

    /// Checks the structural invariants of a dataset.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::Invalid(m));
        for (i, e) in self.meta.epochs.iter().enumerate() {
            if e.epoch != i {
                return bad(format!("epoch record {i} is labelled {}", e.epoch));
            }
        }
        for (i, r) in self.runs.iter().enumerate() {
            if r.run_id != i {
                return bad(format!("run at position {i} has id {}", r.run_id));
            }
            if r.epoch >= self.meta.epochs.len() {
                return bad(format!("run {i} references unknown epoch {}", r.epoch));
            }
            if !(1..=3).contains(&r.phase) {
                return bad(format!("run {i} has phase {}", r.phase));
            }
            if r.seed.as_ref().is_some_and(|s| s.run_id != i) {
                return bad(format!("seed of run {i} names another run"));
            }
            let t = &r.trajectory;
            if t.states.len() != t.len() || t.outputs.len() != t.len() || t.controls.len() != t.len() {
                return bad(format!("run {i} has ragged trajectory columns"));
            }
            let widths_ok = t.states.iter().all(|x| x.len() == self.meta.n_states)
                && t.outputs.iter().all(|y| y.len() == self.meta.n_outputs)
                && t.controls.iter().all(|u| u.len() == self.meta.n_controls);
            if !widths_ok {
                return bad(format!("run {i} does not match the model dimensions"));
            }
        }
        let mut counts = vec![[0usize; 3]; self.meta.epochs.len()];
        for r in &self.runs {
            counts[r.epoch][(r.phase - 1) as usize] += 1;
        }
        for (e, c) in self.meta.epochs.iter().zip(&counts) {
            if e.phase_counts != *c {
                return bad(format!("epoch {} phase counts disagree with its runs", e.epoch));
            }
        }
        Ok(())
    }
}
