//! The adaptive campaign: space-filling start, hull expansion, population of
//! empty regions, and restarts from new initial conditions.

mod campaign;
mod config;
mod expansion;
mod population;
mod restart;
mod seed;

pub use campaign::{derive_seed, phase1_design, run_campaign, run_campaign_detailed, CampaignOutcome, Phase1Design, TimingReport};
pub use config::{CampaignConfig, CampaignPlan, SeedWeighting};
pub use expansion::{expansion_metrics, pair_candidates, score_expansion};
pub use population::{count_in_balls, population_candidates, score_population, RadiusPlateau};
pub use restart::{phase4_next_ic, RestartPoint};
pub use seed::{compute_seed, Normalizer, Seed};

pub use crate::dataset::UsedTarget;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{distance, GeometryError, Point};
use crate::models::ModelError;
use crate::signal::SignalError;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("epoch {epoch}: no phase-1 run produced a seed")]
    EpochFailure { epoch: usize },
    #[error("trajectory has no output samples")]
    EmptyTrajectory,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Runs a candidate was derived from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Pair { runs: [usize; 2] },
    Simplex { runs: Vec<usize> },
}

impl Provenance {
    /// Sorted run ids.
    pub fn runs(&self) -> &[usize] {
        match self {
            Provenance::Pair { runs } => runs,
            Provenance::Simplex { runs } => runs,
        }
    }
}

/// A proposed simulation: mean input and expected output location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Mean control vector in unit input coordinates.
    pub u_star: Vec<f64>,
    /// Target in normalized output coordinates.
    pub t_star: Point,
    pub score: f64,
    pub provenance: Provenance,
    /// Distance to the seed center (phase 2 only).
    pub l_star: Option<f64>,
    pub r_star: f64,
    /// Voronoi vertex of the defining seeds (phase 3 only).
    pub voronoi_vertex: Option<Point>,
}

/// Why a phase ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    NoValidTargets,
    ScoreThreshold,
    RadiusPlateau,
    TooFewSeeds,
    Degenerate(String),
}

/// A target is valid when it lies outside the exclusion ball of every used
/// target. `used` holds normalized targets with their radii.
pub fn is_valid_target(t_star: &[f64], used: &[(Vec<f64>, f64)]) -> bool {
    used.iter().all(|(t, r)| distance(t_star, t) >= *r)
}

/// Highest score; ties go to the lowest provenance run ids.
pub fn select_best(candidates: Vec<Candidate>) -> Option<Candidate> {
    candidates.into_iter().reduce(|best, c| {
        if c.score > best.score || (c.score == best.score && c.provenance.runs() < best.provenance.runs()) {
            c
        } else {
            best
        }
    })
}
