use serde::{Deserialize, Serialize};

use super::SamplerError;
use crate::geometry::MAX_DIM;
use crate::models::{multiple_of, DynamicModel, SimulationSettings, DEFAULT_DIVERGENCE_LIMIT};
use crate::signal::{total_duration, validate_segments, ControlBounds, FaprbsSegment};

/// Weights applied to output samples when averaging a run into its seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedWeighting {
    Uniform,
    /// `w_k = 1 - gamma^(k+1)`; damps the initial transient.
    Discount { gamma: f64 },
}

impl SeedWeighting {
    pub fn weight(&self, k: usize) -> f64 {
        match *self {
            SeedWeighting::Uniform => 1.0,
            SeedWeighting::Discount { gamma } => 1.0 - gamma.powi(k as i32 + 1),
        }
    }
}

/// Hyperparameters and simulation setup of a campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// Hammersley points per epoch in phase 1 (on top of corners and face centers).
    pub n_hss: usize,
    pub max_sims_phase2: usize,
    /// Phase 2 stops once the best candidate scores below this.
    pub score_threshold_phase2: f64,
    pub max_sims_phase3: usize,
    /// Number of concentric d-balls used when scoring phase-3 candidates.
    pub kappa: usize,
    /// Relative change of the mean phase-3 radius counted as a plateau.
    pub radius_plateau_tol: f64,
    /// Consecutive plateau iterations that end phase 3.
    pub radius_plateau_iters: usize,
    pub max_epochs: usize,
    /// Minimum normalized distance between initial conditions. Defaults to the
    /// mean distance of two uniform points in the state-subset hypercube.
    pub ic_min_distance: Option<f64>,
    /// Monte-Carlo draws used for the default `ic_min_distance`.
    pub ic_mc_samples: usize,
    /// Output indices spanning the output space; all outputs when absent.
    pub output_subset: Option<Vec<usize>>,
    /// State indices used to pick restart points; all states when absent.
    pub state_subset: Option<Vec<usize>>,
    pub seed_weighting: SeedWeighting,
    pub rng_seed: u64,
    pub dt: f64,
    /// Simulation horizon; the full FAPRBS duration when absent.
    pub horizon: Option<f64>,
    pub segments: Vec<FaprbsSegment>,
    /// Overrides the model's control bounds and amplitudes.
    pub control_bounds: Option<ControlBounds>,
    /// Overrides the model's default initial state for the first epoch.
    pub x0: Option<Vec<f64>>,
    pub divergence_limit: f64,
    /// Diverged runs still yield a seed when at least this fraction of the
    /// horizon was integrated.
    pub min_seed_fraction: f64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            n_hss: 15,
            max_sims_phase2: 15,
            score_threshold_phase2: 1e-4,
            max_sims_phase3: 30,
            kappa: 3,
            radius_plateau_tol: 0.01,
            radius_plateau_iters: 3,
            max_epochs: 5,
            ic_min_distance: None,
            ic_mc_samples: 100_000,
            output_subset: None,
            state_subset: None,
            seed_weighting: SeedWeighting::Uniform,
            rng_seed: 0,
            dt: 0.05,
            horizon: None,
            segments: vec![FaprbsSegment::new(0.25, 30), FaprbsSegment::new(1.0, 10)],
            control_bounds: None,
            x0: None,
            divergence_limit: DEFAULT_DIVERGENCE_LIMIT,
            min_seed_fraction: 0.5,
        }
    }
}

/// A configuration checked against a model, with defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct CampaignPlan {
    pub bounds: ControlBounds,
    pub output_subset: Vec<usize>,
    pub state_subset: Vec<usize>,
    pub settings: SimulationSettings,
    pub x0: Vec<f64>,
}

fn check_subset(name: &str, subset: &[usize], available: usize) -> Result<(), SamplerError> {
    if subset.is_empty() {
        return Err(SamplerError::Config(format!("{name} is empty")));
    }
    if let Some(&i) = subset.iter().find(|&&i| i >= available) {
        return Err(SamplerError::Config(format!("{name} index {i} out of range (model has {available})")));
    }
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != subset.len() {
        return Err(SamplerError::Config(format!("{name} has repeated indices")));
    }
    Ok(())
}

impl CampaignConfig {
    /// Checks every precondition the campaign relies on.
    pub fn validate(&self, model: &dyn DynamicModel) -> Result<CampaignPlan, SamplerError> {
        let cfg = |msg: String| Err(SamplerError::Config(msg));

        let bounds = self.control_bounds.clone().unwrap_or_else(|| model.control_bounds());
        bounds.validate().map_err(|e| SamplerError::Config(e.to_string()))?;
        if bounds.n_channels() != model.n_controls() {
            return cfg(format!(
                "control bounds have {} channels, model has {} controls",
                bounds.n_channels(),
                model.n_controls()
            ));
        }
        if model.n_controls() > MAX_DIM {
            return cfg(format!("{} controls exceed the supported {MAX_DIM}", model.n_controls()));
        }

        let output_subset = self.output_subset.clone().unwrap_or_else(|| (0..model.n_outputs()).collect());
        check_subset("output_subset", &output_subset, model.n_outputs())?;
        if output_subset.len() > MAX_DIM {
            return cfg(format!("output space has {} dimensions, at most {MAX_DIM} supported", output_subset.len()));
        }
        let state_subset = self.state_subset.clone().unwrap_or_else(|| (0..model.n_states()).collect());
        check_subset("state_subset", &state_subset, model.n_states())?;

        validate_segments(&self.segments).map_err(|e| SamplerError::Config(e.to_string()))?;
        let duration = total_duration(&self.segments);
        let horizon = self.horizon.unwrap_or(duration);
        let settings = SimulationSettings { dt: self.dt, horizon, divergence_limit: self.divergence_limit };
        settings.steps().map_err(|e| SamplerError::Config(e.to_string()))?;
        if horizon > duration * (1.0 + 1e-9) {
            return cfg(format!("horizon {horizon} exceeds FAPRBS duration {duration}"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if multiple_of(s.hold_duration, self.dt).is_none() {
                return cfg(format!("dt {} does not divide hold duration {} of segment {i}", self.dt, s.hold_duration));
            }
        }
        if self.divergence_limit.is_nan() || self.divergence_limit <= 0.0 {
            return cfg("divergence_limit must be positive".into());
        }

        let x0 = self.x0.clone().unwrap_or_else(|| model.default_x0());
        if x0.len() != model.n_states() || x0.iter().any(|v| !v.is_finite()) {
            return cfg(format!("x0 must hold {} finite values", model.n_states()));
        }

        if self.kappa == 0 {
            return cfg("kappa must be at least 1".into());
        }
        if self.max_epochs == 0 {
            return cfg("max_epochs must be at least 1".into());
        }
        if self.radius_plateau_iters == 0 {
            return cfg("radius_plateau_iters must be at least 1".into());
        }
        if self.radius_plateau_tol.is_nan() || self.radius_plateau_tol < 0.0 {
            return cfg("radius_plateau_tol must be non-negative".into());
        }
        if !self.score_threshold_phase2.is_finite() {
            return cfg("score_threshold_phase2 must be finite".into());
        }
        if let Some(d) = self.ic_min_distance {
            if !(d >= 0.0 && d.is_finite()) {
                return cfg("ic_min_distance must be a non-negative number".into());
            }
        } else if self.ic_mc_samples == 0 {
            return cfg("ic_mc_samples must be at least 1".into());
        }
        if let SeedWeighting::Discount { gamma } = self.seed_weighting {
            if !(gamma > 0.0 && gamma < 1.0) {
                return cfg(format!("discount gamma {gamma} must lie in (0, 1)"));
            }
        }
        if !(0.0..=1.0).contains(&self.min_seed_fraction) {
            return cfg("min_seed_fraction must lie in [0, 1]".into());
        }
        if 1 + (1usize << model.n_controls()) + 2 * model.n_controls() + self.n_hss < 2 {
            return cfg("phase 1 needs at least two runs".into());
        }

        Ok(CampaignPlan { bounds, output_subset, state_subset, settings, x0 })
    }
}
