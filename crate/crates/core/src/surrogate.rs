//! One-step-ahead nearest-neighbor predictor over lagged outputs and
//! controls, used to compare datasets by the test error they lead to.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetMeta, EpochRecord, RunRecord, SCHEMA_VERSION};
use crate::geometry::squared_distance;
use crate::models::{simulate_with, DynamicModel};
use crate::sampler::{derive_seed, CampaignConfig, Normalizer, SamplerError};
use crate::signal::generate_faprbs;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("invalid lag specification: {0}")]
    LagSpec(String),
    #[error("no training examples")]
    EmptyTraining,
    #[error("datasets are incompatible: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// Window sizes of the predictor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagSpec {
    /// Past values of the predicted output, `N`.
    pub output_lags: usize,
    /// Past values per control channel, `O`.
    pub control_lags: Vec<usize>,
    pub k_neighbors: usize,
}

impl LagSpec {
    /// Same lag count for every control channel.
    pub fn uniform(output_lags: usize, control_lags: usize, n_controls: usize, k_neighbors: usize) -> Self {
        Self { output_lags, control_lags: vec![control_lags; n_controls], k_neighbors }
    }

    pub fn validate(&self, n_controls: usize) -> Result<(), SurrogateError> {
        let bad = |m: String| Err(SurrogateError::LagSpec(m));
        if self.output_lags == 0 {
            return bad("output lag count must be at least 1".into());
        }
        if self.control_lags.len() != n_controls {
            return bad(format!("{} control lag counts for {n_controls} controls", self.control_lags.len()));
        }
        if let Some(c) = self.control_lags.iter().position(|&o| o == 0) {
            return bad(format!("control {c} needs at least one lag"));
        }
        if self.k_neighbors == 0 {
            return bad("k_neighbors must be at least 1".into());
        }
        Ok(())
    }

    pub fn max_lag(&self) -> usize {
        self.control_lags.iter().copied().fold(self.output_lags, usize::max)
    }

    pub fn n_features(&self) -> usize {
        self.output_lags + self.control_lags.iter().sum::<usize>()
    }
}

/// Maps one output and the controls onto `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub output_index: usize,
    pub output: Normalizer,
    pub controls: Normalizer,
}

impl Scaling {
    /// Output range over the dataset's samples; controls use its bounds.
    pub fn from_dataset(dataset: &Dataset, output_index: usize) -> Result<Self, SurrogateError> {
        if output_index >= dataset.meta.n_outputs {
            return Err(SurrogateError::Incompatible(format!("output {output_index} does not exist")));
        }
        let rows = dataset.runs.iter().flat_map(|r| r.trajectory.outputs.iter().map(Vec::as_slice));
        let output = Normalizer::fit(rows, &[output_index]).ok_or(SurrogateError::EmptyTraining)?;
        let b = &dataset.meta.control_bounds;
        Ok(Self {
            output_index,
            output,
            controls: Normalizer { lower: b.lower.clone(), upper: b.upper.clone() },
        })
    }
}

/// Feature rows with their labels, all scaled.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExampleSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    /// Run each example was cut from.
    pub run_ids: Vec<usize>,
}

impl ExampleSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Keeps the first `n` examples.
    pub fn truncate(&mut self, n: usize) {
        self.features.truncate(n);
        self.labels.truncate(n);
        self.run_ids.truncate(n);
    }
}

/// Feature vector ending at sample `k`: the last `N` outputs, then the last
/// `O_c` values of each control channel, oldest first.
fn features_at(lag: &LagSpec, ys: &[f64], us: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut f = Vec::with_capacity(lag.n_features());
    f.extend_from_slice(&ys[k + 1 - lag.output_lags..=k]);
    for (c, &o) in lag.control_lags.iter().enumerate() {
        f.extend((k + 1 - o..=k).map(|j| us[j][c]));
    }
    f
}

/// Sliding windows over each run separately. Runs no longer than the
/// largest lag are skipped.
pub fn build_examples(dataset: &Dataset, lag: &LagSpec, scaling: &Scaling) -> Result<ExampleSet, SurrogateError> {
    lag.validate(dataset.meta.n_controls)?;
    let max_lag = lag.max_lag();
    let mut set = ExampleSet::default();
    for run in &dataset.runs {
        let t = &run.trajectory;
        if t.len() <= max_lag {
            log::info!("run {} has {} samples, window needs {}; skipped", run.run_id, t.len(), max_lag + 1);
            continue;
        }
        let ys: Vec<f64> = t.outputs.iter().map(|y| scaling.output.normalize(&[y[scaling.output_index]])[0]).collect();
        let us: Vec<Vec<f64>> = t.controls.iter().map(|u| scaling.controls.normalize(u)).collect();
        for k in max_lag - 1..t.len() - 1 {
            set.features.push(features_at(lag, &ys, &us, k));
            set.labels.push(ys[k + 1]);
            set.run_ids.push(run.run_id);
        }
    }
    Ok(set)
}

/// Inverse-distance-weighted k-nearest-neighbor regressor.
#[derive(Clone, Debug)]
pub struct Predictor {
    lag: LagSpec,
    examples: ExampleSet,
}

pub fn fit(examples: ExampleSet, lag: &LagSpec) -> Result<Predictor, SurrogateError> {
    if examples.is_empty() {
        return Err(SurrogateError::EmptyTraining);
    }
    if examples.features.iter().any(|f| f.len() != lag.n_features()) {
        return Err(SurrogateError::LagSpec("feature width does not match the lag specification".into()));
    }
    Ok(Predictor { lag: lag.clone(), examples })
}

impl Predictor {
    pub fn lag(&self) -> &LagSpec {
        &self.lag
    }

    pub fn n_examples(&self) -> usize {
        self.examples.len()
    }

    /// Neighbors are ranked by distance, then by example index. Neighbors at
    /// distance zero, if any, share the weight equally.
    pub fn predict(&self, features: &[f64]) -> f64 {
        let k = self.lag.k_neighbors.min(self.examples.len());
        let mut d: Vec<(f64, usize)> = self
            .examples
            .features
            .iter()
            .enumerate()
            .map(|(i, f)| (squared_distance(features, f), i))
            .collect();
        let by_rank = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, by_rank);
            d.truncate(k);
        }
        let labels = &self.examples.labels;
        let exact: Vec<usize> = d.iter().filter(|(d2, _)| *d2 == 0.0).map(|&(_, i)| i).collect();
        if !exact.is_empty() {
            return exact.iter().map(|&i| labels[i]).sum::<f64>() / exact.len() as f64;
        }
        let (num, den) = d.iter().fold((0.0, 0.0), |(n, w), &(d2, i)| {
            let wi = 1.0 / d2.sqrt();
            (n + wi * labels[i], w + wi)
        });
        num / den
    }

    /// Free-running simulation: predictions are fed back as lagged outputs.
    /// `y_window` holds the last `N` scaled outputs; `controls[j]` is the
    /// scaled control vector at sample `j`, where sample `max_lag - 1` is the
    /// last one of the initial window.
    pub fn rollout(&self, y_window: &[f64], controls: &[Vec<f64>], steps: usize) -> Vec<f64> {
        let n = self.lag.output_lags;
        let max_lag = self.lag.max_lag();
        let mut ys = vec![0.0; max_lag - n];
        ys.extend_from_slice(&y_window[y_window.len() - n..]);
        let mut out = Vec::with_capacity(steps);
        for s in 0..steps {
            let k = max_lag - 1 + s;
            if k >= controls.len() {
                break;
            }
            let y = self.predict(&features_at(&self.lag, &ys, controls, k));
            ys.push(y);
            out.push(y);
        }
        out
    }
}

pub fn mse(predictions: &[f64], truth: &[f64]) -> f64 {
    if predictions.is_empty() {
        return 0.0;
    }
    predictions.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / predictions.len() as f64
}

/// Test error of one output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputError {
    pub output_index: usize,
    pub mse: f64,
    pub train_examples: usize,
    pub test_examples: usize,
}

/// Result of training on one dataset and testing one-step predictions on
/// another.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub lag: LagSpec,
    pub train_model: String,
    pub train_runs: usize,
    pub test_runs: usize,
    pub outputs: Vec<OutputError>,
    pub mean_mse: f64,
}

fn check_compatible(train: &Dataset, test: &Dataset) -> Result<(), SurrogateError> {
    let (a, b) = (&train.meta, &test.meta);
    if (a.n_outputs, a.n_controls) != (b.n_outputs, b.n_controls) {
        return Err(SurrogateError::Incompatible(format!(
            "training data has {} outputs and {} controls, test data {} and {}",
            a.n_outputs, a.n_controls, b.n_outputs, b.n_controls
        )));
    }
    Ok(())
}

/// One-step-ahead test MSE per output of the training set's output subset,
/// optionally capping the number of training examples. Errors are measured
/// with each output min–max normalized over the test data.
pub fn evaluate(
    train: &Dataset,
    test: &Dataset,
    lag: &LagSpec,
    max_train_examples: Option<usize>,
) -> Result<EvalReport, SurrogateError> {
    check_compatible(train, test)?;
    lag.validate(train.meta.n_controls)?;
    let mut outputs = Vec::new();
    for &index in &train.meta.output_subset {
        let scaling = Scaling::from_dataset(train, index)?;
        let mut examples = build_examples(train, lag, &scaling)?;
        if let Some(n) = max_train_examples {
            examples.truncate(n);
        }
        let predictor = fit(examples, lag)?;
        let test_set = build_examples(test, lag, &scaling)?;
        // score in the test data's own [0, 1] range so datasets with different
        // spans are compared on one scale
        let test_scale = Scaling::from_dataset(test, index)?.output;
        let rescale = |v: f64| test_scale.normalize(&scaling.output.denormalize(&[v]))[0];
        let predictions: Vec<f64> = test_set.features.par_iter().map(|f| rescale(predictor.predict(f))).collect();
        let truth: Vec<f64> = test_set.labels.iter().map(|&v| rescale(v)).collect();
        outputs.push(OutputError {
            output_index: index,
            mse: mse(&predictions, &truth),
            train_examples: predictor.n_examples(),
            test_examples: test_set.len(),
        });
    }
    let mean_mse = outputs.iter().map(|o| o.mse).sum::<f64>() / outputs.len() as f64;
    Ok(EvalReport {
        lag: lag.clone(),
        train_model: train.meta.model.clone(),
        train_runs: train.runs.len(),
        test_runs: test.runs.len(),
        outputs,
        mean_mse,
    })
}

/// Withheld test runs: FAPRBS excitations around mean inputs drawn uniformly
/// from the control box, all from the configured initial state.
pub fn generate_test_set(
    config: &CampaignConfig,
    model: &dyn DynamicModel,
    n_runs: usize,
    seed: u64,
) -> Result<Dataset, SurrogateError> {
    let plan = config.validate(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Vec<f64>> = (0..n_runs)
        .map(|_| (0..model.n_controls()).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let runs: Vec<RunRecord> = draws
        .par_iter()
        .enumerate()
        .map(|(i, z)| {
            let u_bar = plan.bounds.from_unit(z);
            let signal = generate_faprbs(&u_bar, &config.segments, &plan.bounds, derive_seed(seed, i))
                .map_err(SamplerError::from)?;
            let trajectory = simulate_with(model, &plan.x0, &signal, &plan.settings).map_err(SamplerError::from)?;
            Ok(RunRecord { run_id: i, epoch: 0, phase: 1, u_bar, signal, trajectory, seed: None, provenance: None })
        })
        .collect::<Result<_, SurrogateError>>()?;

    let normalization = Normalizer::fit(
        runs.iter().flat_map(|r| r.trajectory.outputs.iter().map(Vec::as_slice)),
        &plan.output_subset,
    )
    .unwrap_or(Normalizer { lower: vec![0.0; plan.output_subset.len()], upper: vec![1.0; plan.output_subset.len()] });
    let meta = DatasetMeta {
        schema_version: SCHEMA_VERSION,
        model: model.name().to_string(),
        rng_seed: seed,
        config: config.clone(),
        control_bounds: plan.bounds.clone(),
        output_subset: plan.output_subset.clone(),
        state_subset: plan.state_subset.clone(),
        n_states: model.n_states(),
        n_controls: model.n_controls(),
        n_outputs: model.n_outputs(),
        horizon: plan.settings.horizon,
        ic_min_distance: 0.0,
        epochs: vec![EpochRecord {
            epoch: 0,
            x0: plan.x0.clone(),
            x0_source: None,
            normalization,
            phase1_design: n_runs,
            phase_counts: [n_runs, 0, 0],
            used_targets: Vec::new(),
            iterations: Vec::new(),
            phase2_stop: None,
            phase3_stop: None,
        }],
        termination: Some("test set".into()),
    };
    Ok(Dataset { meta, runs })
}
