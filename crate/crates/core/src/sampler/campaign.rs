use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::{
    compute_seed, count_in_balls, is_valid_target, pair_candidates, phase4_next_ic, population_candidates,
    score_population, select_best, CampaignConfig, CampaignPlan, Candidate, Normalizer, RadiusPlateau, SamplerError,
    Seed, StopReason,
};
use crate::dataset::{Dataset, DatasetMeta, EpochRecord, IterationStat, RunRecord, UsedTarget, SCHEMA_VERSION};
use crate::geometry::{corner_and_face_points, dedup_exact, hammersley, mean_pairwise_distance_unit_cube, Point};
use crate::models::{simulate_with, DynamicModel, RunStatus, Trajectory};
use crate::signal::{generate_faprbs, ControlSignal};

/// Phase-1 mean inputs in unit coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Phase1Design {
    /// Corners, face centers and Hammersley points before deduplication.
    pub requested: usize,
    pub points: Vec<Point>,
}

/// Corners and face centers of the unit input cube plus `n_hss` Hammersley
/// points, with exact duplicates removed.
pub fn phase1_design(n_controls: usize, n_hss: usize) -> Result<Phase1Design, SamplerError> {
    let mut points = corner_and_face_points(n_controls)?;
    if n_hss > 0 {
        points.extend(hammersley(n_hss, n_controls)?);
    }
    let requested = points.len();
    Ok(Phase1Design { requested, points: dedup_exact(points) })
}

/// Signal seed of one run, derived from the campaign seed.
pub fn derive_seed(rng_seed: u64, run_id: usize) -> u64 {
    splitmix64(rng_seed ^ splitmix64(run_id as u64 + 1))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Wall-clock split of a campaign.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimingReport {
    /// Signal generation and integration.
    pub simulation: Duration,
    /// Seeds, pair candidates and Delaunay/Voronoi work.
    pub candidates: Duration,
    /// Phase-3 ball counting.
    pub ball_counting: Duration,
    pub total: Duration,
}

impl TimingReport {
    pub fn simulation_share(&self) -> f64 {
        let total = self.total.as_secs_f64();
        if total > 0.0 {
            self.simulation.as_secs_f64() / total
        } else {
            0.0
        }
    }

    pub fn other(&self) -> Duration {
        self.total.saturating_sub(self.simulation + self.candidates + self.ball_counting)
    }
}

pub struct CampaignOutcome {
    pub dataset: Dataset,
    pub timing: TimingReport,
}

pub fn run_campaign(config: &CampaignConfig, model: &dyn DynamicModel) -> Result<Dataset, SamplerError> {
    Ok(run_campaign_detailed(config, model)?.dataset)
}

/// Runs the campaign and also reports where the time went.
pub fn run_campaign_detailed(config: &CampaignConfig, model: &dyn DynamicModel) -> Result<CampaignOutcome, SamplerError> {
    let start = Instant::now();
    let plan = config.validate(model)?;
    let ic_min_distance = match config.ic_min_distance {
        Some(d) => d,
        None => mean_pairwise_distance_unit_cube(plan.state_subset.len(), config.ic_mc_samples, config.rng_seed)?,
    };
    let meta = DatasetMeta {
        schema_version: SCHEMA_VERSION,
        model: model.name().to_string(),
        rng_seed: config.rng_seed,
        config: config.clone(),
        control_bounds: plan.bounds.clone(),
        output_subset: plan.output_subset.clone(),
        state_subset: plan.state_subset.clone(),
        n_states: model.n_states(),
        n_controls: model.n_controls(),
        n_outputs: model.n_outputs(),
        horizon: plan.settings.horizon,
        ic_min_distance,
        epochs: Vec::new(),
        termination: None,
    };
    let mut runner = Runner {
        model,
        config,
        plan,
        dataset: Dataset::new(meta),
        timing: TimingReport::default(),
        used: Vec::new(),
    };
    runner.run()?;
    runner.timing.total = start.elapsed();
    Ok(CampaignOutcome { dataset: runner.dataset, timing: runner.timing })
}

struct Runner<'a> {
    model: &'a dyn DynamicModel,
    config: &'a CampaignConfig,
    plan: CampaignPlan,
    dataset: Dataset,
    timing: TimingReport,
    /// Used targets of every epoch, normalized under the current epoch.
    used: Vec<(Vec<f64>, f64)>,
}

/// Per-epoch working state.
struct EpochState {
    epoch: usize,
    x0: Vec<f64>,
    normalizer: Normalizer,
    seeds: Vec<Seed>,
    /// Normalized output-subset samples of every run in the epoch.
    samples: Vec<Vec<f64>>,
}

fn status_label(status: &RunStatus) -> String {
    match status {
        RunStatus::Completed => "completed".into(),
        RunStatus::Diverged { at } => format!("diverged at t={at}"),
    }
}

impl<'a> Runner<'a> {
    fn run(&mut self) -> Result<(), SamplerError> {
        let mut x0 = self.plan.x0.clone();
        let mut x0_source = None;
        let mut used_ics: Vec<Vec<f64>> = Vec::new();
        for epoch in 0..self.config.max_epochs {
            used_ics.push(x0.clone());
            self.run_epoch(epoch, &x0, x0_source)?;

            if epoch + 1 == self.config.max_epochs {
                self.dataset.meta.termination = Some("maximum number of epochs reached".into());
                break;
            }
            let trajectories: Vec<&Trajectory> = self.dataset.runs.iter().map(|r| &r.trajectory).collect();
            match phase4_next_ic(
                &trajectories,
                &used_ics,
                &self.plan.state_subset,
                self.dataset.meta.ic_min_distance,
            ) {
                Some(next) => {
                    log::info!("epoch {} restarts from run {} sample {}", epoch + 1, next.trajectory, next.sample);
                    x0 = next.state;
                    x0_source = Some((next.trajectory, next.sample));
                }
                None => {
                    self.dataset.meta.termination = Some("no admissible initial condition left".into());
                    break;
                }
            }
        }
        Ok(())
    }

    fn run_epoch(&mut self, epoch: usize, x0: &[f64], x0_source: Option<(usize, usize)>) -> Result<(), SamplerError> {
        let design = phase1_design(self.model.n_controls(), self.config.n_hss)?;
        let first_id = self.dataset.runs.len();

        let t = Instant::now();
        let results: Vec<(Vec<f64>, ControlSignal, Trajectory)> = design
            .points
            .par_iter()
            .enumerate()
            .map(|(i, z)| self.simulate(first_id + i, z, x0))
            .collect::<Result<_, _>>()?;
        self.timing.simulation += t.elapsed();

        for (i, (u_bar, signal, trajectory)) in results.into_iter().enumerate() {
            log::info!(
                "epoch {epoch} phase 1 run {} score - status {}",
                first_id + i,
                status_label(&trajectory.status)
            );
            self.dataset.runs.push(RunRecord {
                run_id: first_id + i,
                epoch,
                phase: 1,
                u_bar,
                signal,
                trajectory,
                seed: None,
                provenance: None,
            });
        }

        let t = Instant::now();
        let subset = &self.plan.output_subset;
        let normalizer = Normalizer::fit(
            self.dataset.runs.iter().flat_map(|r| r.trajectory.outputs.iter().map(Vec::as_slice)),
            subset,
        )
        .ok_or(SamplerError::EpochFailure { epoch })?;
        self.used = self
            .dataset
            .used_targets()
            .map(|u| (normalizer.normalize(&u.t_star), u.r_star))
            .collect();

        let mut state = EpochState {
            epoch,
            x0: x0.to_vec(),
            normalizer: normalizer.clone(),
            seeds: Vec::new(),
            samples: Vec::new(),
        };
        for id in first_id..self.dataset.runs.len() {
            self.absorb(&mut state, id);
        }
        self.timing.candidates += t.elapsed();

        self.dataset.meta.epochs.push(EpochRecord {
            epoch,
            x0: x0.to_vec(),
            x0_source,
            normalization: normalizer,
            phase1_design: design.requested,
            phase_counts: [design.points.len(), 0, 0],
            used_targets: Vec::new(),
            iterations: Vec::new(),
            phase2_stop: None,
            phase3_stop: None,
        });
        if state.seeds.is_empty() {
            return Err(SamplerError::EpochFailure { epoch });
        }

        let stop2 = self.phase2(&mut state)?;
        log::info!("epoch {epoch} phase 2 stopped: {stop2:?}");
        self.record_mut(epoch).phase2_stop = Some(stop2);
        let stop3 = self.phase3(&mut state)?;
        log::info!("epoch {epoch} phase 3 stopped: {stop3:?}");
        self.record_mut(epoch).phase3_stop = Some(stop3);
        Ok(())
    }

    fn record_mut(&mut self, epoch: usize) -> &mut EpochRecord {
        &mut self.dataset.meta.epochs[epoch]
    }

    fn simulate(&self, run_id: usize, unit_u: &[f64], x0: &[f64]) -> Result<(Vec<f64>, ControlSignal, Trajectory), SamplerError> {
        let u_bar = self.plan.bounds.from_unit(unit_u);
        let seed = derive_seed(self.config.rng_seed, run_id);
        let signal = generate_faprbs(&u_bar, &self.config.segments, &self.plan.bounds, seed)?;
        let trajectory = simulate_with(self.model, x0, &signal, &self.plan.settings)?;
        Ok((u_bar, signal, trajectory))
    }

    /// Adds a recorded run's samples to the epoch and derives its seed when
    /// the run qualifies.
    fn absorb(&mut self, state: &mut EpochState, run_id: usize) {
        let subset = &self.plan.output_subset;
        let run = &mut self.dataset.runs[run_id];
        state
            .samples
            .extend(run.trajectory.outputs.iter().map(|y| state.normalizer.normalize_subset(y, subset)));

        let qualifies = match run.trajectory.status {
            RunStatus::Completed => true,
            RunStatus::Diverged { .. } => {
                run.trajectory.end_time() >= self.config.min_seed_fraction * self.plan.settings.horizon
            }
        };
        if !qualifies {
            return;
        }
        match compute_seed(&run.trajectory, self.config.seed_weighting, &state.normalizer, subset) {
            Ok(y_bar) => {
                let seed = Seed {
                    run_id,
                    epoch: state.epoch,
                    y_bar,
                    u_bar: self.plan.bounds.to_unit(&run.u_bar),
                };
                run.seed = Some(seed.clone());
                state.seeds.push(seed);
            }
            Err(e) => log::warn!("run {run_id} yields no seed: {e}"),
        }
    }

    /// Simulates a chosen candidate from the epoch's initial condition and
    /// marks its target used.
    fn execute(&mut self, state: &mut EpochState, phase: u8, candidate: Candidate) -> Result<usize, SamplerError> {
        let run_id = self.dataset.runs.len();
        let t = Instant::now();
        let (u_bar, signal, trajectory) = self.simulate(run_id, &candidate.u_star, &state.x0)?;
        self.timing.simulation += t.elapsed();
        log::info!(
            "epoch {} phase {phase} run {run_id} score {:.6e} status {}",
            state.epoch,
            candidate.score,
            status_label(&trajectory.status)
        );

        let target = UsedTarget {
            epoch: state.epoch,
            run_id,
            t_star: state.normalizer.denormalize(&candidate.t_star),
            r_star: candidate.r_star,
        };
        self.used.push((candidate.t_star.to_vec(), candidate.r_star));
        self.dataset.runs.push(RunRecord {
            run_id,
            epoch: state.epoch,
            phase,
            u_bar,
            signal,
            trajectory,
            seed: None,
            provenance: Some(candidate),
        });
        let record = self.record_mut(state.epoch);
        record.used_targets.push(target);
        record.phase_counts[(phase - 1) as usize] += 1;

        let t = Instant::now();
        self.absorb(state, run_id);
        self.timing.candidates += t.elapsed();
        Ok(run_id)
    }

    fn phase2(&mut self, state: &mut EpochState) -> Result<StopReason, SamplerError> {
        let mut done = 0;
        loop {
            if done >= self.config.max_sims_phase2 {
                return Ok(StopReason::Budget);
            }
            if state.seeds.len() < 2 {
                return Ok(StopReason::TooFewSeeds);
            }
            let t = Instant::now();
            let all = pair_candidates(&state.seeds);
            let n_candidates = all.len();
            let valid: Vec<Candidate> = all.into_iter().filter(|c| is_valid_target(&c.t_star, &self.used)).collect();
            let n_valid = valid.len();
            let best = select_best(valid);
            self.timing.candidates += t.elapsed();

            let mut stat = IterationStat {
                phase: 2,
                candidates: n_candidates,
                valid: n_valid,
                mean_r_star: None,
                best_score: best.as_ref().map(|c| c.score),
                run_id: None,
                distance_evaluations: 0,
            };
            let stop = match &best {
                None => Some(StopReason::NoValidTargets),
                Some(c) if c.score < self.config.score_threshold_phase2 => Some(StopReason::ScoreThreshold),
                _ => None,
            };
            if let Some(reason) = stop {
                self.record_mut(state.epoch).iterations.push(stat);
                return Ok(reason);
            }
            stat.run_id = Some(self.execute(state, 2, best.expect("checked above"))?);
            self.record_mut(state.epoch).iterations.push(stat);
            done += 1;
        }
    }

    fn phase3(&mut self, state: &mut EpochState) -> Result<StopReason, SamplerError> {
        let mut done = 0;
        let mut plateau = RadiusPlateau::new(self.config.radius_plateau_tol, self.config.radius_plateau_iters);
        let kappa = self.config.kappa;
        loop {
            if done >= self.config.max_sims_phase3 {
                return Ok(StopReason::Budget);
            }
            let t = Instant::now();
            let all = match population_candidates(&state.seeds) {
                Ok(c) if !c.is_empty() => c,
                Ok(_) => return Ok(StopReason::Degenerate("no simplices".into())),
                Err(e) => {
                    log::warn!("epoch {} phase 3 skipped: {e}", state.epoch);
                    return Ok(StopReason::Degenerate(e.to_string()));
                }
            };
            let n_candidates = all.len();
            let mean_r = all.iter().map(|c| c.r_star).sum::<f64>() / n_candidates as f64;
            let mut valid: Vec<Candidate> = all.into_iter().filter(|c| is_valid_target(&c.t_star, &self.used)).collect();
            self.timing.candidates += t.elapsed();

            let mut stat = IterationStat {
                phase: 3,
                candidates: n_candidates,
                valid: valid.len(),
                mean_r_star: Some(mean_r),
                best_score: None,
                run_id: None,
                distance_evaluations: 0,
            };
            if plateau.push(mean_r) {
                self.record_mut(state.epoch).iterations.push(stat);
                return Ok(StopReason::RadiusPlateau);
            }
            if valid.is_empty() {
                self.record_mut(state.epoch).iterations.push(stat);
                return Ok(StopReason::NoValidTargets);
            }

            let t = Instant::now();
            let samples = &state.samples;
            valid.par_iter_mut().for_each(|c| {
                let counts = count_in_balls(&c.t_star, c.r_star, kappa, samples);
                c.score = score_population(c.r_star, &counts);
            });
            self.timing.ball_counting += t.elapsed();
            stat.distance_evaluations = valid.len() * samples.len();

            let best = select_best(valid).expect("nonempty");
            stat.best_score = Some(best.score);
            stat.run_id = Some(self.execute(state, 3, best)?);
            self.record_mut(state.epoch).iterations.push(stat);
            done += 1;
        }
    }
}
