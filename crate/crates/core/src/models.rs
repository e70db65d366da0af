//! Fixed-timestep dynamic models and their simulation.
//!
//! A model is an explicit ODE `dx/dt = f(x, u, t)` with an output map
//! `y = g(x, u)`. [`simulate`] integrates it with classic fourth-order
//! Runge–Kutta on a uniform grid, holding the control constant over each step.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{ControlBounds, ControlSignal, SignalError};

/// States with an infinity norm above this mark a run as diverged.
pub const DEFAULT_DIVERGENCE_LIMIT: f64 = 1e8;

pub const BUILTIN_MODELS: [&str; 3] = ["cstr3x2", "vanderpol", "lotka"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown model {0:?} (expected one of cstr3x2, vanderpol, lotka)")]
    UnknownModel(String),
    #[error("simulation setup: {0}")]
    Config(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// The black-box simulator contract the sampler relies on.
pub trait DynamicModel: Send + Sync {
    fn name(&self) -> &str;
    fn n_states(&self) -> usize;
    fn n_controls(&self) -> usize;
    fn n_outputs(&self) -> usize;
    fn default_x0(&self) -> Vec<f64>;
    fn control_bounds(&self) -> ControlBounds;

    /// Writes `dx/dt` into `dx`.
    fn rhs(&self, x: &[f64], u: &[f64], t: f64, dx: &mut [f64]);

    /// Writes the output vector into `y`.
    fn output(&self, x: &[f64], u: &[f64], y: &mut [f64]);
}

impl fmt::Debug for dyn DynamicModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicModel")
            .field("name", &self.name())
            .field("n_states", &self.n_states())
            .field("n_controls", &self.n_controls())
            .field("n_outputs", &self.n_outputs())
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Integration stopped at time `at`, where the state became non-finite or
    /// exceeded the divergence limit. That state is not recorded.
    Diverged { at: f64 },
}

/// Uniform-grid record of one simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    pub status: RunStatus,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    /// Time of the last recorded sample.
    pub fn end_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSettings {
    pub dt: f64,
    pub horizon: f64,
    pub divergence_limit: f64,
}

impl SimulationSettings {
    pub fn new(dt: f64, horizon: f64) -> Self {
        Self { dt, horizon, divergence_limit: DEFAULT_DIVERGENCE_LIMIT }
    }

    /// Number of integration steps, if `dt` divides the horizon.
    pub fn steps(&self) -> Result<usize, ModelError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ModelError::Config(format!("timestep {} must be positive", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(ModelError::Config(format!("horizon {} must be positive", self.horizon)));
        }
        multiple_of(self.horizon, self.dt)
            .ok_or_else(|| ModelError::Config(format!("dt {} does not divide horizon {}", self.dt, self.horizon)))
    }
}

/// `Some(k)` when `value` is `k * step` up to a relative 1e-9.
pub fn multiple_of(value: f64, step: f64) -> Option<usize> {
    let k = (value / step).round();
    if k >= 1.0 && (k * step - value).abs() <= 1e-9 * value.abs().max(step) {
        Some(k as usize)
    } else {
        None
    }
}

/// Integrates `model` from `x0` under `signal` with the default divergence limit.
pub fn simulate(
    model: &dyn DynamicModel,
    x0: &[f64],
    signal: &ControlSignal,
    dt: f64,
    horizon: f64,
) -> Result<Trajectory, ModelError> {
    simulate_with(model, x0, signal, &SimulationSettings::new(dt, horizon))
}

/// Fixed-step RK4 with the control held at its step-start value for all
/// four stages. Divergence truncates the trajectory and is reported in its
/// status rather than as an error.
pub fn simulate_with(
    model: &dyn DynamicModel,
    x0: &[f64],
    signal: &ControlSignal,
    settings: &SimulationSettings,
) -> Result<Trajectory, ModelError> {
    check_setup(model, x0, signal, settings)?;
    let steps = settings.steps()?;
    let dt = settings.dt;
    let n = model.n_states();

    let mut traj = Trajectory {
        dt,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        outputs: Vec::with_capacity(steps + 1),
        controls: Vec::with_capacity(steps + 1),
        status: RunStatus::Completed,
    };
    let mut y = vec![0.0; model.n_outputs()];
    let mut x = x0.to_vec();
    let u0 = signal.sample_at(0.0)?.to_vec();
    model.output(&x, &u0, &mut y);
    traj.times.push(0.0);
    traj.states.push(x.clone());
    traj.outputs.push(y.clone());
    traj.controls.push(u0);

    let mut stage = Rk4Scratch::new(n);
    for k in 0..steps {
        let t = k as f64 * dt;
        let u = signal.sample_at(t)?;
        stage.step(model, &mut x, u, t, dt);
        let t_next = (k + 1) as f64 * dt;
        let u_next = signal.sample_at(t_next)?;
        let blown = x.iter().any(|v| !v.is_finite() || v.abs() > settings.divergence_limit);
        if !blown {
            model.output(&x, u_next, &mut y);
        }
        if blown || y.iter().any(|v| !v.is_finite()) {
            traj.status = RunStatus::Diverged { at: t_next };
            break;
        }
        traj.times.push(t_next);
        traj.states.push(x.clone());
        traj.outputs.push(y.clone());
        traj.controls.push(u_next.to_vec());
    }
    Ok(traj)
}

fn check_setup(
    model: &dyn DynamicModel,
    x0: &[f64],
    signal: &ControlSignal,
    settings: &SimulationSettings,
) -> Result<(), ModelError> {
    if x0.len() != model.n_states() {
        return Err(ModelError::Config(format!(
            "initial state has {} entries, model has {} states",
            x0.len(),
            model.n_states()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::Config("initial state is not finite".into()));
    }
    if signal.n_channels() != model.n_controls() {
        return Err(ModelError::Config(format!(
            "signal has {} channels, model has {} controls",
            signal.n_channels(),
            model.n_controls()
        )));
    }
    settings.steps()?;
    if settings.horizon > signal.duration() * (1.0 + 1e-9) {
        return Err(ModelError::Config(format!(
            "horizon {} exceeds signal duration {}",
            settings.horizon,
            signal.duration()
        )));
    }
    if let Some(len) = signal.plateau_lengths().into_iter().find(|&l| multiple_of(l, settings.dt).is_none()) {
        return Err(ModelError::Config(format!("dt {} does not divide hold duration {len}", settings.dt)));
    }
    Ok(())
}

struct Rk4Scratch {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    fn new(n: usize) -> Self {
        Self { k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]], tmp: vec![0.0; n] }
    }

    fn step(&mut self, model: &dyn DynamicModel, x: &mut [f64], u: &[f64], t: f64, dt: f64) {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        model.rhs(x, u, t, k1);
        for i in 0..x.len() {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        model.rhs(tmp, u, t + 0.5 * dt, k2);
        for i in 0..x.len() {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        model.rhs(tmp, u, t + 0.5 * dt, k3);
        for i in 0..x.len() {
            tmp[i] = x[i] + dt * k3[i];
        }
        model.rhs(tmp, u, t + dt, k4);
        for i in 0..x.len() {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

type RhsFn = dyn Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync;
type OutputFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;

/// A model assembled from closures; the in-process route for custom systems.
pub struct FnModel {
    name: String,
    n_states: usize,
    n_outputs: usize,
    x0: Vec<f64>,
    bounds: ControlBounds,
    rhs: Box<RhsFn>,
    output: Box<OutputFn>,
}

impl FnModel {
    pub fn new(
        name: impl Into<String>,
        x0: Vec<f64>,
        n_outputs: usize,
        bounds: ControlBounds,
        rhs: impl Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync + 'static,
        output: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            n_states: x0.len(),
            n_outputs,
            x0,
            bounds,
            rhs: Box::new(rhs),
            output: Box::new(output),
        }
    }
}

impl DynamicModel for FnModel {
    fn name(&self) -> &str {
        &self.name
    }
    fn n_states(&self) -> usize {
        self.n_states
    }
    fn n_controls(&self) -> usize {
        self.bounds.n_channels()
    }
    fn n_outputs(&self) -> usize {
        self.n_outputs
    }
    fn default_x0(&self) -> Vec<f64> {
        self.x0.clone()
    }
    fn control_bounds(&self) -> ControlBounds {
        self.bounds.clone()
    }
    fn rhs(&self, x: &[f64], u: &[f64], t: f64, dx: &mut [f64]) {
        (self.rhs)(x, u, t, dx)
    }
    fn output(&self, x: &[f64], u: &[f64], y: &mut [f64]) {
        (self.output)(x, u, y)
    }
}

/// Nonisothermal CSTR with an exothermic first-order reaction.
///
/// States: concentration `C` (mol/L), reactor temperature `T` (K).
/// Controls: feed flow `q` (L/min), feed temperature `Tf` (K), coolant
/// temperature `Tc` (K). Outputs: `T` and conversion `1 - C / Cf`.
/// Time is in minutes. With `q = 100`, `Tf = 350`, `Tc = 300` the reactor
/// sits at its steady state `C = 0.5`, `T = 350`. The adiabatic temperature
/// rise is 100 K and the rate constant stays below ~35/min up to 465 K, so
/// the system is nonlinear but not stiff at `dt = 0.05`.
#[derive(Clone, Debug)]
pub struct Cstr {
    pub volume: f64,
    pub feed_conc: f64,
    pub k0: f64,
    pub activation: f64,
    pub heat_of_reaction: f64,
    pub density: f64,
    pub heat_capacity: f64,
    pub ua: f64,
}

impl Default for Cstr {
    fn default() -> Self {
        Self {
            volume: 100.0,
            feed_conc: 1.0,
            // k(350 K) = 1/min
            k0: (5000.0f64 / 350.0).exp(),
            activation: 5000.0,
            heat_of_reaction: -23_900.0,
            density: 1000.0,
            heat_capacity: 0.239,
            ua: 23_900.0,
        }
    }
}

impl DynamicModel for Cstr {
    fn name(&self) -> &str {
        "cstr3x2"
    }
    fn n_states(&self) -> usize {
        2
    }
    fn n_controls(&self) -> usize {
        3
    }
    fn n_outputs(&self) -> usize {
        2
    }
    fn default_x0(&self) -> Vec<f64> {
        vec![0.5, 350.0]
    }
    fn control_bounds(&self) -> ControlBounds {
        ControlBounds {
            lower: vec![80.0, 335.0, 290.0],
            upper: vec![120.0, 365.0, 306.0],
            faprbs_amplitude: vec![5.0, 3.0, 2.0],
        }
    }
    fn rhs(&self, x: &[f64], u: &[f64], _t: f64, dx: &mut [f64]) {
        let (c, temp) = (x[0], x[1]);
        let (q, tf, tc) = (u[0], u[1], u[2]);
        let rate = self.k0 * (-self.activation / temp).exp() * c;
        let rho_cp = self.density * self.heat_capacity;
        dx[0] = q / self.volume * (self.feed_conc - c) - rate;
        dx[1] = q / self.volume * (tf - temp)
            + (-self.heat_of_reaction) / rho_cp * rate
            + self.ua / (self.volume * rho_cp) * (tc - temp);
    }
    fn output(&self, x: &[f64], _u: &[f64], y: &mut [f64]) {
        y[0] = x[1];
        y[1] = 1.0 - x[0] / self.feed_conc;
    }
}

/// Van der Pol oscillator with additive forcing: `x'' - mu (1 - x^2) x' + x = u`.
///
/// The equilibrium `(u, 0)` is unstable for `|u| < 1` (limit cycle) and
/// stable beyond, so the forcing range crosses a Hopf bifurcation.
#[derive(Clone, Debug)]
pub struct VanDerPol {
    pub mu: f64,
}

impl Default for VanDerPol {
    fn default() -> Self {
        Self { mu: 1.0 }
    }
}

impl DynamicModel for VanDerPol {
    fn name(&self) -> &str {
        "vanderpol"
    }
    fn n_states(&self) -> usize {
        2
    }
    fn n_controls(&self) -> usize {
        1
    }
    fn n_outputs(&self) -> usize {
        2
    }
    fn default_x0(&self) -> Vec<f64> {
        vec![2.0, 0.0]
    }
    fn control_bounds(&self) -> ControlBounds {
        ControlBounds { lower: vec![-1.5], upper: vec![1.5], faprbs_amplitude: vec![0.2] }
    }
    fn rhs(&self, x: &[f64], u: &[f64], _t: f64, dx: &mut [f64]) {
        dx[0] = x[1];
        dx[1] = self.mu * (1.0 - x[0] * x[0]) * x[1] - x[0] + u[0];
    }
    fn output(&self, x: &[f64], _u: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&x[..2]);
    }
}

/// Predator–prey system whose prey growth and predator death rates are the
/// controls: `x' = u1 x - a x y`, `y' = b x y - u2 y`. The equilibrium is
/// `(u2 / b, u1 / a)`.
#[derive(Clone, Debug)]
pub struct LotkaVolterra {
    pub predation: f64,
    pub conversion: f64,
}

impl Default for LotkaVolterra {
    fn default() -> Self {
        Self { predation: 0.5, conversion: 0.5 }
    }
}

impl LotkaVolterra {
    pub fn equilibrium(&self, u: &[f64]) -> Vec<f64> {
        vec![u[1] / self.conversion, u[0] / self.predation]
    }
}

impl DynamicModel for LotkaVolterra {
    fn name(&self) -> &str {
        "lotka"
    }
    fn n_states(&self) -> usize {
        2
    }
    fn n_controls(&self) -> usize {
        2
    }
    fn n_outputs(&self) -> usize {
        2
    }
    fn default_x0(&self) -> Vec<f64> {
        self.equilibrium(&[1.0, 1.0])
    }
    fn control_bounds(&self) -> ControlBounds {
        ControlBounds { lower: vec![0.6, 0.6], upper: vec![1.4, 1.4], faprbs_amplitude: vec![0.1, 0.1] }
    }
    fn rhs(&self, x: &[f64], u: &[f64], _t: f64, dx: &mut [f64]) {
        dx[0] = u[0] * x[0] - self.predation * x[0] * x[1];
        dx[1] = self.conversion * x[0] * x[1] - u[1] * x[1];
    }
    fn output(&self, x: &[f64], _u: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&x[..2]);
    }
}

/// Looks up a built-in benchmark by name.
pub fn builtin_model(name: &str) -> Result<Arc<dyn DynamicModel>, ModelError> {
    match name {
        "cstr3x2" => Ok(Arc::new(Cstr::default())),
        "vanderpol" => Ok(Arc::new(VanDerPol::default())),
        "lotka" => Ok(Arc::new(LotkaVolterra::default())),
        other => Err(ModelError::UnknownModel(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{generate_faprbs, FaprbsSegment};

    fn scalar_model(rhs: impl Fn(f64) -> f64 + Send + Sync + 'static) -> FnModel {
        FnModel::new(
            "scalar",
            vec![1.0],
            1,
            ControlBounds::new(vec![-1.0], vec![1.0], vec![0.1]).unwrap(),
            move |x, _u, _t, dx| dx[0] = rhs(x[0]),
            |x, _u, y| y[0] = x[0],
        )
    }

    fn hold(duration: f64) -> ControlSignal {
        ControlSignal::constant(vec![0.0], duration)
    }

    #[test]
    fn exponential_decay_matches_analytic() {
        let m = scalar_model(|x| -x);
        let tr = simulate(&m, &[1.0], &hold(1.0), 0.1, 1.0).unwrap();
        assert!(tr.is_completed());
        assert_eq!(tr.len(), 11);
        assert!((tr.states[10][0] - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let m = scalar_model(|x| -x);
        let err = |dt: f64| {
            let tr = simulate(&m, &[1.0], &hold(1.0), dt, 1.0).unwrap();
            (tr.states.last().unwrap()[0] - (-1.0f64).exp()).abs()
        };
        for dt in [0.2, 0.1, 0.05] {
            let ratio = err(dt) / err(dt / 2.0);
            assert!((12.0..=20.0).contains(&ratio), "dt {dt}: ratio {ratio}");
        }
    }

    #[test]
    fn zero_dynamics_stay_put() {
        let m = scalar_model(|_| 0.0);
        let tr = simulate(&m, &[1.0], &hold(2.0), 0.25, 2.0).unwrap();
        assert!(tr.states.iter().all(|s| s[0] == 1.0));
    }

    #[test]
    fn finite_time_blow_up_is_flagged() {
        let m = scalar_model(|x| x * x);
        let tr = simulate(&m, &[1.0], &hold(2.0), 0.01, 2.0).unwrap();
        match tr.status {
            // analytic blow-up at t = 1; RK4 crosses the limit within a few steps of it
            RunStatus::Diverged { at } => assert!((0.9..=1.05).contains(&at), "at {at}"),
            RunStatus::Completed => panic!("expected divergence"),
        }
        assert!(tr.states.iter().flatten().all(|v| v.is_finite()));
        assert!(tr.end_time() < 1.05);
    }

    #[test]
    fn grid_and_control_consistency() {
        let cstr = Cstr::default();
        let segs = [FaprbsSegment::new(0.25, 8), FaprbsSegment::new(1.0, 3)];
        let sig = generate_faprbs(&[100.0, 350.0, 300.0], &segs, &cstr.control_bounds(), 5).unwrap();
        let tr = simulate(&cstr, &cstr.default_x0(), &sig, 0.05, 5.0).unwrap();
        assert!(tr.is_completed());
        assert_eq!(tr.len(), 101);
        for (k, t) in tr.times.iter().enumerate() {
            assert!((t - k as f64 * 0.05).abs() < 1e-12);
            assert_eq!(tr.controls[k].as_slice(), sig.sample_at(*t).unwrap());
        }
        for w in tr.times.windows(2) {
            assert!((w[1] - w[0] - 0.05).abs() < 1e-12);
        }
        let again = simulate(&cstr, &cstr.default_x0(), &sig, 0.05, 5.0).unwrap();
        assert_eq!(tr, again);
    }

    #[test]
    fn setup_errors() {
        let m = scalar_model(|x| -x);
        assert!(simulate(&m, &[1.0, 2.0], &hold(1.0), 0.1, 1.0).is_err());
        assert!(simulate(&m, &[1.0], &hold(1.0), 0.3, 1.0).is_err());
        assert!(simulate(&m, &[1.0], &hold(1.0), 0.1, 2.0).is_err());
        assert!(simulate(&m, &[1.0], &hold(1.0), -0.1, 1.0).is_err());
        let b = ControlBounds::new(vec![-1.0], vec![1.0], vec![0.1]).unwrap();
        let sig = generate_faprbs(&[0.0], &[FaprbsSegment::new(0.25, 4)], &b, 0).unwrap();
        let err = simulate(&m, &[1.0], &sig, 0.1, 0.5).unwrap_err();
        assert!(err.to_string().contains("hold duration"));
    }

    #[test]
    fn builtin_dimensions() {
        let cstr = builtin_model("cstr3x2").unwrap();
        assert_eq!((cstr.n_states(), cstr.n_controls(), cstr.n_outputs()), (2, 3, 2));
        for name in BUILTIN_MODELS {
            let m = builtin_model(name).unwrap();
            m.control_bounds().validate().unwrap();
            assert_eq!(m.default_x0().len(), m.n_states());
        }
        assert!(matches!(builtin_model("cae"), Err(ModelError::UnknownModel(_))));
    }

    #[test]
    fn cstr_nominal_steady_state() {
        let cstr = Cstr::default();
        let mut dx = [0.0; 2];
        cstr.rhs(&[0.5, 350.0], &[100.0, 350.0, 300.0], 0.0, &mut dx);
        assert!(dx[0].abs() < 1e-12 && dx[1].abs() < 1e-9, "{dx:?}");
    }

    #[test]
    fn cstr_box_corners_are_resolved_at_default_step() {
        let cstr = Cstr::default();
        let b = cstr.control_bounds();
        for k in 0..8 {
            let u: Vec<f64> = (0..3).map(|j| if (k >> j) & 1 == 1 { b.upper[j] } else { b.lower[j] }).collect();
            let run = |dt: f64| simulate(&cstr, &[0.5, 350.0], &ControlSignal::constant(u.clone(), 20.0), dt, 20.0).unwrap();
            let coarse = run(0.05);
            let fine = run(0.0125);
            assert!(coarse.is_completed());
            let end = coarse.states.last().unwrap();
            let end_fine = fine.states.last().unwrap();
            assert!((end[0] - end_fine[0]).abs() < 1e-4 && (end[1] - end_fine[1]).abs() < 1e-2, "{u:?}");
            assert!(coarse.states.iter().all(|x| x[0] >= 0.0 && x[0] <= 1.0 && x[1] > 250.0 && x[1] < 500.0));
        }
    }

    #[test]
    fn van_der_pol_limit_cycle_amplitude() {
        let vdp = VanDerPol::default();
        let amplitude = |dt: f64| {
            let tr = simulate(&vdp, &[2.0, 0.0], &ControlSignal::constant(vec![0.0], 100.0), dt, 100.0).unwrap();
            let tail = &tr.states[tr.len() * 4 / 5..];
            tail.iter().map(|s| s[0].abs()).fold(0.0, f64::max)
        };
        let reference = amplitude(0.001);
        let amp = amplitude(0.01);
        assert!((reference - 2.0).abs() < 0.1, "reference amplitude {reference}");
        assert!((amp - reference).abs() < 1e-3, "amplitude {amp} vs {reference}");
    }

    #[test]
    fn lotka_equilibrium_is_fixed() {
        let lv = LotkaVolterra::default();
        let x0 = lv.default_x0();
        let tr = simulate(&lv, &x0, &ControlSignal::constant(vec![1.0, 1.0], 50.0), 0.05, 50.0).unwrap();
        for s in &tr.states {
            assert!((s[0] - x0[0]).abs() < 1e-6 && (s[1] - x0[1]).abs() < 1e-6);
        }
    }
}
