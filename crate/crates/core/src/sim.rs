//! Plant/observer co-simulation with fixed-step RK4 and estimation-error
//! metrics.
//!
//! The plant integrates `ẋ = A x + f(x,u) + B_u u`; the observer adds the
//! correction `L(y − ŷ)` with the nonlinear output map on both sides. A
//! single simulation is strictly sequential; independent scenario runs can
//! execute in parallel with isolated state.

use nalgebra::{Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    eval_dynamics, eval_output, DerivedConstants, Input, Output, State, StateMatrices,
};
use crate::observer::ObserverGain;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("non-finite state derivative at step {0}")]
    NonFiniteDerivative(usize),
    #[error("simulation config invalid: {0}")]
    BadConfig(String),
    #[error("time grid mismatch: plant trace has {got} rows, config implies {want}")]
    GridMismatch { got: usize, want: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    ZeroOrderHold,
    Linear,
}

/// Time-stamped input records with an interpolation rule between samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<Input>,
    pub interpolation: Interpolation,
}

impl InputTrajectory {
    pub fn constant(u: Input) -> Self {
        Self { times: vec![0.0], values: vec![u], interpolation: Interpolation::ZeroOrderHold }
    }
}

/// Parses an input CSV with header `t,Tm,Efd,iR,iI`.
pub fn load_inputs(path: &std::path::Path, interpolation: Interpolation) -> Result<InputTrajectory, SimError> {
    let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_inputs(&text, &path.display().to_string(), interpolation)
}

pub fn parse_inputs(
    text: &str,
    path: &str,
    interpolation: Interpolation,
) -> Result<InputTrajectory, SimError> {
    let err = |line: usize, message: String| SimError::Parse { path: path.to_string(), line, message };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty file".into()))?;
    if header.trim() != "t,Tm,Efd,iR,iI" {
        return Err(err(1, format!("expected header `t,Tm,Efd,iR,iI`, got `{}`", header.trim())));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(err(lineno, format!("expected 5 comma-separated fields, got {}", fields.len())));
        }
        let mut nums = [0.0f64; 5];
        for (i, f) in fields.iter().enumerate() {
            nums[i] = f.trim().parse::<f64>().map_err(|_| {
                err(lineno, format!("field {} (`{}`) is not numeric", i + 1, f.trim()))
            })?;
        }
        if let Some(&last) = times.last() {
            if nums[0] <= last {
                return Err(err(
                    lineno,
                    format!("time stamps must be strictly increasing ({} after {})", nums[0], last),
                ));
            }
        }
        times.push(nums[0]);
        values.push(Input::new(nums[1], nums[2], nums[3], nums[4]));
    }
    if times.is_empty() {
        return Err(err(1, "no input records".into()));
    }
    Ok(InputTrajectory { times, values, interpolation })
}

/// Input at time `t`: zero-order hold or piecewise-linear, clamped outside
/// the recorded range.
pub fn sample_input(traj: &InputTrajectory, t: f64) -> Input {
    let times = &traj.times;
    if t <= times[0] {
        return traj.values[0];
    }
    if t >= *times.last().unwrap() {
        return *traj.values.last().unwrap();
    }
    // Index of the greatest recorded time <= t.
    let i = match times.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
        Ok(i) => i,
        Err(i) => i - 1,
    };
    match traj.interpolation {
        Interpolation::ZeroOrderHold => traj.values[i],
        Interpolation::Linear => {
            let (t0, t1) = (times[i], times[i + 1]);
            let w = (t - t0) / (t1 - t0);
            let a = traj.values[i].as_vector();
            let b = traj.values[i + 1].as_vector();
            Input::from_vector(&(a * (1.0 - w) + b * w))
        }
    }
}

/// One classical RK4 step of `ẋ = f(t, x)`.
pub fn step_rk4<F>(deriv: F, x: &Vector4<f64>, t: f64, dt: f64) -> Vector4<f64>
where
    F: Fn(f64, &Vector4<f64>) -> Vector4<f64>,
{
    let k1 = deriv(t, x);
    let k2 = deriv(t + 0.5 * dt, &(x + k1 * (0.5 * dt)));
    let k3 = deriv(t + 0.5 * dt, &(x + k2 * (0.5 * dt)));
    let k4 = deriv(t + dt, &(x + k3 * dt));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Simulation grid and initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    pub x0: State,
    pub xhat0: State,
    /// Optional PMU reporting period; between reports the observer holds
    /// the last reported measurement. `None` means the continuous
    /// idealization of measurements at every integration stage.
    #[serde(default)]
    pub pmu_period: Option<f64>,
    /// Optional additive Gaussian measurement noise (standard deviation).
    #[serde(default)]
    pub noise_std: Option<f64>,
    #[serde(default)]
    pub noise_seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0) {
            return Err(SimError::BadConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.t_final < self.dt {
            return Err(SimError::BadConfig(format!(
                "t_final {} must be at least dt {}",
                self.t_final, self.dt
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Plant-only trajectory on the grid `{0, dt, 2dt, …}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantTrace {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub outputs: Vec<Output>,
}

/// Joint plant/observer trajectory with the per-step state-error norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub times: Vec<f64>,
    pub plant_states: Vec<State>,
    pub observer_states: Vec<State>,
    pub plant_outputs: Vec<Output>,
    pub observer_outputs: Vec<Output>,
    pub error_norm: Vec<f64>,
}

fn check_finite(v: &Vector4<f64>, step: usize) -> Result<(), SimError> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(SimError::NonFiniteDerivative(step))
    }
}

/// Integrates the plant forward with RK4 and records states and outputs.
pub fn simulate_plant(
    c: &DerivedConstants,
    m: &StateMatrices,
    traj: &InputTrajectory,
    cfg: &SimConfig,
) -> Result<PlantTrace, SimError> {
    cfg.validate()?;
    let n = cfg.steps();
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut outputs = Vec::with_capacity(n + 1);
    let mut x = cfg.x0.as_vector();
    for i in 0..=n {
        let t = i as f64 * cfg.dt;
        times.push(t);
        let state = State::from_vector(&x);
        outputs.push(eval_output(c, m, &state, &sample_input(traj, t)));
        states.push(state);
        if i < n {
            let next = step_rk4(
                |tt, xv| {
                    let u = sample_input(traj, tt);
                    eval_dynamics(c, m, &State::from_vector(xv), &u)
                },
                &x,
                t,
                cfg.dt,
            );
            check_finite(&next, i)?;
            x = next;
        }
    }
    Ok(PlantTrace { times, states, outputs })
}

struct MeasurementSchedule {
    period: Option<f64>,
    noise: Option<(f64, rand_chacha::ChaCha8Rng)>,
    held: Option<Vector2<f64>>,
    next_report: f64,
}

impl MeasurementSchedule {
    fn new(cfg: &SimConfig) -> Self {
        use rand::SeedableRng;
        Self {
            period: cfg.pmu_period,
            noise: cfg
                .noise_std
                .map(|s| (s, rand_chacha::ChaCha8Rng::seed_from_u64(cfg.noise_seed))),
            held: None,
            next_report: 0.0,
        }
    }

    /// Measurement available to the observer at grid time `t`.
    fn at_grid(&mut self, t: f64, y_true: &Vector2<f64>) -> Vector2<f64> {
        let mut y = *y_true;
        if let Some((std, rng)) = self.noise.as_mut() {
            use rand::Rng;
            // Box-Muller keeps the dependency surface small and the
            // stream reproducible.
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen();
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = 2.0 * std::f64::consts::PI * u2;
            y[0] += *std * r * theta.cos();
            y[1] += *std * r * theta.sin();
        }
        match self.period {
            None => y,
            Some(p) => {
                if self.held.is_none() || t + 1e-12 >= self.next_report {
                    self.held = Some(y);
                    while self.next_report <= t + 1e-12 {
                        self.next_report += p;
                    }
                }
                self.held.unwrap()
            }
        }
    }
}

/// Integrates the observer against a plant trace on the same grid.
///
/// Within each step the plant half is re-integrated from its stored grid
/// state so that measurements are available at the RK4 stages
/// (continuous-measurement idealization). With PMU decimation enabled the
/// held report replaces the stage measurement instead.
pub fn simulate_observer(
    c: &DerivedConstants,
    m: &StateMatrices,
    gain: &ObserverGain,
    traj: &InputTrajectory,
    cfg: &SimConfig,
    plant: &PlantTrace,
) -> Result<SimTrace, SimError> {
    cfg.validate()?;
    let n = cfg.steps();
    if plant.times.len() != n + 1 {
        return Err(SimError::GridMismatch { got: plant.times.len(), want: n + 1 });
    }
    let l: Matrix4x2<f64> = gain.matrix();
    let mut schedule = MeasurementSchedule::new(cfg);
    let discrete_measurements = schedule.period.is_some() || schedule.noise.is_some();

    let mut times = Vec::with_capacity(n + 1);
    let mut observer_states = Vec::with_capacity(n + 1);
    let mut observer_outputs = Vec::with_capacity(n + 1);
    let mut error_norm = Vec::with_capacity(n + 1);
    let mut xh = cfg.xhat0.as_vector();

    for i in 0..=n {
        let t = i as f64 * cfg.dt;
        times.push(t);
        let xh_state = State::from_vector(&xh);
        let u = sample_input(traj, t);
        observer_outputs.push(eval_output(c, m, &xh_state, &u));
        error_norm.push((xh - plant.states[i].as_vector()).norm());
        observer_states.push(xh_state);
        if i == n {
            break;
        }

        if discrete_measurements {
            // Measurement fixed over the step: one (possibly noisy, possibly
            // held) report drives all four stages.
            let y = schedule.at_grid(t, &plant.outputs[i].as_vector());
            let next = step_rk4(
                |tt, xv| {
                    let u = sample_input(traj, tt);
                    let s = State::from_vector(xv);
                    let yh = eval_output(c, m, &s, &u).as_vector();
                    eval_dynamics(c, m, &s, &u) + l * (y - yh)
                },
                &xh,
                t,
                cfg.dt,
            );
            check_finite(&next, i)?;
            xh = next;
        } else {
            // Joint stage integration: the plant half replays its stored
            // step so y is exact at every stage.
            let mut xp = plant.states[i].as_vector();
            let (next_p, next_h) =
                joint_rk4_step(c, m, &l, traj, &xp, &xh, t, cfg.dt);
            check_finite(&next_h, i)?;
            xp = next_p;
            debug_assert!((xp - plant.states[i + 1].as_vector()).amax() < 1e-9);
            let _ = xp;
            xh = next_h;
        }
    }

    Ok(SimTrace {
        times,
        plant_states: plant.states.clone(),
        observer_states,
        plant_outputs: plant.outputs.clone(),
        observer_outputs,
        error_norm,
    })
}

#[allow(clippy::too_many_arguments)]
fn joint_rk4_step(
    c: &DerivedConstants,
    m: &StateMatrices,
    l: &Matrix4x2<f64>,
    traj: &InputTrajectory,
    xp: &Vector4<f64>,
    xh: &Vector4<f64>,
    t: f64,
    dt: f64,
) -> (Vector4<f64>, Vector4<f64>) {
    let stage = |tt: f64, p: &Vector4<f64>, h: &Vector4<f64>| {
        let u = sample_input(traj, tt);
        let sp = State::from_vector(p);
        let sh = State::from_vector(h);
        let y = eval_output(c, m, &sp, &u).as_vector();
        let yh = eval_output(c, m, &sh, &u).as_vector();
        (
            eval_dynamics(c, m, &sp, &u),
            eval_dynamics(c, m, &sh, &u) + l * (y - yh),
        )
    };
    let (kp1, kh1) = stage(t, xp, xh);
    let (kp2, kh2) = stage(t + 0.5 * dt, &(xp + kp1 * (0.5 * dt)), &(xh + kh1 * (0.5 * dt)));
    let (kp3, kh3) = stage(t + 0.5 * dt, &(xp + kp2 * (0.5 * dt)), &(xh + kh2 * (0.5 * dt)));
    let (kp4, kh4) = stage(t + dt, &(xp + kp3 * dt), &(xh + kh3 * dt));
    (
        xp + (kp1 + kp2 * 2.0 + kp3 * 2.0 + kp4) * (dt / 6.0),
        xh + (kh1 + kh2 * 2.0 + kh3 * 2.0 + kh4) * (dt / 6.0),
    )
}

/// Summary metrics of a DSE run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// Per-state root-mean-square estimation error.
    pub rmse: [f64; 4],
    /// Error norm at the final step.
    pub final_err: f64,
    /// First time after which the error norm stays below the threshold
    /// fraction of the initial error norm; `None` if it never does.
    pub convergence_time: Option<f64>,
}

pub const DEFAULT_CONVERGENCE_FRACTION: f64 = 0.01;

pub fn error_metrics(trace: &SimTrace) -> ErrorMetrics {
    error_metrics_with_threshold(trace, DEFAULT_CONVERGENCE_FRACTION)
}

pub fn error_metrics_with_threshold(trace: &SimTrace, fraction: f64) -> ErrorMetrics {
    let n = trace.times.len();
    let mut sq = [0.0f64; 4];
    for (p, h) in trace.plant_states.iter().zip(trace.observer_states.iter()) {
        let d = p.as_vector() - h.as_vector();
        for i in 0..4 {
            sq[i] += d[i] * d[i];
        }
    }
    let rmse = std::array::from_fn(|i| (sq[i] / n as f64).sqrt());
    let final_err = *trace.error_norm.last().unwrap();
    let initial = trace.error_norm[0];
    let threshold = fraction * initial;
    let convergence_time = if initial == 0.0 {
        Some(0.0)
    } else {
        // Last index where the error is at or above threshold; converged
        // just after it, permanently.
        let mut last_above = None;
        for (i, &e) in trace.error_norm.iter().enumerate() {
            if e >= threshold {
                last_above = Some(i);
            }
        }
        match last_above {
            None => Some(trace.times[0]),
            Some(i) if i + 1 < n => Some(trace.times[i + 1]),
            Some(_) => None,
        }
    };
    ErrorMetrics { rmse, final_err, convergence_time }
}

/// Writes the trace CSV with header
/// `t,x1,x2,x3,x4,xh1,xh2,xh3,xh4,y1,y2,yh1,yh2,err`.
pub fn trace_to_csv(trace: &SimTrace) -> String {
    let mut out = String::from("t,x1,x2,x3,x4,xh1,xh2,xh3,xh4,y1,y2,yh1,yh2,err\n");
    for i in 0..trace.times.len() {
        let x = trace.plant_states[i];
        let xh = trace.observer_states[i];
        let y = trace.plant_outputs[i];
        let yh = trace.observer_outputs[i];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            trace.times[i],
            x.delta,
            x.omega,
            x.eq_p,
            x.ed_p,
            xh.delta,
            xh.omega,
            xh.eq_p,
            xh.ed_p,
            y.e_r,
            y.e_i,
            yh.e_r,
            yh.e_i,
            trace.error_norm[i]
        ));
    }
    out
}
