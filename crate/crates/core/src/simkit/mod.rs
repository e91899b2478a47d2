//! Fixed-step closed-loop simulation, fault scheduling, wind profiles and
//! run metrics.

mod metrics;
mod wind;

use serde::{Deserialize, Serialize};

use crate::aero::WindSample;
use crate::control::{outputs, OutputVector};
use crate::error::{ModelError, SimError};
use crate::machine::DqCurrents;
use crate::plant::{derivative_with, ActiveFault, PlantInput, PlantState, StateVector, CURRENT_ROWS};
use crate::scenario::ScenarioConfig;

pub use metrics::{extract_metrics, RunMetrics};
pub use wind::{WindField, WindProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rk4,
    Euler,
}

/// How the control law is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlSampling {
    /// Evaluated on the step grid and held over each control period.
    #[default]
    Hold,
    /// Re-evaluated at every integrator stage (continuous-time law).
    Stage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
    pub control: ControlSampling,
    /// Hold period of the sampled law; defaults to one step.
    pub control_period: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_end: 10.0,
            method: Method::Rk4,
            control: ControlSampling::Hold,
            control_period: None,
        }
    }
}

/// Steps beyond this are rejected as a configuration error.
const MAX_STEPS: f64 = 1e9;

impl IntegratorConfig {
    /// Checks the configuration, returning non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>, ModelError> {
        let bad = |name: &'static str, reason: &str| {
            Err(ModelError::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt", "must be positive");
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return bad("t_end", "must be at least one step");
        }
        if self.t_end / self.dt > MAX_STEPS {
            return bad("dt", "too many steps for the horizon");
        }
        if let Some(period) = self.control_period {
            if !(period.is_finite() && period >= self.dt) {
                return bad("control_period", "must be at least one step");
            }
        }
        let mut warnings = Vec::new();
        if self.dt > 1e-3 {
            warnings.push(format!(
                "dt = {} s exceeds 1e-3 s; electrical transients will be poorly resolved",
                self.dt
            ));
        }
        Ok(warnings)
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    fn control_stride(&self) -> usize {
        self.control_period
            .map_or(1, |p| ((p / self.dt).round() as usize).max(1))
    }
}

/// One recorded instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: PlantState,
    /// Input applied from this instant (NaN when the law could not be evaluated).
    pub input: PlantInput,
    pub outputs: OutputVector,
    pub dq: [DqCurrents; 2],
    pub em_torque: [f64; 2],
    pub aero_torque: [f64; 2],
    pub drag: [f64; 2],
    pub wind: WindSample,
}

impl Sample {
    pub fn phase_currents(&self) -> [f64; 6] {
        let x = &self.state;
        [x.i_a1, x.i_b1, x.i_c1, x.i_a2, x.i_b2, x.i_c2]
    }

    pub fn max_phase_current(&self) -> f64 {
        self.phase_currents().iter().fold(0.0, |m, i| m.max(i.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivergenceCause {
    NonFinite,
    CurrentLimit,
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed,
    Diverged { t: f64, cause: DivergenceCause },
    Failed { t: f64, error: ModelError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub samples: Vec<Sample>,
    pub outcome: Outcome,
}

impl TimeSeries {
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Turn an abnormal ending into an error.
    pub fn into_result(self) -> Result<TimeSeries, SimError> {
        match &self.outcome {
            Outcome::Completed => Ok(self),
            Outcome::Diverged { t, .. } => Err(SimError::DivergedState { t: *t }),
            Outcome::Failed { error, .. } => Err(SimError::Model(error.clone())),
        }
    }
}

/// Grid index of the first step at or after `t`.
pub fn first_step_at(t: f64, dt: f64) -> usize {
    let k = (t / dt).ceil();
    // Undo round-off that pushes an exact multiple one step late.
    let k = if ((k - 1.0) * dt - t).abs() <= 1e-9 * dt.max(t.abs()) { k - 1.0 } else { k };
    k.max(0.0) as usize
}

fn record(t: f64, x: &PlantState, u: PlantInput, wind: &WindSample, fault: Option<&ActiveFault>, scenario: &ScenarioConfig) -> Sample {
    let params = &scenario.plant;
    let mut sample = Sample {
        t,
        state: *x,
        input: u,
        outputs: outputs(x, wind.direction, &scenario.references),
        dq: [DqCurrents::default(); 2],
        em_torque: [f64::NAN; 2],
        aero_torque: [f64::NAN; 2],
        drag: [f64::NAN; 2],
        wind: *wind,
    };
    for i in 0..2 {
        sample.dq[i] = crate::machine::dq_currents(&x.currents(i), x.theta_e(i));
        sample.em_torque[i] = crate::machine::electromagnetic_torque(sample.dq[i].d, sample.dq[i].q, &params.machine);
    }
    if let Ok(eval) = params.evaluate(x, wind, fault) {
        for i in 0..2 {
            sample.aero_torque[i] = eval.rotors[i].torque;
            sample.drag[i] = eval.rotors[i].drag;
        }
    }
    sample
}

const NAN_INPUT: PlantInput = PlantInput {
    delta_beta: f64::NAN,
    v_an1: f64::NAN,
    v_bn1: f64::NAN,
    v_cn1: f64::NAN,
    v_an2: f64::NAN,
    v_bn2: f64::NAN,
    v_cn2: f64::NAN,
};

/// The peak phase current a run is compared against after the fault onset.
struct DivergenceGuard {
    onset_step: Option<usize>,
    window_start: f64,
    ratio: f64,
    peak: f64,
    fallback: f64,
}

impl DivergenceGuard {
    fn observe_recorded(&mut self, k: usize, sample: &Sample) {
        if self.onset_step.is_some_and(|on| k < on) {
            let current = sample.max_phase_current();
            if sample.t >= self.window_start {
                self.peak = self.peak.max(current);
            } else {
                self.fallback = current;
            }
        }
    }

    fn limit(&self) -> Option<f64> {
        self.onset_step?;
        let peak = if self.peak > 0.0 { self.peak } else { self.fallback };
        (peak > 0.0).then_some(self.ratio * peak)
    }
}

/// Run the closed loop described by `scenario`.
///
/// Invalid scenarios are rejected up front; failures during the run end it
/// early and are reported through [`TimeSeries::outcome`], with the samples
/// recorded so far and the offending state as the last sample.
pub fn integrate(scenario: &ScenarioConfig) -> Result<TimeSeries, SimError> {
    scenario.validate().map_err(|e| match e {
        crate::scenario::ConfigError::Model { source, .. } => SimError::Model(source),
        other => SimError::Model(ModelError::InvalidParameter {
            name: "scenario",
            reason: other.to_string(),
        }),
    })?;

    let cfg = &scenario.integrator;
    let params = &scenario.plant;
    let wind = scenario.wind.build(scenario.seed);
    let law = &scenario.controller;
    let refs = &scenario.references;
    let dt = cfg.dt;
    let steps = cfg.steps();
    let stride = cfg.control_stride();
    let record_every = scenario.output.record_every.max(1);
    let onset_step = scenario.fault.map(|f| first_step_at(f.t_on, dt));
    let fault_at = |k: usize| -> Option<ActiveFault> {
        let f = scenario.fault?;
        (k >= onset_step?).then(|| f.active_at(f64::INFINITY)).flatten()
    };

    let mut guard = DivergenceGuard {
        onset_step,
        window_start: scenario
            .fault
            .map_or(0.0, |f| f.t_on - scenario.metrics.reference_window),
        ratio: scenario.metrics.divergence_ratio,
        peak: 0.0,
        fallback: 0.0,
    };

    let mut x = scenario.initial_state();
    let mut samples = Vec::with_capacity(steps / record_every + 2);
    let mut u = PlantInput::default();
    let mut outcome = Outcome::Completed;

    for k in 0..steps {
        let t = k as f64 * dt;
        let fault = fault_at(k);
        let w = wind.sample(t);
        if k % stride == 0 || cfg.control == ControlSampling::Stage {
            match law.evaluate(&x, &w, fault.as_ref(), refs, params) {
                Ok(v) => u = v,
                Err(error) => {
                    samples.push(record(t, &x, NAN_INPUT, &w, fault.as_ref(), scenario));
                    outcome = Outcome::Failed { t, error };
                    break;
                }
            }
        }
        if k % record_every == 0 {
            let sample = record(t, &x, u, &w, fault.as_ref(), scenario);
            guard.observe_recorded(k, &sample);
            samples.push(sample);
        }

        let stage = |s: f64, v: &StateVector| -> Result<StateVector, ModelError> {
            let xs = PlantState::from_vector(v);
            let ws = wind.sample(s);
            let us = match cfg.control {
                ControlSampling::Hold => u,
                ControlSampling::Stage => law.evaluate(&xs, &ws, fault.as_ref(), refs, params)?,
            };
            derivative_with(&xs, &us, fault.as_ref(), &ws, params)
        };
        let x0 = x.to_vector();
        let next = match cfg.method {
            Method::Euler => stage(t, &x0).map(|k1| x0 + k1 * dt),
            Method::Rk4 => rk4_step(&stage, t, &x0, dt),
        };
        let next = match next {
            Ok(v) => v,
            Err(error) => {
                outcome = Outcome::Failed { t, error };
                break;
            }
        };
        let t_next = (k + 1) as f64 * dt;
        x = PlantState::from_vector(&next);

        let cause = if !x.is_finite() {
            Some(DivergenceCause::NonFinite)
        } else {
            guard
                .limit()
                .filter(|_| onset_step.is_some_and(|on| k + 1 >= on))
                .filter(|&limit| max_current(&next) > limit)
                .map(|_| DivergenceCause::CurrentLimit)
        };
        if let Some(cause) = cause {
            outcome = Outcome::Diverged { t: t_next, cause };
            break;
        }
    }

    // Always close the record with the final (or offending) state.
    let t_x = match &outcome {
        Outcome::Completed => steps as f64 * dt,
        Outcome::Diverged { t, .. } | Outcome::Failed { t, .. } => *t,
    };
    if samples.last().map(|s| s.t) != Some(t_x) {
        let fault = fault_at((t_x / dt).round() as usize);
        let w = wind.sample(t_x);
        let input = if x.is_finite() {
            law.evaluate(&x, &w, fault.as_ref(), refs, params).unwrap_or(NAN_INPUT)
        } else {
            NAN_INPUT
        };
        samples.push(record(t_x, &x, input, &w, fault.as_ref(), scenario));
    }

    Ok(TimeSeries { samples, outcome })
}

fn max_current(x: &StateVector) -> f64 {
    CURRENT_ROWS
        .iter()
        .flat_map(|&r| (r..r + 3).map(move |j| x[j].abs()))
        .fold(0.0, f64::max)
}

fn rk4_step<F>(f: &F, t: f64, x: &StateVector, dt: f64) -> Result<StateVector, ModelError>
where
    F: Fn(f64, &StateVector) -> Result<StateVector, ModelError>,
{
    let half = 0.5 * dt;
    let k1 = f(t, x)?;
    let k2 = f(t + half, &(x + k1 * half))?;
    let k3 = f(t + half, &(x + k2 * half))?;
    let k4 = f(t + dt, &(x + k3 * dt))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}
