//! Scenario files: everything a run needs, in TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{ControlLaw, ControllerGains, References};
use crate::error::ModelError;
use crate::plant::{FaultSpec, PlantParams, PlantState};
use crate::simkit::{IntegratorConfig, RunMetrics, WindProfile};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("invalid `{field}`: {source}")]
    Model {
        field: String,
        #[source]
        source: ModelError,
    },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn in_section(section: &str) -> impl Fn(ModelError) -> ConfigError + '_ {
    move |source| {
        let field = match &source {
            ModelError::InvalidParameter { name, .. } => format!("{section}.{name}"),
            _ => section.to_string(),
        };
        ConfigError::Model { field, source }
    }
}

/// Evaluation window and divergence criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSpec {
    pub window_start: f64,
    /// Defaults to the end of the run.
    pub window_end: Option<f64>,
    /// Length of the pre-fault window defining the reference current peak (s).
    pub reference_window: f64,
    /// A phase current above this multiple of the reference peak is divergence.
    pub divergence_ratio: f64,
    /// Bands used for settle times.
    pub yaw_band: f64,
    pub speed_band: f64,
}

impl Default for MetricsSpec {
    fn default() -> Self {
        Self {
            window_start: 2.0,
            window_end: None,
            reference_window: 1.0,
            divergence_ratio: 10.0,
            yaw_band: 0.01,
            speed_band: 0.01,
        }
    }
}

/// Pass/fail limits for a run; absent limits are not checked.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// `max |psi - alpha|` (rad).
    pub yaw_error: Option<f64>,
    /// Relative speed error.
    pub speed_error: Option<f64>,
    pub direct_current: Option<f64>,
    pub homopolar_current: Option<f64>,
    /// `max |i_a + i_b + i_c|` as a fraction of the peak phase current.
    pub phase_sum_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub failures: Vec<String>,
}

impl Thresholds {
    /// Compare metrics to the limits. Divergence or an unfinished run always fails.
    pub fn verdict(&self, m: &RunMetrics) -> Verdict {
        let mut failures = Vec::new();
        if m.diverged {
            failures.push(format!("diverged at t = {} s", m.divergence_time.unwrap_or(f64::NAN)));
        } else if !m.completed {
            failures.push("run did not reach the horizon".to_string());
        }
        let mut check = |name: &str, value: f64, limit: Option<f64>| {
            if let Some(limit) = limit {
                if !(value < limit) {
                    failures.push(format!("{name} = {value:e} exceeds {limit:e}"));
                }
            }
        };
        check("yaw_error", m.yaw_error_max, self.yaw_error);
        for i in 0..2 {
            let n = i + 1;
            check(&format!("speed_error{n}"), m.speed_error_max[i], self.speed_error);
            check(&format!("direct_current{n}"), m.direct_current_max[i], self.direct_current);
            check(&format!("homopolar_current{n}"), m.homopolar_current_max[i], self.homopolar_current);
            if let Some(fraction) = self.phase_sum_fraction {
                check(
                    &format!("phase_sum{n}"),
                    m.phase_sum_max[i],
                    Some(fraction * m.phase_current_peak[i]),
                );
            }
        }
        Verdict {
            pass: failures.is_empty(),
            failures,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Record every n-th step.
    pub record_every: usize,
    /// Write SVG charts next to the CSV.
    pub plot: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            record_every: 1,
            plot: false,
        }
    }
}

impl Default for References {
    fn default() -> Self {
        Self {
            omega_ref1: 45.0,
            omega_ref2: 45.0,
        }
    }
}

impl Default for ControlLaw {
    fn default() -> Self {
        ControlLaw::Active {
            tuning: ControllerGains::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Seed of the turbulent wind; other profiles ignore it.
    pub seed: u64,
    pub plant: PlantParams,
    pub wind: WindProfile,
    pub references: References,
    pub controller: ControlLaw,
    pub fault: Option<FaultSpec>,
    pub integrator: IntegratorConfig,
    /// Defaults to [`ScenarioConfig::default_initial_state`].
    pub initial: Option<PlantState>,
    pub metrics: MetricsSpec,
    pub thresholds: Thresholds,
    pub output: OutputConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".to_string(),
            seed: 0,
            plant: PlantParams::default(),
            wind: WindProfile::default(),
            references: References::default(),
            controller: ControlLaw::default(),
            fault: None,
            integrator: IntegratorConfig::default(),
            initial: None,
            metrics: MetricsSpec::default(),
            thresholds: Thresholds::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })
    }

    /// Read, parse and validate a scenario file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config = Self::from_toml_str(&text, &path.display().to_string())?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Slightly off the operating point: yaw misaligned by 0.02 rad, rotors at
    /// 95% of their reference speed, pitch at its set point, zero currents.
    pub fn default_initial_state(&self) -> PlantState {
        let wind = self.wind.build(self.seed).sample(0.0);
        let beta = self.plant.pitch_reference;
        PlantState {
            beta1: beta,
            beta2: beta,
            psi: wind.direction + 0.02,
            omega1: 0.95 * self.references.omega_ref1,
            omega2: 0.95 * self.references.omega_ref2,
            ..PlantState::default()
        }
    }

    pub fn initial_state(&self) -> PlantState {
        self.initial.unwrap_or_else(|| self.default_initial_state())
    }

    /// Check every section; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        self.plant.aero.validate().map_err(in_section("plant.aero"))?;
        self.plant.machine.validate().map_err(in_section("plant.machine"))?;
        self.plant.validate().map_err(in_section("plant"))?;
        self.wind.validate().map_err(in_section("wind"))?;
        self.controller.validate().map_err(in_section("controller"))?;
        let warnings = self.integrator.validate().map_err(in_section("integrator"))?;

        for (i, r) in [self.references.omega_ref1, self.references.omega_ref2].iter().enumerate() {
            if !(r.is_finite() && *r > 0.0) {
                return Err(invalid(&format!("references.omega_ref{}", i + 1), "must be positive"));
            }
        }
        if let Some(fault) = &self.fault {
            fault.validate().map_err(in_section("fault.mu_bar"))?;
            if !(fault.t_on.is_finite() && fault.t_on >= 0.0) {
                return Err(invalid("fault.t_on", "must be a non-negative time"));
            }
        }
        if let Some(x) = &self.initial {
            if !x.is_finite() {
                return Err(invalid("initial", "all state entries must be finite"));
            }
        }

        let m = &self.metrics;
        if !(m.window_start.is_finite() && m.window_start >= 0.0) {
            return Err(invalid("metrics.window_start", "must be a non-negative time"));
        }
        if let Some(end) = m.window_end {
            if !(end.is_finite() && end > m.window_start) {
                return Err(invalid("metrics.window_end", "must come after window_start"));
            }
        }
        if m.window_start > self.integrator.t_end {
            return Err(invalid("metrics.window_start", "lies beyond the horizon"));
        }
        for (name, v) in [
            ("metrics.reference_window", m.reference_window),
            ("metrics.divergence_ratio", m.divergence_ratio),
            ("metrics.yaw_band", m.yaw_band),
            ("metrics.speed_band", m.speed_band),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, "must be positive"));
            }
        }
        let t = &self.thresholds;
        for (name, v) in [
            ("thresholds.yaw_error", t.yaw_error),
            ("thresholds.speed_error", t.speed_error),
            ("thresholds.direct_current", t.direct_current),
            ("thresholds.homopolar_current", t.homopolar_current),
            ("thresholds.phase_sum_fraction", t.phase_sum_fraction),
        ] {
            if v.is_some_and(|v| !(v.is_finite() && v > 0.0)) {
                return Err(invalid(name, "must be positive"));
            }
        }
        if self.output.record_every == 0 {
            return Err(invalid("output.record_every", "must be at least 1"));
        }
        Ok(warnings)
    }
}
