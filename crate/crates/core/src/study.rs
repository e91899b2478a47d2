//! Batch studies: side-by-side comparison and severity sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, SimError};
use crate::scenario::{ScenarioConfig, Verdict};
use crate::simkit::{extract_metrics, integrate, Outcome, RunMetrics, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OutcomeSummary {
    Completed,
    Diverged { t: f64 },
    Failed { t: f64, reason: String },
}

impl From<&Outcome> for OutcomeSummary {
    fn from(o: &Outcome) -> Self {
        match o {
            Outcome::Completed => OutcomeSummary::Completed,
            Outcome::Diverged { t, .. } => OutcomeSummary::Diverged { t: *t },
            Outcome::Failed { t, error } => OutcomeSummary::Failed {
                t: *t,
                reason: error.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub controller: String,
    pub mu_bar: f64,
    pub outcome: OutcomeSummary,
    pub metrics: RunMetrics,
    pub verdict: Verdict,
}

/// Integrate one scenario and summarize it.
pub fn run_scenario(scenario: &ScenarioConfig) -> Result<(TimeSeries, RunReport), SimError> {
    let series = integrate(scenario)?;
    let metrics = extract_metrics(&series.samples, scenario);
    let verdict = scenario.thresholds.verdict(&metrics);
    let report = RunReport {
        name: scenario.name.clone(),
        controller: scenario.controller.label().to_string(),
        mu_bar: scenario.fault.map_or(0.0, |f| f.mu_bar),
        outcome: OutcomeSummary::from(&series.outcome),
        metrics,
        verdict,
    };
    Ok((series, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub runs: Vec<RunReport>,
}

impl ComparisonReport {
    pub fn verdicts(&self) -> Vec<bool> {
        self.runs.iter().map(|r| r.verdict.pass).collect()
    }

    /// Plain-text table, one row per run.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<24} {:<8} {:>6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}  {}\n",
            "scenario", "control", "mu", "yaw_err", "speed_err", "max|i_d|", "max|i_h|", "max|sum|", "diverged", "verdict"
        );
        for r in &self.runs {
            let m = &r.metrics;
            // A run that ended before the window has no window maxima.
            let cell = |v: f64| {
                if m.window_samples == 0 {
                    "-".to_string()
                } else {
                    format!("{v:.3e}")
                }
            };
            let max2 = |v: [f64; 2]| cell(v[0].max(v[1]));
            out += &format!(
                "{:<24} {:<8} {:>6.3} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}  {}\n",
                r.name,
                r.controller,
                r.mu_bar,
                cell(m.yaw_error_max),
                max2(m.speed_error_max),
                max2(m.direct_current_max),
                max2(m.homopolar_current_max),
                max2(m.phase_sum_max),
                m.divergence_time.map_or("no".to_string(), |t| format!("{t:.4}")),
                if r.verdict.pass { "pass" } else { "fail" },
            );
        }
        out
    }
}

/// Run every scenario in parallel; reports keep the input order.
pub fn compare(scenarios: &[ScenarioConfig]) -> Result<ComparisonReport, SimError> {
    let runs = scenarios
        .par_iter()
        .map(|s| run_scenario(s).map(|(_, report)| report))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ComparisonReport { runs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub mu_bar: f64,
    pub tolerated: bool,
    pub outcome: OutcomeSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub name: String,
    pub controller: String,
    pub points: Vec<SweepPoint>,
    /// Largest severity below the first intolerable one.
    pub largest_tolerated: Option<f64>,
    pub first_failure: Option<f64>,
}

/// Re-run `base` at each severity. A severity is tolerated when the run reaches
/// its horizon without meeting the divergence criterion.
pub fn sweep(base: &ScenarioConfig, mu_values: &[f64]) -> Result<SweepReport, SimError> {
    let fault = base.fault.ok_or(ModelError::InvalidParameter {
        name: "fault",
        reason: "a severity sweep needs a [fault] section".into(),
    })?;
    let mut mus = mu_values.to_vec();
    mus.sort_by(f64::total_cmp);
    mus.dedup();
    for &mu in &mus {
        if !(0.0..1.0).contains(&mu) {
            return Err(ModelError::InvalidSeverity(mu).into());
        }
    }
    let points = mus
        .par_iter()
        .map(|&mu_bar| {
            let mut scenario = base.clone();
            scenario.fault = Some(crate::plant::FaultSpec { mu_bar, ..fault });
            let series = integrate(&scenario)?;
            let metrics = extract_metrics(&series.samples, &scenario);
            Ok(SweepPoint {
                mu_bar,
                tolerated: metrics.completed && !metrics.diverged,
                outcome: OutcomeSummary::from(&series.outcome),
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    let first_failure = points.iter().find(|p| !p.tolerated).map(|p| p.mu_bar);
    let largest_tolerated = points
        .iter()
        .take_while(|p| p.tolerated)
        .last()
        .map(|p| p.mu_bar);
    Ok(SweepReport {
        name: base.name.clone(),
        controller: base.controller.label().to_string(),
        points,
        largest_tolerated,
        first_failure,
    })
}

impl SweepReport {
    pub fn table(&self) -> String {
        let mut out = format!("{} ({})\n", self.name, self.controller);
        for p in &self.points {
            let status = match &p.outcome {
                OutcomeSummary::Completed => "completed".to_string(),
                OutcomeSummary::Diverged { t } => format!("diverged at {t:.4} s"),
                OutcomeSummary::Failed { t, reason } => format!("failed at {t:.4} s: {reason}"),
            };
            out += &format!(
                "  mu = {:.4}  {}  {}\n",
                p.mu_bar,
                if p.tolerated { "ok  " } else { "FAIL" },
                status
            );
        }
        out += &format!(
            "  largest tolerated: {}\n",
            self.largest_tolerated.map_or("none".to_string(), |m| format!("{m:.4}"))
        );
        out
    }
}
