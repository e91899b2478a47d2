//! Summary metrics of a run, recomputable from the recorded samples alone.

use serde::{Deserialize, Serialize};

use super::{first_step_at, Sample};
use crate::scenario::{MetricsSpec, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Evaluation window actually covered `[start, end]` (s).
    pub window: [f64; 2],
    pub window_samples: usize,
    /// `max |psi - alpha|` (rad).
    pub yaw_error_max: f64,
    /// `max |Omega_i - ref_i| / ref_i`.
    pub speed_error_max: [f64; 2],
    pub direct_current_max: [f64; 2],
    pub homopolar_current_max: [f64; 2],
    /// `max |i_a + i_b + i_c|` per machine (A).
    pub phase_sum_max: [f64; 2],
    /// Peak phase current per machine in the window (A).
    pub phase_current_peak: [f64; 2],
    pub completed: bool,
    pub diverged: bool,
    pub divergence_time: Option<f64>,
    /// First time after which the error stays inside its band.
    pub yaw_settle_time: Option<f64>,
    pub speed_settle_time: [Option<f64>; 2],
}

fn settle_time(samples: &[Sample], inside: impl Fn(&Sample) -> bool) -> Option<f64> {
    let last = samples.last()?;
    if !inside(last) {
        return None;
    }
    let first_inside = samples
        .iter()
        .rposition(|s| !inside(s))
        .map_or(0, |k| k + 1);
    Some(samples[first_inside].t)
}

/// Divergence check shared with the integrator: a non-finite state, or a
/// phase current above `ratio` times the pre-fault peak once the fault is on.
fn divergence_time(samples: &[Sample], scenario: &ScenarioConfig) -> Option<f64> {
    let spec: &MetricsSpec = &scenario.metrics;
    let dt = scenario.integrator.dt;
    let onset = scenario.fault.map(|f| (f.t_on, first_step_at(f.t_on, dt) as f64 * dt));
    let limit = onset.and_then(|(t_on, t_grid)| {
        let before: Vec<&Sample> = samples.iter().filter(|s| s.t < t_grid).collect();
        let in_window = before
            .iter()
            .filter(|s| s.t >= t_on - spec.reference_window)
            .map(|s| s.max_phase_current())
            .fold(0.0, f64::max);
        let peak = if in_window > 0.0 {
            in_window
        } else {
            before.last().map_or(0.0, |s| s.max_phase_current())
        };
        (peak > 0.0).then_some((t_grid, spec.divergence_ratio * peak))
    });
    samples.iter().find_map(|s| {
        let non_finite = !s.state.is_finite();
        let over = limit.is_some_and(|(t_grid, limit)| s.t >= t_grid && s.max_phase_current() > limit);
        (non_finite || over).then_some(s.t)
    })
}

/// Metrics of `samples` over the scenario's evaluation window.
pub fn extract_metrics(samples: &[Sample], scenario: &ScenarioConfig) -> RunMetrics {
    let spec = &scenario.metrics;
    let t_end = scenario.integrator.t_end;
    let start = spec.window_start;
    let end = spec.window_end.unwrap_or(t_end);
    let refs = &scenario.references;
    let window: Vec<&Sample> = samples.iter().filter(|s| s.t >= start && s.t <= end).collect();

    let max_of = |f: &dyn Fn(&Sample) -> f64| window.iter().map(|s| f(s).abs()).fold(0.0, f64::max);
    let pair = |f: &dyn Fn(&Sample, usize) -> f64| [max_of(&|s| f(s, 0)), max_of(&|s| f(s, 1))];

    let last_t = samples.last().map_or(0.0, |s| s.t);
    let divergence_time = divergence_time(samples, scenario);
    let yaw_band = spec.yaw_band;
    let speed_band = spec.speed_band;
    let speed_inside = |i: usize| {
        move |s: &Sample| {
            let e = [s.outputs.speed_error1, s.outputs.speed_error2][i];
            (e / refs.omega_ref(i)).abs() < speed_band
        }
    };

    RunMetrics {
        window: [start, end.min(last_t)],
        window_samples: window.len(),
        yaw_error_max: max_of(&|s| s.outputs.yaw_error),
        speed_error_max: pair(&|s, i| [s.outputs.speed_error1, s.outputs.speed_error2][i] / refs.omega_ref(i)),
        direct_current_max: pair(&|s, i| s.dq[i].d),
        homopolar_current_max: pair(&|s, i| s.dq[i].h),
        phase_sum_max: pair(&|s, i| s.state.currents(i).sum()),
        phase_current_peak: pair(&|s, i| s.state.currents(i).amax()),
        completed: divergence_time.is_none() && (last_t - t_end).abs() <= 0.5 * scenario.integrator.dt,
        diverged: divergence_time.is_some(),
        divergence_time,
        yaw_settle_time: settle_time(samples, |s| s.outputs.yaw_error.abs() < yaw_band),
        speed_settle_time: [settle_time(samples, speed_inside(0)), settle_time(samples, speed_inside(1))],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::References;

    fn scenario() -> ScenarioConfig {
        let mut s = ScenarioConfig::default();
        s.integrator.t_end = 1.0;
        s.integrator.dt = 0.01;
        s.metrics.window_start = 0.0;
        s.references = References {
            omega_ref1: 0.0,
            omega_ref2: 0.0,
        };
        s
    }

    fn zero_samples(n: usize, dt: f64) -> Vec<Sample> {
        (0..=n)
            .map(|k| Sample {
                t: k as f64 * dt,
                state: Default::default(),
                input: Default::default(),
                outputs: Default::default(),
                dq: Default::default(),
                em_torque: [0.0; 2],
                aero_torque: [0.0; 2],
                drag: [0.0; 2],
                wind: Default::default(),
            })
            .collect()
    }

    #[test]
    fn all_zero_trajectory_has_zero_errors() {
        let mut s = scenario();
        s.references = References {
            omega_ref1: 1.0,
            omega_ref2: 1.0,
        };
        let samples = zero_samples(100, 0.01);
        let mut zeroed = samples.clone();
        for z in &mut zeroed {
            z.state.omega1 = 1.0;
            z.state.omega2 = 1.0;
        }
        let m = extract_metrics(&zeroed, &s);
        assert_eq!(m.yaw_error_max, 0.0);
        assert_eq!(m.speed_error_max, [0.0, 0.0]);
        assert_eq!(m.direct_current_max, [0.0, 0.0]);
        assert_eq!(m.homopolar_current_max, [0.0, 0.0]);
        assert_eq!(m.phase_sum_max, [0.0, 0.0]);
        assert!(!m.diverged);
        assert!(m.completed);
        assert_eq!(m.yaw_settle_time, Some(0.0));
    }

    #[test]
    fn sinusoidal_direct_current_amplitude() {
        let s = scenario();
        let mut samples = zero_samples(1000, 0.001);
        for z in &mut samples {
            z.dq[0].d = 0.3 * (std::f64::consts::TAU * 5.0 * z.t).sin();
        }
        let m = extract_metrics(&samples, &s);
        assert!((m.direct_current_max[0] - 0.3).abs() < 1e-12);
        assert_eq!(m.direct_current_max[1], 0.0);
    }

    #[test]
    fn truncated_run_is_not_completed() {
        let s = scenario();
        let m = extract_metrics(&zero_samples(50, 0.01), &s);
        assert!(!m.completed);
        assert!(!m.diverged);
    }

    #[test]
    fn non_finite_sample_marks_divergence() {
        let s = scenario();
        let mut samples = zero_samples(50, 0.01);
        samples[50].state.i_a1 = f64::NAN;
        let m = extract_metrics(&samples, &s);
        assert!(m.diverged);
        assert_eq!(m.divergence_time, Some(0.5));
    }

    #[test]
    fn settle_time_is_last_band_entry() {
        let s = scenario();
        let mut samples = zero_samples(100, 0.01);
        for z in samples.iter_mut().take(31) {
            z.outputs.yaw_error = 0.5;
        }
        let m = extract_metrics(&samples, &s);
        assert_eq!(m.yaw_settle_time, Some(samples[31].t));
    }
}
