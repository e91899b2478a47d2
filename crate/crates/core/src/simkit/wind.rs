//! Wind speed and direction profiles with analytic time derivatives.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aero::WindSample;
use crate::error::{ModelError, ModelResult};

/// Wind description as written in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WindProfile {
    Constant {
        speed: f64,
        direction: f64,
    },
    /// Piecewise constant, switching at `at`.
    Step {
        speed: f64,
        direction: f64,
        at: f64,
        speed_after: f64,
        direction_after: f64,
    },
    /// Linear transition between `start` and `end`.
    Ramp {
        speed: f64,
        direction: f64,
        start: f64,
        end: f64,
        speed_end: f64,
        direction_end: f64,
    },
    /// Mean values plus a seeded sum of sinusoids.
    SeededTurbulence {
        speed: f64,
        direction: f64,
        /// Standard deviation of the speed fluctuation (m/s).
        speed_std: f64,
        /// Standard deviation of the direction fluctuation (rad).
        direction_std: f64,
        #[serde(default = "default_components")]
        components: usize,
        /// Frequency band of the fluctuations (Hz).
        #[serde(default = "default_min_frequency")]
        min_frequency: f64,
        #[serde(default = "default_max_frequency")]
        max_frequency: f64,
    },
}

fn default_components() -> usize {
    8
}
fn default_min_frequency() -> f64 {
    0.02
}
fn default_max_frequency() -> f64 {
    0.5
}

impl Default for WindProfile {
    fn default() -> Self {
        WindProfile::Constant {
            speed: 10.0,
            direction: 0.0,
        }
    }
}

impl WindProfile {
    pub fn validate(&self) -> ModelResult<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(ModelError::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        let finite = |values: &[f64]| values.iter().all(|v| v.is_finite());
        match *self {
            WindProfile::Constant { speed, direction } => {
                if !finite(&[speed, direction]) {
                    return bad("wind", "values must be finite");
                }
            }
            WindProfile::Step {
                speed,
                direction,
                at,
                speed_after,
                direction_after,
            } => {
                if !finite(&[speed, direction, at, speed_after, direction_after]) {
                    return bad("wind", "values must be finite");
                }
            }
            WindProfile::Ramp {
                speed,
                direction,
                start,
                end,
                speed_end,
                direction_end,
            } => {
                if !finite(&[speed, direction, start, end, speed_end, direction_end]) {
                    return bad("wind", "values must be finite");
                }
                if !(end > start) {
                    return bad("wind.end", "ramp end must come after its start");
                }
            }
            WindProfile::SeededTurbulence {
                speed,
                direction,
                speed_std,
                direction_std,
                components,
                min_frequency,
                max_frequency,
            } => {
                if !finite(&[speed, direction, speed_std, direction_std, min_frequency, max_frequency]) {
                    return bad("wind", "values must be finite");
                }
                if speed_std < 0.0 || direction_std < 0.0 {
                    return bad("wind.speed_std", "standard deviations must be non-negative");
                }
                if components == 0 {
                    return bad("wind.components", "at least one component is required");
                }
                if !(min_frequency > 0.0 && max_frequency >= min_frequency) {
                    return bad("wind.max_frequency", "need 0 < min_frequency <= max_frequency");
                }
            }
        }
        Ok(())
    }

    /// Freeze the profile into a sampler; `seed` only matters for turbulence.
    pub fn build(&self, seed: u64) -> WindField {
        let (speed_waves, direction_waves) = match *self {
            WindProfile::SeededTurbulence {
                speed_std,
                direction_std,
                components,
                min_frequency,
                max_frequency,
                ..
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut draw = |std: f64| -> Vec<Wave> {
                    let amplitude = std * (2.0 / components as f64).sqrt();
                    (0..components)
                        .map(|_| Wave {
                            amplitude,
                            angular_frequency: TAU * rng.gen_range(min_frequency..=max_frequency),
                            phase: rng.gen_range(0.0..TAU),
                        })
                        .collect()
                };
                let speed = draw(speed_std);
                let direction = draw(direction_std);
                (speed, direction)
            }
            _ => (Vec::new(), Vec::new()),
        };
        WindField {
            profile: *self,
            speed_waves,
            direction_waves,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Wave {
    amplitude: f64,
    angular_frequency: f64,
    phase: f64,
}

impl Wave {
    /// Value and first three derivatives.
    fn eval(&self, t: f64) -> [f64; 4] {
        let w = self.angular_frequency;
        let (s, c) = (w * t + self.phase).sin_cos();
        let a = self.amplitude;
        [a * s, a * w * c, -a * w * w * s, -a * w * w * w * c]
    }
}

/// A ready-to-sample wind profile.
#[derive(Debug, Clone, PartialEq)]
pub struct WindField {
    profile: WindProfile,
    speed_waves: Vec<Wave>,
    direction_waves: Vec<Wave>,
}

impl WindField {
    pub fn profile(&self) -> &WindProfile {
        &self.profile
    }

    pub fn sample(&self, t: f64) -> WindSample {
        match self.profile {
            WindProfile::Constant { speed, direction } => WindSample::steady(speed, direction),
            WindProfile::Step {
                speed,
                direction,
                at,
                speed_after,
                direction_after,
            } => {
                if t < at {
                    WindSample::steady(speed, direction)
                } else {
                    WindSample::steady(speed_after, direction_after)
                }
            }
            WindProfile::Ramp {
                speed,
                direction,
                start,
                end,
                speed_end,
                direction_end,
            } => {
                if t < start {
                    WindSample::steady(speed, direction)
                } else if t >= end {
                    WindSample::steady(speed_end, direction_end)
                } else {
                    let span = end - start;
                    let frac = (t - start) / span;
                    WindSample {
                        speed: speed + frac * (speed_end - speed),
                        speed_dot: (speed_end - speed) / span,
                        direction: direction + frac * (direction_end - direction),
                        direction_dot: (direction_end - direction) / span,
                        ..WindSample::default()
                    }
                }
            }
            WindProfile::SeededTurbulence { speed, direction, .. } => {
                let sum = |waves: &[Wave]| {
                    waves.iter().fold([0.0; 4], |mut acc, w| {
                        for (a, v) in acc.iter_mut().zip(w.eval(t)) {
                            *a += v;
                        }
                        acc
                    })
                };
                let s = sum(&self.speed_waves);
                let d = sum(&self.direction_waves);
                WindSample {
                    speed: speed + s[0],
                    speed_dot: s[1],
                    direction: direction + d[0],
                    direction_dot: d[1],
                    direction_ddot: d[2],
                    direction_dddot: d[3],
                }
            }
        }
    }
}
