//! Aerodynamics of the two rotors and the yaw (orientation) dynamics of the
//! shared structure.
//!
//! Both rotors see the same effective wind `w = Vv cos(psi - alpha)`. Power and
//! torque follow from a power coefficient `Cp(lambda, beta)`, the drag force from
//! a drag coefficient that is affine in pitch, `Cd = A(lambda) + B(lambda) beta`,
//! with cubic `A` and `B`. The structure turns about its vertical axis under the
//! drag difference of the two rotors.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, ModelResult};

/// Below this magnitude (m/s) the effective wind `Vv cos(psi - alpha)` is
/// treated as degenerate.
pub const ORIENTATION_FLOOR: f64 = 1e-3;

/// Smallest tip speed ratio accepted by [`aerodynamic_torque`].
pub const TIP_SPEED_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeroParams {
    /// Air density (kg/m^3).
    pub rho: f64,
    /// Blade radius (m).
    pub blade_radius: f64,
    /// Yaw inertia of the structure (kg m^2).
    pub yaw_inertia: f64,
    /// Yaw friction (N m s/rad).
    pub yaw_friction: f64,
    /// Lever arm between the horizontal and vertical axes (m).
    pub lever_arm: f64,
    /// Pitch actuator time constant (s).
    pub pitch_time_constant: f64,
}

impl Default for AeroParams {
    fn default() -> Self {
        Self {
            rho: 1.25,
            blade_radius: 2.0,
            yaw_inertia: 20.0,
            yaw_friction: 10.0,
            lever_arm: 2.0,
            pitch_time_constant: 0.1,
        }
    }
}

impl AeroParams {
    pub fn validate(&self) -> ModelResult<()> {
        let fields = [
            ("rho", self.rho),
            ("blade_radius", self.blade_radius),
            ("yaw_inertia", self.yaw_inertia),
            ("yaw_friction", self.yaw_friction),
            ("lever_arm", self.lever_arm),
            ("pitch_time_constant", self.pitch_time_constant),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParameter {
                    name,
                    reason: format!("must be finite and strictly positive, got {value}"),
                });
            }
        }
        Ok(())
    }

    /// `pi rho / 2`, the common prefactor of power, torque and drag.
    #[inline]
    pub fn dynamic_factor(&self) -> f64 {
        std::f64::consts::PI * self.rho / 2.0
    }
}

/// Instantaneous wind with the time derivatives the control law needs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WindSample {
    /// Wind speed `Vv` (m/s).
    pub speed: f64,
    pub speed_dot: f64,
    /// Wind direction `alpha` (rad) and its first three derivatives.
    pub direction: f64,
    pub direction_dot: f64,
    pub direction_ddot: f64,
    pub direction_dddot: f64,
}

impl WindSample {
    pub fn steady(speed: f64, direction: f64) -> Self {
        Self {
            speed,
            direction,
            ..Self::default()
        }
    }

    /// `Vv cos(psi - alpha)`.
    #[inline]
    pub fn effective(&self, psi: f64) -> f64 {
        self.speed * (psi - self.direction).cos()
    }

    /// Time derivative of [`Self::effective`] given the yaw rate.
    #[inline]
    pub fn effective_dot(&self, psi: f64, psi_dot: f64) -> f64 {
        let angle = psi - self.direction;
        self.speed_dot * angle.cos() - self.speed * angle.sin() * (psi_dot - self.direction_dot)
    }
}

/// Cubic drag polynomials `A(lambda)` and `B(lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragPolynomial {
    pub a: [f64; 4],
    pub b: [f64; 4],
}

impl Default for DragPolynomial {
    fn default() -> Self {
        Self {
            a: [0.25382, -0.1369, 0.04345, -0.00263],
            b: [-0.008608, 0.0063, -0.0015, 0.000118],
        }
    }
}

fn cubic(c: &[f64; 4], x: f64) -> f64 {
    ((c[3] * x + c[2]) * x + c[1]) * x + c[0]
}

fn cubic_slope(c: &[f64; 4], x: f64) -> f64 {
    (3.0 * c[3] * x + 2.0 * c[2]) * x + c[1]
}

impl DragPolynomial {
    pub fn offset(&self, lambda: f64) -> f64 {
        cubic(&self.a, lambda)
    }

    /// Pitch sensitivity `B(lambda)`.
    pub fn slope(&self, lambda: f64) -> f64 {
        cubic(&self.b, lambda)
    }

    pub fn offset_dlambda(&self, lambda: f64) -> f64 {
        cubic_slope(&self.a, lambda)
    }

    pub fn slope_dlambda(&self, lambda: f64) -> f64 {
        cubic_slope(&self.b, lambda)
    }
}

/// `lambda = Rp Omega / (Vv cos(psi - alpha))`.
pub fn tip_speed_ratio(
    blade_radius: f64,
    omega: f64,
    wind_speed: f64,
    psi: f64,
    alpha: f64,
) -> ModelResult<f64> {
    let effective = wind_speed * (psi - alpha).cos();
    if effective.abs() < ORIENTATION_FLOOR {
        return Err(ModelError::SingularOrientation { effective });
    }
    Ok(blade_radius * omega / effective)
}

pub fn drag_coefficient(lambda: f64, beta: f64, poly: &DragPolynomial) -> f64 {
    poly.offset(lambda) + poly.slope(lambda) * beta
}

/// Drag force of one rotor (N).
pub fn drag_force(wind: &WindSample, psi: f64, cd: f64, params: &AeroParams) -> f64 {
    let w = wind.effective(psi);
    params.dynamic_factor() * cd * params.blade_radius.powi(2) * w * w
}

/// Mechanical power extracted by one rotor (W).
pub fn mechanical_power(wind: &WindSample, psi: f64, cp: f64, params: &AeroParams) -> f64 {
    let w = wind.effective(psi);
    params.dynamic_factor() * cp * params.blade_radius.powi(2) * w.powi(3)
}

/// Aerodynamic torque on one rotor (N m). Callers that may sit at zero speed
/// floor `lambda` at [`TIP_SPEED_FLOOR`] first.
pub fn aerodynamic_torque(
    wind: &WindSample,
    psi: f64,
    lambda: f64,
    cp: f64,
    params: &AeroParams,
) -> ModelResult<f64> {
    if !(lambda >= TIP_SPEED_FLOOR) {
        return Err(ModelError::DegenerateTipSpeed { lambda });
    }
    let w = wind.effective(psi);
    Ok(params.dynamic_factor() / lambda * cp * params.blade_radius.powi(3) * w * w)
}

// Exponential power-coefficient surface; pitch enters in degrees.
const CP_C1: f64 = 0.5176;
const CP_C2: f64 = 116.0;
const CP_C3: f64 = 0.4;
const CP_C4: f64 = 5.0;
const CP_C5: f64 = 21.0;
const CP_C6: f64 = 0.0068;

/// `Cp` together with its partial derivatives in `lambda` and `beta` (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CpPartials {
    pub value: f64,
    pub d_lambda: f64,
    pub d_beta: f64,
}

/// Power coefficient `Cp(lambda, beta)` with `beta` in radians.
///
/// `Cp = c1 (c2 / li - c3 b - c4) exp(-c5 / li) + c6 lambda`, where `b` is the
/// pitch in degrees (negative pitch clamped to zero) and
/// `1/li = 1/(lambda + 0.08 b) - 0.035/(b^3 + 1)`. The result is clamped at zero.
pub fn power_coefficient(lambda: f64, beta: f64) -> f64 {
    power_coefficient_partials(lambda, beta).value
}

pub fn power_coefficient_partials(lambda: f64, beta: f64) -> CpPartials {
    if !(lambda > 0.0) {
        return CpPartials::default();
    }
    let deg = 180.0 / std::f64::consts::PI;
    let (b, db_dbeta) = if beta > 0.0 { (beta * deg, deg) } else { (0.0, 0.0) };

    let x = lambda + 0.08 * b;
    let q = b * b * b + 1.0;
    let inv = 1.0 / x - 0.035 / q;
    let inv_dlambda = -1.0 / (x * x);
    let inv_db = -0.08 / (x * x) + 0.035 * 3.0 * b * b / (q * q);

    let exponent = -CP_C5 * inv;
    let (value, d_inv, d_b_direct) = if exponent < -700.0 {
        (CP_C6 * lambda, 0.0, 0.0)
    } else {
        let e = exponent.exp();
        let g = CP_C2 * inv - CP_C3 * b - CP_C4;
        (
            CP_C1 * g * e + CP_C6 * lambda,
            CP_C1 * e * (CP_C2 - CP_C5 * g),
            -CP_C1 * CP_C3 * e,
        )
    };
    if value <= 0.0 {
        return CpPartials::default();
    }
    CpPartials {
        value,
        d_lambda: d_inv * inv_dlambda + CP_C6,
        d_beta: (d_inv * inv_db + d_b_direct) * db_dbeta,
    }
}

/// Yaw acceleration `(-fr psi_dot + (F1 - F2) l) / dr`.
pub fn yaw_acceleration(psi_dot: f64, f1: f64, f2: f64, params: &AeroParams) -> f64 {
    (-params.yaw_friction * psi_dot + (f1 - f2) * params.lever_arm) / params.yaw_inertia
}

/// First-order pitch actuator. `sign` is `+1` for turbine 1 and `-1` for
/// turbine 2, so the differential command `delta_beta` cancels in `beta1 + beta2`.
pub fn pitch_dynamics(beta: f64, beta_ref: f64, delta_beta: f64, t_beta: f64, sign: f64) -> f64 {
    (beta_ref + sign * delta_beta - beta) / t_beta
}
