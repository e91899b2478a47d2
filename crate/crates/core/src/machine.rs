//! Salient permanent-magnet synchronous machine in the stationary abc frame,
//! healthy and with an inter-turn short circuit on one phase.
//!
//! The inductance profile is the two-harmonic salient model
//!
//! ```text
//! L_jk(theta) = S_jk + Ls2 cos(2 theta - phi_j - phi_k),  phi = (0, 2pi/3, -2pi/3)
//! S_jj = Ls0,  S_jk = -Ms0 (j != k)
//! ```
//!
//! which under the power-invariant Park transform becomes
//! `diag(Ld, Lq, L_leak)` for every rotor angle. The machine is parameterised by
//! `Ld`, `Lq` and the leakage (homopolar) inductance; `Ls0`, `Ms0`, `Ls2` are
//! derived from them.
//!
//! A short circuit of a fraction `mu` of the turns of one phase scales that
//! phase's resistance, magnet flux and inductance row/column by `1 - mu`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, ModelResult};

/// Electrical offsets of the three windings.
pub const PHASE_OFFSETS: [f64; 3] = [0.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0];

/// Condition-number ceiling for the (possibly faulted) inductance matrix.
pub const INDUCTANCE_CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MachineParams {
    /// Stator resistance (ohm).
    pub rs: f64,
    /// Magnet flux linkage amplitude per phase (Wb).
    pub phi_f: f64,
    pub pole_pairs: u32,
    /// d-axis inductance (H).
    pub ld: f64,
    /// q-axis inductance (H).
    pub lq: f64,
    /// Homopolar (leakage) inductance (H).
    pub l_leak: f64,
    /// Rotor plus drive-train inertia (kg m^2).
    pub inertia: f64,
    /// Viscous friction (N m s/rad).
    pub friction: f64,
}

impl Default for MachineParams {
    fn default() -> Self {
        Self {
            rs: 0.5,
            phi_f: 0.3,
            pole_pairs: 4,
            ld: 8e-3,
            lq: 12e-3,
            l_leak: 3e-3,
            inertia: 2.0,
            friction: 0.05,
        }
    }
}

impl MachineParams {
    pub fn p(&self) -> f64 {
        f64::from(self.pole_pairs)
    }

    /// Mean self inductance.
    pub fn ls0(&self) -> f64 {
        (self.ld + self.lq + self.l_leak) / 3.0
    }

    /// Mean mutual inductance magnitude (mutuals are `-Ms0 + ...`).
    pub fn ms0(&self) -> f64 {
        ((self.ld + self.lq) / 2.0 - self.l_leak) / 3.0
    }

    /// Saliency amplitude, negative when `Lq > Ld`.
    pub fn ls2(&self) -> f64 {
        (self.ld - self.lq) / 3.0
    }

    pub fn validate(&self) -> ModelResult<()> {
        let positive = [
            ("rs", self.rs),
            ("phi_f", self.phi_f),
            ("ld", self.ld),
            ("lq", self.lq),
            ("l_leak", self.l_leak),
            ("inertia", self.inertia),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParameter {
                    name,
                    reason: format!("must be finite and strictly positive, got {value}"),
                });
            }
        }
        if !(self.friction.is_finite() && self.friction >= 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "friction",
                reason: format!("must be finite and non-negative, got {}", self.friction),
            });
        }
        if self.pole_pairs == 0 {
            return Err(ModelError::InvalidParameter {
                name: "pole_pairs",
                reason: "must be at least 1".into(),
            });
        }
        let (ls0, ms0) = (self.ls0(), self.ms0());
        if !(ms0 > 0.0 && ls0 > ms0) {
            return Err(ModelError::InvalidParameter {
                name: "l_leak",
                reason: format!(
                    "profile needs Ls0 > |Ms0| > 0 (Ls0 = {ls0:e}, Ms0 = {ms0:e}); reduce the leakage inductance"
                ),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub fn index(self) -> usize {
        match self {
            Phase::A => 0,
            Phase::B => 1,
            Phase::C => 2,
        }
    }
}

/// A short circuit that is currently present on one machine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingFault {
    pub mu_bar: f64,
    pub phase: Phase,
}

impl WindingFault {
    pub fn new(mu_bar: f64, phase: Phase) -> ModelResult<Self> {
        check_severity(mu_bar)?;
        Ok(Self { mu_bar, phase })
    }

    /// Per-phase scaling `(1, 1 - mu, 1)` (for phase b).
    pub fn phase_scaling(&self) -> Vector3<f64> {
        let mut s = Vector3::repeat(1.0);
        s[self.phase.index()] = 1.0 - self.mu_bar;
        s
    }
}

fn check_severity(mu_bar: f64) -> ModelResult<()> {
    if (0.0..1.0).contains(&mu_bar) {
        Ok(())
    } else {
        Err(ModelError::InvalidSeverity(mu_bar))
    }
}

fn phase_scaling(fault: Option<&WindingFault>) -> Vector3<f64> {
    fault.map_or(Vector3::repeat(1.0), WindingFault::phase_scaling)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectricalState {
    pub currents: Vector3<f64>,
    pub theta_e: f64,
    /// Mechanical speed (rad/s).
    pub omega: f64,
}

// Order-independent so the profile is exactly symmetric.
fn offset_pair(j: usize, k: usize) -> f64 {
    PHASE_OFFSETS[j.min(k)] + PHASE_OFFSETS[j.max(k)]
}

/// Healthy inductance matrix `L^s(theta_e)`.
pub fn inductance_matrix(theta_e: f64, params: &MachineParams) -> Matrix3<f64> {
    let (ls0, ms0, ls2) = (params.ls0(), params.ms0(), params.ls2());
    Matrix3::from_fn(|j, k| {
        let base = if j == k { ls0 } else { -ms0 };
        base + ls2 * (2.0 * theta_e - offset_pair(j, k)).cos()
    })
}

/// `dL^s/dtheta_e`.
pub fn inductance_dtheta(theta_e: f64, params: &MachineParams) -> Matrix3<f64> {
    let ls2 = params.ls2();
    Matrix3::from_fn(|j, k| -2.0 * ls2 * (2.0 * theta_e - offset_pair(j, k)).sin())
}

/// Apply the short-circuit pattern to a healthy matrix: the faulted row and
/// column are scaled by `1 - mu`, the faulted diagonal entry once.
fn scale_faulted(m: Matrix3<f64>, s: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::from_fn(|j, k| if j == k { m[(j, k)] * s[j] } else { m[(j, k)] * s[j] * s[k] })
}

/// Faulted inductance matrix `L^f(theta_e, mu)`.
pub fn fault_inductance_matrix(
    theta_e: f64,
    mu_bar: f64,
    phase: Phase,
    params: &MachineParams,
) -> ModelResult<Matrix3<f64>> {
    let fault = WindingFault::new(mu_bar, phase)?;
    Ok(scale_faulted(inductance_matrix(theta_e, params), &fault.phase_scaling()))
}

fn effective_inductance(theta_e: f64, fault: Option<&WindingFault>, params: &MachineParams) -> Matrix3<f64> {
    scale_faulted(inductance_matrix(theta_e, params), &phase_scaling(fault))
}

fn effective_inductance_dtheta(
    theta_e: f64,
    fault: Option<&WindingFault>,
    params: &MachineParams,
) -> Matrix3<f64> {
    scale_faulted(inductance_dtheta(theta_e, params), &phase_scaling(fault))
}

/// Magnet flux linkage per phase, `phi_f cos(theta_e - phi_k)`.
pub fn emf_vector(theta_e: f64, params: &MachineParams) -> Vector3<f64> {
    Vector3::from_fn(|k, _| params.phi_f * (theta_e - PHASE_OFFSETS[k]).cos())
}

/// Time derivative of [`emf_vector`] at mechanical speed `omega`.
pub fn emf_derivative(theta_e: f64, omega: f64, params: &MachineParams) -> Vector3<f64> {
    let rate = params.p() * omega;
    Vector3::from_fn(|k, _| -rate * params.phi_f * (theta_e - PHASE_OFFSETS[k]).sin())
}

/// Closed-form 3x3 inverse with a Frobenius condition-number guard.
pub fn invert3(m: &Matrix3<f64>, limit: f64) -> Result<Matrix3<f64>, f64> {
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)];
    let adj = Matrix3::new(
        cof(1, 2, 1, 2),
        -cof(0, 2, 1, 2),
        cof(0, 1, 1, 2),
        -cof(1, 2, 0, 2),
        cof(0, 2, 0, 2),
        -cof(0, 1, 0, 2),
        cof(1, 2, 0, 1),
        -cof(0, 2, 0, 1),
        cof(0, 1, 0, 1),
    );
    let det = m[(0, 0)] * adj[(0, 0)] + m[(0, 1)] * adj[(1, 0)] + m[(0, 2)] * adj[(2, 0)];
    if det == 0.0 || !det.is_finite() {
        return Err(f64::INFINITY);
    }
    let inv = adj / det;
    let condition = m.norm() * inv.norm();
    if !(condition <= limit) {
        return Err(condition);
    }
    Ok(inv)
}

/// Control-affine split of the stator current dynamics,
/// `dI/dt = drift + inductance_inverse * V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentDynamics {
    pub drift: Vector3<f64>,
    pub inductance_inverse: Matrix3<f64>,
}

pub fn current_dynamics(
    state: &ElectricalState,
    fault: Option<&WindingFault>,
    params: &MachineParams,
) -> ModelResult<CurrentDynamics> {
    let s = phase_scaling(fault);
    let l = effective_inductance(state.theta_e, fault, params);
    let inductance_inverse = invert3(&l, INDUCTANCE_CONDITION_LIMIT)
        .map_err(|condition| ModelError::SingularInductance { condition })?;
    let l_dot = effective_inductance_dtheta(state.theta_e, fault, params) * (params.p() * state.omega);
    let emf_dot = emf_derivative(state.theta_e, state.omega, params).component_mul(&s);
    let resistive = (s * params.rs).component_mul(&state.currents);
    let drift = -(inductance_inverse * (resistive + l_dot * state.currents + emf_dot));
    Ok(CurrentDynamics {
        drift,
        inductance_inverse,
    })
}

/// `dI/dt` for the given phase voltages.
pub fn electrical_derivative(
    state: &ElectricalState,
    voltages: &Vector3<f64>,
    fault: Option<&WindingFault>,
    params: &MachineParams,
) -> ModelResult<Vector3<f64>> {
    let dynamics = current_dynamics(state, fault, params)?;
    Ok(dynamics.drift + dynamics.inductance_inverse * voltages)
}

/// Power-invariant Park matrix; rows are the d, q and homopolar axes.
pub fn park_transform(theta_e: f64) -> Matrix3<f64> {
    let k = (2.0_f64 / 3.0).sqrt();
    let h = (0.5_f64).sqrt();
    Matrix3::from_fn(|row, col| {
        let angle = theta_e - PHASE_OFFSETS[col];
        k * match row {
            0 => angle.cos(),
            1 => -angle.sin(),
            _ => h,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DqCurrents {
    pub d: f64,
    pub q: f64,
    /// Homopolar component, `sqrt(1/3) (ia + ib + ic)`.
    pub h: f64,
}

pub fn dq_currents(currents: &Vector3<f64>, theta_e: f64) -> DqCurrents {
    let dqh = park_transform(theta_e) * currents;
    DqCurrents {
        d: dqh[0],
        q: dqh[1],
        h: dqh[2],
    }
}

/// `p (Ld - Lq) id iq + p phi_f iq`.
pub fn electromagnetic_torque(i_d: f64, i_q: f64, params: &MachineParams) -> f64 {
    let p = params.p();
    p * (params.ld - params.lq) * i_d * i_q + p * params.phi_f * i_q
}

pub fn rotor_acceleration(gamma_a: f64, gamma_em: f64, omega: f64, params: &MachineParams) -> f64 {
    (gamma_a - gamma_em - params.friction * omega) / params.inertia
}
