//! The coupled twin-turbine plant `x' = f(x, t) + g(x, t) u`.
//!
//! State ordering follows `[beta1 beta2 psi psi_dot ia1 ib1 ic1 Omega1 ia2 ib2 ic2 Omega2]`,
//! extended with the two electrical angles `theta_e1`, `theta_e2` which every
//! inductance, flux and Park evaluation needs. Input ordering is
//! `[delta_beta va1 vb1 vc1 va2 vb2 vc2]`.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::aero::{
    self, AeroParams, CpPartials, DragPolynomial, WindSample, ORIENTATION_FLOOR, TIP_SPEED_FLOOR,
};
use crate::error::{ModelError, ModelResult};
use crate::machine::{self, CurrentDynamics, DqCurrents, ElectricalState, MachineParams, Phase, WindingFault};

/// The twelve physical states plus the two electrical angles.
pub const STATE_DIM: usize = 14;
pub const PLANT_DIM: usize = 12;
pub const INPUT_DIM: usize = 7;

pub type StateVector = SVector<f64, STATE_DIM>;
pub type InputVector = SVector<f64, INPUT_DIM>;
pub type InputMatrix = SMatrix<f64, PLANT_DIM, INPUT_DIM>;

/// Index of the first current row of each machine in the state vector.
pub const CURRENT_ROWS: [usize; 2] = [4, 8];
pub const SPEED_ROWS: [usize; 2] = [7, 11];
pub const ANGLE_ROWS: [usize; 2] = [12, 13];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantState {
    pub beta1: f64,
    pub beta2: f64,
    pub psi: f64,
    pub psi_dot: f64,
    pub i_a1: f64,
    pub i_b1: f64,
    pub i_c1: f64,
    pub omega1: f64,
    pub i_a2: f64,
    pub i_b2: f64,
    pub i_c2: f64,
    pub omega2: f64,
    #[serde(default)]
    pub theta_e1: f64,
    #[serde(default)]
    pub theta_e2: f64,
}

impl PlantState {
    pub fn to_vector(&self) -> StateVector {
        StateVector::from_column_slice(&[
            self.beta1,
            self.beta2,
            self.psi,
            self.psi_dot,
            self.i_a1,
            self.i_b1,
            self.i_c1,
            self.omega1,
            self.i_a2,
            self.i_b2,
            self.i_c2,
            self.omega2,
            self.theta_e1,
            self.theta_e2,
        ])
    }

    pub fn from_vector(v: &StateVector) -> Self {
        Self {
            beta1: v[0],
            beta2: v[1],
            psi: v[2],
            psi_dot: v[3],
            i_a1: v[4],
            i_b1: v[5],
            i_c1: v[6],
            omega1: v[7],
            i_a2: v[8],
            i_b2: v[9],
            i_c2: v[10],
            omega2: v[11],
            theta_e1: v[12],
            theta_e2: v[13],
        }
    }

    pub fn currents(&self, machine: usize) -> Vector3<f64> {
        match machine {
            0 => Vector3::new(self.i_a1, self.i_b1, self.i_c1),
            _ => Vector3::new(self.i_a2, self.i_b2, self.i_c2),
        }
    }

    pub fn omega(&self, machine: usize) -> f64 {
        [self.omega1, self.omega2][machine]
    }

    pub fn beta(&self, rotor: usize) -> f64 {
        [self.beta1, self.beta2][rotor]
    }

    pub fn theta_e(&self, machine: usize) -> f64 {
        [self.theta_e1, self.theta_e2][machine]
    }

    pub fn electrical(&self, machine: usize) -> ElectricalState {
        ElectricalState {
            currents: self.currents(machine),
            theta_e: self.theta_e(machine),
            omega: self.omega(machine),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantInput {
    pub delta_beta: f64,
    pub v_an1: f64,
    pub v_bn1: f64,
    pub v_cn1: f64,
    pub v_an2: f64,
    pub v_bn2: f64,
    pub v_cn2: f64,
}

impl PlantInput {
    pub fn to_vector(&self) -> InputVector {
        InputVector::from_column_slice(&[
            self.delta_beta,
            self.v_an1,
            self.v_bn1,
            self.v_cn1,
            self.v_an2,
            self.v_bn2,
            self.v_cn2,
        ])
    }

    pub fn from_vector(u: &InputVector) -> Self {
        Self {
            delta_beta: u[0],
            v_an1: u[1],
            v_bn1: u[2],
            v_cn1: u[3],
            v_an2: u[4],
            v_bn2: u[5],
            v_cn2: u[6],
        }
    }

    pub fn voltages(&self, machine: usize) -> Vector3<f64> {
        match machine {
            0 => Vector3::new(self.v_an1, self.v_bn1, self.v_cn1),
            _ => Vector3::new(self.v_an2, self.v_bn2, self.v_cn2),
        }
    }
}

/// Which of the two turbines carries the fault.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Turbine {
    First,
    Second,
}

impl Turbine {
    pub fn index(self) -> usize {
        match self {
            Turbine::First => 0,
            Turbine::Second => 1,
        }
    }
}

impl TryFrom<u8> for Turbine {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            1 => Ok(Turbine::First),
            2 => Ok(Turbine::Second),
            other => Err(format!("turbine must be 1 or 2, got {other}")),
        }
    }
}

impl From<Turbine> for u8 {
    fn from(t: Turbine) -> u8 {
        t.index() as u8 + 1
    }
}

/// A scheduled inter-turn short circuit on one phase of one turbine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    pub mu_bar: f64,
    pub turbine: Turbine,
    pub phase: Phase,
    /// Onset time (s); the vector field switches abruptly here.
    pub t_on: f64,
}

impl FaultSpec {
    pub fn validate(&self) -> ModelResult<()> {
        WindingFault::new(self.mu_bar, self.phase).map(|_| ())
    }

    /// The fault in effect at time `t`, if any.
    pub fn active_at(&self, t: f64) -> Option<ActiveFault> {
        (t >= self.t_on && self.mu_bar > 0.0).then_some(ActiveFault {
            turbine: self.turbine,
            winding: WindingFault {
                mu_bar: self.mu_bar,
                phase: self.phase,
            },
        })
    }
}

/// A fault that is currently present in the plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveFault {
    pub turbine: Turbine,
    pub winding: WindingFault,
}

impl ActiveFault {
    pub fn winding_for(fault: Option<&ActiveFault>, machine: usize) -> Option<&WindingFault> {
        fault.filter(|f| f.turbine.index() == machine).map(|f| &f.winding)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    pub aero: AeroParams,
    pub drag: DragPolynomial,
    pub machine: MachineParams,
    /// Common pitch set point `beta_ref` (rad).
    pub pitch_reference: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            aero: AeroParams::default(),
            drag: DragPolynomial::default(),
            machine: MachineParams::default(),
            pitch_reference: 0.05,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> ModelResult<()> {
        self.aero.validate()?;
        self.machine.validate()?;
        if !self.pitch_reference.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "pitch_reference",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }
}

/// Aerodynamic quantities of one rotor at the current state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotorAero {
    pub lambda: f64,
    pub cp: CpPartials,
    pub drag_coefficient: f64,
    pub drag: f64,
    pub torque: f64,
}

/// Electrical and mechanical quantities of one machine at the current state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineEval {
    pub dynamics: CurrentDynamics,
    pub park: Matrix3<f64>,
    pub dq: DqCurrents,
    pub torque: f64,
    pub omega_dot: f64,
}

/// Everything the plant and the control laws derive from a single state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub state: PlantState,
    pub wind: WindSample,
    /// Effective wind `Vv cos(psi - alpha)` and its time derivative.
    pub effective_wind: f64,
    pub effective_wind_dot: f64,
    /// Whether the effective wind clears [`ORIENTATION_FLOOR`]; aerodynamic
    /// loads are zero otherwise.
    pub aero_active: bool,
    pub rotors: [RotorAero; 2],
    pub machines: [MachineEval; 2],
    pub psi_ddot: f64,
    /// Pitch rates without the differential command.
    pub beta_dot_drift: [f64; 2],
}

/// Sign of the differential pitch command on each rotor.
pub const PITCH_SIGN: [f64; 2] = [1.0, -1.0];

impl PlantParams {
    pub fn evaluate(
        &self,
        state: &PlantState,
        wind: &WindSample,
        fault: Option<&ActiveFault>,
    ) -> ModelResult<Evaluation> {
        let aero = &self.aero;
        let w = wind.effective(state.psi);
        let aero_active = w.abs() >= ORIENTATION_FLOOR;

        let mut rotors = [RotorAero::default(); 2];
        if aero_active {
            for (i, rotor) in rotors.iter_mut().enumerate() {
                let lambda = aero.blade_radius * state.omega(i) / w;
                let cp = aero::power_coefficient_partials(lambda, state.beta(i));
                let cd = aero::drag_coefficient(lambda, state.beta(i), &self.drag);
                let torque =
                    aero::aerodynamic_torque(wind, state.psi, lambda.max(TIP_SPEED_FLOOR), cp.value, aero)?;
                *rotor = RotorAero {
                    lambda,
                    cp,
                    drag_coefficient: cd,
                    drag: aero::drag_force(wind, state.psi, cd, aero),
                    torque,
                };
            }
        }

        let m = &self.machine;
        let machine_eval = |i: usize| -> ModelResult<MachineEval> {
            let electrical = state.electrical(i);
            let dynamics = machine::current_dynamics(&electrical, ActiveFault::winding_for(fault, i), m)?;
            let park = machine::park_transform(electrical.theta_e);
            let dq = machine::dq_currents(&electrical.currents, electrical.theta_e);
            let torque = machine::electromagnetic_torque(dq.d, dq.q, m);
            let omega_dot = machine::rotor_acceleration(rotors[i].torque, torque, electrical.omega, m);
            Ok(MachineEval {
                dynamics,
                park,
                dq,
                torque,
                omega_dot,
            })
        };
        let machines = [machine_eval(0)?, machine_eval(1)?];

        let t_beta = aero.pitch_time_constant;
        Ok(Evaluation {
            state: *state,
            wind: *wind,
            effective_wind: w,
            effective_wind_dot: wind.effective_dot(state.psi, state.psi_dot),
            aero_active,
            rotors,
            machines,
            psi_ddot: aero::yaw_acceleration(state.psi_dot, rotors[0].drag, rotors[1].drag, aero),
            beta_dot_drift: [
                aero::pitch_dynamics(state.beta1, self.pitch_reference, 0.0, t_beta, PITCH_SIGN[0]),
                aero::pitch_dynamics(state.beta2, self.pitch_reference, 0.0, t_beta, PITCH_SIGN[1]),
            ],
        })
    }
}

impl Evaluation {
    /// The drift `f` in state order, followed by `theta_e1'`, `theta_e2'`.
    pub fn drift(&self, params: &PlantParams) -> StateVector {
        let mut f = StateVector::zeros();
        f[0] = self.beta_dot_drift[0];
        f[1] = self.beta_dot_drift[1];
        f[2] = self.state.psi_dot;
        f[3] = self.psi_ddot;
        for i in 0..2 {
            f.fixed_rows_mut::<3>(CURRENT_ROWS[i])
                .copy_from(&self.machines[i].dynamics.drift);
            f[SPEED_ROWS[i]] = self.machines[i].omega_dot;
            f[ANGLE_ROWS[i]] = params.machine.p() * self.state.omega(i);
        }
        f
    }

    /// The input matrix `g` (12 x 7).
    pub fn input_matrix(&self, params: &PlantParams) -> InputMatrix {
        let mut g = InputMatrix::zeros();
        let t_beta = params.aero.pitch_time_constant;
        g[(0, 0)] = PITCH_SIGN[0] / t_beta;
        g[(1, 0)] = PITCH_SIGN[1] / t_beta;
        for i in 0..2 {
            g.fixed_view_mut::<3, 3>(CURRENT_ROWS[i], 1 + 3 * i)
                .copy_from(&self.machines[i].dynamics.inductance_inverse);
        }
        g
    }
}

/// Drift `f_mu(x, t)`; the fault is applied only from its onset time.
pub fn drift_field(
    x: &PlantState,
    t: f64,
    fault: Option<&FaultSpec>,
    wind: &WindSample,
    params: &PlantParams,
) -> ModelResult<StateVector> {
    let active = fault.and_then(|f| f.active_at(t));
    Ok(params.evaluate(x, wind, active.as_ref())?.drift(params))
}

/// Input matrix `g_mu(x, t)`.
pub fn input_matrix(
    x: &PlantState,
    t: f64,
    fault: Option<&FaultSpec>,
    wind: &WindSample,
    params: &PlantParams,
) -> ModelResult<InputMatrix> {
    let active = fault.and_then(|f| f.active_at(t));
    Ok(params.evaluate(x, wind, active.as_ref())?.input_matrix(params))
}

/// `f + g u` (plus the electrical-angle rates).
pub fn full_derivative(
    x: &PlantState,
    u: &PlantInput,
    t: f64,
    fault: Option<&FaultSpec>,
    wind: &WindSample,
    params: &PlantParams,
) -> ModelResult<StateVector> {
    let active = fault.and_then(|f| f.active_at(t));
    derivative_with(x, u, active.as_ref(), wind, params)
}

/// `f + g u` with the fault already resolved.
pub fn derivative_with(
    x: &PlantState,
    u: &PlantInput,
    fault: Option<&ActiveFault>,
    wind: &WindSample,
    params: &PlantParams,
) -> ModelResult<StateVector> {
    let eval = params.evaluate(x, wind, fault)?;
    let mut dx = eval.drift(params);
    let gu = eval.input_matrix(params) * u.to_vector();
    let mut head = dx.fixed_rows_mut::<PLANT_DIM>(0);
    head += gu;
    Ok(dx)
}
