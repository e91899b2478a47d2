//! Analytic output derivatives: chains, `Lambda` and `Theta`.

use nalgebra::{RowVector3, SMatrix, SVector};

use super::{Channel, OutputChains, References};
use crate::aero::TIP_SPEED_FLOOR;
use crate::error::{ModelError, ModelResult};
use crate::plant::{Evaluation, PlantParams, PITCH_SIGN};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub chains: OutputChains,
    pub lambda: SVector<f64, 7>,
    pub theta: SMatrix<f64, 7, 7>,
}

const SPEED: [Channel; 2] = [Channel::Speed1, Channel::Speed2];
const DIRECT: [Channel; 2] = [Channel::Direct1, Channel::Direct2];
const HOMOPOLAR: [Channel; 2] = [Channel::Homopolar1, Channel::Homopolar2];

/// Differentiate every output up to its relative degree along the model.
///
/// Requires the effective wind to clear the orientation floor: without
/// aerodynamic load the yaw channel has no input authority.
pub fn decompose(eval: &Evaluation, refs: &References, params: &PlantParams) -> ModelResult<Decomposition> {
    if !eval.aero_active {
        return Err(ModelError::SingularOrientation {
            effective: eval.effective_wind,
        });
    }
    let aero = &params.aero;
    let m = &params.machine;
    let x = &eval.state;
    let wind = &eval.wind;
    let (w, w_dot) = (eval.effective_wind, eval.effective_wind_dot);
    let k = aero.dynamic_factor();
    let r = aero.blade_radius;
    let t_beta = aero.pitch_time_constant;
    let p = m.p();

    let mut lambda = SVector::<f64, 7>::zeros();
    let mut theta = SMatrix::<f64, 7, 7>::zeros();

    // Per-rotor drag and aerodynamic torque rates.
    let mut drag_rate = [0.0; 2];
    let mut drag_pitch_gain = [0.0; 2];
    for i in 0..2 {
        let rotor = &eval.rotors[i];
        let tsr = rotor.lambda;
        let omega = x.omega(i);
        let omega_dot = eval.machines[i].omega_dot;
        let tsr_dot = r * (omega_dot * w - omega * w_dot) / (w * w);
        let beta_dot = eval.beta_dot_drift[i];
        let beta = x.beta(i);

        let drag_slope = params.drag.slope(tsr);
        let cd_dlambda = params.drag.offset_dlambda(tsr) + params.drag.slope_dlambda(tsr) * beta;
        drag_rate[i] =
            k * r * r * (2.0 * w * w_dot * rotor.drag_coefficient + w * w * (cd_dlambda * tsr_dot + drag_slope * beta_dot));
        drag_pitch_gain[i] = k * r * r * w * w * drag_slope * PITCH_SIGN[i] / t_beta;

        // Gamma_a = k r^3 w^2 h(lambda, beta), h = Cp / lambda (lambda floored)
        let cp = rotor.cp;
        let floored = tsr < TIP_SPEED_FLOOR;
        let tsr_eff = tsr.max(TIP_SPEED_FLOOR);
        let h = cp.value / tsr_eff;
        let h_lambda = if floored {
            cp.d_lambda / TIP_SPEED_FLOOR
        } else {
            (cp.d_lambda * tsr - cp.value) / (tsr * tsr)
        };
        let h_beta = cp.d_beta / tsr_eff;
        let k3 = k * r.powi(3);
        let torque_rate = k3 * (2.0 * w * w_dot * h + w * w * (h_lambda * tsr_dot + h_beta * beta_dot));
        let torque_pitch_gain = k3 * w * w * h_beta * PITCH_SIGN[i] / t_beta;

        // Electromagnetic torque rate through the dq currents.
        let mach = &eval.machines[i];
        let park = &mach.park;
        let (row_d, row_q, row_h): (RowVector3<f64>, RowVector3<f64>, RowVector3<f64>) =
            (park.row(0).into(), park.row(1).into(), park.row(2).into());
        let currents_dot = mach.dynamics.drift;
        let electrical_rate = p * omega;
        let i_d_dot = electrical_rate * mach.dq.q + (row_d * currents_dot)[0];
        let i_q_dot = -electrical_rate * mach.dq.d + (row_q * currents_dot)[0];
        let i_h_dot = (row_h * currents_dot)[0];
        let sigma_d = p * (m.ld - m.lq) * mach.dq.q;
        let sigma_q = p * (m.ld - m.lq) * mach.dq.d + p * m.phi_f;
        let em_rate = sigma_d * i_d_dot + sigma_q * i_q_dot;

        let speed = SPEED[i].index();
        lambda[speed] = (torque_rate - em_rate - m.friction * omega_dot) / m.inertia;
        theta[(speed, 0)] = torque_pitch_gain / m.inertia;

        let linv = &mach.dynamics.inductance_inverse;
        let col = 1 + 3 * i;
        let speed_row = -(row_d * sigma_d + row_q * sigma_q) * linv / m.inertia;
        theta.fixed_view_mut::<1, 3>(speed, col).copy_from(&speed_row);

        lambda[DIRECT[i].index()] = i_d_dot;
        theta
            .fixed_view_mut::<1, 3>(DIRECT[i].index(), col)
            .copy_from(&(row_d * linv));

        lambda[HOMOPOLAR[i].index()] = i_h_dot;
        theta
            .fixed_view_mut::<1, 3>(HOMOPOLAR[i].index(), col)
            .copy_from(&(row_h * linv));
    }

    let yaw = Channel::Yaw.index();
    let lever = aero.lever_arm / aero.yaw_inertia;
    let psi_dddot = -aero.yaw_friction / aero.yaw_inertia * eval.psi_ddot + lever * (drag_rate[0] - drag_rate[1]);
    lambda[yaw] = psi_dddot - wind.direction_dddot;
    theta[(yaw, 0)] = lever * (drag_pitch_gain[0] - drag_pitch_gain[1]);

    let chains = OutputChains {
        yaw: [
            x.psi - wind.direction,
            x.psi_dot - wind.direction_dot,
            eval.psi_ddot - wind.direction_ddot,
        ],
        speed: [
            [x.omega1 - refs.omega_ref1, eval.machines[0].omega_dot],
            [x.omega2 - refs.omega_ref2, eval.machines[1].omega_dot],
        ],
        direct: [eval.machines[0].dq.d, eval.machines[1].dq.d],
        homopolar: [eval.machines[0].dq.h, eval.machines[1].dq.h],
    };

    Ok(Decomposition { chains, lambda, theta })
}
