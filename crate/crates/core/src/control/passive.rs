//! Healthy-model dq-frame law, kept unchanged when a fault appears.

use nalgebra::{SMatrix, SVector};

use super::{
    decompose, homogeneous_input, regular_inverse, Channel, ControllerGains, References,
};
use crate::aero::WindSample;
use crate::error::ModelResult;
use crate::machine::park_transform;
use crate::plant::{PlantInput, PlantParams, PlantState};

/// Outputs regulated by the dq-frame law; the homopolar components are left free.
pub const PASSIVE_CHANNELS: [Channel; 5] = [
    Channel::Yaw,
    Channel::Speed1,
    Channel::Direct1,
    Channel::Speed2,
    Channel::Direct2,
];

/// Inputs `(delta_beta, vd1, vq1, vd2, vq2)` mapped to abc inputs with zero
/// homopolar voltage.
fn dq_to_abc(x: &PlantState) -> SMatrix<f64, 7, 5> {
    let mut t = SMatrix::<f64, 7, 5>::zeros();
    t[(0, 0)] = 1.0;
    for i in 0..2 {
        let park = park_transform(x.theta_e(i));
        for axis in 0..2 {
            for phase in 0..3 {
                t[(1 + 3 * i + phase, 1 + 2 * i + axis)] = park[(axis, phase)];
            }
        }
    }
    t
}

/// Passive fault-tolerant law: healthy `Lambda`/`Theta` restricted to the
/// five dq outputs, direct-current gains multiplied by `direct_gain_multiplier`.
pub fn passive_control(
    x: &PlantState,
    wind: &WindSample,
    refs: &References,
    gains: &ControllerGains,
    direct_gain_multiplier: f64,
    params: &PlantParams,
) -> ModelResult<PlantInput> {
    let eval = params.evaluate(x, wind, None)?;
    let dec = decompose(&eval, refs, params)?;

    let mut robust = *gains;
    for c in [Channel::Direct1, Channel::Direct2] {
        robust.gains.set(c, gains.gains.get(c) * direct_gain_multiplier);
    }
    let zbar = homogeneous_input(&dec.chains, &robust);

    let map = dq_to_abc(x);
    let mut theta = SMatrix::<f64, 5, 5>::zeros();
    let mut rhs = SVector::<f64, 5>::zeros();
    for (row, channel) in PASSIVE_CHANNELS.iter().enumerate() {
        let c = channel.index();
        theta.set_row(row, &(dec.theta.row(c) * map));
        rhs[row] = zbar.get(*channel) - dec.lambda[c];
    }
    let u_dq = regular_inverse(&theta)? * rhs;
    Ok(PlantInput::from_vector(&(map * u_dq)))
}
