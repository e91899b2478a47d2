//! Input-output linearizing control of the twin turbine.
//!
//! Outputs are handled in a canonical channel order
//! `(yaw, speed1, direct1, homopolar1, speed2, direct2, homopolar2)` with
//! relative degrees `(3, 2, 1, 1, 2, 1, 1)`. Stacking the highest output
//! derivatives gives `y^(eps) = Lambda(x, t) + Theta(x, t) u`, and the control
//! `u = Theta^-1 (zbar - Lambda)` imposes `y^(eps) = zbar`.
//!
//! * The active law works in the abc frame with the (estimated) faulted
//!   inductance matrix and regulates all seven outputs.
//! * The passive law is the healthy dq-frame design: five outputs (no
//!   homopolar channels), healthy model regardless of the fault, dq voltages
//!   mapped back through the inverse Park transform, optionally with a
//!   raised direct-current gain.

mod decoupling;
mod homogeneous;
mod passive;

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::aero::WindSample;
use crate::error::{ModelError, ModelResult};
use crate::machine::dq_currents;
use crate::plant::{ActiveFault, PlantInput, PlantParams, PlantState};

pub use decoupling::{decompose, Decomposition};
pub use homogeneous::{
    channel_exponents, homogeneity_exponent, sliding_variable, sliding_variables, stabilizer,
};
pub use passive::{passive_control, PASSIVE_CHANNELS};

/// Condition-number ceiling for the decoupling matrix.
pub const DECOUPLING_CONDITION_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Yaw,
    Speed1,
    Direct1,
    Homopolar1,
    Speed2,
    Direct2,
    Homopolar2,
}

impl Channel {
    pub const ALL: [Channel; 7] = [
        Channel::Yaw,
        Channel::Speed1,
        Channel::Direct1,
        Channel::Homopolar1,
        Channel::Speed2,
        Channel::Direct2,
        Channel::Homopolar2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn relative_degree(self) -> usize {
        RELATIVE_DEGREES[self.index()]
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Yaw => "yaw",
            Channel::Speed1 => "speed1",
            Channel::Direct1 => "direct1",
            Channel::Homopolar1 => "homopolar1",
            Channel::Speed2 => "speed2",
            Channel::Direct2 => "direct2",
            Channel::Homopolar2 => "homopolar2",
        }
    }
}

/// Relative degrees in canonical channel order.
pub const RELATIVE_DEGREES: [usize; 7] = [3, 2, 1, 1, 2, 1, 1];

/// One scalar per channel, canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "NamedChannels", into = "NamedChannels")]
pub struct ChannelValues(pub [f64; 7]);

impl ChannelValues {
    pub fn from_fn(mut f: impl FnMut(Channel) -> f64) -> Self {
        Self(Channel::ALL.map(&mut f))
    }

    pub fn get(&self, channel: Channel) -> f64 {
        self.0[channel.index()]
    }

    pub fn set(&mut self, channel: Channel, value: f64) {
        self.0[channel.index()] = value;
    }

    pub fn to_vector(&self) -> SVector<f64, 7> {
        SVector::from(self.0)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NamedChannels {
    yaw: f64,
    speed1: f64,
    direct1: f64,
    homopolar1: f64,
    speed2: f64,
    direct2: f64,
    homopolar2: f64,
}

impl From<NamedChannels> for ChannelValues {
    fn from(n: NamedChannels) -> Self {
        Self([n.yaw, n.speed1, n.direct1, n.homopolar1, n.speed2, n.direct2, n.homopolar2])
    }
}

impl From<ChannelValues> for NamedChannels {
    fn from(c: ChannelValues) -> Self {
        let [yaw, speed1, direct1, homopolar1, speed2, direct2, homopolar2] = c.0;
        Self {
            yaw,
            speed1,
            direct1,
            homopolar1,
            speed2,
            direct2,
            homopolar2,
        }
    }
}

/// Output tracking targets. The yaw target is the wind direction itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct References {
    pub omega_ref1: f64,
    pub omega_ref2: f64,
}

impl References {
    pub fn omega_ref(&self, machine: usize) -> f64 {
        [self.omega_ref1, self.omega_ref2][machine]
    }
}

/// Outputs in the listing order `(psi - alpha, id1, Omega1 - ref, ih1, id2, Omega2 - ref, ih2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputVector {
    pub yaw_error: f64,
    pub i_d1: f64,
    pub speed_error1: f64,
    pub i_h1: f64,
    pub i_d2: f64,
    pub speed_error2: f64,
    pub i_h2: f64,
}

impl OutputVector {
    /// Relative degrees attached to the listing order.
    pub const RELATIVE_DEGREES: [usize; 7] = [3, 1, 2, 1, 1, 2, 1];

    pub fn listing_order(&self) -> [f64; 7] {
        [
            self.yaw_error,
            self.i_d1,
            self.speed_error1,
            self.i_h1,
            self.i_d2,
            self.speed_error2,
            self.i_h2,
        ]
    }

    pub fn canonical(&self) -> ChannelValues {
        ChannelValues([
            self.yaw_error,
            self.speed_error1,
            self.i_d1,
            self.i_h1,
            self.speed_error2,
            self.i_d2,
            self.i_h2,
        ])
    }
}

pub fn outputs(x: &PlantState, wind_direction: f64, refs: &References) -> OutputVector {
    let dq1 = dq_currents(&x.currents(0), x.theta_e1);
    let dq2 = dq_currents(&x.currents(1), x.theta_e2);
    OutputVector {
        yaw_error: x.psi - wind_direction,
        i_d1: dq1.d,
        speed_error1: x.omega1 - refs.omega_ref1,
        i_h1: dq1.h,
        i_d2: dq2.d,
        speed_error2: x.omega2 - refs.omega_ref2,
        i_h2: dq2.h,
    }
}

/// Output derivative chains `[y, y', ..]` up to order `eps - 1`, canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OutputChains {
    pub yaw: [f64; 3],
    pub speed: [[f64; 2]; 2],
    pub direct: [f64; 2],
    pub homopolar: [f64; 2],
}

impl OutputChains {
    pub fn chain(&self, channel: Channel) -> &[f64] {
        match channel {
            Channel::Yaw => &self.yaw,
            Channel::Speed1 => &self.speed[0],
            Channel::Speed2 => &self.speed[1],
            Channel::Direct1 => std::slice::from_ref(&self.direct[0]),
            Channel::Direct2 => std::slice::from_ref(&self.direct[1]),
            Channel::Homopolar1 => std::slice::from_ref(&self.homopolar[0]),
            Channel::Homopolar2 => std::slice::from_ref(&self.homopolar[1]),
        }
    }

    /// The 11 stacked chain coordinates `z_1..z_11`.
    pub fn stacked(&self) -> [f64; 11] {
        let mut z = [0.0; 11];
        let mut k = 0;
        for channel in Channel::ALL {
            for &v in self.chain(channel) {
                z[k] = v;
                k += 1;
            }
        }
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerGains {
    /// Stabilizer gains `K`.
    pub gains: ChannelValues,
    /// Homogeneity slope `delta > 1`.
    pub delta: f64,
    /// Exponent regularization `eps_i > 0`.
    pub regularization: ChannelValues,
    /// `[c0, c1]` of the yaw surface `y'' + c1 y' + c0 y`.
    pub yaw_surface: [f64; 2],
    /// `c0` of the speed surfaces `y' + c0 y`.
    pub speed_surface: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            gains: ChannelValues([6.0, 50.0, 5000.0, 5000.0, 50.0, 5000.0, 5000.0]),
            delta: 1.5,
            regularization: ChannelValues([0.5, 1000.0, 20.0, 20.0, 1000.0, 20.0, 20.0]),
            yaw_surface: [4.0 / 3.0, 2.0],
            speed_surface: 10.0,
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> ModelResult<()> {
        let bad = |name: &'static str, reason: String| Err(ModelError::InvalidParameter { name, reason });
        if !(self.delta.is_finite() && self.delta > 1.0) {
            return bad("delta", format!("must exceed 1, got {}", self.delta));
        }
        for c in Channel::ALL {
            if !(self.gains.get(c).is_finite() && self.gains.get(c) > 0.0) {
                return bad("gains", format!("{} gain must be positive", c.name()));
            }
            if !(self.regularization.get(c).is_finite() && self.regularization.get(c) > 0.0) {
                return bad("regularization", format!("{} regularization must be positive", c.name()));
            }
        }
        let [c0, c1] = self.yaw_surface;
        if !(c0 > 0.0 && c1 > 0.0) {
            return bad("yaw_surface", "coefficients must be positive (Hurwitz)".into());
        }
        if !(self.speed_surface > 0.0) {
            return bad("speed_surface", "coefficient must be positive (Hurwitz)".into());
        }
        Ok(())
    }
}

/// Which control law drives the plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ControlLaw {
    /// abc-frame law using the (estimated) fault.
    Active {
        #[serde(default)]
        tuning: ControllerGains,
    },
    /// Healthy dq-frame law with a raised direct-current gain.
    Passive {
        #[serde(default)]
        tuning: ControllerGains,
        /// Multiplier on the direct-current gains.
        direct_gain_multiplier: f64,
    },
    /// Zero inputs.
    Off,
}

impl ControlLaw {
    pub fn validate(&self) -> ModelResult<()> {
        match self {
            ControlLaw::Active { tuning } => tuning.validate(),
            ControlLaw::Passive {
                tuning,
                direct_gain_multiplier,
            } => {
                tuning.validate()?;
                if !(direct_gain_multiplier.is_finite() && *direct_gain_multiplier > 0.0) {
                    return Err(ModelError::InvalidParameter {
                        name: "direct_gain_multiplier",
                        reason: "must be positive".into(),
                    });
                }
                Ok(())
            }
            ControlLaw::Off => Ok(()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ControlLaw::Active { .. } => "active",
            ControlLaw::Passive { .. } => "passive",
            ControlLaw::Off => "off",
        }
    }

    /// Evaluate the law. `fault` is the controller's fault estimate; the passive
    /// law ignores it.
    pub fn evaluate(
        &self,
        x: &PlantState,
        wind: &WindSample,
        fault: Option<&ActiveFault>,
        refs: &References,
        params: &PlantParams,
    ) -> ModelResult<PlantInput> {
        match self {
            ControlLaw::Active { tuning } => active_control(x, wind, fault, refs, tuning, params),
            ControlLaw::Passive {
                tuning,
                direct_gain_multiplier,
            } => passive_control(x, wind, refs, tuning, *direct_gain_multiplier, params),
            ControlLaw::Off => Ok(PlantInput::default()),
        }
    }
}

/// `Lambda(x, t)` in canonical order.
pub fn lambda_vector(
    x: &PlantState,
    wind: &WindSample,
    fault: Option<&ActiveFault>,
    refs: &References,
    params: &PlantParams,
) -> ModelResult<SVector<f64, 7>> {
    let eval = params.evaluate(x, wind, fault)?;
    Ok(decompose(&eval, refs, params)?.lambda)
}

/// `Theta(x, t)` in canonical order, rejected when ill-conditioned.
pub fn theta_matrix(
    x: &PlantState,
    wind: &WindSample,
    fault: Option<&ActiveFault>,
    refs: &References,
    params: &PlantParams,
) -> ModelResult<SMatrix<f64, 7, 7>> {
    let eval = params.evaluate(x, wind, fault)?;
    let theta = decompose(&eval, refs, params)?.theta;
    regular_inverse(&theta)?;
    Ok(theta)
}

/// Inverse of a decoupling matrix with a 1-norm condition guard.
pub fn regular_inverse<const N: usize>(m: &SMatrix<f64, N, N>) -> ModelResult<SMatrix<f64, N, N>> {
    let one_norm = |a: &SMatrix<f64, N, N>| {
        a.column_iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let inverse = m
        .try_inverse()
        .ok_or(ModelError::SingularDecoupling {
            condition: f64::INFINITY,
        })?;
    let condition = one_norm(m) * one_norm(&inverse);
    if !(condition <= DECOUPLING_CONDITION_LIMIT) {
        return Err(ModelError::SingularDecoupling { condition });
    }
    Ok(inverse)
}

/// The new input `zbar` of the linearized chains.
pub fn homogeneous_input(chains: &OutputChains, gains: &ControllerGains) -> ChannelValues {
    let sigma = sliding_variables(chains, gains);
    let exponents = channel_exponents(chains, gains);
    stabilizer(&sigma, &exponents, &gains.gains)
}

/// `u = Theta^-1 (zbar - Lambda)` in the abc frame with the estimated fault.
pub fn active_control(
    x: &PlantState,
    wind: &WindSample,
    fault: Option<&ActiveFault>,
    refs: &References,
    gains: &ControllerGains,
    params: &PlantParams,
) -> ModelResult<PlantInput> {
    let eval = params.evaluate(x, wind, fault)?;
    let dec = decompose(&eval, refs, params)?;
    let zbar = homogeneous_input(&dec.chains, gains).to_vector();
    let u = regular_inverse(&dec.theta)? * (zbar - dec.lambda);
    Ok(PlantInput::from_vector(&u))
}
