//! Sliding variables, variable homogeneity exponents and the stabilizing
//! feedback `zbar = -K |sigma|^mu sign(sigma)`.

use super::{Channel, ChannelValues, ControllerGains, OutputChains};

/// Linear Hurwitz sliding variable over one output chain
/// `[y, y', ..., y^(n-1)]`: `sigma = y^(n-1) + c_{n-2} y^(n-2) + ... + c_0 y`.
///
/// `coefficients` holds `c_0..c_{n-2}`; a first-order chain returns `y`.
pub fn sliding_variable(chain: &[f64], coefficients: &[f64]) -> f64 {
    let Some((top, lower)) = chain.split_last() else {
        return 0.0;
    };
    debug_assert_eq!(lower.len(), coefficients.len());
    top + lower.iter().zip(coefficients).map(|(y, c)| c * y).sum::<f64>()
}

/// Sliding variables of the seven channels, in canonical order.
pub fn sliding_variables(chains: &OutputChains, gains: &ControllerGains) -> ChannelValues {
    ChannelValues::from_fn(|channel| {
        let coefficients: &[f64] = match channel {
            Channel::Yaw => &gains.yaw_surface,
            Channel::Speed1 | Channel::Speed2 => std::slice::from_ref(&gains.speed_surface),
            _ => &[],
        };
        sliding_variable(chains.chain(channel), coefficients)
    })
}

/// `max(1 - delta * sum |z_l| / (|z_l| + eps), 0)` over one window of chain
/// coordinates.
pub fn homogeneity_exponent(window: &[f64], delta: f64, eps: f64) -> f64 {
    let saturation: f64 = window.iter().map(|z| z.abs() / (z.abs() + eps)).sum();
    (1.0 - delta * saturation).max(0.0)
}

/// Per-channel exponents; each channel's window is its own output chain.
pub fn channel_exponents(chains: &OutputChains, gains: &ControllerGains) -> ChannelValues {
    ChannelValues::from_fn(|channel| {
        homogeneity_exponent(chains.chain(channel), gains.delta, gains.regularization.get(channel))
    })
}

/// `-K |sigma|^mu sign(sigma)` componentwise.
pub fn stabilizer(sigma: &ChannelValues, exponents: &ChannelValues, gains: &ChannelValues) -> ChannelValues {
    ChannelValues::from_fn(|c| {
        let s = sigma.get(c);
        if s == 0.0 {
            0.0
        } else {
            -gains.get(c) * s.abs().powf(exponents.get(c)) * s.signum()
        }
    })
}
