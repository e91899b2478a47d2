use thiserror::Error;

/// Failures raised while evaluating the plant or the control laws.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("effective wind speed {effective} m/s is below the orientation floor (psi - alpha near pi/2)")]
    SingularOrientation { effective: f64 },

    #[error("tip speed ratio {lambda} is below the degeneracy floor")]
    DegenerateTipSpeed { lambda: f64 },

    #[error("fault severity {0} is outside [0, 1)")]
    InvalidSeverity(f64),

    #[error("inductance matrix is singular or ill-conditioned (condition {condition:e})")]
    SingularInductance { condition: f64 },

    #[error("decoupling matrix is singular or ill-conditioned (condition {condition:e})")]
    SingularDecoupling { condition: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

/// Failures raised by a simulation run.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("state diverged at t = {t} s")]
    DivergedState { t: f64 },
}

pub type ModelResult<T> = Result<T, ModelError>;
