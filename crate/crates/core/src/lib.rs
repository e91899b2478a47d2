//! Twin wind turbine simulation with healthy and inter-turn short-circuited
//! permanent-magnet generators, an active abc-frame fault-tolerant control
//! law and the passive dq-frame baseline.
//!
//! Module map:
//! * [`aero`]: power, torque, drag and yaw dynamics.
//! * [`machine`]: abc-frame PMSM with the short-circuit model, Park transform.
//! * [`plant`]: the assembled control-affine 12-state system.
//! * [`control`]: output decoupling, homogeneous stabilizer, active and passive laws.
//! * [`simkit`]: wind profiles, fixed-step integration, metrics.
//! * [`scenario`], [`record`], [`study`], [`plot`]: configuration, CSV/metrics
//!   I/O, comparisons and sweeps, SVG charts.

pub mod aero;
pub mod control;
pub mod error;
pub mod machine;
pub mod plant;
pub mod plot;
pub mod record;
pub mod scenario;
pub mod simkit;
pub mod study;

pub use error::{ModelError, ModelResult, SimError};
