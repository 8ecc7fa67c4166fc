//! Adaptive control allocation toolkit for over-actuated linear systems with
//! actuator saturation and loss-of-effectiveness faults.
//!
//! The crate is organized around a closed loop with three layers:
//!
//! * an outer sliding-mode controller with a time-varying surface ([`smc`])
//!   producing a virtual moment command `v`,
//! * a model-reference adaptive allocator ([`allocator`]) mapping `v` to
//!   actuator commands `u = theta_v' v` with a projection-bounded adaptive
//!   matrix, next to a conventional pseudo-inverse baseline,
//! * an over-actuated LTI plant with first-order actuators, faults,
//!   disturbance and measurement noise ([`plant`]).
//!
//! The offline [`design`] pipeline sizes the projection boundaries, the
//! virtual-control limits and the sliding-surface rate so that the actuator
//! limits are never exceeded in closed loop. [`sim`] wires everything into a
//! deterministic fixed-step scenario engine, and [`admire`] provides the
//! ADMIRE aircraft benchmark preset.

pub mod admire;
pub mod allocator;
pub mod config;
pub mod design;
pub mod error;
pub mod numerics;
pub mod plant;
pub mod projection;
pub mod sim;
pub mod smc;

pub use error::{Error, Result};
