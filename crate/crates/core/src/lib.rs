//! Coordinate-free simulation and control engine for a spherical inverted
//! pendulum mounted on a quadrotor.
//!
//! The crate is split along the closed loop:
//!
//! - [`geom`] — vectors, matrices, SO(3)/S² primitives, least squares;
//! - [`dynamics`] — equations of motion of the coupled system;
//! - [`controller`] — the geometric backstepping law and rotor allocation;
//! - [`integrator`] — fixed-step RK4 with manifold projection and the
//!   closed-loop simulation driver;
//! - [`lyapunov`] — energy-like monitoring of closed-loop runs.
//!
//! Everything is `no_std` + `alloc`; all floating-point math goes through
//! `libm`, so results are deterministic for a given target.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod controller;
pub mod dynamics;
pub mod geom;
pub mod integrator;
pub mod lyapunov;
mod math;

pub use controller::{ControlError, ControllerDiagnostics, ControllerGains, ReferenceHistory};
pub use dynamics::{ControlInput, PhysicalParams, SystemState};
pub use geom::{Mat3, Rotation, UnitVec3, Vec3};
pub use integrator::{IntegratorConfig, LogEntry, SimFailure, TrajectoryLog};
