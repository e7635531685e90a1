//! Total action sensitivity (TAS) analysis for damping-actuator placement.
//!
//! The crate is organised bottom-up:
//!
//! * [`netmodel`] loads case files, solves the AC power flow and builds the
//!   Kron-reduced classical-machine equilibrium.
//! * [`dynsim`] holds the nonlinear swing dynamics with a gain-scheduled
//!   damping actuator, its linearization `A(θ) = A₀ + θ·B`, fault snapshots,
//!   RK4 simulation and gain sweeps.
//! * [`modal`] computes the eigendecomposition together with eigenvalue and
//!   eigenvector (Nelson) sensitivities.
//! * [`tas`] evaluates oscillation energy, action, total action and its
//!   sensitivity, and ranks candidate actuator buses.
//!
//! Data-parallel loops (candidate ranking, gain sweeps, per-mode solves) run
//! on rayon when the `parallel` feature is enabled (default) and fall back to
//! plain iterators otherwise.

pub mod cases;
pub mod dynsim;
mod error;
pub mod io;
pub mod linalg;
pub mod modal;
pub mod netmodel;
pub mod par;
pub mod tas;

pub use error::{Error, Result};
pub use num_complex::Complex64;
