//! Classical swing dynamics, linearization and time-domain simulation.

mod fault;
mod linear;
mod model;
mod simulate;
mod sweep;

pub use fault::{apply_fault, FaultSnapshot};
pub use linear::{build_linear_model, inertia_weight, state_matrix, LinearModel};
pub use model::{rhs, Actuator};
pub use simulate::{simulate, Trajectory, DEFAULT_DT};
pub use sweep::{gain_sweep, GainSweep, TRACKING_THRESHOLD};
