//! Case ingestion, AC power flow, Kron reduction and classical-machine
//! initialization.

mod case;
mod classical;
mod kron;
mod powerflow;
mod topology;

pub use case::{load_case, Branch, Bus, BusType, Generator, SystemCase, CASE_FORMAT_VERSION};
pub use classical::{init_classical, EquilibriumModel, ReducedNetwork, FAULT_SHUNT};
pub use kron::kron_reduce;
pub use powerflow::{build_ybus, solve_power_flow, PowerFlowOptions, PowerFlowSolution};
pub use topology::nearest_generator;
