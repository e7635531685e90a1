//! Oscillation energy, action, total action and its sensitivity to actuator
//! gains, plus candidate ranking.

mod energy;
mod lyapunov;
mod ranking;
mod sensitivity;

pub use energy::{
    action, kinetic_energy, modal_energy, modal_kinetic_energy, total_action, ModalEnergy,
    MODE_FILTER_TOL, REALITY_TOL, RESONANCE_TOL, STABILITY_TOL,
};
pub use lyapunov::total_action_lyapunov;
pub use ranking::{rank_actuators, Disturbance, RankEntry, Ranking, Study};
pub use sensitivity::{
    affine_model, fd_step, sensitivity_at, total_action_at, total_action_fd, total_action_sensitivity,
    SensitivityBreakdown,
};
