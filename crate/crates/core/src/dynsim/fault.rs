use serde::Serialize;

use super::model::SwingDynamics;
use super::simulate::Rk4Work;
use crate::netmodel::EquilibriumModel;
use crate::{Error, Result};

/// Deviation state right after clearing a bolted three-phase fault.
#[derive(Debug, Clone, Serialize)]
pub struct FaultSnapshot {
    pub fault_bus: usize,
    pub dx0: Vec<f64>,
    /// Simulated fault-on time, `steps·dt`.
    pub duration: f64,
    pub steps: usize,
}

/// Integrates the fault-on dynamics from equilibrium and returns
/// `x(duration) − x⁰`. A duration that is not a multiple of `dt` is rounded
/// up to the next step.
pub fn apply_fault(
    eq: &EquilibriumModel,
    fault_bus: usize,
    duration: f64,
    dt: f64,
) -> Result<FaultSnapshot> {
    if !(duration >= 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidInput(
            "fault duration must be non-negative and dt positive".into(),
        ));
    }
    let network = eq.fault_network(fault_bus)?;
    let ratio = duration / dt;
    let mut steps = ratio.round() as usize;
    if (ratio - steps as f64).abs() > 1e-9 * ratio.max(1.0) {
        steps = ratio.ceil() as usize;
        log::warn!(
            "fault duration {duration} s is not a multiple of dt = {dt} s; using {} s",
            steps as f64 * dt
        );
    }
    let dynamics = SwingDynamics {
        eq,
        network: &network,
        actuator: None,
    };
    let x0 = eq.x0();
    let mut x = x0.clone();
    let mut work = Rk4Work::new(x.len());
    for k in 0..steps {
        super::simulate::rk4_step(&dynamics, k as f64 * dt, &mut x, dt, &mut work)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                time: (k + 1) as f64 * dt,
            });
        }
    }
    Ok(FaultSnapshot {
        fault_bus,
        dx0: x.iter().zip(&x0).map(|(a, b)| a - b).collect(),
        duration: steps as f64 * dt,
        steps,
    })
}
