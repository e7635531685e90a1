use serde::Serialize;

use super::model::{Actuator, SwingDynamics};
use crate::netmodel::EquilibriumModel;
use crate::{Error, Result};

/// Default integration step, s.
pub const DEFAULT_DT: f64 = 1e-3;

/// Uniformly sampled nonlinear trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub dt: f64,
    pub integrator: &'static str,
    pub description: String,
    pub n_gen: usize,
    pub times: Vec<f64>,
    /// Full states `(δ, Δω)`; angles in rad.
    pub states: Vec<Vec<f64>>,
    /// `E_k = Σ H_j·Δω_j²`, pu.
    pub kinetic_energy: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Trapezoidal integral of the kinetic energy over the whole horizon.
    pub fn integrated_energy(&self) -> f64 {
        self.kinetic_energy
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]) * self.dt)
            .sum()
    }
}

pub(crate) fn kinetic_energy_of(h: &[f64], x: &[f64]) -> f64 {
    let p = h.len();
    (0..p).map(|j| h[j] * x[p + j] * x[p + j]).sum()
}

/// One classical fourth-order Runge–Kutta step in place.
pub(crate) fn rk4_step(
    dynamics: &SwingDynamics<'_>,
    t: f64,
    x: &mut [f64],
    dt: f64,
    work: &mut Rk4Work,
) -> Result<()> {
    let n = x.len();
    let Rk4Work { k1, k2, k3, k4, tmp } = work;
    dynamics.derivative(t, x, k1)?;
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    dynamics.derivative(t + 0.5 * dt, tmp, k2)?;
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    dynamics.derivative(t + 0.5 * dt, tmp, k3)?;
    for i in 0..n {
        tmp[i] = x[i] + dt * k3[i];
    }
    dynamics.derivative(t + dt, tmp, k4)?;
    for i in 0..n {
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

pub(crate) struct Rk4Work {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Work {
    pub fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

/// Fixed-step RK4 from `x⁰ + Δx₀` over `[0, t_end]`.
pub fn simulate(
    eq: &EquilibriumModel,
    dx0: &[f64],
    actuator: Option<&Actuator>,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(t_end > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidInput("T and dt must be positive".into()));
    }
    let p = eq.n_gen();
    if dx0.len() != 2 * p {
        return Err(Error::InvalidInput(format!(
            "disturbance length {} does not match 2p = {}",
            dx0.len(),
            2 * p
        )));
    }
    if let Some(act) = actuator {
        act.check(eq)?;
    }
    let steps = (t_end / dt + 1e-9).floor() as usize;
    let dynamics = SwingDynamics {
        eq,
        network: &eq.network,
        actuator,
    };
    let mut x: Vec<f64> = eq.x0().iter().zip(dx0).map(|(a, b)| a + b).collect();
    let mut work = Rk4Work::new(2 * p);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut energy = Vec::with_capacity(steps + 1);
    times.push(0.0);
    energy.push(kinetic_energy_of(&eq.h, &x));
    states.push(x.clone());
    for k in 0..steps {
        let t = k as f64 * dt;
        rk4_step(&dynamics, t, &mut x, dt, &mut work)?;
        let t_next = (k + 1) as f64 * dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { time: t_next });
        }
        times.push(t_next);
        energy.push(kinetic_energy_of(&eq.h, &x));
        states.push(x.clone());
    }
    let description = match actuator {
        Some(a) => format!(
            "actuator at bus {} (feedback gen {}, gain {}, active from {} s)",
            a.bus,
            a.feedback_gen + 1,
            a.gain,
            a.active_from
        ),
        None => "no actuator".to_string(),
    };
    Ok(Trajectory {
        dt,
        integrator: "rk4",
        description,
        n_gen: p,
        times,
        states,
        kinetic_energy: energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsim::linear::build_linear_model;
    use crate::dynsim::model::tests::symmetric_pair;
    use crate::netmodel::{init_classical, solve_power_flow, PowerFlowOptions};
    use nalgebra::DVector;

    fn eq() -> EquilibriumModel {
        let case = symmetric_pair();
        let pf = solve_power_flow(&case, PowerFlowOptions::default()).unwrap();
        init_classical(&case, &pf, Some(3)).unwrap()
    }

    #[test]
    fn equilibrium_stays_put() {
        let eq = eq();
        let traj = simulate(&eq, &[0.0; 4], None, 1.0, 0.01).unwrap();
        assert_eq!(traj.len(), 101);
        for s in &traj.states {
            for (a, b) in s.iter().zip(eq.x0()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        assert!(traj.kinetic_energy.iter().all(|&e| e == 0.0 || e < 1e-20));
    }

    #[test]
    fn sample_count_is_floor_plus_one() {
        let eq = eq();
        let traj = simulate(&eq, &[0.0; 4], None, 0.0105, 0.001).unwrap();
        assert_eq!(traj.len(), 11);
        assert!(matches!(simulate(&eq, &[0.0; 4], None, -1.0, 0.001), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn damped_energy_decays() {
        let eq = eq();
        let dx0 = [0.0, 0.0, 1e-3, -5e-4];
        let traj = simulate(&eq, &dx0, None, 10.0, 1e-3).unwrap();
        assert!(traj.kinetic_energy.iter().all(|&e| e >= 0.0));
        assert!(traj.kinetic_energy.last().unwrap() < &traj.kinetic_energy[0]);
    }

    #[test]
    fn bit_identical_reruns() {
        let eq = eq();
        let act = Actuator::new(3, 0, 5.0);
        let dx0 = [0.01, -0.01, 0.002, 0.0];
        let a = simulate(&eq, &dx0, Some(&act), 2.0, 1e-3).unwrap();
        let b = simulate(&eq, &dx0, Some(&act), 2.0, 1e-3).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.kinetic_energy, b.kinetic_energy);
    }

    #[test]
    fn small_signal_matches_linear_solution() {
        let case = crate::cases::ieee9();
        let pf = solve_power_flow(&case, PowerFlowOptions::default()).unwrap();
        let eq = init_classical(&case, &pf, Some(7)).unwrap();
        let act = Actuator::new(7, 1, 5.0);
        let lin = build_linear_model(&eq, Some(&act)).unwrap();
        let a = lin.a(5.0);
        let dx0 = DVector::from_vec(vec![0.0, 0.0, 0.0, 1e-4, 0.0, -1e-4]);
        let traj = simulate(&eq, dx0.as_slice(), Some(&act), 2.0, 1e-3).unwrap();
        let x0 = eq.x0();
        for (k, t) in traj.times.iter().enumerate().step_by(50) {
            let lin_x: DVector<f64> = (&a * *t).exp() * &dx0;
            let dev: Vec<f64> = traj.states[k].iter().zip(&x0).map(|(a, b)| a - b).collect();
            let err = dev.iter().zip(lin_x.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = lin_x.amax();
            assert!(err < 0.01 * scale, "t = {t}: err {err} scale {scale}");
        }
    }
}
