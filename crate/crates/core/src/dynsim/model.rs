use serde::Serialize;

use crate::netmodel::{EquilibriumModel, ReducedNetwork};
use crate::{Error, Result};

/// Ideal power injection at a network bus proportional to the speed
/// deviation of a feedback generator: `P = −θ·Δω_fb` once `t ≥ active_from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Actuator {
    pub bus: usize,
    /// 0-based generator position.
    pub feedback_gen: usize,
    /// Gain θ in pu power per pu speed deviation.
    pub gain: f64,
    pub active_from: f64,
}

impl Actuator {
    pub fn new(bus: usize, feedback_gen: usize, gain: f64) -> Self {
        Self {
            bus,
            feedback_gen,
            gain,
            active_from: 0.0,
        }
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = gain;
        self
    }

    pub fn active_from(mut self, t: f64) -> Self {
        self.active_from = t;
        self
    }

    /// Injected active power for speed deviations `domega` at time `t`.
    pub fn injection(&self, domega: &[f64], t: f64) -> f64 {
        if t >= self.active_from {
            -self.gain * domega[self.feedback_gen]
        } else {
            0.0
        }
    }

    pub(crate) fn check(&self, eq: &EquilibriumModel) -> Result<()> {
        if !(self.gain >= 0.0) || !self.gain.is_finite() {
            return Err(Error::InvalidInput(format!(
                "actuator gain must be finite and non-negative, got {}",
                self.gain
            )));
        }
        if self.feedback_gen >= eq.n_gen() {
            return Err(Error::InvalidInput(format!(
                "feedback generator {} does not exist",
                self.feedback_gen + 1
            )));
        }
        if eq.actuator_bus != Some(self.bus) {
            return Err(Error::InvalidInput(format!(
                "actuator bus {} is not retained in the equilibrium model",
                self.bus
            )));
        }
        Ok(())
    }
}

/// Swing equations over a given reduced network.
pub(crate) struct SwingDynamics<'a> {
    pub eq: &'a EquilibriumModel,
    pub network: &'a ReducedNetwork,
    pub actuator: Option<&'a Actuator>,
}

impl SwingDynamics<'_> {
    /// `δ̇ = ω_s·Δω`, `2H·Δω̇ = Pm − Pe − D·Δω`.
    pub fn derivative(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        let p = self.eq.n_gen();
        let (delta, domega) = x.split_at(p);
        let e = self.eq.emf(delta);
        let p_inj = match self.actuator {
            Some(act) if self.network.has_bus => act.injection(domega, t),
            _ => 0.0,
        };
        let mut pe = vec![0.0; p];
        self.network.electrical_power(&e, p_inj, &mut pe)?;
        for j in 0..p {
            out[j] = self.eq.omega_s * domega[j];
            out[p + j] =
                (self.eq.pm[j] - pe[j] - self.eq.d[j] * domega[j]) / (2.0 * self.eq.h[j]);
        }
        Ok(())
    }
}

/// Nonlinear state derivative at `x = (δ, Δω)`.
pub fn rhs(
    eq: &EquilibriumModel,
    x: &[f64],
    actuator: Option<&Actuator>,
    t: f64,
) -> Result<Vec<f64>> {
    let p = eq.n_gen();
    if x.len() != 2 * p {
        return Err(Error::InvalidInput(format!(
            "state length {} does not match 2p = {}",
            x.len(),
            2 * p
        )));
    }
    if let Some(act) = actuator {
        act.check(eq)?;
    }
    let dynamics = SwingDynamics {
        eq,
        network: &eq.network,
        actuator,
    };
    let mut out = vec![0.0; 2 * p];
    dynamics.derivative(t, x, &mut out)?;
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::netmodel::{init_classical, solve_power_flow, PowerFlowOptions, SystemCase};

    /// Two identical machines feeding a central load bus 3.
    pub(crate) fn symmetric_pair() -> SystemCase {
        SystemCase::from_json(
            r#"{"version":1,"base_mva":100,"frequency_hz":60,
            "buses":[{"id":1,"type":"slack","v_setpoint":1.0},
                     {"id":2,"type":"pv","v_setpoint":1.0},
                     {"id":3,"type":"pq","p_load":1.6,"q_load":0.2}],
            "branches":[{"from":1,"to":3,"r":0.0,"x":0.1},{"from":2,"to":3,"r":0.0,"x":0.1}],
            "generators":[{"bus":1,"h":4.0,"d":1.0,"xd_prime":0.2,"p":0.8},
                          {"bus":2,"h":4.0,"d":1.0,"xd_prime":0.2,"p":0.8}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn equilibrium_is_stationary() {
        let case = symmetric_pair();
        let pf = solve_power_flow(&case, PowerFlowOptions::default()).unwrap();
        let eq = init_classical(&case, &pf, Some(3)).unwrap();
        let act = Actuator::new(3, 0, 0.0);
        let f = rhs(&eq, &eq.x0(), Some(&act), 0.0).unwrap();
        assert!(f.iter().all(|v| v.abs() < 1e-8), "{f:?}");
    }

    #[test]
    fn proportional_injection() {
        let act = Actuator::new(3, 1, 10.0);
        assert!((act.injection(&[0.0, 0.01], 0.0) + 0.1).abs() < 1e-15);
        let delayed = act.active_from(0.064);
        assert_eq!(delayed.injection(&[0.0, 0.01], 0.05), 0.0);
    }

    #[test]
    fn antisymmetric_angles_give_antisymmetric_derivative() {
        // lossless machines and a purely reactive load: the reduced transfer
        // admittance is imaginary, so deviations map antisymmetrically
        let json = symmetric_pair()
            .to_json()
            .replace("\"p_load\": 1.6", "\"p_load\": 0.0")
            .replace("\"p\": 0.8", "\"p\": 0.0");
        let case = SystemCase::from_json(&json).unwrap();
        let pf = solve_power_flow(&case, PowerFlowOptions::default()).unwrap();
        let eq = init_classical(&case, &pf, None).unwrap();
        assert!((eq.delta0[0] - eq.delta0[1]).abs() < 1e-12);
        let (eps, w) = (0.05, 0.003);
        let x = vec![eq.delta0[0] + eps, eq.delta0[1] - eps, w, -w];
        let f = rhs(&eq, &x, None, 0.0).unwrap();
        assert!((f[0] + f[1]).abs() < 1e-12);
        assert!((f[2] + f[3]).abs() < 1e-10 * f[2].abs(), "{f:?}");
        assert!(f[2].abs() > 1e-4);
    }

    #[test]
    fn actuator_must_match_retained_bus() {
        let case = symmetric_pair();
        let pf = solve_power_flow(&case, PowerFlowOptions::default()).unwrap();
        let eq = init_classical(&case, &pf, None).unwrap();
        let act = Actuator::new(3, 0, 1.0);
        assert!(matches!(rhs(&eq, &eq.x0(), Some(&act), 0.0), Err(Error::InvalidInput(_))));
    }
}
