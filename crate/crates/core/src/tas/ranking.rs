use num_complex::Complex64;
use serde::Serialize;

use super::sensitivity::{total_action_sensitivity, SensitivityBreakdown};
use crate::dynsim::{apply_fault, build_linear_model, simulate, Actuator, LinearModel, Trajectory};
use crate::modal::{eig_decompose, modal_sensitivity, ModalBasis};
use crate::netmodel::{
    init_classical, nearest_generator, solve_power_flow, EquilibriumModel, PowerFlowOptions,
    PowerFlowSolution, SystemCase,
};
use crate::par;
use crate::{Error, Result};

/// Initial condition for the total action.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Disturbance {
    /// Speed deviations per generator, zero angle deviations.
    SpeedDeviation(Vec<f64>),
    /// Full deviation state `(Δδ, Δω)`.
    State(Vec<f64>),
    /// Bolted fault at `bus` cleared after `duration` s; state taken at clearing.
    Fault { bus: usize, duration: f64, dt: f64 },
}

/// One candidate actuator location.
#[derive(Debug, Clone, Serialize)]
pub struct RankEntry {
    pub bus: usize,
    /// 0-based generator whose speed is fed back.
    pub feedback_gen: usize,
    pub breakdown: SensitivityBreakdown,
}

#[derive(Debug, Clone, Serialize)]
pub struct Ranking {
    /// Most negative `∂S∞/∂θ` first.
    pub entries: Vec<RankEntry>,
    /// Candidate buses ordered by the β-only estimate (α neglected).
    pub beta_only: Vec<usize>,
    pub dx0: Vec<f64>,
    pub eigenvalues: Vec<Complex64>,
    pub total_action: f64,
}

impl Ranking {
    pub fn best(&self) -> &RankEntry {
        &self.entries[0]
    }

    /// Entry for `bus` looked up in the β-only order.
    pub fn beta_only_entries(&self) -> Vec<&RankEntry> {
        self.beta_only
            .iter()
            .map(|b| self.entries.iter().find(|e| e.bus == *b).expect("same candidates"))
            .collect()
    }
}

/// Solved case with its open-loop equilibrium, linear model and modal basis.
#[derive(Debug, Clone)]
pub struct Study {
    pub case: SystemCase,
    pub pf: PowerFlowSolution,
    pub eq: EquilibriumModel,
    pub lin: LinearModel,
    pub basis: ModalBasis,
}

impl Study {
    pub fn new(case: SystemCase) -> Result<Self> {
        let pf = solve_power_flow(&case, PowerFlowOptions::default())?;
        let eq = init_classical(&case, &pf, None)?;
        let lin = build_linear_model(&eq, None)?;
        let basis = eig_decompose(&lin.a0)?;
        Ok(Self {
            case,
            pf,
            eq,
            lin,
            basis,
        })
    }

    /// Equilibrium with `bus` retained and an actuator fed by the nearest generator.
    pub fn actuator_at(&self, bus: usize, gain: f64) -> Result<(EquilibriumModel, Actuator)> {
        let gen = nearest_generator(&self.case, bus)?;
        let eq = self.eq.with_actuator_bus(Some(bus))?;
        Ok((eq, Actuator::new(bus, gen, gain)))
    }

    pub fn initial_state(&self, disturbance: &Disturbance) -> Result<Vec<f64>> {
        let p = self.eq.n_gen();
        let dx0 = match disturbance {
            Disturbance::SpeedDeviation(w) => {
                if w.len() != p {
                    return Err(Error::InvalidInput(format!(
                        "expected {p} speed deviations, got {}",
                        w.len()
                    )));
                }
                let mut x = vec![0.0; 2 * p];
                x[p..].copy_from_slice(w);
                x
            }
            Disturbance::State(x) => {
                if x.len() != 2 * p {
                    return Err(Error::InvalidInput(format!(
                        "expected {} state deviations, got {}",
                        2 * p,
                        x.len()
                    )));
                }
                x.clone()
            }
            Disturbance::Fault { bus, duration, dt } => {
                apply_fault(&self.eq, *bus, *duration, *dt)?.dx0
            }
        };
        if dx0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("disturbance is not finite".into()));
        }
        if dx0.iter().all(|&v| v == 0.0) {
            return Err(Error::DegenerateDisturbance);
        }
        Ok(dx0)
    }

    /// Sensitivity breakdown for one candidate at `θ = 0`.
    pub fn candidate(&self, bus: usize, dx0: &[f64]) -> Result<RankEntry> {
        let (eq, act) = self.actuator_at(bus, 0.0)?;
        let lin = build_linear_model(&eq, Some(&act))?;
        let sens = modal_sensitivity(&self.lin.a0, &self.basis, &lin.b)?;
        let breakdown = total_action_sensitivity(&self.lin, &self.basis, &sens, dx0)?;
        Ok(RankEntry {
            bus,
            feedback_gen: act.feedback_gen,
            breakdown,
        })
    }

    /// Ranks candidate buses by total action sensitivity, best first.
    pub fn rank(&self, candidates: &[usize], disturbance: &Disturbance) -> Result<Ranking> {
        if candidates.is_empty() {
            return Err(Error::InvalidInput("no candidate buses".into()));
        }
        let mut buses = candidates.to_vec();
        buses.sort_unstable();
        buses.dedup();
        for &b in &buses {
            self.case.bus_index(b)?;
        }
        let dx0 = self.initial_state(disturbance)?;
        let entries = par::map_collect(&buses, |&b| self.candidate(b, &dx0));
        let mut entries = entries.into_iter().collect::<Result<Vec<_>>>()?;
        let mut beta_only: Vec<(usize, f64)> =
            entries.iter().map(|e| (e.bus, e.breakdown.beta_term)).collect();
        beta_only.sort_by(|a, b| a.1.total_cmp(&b.1));
        entries.sort_by(|a, b| a.breakdown.total.total_cmp(&b.breakdown.total));
        let total_action = entries[0].breakdown.total_action;
        Ok(Ranking {
            entries,
            beta_only: beta_only.into_iter().map(|(b, _)| b).collect(),
            dx0,
            eigenvalues: self.basis.eigenvalues.clone(),
            total_action,
        })
    }

    /// Nonlinear response to `disturbance`, optionally with an actuator
    /// `(bus, gain)`. Fault disturbances start at clearing, so the actuator
    /// only acts on the post-fault system.
    pub fn simulate(
        &self,
        actuator: Option<(usize, f64)>,
        disturbance: &Disturbance,
        t_end: f64,
        dt: f64,
    ) -> Result<Trajectory> {
        let dx0 = match self.initial_state(disturbance) {
            Err(Error::DegenerateDisturbance) => vec![0.0; 2 * self.eq.n_gen()],
            other => other?,
        };
        match actuator {
            Some((bus, gain)) => {
                let (eq, act) = self.actuator_at(bus, gain)?;
                simulate(&eq, &dx0, Some(&act), t_end, dt)
            }
            None => simulate(&self.eq, &dx0, None, t_end, dt),
        }
    }
}

/// Solves `case` and ranks `candidates` for `disturbance`.
pub fn rank_actuators(
    case: &SystemCase,
    candidates: &[usize],
    disturbance: &Disturbance,
) -> Result<Ranking> {
    Study::new(case.clone())?.rank(candidates, disturbance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::ieee9;

    #[test]
    fn zero_disturbance_is_rejected() {
        let r = rank_actuators(&ieee9(), &[7], &Disturbance::SpeedDeviation(vec![0.0; 3]));
        assert!(matches!(r, Err(Error::DegenerateDisturbance)));
    }

    #[test]
    fn single_candidate() {
        let r = rank_actuators(&ieee9(), &[7], &Disturbance::SpeedDeviation(vec![0.01, -0.01, 0.0]))
            .unwrap();
        assert_eq!(r.entries.len(), 1);
        assert_eq!(r.best().bus, 7);
        assert_eq!(r.best().feedback_gen, 1);
        assert_eq!(r.beta_only, vec![7]);
    }

    #[test]
    fn unknown_candidate() {
        let r = rank_actuators(&ieee9(), &[4, 99], &Disturbance::SpeedDeviation(vec![0.01, 0.0, 0.0]));
        assert!(matches!(r, Err(Error::UnknownBus(99))));
    }

    #[test]
    fn ranking_is_sorted_and_consistent() {
        let r = rank_actuators(&ieee9(), &[9, 4, 7], &Disturbance::SpeedDeviation(vec![0.01, 0.0, -0.01]))
            .unwrap();
        let totals: Vec<f64> = r.entries.iter().map(|e| e.breakdown.total).collect();
        assert!(totals.windows(2).all(|w| w[0] <= w[1]));
        for e in &r.entries {
            let b = &e.breakdown;
            assert!((b.alpha + b.beta_term - b.direct).abs() <= 1e-10 * b.total.abs().max(1e-300));
            assert!(b.total < 0.0, "damping at bus {} should reduce the action", e.bus);
        }
    }
}
