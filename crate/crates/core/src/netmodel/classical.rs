use nalgebra::Matrix2;
use num_complex::Complex64;

use super::case::SystemCase;
use super::kron::kron_reduce;
use super::powerflow::{build_ybus, PowerFlowSolution};
use crate::linalg::CMatrix;
use crate::{Error, Result};

const BUS_SOLVE_MAX_ITER: usize = 20;

/// Shunt admittance used to ground a faulted bus.
pub const FAULT_SHUNT: Complex64 = Complex64::new(0.0, -1e6);

/// Admittance matrix over generator internal nodes, optionally followed by
/// one retained network bus whose voltage is solved algebraically.
#[derive(Debug, Clone)]
pub struct ReducedNetwork {
    pub y: CMatrix,
    pub n_gen: usize,
    pub has_bus: bool,
}

impl ReducedNetwork {
    /// Voltage of the retained bus for internal EMFs `e` and an active-power
    /// injection `p_inj` at that bus. Zero when no bus is retained.
    pub fn bus_voltage(&self, e: &[Complex64], p_inj: f64) -> Result<Complex64> {
        if !self.has_bus {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let b = self.n_gen;
        let ybb = self.y[(b, b)];
        let c: Complex64 = (0..self.n_gen).map(|j| self.y[(b, j)] * e[j]).sum();
        let mut v = -c / ybb;
        if p_inj == 0.0 {
            return Ok(v);
        }
        // Y_bb·V + c = P/conj(V); not holomorphic in V, so iterate on (Re V, Im V).
        let tol = 1e-12 * (1.0 + c.norm());
        let mut residual = f64::INFINITY;
        for _ in 0..=BUS_SOLVE_MAX_ITER {
            let r2 = v.norm_sqr();
            let f = ybb * v + c - v * (p_inj / r2);
            residual = f.norm();
            if residual <= tol {
                return Ok(v);
            }
            let j = Complex64::i();
            let dfx = ybb - (Complex64::new(1.0 / r2, 0.0) - v * (2.0 * v.re / (r2 * r2))) * p_inj;
            let dfy = j * ybb - (j / r2 - v * (2.0 * v.im / (r2 * r2))) * p_inj;
            let jac = Matrix2::new(dfx.re, dfy.re, dfx.im, dfy.im);
            let step = jac
                .try_inverse()
                .map(|inv| inv * nalgebra::Vector2::new(f.re, f.im));
            match step {
                Some(s) if s.iter().all(|x| x.is_finite()) => {
                    v -= Complex64::new(s[0], s[1]);
                }
                _ => break,
            }
        }
        Err(Error::AlgebraicSolve {
            iterations: BUS_SOLVE_MAX_ITER,
            residual,
        })
    }

    /// Generator electrical powers `Pe_j = Re(E_j·conj(I_j))`; returns the
    /// retained-bus voltage used.
    pub fn electrical_power(&self, e: &[Complex64], p_inj: f64, pe: &mut [f64]) -> Result<Complex64> {
        let vb = self.bus_voltage(e, p_inj)?;
        for i in 0..self.n_gen {
            let mut current: Complex64 = (0..self.n_gen).map(|j| self.y[(i, j)] * e[j]).sum();
            if self.has_bus {
                current += self.y[(i, self.n_gen)] * vb;
            }
            pe[i] = (e[i] * current.conj()).re;
        }
        Ok(vb)
    }
}

/// Post-power-flow classical-machine model reduced to internal nodes plus an
/// optional actuator bus.
#[derive(Debug, Clone)]
pub struct EquilibriumModel {
    pub bus_ids: Vec<usize>,
    pub gen_buses: Vec<usize>,
    pub e_mag: Vec<f64>,
    pub delta0: Vec<f64>,
    pub pm: Vec<f64>,
    pub h: Vec<f64>,
    pub d: Vec<f64>,
    /// Synchronous speed, rad/s.
    pub omega_s: f64,
    pub network: ReducedNetwork,
    /// Bus id kept in `network` for actuator injection.
    pub actuator_bus: Option<usize>,
    /// Buses followed by internal nodes, loads absorbed.
    augmented: CMatrix,
}

/// Builds the classical model from a converged power flow.
///
/// Loads (and any injection not owned by a generator) become constant shunt
/// admittances `conj(S)/|V|²`; each machine is an EMF behind `j·x'd`.
pub fn init_classical(
    case: &SystemCase,
    pf: &PowerFlowSolution,
    actuator_bus: Option<usize>,
) -> Result<EquilibriumModel> {
    let n = case.buses.len();
    let p = case.n_gen();
    if p == 0 {
        return Err(Error::Semantic("case has no generators".into()));
    }
    let ybus = build_ybus(case)?;
    let mut y = CMatrix::zeros(n + p, n + p);
    y.view_mut((0, 0), (n, n)).copy_from(&ybus);

    let mut e = Vec::with_capacity(p);
    for (i, bus) in case.buses.iter().enumerate() {
        let v = pf.voltage(i);
        let s_inj = Complex64::new(pf.p[i], pf.q[i]);
        let shunt = match case.generator_at(bus.id) {
            Some(_) => Complex64::new(bus.p_load, bus.q_load).conj() / v.norm_sqr(),
            None => -s_inj.conj() / v.norm_sqr(),
        };
        y[(i, i)] += shunt;
    }
    for (g, gen) in case.generators.iter().enumerate() {
        let i = case.bus_index(gen.bus)?;
        let bus = &case.buses[i];
        let v = pf.voltage(i);
        let s_gen = Complex64::new(pf.p[i] + bus.p_load, pf.q[i] + bus.q_load);
        let current = (s_gen / v).conj();
        e.push(v + Complex64::new(0.0, gen.xd_prime) * current);

        let yg = Complex64::new(1.0, 0.0) / Complex64::new(0.0, gen.xd_prime);
        let k = n + g;
        y[(k, k)] += yg;
        y[(i, i)] += yg;
        y[(i, k)] -= yg;
        y[(k, i)] -= yg;
    }

    let mut model = EquilibriumModel {
        bus_ids: case.buses.iter().map(|b| b.id).collect(),
        gen_buses: case.generator_buses(),
        e_mag: e.iter().map(|x| x.norm()).collect(),
        delta0: e.iter().map(|x| x.arg()).collect(),
        pm: vec![0.0; p],
        h: case.generators.iter().map(|g| g.h).collect(),
        d: case.generators.iter().map(|g| g.d).collect(),
        omega_s: case.omega_s(),
        network: ReducedNetwork {
            y: CMatrix::zeros(0, 0),
            n_gen: p,
            has_bus: false,
        },
        actuator_bus: None,
        augmented: y,
    };
    model.network = model.reduce(actuator_bus)?;
    model.actuator_bus = actuator_bus;
    let mut pe = vec![0.0; p];
    model.network.electrical_power(&model.emf(&model.delta0), 0.0, &mut pe)?;
    model.pm = pe;
    Ok(model)
}

impl EquilibriumModel {
    pub fn n_gen(&self) -> usize {
        self.e_mag.len()
    }

    /// Equilibrium state `(δ⁰, 0)`.
    pub fn x0(&self) -> Vec<f64> {
        let mut x = self.delta0.clone();
        x.extend(std::iter::repeat_n(0.0, self.n_gen()));
        x
    }

    /// Internal EMF phasors for rotor angles `delta`.
    pub fn emf(&self, delta: &[f64]) -> Vec<Complex64> {
        self.e_mag
            .iter()
            .zip(delta)
            .map(|(&m, &d)| Complex64::from_polar(m, d))
            .collect()
    }

    /// Same machines and equilibrium, different retained actuator bus.
    pub fn with_actuator_bus(&self, bus: Option<usize>) -> Result<Self> {
        if bus == self.actuator_bus {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        out.network = self.reduce(bus)?;
        out.actuator_bus = bus;
        Ok(out)
    }

    /// Network reduced to internal nodes only.
    pub fn internal_network(&self) -> Result<ReducedNetwork> {
        if self.network.has_bus {
            let keep: Vec<usize> = (0..self.n_gen()).collect();
            Ok(ReducedNetwork {
                y: kron_reduce(&self.network.y, &keep)?,
                n_gen: self.n_gen(),
                has_bus: false,
            })
        } else {
            Ok(self.network.clone())
        }
    }

    /// Fault-on network: `fault_bus` grounded through [`FAULT_SHUNT`].
    pub fn fault_network(&self, fault_bus: usize) -> Result<ReducedNetwork> {
        let idx = self
            .bus_ids
            .iter()
            .position(|&b| b == fault_bus)
            .ok_or(Error::UnknownBus(fault_bus))?;
        let mut y = self.augmented.clone();
        y[(idx, idx)] += FAULT_SHUNT;
        let n = self.bus_ids.len();
        let keep: Vec<usize> = (n..n + self.n_gen()).collect();
        Ok(ReducedNetwork {
            y: kron_reduce(&y, &keep)
                .map_err(|e| Error::Singular(format!("fault-on network: {e}")))?,
            n_gen: self.n_gen(),
            has_bus: false,
        })
    }

    fn reduce(&self, bus: Option<usize>) -> Result<ReducedNetwork> {
        let n = self.bus_ids.len();
        let p = self.n_gen();
        let mut keep: Vec<usize> = (n..n + p).collect();
        if let Some(b) = bus {
            let idx = self
                .bus_ids
                .iter()
                .position(|&id| id == b)
                .ok_or(Error::UnknownBus(b))?;
            keep.push(idx);
        }
        Ok(ReducedNetwork {
            y: kron_reduce(&self.augmented, &keep)?,
            n_gen: p,
            has_bus: bus.is_some(),
        })
    }
}
