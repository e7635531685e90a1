use nalgebra::DMatrix;
use num_complex::Complex64;

use super::model::{rhs, Actuator};
use crate::linalg::inf_norm;
use crate::netmodel::EquilibriumModel;
use crate::{Error, Result};

/// Affine linear family `A(θ) = A₀ + θ·B` around the equilibrium.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub a0: DMatrix<f64>,
    /// `∂A/∂θ`; nonzero only in speed rows.
    pub b: DMatrix<f64>,
    /// Kinetic-energy weight, `J_jj = 2H_j` on speed indices.
    pub j: DMatrix<f64>,
    pub speed_indices: Vec<usize>,
    pub n_gen: usize,
}

impl LinearModel {
    pub fn a(&self, theta: f64) -> DMatrix<f64> {
        &self.a0 + &self.b * theta
    }

    pub fn n_states(&self) -> usize {
        2 * self.n_gen
    }
}

/// Kinetic-energy weight matrix for inertias `h`.
pub fn inertia_weight(h: &[f64]) -> DMatrix<f64> {
    let p = h.len();
    let mut j = DMatrix::zeros(2 * p, 2 * p);
    for (k, hk) in h.iter().enumerate() {
        j[(p + k, p + k)] = 2.0 * hk;
    }
    j
}

/// Analytic linearization of the swing equations at gain `theta`, with the
/// actuator-bus voltage eliminated at equilibrium.
pub fn state_matrix(
    eq: &EquilibriumModel,
    actuator: Option<&Actuator>,
    theta: f64,
) -> Result<DMatrix<f64>> {
    let p = eq.n_gen();
    let e = eq.emf(&eq.delta0);
    let internal = eq.internal_network()?;
    let y = &internal.y;

    // K_ij = ∂Pe_i/∂δ_j = Re(−j·conj(Y_ij)·E_i·conj(E_j)) for i ≠ j, rows sum to zero.
    let mut k = DMatrix::zeros(p, p);
    for i in 0..p {
        for jx in 0..p {
            if i != jx {
                let term = -Complex64::i() * y[(i, jx)].conj() * e[i] * e[jx].conj();
                k[(i, jx)] = term.re;
            }
        }
        let off: f64 = (0..p).filter(|&jx| jx != i).map(|jx| k[(i, jx)]).sum();
        k[(i, i)] = -off;
    }

    let mut a = DMatrix::zeros(2 * p, 2 * p);
    for i in 0..p {
        a[(i, p + i)] = eq.omega_s;
        let m = 2.0 * eq.h[i];
        for jx in 0..p {
            a[(p + i, jx)] = -k[(i, jx)] / m;
        }
        a[(p + i, p + i)] = -eq.d[i] / m;
    }

    if let Some(act) = actuator {
        act.check(eq)?;
        // dPe_i/dP = Re(E_i·conj(Y_ib·dV_b/dP)), dV_b/dP = 1/(Y_bb·conj(V_b⁰))
        let net = &eq.network;
        let b = p;
        let vb0 = net.bus_voltage(&e, 0.0)?;
        let dvb = Complex64::new(1.0, 0.0) / (net.y[(b, b)] * vb0.conj());
        let fb = act.feedback_gen;
        for i in 0..p {
            let s_i = (e[i] * (net.y[(i, b)] * dvb).conj()).re;
            // P = −θ·Δω_fb, so ∂Δω̇_i/∂Δω_fb gains θ·s_i/(2H_i)
            a[(p + i, p + fb)] += theta * s_i / (2.0 * eq.h[i]);
        }
    }
    Ok(a)
}

/// Linear model with `B = A(1) − A(0)` after verifying affinity.
pub fn build_linear_model(
    eq: &EquilibriumModel,
    actuator: Option<&Actuator>,
) -> Result<LinearModel> {
    let p = eq.n_gen();
    let residual = rhs(eq, &eq.x0(), actuator.map(|a| a.with_gain(0.0)).as_ref(), f64::INFINITY)?
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if !(residual < 1e-8) {
        return Err(Error::InvalidInput(format!(
            "model is not at equilibrium (residual {residual:.3e})"
        )));
    }
    let a0 = state_matrix(eq, actuator, 0.0)?;
    let a1 = state_matrix(eq, actuator, 1.0)?;
    let a2 = state_matrix(eq, actuator, 2.0)?;
    let b = &a1 - &a0;
    let check = inf_norm(&(&a2 - &a0 - &b * 2.0));
    if !(check <= 1e-9 * inf_norm(&a0)) {
        return Err(Error::AffinityViolation { residual: check });
    }
    Ok(LinearModel {
        a0,
        b,
        j: inertia_weight(&eq.h),
        speed_indices: (p..2 * p).collect(),
        n_gen: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsim::model::tests::symmetric_pair;
    use crate::modal::eigen_pairs;
    use crate::netmodel::{init_classical, solve_power_flow, PowerFlowOptions, SystemCase};

    fn fd_jacobian(eq: &EquilibriumModel, act: Option<&Actuator>) -> DMatrix<f64> {
        let x0 = eq.x0();
        let n = x0.len();
        let h = 1e-6;
        let mut jac = DMatrix::zeros(n, n);
        for c in 0..n {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[c] += h;
            xm[c] -= h;
            let fp = rhs(eq, &xp, act, 1.0).unwrap();
            let fm = rhs(eq, &xm, act, 1.0).unwrap();
            for r in 0..n {
                jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        jac
    }

    #[test]
    fn analytic_matches_finite_difference_of_rhs() {
        let case = symmetric_pair();
        let pf = solve_power_flow(&case, PowerFlowOptions::default()).unwrap();
        let eq = init_classical(&case, &pf, Some(3)).unwrap();
        let act = Actuator::new(3, 1, 7.0);
        let a = state_matrix(&eq, Some(&act), 7.0).unwrap();
        let fd = fd_jacobian(&eq, Some(&act));
        assert!(inf_norm(&(&a - &fd)) < 1e-6 * inf_norm(&a), "{a}\n{fd}");
    }

    #[test]
    fn block_structure_without_actuator() {
        let case = symmetric_pair();
        let pf = solve_power_flow(&case, PowerFlowOptions::default()).unwrap();
        let eq = init_classical(&case, &pf, None).unwrap();
        let lin = build_linear_model(&eq, None).unwrap();
        let p = 2;
        assert_eq!(lin.b, DMatrix::zeros(4, 4));
        for i in 0..p {
            for jx in 0..p {
                assert_eq!(lin.a0[(i, jx)], 0.0);
                let expected = if i == jx { eq.omega_s } else { 0.0 };
                assert_eq!(lin.a0[(i, p + jx)], expected);
            }
            assert_eq!(lin.a0[(p + i, p + i)], -eq.d[i] / (2.0 * eq.h[i]));
            assert_eq!(lin.j[(p + i, p + i)], 2.0 * eq.h[i]);
        }
    }

    #[test]
    fn single_machine_infinite_bus_frequency() {
        // infinite bus modelled as a huge-inertia machine with zero damping
        let case = SystemCase::from_json(
            r#"{"version":1,"base_mva":100,"frequency_hz":60,
            "buses":[{"id":1,"type":"slack","v_setpoint":1.0},
                     {"id":2,"type":"pv","v_setpoint":1.0}],
            "branches":[{"from":1,"to":2,"r":0.0,"x":0.2}],
            "generators":[{"bus":1,"h":1e9,"d":0.0,"xd_prime":1e-6},
                          {"bus":2,"h":3.5,"d":0.0,"xd_prime":0.3,"p":0.9}]}"#,
        )
        .unwrap();
        let pf = solve_power_flow(&case, PowerFlowOptions::default()).unwrap();
        let eq = init_classical(&case, &pf, None).unwrap();
        let lin = build_linear_model(&eq, None).unwrap();
        // synchronizing coefficient of machine 2 from a finite difference of Pe
        let x0 = eq.x0();
        let h = 1e-7;
        let mut xp = x0.clone();
        xp[1] += h;
        let mut xm = x0.clone();
        xm[1] -= h;
        let fp = rhs(&eq, &xp, None, 0.0).unwrap()[3];
        let fm = rhs(&eq, &xm, None, 0.0).unwrap()[3];
        let k = -(fp - fm) / (2.0 * h) * 2.0 * 3.5;
        let expected = (eq.omega_s * k / (2.0 * 3.5)).sqrt();
        // D = 0 leaves a defective double zero, so skip the degeneracy check
        let pairs = eigen_pairs(&lin.a0).unwrap();
        let top = pairs.values.iter().copied().max_by(|a, b| a.im.total_cmp(&b.im)).unwrap();
        assert!((top.im - expected).abs() < 1e-5 * expected, "{top} vs {expected}");
        assert!(top.re.abs() < 1e-9);
    }

    #[test]
    fn gain_enters_affinely_and_only_in_speed_rows() {
        let case = symmetric_pair();
        let pf = solve_power_flow(&case, PowerFlowOptions::default()).unwrap();
        let eq = init_classical(&case, &pf, Some(3)).unwrap();
        let act = Actuator::new(3, 0, 0.0);
        let lin = build_linear_model(&eq, Some(&act)).unwrap();
        for r in 0..2 {
            assert!(lin.b.row(r).iter().all(|&v| v == 0.0));
        }
        assert!(lin.b[(2, 2)] < 0.0, "injection against speed must damp");
        let (t1, t2) = (3.0, 11.5);
        let lhs = state_matrix(&eq, Some(&act), t1).unwrap() + state_matrix(&eq, Some(&act), t2).unwrap()
            - &lin.a0
            - state_matrix(&eq, Some(&act), t1 + t2).unwrap();
        assert!(inf_norm(&lhs) < 1e-9 * inf_norm(&lin.a0));
    }
}
