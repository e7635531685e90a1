use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::case::{BusType, SystemCase};
use crate::linalg::{solve_r, CMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PowerFlowOptions {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iter: 50,
        }
    }
}

/// Converged bus voltages and injections, indexed like `SystemCase::buses`.
#[derive(Debug, Clone, Serialize)]
pub struct PowerFlowSolution {
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub iterations: usize,
    pub max_residual: f64,
}

impl PowerFlowSolution {
    pub fn voltage(&self, idx: usize) -> Complex64 {
        Complex64::from_polar(self.vm[idx], self.va[idx])
    }
}

/// Bus admittance matrix from series branches and line charging.
pub fn build_ybus(case: &SystemCase) -> Result<CMatrix> {
    let n = case.buses.len();
    let mut y = CMatrix::zeros(n, n);
    for br in &case.branches {
        let f = case.bus_index(br.from)?;
        let t = case.bus_index(br.to)?;
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let ysh = Complex64::new(0.0, br.b / 2.0);
        y[(f, f)] += ys + ysh;
        y[(t, t)] += ys + ysh;
        y[(f, t)] -= ys;
        y[(t, f)] -= ys;
    }
    Ok(y)
}

/// Newton–Raphson power flow in polar coordinates from a flat start.
pub fn solve_power_flow(case: &SystemCase, opts: PowerFlowOptions) -> Result<PowerFlowSolution> {
    let n = case.buses.len();
    let ybus = build_ybus(case)?;

    let mut p_spec = vec![0.0; n];
    let mut q_spec = vec![0.0; n];
    for (i, bus) in case.buses.iter().enumerate() {
        p_spec[i] = -bus.p_load;
        q_spec[i] = -bus.q_load;
    }
    for g in &case.generators {
        let i = case.bus_index(g.bus)?;
        p_spec[i] += g.p;
    }

    let pvpq: Vec<usize> = (0..n)
        .filter(|&i| case.buses[i].kind != BusType::Slack)
        .collect();
    let pq: Vec<usize> = (0..n)
        .filter(|&i| case.buses[i].kind == BusType::Pq)
        .collect();

    let mut vm: Vec<f64> = case
        .buses
        .iter()
        .map(|b| match b.kind {
            BusType::Pq => 1.0,
            _ => b.v_setpoint,
        })
        .collect();
    let mut va = vec![0.0; n];

    let mismatch = |vm: &[f64], va: &[f64]| -> (Vec<Complex64>, Vec<Complex64>, DVector<f64>) {
        let v: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(vm[i], va[i])).collect();
        let current: Vec<Complex64> = (0..n)
            .map(|i| (0..n).map(|k| ybus[(i, k)] * v[k]).sum())
            .collect();
        let mut f = DVector::zeros(pvpq.len() + pq.len());
        for (r, &i) in pvpq.iter().enumerate() {
            f[r] = (v[i] * current[i].conj()).re - p_spec[i];
        }
        for (r, &i) in pq.iter().enumerate() {
            f[pvpq.len() + r] = (v[i] * current[i].conj()).im - q_spec[i];
        }
        (v, current, f)
    };

    let mut iterations = 0;
    let (mut v, mut current, mut f) = mismatch(&vm, &va);
    let mut residual = f.amax();
    while !(residual < opts.tolerance) {
        if iterations >= opts.max_iter || !residual.is_finite() {
            return Err(Error::NonConvergence {
                iterations,
                residual,
            });
        }
        let jac = jacobian(&ybus, &v, &current, &pvpq, &pq);
        let dx = solve_r(jac, &f).ok_or(Error::NonConvergence {
            iterations,
            residual,
        })?;
        for (r, &i) in pvpq.iter().enumerate() {
            va[i] -= dx[r];
        }
        for (r, &i) in pq.iter().enumerate() {
            vm[i] -= dx[pvpq.len() + r];
        }
        iterations += 1;
        (v, current, f) = mismatch(&vm, &va);
        residual = f.amax();
    }

    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        let s = v[i] * current[i].conj();
        p[i] = s.re;
        q[i] = s.im;
    }
    Ok(PowerFlowSolution {
        vm,
        va,
        p,
        q,
        iterations,
        max_residual: residual,
    })
}

fn jacobian(
    ybus: &CMatrix,
    v: &[Complex64],
    current: &[Complex64],
    pvpq: &[usize],
    pq: &[usize],
) -> DMatrix<f64> {
    let j = Complex64::i();
    // dS/dVa = j·diag(V)·conj(diag(I) − Y·diag(V))
    // dS/dVm = diag(V)·conj(Y·diag(V/|V|)) + conj(diag(I))·diag(V/|V|)
    let ds_dva = |i: usize, k: usize| -> Complex64 {
        let mut inner = -ybus[(i, k)] * v[k];
        if i == k {
            inner += current[i];
        }
        j * v[i] * inner.conj()
    };
    let ds_dvm = |i: usize, k: usize| -> Complex64 {
        let vn = v[k] / v[k].norm();
        let mut out = v[i] * (ybus[(i, k)] * vn).conj();
        if i == k {
            out += current[i].conj() * vn;
        }
        out
    };
    let npvpq = pvpq.len();
    let dim = npvpq + pq.len();
    let mut jac = DMatrix::zeros(dim, dim);
    for (r, &i) in pvpq.iter().enumerate() {
        for (c, &k) in pvpq.iter().enumerate() {
            jac[(r, c)] = ds_dva(i, k).re;
        }
        for (c, &k) in pq.iter().enumerate() {
            jac[(r, npvpq + c)] = ds_dvm(i, k).re;
        }
    }
    for (r, &i) in pq.iter().enumerate() {
        for (c, &k) in pvpq.iter().enumerate() {
            jac[(npvpq + r, c)] = ds_dva(i, k).im;
        }
        for (c, &k) in pq.iter().enumerate() {
            jac[(npvpq + r, npvpq + c)] = ds_dvm(i, k).im;
        }
    }
    jac
}
