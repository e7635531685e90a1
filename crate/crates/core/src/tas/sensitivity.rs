use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::energy::{modal_energy, require_stable, total_action, REALITY_TOL};
use crate::dynsim::LinearModel;
use crate::linalg::{to_complex, CVector};
use crate::modal::{eig_decompose, modal_sensitivity, ModalBasis, ModalSensitivity};
use crate::{Error, Result};

/// Decomposition `∂S∞/∂θ = α + Σᵢ βᵢ·∂λᵢ/∂θ`.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityBreakdown {
    /// `∂S∞/∂θ`.
    pub total: f64,
    /// Eigenvector-derivative contribution.
    pub alpha: f64,
    /// `Re Σ βᵢ·∂λᵢ/∂θ`.
    pub beta_term: f64,
    /// Per retained mode, aligned with `modes`.
    pub beta: Vec<Complex64>,
    pub dlambda: Vec<Complex64>,
    pub modes: Vec<usize>,
    /// Imaginary part of the directly evaluated complex sum.
    pub imag_residue: f64,
    /// Real part of the direct three-sum evaluation.
    pub direct: f64,
    /// `S∞` at the evaluation gain.
    pub total_action: f64,
}

/// Sensitivity of the total action to the actuator gain, from a modal basis
/// of `A(θ)` and the matching modal sensitivities.
pub fn total_action_sensitivity(
    lin: &LinearModel,
    basis: &ModalBasis,
    sens: &ModalSensitivity,
    dx0: &[f64],
) -> Result<SensitivityBreakdown> {
    let energy = modal_energy(basis, &lin.j, dx0, None)?;
    let lambda = &basis.eigenvalues;
    require_stable(&energy, lambda)?;
    let s_inf = total_action(&energy, lambda)?;
    let n = basis.n();
    let z = &energy.z0;
    let g = &energy.g;
    let ret = &energy.retained;

    let x = CVector::from_iterator(n, dx0.iter().map(|&v| Complex64::new(v, 0.0)));
    let dz = &sens.dm_inv * x;
    let jc = to_complex(&lin.j);
    let jm = &jc * &basis.m;
    let dg_half = sens.dm.transpose() * &jm;
    // ∂G = ∂Mᵀ·J·M + Mᵀ·J·∂M = H + Hᵀ
    let dg = &dg_half + dg_half.transpose();
    let dl = &sens.dlambda;

    // direct: the three sums of the total-action derivative
    let mut direct = Complex64::new(0.0, 0.0);
    for &i in ret {
        for &j in ret {
            let s = lambda[i] + lambda[j];
            let t1 = -0.5 * (dz[i] * z[j] + z[i] * dz[j]) * g[(i, j)] / s;
            let t2 = -0.5 * z[i] * z[j] * dg[(i, j)] / s;
            let t3 = 0.5 * z[i] * z[j] * g[(i, j)] * (dl[i] + dl[j]) / (s * s);
            direct += t1 + t2 + t3;
        }
    }

    // decomposed: α from the first two sums, βᵢ multiplying ∂λᵢ
    let mut alpha = Complex64::new(0.0, 0.0);
    for &i in ret {
        let mut row = Complex64::new(0.0, 0.0);
        for &j in ret {
            let s = lambda[i] + lambda[j];
            row += (2.0 * dz[i] * z[j] * g[(i, j)] + z[i] * z[j] * dg[(i, j)]) / s;
        }
        alpha += row;
    }
    alpha *= -0.5;
    let beta: Vec<Complex64> = ret
        .iter()
        .map(|&i| {
            ret.iter()
                .map(|&j| {
                    let s = lambda[i] + lambda[j];
                    z[i] * z[j] * g[(i, j)] / (s * s)
                })
                .sum()
        })
        .collect();
    let beta_sum: Complex64 = beta.iter().zip(ret).map(|(b, &i)| b * dl[i]).sum();

    let alpha_re = alpha.re;
    let beta_term = beta_sum.re;
    let total = alpha_re + beta_term;
    if (direct.im).abs() > REALITY_TOL * (1.0 + direct.re.abs()) {
        return Err(Error::ImaginaryResidueExceeded {
            real: direct.re,
            imag: direct.im,
        });
    }
    Ok(SensitivityBreakdown {
        total,
        alpha: alpha_re,
        beta_term,
        beta,
        dlambda: ret.iter().map(|&i| dl[i]).collect(),
        modes: ret.clone(),
        imag_residue: direct.im,
        direct: direct.re,
        total_action: s_inf,
    })
}

/// `S∞` of the linear model at gain `theta` with a fresh decomposition.
pub fn total_action_at(lin: &LinearModel, theta: f64, dx0: &[f64]) -> Result<f64> {
    let basis = eig_decompose(&lin.a(theta))?;
    let energy = modal_energy(&basis, &lin.j, dx0, None)?;
    total_action(&energy, &basis.eigenvalues)
}

/// Breakdown at gain `theta`, decomposing `A(θ)` from scratch.
pub fn sensitivity_at(lin: &LinearModel, theta: f64, dx0: &[f64]) -> Result<SensitivityBreakdown> {
    let a = lin.a(theta);
    let basis = eig_decompose(&a)?;
    let sens = modal_sensitivity(&a, &basis, &lin.b)?;
    total_action_sensitivity(lin, &basis, &sens, dx0)
}

/// Central difference `[S∞(θ+h) − S∞(θ−h)]/2h`.
pub fn total_action_fd(lin: &LinearModel, theta: f64, dx0: &[f64], h: f64) -> Result<f64> {
    Ok((total_action_at(lin, theta + h, dx0)? - total_action_at(lin, theta - h, dx0)?) / (2.0 * h))
}

/// Central-difference step for `∂S∞/∂θ`: a thousandth of the gain change
/// that would double the slowest retained decay rate, which keeps the
/// truncation error near 1e-6 relative.
pub fn fd_step(lambda: &[Complex64], dlambda: &[Complex64]) -> f64 {
    let slowest = lambda.iter().map(|l| l.re.abs()).fold(f64::INFINITY, f64::min);
    let fastest_shift = dlambda.iter().map(|d| d.norm()).fold(0.0, f64::max);
    if fastest_shift == 0.0 || !slowest.is_finite() {
        1e-3
    } else {
        1e-3 * slowest / fastest_shift
    }
}

impl SensitivityBreakdown {
    /// [`fd_step`] for the retained modes of `basis`.
    pub fn fd_step(&self, basis: &ModalBasis) -> f64 {
        let lambda: Vec<Complex64> = self.modes.iter().map(|&i| basis.eigenvalues[i]).collect();
        fd_step(&lambda, &self.dlambda)
    }
}

/// Linear model over an arbitrary affine family, used for synthetic systems.
pub fn affine_model(a0: DMatrix<f64>, b: DMatrix<f64>, j: DMatrix<f64>) -> LinearModel {
    let n = a0.nrows();
    LinearModel {
        a0,
        b,
        j,
        speed_indices: (0..n).collect(),
        n_gen: n / 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn oscillator(b: DMatrix<f64>) -> LinearModel {
        let a0 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -1.0]);
        let j = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]));
        affine_model(a0, b, j)
    }

    #[test]
    fn gain_that_does_nothing() {
        let lin = oscillator(DMatrix::zeros(2, 2));
        let s = sensitivity_at(&lin, 0.0, &[0.0, 1.0]).unwrap();
        assert_eq!(s.total, 0.0);
        assert_eq!(s.alpha, 0.0);
        assert!(s.dlambda.iter().all(|d| d.norm() == 0.0));
        assert!((s.total_action - 0.25).abs() < 1e-14);
    }

    #[test]
    fn damping_gain_on_oscillator() {
        // ẍ + (1+θ)ẋ + x = 0 from x₀ = (0, 1): S∞ = 1/(4(1+θ))
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -1.0]);
        let lin = oscillator(b);
        let s = sensitivity_at(&lin, 0.0, &[0.0, 1.0]).unwrap();
        assert!((s.total + 0.25).abs() < 1e-12, "{}", s.total);
        assert!((s.total - s.direct).abs() < 1e-12);
        assert!(s.imag_residue.abs() < 1e-14);
        assert_eq!(s.beta[0], s.beta[1].conj());
    }
}
