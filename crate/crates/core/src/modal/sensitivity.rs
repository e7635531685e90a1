use nalgebra::DMatrix;
use num_complex::Complex64;

use super::eig::ModalBasis;
use crate::linalg::{solve_c, to_complex, CMatrix, CVector};
use crate::par;
use crate::{Error, Result};

/// First-order modal sensitivities with respect to one actuator gain.
#[derive(Debug, Clone)]
pub struct ModalSensitivity {
    pub dlambda: Vec<Complex64>,
    /// `∂M/∂θ`; anchor entries are exactly zero.
    pub dm: CMatrix,
    /// `∂M⁻¹/∂θ = −M⁻¹·(∂M/∂θ)·M⁻¹`.
    pub dm_inv: CMatrix,
}

/// `∂λᵢ/∂θ = (wᵢᵀ·B·vᵢ)/(wᵢᵀ·vᵢ)` with `wᵢᵀ` the i-th row of `M⁻¹`.
pub fn eigenvalue_sensitivities(basis: &ModalBasis, b: &DMatrix<f64>) -> Vec<Complex64> {
    let n = basis.n();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        if !basis.is_representative(i) {
            continue;
        }
        let v = basis.m.column(i);
        let w = basis.m_inv.row(i);
        let mut num = Complex64::new(0.0, 0.0);
        for r in 0..n {
            let bv: Complex64 = (0..n).map(|c| v[c] * b[(r, c)]).sum();
            num += w[r] * bv;
        }
        let den: Complex64 = (0..n).map(|r| w[r] * v[r]).sum();
        out[i] = num / den;
    }
    for i in 0..n {
        if !basis.is_representative(i) {
            out[i] = out[basis.conjugate[i]].conj();
        }
    }
    out
}

/// Nelson's method: for each mode solve
/// `(A − λᵢI)·dᵢ = −(B − ∂λᵢ·I)·vᵢ` with the anchor row and column replaced
/// by unit vectors, which pins the anchor entry of `dᵢ` to zero.
pub fn eigenvector_derivatives(
    a: &DMatrix<f64>,
    basis: &ModalBasis,
    b: &DMatrix<f64>,
    dlambda: &[Complex64],
) -> Result<(CMatrix, CMatrix)> {
    let n = basis.n();
    let ac = to_complex(a);
    let bc = to_complex(b);
    let solve_mode = |i: usize| -> Result<Option<CVector>> {
        if !basis.is_representative(i) {
            return Ok(None);
        }
        let lambda = basis.eigenvalues[i];
        let k = basis.anchors[i];
        let v = basis.m.column(i).into_owned();
        let mut lhs = ac.clone();
        for d in 0..n {
            lhs[(d, d)] -= lambda;
        }
        let mut shifted = bc.clone();
        for d in 0..n {
            shifted[(d, d)] -= dlambda[i];
        }
        let mut rhs = -(shifted * v);
        for c in 0..n {
            lhs[(k, c)] = Complex64::new(0.0, 0.0);
            lhs[(c, k)] = Complex64::new(0.0, 0.0);
        }
        lhs[(k, k)] = Complex64::new(1.0, 0.0);
        rhs[k] = Complex64::new(0.0, 0.0);
        let mut d = solve_c(lhs, &rhs).ok_or(Error::NelsonSingular { mode: i })?;
        d[k] = Complex64::new(0.0, 0.0);
        Ok(Some(d))
    };
    let columns = par::map_range(n, solve_mode);

    let mut dm = CMatrix::zeros(n, n);
    for (i, col) in columns.into_iter().enumerate() {
        if let Some(d) = col? {
            dm.set_column(i, &d);
        }
    }
    for i in 0..n {
        if !basis.is_representative(i) {
            let j = basis.conjugate[i];
            let conj = dm.column(j).map(|x| x.conj());
            dm.set_column(i, &conj);
        }
    }
    let dm_inv = -(&basis.m_inv * &dm * &basis.m_inv);
    Ok((dm, dm_inv))
}

/// Eigenvalue and eigenvector sensitivities for state matrix `a` in direction `b`.
pub fn modal_sensitivity(
    a: &DMatrix<f64>,
    basis: &ModalBasis,
    b: &DMatrix<f64>,
) -> Result<ModalSensitivity> {
    let dlambda = eigenvalue_sensitivities(basis, b);
    let (dm, dm_inv) = eigenvector_derivatives(a, basis, b, &dlambda)?;
    Ok(ModalSensitivity {
        dlambda,
        dm,
        dm_inv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_c;
    use crate::modal::eig::eig_decompose;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(v.to_vec()))
    }

    #[test]
    fn diagonal_perturbation() {
        let a = diag(&[-1.0, -2.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let basis = eig_decompose(&a).unwrap();
        let s = modal_sensitivity(&a, &basis, &b).unwrap();
        // modes sorted as (−2, −1)
        assert_eq!(s.dlambda[0], Complex64::new(0.0, 0.0));
        assert_eq!(s.dlambda[1], Complex64::new(1.0, 0.0));
        assert_eq!(max_abs_c(&s.dm), 0.0);
    }

    #[test]
    fn uniform_shift() {
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.5, -3.0, -0.2, 1.0, 0.0, 0.7, -2.0]);
        let b = DMatrix::identity(3, 3);
        let basis = eig_decompose(&a).unwrap();
        let s = modal_sensitivity(&a, &basis, &b).unwrap();
        for d in &s.dlambda {
            assert!((d - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        // identity perturbation leaves eigenvectors unchanged
        assert!(max_abs_c(&s.dm) < 1e-12);
    }

    #[test]
    fn identity_derivative_and_anchors() {
        let a = DMatrix::from_row_slice(4, 4, &[
            -0.5, 1.0, 0.2, 0.0, -2.0, -0.3, 0.0, 0.4, 0.1, 0.0, -1.0, 3.0, 0.0, 0.6, -2.5, -0.8,
        ]);
        let b = DMatrix::from_fn(4, 4, |r, c| ((r * 3 + c * 5) % 7) as f64 * 0.1 - 0.3);
        let basis = eig_decompose(&a).unwrap();
        let s = modal_sensitivity(&a, &basis, &b).unwrap();
        let d_identity = &s.dm * &basis.m_inv + &basis.m * &s.dm_inv;
        assert!(max_abs_c(&d_identity) < 1e-9);
        for i in 0..4 {
            assert_eq!(s.dm[(basis.anchors[i], i)], Complex64::new(0.0, 0.0));
            let j = basis.conjugate[i];
            assert_eq!(s.dlambda[j], s.dlambda[i].conj());
        }
    }
}
