use nalgebra::{DMatrix, DVector};

use crate::linalg::{inf_norm, solve_r};
use crate::{Error, Result};

/// Singular values below this fraction of the largest mark the kernel of `A`.
const KERNEL_TOL: f64 = 1e-10;

/// Total action from the Lyapunov equation `AᵀP + PA = −J`, `S∞ = ½·Δx₀ᵀPΔx₀`.
///
/// A (semisimple) kernel of `A` is deflated: `Δx₀` is split along `ker A`
/// and `range A`, and the equation is solved for `A` restricted to its range.
/// The kernel component must not carry kinetic energy.
pub fn total_action_lyapunov(a: &DMatrix<f64>, j: &DMatrix<f64>, dx0: &[f64]) -> Result<f64> {
    let n = a.nrows();
    if a.ncols() != n || j.shape() != (n, n) || dx0.len() != n {
        return Err(Error::InvalidInput("dimension mismatch in Lyapunov solve".into()));
    }
    let x0 = DVector::from_column_slice(dx0);
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > KERNEL_TOL * sigma_max)
        .count();

    let (a_r, j_r, y) = if rank == n {
        (a.clone(), j.clone(), x0)
    } else {
        // range basis Q (left singular vectors), kernel basis K (right singular vectors)
        let order = sorted_indices(&svd.singular_values);
        let q = DMatrix::from_fn(n, rank, |r, c| u[(r, order[c])]);
        let k = DMatrix::from_fn(n, n - rank, |r, c| v_t[(order[rank + c], r)]);
        let mut basis = DMatrix::zeros(n, n);
        basis.view_mut((0, 0), (n, n - rank)).copy_from(&k);
        basis.view_mut((0, n - rank), (n, rank)).copy_from(&q);
        let coeff = solve_r(basis, &x0).ok_or_else(|| {
            Error::Singular("kernel and range of A are not complementary".into())
        })?;
        let kernel_part = &k * coeff.rows(0, n - rank);
        let leak = (j * &kernel_part).amax();
        if leak > 1e-9 * j.amax() * x0.amax() {
            return Err(Error::ZeroModeCarriesEnergy {
                mode: 0,
                row_max: leak,
            });
        }
        let a_r = q.transpose() * a * &q;
        let j_r = q.transpose() * j * &q;
        (a_r, j_r, coeff.rows(n - rank, rank).into_owned())
    };

    let m = a_r.nrows();
    if m == 0 {
        return Ok(0.0);
    }
    let at = a_r.transpose();
    let eye = DMatrix::<f64>::identity(m, m);
    let lhs = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -DVector::from_column_slice(j_r.as_slice());
    let p = solve_r(lhs, &rhs).ok_or_else(|| {
        Error::Singular(format!(
            "Lyapunov operator is singular (marginal or resonant modes, ‖A‖∞ = {:.3e})",
            inf_norm(a)
        ))
    })?;
    let p = DMatrix::from_column_slice(m, m, p.as_slice());
    let p = (&p + p.transpose()) * 0.5;
    Ok(0.5 * y.dot(&(&p * &y)))
}

fn sorted_indices(s: &DVector<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn damped_oscillator() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -1.0]);
        let j = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]));
        let s = total_action_lyapunov(&a, &j, &[0.0, 1.0]).unwrap();
        assert!((s - 0.25).abs() < 1e-14);
        assert_eq!(total_action_lyapunov(&a, &DMatrix::zeros(2, 2), &[3.0, -1.0]).unwrap(), 0.0);
    }

    #[test]
    fn kernel_is_deflated() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, -1.0]);
        let j = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2.0]));
        let s = total_action_lyapunov(&a, &j, &[0.3, 0.1]).unwrap();
        assert!((s - 0.005).abs() < 1e-15);
        assert!(total_action_lyapunov(&a, &DMatrix::identity(2, 2), &[0.3, 0.1]).is_err());
    }

    #[test]
    fn marginal_mode_is_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let j = DMatrix::identity(2, 2);
        assert!(matches!(total_action_lyapunov(&a, &j, &[1.0, 0.0]), Err(Error::Singular(_))));
    }
}
