//! Small dense helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Maximum absolute row sum.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Maximum absolute row sum of a complex matrix.
pub fn inf_norm_c(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest entry magnitude.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Largest entry magnitude of a complex matrix.
pub fn max_abs_c(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Solves `a·x = b` by partial-pivot LU, rejecting pivots that are tiny
/// relative to the largest entry of `a`.
pub fn solve_c(a: CMatrix, b: &CVector) -> Option<CVector> {
    let scale = max_abs_c(&a);
    let lu = a.lu();
    if !pivots_ok(&lu.u(), scale) {
        return None;
    }
    lu.solve(b)
}

/// Inverse by LU with the same pivot test as [`solve_c`].
pub fn inverse_c(a: CMatrix) -> Option<CMatrix> {
    let scale = max_abs_c(&a);
    let lu = a.lu();
    if !pivots_ok(&lu.u(), scale) {
        return None;
    }
    lu.try_inverse()
}

/// Real solve with a relative pivot test.
pub fn solve_r(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = max_abs(&a);
    let lu = a.lu();
    let u = lu.u();
    let tiny = scale * 1e-14;
    if scale == 0.0 || u.diagonal().iter().any(|p| !(p.abs() > tiny)) {
        return None;
    }
    lu.solve(b)
}

fn pivots_ok(u: &CMatrix, scale: f64) -> bool {
    let tiny = scale * 1e-14;
    scale > 0.0 && u.diagonal().iter().all(|p| p.norm() > tiny)
}
