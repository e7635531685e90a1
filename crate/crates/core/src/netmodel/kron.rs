use crate::linalg::{max_abs_c, CMatrix};
use crate::{Error, Result};

/// Eliminates every node not in `retained`:
/// `Y_red = Y_rr − Y_re · Y_ee⁻¹ · Y_er`.
///
/// Rows and columns of the result follow the order of `retained`.
pub fn kron_reduce(y: &CMatrix, retained: &[usize]) -> Result<CMatrix> {
    let n = y.nrows();
    if y.ncols() != n {
        return Err(Error::InvalidInput("admittance matrix must be square".into()));
    }
    let mut keep = vec![false; n];
    for &r in retained {
        if r >= n || keep[r] {
            return Err(Error::InvalidInput(format!(
                "retained index {r} out of range or repeated"
            )));
        }
        keep[r] = true;
    }
    let eliminated: Vec<usize> = (0..n).filter(|&i| !keep[i]).collect();
    let nr = retained.len();
    let y_rr = CMatrix::from_fn(nr, nr, |i, j| y[(retained[i], retained[j])]);
    if eliminated.is_empty() {
        return Ok(y_rr);
    }
    let ne = eliminated.len();
    let y_ee = CMatrix::from_fn(ne, ne, |i, j| y[(eliminated[i], eliminated[j])]);
    let y_er = CMatrix::from_fn(ne, nr, |i, j| y[(eliminated[i], retained[j])]);
    let y_re = CMatrix::from_fn(nr, ne, |i, j| y[(retained[i], eliminated[j])]);

    let scale = max_abs_c(&y_ee).max(max_abs_c(y));
    let lu = y_ee.lu();
    let tiny = scale * 1e-14;
    if let Some(k) = lu.u().diagonal().iter().position(|p| !(p.norm() > tiny)) {
        return Err(Error::Singular(format!(
            "eliminated block is singular (pivot {k} of {ne})"
        )));
    }
    let x = lu
        .solve(&y_er)
        .ok_or_else(|| Error::Singular("eliminated block is singular".into()))?;
    Ok(y_rr - y_re * x)
}
