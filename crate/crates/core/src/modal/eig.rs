use std::cmp::Ordering;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::linalg::{inf_norm, inverse_c, to_complex, CMatrix};
use crate::{Error, Result};

/// Relative gap below which two eigenvalues count as repeated.
pub const DEGENERACY_TOL: f64 = 1e-7;

/// Eigenvalues and anchor-normalized right eigenvectors of a real matrix,
/// without degeneracy checks or inversion.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<Complex64>,
    pub vectors: CMatrix,
    pub anchors: Vec<usize>,
    /// Index of the complex-conjugate partner (self for real modes).
    pub conjugate: Vec<usize>,
}

/// Right/left modal basis of a real state matrix.
#[derive(Debug, Clone)]
pub struct ModalBasis {
    pub eigenvalues: Vec<Complex64>,
    /// Right eigenvectors as columns; column `i` has entry `anchors[i]` equal to 1.
    pub m: CMatrix,
    /// Inverse of `m`; row `i` is the left eigenvector scaled so `wᵢᵀvᵢ = 1`.
    pub m_inv: CMatrix,
    pub anchors: Vec<usize>,
    pub conjugate: Vec<usize>,
    /// `‖A‖∞` of the decomposed matrix.
    pub a_norm: f64,
}

impl ModalBasis {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Left eigenvector `wᵢ` (row `i` of `M⁻¹`).
    pub fn left(&self, i: usize) -> Vec<Complex64> {
        self.m_inv.row(i).iter().copied().collect()
    }

    /// True for the representative of each conjugate class (Im ≥ 0).
    pub fn is_representative(&self, i: usize) -> bool {
        self.conjugate[i] == i || self.eigenvalues[i].im > 0.0
    }
}

/// Eigenpairs via complex Schur factorization and triangular back-substitution.
///
/// Conjugate pairs are made exactly conjugate, real modes exactly real, each
/// eigenvector is scaled so its largest-magnitude entry equals 1, and modes
/// are sorted by `(Re, Im)`.
pub fn eigen_pairs(a: &DMatrix<f64>) -> Result<EigenPairs> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidInput("state matrix must be square".into()));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("state matrix has non-finite entries".into()));
    }
    if n == 0 {
        return Ok(EigenPairs {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
            anchors: vec![],
            conjugate: vec![],
        });
    }
    let a_norm = inf_norm(a);
    let schur = Schur::try_new(to_complex(a), f64::EPSILON, 10_000 * n.max(10))
        .ok_or_else(|| Error::EigenFailure("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();

    let t_norm = t.iter().fold(0.0f64, |m, x| m.max(x.norm()));
    let small = f64::EPSILON * t_norm.max(f64::MIN_POSITIVE);
    let mut raw_values = Vec::with_capacity(n);
    let mut raw_vectors = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        y[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let s: Complex64 = ((i + 1)..=k).map(|m| t[(i, m)] * y[m]).sum();
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < small {
                denom = Complex64::new(small, 0.0);
            }
            y[i] = -s / denom;
        }
        for r in 0..n {
            raw_vectors[(r, k)] = (0..=k).map(|m| q[(r, m)] * y[m]).sum();
        }
        raw_values.push(lambda);
    }

    // Pair up conjugates. A mode is treated as real when its imaginary part
    // is below half the degeneracy threshold; a genuine pair that close
    // would be rejected as degenerate anyway.
    let real_tol = 0.5 * DEGENERACY_TOL * a_norm.max(f64::MIN_POSITIVE);
    let mut values = raw_values.clone();
    let mut vectors = raw_vectors.clone();
    let mut conjugate: Vec<usize> = (0..n).collect();
    let mut used = vec![false; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw_values[j].im.total_cmp(&raw_values[i].im));
    for &i in &order {
        if used[i] {
            continue;
        }
        used[i] = true;
        let lam = raw_values[i];
        if lam.im.abs() <= real_tol {
            values[i] = Complex64::new(lam.re, 0.0);
            continue;
        }
        if lam.im < 0.0 {
            // an unmatched lower-half eigenvalue; keep as is
            continue;
        }
        let target = lam.conj();
        let partner = (0..n)
            .filter(|&j| !used[j] && raw_values[j].im < 0.0)
            .min_by(|&a, &b| {
                (raw_values[a] - target)
                    .norm()
                    .total_cmp(&(raw_values[b] - target).norm())
            });
        if let Some(j) = partner {
            used[j] = true;
            conjugate[i] = j;
            conjugate[j] = i;
            values[j] = lam.conj();
            for r in 0..n {
                vectors[(r, j)] = vectors[(r, i)].conj();
            }
        }
    }

    let mut anchors = vec![0; n];
    for k in 0..n {
        let anchor = argmax_abs(vectors.column(k).iter().copied());
        let pivot = vectors[(anchor, k)];
        for r in 0..n {
            vectors[(r, k)] /= pivot;
        }
        vectors[(anchor, k)] = Complex64::new(1.0, 0.0);
        if conjugate[k] == k {
            for r in 0..n {
                vectors[(r, k)].im = 0.0;
            }
        }
        anchors[k] = anchor;
    }
    // conjugate partners share anchors; recompute the partner from its
    // representative so the pair stays bit-exact conjugate
    for k in 0..n {
        let j = conjugate[k];
        if j != k && values[k].im > 0.0 {
            anchors[j] = anchors[k];
            for r in 0..n {
                vectors[(r, j)] = vectors[(r, k)].conj();
            }
        }
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&i, &j| compare_modes(values[i], values[j]));
    let mut inv_perm = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv_perm[old] = new;
    }
    Ok(EigenPairs {
        values: perm.iter().map(|&i| values[i]).collect(),
        vectors: CMatrix::from_fn(n, n, |r, c| vectors[(r, perm[c])]),
        anchors: perm.iter().map(|&i| anchors[i]).collect(),
        conjugate: perm.iter().map(|&i| inv_perm[conjugate[i]]).collect(),
    })
}

/// Full modal basis with degeneracy rejection and exact-conjugate `M⁻¹`.
pub fn eig_decompose(a: &DMatrix<f64>) -> Result<ModalBasis> {
    let pairs = eigen_pairs(a)?;
    let n = pairs.values.len();
    let a_norm = inf_norm(a);
    let threshold = DEGENERACY_TOL * a_norm;
    if n > 1 {
        let mut gap = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                gap = gap.min((pairs.values[i] - pairs.values[j]).norm());
            }
        }
        if !(gap >= threshold) || a_norm == 0.0 {
            return Err(Error::DegenerateSpectrum { gap, threshold });
        }
    }
    let mut m_inv = inverse_c(pairs.vectors.clone())
        .ok_or_else(|| Error::EigenFailure("eigenvector matrix is singular".into()))?;
    for i in 0..n {
        let j = pairs.conjugate[i];
        if j == i {
            for c in 0..n {
                m_inv[(i, c)].im = 0.0;
            }
        } else if pairs.values[i].im > 0.0 {
            for c in 0..n {
                let avg = (m_inv[(i, c)] + m_inv[(j, c)].conj()) * 0.5;
                m_inv[(i, c)] = avg;
                m_inv[(j, c)] = avg.conj();
            }
        }
    }
    Ok(ModalBasis {
        eigenvalues: pairs.values,
        m: pairs.vectors,
        m_inv,
        anchors: pairs.anchors,
        conjugate: pairs.conjugate,
        a_norm,
    })
}

/// Lexicographic `(Re, Im)` order.
pub fn compare_modes(a: Complex64, b: Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub(crate) fn argmax_abs(it: impl Iterator<Item = Complex64>) -> usize {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, x) in it.enumerate() {
        let mag = x.norm();
        if mag > best_mag {
            best = i;
            best_mag = mag;
        }
    }
    best
}

/// Rescales eigenvector `v` so entry `anchor` equals 1.
pub fn normalize_at(v: &mut [Complex64], anchor: usize) {
    let pivot = v[anchor];
    for x in v.iter_mut() {
        *x /= pivot;
    }
    v[anchor] = Complex64::new(1.0, 0.0);
}

/// Matches each eigenvalue of `reference` to the nearest unused one in
/// `candidates`; returns `candidates` indices in `reference` order.
pub fn match_modes(reference: &[Complex64], candidates: &[Complex64]) -> Vec<usize> {
    let mut used = vec![false; candidates.len()];
    reference
        .iter()
        .map(|r| {
            let j = (0..candidates.len())
                .filter(|&j| !used[j])
                .min_by(|&a, &b| (candidates[a] - r).norm().total_cmp(&(candidates[b] - r).norm()))
                .expect("candidate list at least as long as reference");
            used[j] = true;
            j
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_c, to_complex};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0]));
        let b = eig_decompose(&a).unwrap();
        assert_eq!(b.eigenvalues, vec![c(-2.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(b.m[(1, 0)], c(1.0, 0.0));
        assert_eq!(b.m[(0, 1)], c(1.0, 0.0));
        assert_eq!(b.m[(0, 0)].norm() + b.m[(1, 1)].norm(), 0.0);
    }

    #[test]
    fn rotation() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let b = eig_decompose(&a).unwrap();
        assert!((b.eigenvalues[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((b.eigenvalues[1] - c(0.0, 1.0)).norm() < 1e-14);
        assert_eq!(b.eigenvalues[0], b.eigenvalues[1].conj());
        assert_eq!(b.conjugate, vec![1, 0]);
    }

    #[test]
    fn identity_is_degenerate() {
        let a = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(eig_decompose(&a), Err(Error::DegenerateSpectrum { .. })));
    }

    fn random_matrix(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn random_basis_invariants() {
        for seed in 0..30 {
            let n = 2 + (seed as usize % 12);
            let a = random_matrix(n, seed);
            let b = eig_decompose(&a).unwrap();
            let ac = to_complex(&a);
            let lam = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(b.eigenvalues.clone()));
            let scale = b.a_norm;
            assert!(max_abs_c(&(&ac * &b.m - &b.m * &lam)) < 1e-9 * scale * n as f64);
            let eye = CMatrix::identity(n, n);
            assert!(max_abs_c(&(&b.m * &b.m_inv - eye)) < 1e-9);
            assert!(max_abs_c(&(&b.m * lam * &b.m_inv - &ac)) < 1e-9 * scale);
            for i in 0..n {
                assert_eq!(b.m[(b.anchors[i], i)], c(1.0, 0.0));
                assert!(b.m.column(i).iter().all(|x| x.norm() <= 1.0 + 1e-12));
                let j = b.conjugate[i];
                assert_eq!(b.eigenvalues[j], b.eigenvalues[i].conj());
                for r in 0..n {
                    assert_eq!(b.m[(r, j)], b.m[(r, i)].conj());
                    assert_eq!(b.m_inv[(j, r)], b.m_inv[(i, r)].conj());
                }
            }
            for w in b.eigenvalues.windows(2) {
                assert_ne!(compare_modes(w[0], w[1]), Ordering::Greater);
            }
        }
    }

    #[test]
    fn deterministic() {
        let a = random_matrix(9, 77);
        let b1 = eig_decompose(&a).unwrap();
        let b2 = eig_decompose(&a).unwrap();
        assert_eq!(b1.eigenvalues, b2.eigenvalues);
        assert_eq!(b1.m, b2.m);
        assert_eq!(b1.anchors, b2.anchors);
    }

    #[test]
    fn matches_nalgebra_eigenvalues() {
        let a = random_matrix(10, 5);
        let ours = eig_decompose(&a).unwrap().eigenvalues;
        let theirs: Vec<Complex64> = a.complex_eigenvalues().iter().copied().collect();
        let idx = match_modes(&ours, &theirs);
        for (i, &j) in idx.iter().enumerate() {
            assert!((ours[i] - theirs[j]).norm() < 1e-10);
        }
    }
}
