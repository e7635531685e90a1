use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::{inf_norm_c, to_complex, CMatrix, CVector};
use crate::modal::ModalBasis;
use crate::{Error, Result};

/// Relative magnitude (to `‖A‖∞`) below which a mode is treated as a zero mode.
pub const MODE_FILTER_TOL: f64 = 1e-7;
/// Modes must satisfy `Re λ < −STABILITY_TOL` for the total action to exist.
pub const STABILITY_TOL: f64 = 1e-9;
/// Relative tolerance on imaginary residues of quantities that must be real.
pub const REALITY_TOL: f64 = 1e-9;
/// `|λᵢ + λⱼ|` below which a retained pair is treated as resonant.
pub const RESONANCE_TOL: f64 = 1e-9;

/// Kinetic oscillation energy in modal coordinates.
#[derive(Debug, Clone)]
pub struct ModalEnergy {
    /// `G = Mᵀ·J·M` (plain transpose).
    pub g: CMatrix,
    /// `z₀ = M⁻¹·Δx₀`.
    pub z0: CVector,
    /// Modes kept after the zero-mode filter, ascending.
    pub retained: Vec<usize>,
}

/// `E_k = ½·ΔxᵀJΔx`.
pub fn kinetic_energy(j: &DMatrix<f64>, dx: &[f64]) -> Result<f64> {
    let n = dx.len();
    if j.nrows() != n || j.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "state length {n} does not match J ({}×{})",
            j.nrows(),
            j.ncols()
        )));
    }
    let mut e = 0.0;
    for r in 0..n {
        for c in 0..n {
            e += dx[r] * j[(r, c)] * dx[c];
        }
    }
    Ok(0.5 * e)
}

/// `½·zᵀGz` over all modes (complex; real up to rounding for real states).
pub fn modal_kinetic_energy(g: &CMatrix, z: &CVector) -> Complex64 {
    let gz = g * z;
    0.5 * z.iter().zip(gz.iter()).map(|(a, b)| a * b).sum::<Complex64>()
}

/// Modal energy form of `Δx₀`. Zero modes (`|λ| < tol·‖A‖∞`, default
/// [`MODE_FILTER_TOL`]) are dropped after checking they carry no kinetic energy.
pub fn modal_energy(
    basis: &ModalBasis,
    j: &DMatrix<f64>,
    dx0: &[f64],
    mode_filter_tol: Option<f64>,
) -> Result<ModalEnergy> {
    let n = basis.n();
    if j.nrows() != n || dx0.len() != n {
        return Err(Error::InvalidInput(format!(
            "basis has {n} modes but J is {}×{} and Δx₀ has {} entries",
            j.nrows(),
            j.ncols(),
            dx0.len()
        )));
    }
    let jc = to_complex(j);
    let mut g = basis.m.transpose() * &jc * &basis.m;
    // exact symmetry
    for r in 0..n {
        for c in (r + 1)..n {
            let avg = (g[(r, c)] + g[(c, r)]) * 0.5;
            g[(r, c)] = avg;
            g[(c, r)] = avg;
        }
    }
    let x = CVector::from_iterator(n, dx0.iter().map(|&v| Complex64::new(v, 0.0)));
    let z0 = &basis.m_inv * x;

    let tol = mode_filter_tol.unwrap_or(MODE_FILTER_TOL) * basis.a_norm;
    let g_norm = inf_norm_c(&g);
    let mut retained = Vec::with_capacity(n);
    for i in 0..n {
        if basis.eigenvalues[i].norm() < tol {
            let row_max = g.row(i).iter().map(|v| v.norm()).fold(0.0, f64::max);
            if row_max > MODE_FILTER_TOL * g_norm {
                return Err(Error::ZeroModeCarriesEnergy { mode: i, row_max });
            }
        } else {
            retained.push(i);
        }
    }
    Ok(ModalEnergy { g, z0, retained })
}

pub(crate) fn ensure_real(raw: Complex64, magnitude: f64) -> Result<f64> {
    // rounding in the pairwise cancellation scales with the largest term
    let tol = REALITY_TOL * raw.re.abs() + 1e-14 * magnitude;
    if raw.im.abs() > tol {
        return Err(Error::ImaginaryResidueExceeded {
            real: raw.re,
            imag: raw.im,
        });
    }
    Ok(raw.re)
}

fn pair_sum(
    energy: &ModalEnergy,
    lambda: &[Complex64],
    mut weight: impl FnMut(Complex64) -> Complex64,
) -> Result<(Complex64, f64)> {
    let (z, g) = (&energy.z0, &energy.g);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    for &i in &energy.retained {
        for &j in &energy.retained {
            let s = lambda[i] + lambda[j];
            if s.norm() < RESONANCE_TOL {
                return Err(Error::ResonantPair { i, j, sum: s });
            }
            let term = z[i] * z[j] * g[(i, j)] * weight(s);
            mag += term.norm();
            sum += term;
        }
    }
    Ok((sum, mag))
}

/// `e^x − 1` without cancellation for small `|x|`.
fn expm1(x: Complex64) -> Complex64 {
    let half = (0.5 * x.im).sin();
    Complex64::new(
        x.re.exp_m1() * x.im.cos() - 2.0 * half * half,
        x.re.exp() * x.im.sin(),
    )
}

/// `(e^{sτ} − 1)/s`.
fn integrated_exp(s: Complex64, tau: f64) -> Complex64 {
    expm1(s * tau) / s
}

/// Action `S(τ) = ∫₀^τ E_k dt` in closed form.
pub fn action(energy: &ModalEnergy, lambda: &[Complex64], tau: f64) -> Result<f64> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!("τ must be finite and ≥ 0, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    let (sum, mag) = pair_sum(energy, lambda, |s| integrated_exp(s, tau))?;
    ensure_real(0.5 * sum, 0.5 * mag)
}

fn check_stable(energy: &ModalEnergy, lambda: &[Complex64]) -> Result<()> {
    let bad: Vec<Complex64> = energy
        .retained
        .iter()
        .map(|&i| lambda[i])
        .filter(|l| !(l.re < -STABILITY_TOL))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::NotAsymptoticallyStable { modes: bad })
    }
}

/// Total action `S∞ = −½·Σᵢⱼ z₀ᵢ·z₀ⱼ·gᵢⱼ/(λᵢ+λⱼ)`.
pub fn total_action(energy: &ModalEnergy, lambda: &[Complex64]) -> Result<f64> {
    check_stable(energy, lambda)?;
    let (sum, mag) = pair_sum(energy, lambda, |s| 1.0 / s)?;
    ensure_real(-0.5 * sum, 0.5 * mag)
}

pub(crate) fn require_stable(energy: &ModalEnergy, lambda: &[Complex64]) -> Result<()> {
    check_stable(energy, lambda)
}
