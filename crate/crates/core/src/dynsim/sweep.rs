use num_complex::Complex64;
use serde::Serialize;

use super::linear::build_linear_model;
use super::model::Actuator;
use crate::linalg::CMatrix;
use crate::modal::eigen_pairs;
use crate::netmodel::EquilibriumModel;
use crate::par;
use crate::{Error, Result};

/// Alignment below which a tracked match is reported as ambiguous.
pub const TRACKING_THRESHOLD: f64 = 0.7;

/// Eigenvalue loci over a gain grid. `eigenvalues[g][m]` is mode `m` at
/// `gains[g]`; mode order is fixed by the first gain and followed by tracking.
#[derive(Debug, Clone, Serialize)]
pub struct GainSweep {
    pub gains: Vec<f64>,
    pub eigenvalues: Vec<Vec<Complex64>>,
    /// Eigenvector alignment of each mode with its predecessor (1 at the first gain).
    pub alignment: Vec<Vec<f64>>,
    /// `(gain index, mode)` pairs whose best alignment fell below the threshold.
    pub ambiguous: Vec<(usize, usize)>,
}

fn alignment(a: &CMatrix, i: usize, b: &CMatrix, j: usize) -> f64 {
    let u = a.column(i);
    let v = b.column(j);
    let dot: Complex64 = u.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
    dot.norm() / (u.norm() * v.norm())
}

/// Eigenvalues of `A(θ)` for each gain, tracked by right-eigenvector alignment.
pub fn gain_sweep(eq: &EquilibriumModel, actuator: &Actuator, gains: &[f64]) -> Result<GainSweep> {
    if let Some(g) = gains.iter().find(|g| !g.is_finite() || **g < 0.0) {
        return Err(Error::InvalidInput(format!("gain {g} must be finite and non-negative")));
    }
    let lin = build_linear_model(eq, Some(actuator))?;
    let spectra = par::map_collect(gains, |&g| eigen_pairs(&lin.a(g)));
    let spectra = spectra.into_iter().collect::<Result<Vec<_>>>()?;

    let mut eigenvalues = Vec::with_capacity(gains.len());
    let mut alignments = Vec::with_capacity(gains.len());
    let mut ambiguous = Vec::new();
    let Some(first) = spectra.first() else {
        return Ok(GainSweep {
            gains: vec![],
            eigenvalues,
            alignment: alignments,
            ambiguous,
        });
    };
    let n = first.values.len();
    eigenvalues.push(first.values.clone());
    alignments.push(vec![1.0; n]);
    // order[m] = index of mode m in the current gain's spectrum
    let mut order: Vec<usize> = (0..n).collect();
    for g in 1..spectra.len() {
        let (prev, cur) = (&spectra[g - 1], &spectra[g]);
        let scale = cur.values.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let mut scored = Vec::with_capacity(n * n);
        for (m, &pi) in order.iter().enumerate() {
            for j in 0..n {
                let raw = alignment(&prev.vectors, pi, &cur.vectors, j);
                // conjugate partners have equally aligned vectors; keep the half-plane
                let (a, b) = (prev.values[pi].im, cur.values[j].im);
                let flipped = a * b < 0.0 && a.abs().min(b.abs()) > 1e-9 * scale;
                let score = if flipped { raw - 1.0 } else { raw };
                let dist = (prev.values[pi] - cur.values[j]).norm();
                scored.push((score, dist, m, j, raw));
            }
        }
        scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.total_cmp(&y.1)).then((x.2, x.3).cmp(&(y.2, y.3))));
        let mut taken_mode = vec![false; n];
        let mut taken_cur = vec![false; n];
        let mut next = vec![0; n];
        let mut align = vec![0.0; n];
        for (_, _, m, j, raw) in scored {
            if taken_mode[m] || taken_cur[j] {
                continue;
            }
            taken_mode[m] = true;
            taken_cur[j] = true;
            next[m] = j;
            align[m] = raw;
            if raw < TRACKING_THRESHOLD {
                ambiguous.push((g, m));
            }
        }
        order = next;
        eigenvalues.push(order.iter().map(|&j| cur.values[j]).collect());
        alignments.push(align);
    }
    if !ambiguous.is_empty() {
        log::warn!("mode tracking ambiguous at {} points", ambiguous.len());
    }
    Ok(GainSweep {
        gains: gains.to_vec(),
        eigenvalues,
        alignment: alignments,
        ambiguous,
    })
}
