use num_complex::Complex64;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid case: {0}")]
    Semantic(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown bus {0}")]
    UnknownBus(usize),

    #[error("bus {0} is not reachable from any generator")]
    Unreachable(usize),

    #[error("power flow did not converge after {iterations} iterations (max mismatch {residual:.3e} pu)")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("actuator bus voltage solve did not converge after {iterations} iterations (residual {residual:.3e})")]
    AlgebraicSolve { iterations: usize, residual: f64 },

    #[error("state matrix is not affine in the actuator gain (residual {residual:.3e})")]
    AffinityViolation { residual: f64 },

    #[error("non-finite state at t = {time} s")]
    NonFinite { time: f64 },

    #[error("degenerate spectrum: minimum eigenvalue gap {gap:.3e} below {threshold:.3e}")]
    DegenerateSpectrum { gap: f64, threshold: f64 },

    #[error("eigenvalue iteration failed: {0}")]
    EigenFailure(String),

    #[error("anchor-pinned Nelson system singular for mode {mode}")]
    NelsonSingular { mode: usize },

    #[error("filtered mode {mode} carries kinetic energy (G row max {row_max:.3e})")]
    ZeroModeCarriesEnergy { mode: usize, row_max: f64 },

    #[error("resonant mode pair ({i}, {j}): λi + λj = {sum}")]
    ResonantPair { i: usize, j: usize, sum: Complex64 },

    #[error("system is not asymptotically stable; offending modes: {modes:?}")]
    NotAsymptoticallyStable { modes: Vec<Complex64> },

    #[error("imaginary residue {imag:.3e} exceeds tolerance for real part {real:.6e}")]
    ImaginaryResidueExceeded { real: f64, imag: f64 },

    #[error("disturbance is identically zero")]
    DegenerateDisturbance,
}
