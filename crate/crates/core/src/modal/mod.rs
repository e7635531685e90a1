//! Eigendecomposition of the state matrix and first-order eigenvalue and
//! eigenvector sensitivities with respect to an actuator gain.

mod eig;
mod sensitivity;

pub use eig::{
    compare_modes, eig_decompose, eigen_pairs, match_modes, normalize_at, EigenPairs, ModalBasis,
    DEGENERACY_TOL,
};
pub use sensitivity::{
    eigenvalue_sensitivities, eigenvector_derivatives, modal_sensitivity, ModalSensitivity,
};
