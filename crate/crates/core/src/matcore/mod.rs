//! Dense complex matrix primitives: arithmetic, numerical rank, spectra,
//! minimal polynomials and subspaces.

mod matrix;
mod ops;
mod poly;
mod span;
mod spectral;
mod subspace;
mod tolerance;

pub use matrix::{ComplexMatrix, ComplexScalar};
pub use ops::{
    commutator, is_normal, is_scalar, minimal_polynomial, nilpotency_index, normality_residual,
    scalar_residual, MinimalPolynomial,
};
pub use poly::Polynomial;
pub use spectral::{
    eigen_decomposition, generalized_eigenspace, EigenCluster, SchurForm, SpectralAnalysis,
    SPECTRAL_PROJECTOR_BOUND,
};
pub use subspace::{kernel, kernel_with_scale, range, range_with_scale, SubspaceBasis};
pub use tolerance::{ToleranceContext, ToleranceOverrides};

pub(crate) use matrix::{columns_serde, CMat};
pub(crate) use span::MatrixSpan;
pub(crate) use subspace::{
    invariance_residual, kernel_abs, orthonormal_complement, singular_values, svd_full,
};
pub(crate) use tolerance::relative;
