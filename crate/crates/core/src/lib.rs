//! Constructive simultaneous triangularization of finite families of complex
//! matrices.
//!
//! The crate is organised bottom-up:
//!
//! - [`matcore`]: dense complex matrices, numerical rank, spectra, minimal
//!   polynomials and subspaces.
//! - [`commalg`]: iterated commutator layers of a family and the commutation
//!   predicates (L-nilpotency, the two Shemesh conditions, normality).
//! - [`trieng`]: invariant-subspace extraction and the triangularization
//!   procedures, each returning a certificate.
//! - [`algstruct`]: the associative algebra generated by a family, its
//!   Jacobson radical and semisimple quotient.
//! - [`certify`]: independent verification, a Burnside reducibility oracle
//!   and seeded instance generators.
//!
//! Every "= 0" decision is made against an explicit [`ToleranceContext`].

pub mod algstruct;
pub mod certify;
pub mod commalg;
mod error;
pub mod matcore;
pub mod trieng;

pub use error::{Error, Result};
pub use matcore::{ComplexMatrix, ComplexScalar, Polynomial, SubspaceBasis, ToleranceContext};
