//! Invariant-subspace extraction and the triangularization procedures.
//!
//! Every procedure builds its chain by recursion: find one common invariant
//! subspace `V₁`, then recurse on the restriction to `V₁` and on the
//! compression to `V₁^⊥`. Complements are orthogonal, so the resulting basis
//! change is unitary.

mod blocks;
mod chain;
mod normal;
mod search;
mod shemesh;

pub use blocks::{
    recursion_metrics, scalar_diagonal_decomposition, RecursionMetrics, ScalarDiagonalForm, SplitRecord,
    SplitRule,
};
pub use chain::{InvariantChain, Route, RouteStep, TriangularizationCertificate};
pub use normal::{
    analyze_normal_pair, analyze_normal_pair_dual, NormalPairAnalysis, OperatorBlocks,
    SimultaneousDiagonalization,
};
pub use search::{
    find_common_invariant_subspace, triangularize_commuting, triangularize_l_nilpotent, Strategy,
    SubspaceSearch,
};
pub use shemesh::{triangularize_left_annihilated, triangularize_shemesh};
