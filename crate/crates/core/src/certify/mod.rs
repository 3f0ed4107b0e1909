//! Independent verification of certificates, a Burnside reducibility oracle
//! for small families and seeded instance generators.

mod generate;
mod oracle;
mod verify;

pub use generate::{
    direct_sum, generate_distinct_diagonal_pair, generate_instance, generate_nested_commutator_pair,
    instance_predicate, shemesh_block_catalog, GeneratedInstance, InstanceKind, InstanceRecipe, PredicateCheck,
};
pub use oracle::{burnside_reducibility_oracle, OracleVerdict, ORACLE_DIM_CAP};
pub use verify::{
    verify_algebra, verify_certificate, verify_normal_pair, verify_scalar_diagonal, verify_triangularization, CertifiedObject,
    Check, VerificationReport,
};
