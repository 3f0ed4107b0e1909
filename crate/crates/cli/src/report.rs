use serde::{Deserialize, Serialize};
use simtri_core::algstruct::{AlgebraStructure, QuotientCommutativity};
use simtri_core::certify::{CertifiedObject, VerificationReport};
use simtri_core::commalg::ConditionReport;
use simtri_core::ToleranceContext;

use crate::family::FamilyFile;

/// Everything a run produced, including the family it ran on, so that
/// `simtri verify` needs nothing else.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    /// SHA-256 of the input file as read.
    pub input_digest: String,
    /// SHA-256 of the canonical serialization of `family`.
    pub family_digest: String,
    pub family: FamilyFile,
    pub tolerances: ToleranceContext,
    pub max_depth: usize,
    pub conditions: FamilyConditions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<RunResult>,
    #[serde(default)]
    pub verification: Vec<VerificationReport>,
    pub timings: Timings,
}

/// Predicates that apply to any family, plus the pair report when the
/// family has exactly two members.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyConditions {
    pub l_nilpotent_length: Option<usize>,
    pub commuting: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<ConditionReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RunResult {
    Certified {
        /// The mode that ran (after `auto` dispatch).
        mode: String,
        objects: Vec<CertifiedObject>,
    },
    Algebra {
        structure: AlgebraStructure,
        radical_dim: usize,
        quotient_commutativity: QuotientCommutativity,
    },
}

/// Wall-clock milliseconds. Everything else in a report is deterministic.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timings {
    pub analysis_ms: f64,
    pub verification_ms: f64,
}

impl RunReport {
    pub fn verified(&self) -> bool {
        self.verification.iter().all(|v| v.overall)
    }
}
