use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use simtri_core::certify::InstanceRecipe;
use simtri_core::commalg::OperatorFamily;
use simtri_core::matcore::ToleranceOverrides;
use simtri_core::{ComplexMatrix, ComplexScalar};

use crate::error::CliError;

/// A matrix family on disk: named `n×n` matrices of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub dim: usize,
    pub matrices: Vec<NamedMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverrides>,
    /// How the family was generated, when it came from `simtri generate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<InstanceRecipe>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedMatrix {
    pub name: String,
    /// Row-major; each entry should be a `[re, im]` pair.
    pub entries: Vec<Vec<Vec<f64>>>,
}

impl FamilyFile {
    pub fn from_family(family: &OperatorFamily) -> Self {
        let matrices = family
            .members()
            .iter()
            .zip(family.labels())
            .map(|(m, name)| NamedMatrix {
                name,
                entries: m
                    .to_pairs()
                    .into_iter()
                    .map(|row| row.into_iter().map(|p| p.to_vec()).collect())
                    .collect(),
            })
            .collect();
        Self {
            dim: family.dim(),
            matrices,
            tolerances: None,
            recipe: None,
        }
    }

    /// Parses and validates `text`; diagnostics name the offending matrix,
    /// row and column.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: FamilyFile = serde_json::from_str(text).map_err(|e| {
            CliError::Input(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        file.family()?;
        Ok(file)
    }

    pub fn family(&self) -> Result<OperatorFamily, CliError> {
        if self.matrices.is_empty() {
            return Err(CliError::Input("`matrices` is empty".into()));
        }
        if self.dim == 0 {
            return Err(CliError::Input("`dim` must be positive".into()));
        }
        let n = self.dim;
        let mut members = Vec::with_capacity(self.matrices.len());
        let mut names: Vec<String> = Vec::with_capacity(self.matrices.len());
        for m in &self.matrices {
            let name = &m.name;
            if names.contains(name) {
                return Err(CliError::Input(format!("matrix name `{name}` is used twice")));
            }
            if m.entries.len() != n {
                return Err(CliError::Input(format!(
                    "matrix `{name}`: expected {n} rows, found {}",
                    m.entries.len()
                )));
            }
            let mut rows = Vec::with_capacity(n);
            for (i, row) in m.entries.iter().enumerate() {
                if row.len() != n {
                    return Err(CliError::Input(format!(
                        "matrix `{name}`, row {i}: expected {n} entries, found {}",
                        row.len()
                    )));
                }
                let mut out = Vec::with_capacity(n);
                for (j, pair) in row.iter().enumerate() {
                    let [re, im] = pair[..] else {
                        return Err(CliError::Input(format!(
                            "matrix `{name}`, row {i}, column {j}: expected an [re, im] pair, found {} number(s)",
                            pair.len()
                        )));
                    };
                    out.push(ComplexScalar::new(re, im));
                }
                rows.push(out);
            }
            let matrix =
                ComplexMatrix::from_rows(&rows).map_err(|e| CliError::Input(format!("matrix `{name}`: {e}")))?;
            members.push(matrix);
            names.push(name.clone());
        }
        OperatorFamily::with_labels(members, names).map_err(|e| CliError::Input(e.to_string()))
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("family files serialize");
        sha256_hex(&bytes)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: &str = r#"{"dim": 2, "matrices": [
        {"name": "A", "entries": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]},
        {"name": "B", "entries": [[[0, 0], [0, 0]], [[1, 0], [0, 0]]]}
    ]}"#;

    #[test]
    fn parses_named_pairs() {
        let f = FamilyFile::parse(GOLDEN).unwrap();
        let fam = f.family().unwrap();
        assert_eq!(fam.labels(), vec!["A".to_string(), "B".to_string()]);
        assert_eq!(fam.members()[1].matrix()[(1, 0)], ComplexScalar::new(1.0, 0.0));
    }

    #[test]
    fn short_pair_names_the_matrix() {
        let bad = GOLDEN.replace("[[[0, 0], [0, 0]], [[1, 0], [0, 0]]]", "[[[0, 0], [0, 0]], [[1], [0, 0]]]");
        let err = FamilyFile::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("matrix `B`, row 1, column 0"), "{err}");
    }

    #[test]
    fn duplicate_names_and_wrong_sizes_are_rejected() {
        let dup = GOLDEN.replace("\"name\": \"B\"", "\"name\": \"A\"");
        assert!(FamilyFile::parse(&dup).unwrap_err().to_string().contains("used twice"));
        let wrong = GOLDEN.replace("\"dim\": 2", "\"dim\": 3");
        assert!(FamilyFile::parse(&wrong).unwrap_err().to_string().contains("expected 3 rows"));
    }

    #[test]
    fn syntax_errors_carry_a_location() {
        let err = FamilyFile::parse("{\"dim\": 2,\n \"matrices\": [}").unwrap_err().to_string();
        assert!(err.contains(": line 2, column"), "{err}");
    }

    #[test]
    fn round_trip_through_family() {
        let f = FamilyFile::parse(GOLDEN).unwrap();
        let g = FamilyFile::from_family(&f.family().unwrap());
        assert_eq!(f, g);
        assert_eq!(f.digest(), g.digest());
    }
}
