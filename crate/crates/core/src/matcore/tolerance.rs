use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds that realize exact "= 0" and rank decisions.
///
/// All three values are relative: `rank_tol` to the largest singular value,
/// `eig_cluster_tol` to the matrix norm, `zero_tol` to an a-priori scale of
/// the quantity being tested (typically a product of operand norms).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceContext {
    pub rank_tol: f64,
    pub eig_cluster_tol: f64,
    pub zero_tol: f64,
}

/// Per-call overrides; unset fields keep the dimension-dependent default.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eig_cluster_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_tol: Option<f64>,
}

impl ToleranceContext {
    pub const DEFAULT_EIG_CLUSTER_TOL: f64 = 1e-8;
    pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

    /// Defaults for an `n`-dimensional problem: `rank_tol = n * eps * 64`.
    pub fn for_dim(n: usize) -> Self {
        Self {
            rank_tol: n.max(1) as f64 * f64::EPSILON * 64.0,
            eig_cluster_tol: Self::DEFAULT_EIG_CLUSTER_TOL,
            zero_tol: Self::DEFAULT_ZERO_TOL,
        }
    }

    pub fn with_overrides(mut self, o: &ToleranceOverrides) -> Self {
        if let Some(v) = o.rank_tol {
            self.rank_tol = v;
        }
        if let Some(v) = o.eig_cluster_tol {
            self.eig_cluster_tol = v;
        }
        if let Some(v) = o.zero_tol {
            self.zero_tol = v;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rank_tol", self.rank_tol),
            ("eig_cluster_tol", self.eig_cluster_tol),
            ("zero_tol", self.zero_tol),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidTolerance(format!("{name} = {v}")));
            }
        }
        Ok(())
    }

    /// Threshold for invariance checks made while building chains.
    pub fn invariance_tol(&self) -> f64 {
        10.0 * self.zero_tol
    }
}

impl Default for ToleranceContext {
    fn default() -> Self {
        Self::for_dim(1)
    }
}

/// `‖x‖ / scale`, with `0` when the scale vanishes (then `x` is exactly zero).
pub(crate) fn relative(value: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        value / scale
    } else if value > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}
