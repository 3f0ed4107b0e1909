use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algstruct::generate_algebra;
use crate::commalg::OperatorFamily;
use crate::error::{Error, Result};
use crate::matcore::{kernel_abs, singular_values, CMat, ComplexScalar, SpectralAnalysis, ToleranceContext};

/// Largest dimension accepted by [`burnside_reducibility_oracle`].
pub const ORACLE_DIM_CAP: usize = 6;

/// Relative singular-value threshold for the rank decisions of the
/// submodule search.
const SUBMODULE_RANK_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub reducible: bool,
    pub algebra_dim: usize,
    /// Dimension of the proper invariant subspace found by the submodule
    /// search, if any.
    pub witness_dim: Option<usize>,
}

/// Rank of `cols` with singular values below `SUBMODULE_RANK_TOL × σ_max`
/// treated as zero.
fn numerical_rank(cols: &CMat) -> usize {
    let sv = singular_values(cols);
    let smax = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|&&s| s > SUBMODULE_RANK_TOL * smax).count()
}

/// Dimension of `span{v} + A v` for the algebra spanned by `basis`.
fn submodule_dim(basis: &[CMat], v: &CMat) -> usize {
    let n = v.nrows();
    let mut cols = CMat::zeros(n, basis.len() + 1);
    cols.set_column(0, &v.column(0));
    for (i, b) in basis.iter().enumerate() {
        cols.set_column(i + 1, &(b * v).column(0));
    }
    numerical_rank(&cols)
}

/// Searches for a proper submodule generated by an eigenvector of a generic
/// element of the algebra. Returns its dimension when found.
fn submodule_search(basis: &[CMat], n: usize, rng: &mut ChaCha8Rng, tol: &ToleranceContext) -> Option<usize> {
    if basis.is_empty() {
        // the zero algebra: every line is invariant
        return Some(1);
    }
    for _ in 0..3 {
        let mut a = CMat::zeros(n, n);
        for b in basis {
            let c = ComplexScalar::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            a += b * c;
        }
        let sa = SpectralAnalysis::new(&a, tol);
        let an = a.norm();
        for cl in sa.clusters() {
            let mut shifted = a.clone();
            for i in 0..n {
                shifted[(i, i)] -= cl.value;
            }
            let mut vecs = kernel_abs(&shifted, SUBMODULE_RANK_TOL * an.max(f64::MIN_POSITIVE));
            if vecs.ncols() == 0 {
                // fall back to the least singular direction
                let all = kernel_abs(&shifted, f64::INFINITY);
                vecs = all.columns(n - 1, 1).into_owned();
            }
            let mut candidates: Vec<CMat> = vecs
                .column_iter()
                .map(|c| CMat::from_iterator(n, 1, c.iter().copied()))
                .collect();
            if vecs.ncols() > 1 {
                let mut mix = CMat::zeros(n, 1);
                for c in vecs.column_iter() {
                    let w = ComplexScalar::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                    mix += c * w;
                }
                candidates.push(mix);
            }
            for v in &candidates {
                let d = submodule_dim(basis, v);
                if d < n {
                    return Some(d);
                }
            }
        }
    }
    None
}

/// Reducibility of a family by two independent routes that must agree:
/// Burnside (the generated algebra is proper iff the family is reducible)
/// and a direct search for a proper invariant subspace generated by
/// eigenvectors of generic algebra elements, run on the algebra and on its
/// adjoint.
pub fn burnside_reducibility_oracle(family: &OperatorFamily, tol: &ToleranceContext) -> Result<OracleVerdict> {
    let n = family.dim();
    if n > ORACLE_DIM_CAP {
        return Err(Error::Precondition(format!(
            "oracle dimension cap is {ORACLE_DIM_CAP}, family has dimension {n}"
        )));
    }
    let alg = generate_algebra(family, tol);
    if n == 1 {
        return Ok(OracleVerdict {
            reducible: false,
            algebra_dim: alg.dim_algebra,
            witness_dim: None,
        });
    }
    let by_dimension = alg.dim_algebra < n * n;
    let orth: Vec<CMat> = alg.orthonormal_basis().into_iter().map(|m| m.into_inner()).collect();
    let adj: Vec<CMat> = orth.iter().map(|m| m.adjoint()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b5e_55ed_u64 ^ n as u64);
    let witness = submodule_search(&orth, n, &mut rng, tol)
        .or_else(|| submodule_search(&adj, n, &mut rng, tol).map(|d| n - d));
    let by_search = witness.is_some();
    if by_dimension != by_search {
        return Err(Error::OracleDisagreement(format!(
            "algebra dimension {} of {} says {}, subspace search says {}",
            alg.dim_algebra,
            n * n,
            if by_dimension { "reducible" } else { "irreducible" },
            if by_search { "reducible" } else { "irreducible" },
        )));
    }
    Ok(OracleVerdict {
        reducible: by_dimension,
        algebra_dim: alg.dim_algebra,
        witness_dim: witness,
    })
}
