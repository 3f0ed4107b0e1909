use serde::{Deserialize, Serialize};

use super::chain::SubFamily;
use super::search::ensure_l_nilpotent;
use crate::commalg::{default_max_depth, layers_scaled, OperatorFamily};
use crate::error::{Error, Result};
use crate::matcore::{
    kernel_with_scale, minimal_polynomial, nilpotency_index, orthonormal_complement, range_with_scale,
    relative, CMat, ComplexMatrix, ComplexScalar, SpectralAnalysis, ToleranceContext,
};

/// Induction measures of a family: `s = Σ deg m_T` over members and
/// `c = (k, Σ n([A,B]))`, or `(1, 1)` when the family commutes.
///
/// The sum in `c` runs over the retained (linearly independent) elements of
/// layer `k − 1`, which is how the layers are stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecursionMetrics {
    pub s_value: usize,
    pub c_value: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum SplitRule {
    /// `ker (A − λ₀)^{m−1}` for a member with a single eigenvalue whose
    /// minimal polynomial is `(x − λ₀)^m`.
    SingleEigenvalue { member: usize, power: usize },
    /// Generalized eigenspace `ker (A − λ₁)^m` of a member with several
    /// eigenvalues.
    GeneralizedEigenspace { member: usize, multiplicity: usize },
    /// `ran [A, B]` for the first nonzero element of the last nonvanishing
    /// commutator layer.
    CommutatorRange { left: usize, right: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitRecord {
    pub depth: usize,
    pub dim: usize,
    pub subspace_dim: usize,
    pub rule: SplitRule,
    pub metrics: RecursionMetrics,
    pub invariance_residual: f64,
}

/// Block upper triangular form with scalar diagonal blocks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalarDiagonalForm {
    pub block_dims: Vec<usize>,
    /// Unitary `P`; the new basis is its columns.
    pub basis_change: ComplexMatrix,
    /// `diagonal_scalars[j][i] = λ_{i,j}` for member `j` and block `i`.
    pub diagonal_scalars: Vec<Vec<ComplexScalar>>,
    /// `N_j = P⁻¹ T_j P − Σ λ_{i,j} P_i`.
    pub nilpotent_parts: Vec<ComplexMatrix>,
    /// Coordinate projections onto the blocks.
    pub projectors: Vec<ComplexMatrix>,
    /// Largest `‖block_ii(T_j) − λ_{i,j} I‖ / ‖T_j‖`.
    pub block_residual: f64,
    pub metrics: RecursionMetrics,
    pub splits: Vec<SplitRecord>,
}

impl ScalarDiagonalForm {
    pub fn block_count(&self) -> usize {
        self.block_dims.len()
    }

    /// Offsets of the blocks in the new basis.
    pub fn block_offsets(&self) -> Vec<usize> {
        self.block_dims
            .iter()
            .scan(0, |acc, &d| {
                let o = *acc;
                *acc += d;
                Some(o)
            })
            .collect()
    }
}

pub(crate) fn metrics_of(sf: &SubFamily, tol: &ToleranceContext) -> RecursionMetrics {
    let s_value = sf
        .members
        .iter()
        .map(|t| minimal_polynomial(t, tol).polynomial.degree())
        .sum();
    let layers = layers_scaled(&sf.members, &sf.refs, default_max_depth(sf.dim()), tol);
    let c_value = match layers.vanished_at {
        Some(1) => (1, 1),
        Some(k) => {
            let sum = layers.layers[k - 1]
                .iter()
                .map(|e| nilpotency_index(&e.matrix, tol).unwrap_or(sf.dim()))
                .sum();
            (k, sum)
        }
        None => (usize::MAX, 0),
    };
    RecursionMetrics { s_value, c_value }
}

/// Public wrapper for the induction measures of a family.
pub fn recursion_metrics(family: &OperatorFamily, tol: &ToleranceContext) -> RecursionMetrics {
    metrics_of(&SubFamily::from_family(family, tol), tol)
}

/// Eigenvalue-based candidate splits, member by member.
///
/// A defective eigenvalue comes back from the Schur form as a spread of
/// values, so a member that is nilpotent about its mean eigenvalue is split
/// by that eigenvalue first.
fn eigen_candidates<'a>(sf: &'a SubFamily, tol: &'a ToleranceContext) -> impl Iterator<Item = (CMat, SplitRule)> + 'a {
    let n = sf.dim();
    sf.nonscalar().flat_map(move |i| {
        let a = &sf.members[i];
        let sa = SpectralAnalysis::new(a.matrix(), tol);
        let several = sa.clusters().len() >= 2;
        let lambda = a.matrix().trace() / n as f64;
        let nil = a.shift(-lambda);
        let index = nilpotency_index(&nil, tol);
        let mut out = Vec::new();
        if index.is_some() || !several {
            let m = index.unwrap_or(n).max(2);
            let p = nil.pow(m - 1);
            let scale = nil.norm().powi(m as i32 - 1);
            out.push((
                kernel_with_scale(p.matrix(), tol, scale).basis().clone(),
                SplitRule::SingleEigenvalue { member: i, power: m - 1 },
            ));
        }
        if several {
            for (c, cl) in sa.clusters().iter().enumerate() {
                out.push((
                    sa.spectral_subspace(c),
                    SplitRule::GeneralizedEigenspace {
                        member: i,
                        multiplicity: cl.multiplicity,
                    },
                ));
            }
        }
        out
    })
}

struct BlockSplitter<'a> {
    tol: &'a ToleranceContext,
    splits: Vec<SplitRecord>,
}

impl BlockSplitter<'_> {
    /// Orthonormal bases (in the coordinates of `sf`) of the diagonal blocks.
    fn split(&mut self, sf: &SubFamily, depth: usize) -> Result<Vec<CMat>> {
        let n = sf.dim();
        if n == 1 || sf.all_scalar() {
            return Ok(vec![CMat::identity(n, n)]);
        }
        let tol = self.tol;
        let layers = layers_scaled(&sf.members, &sf.refs, default_max_depth(n), tol);
        let (q1, rule) = match layers.vanished_at {
            None => {
                return Err(Error::numerical(
                    "scalar_diagonal_decomposition",
                    format!("restricted family at depth {depth} is not L-nilpotent"),
                    f64::NAN,
                ))
            }
            Some(1) => sf.pick_invariant(tol, eigen_candidates(sf, tol)).ok_or_else(|| {
                Error::numerical(
                    "scalar_diagonal_decomposition",
                    format!("no candidate subspace at depth {depth} is nontrivial"),
                    f64::NAN,
                )
            })?,
            Some(k) => {
                // any element of the last nonzero layer will do; a layer at
                // rounding level in a deep compression leaves the
                // eigenvalue candidates
                let ranges = layers.layers[k - 1].iter().map(|e| {
                    let w = e.witness.expect("layer elements beyond zero carry witnesses");
                    (
                        range_with_scale(e.matrix.matrix(), tol, e.scale).basis().clone(),
                        SplitRule::CommutatorRange {
                            left: w.left,
                            right: w.right,
                        },
                    )
                });
                sf.pick_invariant(tol, ranges.chain(eigen_candidates(sf, tol))).ok_or_else(|| {
                    Error::numerical(
                        "scalar_diagonal_decomposition",
                        format!("no candidate subspace at depth {depth} is nontrivial"),
                        f64::NAN,
                    )
                })?
            }
        };
        let k = q1.ncols();
        if k == 0 || k >= n {
            return Err(Error::numerical(
                "scalar_diagonal_decomposition",
                format!("rule {rule:?} produced a trivial subspace (dimension {k} of {n})"),
                f64::NAN,
            ));
        }
        let inv = sf.invariance(&q1);
        if inv > tol.invariance_tol() {
            return Err(Error::numerical(
                "scalar_diagonal_decomposition",
                format!("rule {rule:?} subspace is not invariant at depth {depth}"),
                inv,
            ));
        }
        self.splits.push(SplitRecord {
            depth,
            dim: n,
            subspace_dim: k,
            rule,
            metrics: metrics_of(sf, tol),
            invariance_residual: inv,
        });
        let q2 = orthonormal_complement(&q1);
        let mut out: Vec<CMat> = self
            .split(&sf.compress(&q1, tol), depth + 1)?
            .into_iter()
            .map(|b| &q1 * b)
            .collect();
        out.extend(
            self.split(&sf.compress(&q2, tol), depth + 1)?
                .into_iter()
                .map(|b| &q2 * b),
        );
        Ok(out)
    }
}

/// Splits the space into blocks on which every member acts as a scalar
/// modulo a strictly block upper triangular part.
pub fn scalar_diagonal_decomposition(
    family: &OperatorFamily,
    tol: &ToleranceContext,
) -> Result<ScalarDiagonalForm> {
    ensure_l_nilpotent(family, tol)?;
    let sf = SubFamily::from_family(family, tol);
    let mut splitter = BlockSplitter {
        tol,
        splits: Vec::new(),
    };
    let blocks = splitter.split(&sf, 0)?;
    let n = family.dim();
    let block_dims: Vec<usize> = blocks.iter().map(|b| b.ncols()).collect();
    let mut p = CMat::zeros(n, n);
    let mut offsets = Vec::with_capacity(blocks.len());
    let mut off = 0;
    for b in &blocks {
        p.columns_mut(off, b.ncols()).copy_from(b);
        offsets.push(off);
        off += b.ncols();
    }
    let projectors: Vec<ComplexMatrix> = offsets
        .iter()
        .zip(&block_dims)
        .map(|(&o, &d)| {
            let mut m = CMat::zeros(n, n);
            for i in o..o + d {
                m[(i, i)] = ComplexScalar::new(1.0, 0.0);
            }
            ComplexMatrix::wrap(m)
        })
        .collect();

    let pa = p.adjoint();
    let mut diagonal_scalars = Vec::with_capacity(family.len());
    let mut nilpotent_parts = Vec::with_capacity(family.len());
    let mut block_residual = 0.0f64;
    for t in family.members() {
        let form = &pa * t.matrix() * &p;
        let mut lambdas = Vec::with_capacity(blocks.len());
        let mut nil = form.clone();
        for (&o, &d) in offsets.iter().zip(&block_dims) {
            let block = form.view((o, o), (d, d));
            let lambda = block.trace() / d as f64;
            let mut dev = 0.0;
            for r in 0..d {
                for c in 0..d {
                    let want = if r == c { lambda } else { ComplexScalar::new(0.0, 0.0) };
                    dev += (block[(r, c)] - want).norm_sqr();
                }
                nil[(o + r, o + r)] -= lambda;
            }
            block_residual = block_residual.max(relative(dev.sqrt(), t.norm()));
            lambdas.push(lambda);
        }
        diagonal_scalars.push(lambdas);
        nilpotent_parts.push(ComplexMatrix::wrap(nil));
    }

    Ok(ScalarDiagonalForm {
        block_dims,
        basis_change: ComplexMatrix::wrap(p),
        diagonal_scalars,
        nilpotent_parts,
        projectors,
        block_residual,
        metrics: metrics_of(&sf, tol),
        splits: splitter.splits,
    })
}
