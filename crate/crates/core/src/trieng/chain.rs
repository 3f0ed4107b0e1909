use serde::{Deserialize, Serialize};

use crate::commalg::OperatorFamily;
use crate::error::{Error, Result};
use crate::matcore::{
    commutator, invariance_residual, orthonormal_complement, scalar_residual, singular_values, CMat, ComplexMatrix, ComplexScalar,
    SubspaceBasis, ToleranceContext,
};

/// Strictly increasing chain `0 ⊂ V₁ ⊂ … ⊂ V_r ⊂ ℂⁿ` of common invariant
/// subspaces. The endpoints are implicit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvariantChain {
    pub ambient_dim: usize,
    pub subspaces: Vec<SubspaceBasis>,
    /// True iff the dimensions are exactly `1, 2, …, n−1`.
    pub maximal: bool,
}

impl InvariantChain {
    /// Chain spanned by the leading `d` columns of `p` for each `d` in `dims`.
    pub(crate) fn from_columns(p: &CMat, dims: &[usize], tol: &ToleranceContext) -> Self {
        let n = p.nrows();
        let subspaces = dims
            .iter()
            .map(|&d| {
                let cols = p.columns(0, d).into_owned();
                // leading columns of a unitary are already orthonormal
                SubspaceBasis::from_orthonormal(cols, *tol)
            })
            .collect();
        let maximal = dims.len() + 1 == n && dims.iter().enumerate().all(|(i, &d)| d == i + 1);
        Self {
            ambient_dim: n,
            subspaces,
            maximal,
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subspaces.iter().map(|s| s.dim()).collect()
    }
}

/// How a split was obtained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Every member acts as a scalar; any flag works.
    AllScalar,
    /// Eigenspace (or generalized eigenspace) of a nonscalar member of a
    /// commuting family.
    CommutingEigenspace,
    /// Kernel of a nonzero element of the last nonvanishing commutator layer.
    CommutatorKernel,
    /// Range of the commutator.
    CommutatorRange,
    /// Eigenspace of `AB`, which commutes with both operators.
    ProductEigenspace,
    /// `AB = 0`: the range of `B`.
    RangeOfB,
    /// `AB = cI`, `c ≠ 0`: an eigenspace of `B` after rescaling.
    ScaledProduct,
    /// Kernel of a normal operator.
    NormalKernel,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RouteStep {
    pub depth: usize,
    pub dim: usize,
    pub subspace_dim: usize,
    pub route: Route,
    pub detail: String,
    /// Worst invariance residual of the chosen subspace, relative to the
    /// members' original norms.
    pub invariance_residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TriangularizationCertificate {
    /// Name of the procedure that produced the certificate.
    pub producer: String,
    pub basis_change: ComplexMatrix,
    /// `P⁻¹ T P` for each member, in family order.
    pub triangular_forms: Vec<ComplexMatrix>,
    /// Largest below-diagonal modulus of any triangular form divided by the
    /// norm of its member.
    pub residual: f64,
    /// 2-norm condition number of `P` (1 for the unitary chains produced here).
    pub condition_number: f64,
    pub chain: InvariantChain,
    pub steps: Vec<RouteStep>,
    pub warnings: Vec<String>,
}

/// Working copy of a family during recursion. `refs` keeps the norms of the
/// original members so that tolerance decisions on small restrictions stay
/// anchored to the input scale.
#[derive(Clone, Debug)]
pub(crate) struct SubFamily {
    pub members: Vec<ComplexMatrix>,
    pub refs: Vec<f64>,
}

impl SubFamily {
    pub fn from_family(f: &OperatorFamily, tol: &ToleranceContext) -> Self {
        let mut s = Self {
            members: f.members().to_vec(),
            refs: f.members().iter().map(|m| m.norm()).collect(),
        };
        s.snap(tol);
        s
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    /// Replaces members within `zero_tol × ref` of a scalar by that scalar.
    fn snap(&mut self, tol: &ToleranceContext) {
        for (m, &r) in self.members.iter_mut().zip(&self.refs) {
            let n = m.dim();
            let mean = m.trace() / n as f64;
            if m.shift(-mean).norm() <= tol.zero_tol * r {
                *m = ComplexMatrix::identity(n).scale(mean);
            }
        }
    }

    pub fn compress(&self, q: &CMat, tol: &ToleranceContext) -> Self {
        let qa = q.adjoint();
        let mut s = Self {
            members: self
                .members
                .iter()
                .map(|t| ComplexMatrix::wrap(&qa * t.matrix() * q))
                .collect(),
            refs: self.refs.clone(),
        };
        s.snap(tol);
        s
    }

    /// Exact test, so it agrees with `snap`: `trace / n` of a snapped
    /// member need not reproduce its diagonal to the last bit.
    pub fn is_scalar(&self, i: usize) -> bool {
        let m = self.members[i].matrix();
        let d = m[(0, 0)];
        m.iter().enumerate().all(|(k, &z)| {
            let (r, c) = (k % m.nrows(), k / m.nrows());
            if r == c {
                z == d
            } else {
                z == ComplexScalar::new(0.0, 0.0)
            }
        })
    }

    pub fn all_scalar(&self) -> bool {
        (0..self.members.len()).all(|i| self.is_scalar(i))
    }

    pub fn commutes(&self, tol: &ToleranceContext) -> bool {
        let k = self.members.len();
        for i in 0..k {
            for j in (i + 1)..k {
                let c = commutator(&self.members[i], &self.members[j]).expect("same dimension");
                if c.norm() > tol.zero_tol * self.refs[i] * self.refs[j] {
                    return false;
                }
            }
        }
        true
    }

    pub fn nonscalar(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.members.len()).filter(|&i| !self.is_scalar(i))
    }

    /// First nontrivial candidate that every member leaves invariant, or
    /// the nontrivial candidate closest to it when none does.
    pub fn pick_invariant<T>(&self, tol: &ToleranceContext, candidates: impl Iterator<Item = (CMat, T)>) -> Option<(CMat, T)> {
        let n = self.dim();
        let mut best: Option<(f64, CMat, T)> = None;
        for (q, tag) in candidates {
            if q.ncols() == 0 || q.ncols() >= n {
                continue;
            }
            let inv = self.invariance(&q);
            if inv <= tol.invariance_tol() {
                return Some((q, tag));
            }
            if best.as_ref().is_none_or(|(b, _, _)| inv < *b) {
                best = Some((inv, q, tag));
            }
        }
        best.map(|(_, q, tag)| (q, tag))
    }

    /// Worst `‖(I − QQ*) T Q‖ / ref` over members.
    pub fn invariance(&self, q: &CMat) -> f64 {
        self.members
            .iter()
            .zip(&self.refs)
            .map(|(t, &r)| {
                let rel = invariance_residual(q, t.matrix());
                let tn = t.norm();
                if r > 0.0 {
                    rel * tn / r
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

/// A proposed invariant subspace with orthonormal basis.
pub(crate) struct Split {
    pub basis: CMat,
    pub route: Route,
    pub detail: String,
    pub warning: Option<String>,
}

/// Strategy for the next split. Returning `Ok(None)` means the family is
/// out of reach of the strategy.
pub(crate) type Finder<'a> = dyn FnMut(&SubFamily, usize) -> Result<Option<Split>> + 'a;

pub(crate) struct FlagBuilder<'a, 'f> {
    pub tol: &'a ToleranceContext,
    pub finder: &'a mut Finder<'f>,
    pub stage: &'static str,
    pub steps: Vec<RouteStep>,
    pub warnings: Vec<String>,
}

impl FlagBuilder<'_, '_> {
    /// Unitary `U` whose leading columns span a maximal invariant flag.
    pub fn build(&mut self, sf: &SubFamily, depth: usize) -> Result<CMat> {
        let n = sf.dim();
        if n == 1 || sf.all_scalar() {
            if n > 1 {
                self.steps.push(RouteStep {
                    depth,
                    dim: n,
                    subspace_dim: n,
                    route: Route::AllScalar,
                    detail: "all members scalar; coordinate flag".into(),
                    invariance_residual: 0.0,
                });
            }
            return Ok(CMat::identity(n, n));
        }
        let split = (self.finder)(sf, depth)?.ok_or_else(|| {
            Error::numerical(
                self.stage,
                format!("no invariant subspace found at depth {depth} (dimension {n})"),
                f64::NAN,
            )
        })?;
        let q1 = split.basis;
        let k = q1.ncols();
        if k == 0 || k >= n {
            return Err(Error::numerical(
                self.stage,
                format!(
                    "route {:?} produced a trivial subspace (dimension {k} of {n}) at depth {depth}",
                    split.route
                ),
                f64::NAN,
            ));
        }
        let inv = sf.invariance(&q1);
        if inv > self.tol.invariance_tol() {
            return Err(Error::numerical(
                self.stage,
                format!("route {:?} subspace is not invariant at depth {depth}", split.route),
                inv,
            ));
        }
        if let Some(w) = split.warning {
            self.warnings.push(w);
        }
        self.steps.push(RouteStep {
            depth,
            dim: n,
            subspace_dim: k,
            route: split.route,
            detail: split.detail,
            invariance_residual: inv,
        });
        let q2 = orthonormal_complement(&q1);
        let u1 = self.build(&sf.compress(&q1, self.tol), depth + 1)?;
        let u2 = self.build(&sf.compress(&q2, self.tol), depth + 1)?;
        let mut u = CMat::zeros(n, n);
        u.columns_mut(0, k).copy_from(&(&q1 * u1));
        u.columns_mut(k, n - k).copy_from(&(&q2 * u2));
        Ok(u)
    }
}

pub(crate) fn run_flag(
    family: &OperatorFamily,
    tol: &ToleranceContext,
    producer: &'static str,
    finder: &mut Finder<'_>,
) -> Result<TriangularizationCertificate> {
    let sf = SubFamily::from_family(family, tol);
    let mut b = FlagBuilder {
        tol,
        finder,
        stage: producer,
        steps: Vec::new(),
        warnings: Vec::new(),
    };
    let u = b.build(&sf, 0)?;
    let (steps, warnings) = (b.steps, b.warnings);
    Ok(certificate_from_unitary(family, u, producer, steps, warnings, tol))
}

/// Assembles a certificate from a unitary basis change.
pub(crate) fn certificate_from_unitary(
    family: &OperatorFamily,
    u: CMat,
    producer: &str,
    steps: Vec<RouteStep>,
    mut warnings: Vec<String>,
    tol: &ToleranceContext,
) -> TriangularizationCertificate {
    let n = family.dim();
    for (i, t) in family.members().iter().enumerate() {
        let r = scalar_residual(t);
        if r > 0.0 && r <= tol.zero_tol {
            warnings.push(format!(
                "member {i} is scalar only within tolerance (relative residual {r:.3e}) and was treated as scalar"
            ));
        }
    }
    let ua = u.adjoint();
    let forms: Vec<ComplexMatrix> = family
        .members()
        .iter()
        .map(|t| ComplexMatrix::wrap(&ua * t.matrix() * &u))
        .collect();
    let residual = forms
        .iter()
        .zip(family.members())
        .map(|(f, t)| crate::matcore::relative(f.below_diagonal_max(), t.norm()))
        .fold(0.0, f64::max);
    let sv = singular_values(&u);
    let condition_number = sv[0] / sv[n - 1];
    let dims: Vec<usize> = (1..n).collect();
    let chain = InvariantChain::from_columns(&u, &dims, tol);
    TriangularizationCertificate {
        producer: producer.to_string(),
        basis_change: ComplexMatrix::wrap(u),
        triangular_forms: forms,
        residual,
        condition_number,
        chain,
        steps,
        warnings,
    }
}
