use serde::{Deserialize, Serialize};

use super::chain::{run_flag, Route, Split, SubFamily, TriangularizationCertificate};
use crate::commalg::{default_max_depth, layers_scaled, OperatorFamily};
use crate::error::{Error, Result};
use crate::matcore::{kernel_with_scale, nilpotency_index, CMat, SpectralAnalysis, SubspaceBasis, ToleranceContext};

/// Which strategy decided the outcome of a subspace search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    OneDimensional,
    AllScalar,
    CommutingEigenspace,
    CommutatorKernel,
    NotLNilpotent,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubspaceSearch {
    pub subspace: Option<SubspaceBasis>,
    pub strategy: Strategy,
    pub diagnostic: String,
}

/// Nontrivial subspace invariant under every member of a commuting family:
/// a generalized eigenspace of a nonscalar member when it has several
/// eigenvalues, its eigenspace otherwise.
///
/// A defective eigenvalue comes back from the Schur form as a spread of
/// values, so a member that is nilpotent about its mean eigenvalue is split
/// by the eigenspace for that mean first. Candidates from later members are
/// tried when a subspace is not invariant to tolerance.
pub(crate) fn commuting_split(sf: &SubFamily, tol: &ToleranceContext) -> Option<Split> {
    let candidates = sf.nonscalar().flat_map(|i| {
        let t = &sf.members[i];
        let sa = SpectralAnalysis::new(t.matrix(), tol);
        let several = sa.clusters().len() >= 2;
        let lambda = t.matrix().trace() / t.dim() as f64;
        let shifted = t.shift(-lambda);
        let mut out: Vec<(CMat, String)> = Vec::new();
        if !several || nilpotency_index(&shifted, tol).is_some() {
            let k = kernel_with_scale(shifted.matrix(), tol, sf.refs[i]);
            out.push((
                k.basis().clone(),
                format!("eigenspace of member {i} for its only eigenvalue {lambda:.6}"),
            ));
        }
        if several {
            for (c, cl) in sa.clusters().iter().enumerate() {
                out.push((
                    sa.spectral_subspace(c),
                    format!(
                        "generalized eigenspace of member {i} for eigenvalue {:.6} (multiplicity {})",
                        cl.value, cl.multiplicity
                    ),
                ));
            }
        }
        out
    });
    let (basis, detail) = sf.pick_invariant(tol, candidates)?;
    Some(Split {
        basis,
        route: Route::CommutingEigenspace,
        detail,
        warning: None,
    })
}

pub(crate) fn search_split(sf: &SubFamily, tol: &ToleranceContext) -> (Option<Split>, Strategy, String) {
    let n = sf.dim();
    if n == 1 {
        return (None, Strategy::OneDimensional, "dimension one has no nontrivial subspace".into());
    }
    if sf.all_scalar() {
        return (
            None,
            Strategy::AllScalar,
            "all members are scalar; every subspace is invariant and none is distinguished".into(),
        );
    }
    let layers = layers_scaled(&sf.members, &sf.refs, default_max_depth(n), tol);
    match layers.vanished_at {
        Some(1) => {
            let split = commuting_split(sf, tol);
            let d = split.as_ref().map(|s| s.detail.clone()).unwrap_or_default();
            (split, Strategy::CommutingEigenspace, format!("family commutes; {d}"))
        }
        Some(k) => {
            let e = &layers.layers[k - 1][0];
            let w = e.witness.expect("layer elements beyond zero carry witnesses");
            let ker = kernel_with_scale(e.matrix.matrix(), tol, e.scale);
            let detail = format!(
                "L-nilpotent of length {k}; kernel of [X, T{}] with X element {} of layer {}",
                w.right,
                w.left,
                k - 2
            );
            (
                Some(Split {
                    basis: ker.basis().clone(),
                    route: Route::CommutatorKernel,
                    detail: detail.clone(),
                    warning: None,
                }),
                Strategy::CommutatorKernel,
                detail,
            )
        }
        None => (
            None,
            Strategy::NotLNilpotent,
            format!(
                "iterated commutators did not vanish within depth {}{}",
                layers.depth(),
                if layers.stabilized { " (span stabilized)" } else { "" }
            ),
        ),
    }
}

/// One nontrivial common invariant subspace, found by the strategies that
/// always succeed on commuting and L-nilpotent families.
pub fn find_common_invariant_subspace(family: &OperatorFamily, tol: &ToleranceContext) -> SubspaceSearch {
    let sf = SubFamily::from_family(family, tol);
    let (split, strategy, diagnostic) = search_split(&sf, tol);
    let subspace = split
        .filter(|s| s.basis.ncols() > 0 && s.basis.ncols() < family.dim())
        .map(|s| SubspaceBasis::from_orthonormal(s.basis, *tol));
    SubspaceSearch {
        subspace,
        strategy,
        diagnostic,
    }
}

pub(crate) fn ensure_l_nilpotent(family: &OperatorFamily, tol: &ToleranceContext) -> Result<usize> {
    let norms: Vec<f64> = family.members().iter().map(|m| m.norm()).collect();
    let layers = layers_scaled(family.members(), &norms, default_max_depth(family.dim()), tol);
    layers.vanished_at.ok_or_else(|| {
        Error::Precondition(format!(
            "family is not L-nilpotent: commutator layers still nonzero at depth {}",
            layers.depth()
        ))
    })
}

/// Simultaneous triangularization of a commuting family.
pub fn triangularize_commuting(
    family: &OperatorFamily,
    tol: &ToleranceContext,
) -> Result<TriangularizationCertificate> {
    let sf = SubFamily::from_family(family, tol);
    if !sf.commutes(tol) {
        return Err(Error::Precondition("family does not commute".into()));
    }
    run_flag(family, tol, "commuting", &mut |sf: &SubFamily, _| {
        Ok(commuting_split(sf, tol))
    })
}

/// Simultaneous triangularization of an L-nilpotent family by repeated
/// common-invariant-subspace extraction.
pub fn triangularize_l_nilpotent(
    family: &OperatorFamily,
    tol: &ToleranceContext,
) -> Result<TriangularizationCertificate> {
    ensure_l_nilpotent(family, tol)?;
    run_flag(family, tol, "l_nilpotent", &mut |sf: &SubFamily, _| {
        Ok(search_split(sf, tol).0)
    })
}
