use serde::{Deserialize, Serialize};

use super::chain::{certificate_from_unitary, run_flag, Route, Split, SubFamily, TriangularizationCertificate};
use super::search::commuting_split;
use crate::commalg::OperatorFamily;
use crate::error::{Error, Result};
use crate::matcore::{
    columns_serde, commutator, kernel_with_scale, normality_residual, orthonormal_complement, relative,
    CMat, ComplexMatrix, ComplexScalar, SchurForm, SpectralAnalysis, SubspaceBasis, ToleranceContext,
};

/// The four blocks of an operator with respect to `H = V₁ ⊕ V₂`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorBlocks {
    #[serde(with = "columns_serde")]
    pub b11: CMat,
    #[serde(with = "columns_serde")]
    pub b12: CMat,
    #[serde(with = "columns_serde")]
    pub b21: CMat,
    #[serde(with = "columns_serde")]
    pub b22: CMat,
}

impl OperatorBlocks {
    fn of(t: &CMat, q1: &CMat, q2: &CMat) -> Self {
        let (q1a, q2a) = (q1.adjoint(), q2.adjoint());
        Self {
            b11: &q1a * t * q1,
            b12: &q1a * t * q2,
            b21: &q2a * t * q1,
            b22: &q2a * t * q2,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimultaneousDiagonalization {
    pub unitary: ComplexMatrix,
    /// Diagonal of `U* A U` and of `U* B U`.
    pub eigenvalues: [Vec<ComplexScalar>; 2],
    /// Largest off-diagonal modulus of `U* A U`, `U* B U` relative to the
    /// operator norm.
    pub off_diagonal_residual: f64,
    /// `‖AB − BA‖ / ‖A‖‖B‖`.
    pub commutator_residual: f64,
    /// `‖B₁₂‖ / ‖B‖` in the kernel splitting.
    pub b12_residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormalPairAnalysis {
    /// `ker A` and its orthogonal complement, for the pair actually analysed
    /// (the adjoint pair `(B*, A*)` in the dual analysis).
    pub splitting: [SubspaceBasis; 2],
    pub blocks_a: OperatorBlocks,
    pub blocks_b: OperatorBlocks,
    /// `‖B₂₁‖ / ‖B‖`.
    pub b21_residual: f64,
    /// `‖A₂₂B₂₂ − B₂₂A₂₂‖ / ‖A‖‖B‖`.
    pub a22_b22_residual: f64,
    /// `‖[A,B]²‖ / (‖A‖‖B‖)²`.
    pub commutator_square_residual: f64,
    /// `‖[A,B]²‖` unscaled.
    pub commutator_square_norm: f64,
    /// True when the first operator is injective, in which case `[A,B] = 0`.
    pub injective: bool,
    pub dual: bool,
    pub certificate: TriangularizationCertificate,
    pub diagonalization: Option<SimultaneousDiagonalization>,
}

fn check(stage: &str, what: &str, residual: f64, tol: &ToleranceContext) -> Result<()> {
    if residual > tol.invariance_tol() {
        return Err(Error::Inconsistency(format!(
            "{stage}: {what} residual {residual:.3e} exceeds {:.1e}",
            tol.invariance_tol()
        )));
    }
    Ok(())
}

/// Analysis of a pair with `A` normal and `A[A,B] = 0`.
pub fn analyze_normal_pair(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: &ToleranceContext,
) -> Result<NormalPairAnalysis> {
    a.ensure_same_dim(b)?;
    let (na, nb) = (a.norm(), b.norm());
    let nres = normality_residual(a);
    if nres > tol.zero_tol {
        return Err(Error::Precondition(format!("A is not normal (residual {nres:.3e})")));
    }
    let c = commutator(a, b)?;
    let lres = relative((a * &c).norm(), na * na * nb);
    if lres > tol.zero_tol {
        return Err(Error::Precondition(format!("A[A,B] = 0 fails (residual {lres:.3e})")));
    }
    let n = a.dim();
    let q1 = kernel_with_scale(a.matrix(), tol, na).basis().clone();
    let q2 = orthonormal_complement(&q1);
    let r = q1.ncols();
    let blocks_a = OperatorBlocks::of(a.matrix(), &q1, &q2);
    let blocks_b = OperatorBlocks::of(b.matrix(), &q1, &q2);
    let b21_residual = relative(blocks_b.b21.norm(), nb);
    let a22_b22_residual = relative(
        (&blocks_a.b22 * &blocks_b.b22 - &blocks_b.b22 * &blocks_a.b22).norm(),
        na * nb,
    );
    let c2 = (&c * &c).norm();
    let commutator_square_residual = relative(c2, na * na * nb * nb);
    let stage = "analyze_normal_pair";
    check(stage, "B21", b21_residual, tol)?;
    check(stage, "[A22, B22]", a22_b22_residual, tol)?;
    check(stage, "[A,B]^2", commutator_square_residual, tol)?;
    let injective = r == 0;
    if injective {
        check(stage, "[A,B] for injective A", relative(c.norm(), na * nb), tol)?;
    }

    let family = OperatorFamily::pair(a.clone(), b.clone())?;
    let kernel_basis = q1.clone();
    let certificate = run_flag(&family, tol, "normal_left_annihilated", &mut |sf: &SubFamily, depth| {
        if depth == 0 && r > 0 && r < n {
            return Ok(Some(Split {
                basis: kernel_basis.clone(),
                route: Route::NormalKernel,
                detail: format!("ker A (dimension {r})"),
                warning: None,
            }));
        }
        if !sf.commutes(tol) {
            return Err(Error::numerical(
                stage,
                format!("block pair at depth {depth} does not commute"),
                f64::NAN,
            ));
        }
        Ok(commuting_split(sf, tol))
    })?;

    let diagonalization = if normality_residual(b) <= tol.zero_tol {
        let b12_residual = relative(blocks_b.b12.norm(), nb);
        check(stage, "B12 for normal B", b12_residual, tol)?;
        let commutator_residual = relative(c.norm(), na * nb);
        check(stage, "AB - BA for normal pair", commutator_residual, tol)?;
        Some(diagonalize_normal_pair(a, b, b12_residual, commutator_residual, tol))
    } else {
        None
    };

    Ok(NormalPairAnalysis {
        splitting: [
            SubspaceBasis::from_orthonormal(q1, *tol),
            SubspaceBasis::from_orthonormal(q2, *tol),
        ],
        blocks_a,
        blocks_b,
        b21_residual,
        a22_b22_residual,
        commutator_square_residual,
        commutator_square_norm: c2,
        injective,
        dual: false,
        certificate,
        diagonalization,
    })
}

/// Common unitary eigenbasis from the spectral projections of `A`, each
/// eigenspace diagonalized for `B`.
fn diagonalize_normal_pair(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    b12_residual: f64,
    commutator_residual: f64,
    tol: &ToleranceContext,
) -> SimultaneousDiagonalization {
    let n = a.dim();
    let sa = SpectralAnalysis::new(a.matrix(), tol);
    let mut u = CMat::zeros(n, n);
    let mut off = 0;
    for c in 0..sa.clusters().len() {
        let q = sa.spectral_subspace(c);
        let bk = q.adjoint() * b.matrix() * &q;
        let w = SchurForm::new(&bk).q;
        let cols = &q * w;
        let k = cols.ncols();
        u.columns_mut(off, k).copy_from(&cols);
        off += k;
    }
    let ua = u.adjoint();
    let da = &ua * a.matrix() * &u;
    let db = &ua * b.matrix() * &u;
    let off_diag = |m: &CMat, scale: f64| {
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max(m[(i, j)].norm());
                }
            }
        }
        relative(worst, scale)
    };
    let off_diagonal_residual = off_diag(&da, a.norm()).max(off_diag(&db, b.norm()));
    SimultaneousDiagonalization {
        eigenvalues: [
            (0..n).map(|i| da[(i, i)]).collect(),
            (0..n).map(|i| db[(i, i)]).collect(),
        ],
        unitary: ComplexMatrix::wrap(u),
        off_diagonal_residual,
        commutator_residual,
        b12_residual,
    }
}

/// Analysis of a pair with `B` normal and `[A,B]B = 0`, through the adjoint
/// pair `(B*, A*)`; the chain is transferred back by orthogonal complements
/// in reverse order.
pub fn analyze_normal_pair_dual(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: &ToleranceContext,
) -> Result<NormalPairAnalysis> {
    let mut inner = analyze_normal_pair(&b.adjoint(), &a.adjoint(), tol)
        .map_err(|e| match e {
            Error::Precondition(m) => Error::Precondition(format!("adjoint pair (B*, A*): {m}")),
            other => other,
        })?;
    let n = a.dim();
    // Reversing the columns of a unitary that triangularizes {B*, A*} upper
    // triangularizes {A, B}; its leading spans are the complements of the
    // trailing spans of the original.
    let p = inner.certificate.basis_change.matrix();
    let mut rev = CMat::zeros(n, n);
    for j in 0..n {
        rev.set_column(j, &p.column(n - 1 - j));
    }
    let family = OperatorFamily::pair(a.clone(), b.clone())?;
    let mut steps = inner.certificate.steps.clone();
    for s in &mut steps {
        s.detail = format!("adjoint pair: {}", s.detail);
    }
    inner.certificate = certificate_from_unitary(
        &family,
        rev,
        "normal_right_annihilated",
        steps,
        inner.certificate.warnings.clone(),
        tol,
    );
    if let Some(d) = inner.diagonalization.as_mut() {
        let [eb, ea] = std::mem::take(&mut d.eigenvalues);
        d.eigenvalues = [
            ea.into_iter().map(|z| z.conj()).collect(),
            eb.into_iter().map(|z| z.conj()).collect(),
        ];
    }
    inner.dual = true;
    Ok(inner)
}
