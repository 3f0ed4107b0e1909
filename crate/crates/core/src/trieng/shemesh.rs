use super::chain::{run_flag, Route, Split, SubFamily, TriangularizationCertificate};
use super::search::commuting_split;
use crate::commalg::{check_conditions, OperatorFamily};
use crate::error::{Error, Result};
use crate::matcore::{
    commutator, kernel_with_scale, range_with_scale, ComplexMatrix, SpectralAnalysis, ToleranceContext,
};

/// Hypothesis residuals of a compressed pair, scaled by the original norms.
fn recheck(
    sf: &SubFamily,
    tol: &ToleranceContext,
    stage: &str,
    depth: usize,
    second_is_left: bool,
) -> Result<ComplexMatrix> {
    let (a, b) = (&sf.members[0], &sf.members[1]);
    let (ra, rb) = (sf.refs[0], sf.refs[1]);
    let c = commutator(a, b)?;
    let r1 = (a * &c).norm() / (ra * ra * rb).max(f64::MIN_POSITIVE);
    let r2 = if second_is_left {
        (b * &c).norm()
    } else {
        (&c * b).norm()
    } / (ra * rb * rb).max(f64::MIN_POSITIVE);
    let worst = r1.max(r2);
    if worst > 10.0 * tol.zero_tol {
        return Err(Error::numerical(
            stage,
            format!("hypothesis lost after compression at depth {depth}"),
            worst,
        ));
    }
    Ok(c)
}

fn pair_family(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<OperatorFamily> {
    OperatorFamily::pair(a.clone(), b.clone())
}

fn shemesh_split(sf: &SubFamily, tol: &ToleranceContext, depth: usize) -> Result<Option<Split>> {
    let c = recheck(sf, tol, "triangularize_shemesh", depth, false)?;
    let (a, b) = (&sf.members[0], &sf.members[1]);
    let (ra, rb) = (sf.refs[0], sf.refs[1]);
    let scale = ra * rb;
    if c.norm() <= tol.zero_tol * scale {
        return Ok(commuting_split(sf, tol));
    }
    let ab = a * b;
    let mean = ab.trace() / ab.dim() as f64;
    let dev = ab.shift(-mean).norm();
    if dev > tol.zero_tol * scale {
        let warning = (dev <= 10.0 * tol.zero_tol * scale).then(|| {
            format!("AB is within 10x of the scalar threshold at depth {depth} (deviation {dev:.3e})")
        });
        let sa = SpectralAnalysis::new(ab.matrix(), tol);
        if sa.clusters().len() >= 2 {
            return Ok(Some(Split {
                basis: sa.spectral_subspace(0),
                route: Route::ProductEigenspace,
                detail: format!("generalized eigenspace of AB for {:.6}", sa.clusters()[0].value),
                warning,
            }));
        }
        let lambda = sa.clusters()[0].value;
        return Ok(Some(Split {
            basis: kernel_with_scale(ab.shift(-lambda).matrix(), tol, scale).basis().clone(),
            route: Route::ProductEigenspace,
            detail: format!("eigenspace of AB for its only eigenvalue {lambda:.6}"),
            warning,
        }));
    }
    if mean.norm() <= tol.zero_tol * scale {
        return Ok(Some(Split {
            basis: range_with_scale(b.matrix(), tol, rb).basis().clone(),
            route: Route::RangeOfB,
            detail: "AB = 0; range of B".into(),
            warning: None,
        }));
    }
    // AB = cI: with A' = A/c, A'B = I and ker(B − λ) is A'-invariant for λ ≠ 0.
    let sa = SpectralAnalysis::new(b.matrix(), tol);
    let lambda = sa
        .clusters()
        .iter()
        .map(|c| c.value)
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .expect("nonempty spectrum");
    Ok(Some(Split {
        basis: kernel_with_scale(b.shift(-lambda).matrix(), tol, rb).basis().clone(),
        route: Route::ScaledProduct,
        detail: format!("AB = {mean:.6} I; eigenspace of B for {lambda:.6}"),
        warning: None,
    }))
}

/// Triangularizes a pair with `A[A,B] = [A,B]B = 0`.
pub fn triangularize_shemesh(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: &ToleranceContext,
) -> Result<TriangularizationCertificate> {
    let report = check_conditions(a, b, tol)?;
    if !report.shemesh_left_right {
        let r = &report.residual_norms;
        return Err(Error::Precondition(format!(
            "A[A,B] = [A,B]B = 0 fails (residuals {:.3e}, {:.3e})",
            r.a_times_commutator, r.commutator_times_b
        )));
    }
    let family = pair_family(a, b)?;
    run_flag(&family, tol, "shemesh_left_right", &mut |sf: &SubFamily, depth| {
        shemesh_split(sf, tol, depth)
    })
}

/// Triangularizes a pair with `A[A,B] = B[A,B] = 0` starting from the range
/// of the commutator.
pub fn triangularize_left_annihilated(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: &ToleranceContext,
) -> Result<TriangularizationCertificate> {
    let report = check_conditions(a, b, tol)?;
    if !report.shemesh_left_left {
        let r = &report.residual_norms;
        return Err(Error::Precondition(format!(
            "A[A,B] = B[A,B] = 0 fails (residuals {:.3e}, {:.3e})",
            r.a_times_commutator, r.b_times_commutator
        )));
    }
    let family = pair_family(a, b)?;
    run_flag(&family, tol, "shemesh_left_left", &mut |sf: &SubFamily, depth| {
        let c = recheck(sf, tol, "triangularize_left_annihilated", depth, true)?;
        let scale = sf.refs[0] * sf.refs[1];
        if c.norm() <= tol.zero_tol * scale {
            return Ok(commuting_split(sf, tol));
        }
        Ok(Some(Split {
            basis: range_with_scale(c.matrix(), tol, scale).basis().clone(),
            route: Route::CommutatorRange,
            detail: "range of [A, B]".into(),
            warning: None,
        }))
    })
}
