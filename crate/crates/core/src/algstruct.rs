//! The associative algebra generated by a family: a word basis, the
//! Jacobson radical via the trace form, its nilpotency exponent and the
//! dimension of the semisimple quotient.

use serde::{Deserialize, Serialize};

use crate::commalg::OperatorFamily;
use crate::error::{Error, Result};
use crate::matcore::{
    kernel_abs, nilpotency_index, relative, singular_values, svd_full, CMat, ComplexMatrix, ComplexScalar, MatrixSpan,
    ToleranceContext,
};
use crate::trieng::ScalarDiagonalForm;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraStructure {
    pub ambient_dim: usize,
    /// Word products spanning the algebra, in length-lexicographic order.
    pub basis: Vec<ComplexMatrix>,
    /// Generator indices of each basis word.
    pub words: Vec<Vec<usize>>,
    pub dim_algebra: usize,
    /// Number of closure rounds until the span stabilized.
    pub closure_rounds: usize,
    /// Frobenius-orthonormal spanning set of `J(A)`; `None` until
    /// [`jacobson_radical`] has run.
    pub radical_basis: Option<Vec<ComplexMatrix>>,
    /// Least `m` with `J(A)^m = 0`.
    pub radical_exponent: Option<usize>,
    /// Largest norm of a product of `radical_exponent` unit-norm radical
    /// elements.
    pub radical_power_residual: Option<f64>,
    pub quotient_dim: Option<usize>,
    pub scalar_tuples: Option<Vec<Vec<ComplexScalar>>>,
}

impl AlgebraStructure {
    /// Frobenius-orthonormal basis of the algebra.
    pub fn orthonormal_basis(&self) -> Vec<ComplexMatrix> {
        let mut span = MatrixSpan::new(self.ambient_dim);
        for b in &self.basis {
            span.try_add(b.matrix(), 0.0);
        }
        span.matrices().into_iter().map(ComplexMatrix::wrap).collect()
    }

    fn span_of(&self, elems: &[ComplexMatrix]) -> MatrixSpan {
        let mut span = MatrixSpan::new(self.ambient_dim);
        for b in elems {
            span.try_add(b.matrix(), 0.0);
        }
        span
    }

    /// Worst `dist(xy, A) / ‖x‖‖y‖` over orthonormal basis pairs.
    pub fn closure_residual(&self) -> f64 {
        let q = self.orthonormal_basis();
        let span = self.span_of(&q);
        let mut worst = 0.0f64;
        for x in &q {
            for y in &q {
                worst = worst.max(span.distance((x * y).matrix()).0);
            }
        }
        worst
    }

    /// Worst distance of `xr` and `rx` from `span J(A)` for unit-norm `x` in
    /// the algebra and `r` in the radical. Zero when the radical is not
    /// computed or empty.
    pub fn radical_ideal_residual(&self) -> f64 {
        let Some(rad) = &self.radical_basis else {
            return 0.0;
        };
        let span = self.span_of(rad);
        let q = self.orthonormal_basis();
        let mut worst = 0.0f64;
        for x in &q {
            for r in rad {
                worst = worst.max(span.distance((x * r).matrix()).0);
                worst = worst.max(span.distance((r * x).matrix()).0);
            }
        }
        worst
    }

    /// Worst distance of `[x, y]` from `span J(A)` over unit-norm basis pairs.
    pub fn commutator_radical_residual(&self) -> f64 {
        let rad = self.radical_basis.clone().unwrap_or_default();
        let span = self.span_of(&rad);
        let q = self.orthonormal_basis();
        let mut worst = 0.0f64;
        for (i, x) in q.iter().enumerate() {
            for y in &q[i + 1..] {
                worst = worst.max(span.distance((x * y - y * x).matrix()).0);
            }
        }
        worst
    }
}

/// Closes `span F` under products. Words are enumerated in
/// length-lexicographic order and kept when numerically independent of the
/// words already kept.
pub fn generate_algebra(family: &OperatorFamily, tol: &ToleranceContext) -> AlgebraStructure {
    let n = family.dim();
    let gens = family.members();
    let norms: Vec<f64> = gens.iter().map(|g| g.norm()).collect();
    let mut span = MatrixSpan::new(n);
    let mut basis = Vec::new();
    let mut words = Vec::new();
    // (matrix, word, a-priori scale) kept in the latest round
    let mut frontier: Vec<(ComplexMatrix, Vec<usize>, f64)> = Vec::new();
    for (i, g) in gens.iter().enumerate() {
        if span.try_add(g.matrix(), tol.zero_tol * norms[i]) {
            basis.push(g.clone());
            words.push(vec![i]);
            frontier.push((g.clone(), vec![i], norms[i]));
        }
    }
    let mut rounds = 1;
    while !frontier.is_empty() && span.len() < n * n {
        let mut next = Vec::new();
        for (m, w, s) in &frontier {
            for (i, g) in gens.iter().enumerate() {
                let p = m * g;
                let scale = s * norms[i];
                if span.try_add(p.matrix(), tol.zero_tol * scale) {
                    let mut word = w.clone();
                    word.push(i);
                    basis.push(p.clone());
                    words.push(word.clone());
                    next.push((p, word, scale));
                }
            }
        }
        frontier = next;
        rounds += 1;
    }
    AlgebraStructure {
        ambient_dim: n,
        dim_algebra: basis.len(),
        basis,
        words,
        closure_rounds: rounds,
        radical_basis: None,
        radical_exponent: None,
        radical_power_residual: None,
        quotient_dim: None,
        scalar_tuples: None,
    }
}

/// Radical as the kernel of the trace form `(x, y) ↦ tr(xy)` on the
/// algebra, with a nilpotency check of every radical element and the
/// exponent found by powering the radical subspace.
pub fn jacobson_radical(alg: &AlgebraStructure, tol: &ToleranceContext) -> Result<AlgebraStructure> {
    let n = alg.ambient_dim;
    let q: Vec<CMat> = alg.orthonormal_basis().into_iter().map(|m| m.into_inner()).collect();
    let d = q.len();
    let mut out = alg.clone();
    let radical: Vec<ComplexMatrix> = if d == 0 {
        Vec::new()
    } else {
        let gram = CMat::from_fn(d, d, |i, j| (&q[i] * &q[j]).trace());
        let smax = singular_values(&gram).first().copied().unwrap_or(0.0);
        let coeffs = kernel_abs(&gram, tol.zero_tol * smax.max(1.0));
        coeffs
            .column_iter()
            .map(|c| {
                let mut m = CMat::zeros(n, n);
                for (i, qi) in q.iter().enumerate() {
                    m += qi * c[i];
                }
                ComplexMatrix::wrap(m)
            })
            .collect()
    };
    let check = ToleranceContext {
        zero_tol: tol.invariance_tol(),
        ..*tol
    };
    for (k, r) in radical.iter().enumerate() {
        if nilpotency_index(r, &check).is_none() {
            let rn = r.norm();
            let resid = relative(r.pow(n).norm(), rn.powi(n as i32));
            return Err(Error::Inconsistency(format!(
                "trace-form radical element {k} is not nilpotent (‖R^n‖/‖R‖^n = {resid:.3e})"
            )));
        }
    }

    // J^1 = span R; J^{m+1} = span{x r : x ∈ J^m, r ∈ R}. Each power is
    // carried as singular vectors scaled by their singular values, the way
    // words of the radical basis would be: normalizing a weak direction
    // would scale its rounding error up with it.
    let mut exponent = 1;
    let mut power_residual = 0.0f64;
    let mut current: Vec<CMat> = radical.iter().map(|r| r.matrix().clone()).collect();
    while !current.is_empty() {
        if exponent > n {
            return Err(Error::Inconsistency(format!(
                "radical powers do not vanish by exponent {n}"
            )));
        }
        let mut spanning = CMat::zeros(n * n, 0);
        let mut worst = 0.0f64;
        for x in &current {
            let products: Vec<CMat> = radical.iter().map(|r| x * r.matrix()).collect();
            worst = products.iter().map(|p| p.norm()).fold(worst, f64::max);
            let k = spanning.ncols();
            let mut stacked = spanning.resize_horizontally(k + products.len(), ComplexScalar::ZERO);
            for (j, p) in products.iter().enumerate() {
                stacked.column_mut(k + j).copy_from_slice(p.as_slice());
            }
            let (u, sigma, _) = svd_full(&stacked);
            let rank = sigma.iter().filter(|&&s| s > check.zero_tol).count();
            spanning = u.columns(0, rank).into_owned();
            for (j, &s) in sigma[..rank].iter().enumerate() {
                spanning.column_mut(j).scale_mut(s);
            }
        }
        exponent += 1;
        power_residual = worst;
        current = spanning
            .column_iter()
            .map(|c| CMat::from_column_slice(n, n, c.as_slice()))
            .collect();
    }

    out.quotient_dim = Some(alg.dim_algebra - radical.len());
    out.radical_basis = Some(radical);
    out.radical_exponent = Some(exponent);
    out.radical_power_residual = Some(power_residual);
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuotientCommutativity {
    pub commutative: bool,
    /// Worst distance of a basis commutator from the radical span.
    pub residual: f64,
    pub threshold: f64,
}

/// Whether every commutator of algebra elements lies in the radical span.
pub fn verify_quotient_commutative(
    alg: &AlgebraStructure,
    tol: &ToleranceContext,
) -> Result<QuotientCommutativity> {
    if alg.radical_basis.is_none() {
        return Err(Error::Precondition("radical has not been computed".into()));
    }
    let residual = alg.commutator_radical_residual();
    let threshold = tol.invariance_tol();
    Ok(QuotientCommutativity {
        commutative: residual <= threshold,
        residual,
        threshold,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalarMap {
    /// `(λ_{1,j}, …, λ_{m,j})` for each generator `j`.
    pub tuples: Vec<Vec<ComplexScalar>>,
    /// Number of distinct nonzero block columns `(λ_{i,1}, …, λ_{i,r})`,
    /// which is the dimension of the image of the algebra in `ℂ^m`.
    pub distinct_count: usize,
}

/// Scalar tuples of the generators and the dimension of their image
/// algebra.
///
/// The non-unital algebra generated by the tuples consists of the functions
/// on blocks that are constant on blocks with equal columns and vanish on
/// blocks whose column is zero.
pub fn quotient_scalar_map(sdf: &ScalarDiagonalForm, tol: &ToleranceContext) -> ScalarMap {
    let tuples = sdf.diagonal_scalars.clone();
    let blocks = sdf.block_count();
    let columns: Vec<Vec<ComplexScalar>> = (0..blocks)
        .map(|i| tuples.iter().map(|t| t[i]).collect())
        .collect();
    let scale = columns
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let eps = tol.eig_cluster_tol * scale;
    let dist = |a: &[ComplexScalar], b: &[ComplexScalar]| {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0f64, f64::max)
    };
    let mut reps: Vec<&Vec<ComplexScalar>> = Vec::new();
    for c in &columns {
        if c.iter().all(|z| z.norm() <= eps) {
            continue;
        }
        if !reps.iter().any(|r| dist(r, c) <= eps) {
            reps.push(c);
        }
    }
    ScalarMap {
        tuples,
        distinct_count: reps.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trieng::scalar_diagonal_decomposition;

    fn tol() -> ToleranceContext {
        ToleranceContext::for_dim(4)
    }

    fn real(rows: &[&[f64]]) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(rows).unwrap()
    }

    fn full(f: &OperatorFamily) -> AlgebraStructure {
        jacobson_radical(&generate_algebra(f, &tol()), &tol()).unwrap()
    }

    /// Dimension of the span of all words up to length `len`, by brute force.
    fn word_span_dim(gens: &[ComplexMatrix], len: usize) -> usize {
        let n = gens[0].dim();
        let mut span = MatrixSpan::new(n);
        let mut layer: Vec<ComplexMatrix> = gens.to_vec();
        for _ in 0..len {
            for w in &layer {
                span.try_add(w.matrix(), 1e-10 * w.norm().max(1.0));
            }
            layer = layer.iter().flat_map(|w| gens.iter().map(move |g| w * g)).collect();
        }
        span.len()
    }

    #[test]
    fn identity_generates_one_dimension() {
        let a = full(&OperatorFamily::new(vec![ComplexMatrix::identity(3)]).unwrap());
        assert_eq!(a.dim_algebra, 1);
        assert_eq!(a.radical_basis.as_ref().unwrap().len(), 0);
        assert_eq!(a.quotient_dim, Some(1));
    }

    #[test]
    fn e12_e21_generate_full_algebra() {
        let f = OperatorFamily::new(vec![ComplexMatrix::unit(2, 0, 1), ComplexMatrix::unit(2, 1, 0)]).unwrap();
        let a = full(&f);
        assert_eq!(a.dim_algebra, 4);
        assert_eq!(a.radical_basis.as_ref().unwrap().len(), 0);
        assert_eq!(a.radical_exponent, Some(1));
        let q = verify_quotient_commutative(&a, &tol()).unwrap();
        assert!(!q.commutative);
    }

    #[test]
    fn golden_pair_algebra_matches_word_span() {
        let a = real(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let b = real(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let alg = generate_algebra(&OperatorFamily::pair(a.clone(), b.clone()).unwrap(), &tol());
        assert_eq!(alg.dim_algebra, word_span_dim(&[a, b], 4));
        // span{E11, E21}: AB = 0, BA = E21
        assert_eq!(alg.dim_algebra, 2);
    }

    #[test]
    fn jordan_block_algebra_is_its_own_radical() {
        let j = ComplexMatrix::unit(3, 0, 1) + ComplexMatrix::unit(3, 1, 2);
        let a = full(&OperatorFamily::new(vec![j]).unwrap());
        assert_eq!(a.dim_algebra, 2);
        assert_eq!(a.radical_basis.as_ref().unwrap().len(), 2);
        assert_eq!(a.quotient_dim, Some(0));
        assert_eq!(a.radical_exponent, Some(3));
    }

    #[test]
    fn upper_triangular_algebra_radical() {
        let f = OperatorFamily::new(vec![
            ComplexMatrix::unit(2, 0, 0),
            ComplexMatrix::unit(2, 0, 1),
            ComplexMatrix::unit(2, 1, 1),
        ])
        .unwrap();
        let a = full(&f);
        assert_eq!(a.dim_algebra, 3);
        let rad = a.radical_basis.as_ref().unwrap();
        assert_eq!(rad.len(), 1);
        // span{E12}
        assert!((rad[0][(0, 1)].norm() - 1.0).abs() < 1e-12);
        assert_eq!(a.quotient_dim, Some(2));
        assert_eq!(a.radical_exponent, Some(2));
        assert!(a.radical_ideal_residual() < 1e-12);
        assert!(verify_quotient_commutative(&a, &tol()).unwrap().commutative);
    }

    #[test]
    fn commuting_family_quotient_is_commutative() {
        let f = OperatorFamily::new(vec![
            ComplexMatrix::from_diagonal(&[ComplexScalar::new(1.0, 0.0), ComplexScalar::new(2.0, 0.0)]).unwrap(),
        ])
        .unwrap();
        let q = verify_quotient_commutative(&full(&f), &tol()).unwrap();
        assert!(q.commutative);
        assert_eq!(q.residual, 0.0);
    }

    #[test]
    fn scalar_map_examples() {
        let two = ComplexScalar::new(2.0, 0.0);
        let three = ComplexScalar::new(3.0, 0.0);
        let f = OperatorFamily::new(vec![ComplexMatrix::identity(2).scale(two), ComplexMatrix::identity(2).scale(three)])
            .unwrap();
        let sdf = scalar_diagonal_decomposition(&f, &tol()).unwrap();
        let m = quotient_scalar_map(&sdf, &tol());
        assert_eq!(m.tuples, vec![vec![two], vec![three]]);
        assert_eq!(m.distinct_count, 1);
        assert_eq!(full(&f).quotient_dim, Some(1));

        let d = ComplexMatrix::from_diagonal(&[
            ComplexScalar::new(1.0, 0.0),
            ComplexScalar::new(1.0, 0.0),
            ComplexScalar::new(2.0, 0.0),
        ])
        .unwrap();
        let f = OperatorFamily::new(vec![d]).unwrap();
        let m = quotient_scalar_map(&scalar_diagonal_decomposition(&f, &tol()).unwrap(), &tol());
        assert_eq!(m.distinct_count, 2);
        assert_eq!(full(&f).quotient_dim, Some(2));

        let f = OperatorFamily::new(vec![ComplexMatrix::unit(3, 0, 2), ComplexMatrix::unit(3, 0, 1)]).unwrap();
        let m = quotient_scalar_map(&scalar_diagonal_decomposition(&f, &tol()).unwrap(), &tol());
        assert!(m.tuples.iter().flatten().all(|z| z.norm() < 1e-14));
        assert_eq!(m.distinct_count, 0);
        assert_eq!(full(&f).quotient_dim, Some(0));
    }

    #[test]
    fn ill_conditioned_closure_still_yields_radical_powers() {
        // scalar part −I dominates the words, so the algebra basis carries
        // cancellation error well above the absolute zero threshold
        use crate::certify::{generate_instance, InstanceKind, InstanceRecipe};
        let g = generate_instance(&InstanceRecipe::new(InstanceKind::LNilpotent, 6, 6023)).unwrap();
        let t = ToleranceContext::for_dim(6);
        let alg = jacobson_radical(&generate_algebra(&g.family, &t), &t).unwrap();
        assert_eq!(alg.quotient_dim, Some(1));
        assert!(alg.radical_exponent.unwrap() <= 4);
    }
}
