use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{CMat, ComplexMatrix, ONE};
use super::poly::Polynomial;
use super::tolerance::{relative, ToleranceContext};
use crate::error::Result;

/// `[S, T] = ST − TS`, with no tolerance applied.
pub fn commutator(s: &ComplexMatrix, t: &ComplexMatrix) -> Result<ComplexMatrix> {
    s.ensure_same_dim(t)?;
    Ok(ComplexMatrix::wrap(s.matrix() * t.matrix() - t.matrix() * s.matrix()))
}

/// Minimal polynomial together with the residuals behind the degree choice.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimalPolynomial {
    pub polynomial: Polynomial,
    /// Distance of `M̃^d` from `span{I, …, M̃^{d−1}}`, with `M̃ = M/‖M‖`.
    pub dependence_residual: f64,
    /// Same distance for `M̃^{d−1}`; exceeds the threshold (minimality).
    pub independence_residual: f64,
    /// Set when either residual lies within a factor 10 of the threshold.
    pub warning: Option<String>,
}

/// Minimal polynomial via the first numerically dependent power in the
/// Krylov sequence `vec(I), vec(M̃), vec(M̃²), …`.
///
/// A power counts as dependent when its least-squares residual against the
/// lower powers is at most `zero_tol` (the matrix is normalized first, so the
/// residual is already relative).
pub fn minimal_polynomial(m: &ComplexMatrix, tol: &ToleranceContext) -> MinimalPolynomial {
    let n = m.dim();
    let s = m.norm();
    if s == 0.0 {
        return MinimalPolynomial {
            polynomial: Polynomial::monic(vec![Complex64::new(0.0, 0.0), ONE]).unwrap(),
            dependence_residual: 0.0,
            independence_residual: 1.0,
            warning: None,
        };
    }
    let mt = m.matrix() / Complex64::new(s, 0.0);
    let threshold = tol.zero_tol;

    let mut krylov: Vec<DVector<Complex64>> = Vec::new();
    let mut ortho: Vec<DVector<Complex64>> = Vec::new();
    let mut power = CMat::identity(n, n);
    let mut last_independent = f64::INFINITY;
    let mut degree_residual = 0.0;
    let mut degree = n;
    for k in 0..=n {
        let v = DVector::from_column_slice(power.as_slice());
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &ortho {
                let proj = q.dotc(&r);
                r -= q * proj;
            }
        }
        let resid = r.norm();
        if k > 0 && resid <= threshold {
            degree = k;
            degree_residual = resid;
            krylov.push(v);
            break;
        }
        if k == n {
            // Cayley–Hamilton: the n-th power is always dependent in exact arithmetic.
            degree = n;
            degree_residual = resid;
            krylov.push(v);
            break;
        }
        last_independent = resid;
        ortho.push(r / Complex64::new(resid, 0.0));
        krylov.push(v);
        power = &power * &mt;
    }

    let rhs = krylov.pop().unwrap();
    let basis = CMat::from_columns(&krylov);
    let coeffs = super::subspace::least_squares(&basis, &rhs);
    // p̃(x) = x^d − Σ c_i x^i;  p(x) = s^d p̃(x/s)
    let mut poly = Vec::with_capacity(degree + 1);
    for (i, c) in coeffs.iter().enumerate() {
        poly.push(-*c * s.powi((degree - i) as i32));
    }
    poly.push(ONE);

    let near = |r: f64| r > threshold / 10.0 && r < threshold * 10.0;
    let warning = if near(degree_residual) || near(last_independent) {
        Some(format!(
            "degree decision is close to the threshold {threshold:.1e} \
             (dependent residual {degree_residual:.3e}, independent residual {last_independent:.3e})"
        ))
    } else if degree_residual > threshold {
        Some(format!(
            "no power up to the dimension was dependent within {threshold:.1e}; \
             used degree {degree} with residual {degree_residual:.3e}"
        ))
    } else {
        None
    };

    MinimalPolynomial {
        polynomial: Polynomial::monic(poly).expect("leading coefficient is one"),
        dependence_residual: degree_residual,
        independence_residual: last_independent,
        warning,
    }
}

/// Least `k` with `‖N^k‖ ≤ zero_tol · ‖N‖^k`, or `None` when no `k ≤ dim`
/// qualifies.
pub fn nilpotency_index(m: &ComplexMatrix, tol: &ToleranceContext) -> Option<usize> {
    let s = m.norm();
    if s == 0.0 {
        return Some(1);
    }
    let mt = m.matrix() / Complex64::new(s, 0.0);
    let mut p = mt.clone();
    for k in 1..=m.dim() {
        if p.norm() <= tol.zero_tol {
            return Some(k);
        }
        p = &p * &mt;
    }
    None
}

/// `‖MM* − M*M‖ / ‖M‖²`.
pub fn normality_residual(m: &ComplexMatrix) -> f64 {
    let a = m.matrix();
    let ad = a.adjoint();
    relative((a * &ad - &ad * a).norm(), a.norm_squared())
}

pub fn is_normal(m: &ComplexMatrix, tol: &ToleranceContext) -> bool {
    normality_residual(m) <= tol.zero_tol
}

/// `‖M − (tr M / n) I‖ / ‖M‖`; zero for scalar operators.
pub fn scalar_residual(m: &ComplexMatrix) -> f64 {
    let mean = m.trace() / m.dim() as f64;
    relative(m.shift(-mean).norm(), m.norm())
}

/// Scalar test `‖M − (tr M / n) I‖ ≤ zero_tol · ‖M‖`.
pub fn is_scalar(m: &ComplexMatrix, tol: &ToleranceContext) -> bool {
    scalar_residual(m) <= tol.zero_tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_a() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap()
    }

    fn golden_b() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]).unwrap()
    }

    fn real_coeffs(p: &Polynomial) -> Vec<f64> {
        p.coeffs().iter().map(|c| c.re).collect()
    }

    #[test]
    fn commutator_examples() {
        let c = commutator(&golden_a(), &golden_b()).unwrap();
        assert_eq!(c, ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[-1.0, 0.0]]).unwrap());
        let s = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap();
        let t = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        // hand multiplication: ST = [[0,1],[0,0]], TS = [[0,2],[0,0]]
        assert_eq!(
            commutator(&s, &t).unwrap(),
            ComplexMatrix::from_real_rows(&[&[0.0, -1.0], &[0.0, 0.0]]).unwrap()
        );
        assert_eq!(commutator(&s, &s).unwrap(), ComplexMatrix::zeros(2));
        assert!(commutator(&s, &ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn minimal_polynomial_examples() {
        let tol = ToleranceContext::for_dim(3);
        let id = minimal_polynomial(&ComplexMatrix::identity(3), &tol);
        assert_eq!(real_coeffs(&id.polynomial), vec![-1.0, 1.0]);

        let j = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let pj = minimal_polynomial(&j, &tol).polynomial;
        assert_eq!(pj.degree(), 2);
        assert!(pj.coeffs()[0].norm() < 1e-14 && pj.coeffs()[1].norm() < 1e-14);

        // A² = A, so λ² − λ; direct substitution as oracle
        let pa = minimal_polynomial(&golden_a(), &tol).polynomial;
        assert_eq!(pa.degree(), 2);
        let expected = [0.0, -1.0, 1.0];
        for (c, e) in pa.coeffs().iter().zip(expected) {
            assert!((c - Complex64::new(e, 0.0)).norm() < 1e-14);
        }
        assert!(pa.eval_matrix(&golden_a()).norm() < 1e-14);
    }

    #[test]
    fn minimal_polynomial_of_zero_matrix_is_lambda() {
        let p = minimal_polynomial(&ComplexMatrix::zeros(2), &ToleranceContext::for_dim(2));
        assert_eq!(p.polynomial.degree(), 1);
        assert_eq!(p.polynomial.coeffs()[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn nilpotency_index_examples() {
        let tol = ToleranceContext::for_dim(2);
        assert_eq!(nilpotency_index(&ComplexMatrix::zeros(2), &tol), Some(1));
        let c = commutator(&golden_a(), &golden_b()).unwrap();
        assert_eq!(nilpotency_index(&c, &tol), Some(2));
        assert_eq!(nilpotency_index(&ComplexMatrix::identity(2), &tol), None);
    }

    #[test]
    fn normality_examples() {
        let tol = ToleranceContext::for_dim(2);
        let d = ComplexMatrix::from_diagonal(&[Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.0)])
            .unwrap();
        assert!(is_normal(&d, &tol));
        let j = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(!is_normal(&j, &tol));
        let h = 1.0 / 2f64.sqrt();
        let f = ComplexMatrix::from_real_rows(&[&[h, h], &[h, -h]]).unwrap();
        assert!(is_normal(&f, &tol));
    }

    #[test]
    fn scalar_detection() {
        let tol = ToleranceContext::for_dim(2);
        assert!(is_scalar(&ComplexMatrix::identity(3).scale(Complex64::new(0.0, 2.0)), &tol));
        assert!(is_scalar(&ComplexMatrix::zeros(2), &tol));
        assert!(!is_scalar(&golden_a(), &tol));
    }
}
