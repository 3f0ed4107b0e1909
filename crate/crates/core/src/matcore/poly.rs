use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{CMat, ComplexMatrix, ONE, ZERO};

/// Complex polynomial, coefficients lowest degree first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    /// Builds a polynomial and normalizes it to be monic. Trailing exact
    /// zeros are dropped; the zero polynomial is not representable.
    pub fn monic(mut coeffs: Vec<Complex64>) -> Option<Self> {
        while coeffs.last().is_some_and(|c| *c == ZERO) {
            coeffs.pop();
        }
        let lead = *coeffs.last()?;
        for c in coeffs.iter_mut() {
            *c /= lead;
        }
        *coeffs.last_mut().unwrap() = ONE;
        Some(Self { coeffs })
    }

    /// `Π (λ − r)` over the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut coeffs = vec![ONE];
        for &r in roots {
            let mut next = vec![ZERO; coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            coeffs = next;
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// `p(M)` by Horner's rule.
    pub fn eval_matrix(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let n = m.dim();
        let mut acc = CMat::zeros(n, n);
        for &c in self.coeffs.iter().rev() {
            acc = &acc * m.matrix();
            for i in 0..n {
                acc[(i, i)] += c;
            }
        }
        ComplexMatrix::wrap(acc)
    }

    /// `Σ |c_k| ‖M‖^k`, the natural bound on `‖p(M)‖`.
    pub fn eval_scale(&self, norm: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm() * norm.powi(k as i32))
            .sum()
    }
}
