use nalgebra::DVector;
use num_complex::Complex64;

use super::matrix::CMat;

/// Orthonormal basis (Frobenius inner product) of a span of square matrices.
#[derive(Clone, Debug)]
pub(crate) struct MatrixSpan {
    n: usize,
    ortho: Vec<DVector<Complex64>>,
}

impl MatrixSpan {
    pub fn new(n: usize) -> Self {
        Self { n, ortho: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.ortho.len()
    }

    /// Distance of `m` from the span, and the residual vector.
    pub fn distance(&self, m: &CMat) -> (f64, DVector<Complex64>) {
        let mut r = DVector::from_column_slice(m.as_slice());
        for _ in 0..2 {
            for q in &self.ortho {
                let p = q.dotc(&r);
                r -= q * p;
            }
        }
        (r.norm(), r)
    }

    /// Adds the residual direction of `m` when it exceeds `threshold`.
    pub fn try_add(&mut self, m: &CMat, threshold: f64) -> bool {
        let (d, r) = self.distance(m);
        if d <= threshold || d == 0.0 {
            return false;
        }
        self.ortho.push(r / Complex64::new(d, 0.0));
        true
    }

    /// The orthonormal basis as matrices.
    pub fn matrices(&self) -> Vec<CMat> {
        self.ortho
            .iter()
            .map(|v| CMat::from_column_slice(self.n, self.n, v.as_slice()))
            .collect()
    }
}
