use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::matrix::{columns_serde, CMat, ComplexMatrix};
use super::tolerance::ToleranceContext;
use crate::error::{Error, Result};

/// Subspace of `ℂⁿ` held as an orthonormal column basis, together with the
/// tolerances under which it was computed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    #[serde(with = "columns_serde")]
    basis: CMat,
    tol: ToleranceContext,
}

impl SubspaceBasis {
    /// Spans the given columns. Fails if they are numerically dependent at
    /// `tol.rank_tol`.
    pub fn new(columns: CMat, tol: ToleranceContext) -> Result<Self> {
        let n = columns.nrows();
        let k = columns.ncols();
        if k == 0 {
            return Ok(Self::empty(n, tol));
        }
        let q = range_abs(&columns, 0.0);
        let sv = singular_values(&columns);
        let smax = sv.first().copied().unwrap_or(0.0);
        let smin = sv.last().copied().unwrap_or(0.0);
        if sv.len() < k || smin <= tol.rank_tol * smax {
            return Err(Error::Precondition(format!(
                "basis vectors are linearly dependent (σ_min/σ_max = {:.3e})",
                if smax > 0.0 { smin / smax } else { 0.0 }
            )));
        }
        Ok(Self::from_orthonormal(q.columns(0, k).into_owned(), tol))
    }

    pub(crate) fn from_orthonormal(basis: CMat, tol: ToleranceContext) -> Self {
        Self {
            ambient_dim: basis.nrows(),
            basis,
            tol,
        }
    }

    pub fn empty(n: usize, tol: ToleranceContext) -> Self {
        Self::from_orthonormal(CMat::zeros(n, 0), tol)
    }

    pub fn full(n: usize, tol: ToleranceContext) -> Self {
        Self::from_orthonormal(CMat::identity(n, n), tol)
    }

    /// Span of the first `k` standard basis vectors.
    pub fn coordinate(n: usize, k: usize, tol: ToleranceContext) -> Self {
        Self::from_orthonormal(CMat::identity(n, n).columns(0, k).into_owned(), tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthonormal basis as the columns of an `n × dim` matrix.
    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<DVector<Complex64>> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    pub fn tol(&self) -> &ToleranceContext {
        &self.tol
    }

    pub fn is_nontrivial(&self) -> bool {
        self.dim() > 0 && self.dim() < self.ambient_dim
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> CMat {
        &self.basis * self.basis.adjoint()
    }

    pub fn orthogonal_complement(&self) -> Self {
        Self::from_orthonormal(orthonormal_complement(&self.basis), self.tol)
    }

    /// `‖(I − Π) Q_other‖₂`: zero iff `other ⊆ self`.
    pub fn containment_residual(&self, other: &SubspaceBasis) -> f64 {
        if other.dim() == 0 {
            return 0.0;
        }
        let r = &other.basis - &self.basis * (self.basis.adjoint() * &other.basis);
        spectral_norm(&r)
    }

    /// `‖(I − Π) T Π‖_F / ‖T‖_F`: zero iff the subspace is invariant under `T`.
    pub fn invariance_residual(&self, t: &ComplexMatrix) -> f64 {
        invariance_residual(&self.basis, t.matrix())
    }
}

pub(crate) fn invariance_residual(q: &CMat, t: &CMat) -> f64 {
    if q.ncols() == 0 {
        return 0.0;
    }
    let tq = t * q;
    let r = &tq - q * (q.adjoint() * &tq);
    super::tolerance::relative(r.norm(), t.norm())
}

pub(crate) fn to_faer(m: &CMat) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, Complex64>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Seeded unitary for re-running a factorization that did not converge.
/// faer's SVD can stall on exactly repeated singular values; the
/// decomposition of `M W` gives that of `M` back.
pub(crate) fn retry_unitary(n: usize, attempt: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(attempt);
    let g = CMat::from_fn(n, n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    g.qr().q()
}

pub(crate) const FACTORIZATION_RETRIES: u64 = 4;

/// Full SVD `(U, σ, V)` with `U`, `V` square, σ sorted descending.
pub(crate) fn svd_full(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let (r, c) = (m.nrows(), m.ncols());
    if r == 0 || c == 0 {
        return (CMat::identity(r, r), Vec::new(), CMat::identity(c, c));
    }
    for attempt in 0..=FACTORIZATION_RETRIES {
        let w = (attempt > 0).then(|| retry_unitary(c, attempt));
        let a = w.as_ref().map_or_else(|| to_faer(m), |w| to_faer(&(m * w)));
        if let Ok(svd) = a.svd() {
            let sigma = (0..r.min(c)).map(|i| svd.S()[i].re).collect();
            let v = from_faer(svd.V());
            return (from_faer(svd.U()), sigma, w.map_or(v.clone(), |w| w * v));
        }
    }
    panic!("SVD did not converge on a {r}x{c} matrix");
}

pub(crate) fn singular_values(m: &CMat) -> Vec<f64> {
    let (r, c) = (m.nrows(), m.ncols());
    if r == 0 || c == 0 {
        return Vec::new();
    }
    for attempt in 0..=FACTORIZATION_RETRIES {
        let a = if attempt == 0 { to_faer(m) } else { to_faer(&(m * retry_unitary(c, attempt))) };
        if let Ok(s) = a.singular_values() {
            return s;
        }
    }
    panic!("SVD did not converge on a {r}x{c} matrix");
}

/// Least-squares solution of `m x = rhs` through the SVD, for `m` of full
/// column rank.
pub(crate) fn least_squares(m: &CMat, rhs: &DVector<Complex64>) -> DVector<Complex64> {
    let (u, sigma, v) = svd_full(m);
    let c = m.ncols();
    let mut x = DVector::zeros(c);
    for (i, &s) in sigma.iter().enumerate() {
        if s > 0.0 {
            let coef = u.column(i).dotc(rhs) / s;
            x += v.column(i) * coef;
        }
    }
    x
}

pub(crate) fn spectral_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Orthonormal kernel basis: right singular vectors with `σ ≤ threshold`.
pub(crate) fn kernel_abs(m: &CMat, threshold: f64) -> CMat {
    let c = m.ncols();
    let (_, sigma, v) = svd_full(m);
    let rank = sigma.iter().filter(|&&s| s > threshold).count();
    v.columns(rank, c - rank).into_owned()
}

/// Orthonormal range basis: left singular vectors with `σ > threshold`.
pub(crate) fn range_abs(m: &CMat, threshold: f64) -> CMat {
    let (u, sigma, _) = svd_full(m);
    let rank = sigma.iter().filter(|&&s| s > threshold).count();
    u.columns(0, rank).into_owned()
}

/// Orthonormal basis of the orthogonal complement of span(q), q orthonormal.
pub(crate) fn orthonormal_complement(q: &CMat) -> CMat {
    let n = q.nrows();
    if q.ncols() == 0 {
        return CMat::identity(n, n);
    }
    kernel_abs(&q.adjoint(), 0.5)
}

fn rank_threshold(sigma_max: f64, tol: &ToleranceContext, scale: f64) -> f64 {
    (tol.rank_tol * sigma_max).max(tol.zero_tol * scale)
}

/// Numerical kernel `{x : ‖Mx‖ ≤ rank_tol · ‖M‖ · ‖x‖}`.
pub fn kernel(m: &ComplexMatrix, tol: &ToleranceContext) -> SubspaceBasis {
    let smax = spectral_norm(m.matrix());
    SubspaceBasis::from_orthonormal(kernel_abs(m.matrix(), tol.rank_tol * smax), *tol)
}

/// Numerical column space at the same rank decision as [`kernel`].
pub fn range(m: &ComplexMatrix, tol: &ToleranceContext) -> SubspaceBasis {
    let smax = spectral_norm(m.matrix());
    SubspaceBasis::from_orthonormal(range_abs(m.matrix(), tol.rank_tol * smax), *tol)
}

/// Kernel for structural decisions: singular values at or below
/// `max(rank_tol · σ_max, zero_tol · scale)` count as zero, where `scale` is
/// an a-priori bound on `‖M‖` (e.g. `‖A‖‖B‖` for a commutator).
pub fn kernel_with_scale(m: &CMat, tol: &ToleranceContext, scale: f64) -> SubspaceBasis {
    let smax = spectral_norm(m);
    SubspaceBasis::from_orthonormal(kernel_abs(m, rank_threshold(smax, tol, scale)), *tol)
}

/// Range counterpart of [`kernel_with_scale`].
pub fn range_with_scale(m: &CMat, tol: &ToleranceContext, scale: f64) -> SubspaceBasis {
    let smax = spectral_norm(m);
    SubspaceBasis::from_orthonormal(range_abs(m, rank_threshold(smax, tol, scale)), *tol)
}
