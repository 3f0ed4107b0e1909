//! Schur forms, eigenvalue clustering and spectral subspaces.
//!
//! Eigenvalues of defective matrices are only computable to roughly
//! `δ^{1/m}` for an `m`-fold eigenvalue under a perturbation of size `δ`, so a
//! fixed clustering radius splits Jordan blocks into spurious clusters. A
//! partition is therefore accepted only when every cluster's spectral
//! projector is well conditioned; otherwise the radius grows by a decade.

use num_complex::Complex64;

use super::matrix::{CMat, ComplexMatrix, ZERO};
use super::subspace::{
    kernel_with_scale, orthonormal_complement, retry_unitary, svd_full, to_faer, SubspaceBasis, FACTORIZATION_RETRIES,
};
use super::tolerance::ToleranceContext;
use crate::error::{Error, Result};

/// Largest spectral-projector norm for which a cluster split is trusted.
pub const SPECTRAL_PROJECTOR_BOUND: f64 = 1e6;

/// Unitary Schur form `M = Q T Q*` with `T` upper triangular.
#[derive(Clone, Debug)]
pub struct SchurForm {
    pub q: CMat,
    pub t: CMat,
}

impl SchurForm {
    pub fn new(m: &CMat) -> Self {
        let n = m.nrows();
        if n <= 1 {
            return Self {
                q: CMat::identity(n, n),
                t: m.clone(),
            };
        }
        let q = deflation_basis(m);
        let mut t = q.adjoint() * m * &q;
        for j in 0..n {
            for i in (j + 1)..n {
                t[(i, j)] = ZERO;
            }
        }
        Self { q, t }
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Swaps diagonal entries `k` and `k + 1` with a Givens rotation.
    fn swap_adjacent(&mut self, k: usize) {
        let a = self.t[(k, k)];
        let b = self.t[(k + 1, k + 1)];
        let c = self.t[(k, k + 1)];
        let x0 = c;
        let x1 = b - a;
        let nx = (x0.norm_sqr() + x1.norm_sqr()).sqrt();
        if nx == 0.0 {
            return;
        }
        let g0 = x0 / nx;
        let g1 = x1 / nx;
        // G = [g, g⊥] with first column the eigenvector of the 2x2 block for b.
        let g = [[g0, -g1.conj()], [g1, g0.conj()]];
        let n = self.t.nrows();
        for j in 0..n {
            let r0 = self.t[(k, j)];
            let r1 = self.t[(k + 1, j)];
            self.t[(k, j)] = g[0][0].conj() * r0 + g[1][0].conj() * r1;
            self.t[(k + 1, j)] = g[0][1].conj() * r0 + g[1][1].conj() * r1;
        }
        for i in 0..n {
            let c0 = self.t[(i, k)];
            let c1 = self.t[(i, k + 1)];
            self.t[(i, k)] = c0 * g[0][0] + c1 * g[1][0];
            self.t[(i, k + 1)] = c0 * g[0][1] + c1 * g[1][1];
            let q0 = self.q[(i, k)];
            let q1 = self.q[(i, k + 1)];
            self.q[(i, k)] = q0 * g[0][0] + q1 * g[1][0];
            self.q[(i, k + 1)] = q0 * g[0][1] + q1 * g[1][1];
        }
        self.t[(k + 1, k)] = ZERO;
    }

    /// Reorders so that the diagonal positions flagged in `select` come
    /// first, preserving relative order. Returns the number selected.
    pub fn reorder(&mut self, select: &[bool]) -> usize {
        let mut flags = select.to_vec();
        let mut top = 0;
        for i in 0..flags.len() {
            if flags[i] {
                let mut pos = i;
                while pos > top {
                    self.swap_adjacent(pos - 1);
                    flags.swap(pos - 1, pos);
                    pos -= 1;
                }
                top += 1;
            }
        }
        top
    }
}

/// Eigenvalues of `m`, retried under a unitary similarity if faer's QR
/// iteration does not converge.
fn eigenvalues(m: &CMat) -> Vec<Complex64> {
    for attempt in 0..=FACTORIZATION_RETRIES {
        let a = if attempt == 0 {
            to_faer(m)
        } else {
            let w = retry_unitary(m.nrows(), attempt);
            to_faer(&(w.adjoint() * m * w))
        };
        if let Ok(e) = a.eigenvalues() {
            return e;
        }
    }
    panic!("eigenvalues did not converge on a {}x{} matrix", m.nrows(), m.ncols());
}

/// Unitary `Q` with `Q* M Q` upper triangular, one Schur vector per step:
/// the least right singular vector of `M_k − λ` for the eigenvalue `λ` of
/// the current restriction `M_k` that makes it smallest, followed by
/// restriction to its orthogonal complement.
fn deflation_basis(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut q = CMat::zeros(n, n);
    let mut rest = CMat::identity(n, n);
    for step in 0..n - 1 {
        let mk = rest.adjoint() * m * &rest;
        let k = mk.nrows();
        let eigs = eigenvalues(&mk);
        let mut best: Option<(f64, CMat)> = None;
        for lambda in eigs {
            let mut shifted = mk.clone();
            for i in 0..k {
                shifted[(i, i)] -= lambda;
            }
            let (_, sigma, v) = svd_full(&shifted);
            let smin = sigma[k - 1];
            if best.as_ref().is_none_or(|(s, _)| smin < *s) {
                best = Some((smin, v.columns(k - 1, 1).into_owned()));
            }
        }
        let v = best.expect("nonempty spectrum").1;
        q.set_column(step, &(&rest * &v).column(0));
        rest = &rest * orthonormal_complement(&v);
    }
    q.set_column(n - 1, &rest.column(0));
    q
}

/// One cluster of numerically coincident eigenvalues.
#[derive(Clone, Debug)]
pub struct EigenCluster {
    /// Mean of the clustered Schur eigenvalues.
    pub value: Complex64,
    pub multiplicity: usize,
    /// Norm of the spectral projector onto this cluster's generalized
    /// eigenspace (1 for normal matrices).
    pub projector_norm: f64,
    indices: Vec<usize>,
}

/// Schur form plus a validated eigenvalue partition.
#[derive(Clone, Debug)]
pub struct SpectralAnalysis {
    schur: SchurForm,
    clusters: Vec<EigenCluster>,
    radius: f64,
}

impl SpectralAnalysis {
    pub fn new(m: &CMat, tol: &ToleranceContext) -> Self {
        let schur = SchurForm::new(m);
        let eigs = schur.eigenvalues();
        let norm = m.norm();
        let n = eigs.len();
        let whole = || EigenCluster {
            value: if n > 0 { m.trace() / n as f64 } else { ZERO },
            multiplicity: n,
            projector_norm: 1.0,
            indices: (0..n).collect(),
        };
        let mut radius = tol.eig_cluster_tol * norm;
        if norm == 0.0 || n <= 1 {
            return Self {
                schur,
                clusters: vec![whole()],
                radius,
            };
        }
        loop {
            let groups = single_linkage(&eigs, radius);
            if groups.len() == 1 || radius > 2.0 * norm {
                return Self {
                    schur,
                    clusters: vec![whole()],
                    radius,
                };
            }
            let mut clusters = Vec::with_capacity(groups.len());
            let mut ok = true;
            for g in groups {
                let pnorm = projector_norm(&schur, &g);
                if !(pnorm <= SPECTRAL_PROJECTOR_BOUND) {
                    ok = false;
                    break;
                }
                let value = g.iter().map(|&i| eigs[i]).sum::<Complex64>() / g.len() as f64;
                clusters.push(EigenCluster {
                    value,
                    multiplicity: g.len(),
                    projector_norm: pnorm,
                    indices: g,
                });
            }
            if ok {
                return Self {
                    schur,
                    clusters,
                    radius,
                };
            }
            radius = if radius > 0.0 { radius * 10.0 } else { f64::EPSILON * norm };
        }
    }

    pub fn clusters(&self) -> &[EigenCluster] {
        &self.clusters
    }

    /// Absolute clustering radius that produced the accepted partition.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn schur(&self) -> &SchurForm {
        &self.schur
    }

    /// Orthonormal basis of the generalized eigenspace of cluster `c`.
    pub fn spectral_subspace(&self, c: usize) -> CMat {
        let n = self.schur.t.nrows();
        let cluster = &self.clusters[c];
        if cluster.multiplicity == n {
            return CMat::identity(n, n);
        }
        let mut s = self.schur.clone();
        let mut select = vec![false; n];
        for &i in &cluster.indices {
            select[i] = true;
        }
        let k = s.reorder(&select);
        s.q.columns(0, k).into_owned()
    }
}

/// Single-linkage groups at the given radius, ordered by first appearance.
fn single_linkage(eigs: &[Complex64], radius: f64) -> Vec<Vec<usize>> {
    let n = eigs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (eigs[i] - eigs[j]).norm() <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of_group: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_of_group.iter().position(|&x| x == r) {
            Some(g) => groups[g].push(i),
            None => {
                root_of_group.push(r);
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// `‖P‖₂ = sqrt(1 + ‖X‖²)` where `X` solves `T₁₁X − XT₂₂ = T₁₂` after
/// moving the group to the top of the Schur form.
fn projector_norm(schur: &SchurForm, group: &[usize]) -> f64 {
    let n = schur.t.nrows();
    let k = group.len();
    if k == n {
        return 1.0;
    }
    let mut s = schur.clone();
    let mut select = vec![false; n];
    for &i in group {
        select[i] = true;
    }
    s.reorder(&select);
    let t11 = s.t.view((0, 0), (k, k));
    let t22 = s.t.view((k, k), (n - k, n - k));
    let t12 = s.t.view((0, k), (k, n - k));
    let l = n - k;
    let mut x = CMat::zeros(k, l);
    for j in 0..l {
        // (T11 − t22[j,j]) x_j = t12_j + Σ_{i<j} x_i t22[i,j]
        let mut rhs: Vec<Complex64> = (0..k).map(|r| t12[(r, j)]).collect();
        for i in 0..j {
            let c = t22[(i, j)];
            for r in 0..k {
                rhs[r] += x[(r, i)] * c;
            }
        }
        let shift = t22[(j, j)];
        for r in (0..k).rev() {
            let mut acc = rhs[r];
            for c in (r + 1)..k {
                acc -= t11[(r, c)] * x[(c, j)];
            }
            let d = t11[(r, r)] - shift;
            if d == ZERO {
                return f64::INFINITY;
            }
            x[(r, j)] = acc / d;
        }
    }
    let xn = super::subspace::spectral_norm(&x);
    (1.0 + xn * xn).sqrt()
}

/// Eigenvalues with algebraic multiplicities, clustered at
/// `eig_cluster_tol · ‖M‖` (escalated when a split is ill conditioned).
pub fn eigen_decomposition(m: &ComplexMatrix, tol: &ToleranceContext) -> Vec<(Complex64, usize)> {
    SpectralAnalysis::new(m.matrix(), tol)
        .clusters()
        .iter()
        .map(|c| (c.value, c.multiplicity))
        .collect()
}

/// `ker (M − λI)^power`.
pub fn generalized_eigenspace(
    m: &ComplexMatrix,
    lambda: Complex64,
    power: usize,
    tol: &ToleranceContext,
) -> Result<SubspaceBasis> {
    if power == 0 {
        return Err(Error::Precondition("power must be at least 1".into()));
    }
    let shifted = m.shift(-lambda);
    let p = shifted.pow(power);
    let scale = shifted.norm().powi(power as i32);
    Ok(kernel_with_scale(p.matrix(), tol, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::matrix::ComplexMatrix;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sorted(mut v: Vec<(Complex64, usize)>) -> Vec<(f64, usize)> {
        v.sort_by(|a, b| a.0.re.partial_cmp(&b.0.re).unwrap());
        v.into_iter().map(|(z, m)| (z.re, m)).collect()
    }

    #[test]
    fn eigen_decomposition_examples() {
        let tol = ToleranceContext::for_dim(3);
        let d = ComplexMatrix::from_diagonal(&[c(1.0), c(1.0), c(2.0)]).unwrap();
        assert_eq!(sorted(eigen_decomposition(&d, &tol)), vec![(1.0, 2), (2.0, 1)]);
        let j = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert_eq!(sorted(eigen_decomposition(&j, &tol)), vec![(0.0, 2)]);
        // characteristic polynomial λ(λ − 1)
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        assert_eq!(sorted(eigen_decomposition(&a, &tol)), vec![(0.0, 1), (1.0, 1)]);
    }

    #[test]
    fn perturbed_jordan_block_is_one_cluster() {
        let n = 4;
        let mut m = CMat::zeros(n, n);
        for i in 0..n - 1 {
            m[(i, i + 1)] = c(1.0);
        }
        m[(n - 1, 0)] = c(1e-14);
        let m = ComplexMatrix::new(m).unwrap();
        let e = eigen_decomposition(&m, &ToleranceContext::for_dim(n));
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].1, 4);
        assert!(e[0].0.norm() < 1e-12);
    }

    #[test]
    fn reorder_moves_selected_eigenvalue_to_top() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0, 3.0], &[0.0, 4.0, 5.0], &[0.0, 0.0, 6.0]])
            .unwrap();
        let mut s = SchurForm::new(m.matrix());
        let idx = s.eigenvalues().iter().position(|z| (z - c(6.0)).norm() < 1e-12).unwrap();
        let mut sel = vec![false; 3];
        sel[idx] = true;
        assert_eq!(s.reorder(&sel), 1);
        assert!((s.t[(0, 0)] - c(6.0)).norm() < 1e-12);
        let recon = &s.q * &s.t * s.q.adjoint();
        assert!((recon - m.matrix()).norm() < 1e-12);
        let v = s.q.column(0).into_owned();
        assert!((m.matrix() * &v - &v * c(6.0)).norm() < 1e-12);
    }

    #[test]
    fn generalized_eigenspace_examples() {
        let tol = ToleranceContext::for_dim(2);
        let j = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let k1 = generalized_eigenspace(&j, ZERO, 1, &tol).unwrap();
        assert_eq!(k1.dim(), 1);
        assert!(k1.basis()[(1, 0)].norm() < 1e-15);
        assert_eq!(generalized_eigenspace(&j, ZERO, 2, &tol).unwrap().dim(), 2);
        let s = ComplexMatrix::identity(3).scale(c(2.5));
        assert_eq!(generalized_eigenspace(&s, c(2.5), 1, &tol).unwrap().dim(), 3);
        assert!(generalized_eigenspace(&s, c(2.5), 0, &tol).is_err());
    }

    #[test]
    fn spectral_subspace_of_block_triangular_matrix() {
        // eigenvalue 1 on span{e1, e2}, eigenvalue 3 on a complement
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 1.0, 2.0], &[0.0, 1.0, 1.0], &[0.0, 0.0, 3.0]])
            .unwrap();
        let sa = SpectralAnalysis::new(m.matrix(), &ToleranceContext::for_dim(3));
        assert_eq!(sa.clusters().len(), 2);
        let c1 = sa.clusters().iter().position(|cl| (cl.value - c(1.0)).norm() < 1e-8).unwrap();
        let w = sa.spectral_subspace(c1);
        assert_eq!(w.ncols(), 2);
        assert!(w[(2, 0)].norm() < 1e-12 && w[(2, 1)].norm() < 1e-12);
    }
}
