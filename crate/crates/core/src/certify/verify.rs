use serde::{Deserialize, Serialize};

use crate::algstruct::AlgebraStructure;
use crate::commalg::OperatorFamily;
use crate::matcore::{
    commutator, kernel_abs, normality_residual, orthonormal_complement, relative, singular_values, CMat,
    ComplexMatrix, ComplexScalar, MatrixSpan, ToleranceContext,
};
use crate::trieng::{NormalPairAnalysis, ScalarDiagonalForm, TriangularizationCertificate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub residual: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub overall: bool,
    pub context: String,
}

impl VerificationReport {
    fn new(context: impl Into<String>) -> Self {
        Self {
            checks: Vec::new(),
            overall: true,
            context: context.into(),
        }
    }

    fn push(&mut self, name: impl Into<String>, residual: f64, threshold: f64) {
        // NaN never passes
        let pass = residual <= threshold;
        self.overall &= pass;
        self.checks.push(Check {
            name: name.into(),
            pass,
            residual,
            threshold,
        });
    }

    fn flag(&mut self, name: impl Into<String>, ok: bool) {
        self.push(name, if ok { 0.0 } else { 1.0 }, 0.0);
    }

    fn absorb(&mut self, prefix: &str, other: VerificationReport) {
        for c in other.checks {
            self.push(format!("{prefix}{}", c.name), c.residual, c.threshold);
        }
    }

    /// A report of pass/fail flags, for comparisons that have no residual.
    pub fn from_flags(context: impl Into<String>, flags: &[(&str, bool)]) -> Self {
        let mut r = Self::new(context);
        for (name, ok) in flags {
            r.flag(*name, *ok);
        }
        r
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// Any object a producer can certify.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertifiedObject {
    Triangularization(TriangularizationCertificate),
    ScalarDiagonal(ScalarDiagonalForm),
    NormalPair(NormalPairAnalysis),
}

/// Recomputes every invariant of `obj` against `family` from scratch.
pub fn verify_certificate(
    obj: &CertifiedObject,
    family: &OperatorFamily,
    tol: &ToleranceContext,
) -> VerificationReport {
    match obj {
        CertifiedObject::Triangularization(c) => verify_triangularization(c, family, tol),
        CertifiedObject::ScalarDiagonal(d) => verify_scalar_diagonal(d, family, tol),
        CertifiedObject::NormalPair(a) => verify_normal_pair(a, family, tol),
    }
}

fn square_of(m: &ComplexMatrix, n: usize) -> bool {
    m.dim() == n
}

/// Inverse and condition number, or `None` when numerically singular.
fn invert(p: &CMat) -> Option<(CMat, f64)> {
    let sv = singular_values(p);
    let (smax, smin) = (sv[0], sv[sv.len() - 1]);
    if !(smin > 0.0) || smax / smin > 1e12 {
        return None;
    }
    p.clone().try_inverse().map(|inv| (inv, smax / smin))
}

/// Orthonormal basis of the column span, rank decided at `1e-8`.
fn orthonormal(cols: &CMat) -> CMat {
    let sv = singular_values(cols);
    let smax = sv.first().copied().unwrap_or(0.0);
    let n = cols.nrows();
    // complement of the complement is the span
    let perp = kernel_abs(&cols.adjoint(), 1e-8 * smax);
    orthonormal_complement_of(&perp, n)
}

fn orthonormal_complement_of(q: &CMat, n: usize) -> CMat {
    if q.ncols() == 0 {
        return CMat::identity(n, n);
    }
    orthonormal_complement(q)
}

fn invariance(q: &CMat, t: &CMat) -> f64 {
    if q.ncols() == 0 {
        return 0.0;
    }
    let tq = t * q;
    relative((&tq - q * (q.adjoint() * &tq)).norm(), t.norm())
}

/// `max_k |tr(T^k) − Σ dᵢ^k| / (n ‖T‖^k)` for `k = 1..n`: the diagonal of a
/// triangular form carries the eigenvalues with multiplicity iff all power
/// sums agree.
fn power_sum_mismatch(t: &CMat, diag: &[ComplexScalar]) -> f64 {
    let n = t.nrows();
    let s = t.norm();
    if s == 0.0 {
        return diag.iter().map(|d| d.norm()).fold(0.0, f64::max);
    }
    let tn = t / ComplexScalar::new(s, 0.0);
    let dn: Vec<ComplexScalar> = diag.iter().map(|d| d / s).collect();
    let mut pow = tn.clone();
    let mut dp = dn.clone();
    let mut worst = 0.0f64;
    for k in 1..=n {
        if k > 1 {
            pow = &pow * &tn;
            for (x, d) in dp.iter_mut().zip(&dn) {
                *x *= d;
            }
        }
        let lhs = pow.trace();
        let rhs: ComplexScalar = dp.iter().sum();
        worst = worst.max((lhs - rhs).norm() / n as f64);
    }
    worst
}

fn below_diagonal(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}

pub fn verify_triangularization(
    cert: &TriangularizationCertificate,
    family: &OperatorFamily,
    tol: &ToleranceContext,
) -> VerificationReport {
    let mut r = VerificationReport::new(format!("triangularization ({})", cert.producer));
    let n = family.dim();
    let shapes_ok = square_of(&cert.basis_change, n)
        && cert.triangular_forms.len() == family.len()
        && cert.triangular_forms.iter().all(|f| square_of(f, n))
        && cert.chain.ambient_dim == n
        && cert.chain.subspaces.iter().all(|s| s.ambient_dim() == n);
    r.flag("shapes", shapes_ok);
    if !shapes_ok {
        return r;
    }
    let p = cert.basis_change.matrix();
    let Some((p_inv, kappa)) = invert(p) else {
        r.flag("basis_change_invertible", false);
        return r;
    };
    r.push("basis_change_condition", kappa, 1e8);
    let thr = tol.invariance_tol();

    let mut form_mismatch = 0.0f64;
    let mut triangular = 0.0f64;
    let mut spectrum = 0.0f64;
    for (t, stored) in family.members().iter().zip(&cert.triangular_forms) {
        let form = &p_inv * t.matrix() * p;
        form_mismatch = form_mismatch.max(relative((&form - stored.matrix()).norm(), t.norm()));
        triangular = triangular.max(relative(below_diagonal(&form), t.norm()));
        let diag: Vec<ComplexScalar> = (0..n).map(|i| form[(i, i)]).collect();
        spectrum = spectrum.max(power_sum_mismatch(t.matrix(), &diag));
    }
    r.push("forms_match_recomputed", form_mismatch, thr * kappa);
    r.push("triangularity", triangular, thr);
    r.push("spectrum_preservation", spectrum, tol.eig_cluster_tol);

    let mut comm_diag = 0.0f64;
    let members = family.members();
    for i in 0..members.len() {
        for j in (i + 1)..members.len() {
            let c = commutator(&members[i], &members[j]).expect("same dimension");
            let apriori = members[i].norm() * members[j].norm();
            // relative to ‖[A,B]‖ unless the commutator itself is numerically zero
            let scale = if c.norm() > tol.zero_tol * apriori { c.norm() } else { apriori };
            let form = &p_inv * c.matrix() * p;
            let d = (0..n).map(|k| form[(k, k)].norm()).fold(0.0, f64::max);
            comm_diag = comm_diag.max(relative(d, scale));
        }
    }
    r.push("commutator_diagonal", comm_diag, thr * kappa);

    let dims: Vec<usize> = cert.chain.subspaces.iter().map(|s| s.dim()).collect();
    let maximal = dims.len() + 1 == n && dims.iter().enumerate().all(|(i, &d)| d == i + 1);
    r.flag("chain_maximal", maximal);
    let mut inv = 0.0f64;
    let mut nested = 0.0f64;
    let mut matches = 0.0f64;
    let mut prev: Option<CMat> = None;
    for (k, s) in cert.chain.subspaces.iter().enumerate() {
        let q = orthonormal(s.basis());
        if q.ncols() != dims[k] {
            r.flag(format!("chain_subspace_{k}_rank"), false);
        }
        for t in members {
            inv = inv.max(invariance(&q, t.matrix()));
        }
        if let Some(pq) = &prev {
            nested = nested.max((pq - &q * (q.adjoint() * pq)).norm());
        }
        let lead = orthonormal(&p.columns(0, dims[k].min(n)).into_owned());
        let both = (&lead - &q * (q.adjoint() * &lead)).norm() + (&q - &lead * (lead.adjoint() * &q)).norm();
        matches = matches.max(both);
        prev = Some(q);
    }
    r.push("chain_invariance", inv, thr);
    r.push("chain_nested", nested, thr);
    r.push("chain_matches_basis_change", matches, 1e-8);
    r
}

pub fn verify_scalar_diagonal(
    sdf: &ScalarDiagonalForm,
    family: &OperatorFamily,
    tol: &ToleranceContext,
) -> VerificationReport {
    let mut r = VerificationReport::new("scalar-diagonal block form");
    let n = family.dim();
    let m = sdf.block_dims.len();
    let shapes_ok = square_of(&sdf.basis_change, n)
        && m > 0
        && sdf.block_dims.iter().all(|&d| d > 0)
        && sdf.block_dims.iter().sum::<usize>() == n
        && sdf.diagonal_scalars.len() == family.len()
        && sdf.diagonal_scalars.iter().all(|l| l.len() == m)
        && sdf.nilpotent_parts.len() == family.len()
        && sdf.nilpotent_parts.iter().all(|x| square_of(x, n))
        && sdf.projectors.len() == m
        && sdf.projectors.iter().all(|x| square_of(x, n));
    r.flag("shapes", shapes_ok);
    if !shapes_ok {
        return r;
    }
    let p = sdf.basis_change.matrix();
    let Some((p_inv, kappa)) = invert(p) else {
        r.flag("basis_change_invertible", false);
        return r;
    };
    r.push("basis_change_condition", kappa, 1e8);
    let thr = tol.invariance_tol();

    let mut offsets = Vec::with_capacity(m);
    let mut o = 0;
    for &d in &sdf.block_dims {
        offsets.push(o);
        o += d;
    }
    let block_of = |i: usize| offsets.iter().rposition(|&o| o <= i).expect("offset 0 exists");

    let mut proj_err = 0.0f64;
    for (b, proj) in sdf.projectors.iter().enumerate() {
        let mut want = CMat::zeros(n, n);
        for i in offsets[b]..offsets[b] + sdf.block_dims[b] {
            want[(i, i)] = ComplexScalar::new(1.0, 0.0);
        }
        proj_err = proj_err.max((proj.matrix() - want).norm());
    }
    r.push("projectors_are_coordinate", proj_err, 1e-12);

    let (mut lower, mut scalar, mut nil_match, mut nil_pow) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (j, t) in family.members().iter().enumerate() {
        let tn = t.norm();
        let form = &p_inv * t.matrix() * p;
        let mut expect_nil = form.clone();
        for c in 0..n {
            for row in 0..n {
                let (bi, bj) = (block_of(row), block_of(c));
                let z = form[(row, c)];
                if bi > bj {
                    lower = lower.max(relative(z.norm(), tn));
                } else if bi == bj {
                    let lambda = sdf.diagonal_scalars[j][bi];
                    let want = if row == c { lambda } else { ComplexScalar::new(0.0, 0.0) };
                    scalar = scalar.max(relative((z - want).norm(), tn));
                    if row == c {
                        expect_nil[(row, c)] -= lambda;
                    }
                }
            }
        }
        let stored = sdf.nilpotent_parts[j].matrix();
        nil_match = nil_match.max(relative((stored - &expect_nil).norm(), tn));
        let mut pw = CMat::identity(n, n);
        for _ in 0..m {
            pw = &pw * &expect_nil;
        }
        nil_pow = nil_pow.max(relative(pw.norm(), tn.powi(m as i32)));
    }
    r.push("block_upper_triangular", lower, thr);
    r.push("scalar_diagonal_blocks", scalar, thr);
    r.push("nilpotent_parts_match", nil_match, thr * kappa);
    r.push("nilpotent_power_vanishes", nil_pow, thr);
    r
}

pub fn verify_normal_pair(
    a: &NormalPairAnalysis,
    family: &OperatorFamily,
    tol: &ToleranceContext,
) -> VerificationReport {
    let mut r = VerificationReport::new(if a.dual {
        "normal pair, right-annihilated (adjoint analysis)"
    } else {
        "normal pair, left-annihilated"
    });
    let n = family.dim();
    if family.len() != 2 {
        r.flag("pair", false);
        return r;
    }
    let thr = tol.invariance_tol();
    let (fa, fb) = (&family.members()[0], &family.members()[1]);
    let (na, nb) = (fa.norm(), fb.norm());
    // the pair the splitting refers to
    let (x, y) = if a.dual {
        (fb.adjoint(), fa.adjoint())
    } else {
        (fa.clone(), fb.clone())
    };
    let c = commutator(&x, &y).expect("same dimension");
    r.push("normality", normality_residual(&x), tol.zero_tol);
    r.push("annihilation", relative((&x * &c).norm(), na * na * nb), tol.zero_tol);

    let shapes_ok = a.splitting.iter().all(|s| s.ambient_dim() == n)
        && a.splitting[0].dim() + a.splitting[1].dim() == n;
    r.flag("splitting_shapes", shapes_ok);
    if !shapes_ok {
        return r;
    }
    let k = if a.splitting[0].dim() == 0 {
        CMat::zeros(n, 0)
    } else {
        orthonormal(a.splitting[0].basis())
    };
    let q2 = orthonormal_complement_of(&k, n);
    let cross = if a.splitting[1].dim() == 0 {
        0.0
    } else {
        (k.adjoint() * a.splitting[1].basis()).norm()
    };
    r.push("splitting_orthogonal", cross, 1e-8);
    r.push("kernel_of_first", relative((x.matrix() * &k).norm(), na), thr);
    let y21 = q2.adjoint() * y.matrix() * &k;
    r.push("b21_block", relative(y21.norm(), nb), thr);
    let x22 = q2.adjoint() * x.matrix() * &q2;
    let y22 = q2.adjoint() * y.matrix() * &q2;
    r.push("a22_b22_commute", relative((&x22 * &y22 - &y22 * &x22).norm(), na * nb), thr);
    let c_orig = commutator(fa, fb).expect("same dimension");
    r.push(
        "commutator_square",
        relative((&c_orig * &c_orig).norm(), na * na * nb * nb),
        thr,
    );

    r.absorb("chain.", verify_triangularization(&a.certificate, family, tol));

    if let Some(d) = &a.diagonalization {
        let u = d.unitary.matrix();
        if u.nrows() != n {
            r.flag("diagonalization_shape", false);
            return r;
        }
        r.push("diagonalization_unitary", (u.adjoint() * u - CMat::identity(n, n)).norm(), 1e-10);
        let mut off = 0.0f64;
        let mut eig = 0.0f64;
        for (idx, (t, s)) in [(fa, na), (fb, nb)].into_iter().enumerate() {
            let dm = u.adjoint() * t.matrix() * u;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        off = off.max(relative(dm[(i, j)].norm(), s));
                    }
                }
                if let Some(l) = d.eigenvalues[idx].get(i) {
                    eig = eig.max(relative((dm[(i, i)] - l).norm(), s));
                } else {
                    eig = f64::INFINITY;
                }
            }
        }
        r.push("diagonalization_off_diagonal", off, thr);
        r.push("diagonalization_eigenvalues", eig, thr);
        r.push("pair_commutes", relative(c_orig.norm(), na * nb), thr);
    }
    r
}

fn span_of(n: usize, elems: &[&CMat]) -> MatrixSpan {
    let mut span = MatrixSpan::new(n);
    for m in elems {
        span.try_add(m, 1e-12 * m.norm());
    }
    span
}

/// Checks a generated algebra and its radical against the generating family:
/// every basis word is the product it names, the span contains the
/// generators and is closed under products, and the radical is a nilpotent
/// ideal orthogonal to the algebra under the trace form.
pub fn verify_algebra(alg: &AlgebraStructure, family: &OperatorFamily, tol: &ToleranceContext) -> VerificationReport {
    let mut r = VerificationReport::new("generated algebra");
    let n = family.dim();
    let gens = family.members();
    let shapes_ok = alg.ambient_dim == n
        && alg.basis.len() == alg.dim_algebra
        && alg.words.len() == alg.basis.len()
        && alg.basis.iter().all(|b| square_of(b, n))
        && alg.words.iter().flatten().all(|&g| g < gens.len());
    r.flag("shapes", shapes_ok);
    if !shapes_ok {
        return r;
    }
    let thr = tol.invariance_tol();

    let mut word_mismatch = 0.0f64;
    for (b, w) in alg.basis.iter().zip(&alg.words) {
        let mut prod = CMat::identity(n, n);
        let mut scale = 1.0;
        for &g in w {
            prod = &prod * gens[g].matrix();
            scale *= gens[g].norm();
        }
        word_mismatch = word_mismatch.max(relative((&prod - b.matrix()).norm(), scale));
    }
    r.push("basis_words", word_mismatch, thr);

    let refs: Vec<&CMat> = alg.basis.iter().map(|b| b.matrix()).collect();
    let span = span_of(n, &refs);
    r.flag("basis_independent", span.len() == alg.dim_algebra);
    let q = span.matrices();
    let contains = gens
        .iter()
        .map(|g| relative(span.distance(g.matrix()).0, g.norm()))
        .fold(0.0, f64::max);
    r.push("generators_contained", contains, thr);
    let mut closure = 0.0f64;
    for x in &q {
        for y in &q {
            closure = closure.max(span.distance(&(x * y)).0);
        }
    }
    r.push("product_closure", closure, thr);

    let Some(rad) = &alg.radical_basis else {
        return r;
    };
    let rad_refs: Vec<&CMat> = rad.iter().map(|m| m.matrix()).collect();
    let rspan = span_of(n, &rad_refs);
    let rq = rspan.matrices();
    r.flag("radical_basis_independent", rq.len() == rad.len());
    let inside = rq.iter().map(|m| span.distance(m).0).fold(0.0, f64::max);
    r.push("radical_in_algebra", inside, thr);
    let mut ideal = 0.0f64;
    let mut trace_form = 0.0f64;
    for x in &q {
        for j in &rq {
            ideal = ideal.max(rspan.distance(&(x * j)).0).max(rspan.distance(&(j * x)).0);
            trace_form = trace_form.max((x * j).trace().norm());
        }
    }
    r.push("radical_two_sided_ideal", ideal, thr);
    r.push("radical_trace_orthogonal", trace_form, thr);

    // J^m through products of unit-norm radical elements
    let exponent = alg.radical_exponent.unwrap_or(0);
    let mut level: Vec<CMat> = rq.clone();
    let mut vanished_at = if level.is_empty() { Some(1) } else { None };
    let mut power_residual = 0.0f64;
    for m in 2..=exponent.max(2).min(n + 1) {
        if vanished_at.is_some() {
            break;
        }
        let mut next = MatrixSpan::new(n);
        let mut worst = 0.0f64;
        for x in &level {
            for j in &rq {
                let p = x * j;
                worst = worst.max(p.norm());
                next.try_add(&p, thr);
            }
        }
        level = next.matrices();
        if level.is_empty() {
            vanished_at = Some(m);
            power_residual = worst;
        }
    }
    r.push("radical_power_vanishes", power_residual, thr);
    r.flag("radical_exponent", vanished_at == Some(exponent));
    if let Some(qd) = alg.quotient_dim {
        r.flag("quotient_dim", qd + rad.len() == alg.dim_algebra);
    }
    // the trace form is nondegenerate modulo the radical
    if !q.is_empty() {
        let d = q.len();
        let gram = CMat::from_fn(d, d, |i, j| (&q[i] * &q[j]).trace());
        let sv = singular_values(&gram);
        let smax = sv[0].max(1.0);
        let rank = sv.iter().filter(|&&s| s > 1e-8 * smax).count();
        r.flag("trace_form_rank", rank + rad.len() == d);
    }
    r
}
