use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::commalg::{default_max_depth, iterated_commutators, OperatorFamily};
use crate::error::{Error, Result};
use crate::matcore::{commutator, kernel_abs, normality_residual, relative, CMat, ComplexMatrix, ComplexScalar, ToleranceContext};

/// Attempts per instance before giving up.
const MAX_ATTEMPTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Commuting,
    LNilpotent,
    ShemeshLr,
    ShemeshLl,
    NormalLeftAnnihilate,
    NormalPair,
}

impl InstanceKind {
    pub const ALL: [InstanceKind; 6] = [
        InstanceKind::Commuting,
        InstanceKind::LNilpotent,
        InstanceKind::ShemeshLr,
        InstanceKind::ShemeshLl,
        InstanceKind::NormalLeftAnnihilate,
        InstanceKind::NormalPair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InstanceKind::Commuting => "commuting",
            InstanceKind::LNilpotent => "l_nilpotent",
            InstanceKind::ShemeshLr => "shemesh_lr",
            InstanceKind::ShemeshLl => "shemesh_ll",
            InstanceKind::NormalLeftAnnihilate => "normal_left_annihilate",
            InstanceKind::NormalPair => "normal_pair",
        }
    }

    fn index(self) -> u8 {
        Self::ALL.iter().position(|&k| k == self).expect("listed") as u8
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown instance kind `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecipe {
    pub kind: InstanceKind,
    pub dim: usize,
    pub seed: u64,
    /// Emit an instance that deliberately violates the predicate.
    #[serde(default)]
    pub violate: bool,
    /// Filled in by the generator.
    #[serde(default)]
    pub construction_log: Vec<String>,
}

impl InstanceRecipe {
    pub fn new(kind: InstanceKind, dim: usize, seed: u64) -> Self {
        Self {
            kind,
            dim,
            seed,
            violate: false,
            construction_log: Vec::new(),
        }
    }

    pub fn violated(mut self) -> Self {
        self.violate = true;
        self
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratedInstance {
    pub family: OperatorFamily,
    pub recipe: InstanceRecipe,
    /// For `l_nilpotent`: the scalar of member `j` on diagonal block `i`,
    /// as `block_scalars[i][j]`.
    pub block_scalars: Option<Vec<Vec<ComplexScalar>>>,
}

impl GeneratedInstance {
    /// Number of distinct nonzero per-block scalar tuples, which is the
    /// dimension of the semisimple quotient of the generated algebra.
    pub fn expected_quotient_dim(&self) -> Option<usize> {
        let tuples = self.block_scalars.as_ref()?;
        let mut seen: Vec<&Vec<ComplexScalar>> = Vec::new();
        for t in tuples {
            if t.iter().all(|z| *z == ComplexScalar::new(0.0, 0.0)) || seen.contains(&t) {
                continue;
            }
            seen.push(t);
        }
        Some(seen.len())
    }
}

/// Outcome of a predicate test: the worst scaled residual against the
/// threshold it was compared with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredicateCheck {
    pub holds: bool,
    pub residual: f64,
    pub threshold: f64,
}

fn pair_of(kind: InstanceKind, family: &OperatorFamily) -> Result<(&ComplexMatrix, &ComplexMatrix)> {
    match family.members() {
        [a, b] => Ok((a, b)),
        m => Err(Error::Precondition(format!(
            "{kind} predicate needs a pair, family has {} members",
            m.len()
        ))),
    }
}

/// The hypothesis each instance kind is built to satisfy, at `tol.zero_tol`.
pub fn instance_predicate(kind: InstanceKind, family: &OperatorFamily, tol: &ToleranceContext) -> Result<PredicateCheck> {
    let z = tol.zero_tol;
    let residual = match kind {
        InstanceKind::Commuting => {
            let m = family.members();
            let mut worst = 0.0f64;
            for i in 0..m.len() {
                for j in i + 1..m.len() {
                    worst = worst.max(relative(commutator(&m[i], &m[j])?.norm(), m[i].norm() * m[j].norm()));
                }
            }
            worst
        }
        InstanceKind::LNilpotent => {
            let layers = iterated_commutators(family, default_max_depth(family.dim()), tol)?;
            match layers.vanished_at {
                // the scaled size of the last commutators taken
                Some(k) => {
                    let mut worst = 0.0f64;
                    for e in &layers.layers[k - 1] {
                        for m in family.members() {
                            worst = worst.max(relative(commutator(&e.matrix, m)?.norm(), e.scale * m.norm()));
                        }
                    }
                    worst
                }
                None => {
                    let last = layers.layers.last().expect("layer zero exists");
                    last.iter()
                        .map(|e| relative(e.matrix.norm(), e.scale))
                        .fold(0.0, f64::max)
                        .max(f64::MIN_POSITIVE.max(z * 10.0))
                }
            }
        }
        InstanceKind::ShemeshLr | InstanceKind::ShemeshLl => {
            let (a, b) = pair_of(kind, family)?;
            let c = commutator(a, b)?;
            let (na, nb) = (a.norm(), b.norm());
            let left = relative((a * &c).norm(), na * na * nb);
            let right = if kind == InstanceKind::ShemeshLr {
                relative((&c * b).norm(), na * nb * nb)
            } else {
                relative((b * &c).norm(), na * nb * nb)
            };
            left.max(right)
        }
        InstanceKind::NormalLeftAnnihilate => {
            let (a, b) = pair_of(kind, family)?;
            let c = commutator(a, b)?;
            normality_residual(a).max(relative((a * &c).norm(), a.norm() * a.norm() * b.norm()))
        }
        InstanceKind::NormalPair => {
            let (a, b) = pair_of(kind, family)?;
            normality_residual(a)
                .max(normality_residual(b))
                .max(relative(commutator(a, b)?.norm(), a.norm() * b.norm()))
        }
    };
    Ok(PredicateCheck {
        holds: residual <= z,
        residual,
        threshold: z,
    })
}

fn rng_for(kind_tag: u8, dim: usize, seed: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&(dim as u64).to_le_bytes());
    bytes[16] = kind_tag;
    ChaCha8Rng::from_seed(bytes)
}

fn c64(re: f64, im: f64) -> ComplexScalar {
    ComplexScalar::new(re, im)
}

fn gaussian(rng: &mut ChaCha8Rng) -> ComplexScalar {
    c64(rng.sample(StandardNormal), rng.sample(StandardNormal)) / std::f64::consts::SQRT_2
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| gaussian(rng))
}

/// Nonzero scalar with modulus in `[0.5, 2]`.
fn unit_scale(rng: &mut ChaCha8Rng) -> ComplexScalar {
    let r = 0.5 * 4f64.powf(rng.random::<f64>());
    ComplexScalar::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    gaussian_matrix(rng, n, n).qr().q()
}

/// `S = U diag(10^u) V*` with `u ∈ [0, spread]`, so `κ(S) ≤ 10^spread`,
/// returned with its exact inverse.
fn random_similarity(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> (CMat, CMat) {
    let u = random_unitary(rng, n);
    let v = random_unitary(rng, n);
    let s: Vec<f64> = (0..n).map(|_| 10f64.powf(spread * rng.random::<f64>())).collect();
    let mut us = u.clone();
    let mut vs = v.clone();
    for j in 0..n {
        us.column_mut(j).scale_mut(s[j]);
        vs.column_mut(j).scale_mut(1.0 / s[j]);
    }
    (&us * v.adjoint(), vs * u.adjoint())
}

fn jordan(k: usize) -> CMat {
    CMat::from_fn(k, k, |i, j| if j == i + 1 { c64(1.0, 0.0) } else { c64(0.0, 0.0) })
}

fn poly_eval(coeffs: &[ComplexScalar], m: &CMat) -> CMat {
    let n = m.nrows();
    let mut acc = CMat::zeros(n, n);
    for &c in coeffs.iter().rev() {
        acc = &acc * m;
        for i in 0..n {
            acc[(i, i)] += c;
        }
    }
    acc
}

/// Block-diagonal matrix from square blocks.
pub fn direct_sum(blocks: &[&CMat]) -> CMat {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    out
}

fn real(rows: &[&[f64]]) -> CMat {
    let n = rows.len();
    CMat::from_fn(n, n, |i, j| c64(rows[i][j], 0.0))
}

/// Small pairs satisfying `A[A,B] = [A,B]B = 0` (`left_left = false`) or
/// `A[A,B] = B[A,B] = 0` (`left_left = true`) with `[A,B] ≠ 0`.
pub fn shemesh_block_catalog(left_left: bool) -> Vec<(ComplexMatrix, ComplexMatrix)> {
    let z2 = [0.0, 0.0];
    let pairs: Vec<(CMat, CMat)> = if !left_left {
        vec![
            (real(&[&[1.0, 0.0], &z2]), real(&[&z2, &[1.0, 0.0]])),
            (real(&[&z2, &[0.0, 1.0]]), real(&[&[0.0, 1.0], &z2])),
            (real(&[&z2, &[0.0, 1.0]]), real(&[&[1.0, 1.0], &z2])),
            (real(&[&z2, &[1.0, 0.0]]), real(&[&z2, &[0.0, 1.0]])),
            (
                real(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 1.0]]),
                real(&[&[0.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0]]),
            ),
            (
                real(&[&[0.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]),
                real(&[&[1.0, 0.0, 1.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]),
            ),
            (
                real(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]),
                real(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]),
            ),
        ]
    } else {
        vec![
            (real(&[&[1.0, 0.0], &z2]), real(&[&z2, &[1.0, 0.0]])),
            (real(&[&z2, &[0.0, 1.0]]), real(&[&[0.0, 1.0], &z2])),
            (real(&[&z2, &[0.0, 1.0]]), real(&[&[0.0, 1.0], &[0.0, 1.0]])),
            (real(&[&z2, &[1.0, 0.0]]), real(&[&[1.0, 0.0], &[1.0, 0.0]])),
            (
                real(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]),
                real(&[&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]),
            ),
            (
                real(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]),
                real(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]),
            ),
            (
                real(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]),
                real(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]),
            ),
        ]
    };
    pairs
        .into_iter()
        .map(|(a, b)| (ComplexMatrix::wrap(a), ComplexMatrix::wrap(b)))
        .collect()
}

/// Random composition of `n` into `k` positive parts.
fn composition(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut parts = vec![1; k];
    for _ in 0..n - k {
        let i = rng.random_range(0..k);
        parts[i] += 1;
    }
    parts
}

struct Built {
    members: Vec<CMat>,
    block_scalars: Option<Vec<Vec<ComplexScalar>>>,
    log: Vec<String>,
}

fn build_commuting(rng: &mut ChaCha8Rng, n: usize) -> Built {
    let mut log = Vec::new();
    let m = if rng.random_bool(0.5) {
        log.push("base: complex Gaussian matrix".to_string());
        gaussian_matrix(rng, n, n)
    } else {
        let k = rng.random_range(1..=n.min(3));
        let sizes = composition(rng, n, k);
        let blocks: Vec<CMat> = sizes
            .iter()
            .map(|&s| {
                let mut b = jordan(s);
                let lambda = gaussian(rng);
                for i in 0..s {
                    b[(i, i)] = lambda;
                }
                b
            })
            .collect();
        let refs: Vec<&CMat> = blocks.iter().collect();
        let (s, s_inv) = random_similarity(rng, n, 1.0);
        log.push(format!("base: Jordan blocks {sizes:?} conjugated by a similarity with condition number at most 10"));
        s * direct_sum(&refs) * s_inv
    };
    let count = rng.random_range(2..=3);
    let members = (0..count)
        .map(|_| {
            let deg = rng.random_range(1..=3);
            let mut coeffs: Vec<ComplexScalar> = (0..=deg).map(|_| gaussian(rng)).collect();
            coeffs[1] = unit_scale(rng);
            poly_eval(&coeffs, &m)
        })
        .collect();
    log.push(format!("{count} members, each a random polynomial of the base"));
    Built {
        members,
        block_scalars: None,
        log,
    }
}

fn build_l_nilpotent(rng: &mut ChaCha8Rng, n: usize) -> Built {
    let palette = [
        c64(0.0, 0.0),
        c64(1.0, 0.0),
        c64(-1.0, 0.0),
        c64(2.0, 0.0),
        c64(0.0, 1.0),
        c64(1.0, 1.0),
    ];
    let k = rng.random_range(2..=n.min(4));
    let sizes = composition(rng, n, k);
    // contiguous runs of blocks sharing one scalar tuple; coupling only
    // inside a run keeps every iterated commutator strictly block upper
    let groups = rng.random_range(1..=k);
    let runs = composition(rng, k, groups);
    let count = rng.random_range(2..=4);
    let (s, s_inv) = random_similarity(rng, n, 1.0);
    let mut group_of = Vec::with_capacity(k);
    for (g, &r) in runs.iter().enumerate() {
        group_of.extend(std::iter::repeat_n(g, r));
    }
    let tuples: Vec<Vec<ComplexScalar>> = (0..groups)
        .map(|_| (0..count).map(|_| palette[rng.random_range(0..palette.len())]).collect())
        .collect();
    let scalars: Vec<Vec<ComplexScalar>> = group_of.iter().map(|&g| tuples[g].clone()).collect();
    let mut offsets = vec![0];
    for s in &sizes {
        offsets.push(offsets.last().unwrap() + s);
    }
    let members = (0..count)
        .map(|j| {
            let mut m = CMat::zeros(n, n);
            for bi in 0..k {
                for i in offsets[bi]..offsets[bi + 1] {
                    m[(i, i)] = scalars[bi][j];
                    for bj in bi + 1..k {
                        if group_of[bj] != group_of[bi] {
                            break;
                        }
                        for col in offsets[bj]..offsets[bj + 1] {
                            m[(i, col)] = gaussian(rng);
                        }
                    }
                }
            }
            &s * m * &s_inv
        })
        .collect();
    Built {
        members,
        block_scalars: Some(scalars),
        log: vec![
            format!("{k} scalar diagonal blocks of sizes {sizes:?} in {groups} runs of lengths {runs:?}, {count} members"),
            "Gaussian coupling strictly above the diagonal inside each run, so k-fold commutators vanish".to_string(),
            "conjugated by a similarity with condition number at most 10".to_string(),
        ],
    }
}

fn build_shemesh(rng: &mut ChaCha8Rng, n: usize, left_left: bool) -> Built {
    let catalog = shemesh_block_catalog(left_left);
    let mut a_blocks = Vec::new();
    let mut b_blocks = Vec::new();
    let mut log = Vec::new();
    let mut remaining = n;
    let mut first = true;
    while remaining > 0 {
        let fits: Vec<usize> = (0..catalog.len()).filter(|&i| catalog[i].0.dim() <= remaining).collect();
        if !fits.is_empty() && (first || rng.random_bool(0.6)) {
            let i = fits[rng.random_range(0..fits.len())];
            let (alpha, beta) = (unit_scale(rng), unit_scale(rng));
            a_blocks.push(catalog[i].0.matrix() * alpha);
            b_blocks.push(catalog[i].1.matrix() * beta);
            remaining -= catalog[i].0.dim();
            log.push(format!("catalog block {i} scaled by ({alpha:.3}, {beta:.3})"));
        } else {
            let k = rng.random_range(1..=remaining.min(2));
            let m = gaussian_matrix(rng, k, k);
            let pa = [gaussian(rng), unit_scale(rng)];
            let pb = [gaussian(rng), unit_scale(rng), gaussian(rng)];
            a_blocks.push(poly_eval(&pa, &m));
            b_blocks.push(poly_eval(&pb, &m));
            remaining -= k;
            log.push(format!("commuting filler block of size {k}"));
        }
        first = false;
    }
    let (s, s_inv) = random_similarity(rng, n, 1.0);
    let ra: Vec<&CMat> = a_blocks.iter().collect();
    let rb: Vec<&CMat> = b_blocks.iter().collect();
    log.push("direct sum conjugated by a similarity with condition number at most 10".to_string());
    Built {
        members: vec![&s * direct_sum(&ra) * &s_inv, &s * direct_sum(&rb) * &s_inv],
        block_scalars: None,
        log,
    }
}

/// `k` nonzero eigenvalues with some repeats.
fn eigen_pattern(rng: &mut ChaCha8Rng, k: usize) -> Vec<ComplexScalar> {
    let mut out: Vec<ComplexScalar> = Vec::with_capacity(k);
    while out.len() < k {
        if !out.is_empty() && rng.random_bool(0.3) {
            let v = out[rng.random_range(0..out.len())];
            out.push(v);
        } else {
            out.push(unit_scale(rng));
        }
    }
    out
}

/// Random matrix commuting with `diag(d)`: block diagonal on equal entries.
fn commutant_of_diagonal(rng: &mut ChaCha8Rng, d: &[ComplexScalar]) -> CMat {
    let k = d.len();
    CMat::from_fn(k, k, |i, j| if d[i] == d[j] { gaussian(rng) } else { c64(0.0, 0.0) })
}

fn build_normal_left_annihilate(rng: &mut ChaCha8Rng, n: usize) -> Built {
    let r = rng.random_range(1..n);
    let k = n - r;
    let mu = eigen_pattern(rng, k);
    let mut a = CMat::zeros(n, n);
    for (i, &m) in mu.iter().enumerate() {
        a[(r + i, r + i)] = m;
    }
    let mut b = gaussian_matrix(rng, n, n);
    b.view_mut((r, 0), (k, r)).fill(c64(0.0, 0.0));
    b.view_mut((r, r), (k, k)).copy_from(&commutant_of_diagonal(rng, &mu));
    let u = random_unitary(rng, n);
    let ua = u.adjoint();
    Built {
        members: vec![&u * a * &ua, &u * b * &ua],
        block_scalars: None,
        log: vec![
            format!("A = 0 on a kernel of dimension {r}, normal and invertible on its complement"),
            "B with B21 = 0 and B22 in the commutant of A22".to_string(),
            "rotated by a random unitary".to_string(),
        ],
    }
}

fn build_normal_pair(rng: &mut ChaCha8Rng, n: usize) -> Built {
    let mut da = eigen_pattern(rng, n);
    let mut db = eigen_pattern(rng, n);
    if rng.random_bool(0.3) {
        da[rng.random_range(0..n)] = c64(0.0, 0.0);
    }
    if rng.random_bool(0.3) {
        db[rng.random_range(0..n)] = c64(0.0, 0.0);
    }
    let u = random_unitary(rng, n);
    let ua = u.adjoint();
    let a = &u * CMat::from_diagonal(&nalgebra::DVector::from_vec(da)) * &ua;
    let b = &u * CMat::from_diagonal(&nalgebra::DVector::from_vec(db)) * &ua;
    Built {
        members: vec![a, b],
        block_scalars: None,
        log: vec!["diagonal in a common random orthonormal eigenbasis".to_string()],
    }
}

/// Generic perturbation of relative size `eps` applied to member `idx`.
fn perturb(rng: &mut ChaCha8Rng, members: &mut [CMat], idx: usize, eps: f64) {
    let n = members[idx].nrows();
    let g = gaussian_matrix(rng, n, n);
    let scale = eps * members[idx].norm().max(1.0) / g.norm();
    members[idx] += g * c64(scale, 0.0);
}

fn build(kind: InstanceKind, rng: &mut ChaCha8Rng, n: usize) -> Built {
    match kind {
        InstanceKind::Commuting => build_commuting(rng, n),
        InstanceKind::LNilpotent => build_l_nilpotent(rng, n),
        InstanceKind::ShemeshLr => build_shemesh(rng, n, false),
        InstanceKind::ShemeshLl => build_shemesh(rng, n, true),
        InstanceKind::NormalLeftAnnihilate => build_normal_left_annihilate(rng, n),
        InstanceKind::NormalPair => build_normal_pair(rng, n),
    }
}

fn to_family(members: Vec<CMat>) -> Result<OperatorFamily> {
    let members = members.into_iter().map(ComplexMatrix::new).collect::<Result<Vec<_>>>()?;
    if members.len() == 2 {
        OperatorFamily::pair(members[0].clone(), members[1].clone())
    } else {
        OperatorFamily::new(members)
    }
}

/// Builds an instance of `recipe.kind`, fully determined by kind, dimension
/// and seed. Honest instances pass the predicate at a tenth of the default
/// zero tolerance; violated ones fail it at the default.
pub fn generate_instance(recipe: &InstanceRecipe) -> Result<GeneratedInstance> {
    let n = recipe.dim;
    if n < 2 {
        return Err(Error::Precondition(format!("instance dimension must be at least 2, got {n}")));
    }
    let tol = ToleranceContext::for_dim(n);
    let tight = ToleranceContext {
        zero_tol: tol.zero_tol / 10.0,
        ..tol
    };
    let mut rng = rng_for(recipe.kind.index() | if recipe.violate { 0x80 } else { 0 }, n, recipe.seed);
    let mut last = f64::NAN;
    for attempt in 1..=MAX_ATTEMPTS {
        let mut built = build(recipe.kind, &mut rng, n);
        if recipe.violate {
            let idx = if built.members.len() > 1 { 1 } else { 0 };
            perturb(&mut rng, &mut built.members, idx, 0.1);
            built.block_scalars = None;
            built.log.push(format!("violation: member {idx} perturbed by a Gaussian of relative size 0.1"));
        }
        let family = to_family(built.members)?;
        let check = instance_predicate(recipe.kind, &family, if recipe.violate { &tol } else { &tight })?;
        last = check.residual;
        if check.holds != recipe.violate {
            let mut out = recipe.clone();
            out.construction_log = built.log;
            out.construction_log.push(format!(
                "attempt {attempt}: predicate residual {:.3e} against {:.1e}",
                check.residual, check.threshold
            ));
            return Ok(GeneratedInstance {
                family,
                recipe: out,
                block_scalars: built.block_scalars,
            });
        }
    }
    Err(Error::ConstructionFailure(format!(
        "{} instance of dimension {n} (seed {}) missed its target after {MAX_ATTEMPTS} attempts, last residual {last:.3e}",
        recipe.kind, recipe.seed
    )))
}

/// A pair with `[A,[A,B]] = 0`: `A = S(⊕ λᵢ + pᵢ(Jᵢ))S⁻¹` and
/// `B = S(⊕ cᵢ diag(0, 1, …) )S⁻¹ + r(A)`, whose commutator is a polynomial
/// in the nilpotent parts.
pub fn generate_nested_commutator_pair(dim: usize, seed: u64) -> Result<OperatorFamily> {
    if dim < 2 {
        return Err(Error::Precondition(format!("instance dimension must be at least 2, got {dim}")));
    }
    let mut rng = rng_for(0x40, dim, seed);
    let tight = ToleranceContext::for_dim(dim).zero_tol / 10.0;
    let mut last = f64::NAN;
    for _ in 0..MAX_ATTEMPTS {
        // at most dim − 1 blocks, so some block has a nilpotent part
        let k = rng.random_range(1..=(dim - 1).min(3));
        let sizes = composition(&mut rng, dim, k);
        let mut a_blocks = Vec::new();
        let mut d_blocks = Vec::new();
        for &s in &sizes {
            let j = jordan(s);
            let coeffs = [gaussian(&mut rng), unit_scale(&mut rng), gaussian(&mut rng)];
            a_blocks.push(poly_eval(&coeffs, &j));
            let c = unit_scale(&mut rng);
            d_blocks.push(CMat::from_fn(s, s, |i, l| if i == l { c * i as f64 } else { c64(0.0, 0.0) }));
        }
        let (s, s_inv) = random_similarity(&mut rng, dim, 1.0);
        let ra: Vec<&CMat> = a_blocks.iter().collect();
        let rd: Vec<&CMat> = d_blocks.iter().collect();
        let a = &s * direct_sum(&ra) * &s_inv;
        let r = [gaussian(&mut rng), gaussian(&mut rng)];
        let b = &s * direct_sum(&rd) * &s_inv + poly_eval(&r, &a);
        let (a, b) = (ComplexMatrix::new(a)?, ComplexMatrix::new(b)?);
        let c = commutator(&a, &b)?;
        last = relative(commutator(&a, &c)?.norm(), a.norm() * a.norm() * b.norm());
        // a commutator at rounding level would make the instance vacuous
        if last <= tight && relative(c.norm(), a.norm() * b.norm()) >= 1e-3 {
            return OperatorFamily::pair(a, b);
        }
    }
    Err(Error::ConstructionFailure(format!(
        "[A,[A,B]] = 0 pair of dimension {dim} (seed {seed}) missed its target, last residual {last:.3e}"
    )))
}

/// `A` similar to a diagonal matrix with distinct eigenvalues and `B` a
/// random element of the numerical kernel of `X ↦ [A,[A,X]]`.
pub fn generate_distinct_diagonal_pair(dim: usize, seed: u64) -> Result<OperatorFamily> {
    if dim < 2 {
        return Err(Error::Precondition(format!("instance dimension must be at least 2, got {dim}")));
    }
    let mut rng = rng_for(0x41, dim, seed);
    let n = dim;
    let mut grid: Vec<ComplexScalar> = Vec::new();
    for x in -2..=2 {
        for y in -2..=2 {
            grid.push(c64(0.5 * x as f64, 0.5 * y as f64));
        }
    }
    for _ in 0..MAX_ATTEMPTS {
        let mut eig = Vec::with_capacity(n);
        while eig.len() < n {
            let z = grid[rng.random_range(0..grid.len())];
            if !eig.contains(&z) {
                eig.push(z);
            }
        }
        let (s, s_inv) = random_similarity(&mut rng, n, 0.5);
        let a = &s * CMat::from_diagonal(&nalgebra::DVector::from_vec(eig)) * &s_inv;
        // vec(AX − XA) = (I ⊗ A − Aᵀ ⊗ I) vec(X)
        let id = CMat::identity(n, n);
        let l = id.kronecker(&a) - a.transpose().kronecker(&id);
        let k = &l * &l;
        let kn = k.norm();
        let null = kernel_abs(&k, 1e-9 * kn);
        if null.ncols() != n {
            continue;
        }
        let mut x = nalgebra::DVector::<ComplexScalar>::zeros(n * n);
        for col in null.column_iter() {
            x += col * gaussian(&mut rng);
        }
        let b = CMat::from_column_slice(n, n, x.as_slice());
        return OperatorFamily::pair(ComplexMatrix::new(a)?, ComplexMatrix::new(b)?);
    }
    Err(Error::ConstructionFailure(format!(
        "kernel of ad_A^2 did not have dimension {n} (seed {seed})"
    )))
}
