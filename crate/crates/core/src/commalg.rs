//! Iterated commutators of a family and the commutation predicates that
//! decide which triangularization route applies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    commutator, normality_residual, relative, CMat, ComplexMatrix, MatrixSpan, ToleranceContext,
};

/// Nonempty ordered list of same-dimension matrices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorFamily {
    dim: usize,
    members: Vec<ComplexMatrix>,
    labels: Vec<Option<String>>,
}

impl OperatorFamily {
    pub fn new(members: Vec<ComplexMatrix>) -> Result<Self> {
        let labels = vec![None; members.len()];
        Self::build(members, labels)
    }

    pub fn with_labels(members: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != members.len() {
            return Err(Error::DimensionMismatch {
                expected: members.len(),
                found: labels.len(),
            });
        }
        Self::build(members, labels.into_iter().map(Some).collect())
    }

    fn build(members: Vec<ComplexMatrix>, labels: Vec<Option<String>>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyFamily)?;
        let dim = first.dim();
        for m in &members {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
        }
        Ok(Self { dim, members, labels })
    }

    pub fn pair(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self> {
        Self::with_labels(vec![a, b], vec!["A".into(), "B".into()])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn members(&self) -> &[ComplexMatrix] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Label of member `i`, falling back to `T{i}`.
    pub fn label(&self, i: usize) -> String {
        self.labels[i].clone().unwrap_or_else(|| format!("T{i}"))
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }

    /// `Q* T Q` for every member, where `Q` has orthonormal columns. This is
    /// the restriction (or compression) to `span Q`.
    pub fn compress(&self, q: &CMat) -> OperatorFamily {
        let qa = q.adjoint();
        OperatorFamily {
            dim: q.ncols(),
            members: self
                .members
                .iter()
                .map(|t| ComplexMatrix::wrap(&qa * t.matrix() * q))
                .collect(),
            labels: self.labels.clone(),
        }
    }

    /// `P⁻¹ T P` for every member.
    pub fn similarity(&self, p: &CMat, p_inv: &CMat) -> OperatorFamily {
        OperatorFamily {
            dim: self.dim,
            members: self
                .members
                .iter()
                .map(|t| ComplexMatrix::wrap(p_inv * t.matrix() * p))
                .collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn adjoint(&self) -> OperatorFamily {
        OperatorFamily {
            dim: self.dim,
            members: self.members.iter().map(|t| t.adjoint()).collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Which element of `F^[k−1]` and which member of `F` produced an element
/// of `F^[k]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub left: usize,
    pub right: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayerElement {
    pub matrix: ComplexMatrix,
    /// A-priori bound: the product of the norms along the witness chain.
    pub scale: f64,
    pub witness: Option<Witness>,
}

/// `layers[0] = F`, `layers[k]` a spanning subset of `F^[k]`.
///
/// Elements that vanish at `zero_tol × scale` are counted in `zero_counts`
/// and not expanded further. Elements lying in the span of earlier elements
/// of the same layer are dropped as duplicates, so every layer holds at most
/// `dim²` matrices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommutatorLayers {
    pub layers: Vec<Vec<LayerElement>>,
    pub zero_counts: Vec<usize>,
    pub duplicate_counts: Vec<usize>,
    /// First `k` with `F^[k] = {0}`.
    pub vanished_at: Option<usize>,
    /// The span of the last layer reproduced the previous one, so the
    /// sequence can never reach zero.
    pub stabilized: bool,
}

impl CommutatorLayers {
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    /// Matrices of layer `k`.
    pub fn layer(&self, k: usize) -> impl Iterator<Item = &ComplexMatrix> {
        self.layers[k].iter().map(|e| &e.matrix)
    }
}

/// `dim² + 1`.
pub fn default_max_depth(dim: usize) -> usize {
    dim * dim + 1
}

pub fn iterated_commutators(
    family: &OperatorFamily,
    max_depth: usize,
    tol: &ToleranceContext,
) -> Result<CommutatorLayers> {
    if max_depth == 0 {
        return Err(Error::Precondition("max_depth must be at least 1".into()));
    }
    let norms: Vec<f64> = family.members().iter().map(|m| m.norm()).collect();
    Ok(layers_scaled(family.members(), &norms, max_depth, tol))
}

/// Layer computation with caller-supplied reference norms for the members.
pub(crate) fn layers_scaled(
    members: &[ComplexMatrix],
    norms: &[f64],
    max_depth: usize,
    tol: &ToleranceContext,
) -> CommutatorLayers {
    let n = members[0].dim();
    let base: Vec<LayerElement> = members
        .iter()
        .zip(norms)
        .map(|(m, &n)| LayerElement {
            matrix: m.clone(),
            scale: n,
            witness: None,
        })
        .collect();
    let mut out = CommutatorLayers {
        layers: vec![base],
        zero_counts: vec![0],
        duplicate_counts: vec![0],
        vanished_at: None,
        stabilized: false,
    };

    for k in 1..=max_depth {
        let prev = &out.layers[k - 1];
        let mut tracker = MatrixSpan::new(n);
        let mut layer = Vec::new();
        let (mut zeros, mut dups) = (0, 0);
        for (li, x) in prev.iter().enumerate() {
            for (bi, b) in members.iter().enumerate() {
                let c = commutator(&x.matrix, b).expect("family members share a dimension");
                let scale = x.scale * norms[bi];
                let threshold = tol.zero_tol * scale;
                if scale == 0.0 || c.norm() <= threshold {
                    zeros += 1;
                    continue;
                }
                if !tracker.try_add(c.matrix(), threshold) {
                    dups += 1;
                    continue;
                }
                layer.push(LayerElement {
                    matrix: c,
                    scale,
                    witness: Some(Witness { left: li, right: bi }),
                });
            }
        }
        let vanished = layer.is_empty();
        let stabilized = !vanished && same_span(n, prev, &layer, tol);
        out.layers.push(layer);
        out.zero_counts.push(zeros);
        out.duplicate_counts.push(dups);
        if vanished {
            out.vanished_at = Some(k);
            break;
        }
        if stabilized {
            out.stabilized = true;
            break;
        }
    }
    out
}

fn same_span(n: usize, prev: &[LayerElement], next: &[LayerElement], tol: &ToleranceContext) -> bool {
    let span_of = |layer: &[LayerElement]| {
        let mut t = MatrixSpan::new(n);
        for e in layer {
            t.try_add(e.matrix.matrix(), tol.zero_tol * e.scale);
        }
        t
    };
    let p = span_of(prev);
    let q = span_of(next);
    if p.len() != q.len() {
        return false;
    }
    next.iter()
        .all(|e| p.distance(e.matrix.matrix()).0 <= tol.zero_tol * e.scale.max(e.matrix.norm()) * 10.0)
}

/// Least `k ≤ max_depth` with `F^[k] = {0}` at tolerance.
pub fn l_nilpotency_length(
    family: &OperatorFamily,
    max_depth: usize,
    tol: &ToleranceContext,
) -> Result<Option<usize>> {
    Ok(iterated_commutators(family, max_depth, tol)?.vanished_at)
}

/// Norms behind every predicate, each divided by the product of the norms
/// of the factors involved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorms {
    /// `‖[A,B]‖ / ‖A‖‖B‖`
    pub commutator: f64,
    /// `‖A[A,B]‖ / ‖A‖²‖B‖`
    pub a_times_commutator: f64,
    /// `‖[A,B]B‖ / ‖A‖‖B‖²`
    pub commutator_times_b: f64,
    /// `‖B[A,B]‖ / ‖A‖‖B‖²`
    pub b_times_commutator: f64,
    /// `‖[A,AB]‖ / ‖A‖²‖B‖`
    pub a_with_product: f64,
    /// `‖[B,AB]‖ / ‖A‖‖B‖²`
    pub b_with_product: f64,
    /// `‖[A,[A,B]]‖ / ‖A‖²‖B‖`
    pub a_nested: f64,
    /// `‖[B,[A,B]]‖ / ‖A‖‖B‖²`
    pub b_nested: f64,
    /// `‖AA* − A*A‖ / ‖A‖²`
    pub normality_a: f64,
    pub normality_b: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionReport {
    pub l_nilpotent_length: Option<usize>,
    pub commuting: bool,
    /// `A[A,B] = [A,B]B = 0`
    pub shemesh_left_right: bool,
    /// `[A,AB] = [B,AB] = 0`, the equivalent product formulation.
    pub shemesh_product_form: bool,
    pub formulations_agree: bool,
    /// `A[A,B] = B[A,B] = 0`
    pub shemesh_left_left: bool,
    /// `[A,[A,B]] = [B,[A,B]] = 0`
    pub self_commuting_commutator: bool,
    pub normal_flags: [bool; 2],
    pub residual_norms: ResidualNorms,
    pub tolerance: ToleranceContext,
}

impl ConditionReport {
    /// `A` normal and `A[A,B] = 0`.
    pub fn normal_left_annihilated(&self) -> bool {
        self.normal_flags[0] && self.residual_norms.a_times_commutator <= self.tolerance.zero_tol
    }

    /// `B` normal and `[A,B]B = 0`.
    pub fn normal_right_annihilated(&self) -> bool {
        self.normal_flags[1] && self.residual_norms.commutator_times_b <= self.tolerance.zero_tol
    }
}

pub fn check_conditions(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: &ToleranceContext,
) -> Result<ConditionReport> {
    a.ensure_same_dim(b)?;
    let (na, nb) = (a.norm(), b.norm());
    let s_aab = na * na * nb;
    let s_abb = na * nb * nb;
    let c = commutator(a, b)?;
    let ab = a * b;
    let r = ResidualNorms {
        commutator: relative(c.norm(), na * nb),
        a_times_commutator: relative((a * &c).norm(), s_aab),
        commutator_times_b: relative((&c * b).norm(), s_abb),
        b_times_commutator: relative((b * &c).norm(), s_abb),
        a_with_product: relative(commutator(a, &ab)?.norm(), s_aab),
        b_with_product: relative(commutator(b, &ab)?.norm(), s_abb),
        a_nested: relative(commutator(a, &c)?.norm(), s_aab),
        b_nested: relative(commutator(b, &c)?.norm(), s_abb),
        normality_a: normality_residual(a),
        normality_b: normality_residual(b),
    };
    let z = tol.zero_tol;
    let family = OperatorFamily::pair(a.clone(), b.clone())?;
    let length = l_nilpotency_length(&family, default_max_depth(a.dim()), tol)?;
    let lr = r.a_times_commutator <= z && r.commutator_times_b <= z;
    let product = r.a_with_product <= z && r.b_with_product <= z;
    Ok(ConditionReport {
        l_nilpotent_length: length,
        commuting: r.commutator <= z,
        shemesh_left_right: lr,
        shemesh_product_form: product,
        formulations_agree: lr == product,
        shemesh_left_left: r.a_times_commutator <= z && r.b_times_commutator <= z,
        self_commuting_commutator: r.a_nested <= z && r.b_nested <= z,
        normal_flags: [r.normality_a <= z, r.normality_b <= z],
        residual_norms: r,
        tolerance: *tol,
    })
}
