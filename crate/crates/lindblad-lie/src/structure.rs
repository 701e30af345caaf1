//! Structure analysis of the quadratic superoperator algebra.
//!
//! The ladder superoperator products that generate dissipative evolution
//! close under commutation. This module computes their structure
//! constants numerically, builds the Cartan-Killing form from the
//! regular representation, extracts the radical as the Killing-orthogonal
//! complement of the derived algebra, and certifies the decomposition
//! into a nilpotent ideal, an Abelian pair, and two commuting sl(N)
//! blocks acting on kets and bras.

use crate::fock::FockBasis;
use crate::linalg::{dagger, eigh, lu_factor, svd, svd_values};
use crate::liouville::{ladder_supers, SystemParams};
use crate::weinorman::split_liouvillian;
use crate::{C64, Error, Result};
use ndarray::prelude::*;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

/// Relative singular-value cut for rank decisions.
const RANK_TOL: f64 = 1e-8;

/// Multiplicative half-width of the ambiguity band around the rank cut.
const RANK_GUARD: f64 = 10.0;

/// Largest admitted relative residual when projecting a commutator back
/// onto the basis span.
const CLOSURE_TOL: f64 = 1e-10;

/// Which of the three quadratic families an element belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    /// Ket-side raise-lower pair, preserves both excitation counts.
    Left,
    /// Bra-side raise-lower pair, preserves both excitation counts.
    Right,
    /// Double lowering, removes one excitation from each side.
    Lowering,
}

/// Name of one basis element; mode indices are zero-based internally and
/// printed one-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementLabel {
    pub kind: ElementKind,
    pub i: usize,
    pub j: usize,
}

impl fmt::Display for ElementLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ElementKind::Left => write!(f, "L{}+L{}-", self.i + 1, self.j + 1),
            ElementKind::Right => write!(f, "R{}+R{}-", self.i + 1, self.j + 1),
            ElementKind::Lowering => write!(f, "L{}-R{}-", self.i + 1, self.j + 1),
        }
    }
}

/// The 3N^2 quadratic superoperators represented on a two-excitation
/// Fock truncation, where all their pairwise products are exact.
pub struct AlgebraBasis {
    pub n_modes: usize,
    pub labels: Vec<ElementLabel>,
    pub matrices: Vec<Array2<C64>>,
    pub fock: Arc<FockBasis>,
}

impl AlgebraBasis {
    /// Number of basis elements, always 3N^2.
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Position of a labeled element in the basis ordering.
    pub fn index_of(&self, kind: ElementKind, i: usize, j: usize) -> usize {
        let n = self.n_modes;
        let block = match kind {
            ElementKind::Left => 0,
            ElementKind::Right => 1,
            ElementKind::Lowering => 2,
        };
        block * n * n + i * n + j
    }
}

/// Builds the quadratic basis for an N-mode chain.
///
/// Elements come in three blocks of N^2: ket-side raise-lower pairs,
/// bra-side raise-lower pairs, and double lowerings, each ordered with
/// the raising (or ket) index outermost. Every element and every
/// pairwise product moves excitation totals downward or not at all, so
/// a max-total-2 truncation represents all commutators exactly.
pub fn quadratic_basis(n_modes: usize) -> Result<AlgebraBasis> {
    if n_modes == 0 {
        return Err(Error::InvalidParams { reason: "algebra needs at least one mode".into() });
    }
    let fock = Arc::new(FockBasis::new(n_modes, 2));
    let ladders = ladder_supers(&fock)?;
    let mut labels = Vec::with_capacity(3 * n_modes * n_modes);
    let mut matrices = Vec::with_capacity(3 * n_modes * n_modes);
    for (kind, first, second) in [
        (ElementKind::Left, &ladders.lp, &ladders.lm),
        (ElementKind::Right, &ladders.rp, &ladders.rm),
        (ElementKind::Lowering, &ladders.lm, &ladders.rm),
    ] {
        for i in 0..n_modes {
            for j in 0..n_modes {
                labels.push(ElementLabel { kind, i, j });
                matrices.push(first[i].dot(&second[j]));
            }
        }
    }
    Ok(AlgebraBasis { n_modes, labels, matrices, fock })
}

/// Structure constants C with [X_a, X_b] = sum_c C[a, b, c] X_c, plus
/// the Killing form K[a, b] = Tr(ad_a ad_b) built from them.
pub struct StructureTensor {
    pub n_modes: usize,
    pub labels: Vec<ElementLabel>,
    pub constants: Array3<C64>,
    pub killing: Array2<C64>,
    /// Worst relative distance of any pairwise commutator from the span.
    pub closure_residual: f64,
}

impl StructureTensor {
    /// Number of basis elements.
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Coefficients of [u, v] for coefficient vectors u and v.
    pub fn commutator_coords(&self, u: &ArrayView1<C64>, v: &ArrayView1<C64>) -> Array1<C64> {
        let n = self.dim();
        let mut w = Array1::zeros(n);
        for a in 0..n {
            if u[a].norm_sqr() == 0.0 {
                continue;
            }
            let ca = self.constants.index_axis(Axis(0), a);
            w = w + ca.t().dot(v).mapv(|z| z * u[a]);
        }
        w
    }

    /// Matrix of ad_{X_a} acting on coefficient vectors.
    pub fn adjoint_rep(&self, a: usize) -> Array2<C64> {
        self.constants.index_axis(Axis(0), a).t().to_owned()
    }

    /// Largest absolute entry of the Jacobi identity over all index
    /// triples; zero for an exact Lie algebra.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim();
        let c = &self.constants;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in (a + 1)..n {
                for d in (b + 1)..n {
                    for f in 0..n {
                        let mut sum = C64::new(0.0, 0.0);
                        for e in 0..n {
                            sum += c[[a, b, e]] * c[[e, d, f]]
                                + c[[b, d, e]] * c[[e, a, f]]
                                + c[[d, a, e]] * c[[e, b, f]];
                        }
                        worst = worst.max(sum.norm());
                    }
                }
            }
        }
        worst
    }
}

fn hs_inner(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Computes structure constants by projecting every matrix commutator
/// onto the basis with the Hilbert-Schmidt inner product (Gram solve),
/// then the Killing form from the regular representation.
///
/// Fails with a not-closed error if any commutator leaves the span by
/// more than the closure tolerance.
pub fn structure_constants(basis: &AlgebraBasis) -> Result<StructureTensor> {
    let n = basis.dim();
    let mats = &basis.matrices;
    let mut gram = Array2::zeros((n, n));
    for a in 0..n {
        for b in 0..n {
            gram[[a, b]] = hs_inner(&mats[a].view(), &mats[b].view());
        }
    }
    let lu = lu_factor(&gram.view(), "quadratic basis gram matrix")?;
    let mut constants = Array3::zeros((n, n, n));
    let mut closure_residual = 0.0f64;
    for a in 0..n {
        for b in (a + 1)..n {
            let w = mats[a].dot(&mats[b]) - mats[b].dot(&mats[a]);
            let rhs = Array1::from_iter((0..n).map(|c| hs_inner(&mats[c].view(), &w.view())));
            let coeffs = lu.solve_vec(&rhs.view());
            let mut rebuilt = Array2::<C64>::zeros(w.raw_dim());
            for c in 0..n {
                if coeffs[c].norm_sqr() > 0.0 {
                    rebuilt = rebuilt + mats[c].mapv(|z| z * coeffs[c]);
                }
            }
            let wnorm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let rnorm =
                (&w - &rebuilt).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            closure_residual = closure_residual.max(rnorm / wnorm.max(1.0));
            for c in 0..n {
                constants[[a, b, c]] = coeffs[c];
                constants[[b, a, c]] = -coeffs[c];
            }
        }
    }
    if closure_residual > CLOSURE_TOL {
        return Err(Error::NotClosed { residual: closure_residual });
    }
    let adjoints: Vec<Array2<C64>> = (0..n)
        .map(|a| constants.index_axis(Axis(0), a).t().to_owned())
        .collect();
    let mut killing = Array2::zeros((n, n));
    for a in 0..n {
        for b in a..n {
            let k = adjoints[a].dot(&adjoints[b]).diag().sum();
            killing[[a, b]] = k;
            killing[[b, a]] = k;
        }
    }
    Ok(StructureTensor {
        n_modes: basis.n_modes,
        labels: basis.labels.clone(),
        constants,
        killing,
        closure_residual,
    })
}

/// An orthonormal set of coefficient vectors spanning a subspace of the
/// algebra, each tagged by the original element it overlaps most.
pub struct Subspace {
    /// Columns are orthonormal coefficient vectors.
    pub vectors: Array2<C64>,
    pub tags: Vec<ElementLabel>,
}

impl Subspace {
    /// Subspace dimension.
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    /// Relative distance of a coefficient vector from the span; zero
    /// means the vector lies inside.
    pub fn distance(&self, w: &ArrayView1<C64>) -> f64 {
        let overlaps = dagger(&self.vectors.view()).dot(w);
        let inside = self.vectors.dot(&overlaps);
        let res = (w - &inside).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        res / norm.max(1.0)
    }

    /// Largest overlap between the span and a probe vector, normalized
    /// by the probe norm; zero means orthogonal.
    pub fn overlap(&self, w: &ArrayView1<C64>) -> f64 {
        let overlaps = dagger(&self.vectors.view()).dot(w);
        let o = overlaps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        o / norm.max(1.0)
    }
}

/// Rank from descending singular values: everything at or above
/// RANK_TOL times the largest counts. Values inside the multiplicative
/// guard band around the cut abort with an ambiguity error instead of
/// silently landing on one side.
fn rank_split(s: &[f64]) -> Result<usize> {
    if s.is_empty() || s[0] <= 0.0 {
        return Ok(0);
    }
    let cut = RANK_TOL * s[0];
    for &sigma in s {
        if sigma > cut / RANK_GUARD && sigma < cut * RANK_GUARD {
            return Err(Error::RankAmbiguous { sigma, cut });
        }
    }
    Ok(s.iter().filter(|&&x| x >= cut).count())
}

fn dominant_labels(labels: &[ElementLabel], vectors: &Array2<C64>) -> Vec<ElementLabel> {
    (0..vectors.ncols())
        .map(|c| {
            let col = vectors.column(c);
            let mut best = 0;
            for i in 1..col.len() {
                if col[i].norm() > col[best].norm() {
                    best = i;
                }
            }
            labels[best]
        })
        .collect()
}

/// Orthonormal basis of the column space of `a`, via the right singular
/// vectors of its adjoint.
fn column_space(tensor: &StructureTensor, a: &ArrayView2<C64>) -> Result<Subspace> {
    let dec = svd(&dagger(a).view())?;
    let rank = rank_split(&dec.s)?;
    let vectors = dec.v.slice(s![.., ..rank]).to_owned();
    let tags = dominant_labels(&tensor.labels, &vectors);
    Ok(Subspace { vectors, tags })
}

/// Orthonormal basis of the null space of `a` from its smallest right
/// singular vectors.
fn null_space(tensor: &StructureTensor, a: &ArrayView2<C64>) -> Result<Subspace> {
    let dec = svd(a)?;
    let rank = rank_split(&dec.s)?;
    let vectors = dec.v.slice(s![.., rank..]).to_owned();
    let tags = dominant_labels(&tensor.labels, &vectors);
    Ok(Subspace { vectors, tags })
}

/// Span of all pairwise commutators [g, g] as coefficient vectors.
pub fn derived_algebra(tensor: &StructureTensor) -> Result<Subspace> {
    let n = tensor.dim();
    let mut cols = Array2::zeros((n, n * (n - 1) / 2));
    let mut k = 0;
    for a in 0..n {
        for b in (a + 1)..n {
            cols.column_mut(k).assign(&tensor.constants.slice(s![a, b, ..]));
            k += 1;
        }
    }
    column_space(tensor, &cols.view())
}

/// Radical of the algebra: the orthogonal complement of the derived
/// algebra with respect to the Killing form (Cartan's solvability
/// criterion), returned as an orthonormal spanning set.
pub fn radical(tensor: &StructureTensor) -> Result<Subspace> {
    let derived = derived_algebra(tensor)?;
    // Bilinear pairing, so the plain transpose of the derived basis.
    let pairing = derived.vectors.t().dot(&tensor.killing);
    null_space(tensor, &pairing.view())
}

/// Signature of the Killing form: eigenvalue counts by sign.
#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub struct KillingSignature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// Numerical certificate for the nilpotent + Abelian + sl(N) + sl(N)
/// decomposition; every residual should sit at rounding level.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub n_modes: usize,
    /// 3N^2 elements in total.
    pub total_dim: usize,
    /// Derived-algebra dimension, 2(N^2-1) + N^2.
    pub derived_dim: usize,
    /// Radical dimension, N^2 + 2.
    pub radical_dim: usize,
    /// Double lowerings, N^2.
    pub nilpotent_dim: usize,
    /// Ket and bra total-number sums, always 2.
    pub abelian_dim: usize,
    /// Traceless ket-side block, N^2 - 1.
    pub left_dim: usize,
    /// Traceless bra-side block, N^2 - 1.
    pub right_dim: usize,
    pub closure_residual: f64,
    pub jacobi_residual: f64,
    /// Largest commutator norm between the two sl blocks.
    pub mutual_commutator_residual: f64,
    /// Largest commutator norm of the number sums against both blocks.
    pub abelian_commutator_residual: f64,
    /// Largest commutator norm inside the nilpotent ideal.
    pub nilpotent_pairwise_residual: f64,
    /// Largest Killing-form entry against a nilpotent direction.
    pub nilpotent_killing_residual: f64,
    /// Worst distance of [g, radical] from the radical span.
    pub radical_ideal_residual: f64,
    /// Largest overlap of an sl-block vector with the radical span.
    pub complement_residual: f64,
    /// Worst distance of a number sum from the radical span.
    pub abelian_in_radical_residual: f64,
    pub killing_signature: KillingSignature,
    /// Smallest over largest singular value of the Killing form on the
    /// ket-side block; `None` when the block is empty (N = 1).
    pub left_killing_gap: Option<f64>,
    /// Same for the bra-side block.
    pub right_killing_gap: Option<f64>,
}

impl fmt::Display for DecompositionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "quadratic superoperator algebra on {} mode(s): {} elements",
            self.n_modes, self.total_dim
        )?;
        writeln!(
            f,
            "decomposition: {} = {} (nilpotent) + {} (abelian) + {} + {} (sl blocks)",
            self.total_dim, self.nilpotent_dim, self.abelian_dim, self.left_dim, self.right_dim
        )?;
        writeln!(f, "derived algebra dimension:  {}", self.derived_dim)?;
        writeln!(f, "radical dimension:          {}", self.radical_dim)?;
        writeln!(f, "closure residual:           {:.3e}", self.closure_residual)?;
        writeln!(f, "jacobi residual:            {:.3e}", self.jacobi_residual)?;
        writeln!(f, "sl-block mutual commutators: {:.3e}", self.mutual_commutator_residual)?;
        writeln!(f, "abelian commutators:         {:.3e}", self.abelian_commutator_residual)?;
        writeln!(f, "nilpotent commutators:       {:.3e}", self.nilpotent_pairwise_residual)?;
        writeln!(f, "nilpotent killing rows:      {:.3e}", self.nilpotent_killing_residual)?;
        writeln!(f, "radical ideal residual:      {:.3e}", self.radical_ideal_residual)?;
        writeln!(f, "complement overlap:          {:.3e}", self.complement_residual)?;
        writeln!(f, "abelian inside radical:      {:.3e}", self.abelian_in_radical_residual)?;
        writeln!(
            f,
            "killing signature:          {} positive, {} negative, {} zero",
            self.killing_signature.positive,
            self.killing_signature.negative,
            self.killing_signature.zero
        )?;
        match self.left_killing_gap {
            Some(g) => writeln!(f, "ket-block killing gap:      {:.3e}", g)?,
            None => writeln!(f, "ket-block killing gap:      empty block")?,
        }
        match self.right_killing_gap {
            Some(g) => writeln!(f, "bra-block killing gap:      {:.3e}", g)?,
            None => writeln!(f, "bra-block killing gap:      empty block")?,
        }
        Ok(())
    }
}

fn unit_coeff(n: usize, idx: usize) -> Array1<C64> {
    let mut v = Array1::zeros(n);
    v[idx] = C64::new(1.0, 0.0);
    v
}

fn coeff_norm(w: &ArrayView1<C64>) -> f64 {
    w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Explicit traceless basis of one raise-lower block: all off-diagonal
/// pairs, then successive diagonal differences.
fn sl_block(tensor: &StructureTensor, kind: ElementKind) -> Vec<Array1<C64>> {
    let n = tensor.n_modes;
    let dim = tensor.dim();
    let block = match kind {
        ElementKind::Left => 0,
        ElementKind::Right => 1,
        ElementKind::Lowering => unreachable!("only raise-lower blocks have sl parts"),
    };
    let idx = |i: usize, j: usize| block * n * n + i * n + j;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out.push(unit_coeff(dim, idx(i, j)));
            }
        }
    }
    for i in 0..(n - 1) {
        let mut v = Array1::zeros(dim);
        v[idx(i, i)] = C64::new(1.0, 0.0);
        v[idx(i + 1, i + 1)] = C64::new(-1.0, 0.0);
        out.push(v);
    }
    out
}

/// Sum of the diagonal raise-lower pairs on one side; commutes with
/// every element of both raise-lower blocks.
fn number_sum(tensor: &StructureTensor, kind: ElementKind) -> Array1<C64> {
    let n = tensor.n_modes;
    let dim = tensor.dim();
    let block = match kind {
        ElementKind::Left => 0,
        ElementKind::Right => 1,
        ElementKind::Lowering => unreachable!("lowerings carry no number sum"),
    };
    let mut v = Array1::zeros(dim);
    for i in 0..n {
        v[block * n * n + i * n + i] = C64::new(1.0, 0.0);
    }
    v
}

fn restricted_killing_gap(
    tensor: &StructureTensor,
    block: &[Array1<C64>],
    ideal: &'static str,
) -> Result<Option<f64>> {
    if block.is_empty() {
        return Ok(None);
    }
    let m = block.len();
    let mut k = Array2::zeros((m, m));
    for (a, x) in block.iter().enumerate() {
        let kx = tensor.killing.dot(x);
        for (b, y) in block.iter().enumerate() {
            // Complex bilinear restriction, no conjugation.
            k[[a, b]] = y.dot(&kx);
        }
    }
    let s = svd_values(&k.view())?;
    let gap = s[m - 1] / s[0];
    if gap < RANK_TOL {
        return Err(Error::DegenerateKilling { ideal, ratio: gap });
    }
    Ok(Some(gap))
}

fn killing_signature(tensor: &StructureTensor) -> Result<KillingSignature> {
    // The structure constants are real, so the Killing form is a real
    // symmetric matrix up to rounding; classify its eigenvalue signs.
    let n = tensor.dim();
    let mut h = Array2::zeros((n, n));
    for a in 0..n {
        for b in 0..n {
            let z = (tensor.killing[[a, b]] + tensor.killing[[b, a]].conj()) * 0.5;
            h[[a, b]] = z;
        }
    }
    let (eigs, _) = eigh(&h.view())?;
    let scale = eigs.iter().fold(0.0f64, |m, &e| m.max(e.abs()));
    let cut = RANK_TOL * scale.max(1e-300);
    let mut sig = KillingSignature { positive: 0, negative: 0, zero: 0 };
    for &e in &eigs {
        if e > cut {
            sig.positive += 1;
        } else if e < -cut {
            sig.negative += 1;
        } else {
            sig.zero += 1;
        }
    }
    Ok(sig)
}

/// Verifies the full decomposition around a computed radical and
/// reports dimensions, residuals, and Killing data.
///
/// The complement is split explicitly into the traceless ket-side and
/// bra-side blocks; each must carry a nondegenerate restricted Killing
/// form, otherwise a degeneracy error is returned.
pub fn classify_semisimple(
    tensor: &StructureTensor,
    radical: &Subspace,
) -> Result<DecompositionReport> {
    let n = tensor.dim();
    let derived = derived_algebra(tensor)?;

    // Nilpotent ideal: the derived algebra of the radical.
    let rdim = radical.dim();
    let mut cols = Array2::zeros((n, rdim * rdim));
    for a in 0..rdim {
        for b in 0..rdim {
            let w = tensor.commutator_coords(
                &radical.vectors.column(a),
                &radical.vectors.column(b),
            );
            cols.column_mut(a * rdim + b).assign(&w);
        }
    }
    let nilpotent = column_space(tensor, &cols.view())?;

    let mut nilpotent_pairwise_residual = 0.0f64;
    for a in 0..nilpotent.dim() {
        for b in (a + 1)..nilpotent.dim() {
            let w = tensor.commutator_coords(
                &nilpotent.vectors.column(a),
                &nilpotent.vectors.column(b),
            );
            nilpotent_pairwise_residual = nilpotent_pairwise_residual.max(coeff_norm(&w.view()));
        }
    }

    let mut nilpotent_killing_residual = 0.0f64;
    for a in 0..nilpotent.dim() {
        let kw = tensor.killing.dot(&nilpotent.vectors.column(a));
        nilpotent_killing_residual =
            nilpotent_killing_residual.max(kw.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }

    let mut radical_ideal_residual = 0.0f64;
    for a in 0..n {
        let ea = unit_coeff(n, a);
        for r in 0..rdim {
            let w = tensor.commutator_coords(&ea.view(), &radical.vectors.column(r));
            radical_ideal_residual = radical_ideal_residual.max(radical.distance(&w.view()));
        }
    }

    let left = sl_block(tensor, ElementKind::Left);
    let right = sl_block(tensor, ElementKind::Right);
    for v in left.iter().chain(right.iter()) {
        // Diagonal entries of a traceless block vector must cancel.
        let mut trace = C64::new(0.0, 0.0);
        for (idx, z) in v.iter().enumerate() {
            let label = tensor.labels[idx];
            if label.i == label.j && label.kind != ElementKind::Lowering {
                trace += z;
            }
        }
        if trace.norm() > 1e-12 {
            return Err(Error::DegenerateKilling { ideal: "traceless", ratio: trace.norm() });
        }
    }

    let mut mutual_commutator_residual = 0.0f64;
    for x in &left {
        for y in &right {
            let w = tensor.commutator_coords(&x.view(), &y.view());
            mutual_commutator_residual = mutual_commutator_residual.max(coeff_norm(&w.view()));
        }
    }

    let sum_left = number_sum(tensor, ElementKind::Left);
    let sum_right = number_sum(tensor, ElementKind::Right);
    let mut abelian_commutator_residual = 0.0f64;
    for s in [&sum_left, &sum_right] {
        for v in left.iter().chain(right.iter()) {
            let w = tensor.commutator_coords(&s.view(), &v.view());
            abelian_commutator_residual = abelian_commutator_residual.max(coeff_norm(&w.view()));
        }
    }

    let mut complement_residual = 0.0f64;
    for v in left.iter().chain(right.iter()) {
        complement_residual = complement_residual.max(radical.overlap(&v.view()));
    }
    let abelian_in_radical_residual = radical
        .distance(&sum_left.view())
        .max(radical.distance(&sum_right.view()));

    let left_killing_gap = restricted_killing_gap(tensor, &left, "ket-side")?;
    let right_killing_gap = restricted_killing_gap(tensor, &right, "bra-side")?;

    Ok(DecompositionReport {
        n_modes: tensor.n_modes,
        total_dim: n,
        derived_dim: derived.dim(),
        radical_dim: rdim,
        nilpotent_dim: nilpotent.dim(),
        abelian_dim: rdim - nilpotent.dim(),
        left_dim: left.len(),
        right_dim: right.len(),
        closure_residual: tensor.closure_residual,
        jacobi_residual: tensor.jacobi_residual(),
        mutual_commutator_residual,
        abelian_commutator_residual,
        nilpotent_pairwise_residual,
        nilpotent_killing_residual,
        radical_ideal_residual,
        complement_residual,
        abelian_in_radical_residual,
        killing_signature: killing_signature(tensor)?,
        left_killing_gap,
        right_killing_gap,
    })
}

/// Full pipeline for one chain size: basis, constants, radical,
/// classification.
pub fn decomposition_report(n_modes: usize) -> Result<DecompositionReport> {
    let basis = quadratic_basis(n_modes)?;
    let tensor = structure_constants(&basis)?;
    let rad = radical(&tensor)?;
    classify_semisimple(&tensor, &rad)
}

/// Killing norm of the ket-side simple generator with the instantaneous
/// evolution coefficients of a two-mode chain.
///
/// The value is the complex bilinear extension of the Killing form. For
/// equal mode frequencies it is real and crosses zero exactly where the
/// mode spectrum switches between an oscillating pair and a pair of
/// pure decay rates.
pub fn killing_norm_semisimple(params: &SystemParams, t: f64) -> Result<C64> {
    let split = split_liouvillian(params, t)?;
    let basis = quadratic_basis(2)?;
    let tensor = structure_constants(&basis)?;
    let n = tensor.dim();
    let mut z = Array1::<C64>::zeros(n);
    z[basis.index_of(ElementKind::Left, 0, 1)] = split.k_plus;
    z[basis.index_of(ElementKind::Left, 1, 0)] = split.k_minus;
    z[basis.index_of(ElementKind::Left, 0, 0)] = split.k_zero;
    z[basis.index_of(ElementKind::Left, 1, 1)] = -split.k_zero;
    let kz = tensor.killing.dot(&z);
    Ok(z.dot(&kz))
}
