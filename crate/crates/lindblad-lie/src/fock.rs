//! Truncated multimode Fock space: basis enumeration, ladder-operator
//! matrices, density matrices, and the photon-counting observables.
//!
//! Truncation keeps every number state with *total* excitation up to
//! `max_total`. Loss-only dynamics never raises the total excitation, so
//! a basis that holds the initial state holds the entire trajectory and
//! the truncation is exact rather than approximate.

use crate::{C64, Error, Result};
use ndarray::prelude::*;
use std::collections::HashMap;
use std::sync::Arc;

/// Number-state basis of `n_modes` oscillators truncated at total
/// excitation `max_total`, ordered by ascending total and then
/// lexicographically by occupation vector. The ordering groups each
/// total-excitation layer into a contiguous index block.
#[derive(Debug)]
pub struct FockBasis {
    n_modes: usize,
    max_total: u32,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    layer_offsets: Vec<usize>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.n_modes == other.n_modes && self.max_total == other.max_total
    }
}
impl Eq for FockBasis {}

impl FockBasis {
    /// Enumerates the basis.
    ///
    /// *Panics* if `n_modes == 0`.
    pub fn new(n_modes: usize, max_total: u32) -> Self {
        assert!(n_modes >= 1, "need at least one mode");
        let mut states = Vec::new();
        let mut layer_offsets = Vec::with_capacity(max_total as usize + 2);
        for total in 0..=max_total {
            layer_offsets.push(states.len());
            let mut occ = vec![0u32; n_modes];
            enumerate_layer(&mut occ, 0, total, &mut states);
        }
        layer_offsets.push(states.len());
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        FockBasis { n_modes, max_total, states, index, layer_offsets }
    }

    /// Convenience wrapper for the shared-ownership form the rest of the
    /// crate passes around.
    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn max_total(&self) -> u32 {
        self.max_total
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn states(&self) -> impl Iterator<Item = &[u32]> {
        self.states.iter().map(|s| s.as_slice())
    }

    /// Index of an occupation vector, if it is inside the truncation.
    pub fn index_of(&self, occ: &[u32]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Total excitation of basis state `i`.
    pub fn total(&self, i: usize) -> u32 {
        self.states[i].iter().sum()
    }

    /// Contiguous index range of the states with total excitation `k`.
    pub fn layer(&self, k: u32) -> std::ops::Range<usize> {
        assert!(k <= self.max_total, "layer beyond truncation");
        self.layer_offsets[k as usize]..self.layer_offsets[k as usize + 1]
    }

    /// Index range of the highest kept layer.
    pub fn top_layer(&self) -> std::ops::Range<usize> {
        self.layer(self.max_total)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes {
            return Err(Error::ModeIndexOutOfRange { index: mode, n_modes: self.n_modes });
        }
        Ok(())
    }
}

fn enumerate_layer(occ: &mut Vec<u32>, mode: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
    if mode == occ.len() - 1 {
        occ[mode] = remaining;
        out.push(occ.clone());
        occ[mode] = 0;
        return;
    }
    for n in 0..=remaining {
        occ[mode] = n;
        enumerate_layer(occ, mode + 1, remaining - n, out);
    }
    occ[mode] = 0;
}

/// What a [`ModeOperator`] matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Annihilation(usize),
    Creation(usize),
    Number(usize),
    Composite,
}

/// A single-mode ladder or number operator represented on a [`FockBasis`].
#[derive(Debug, Clone)]
pub struct ModeOperator {
    basis: Arc<FockBasis>,
    kind: OperatorKind,
    m: Array2<C64>,
}

impl ModeOperator {
    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.m
    }

    /// Conjugate transpose, kind tracked where it stays meaningful.
    pub fn dagger(&self) -> ModeOperator {
        let kind = match self.kind {
            OperatorKind::Annihilation(k) => OperatorKind::Creation(k),
            OperatorKind::Creation(k) => OperatorKind::Annihilation(k),
            OperatorKind::Number(k) => OperatorKind::Number(k),
            OperatorKind::Composite => OperatorKind::Composite,
        };
        ModeOperator { basis: self.basis.clone(), kind, m: crate::linalg::dagger(&self.m.view()) }
    }

    /// Wraps an arbitrary matrix on the given basis.
    pub fn composite(basis: Arc<FockBasis>, m: Array2<C64>) -> Result<ModeOperator> {
        if m.nrows() != basis.dim() || m.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch {
                context: format!("operator {}x{} on basis of dim {}", m.nrows(), m.ncols(), basis.dim()),
            });
        }
        Ok(ModeOperator { basis, kind: OperatorKind::Composite, m })
    }
}

/// Annihilation operator of one mode: <n - e_k| a_k |n> = sqrt(n_k).
/// Rows that would land above the truncation simply do not exist, which
/// makes the adjoint map the top layer to zero.
pub fn annihilation(basis: &Arc<FockBasis>, mode: usize) -> Result<ModeOperator> {
    basis.check_mode(mode)?;
    let d = basis.dim();
    let mut m = Array2::zeros((d, d));
    for (col, occ) in basis.states.iter().enumerate() {
        if occ[mode] == 0 {
            continue;
        }
        let mut lower = occ.clone();
        lower[mode] -= 1;
        let row = basis.index_of(&lower).expect("lowering stays inside the truncation");
        m[[row, col]] = C64::new(f64::from(occ[mode]).sqrt(), 0.0);
    }
    Ok(ModeOperator { basis: basis.clone(), kind: OperatorKind::Annihilation(mode), m })
}

/// Creation operator, the adjoint of [`annihilation`].
pub fn creation(basis: &Arc<FockBasis>, mode: usize) -> Result<ModeOperator> {
    Ok(annihilation(basis, mode)?.dagger())
}

/// Number operator of one mode (diagonal).
pub fn number(basis: &Arc<FockBasis>, mode: usize) -> Result<ModeOperator> {
    basis.check_mode(mode)?;
    let d = basis.dim();
    let mut m = Array2::zeros((d, d));
    for (i, occ) in basis.states.iter().enumerate() {
        m[[i, i]] = C64::new(f64::from(occ[mode]), 0.0);
    }
    Ok(ModeOperator { basis: basis.clone(), kind: OperatorKind::Number(mode), m })
}

/// Validation thresholds applied when a matrix is promoted to a
/// [`DensityMatrix`]. Construction from user input is strict; matrices
/// coming out of a solver carry integration error and get looser nets,
/// with the tight bounds asserted in the test suite instead.
#[derive(Debug, Clone, Copy)]
pub struct StateCheck {
    /// Max allowed deviation from Hermiticity before rejection.
    pub herm_tol: f64,
    /// Max allowed |trace - expected| slack above 1 and below 0.
    pub trace_tol: f64,
    /// Most negative admissible eigenvalue.
    pub psd_tol: f64,
}

impl StateCheck {
    pub fn strict() -> Self {
        StateCheck { herm_tol: 1e-12, trace_tol: 1e-12, psd_tol: 1e-10 }
    }

    pub fn evolved() -> Self {
        StateCheck { herm_tol: 1e-8, trace_tol: 1e-7, psd_tol: 1e-7 }
    }
}

/// Density matrix on a truncated Fock basis. Hermitian within tolerance
/// (then symmetrized exactly), positive semidefinite within tolerance,
/// trace in [0, 1] within tolerance.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    basis: Arc<FockBasis>,
    m: Array2<C64>,
}

impl DensityMatrix {
    /// Strictly validated construction for user-supplied states.
    pub fn new(basis: Arc<FockBasis>, m: Array2<C64>) -> Result<Self> {
        Self::with_check(basis, m, StateCheck::strict())
    }

    /// Construction with explicit tolerances; used by the solvers for
    /// evolved states.
    pub fn with_check(basis: Arc<FockBasis>, m: Array2<C64>, check: StateCheck) -> Result<Self> {
        let d = basis.dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: format!("state {}x{} on basis of dim {}", m.nrows(), m.ncols(), d),
            });
        }
        let herm = crate::linalg::hermiticity_residual(&m.view());
        if herm > check.herm_tol {
            return Err(Error::InvalidState {
                reason: format!("hermiticity residual {herm:.3e} exceeds {:.1e}", check.herm_tol),
            });
        }
        let mut sym = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                sym[[i, j]] = 0.5 * (m[[i, j]] + m[[j, i]].conj());
            }
        }
        let tr: C64 = (0..d).map(|i| sym[[i, i]]).sum();
        if tr.re < -check.trace_tol || tr.re > 1.0 + check.trace_tol || tr.im.abs() > check.trace_tol {
            return Err(Error::InvalidState {
                reason: format!("trace {:.6e}{:+.2e}i outside [0, 1]", tr.re, tr.im),
            });
        }
        let eigs = crate::linalg::eigh_values(&sym.view())?;
        let min_eig = eigs.first().copied().unwrap_or(0.0);
        if min_eig < -check.psd_tol {
            return Err(Error::InvalidState {
                reason: format!("smallest eigenvalue {min_eig:.3e} below -{:.1e}", check.psd_tol),
            });
        }
        Ok(DensityMatrix { basis, m: sym })
    }

    /// Pure number state |occ><occ|.
    pub fn fock_state(basis: Arc<FockBasis>, occ: &[u32]) -> Result<Self> {
        if occ.len() != basis.n_modes() {
            return Err(Error::DimensionMismatch {
                context: format!("{} occupations for {} modes", occ.len(), basis.n_modes()),
            });
        }
        let i = basis.index_of(occ).ok_or_else(|| Error::InvalidState {
            reason: format!(
                "occupation {occ:?} exceeds total-excitation truncation {}",
                basis.max_total()
            ),
        })?;
        let d = basis.dim();
        let mut m = Array2::zeros((d, d));
        m[[i, i]] = C64::new(1.0, 0.0);
        Ok(DensityMatrix { basis, m })
    }

    /// Statistical mixture of number states; weights must be nonnegative
    /// and sum to one within 1e-12.
    pub fn mixture(basis: Arc<FockBasis>, terms: &[(f64, Vec<u32>)]) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidState { reason: "empty mixture".into() });
        }
        let mut total = 0.0;
        let d = basis.dim();
        let mut m = Array2::zeros((d, d));
        for (w, occ) in terms {
            if *w < 0.0 {
                return Err(Error::InvalidState { reason: format!("negative weight {w}") });
            }
            total += w;
            let pure = DensityMatrix::fock_state(basis.clone(), occ)?;
            m = m + pure.m.mapv(|z| z * *w);
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState {
                reason: format!("mixture weights sum to {total}, expected 1"),
            });
        }
        Ok(DensityMatrix { basis, m })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        (0..self.basis.dim()).map(|i| self.m[[i, i]].re).sum()
    }

    /// Purity tr(rho^2); for Hermitian rho this is the squared Frobenius
    /// norm.
    pub fn purity(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Mode occupation <a_k^dag a_k> = tr(n_k rho). The number operator is
/// diagonal, so this is a weighted diagonal sum; any imaginary residual
/// beyond 1e-9 marks a corrupted state.
pub fn number_expectation(rho: &DensityMatrix, mode: usize) -> Result<f64> {
    rho.basis.check_mode(mode)?;
    let mut z = C64::new(0.0, 0.0);
    for (i, occ) in rho.basis.states.iter().enumerate() {
        z += f64::from(occ[mode]) * rho.m[[i, i]];
    }
    if z.im.abs() > 1e-9 {
        return Err(Error::NonRealObservable { value: z });
    }
    Ok(z.re)
}

/// Two-mode coincidence rate tr(a_i^dag a_j^dag a_i a_j rho). For i != j
/// the operator is n_i n_j; for i == j it is n_i(n_i - 1).
pub fn coincidence(rho: &DensityMatrix, mode_i: usize, mode_j: usize) -> Result<f64> {
    rho.basis.check_mode(mode_i)?;
    rho.basis.check_mode(mode_j)?;
    let mut z = C64::new(0.0, 0.0);
    for (idx, occ) in rho.basis.states.iter().enumerate() {
        let weight = if mode_i == mode_j {
            f64::from(occ[mode_i]) * (f64::from(occ[mode_i]) - 1.0)
        } else {
            f64::from(occ[mode_i]) * f64::from(occ[mode_j])
        };
        z += weight * rho.m[[idx, idx]];
    }
    if z.im.abs() > 1e-9 {
        return Err(Error::NonRealObservable { value: z });
    }
    if z.re < -1e-10 {
        return Err(Error::NonRealObservable { value: z });
    }
    Ok(z.re)
}

/// Conditions the state on finding the full `max_total` excitation, i.e.
/// on no photon having been lost. Returns the renormalized conditional
/// state (supported on the top layer) together with the success
/// probability. Fails if essentially all population has decayed away.
pub fn postselect_top_layer(rho: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    let d = rho.basis.dim();
    let top = rho.basis.top_layer();
    let mut block = Array2::zeros((d, d));
    let mut p = 0.0;
    for i in top.clone() {
        p += rho.m[[i, i]].re;
        for j in top.clone() {
            block[[i, j]] = rho.m[[i, j]];
        }
    }
    if p < 1e-14 {
        return Err(Error::FullyDecayed { prob: p });
    }
    let cond = block.mapv(|z| z / p);
    let state = DensityMatrix::with_check(rho.basis.clone(), cond, StateCheck::evolved())?;
    Ok((state, p))
}
