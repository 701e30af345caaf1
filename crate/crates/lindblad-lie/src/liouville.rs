//! Liouville space: column-stacking vectorization, left and right
//! multiplication superoperators, time-dependent system parameters, and
//! the two independent assemblies of the master-equation generator.
//!
//! Vectorization is column stacking, `v[i + d*j] = rho[i, j]`, so that
//! `vec(A X B) = (B^T kron A) vec(X)`. Everything downstream (the
//! eigendecomposition, the exponential-product solver, the structure
//! analysis) lives in this convention.

use crate::fock::FockBasis;
use crate::{C64, Error, Result};
use ndarray::linalg::kron;
use ndarray::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// A real-valued control parameter, either fixed or piecewise-linear in
/// time. Piecewise schedules clamp to their end values outside the node
/// range.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Schedule {
    Constant(f64),
    PiecewiseLinear { times: Vec<f64>, values: Vec<f64> },
}

impl Schedule {
    pub fn is_constant(&self) -> bool {
        match self {
            Schedule::Constant(_) => true,
            Schedule::PiecewiseLinear { values, .. } => {
                values.windows(2).all(|w| w[0] == w[1])
            }
        }
    }

    /// Smallest value the schedule ever takes. Linear interpolation stays
    /// within the node values, so checking nodes suffices.
    pub fn min_value(&self) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::PiecewiseLinear { values, .. } => {
                values.iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::PiecewiseLinear { times, values } => {
                if t <= times[0] {
                    return values[0];
                }
                if t >= times[times.len() - 1] {
                    return values[values.len() - 1];
                }
                // partition_point > 0 because t > times[0].
                let hi = times.partition_point(|&x| x <= t);
                let (t0, t1) = (times[hi - 1], times[hi]);
                let (v0, v1) = (values[hi - 1], values[hi]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if let Schedule::PiecewiseLinear { times, values } = self {
            if times.is_empty() || times.len() != values.len() {
                return Err(Error::InvalidParams {
                    reason: format!(
                        "schedule for {name}: {} times vs {} values",
                        times.len(),
                        values.len()
                    ),
                });
            }
            if !times.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidParams {
                    reason: format!("schedule for {name}: times must increase strictly"),
                });
            }
            if times.iter().chain(values.iter()).any(|x| !x.is_finite()) {
                return Err(Error::InvalidParams {
                    reason: format!("schedule for {name}: non-finite entry"),
                });
            }
        } else if let Schedule::Constant(v) = self {
            if !v.is_finite() {
                return Err(Error::InvalidParams {
                    reason: format!("schedule for {name}: non-finite value"),
                });
            }
        }
        Ok(())
    }
}

/// Parameters of a linear chain of lossy oscillators: detunings
/// `sigma[k]`, loss rates `gamma[k]` (nonnegative at all times), and
/// nearest-neighbor couplings `kappa[k]` between modes `k` and `k + 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemParams {
    pub sigma: Vec<Schedule>,
    pub gamma: Vec<Schedule>,
    pub kappa: Vec<Schedule>,
}

/// Parameter values frozen at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamsAt {
    pub sigma: Vec<f64>,
    pub gamma: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl SystemParams {
    pub fn new(sigma: Vec<Schedule>, gamma: Vec<Schedule>, kappa: Vec<Schedule>) -> Result<Self> {
        let p = SystemParams { sigma, gamma, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn constant(sigma: &[f64], gamma: &[f64], kappa: &[f64]) -> Result<Self> {
        SystemParams::new(
            sigma.iter().map(|&v| Schedule::Constant(v)).collect(),
            gamma.iter().map(|&v| Schedule::Constant(v)).collect(),
            kappa.iter().map(|&v| Schedule::Constant(v)).collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.sigma.len();
        if n == 0 {
            return Err(Error::InvalidParams { reason: "need at least one mode".into() });
        }
        if self.gamma.len() != n || self.kappa.len() + 1 != n {
            return Err(Error::InvalidParams {
                reason: format!(
                    "inconsistent lengths: {} detunings, {} losses, {} couplings",
                    n,
                    self.gamma.len(),
                    self.kappa.len()
                ),
            });
        }
        for (k, s) in self.sigma.iter().enumerate() {
            s.validate(&format!("sigma[{k}]"))?;
        }
        for (k, s) in self.gamma.iter().enumerate() {
            s.validate(&format!("gamma[{k}]"))?;
            if s.min_value() < 0.0 {
                return Err(Error::InvalidParams {
                    reason: format!("gamma[{k}] takes negative value {}", s.min_value()),
                });
            }
        }
        for (k, s) in self.kappa.iter().enumerate() {
            s.validate(&format!("kappa[{k}]"))?;
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_constant(&self) -> bool {
        self.sigma
            .iter()
            .chain(self.gamma.iter())
            .chain(self.kappa.iter())
            .all(Schedule::is_constant)
    }

    pub fn at(&self, t: f64) -> ParamsAt {
        ParamsAt {
            sigma: self.sigma.iter().map(|s| s.eval(t)).collect(),
            gamma: self.gamma.iter().map(|s| s.eval(t)).collect(),
            kappa: self.kappa.iter().map(|s| s.eval(t)).collect(),
        }
    }
}

/// Column-stacking vectorization.
pub fn vectorize(rho: &ArrayView2<C64>) -> Array1<C64> {
    let d = rho.nrows();
    Array1::from_shape_fn(d * d, |n| rho[[n % d, n / d]])
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &ArrayView1<C64>, d: usize) -> Result<Array2<C64>> {
    if v.len() != d * d {
        return Err(Error::DimensionMismatch {
            context: format!("vector of length {} for {d}x{d} matrix", v.len()),
        });
    }
    Ok(Array2::from_shape_fn((d, d), |(i, j)| v[i + d * j]))
}

/// Superoperator of left multiplication: `vec(O X) = left_super(O) vec(X)`.
pub fn left_super(o: &ArrayView2<C64>) -> Array2<C64> {
    kron(&crate::linalg::identity(o.nrows()).view(), o)
}

/// Superoperator of right multiplication: `vec(X O) = right_super(O) vec(X)`.
/// Uses the unconjugated transpose.
pub fn right_super(o: &ArrayView2<C64>) -> Array2<C64> {
    kron(&o.t(), &crate::linalg::identity(o.nrows()).view())
}

/// Hilbert-Schmidt inner product tr(A^dag B) of two vectorized operators.
pub fn liouville_inner(a: &ArrayView1<C64>, b: &ArrayView1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// The four families of ladder superoperators of each mode, as matrices
/// on the vectorized space. `lm`/`lp` multiply by `a_k` / `a_k^dag` from
/// the left; `rm`/`rp` multiply by `a_k^dag` / `a_k` from the right, so
/// `rm` lowers and `rp` raises the bra-side index.
pub struct LadderSupers {
    pub lm: Vec<Array2<C64>>,
    pub lp: Vec<Array2<C64>>,
    pub rm: Vec<Array2<C64>>,
    pub rp: Vec<Array2<C64>>,
}

pub fn ladder_supers(basis: &Arc<FockBasis>) -> Result<LadderSupers> {
    let n = basis.n_modes();
    let mut lm = Vec::with_capacity(n);
    let mut lp = Vec::with_capacity(n);
    let mut rm = Vec::with_capacity(n);
    let mut rp = Vec::with_capacity(n);
    for k in 0..n {
        let a = crate::fock::annihilation(basis, k)?;
        let ad = a.dagger();
        lm.push(left_super(&a.matrix().view()));
        lp.push(left_super(&ad.matrix().view()));
        rm.push(right_super(&ad.matrix().view()));
        rp.push(right_super(&a.matrix().view()));
    }
    Ok(LadderSupers { lm, lp, rm, rp })
}

fn check_param_modes(basis: &FockBasis, p: &ParamsAt) -> Result<()> {
    if p.sigma.len() != basis.n_modes() || p.gamma.len() != basis.n_modes() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "{} detunings / {} losses for {} modes",
                p.sigma.len(),
                p.gamma.len(),
                basis.n_modes()
            ),
        });
    }
    if p.kappa.len() + 1 != basis.n_modes() {
        return Err(Error::DimensionMismatch {
            context: format!("{} couplings for {} modes", p.kappa.len(), basis.n_modes()),
        });
    }
    Ok(())
}

/// Chain Hamiltonian on the truncated Fock space:
/// sum_k sigma_k n_k + sum_k kappa_k (a_k^dag a_{k+1} + a_k a_{k+1}^dag).
pub fn build_hamiltonian(basis: &Arc<FockBasis>, p: &ParamsAt) -> Result<Array2<C64>> {
    check_param_modes(basis, p)?;
    let d = basis.dim();
    let mut h = Array2::<C64>::zeros((d, d));
    for k in 0..basis.n_modes() {
        let nk = crate::fock::number(basis, k)?;
        h = h + nk.matrix().mapv(|z| z * p.sigma[k]);
    }
    for k in 0..p.kappa.len() {
        let ak = crate::fock::annihilation(basis, k)?;
        let ak1 = crate::fock::annihilation(basis, k + 1)?;
        let hop = ak.dagger().matrix().dot(ak1.matrix());
        let hop = &hop + &crate::linalg::dagger(&hop.view());
        h = h + hop.mapv(|z| z * p.kappa[k]);
    }
    Ok(h)
}

/// Non-Hermitian effective Hamiltonian H - i sum_k gamma_k n_k on the
/// truncated Fock space. Generates the no-loss-conditioned evolution.
pub fn effective_hamiltonian_fock(basis: &Arc<FockBasis>, p: &ParamsAt) -> Result<Array2<C64>> {
    let mut h = build_hamiltonian(basis, p)?;
    for k in 0..basis.n_modes() {
        let nk = crate::fock::number(basis, k)?;
        h = h + nk.matrix().mapv(|z| z * C64::new(0.0, -p.gamma[k]));
    }
    Ok(h)
}

/// One-excitation matrix of the effective Hamiltonian: tridiagonal,
/// complex symmetric, diagonal sigma_k - i gamma_k, off-diagonal kappa_k.
pub fn heff_matrix(p: &ParamsAt) -> Array2<C64> {
    let n = p.sigma.len();
    let mut m = Array2::zeros((n, n));
    for k in 0..n {
        m[[k, k]] = C64::new(p.sigma[k], -p.gamma[k]);
    }
    for k in 0..p.kappa.len() {
        m[[k, k + 1]] = C64::new(p.kappa[k], 0.0);
        m[[k + 1, k]] = C64::new(p.kappa[k], 0.0);
    }
    m
}

/// Master-equation generator assembled the direct way: commutator with
/// the Hamiltonian plus one dissipator per mode,
/// `-i(left(H) - right(H)) + sum_k gamma_k (2 left(a_k) right(a_k^dag)
///  - left(n_k) - right(n_k))`.
pub fn direct_liouvillian(basis: &Arc<FockBasis>, p: &ParamsAt) -> Result<Array2<C64>> {
    let h = build_hamiltonian(basis, p)?;
    let i = C64::new(0.0, 1.0);
    let mut l = (left_super(&h.view()) - right_super(&h.view())).mapv(|z| -i * z);
    for k in 0..basis.n_modes() {
        let a = crate::fock::annihilation(basis, k)?;
        let nk = crate::fock::number(basis, k)?;
        let jump = left_super(&a.matrix().view()).dot(&right_super(&a.dagger().matrix().view()));
        let anti = left_super(&nk.matrix().view()) + right_super(&nk.matrix().view());
        l = l + (jump.mapv(|z| 2.0 * z) - anti).mapv(|z| z * p.gamma[k]);
    }
    Ok(l)
}

/// The same generator assembled from products of the ladder
/// superoperators with complex coefficients:
/// `sum_k [ (i sigma_k - gamma_k) rp_k rm_k - (i sigma_k + gamma_k)
///  lp_k lm_k + 2 gamma_k lm_k rm_k ]
///  - sum_k i kappa_k (lp_k lm_{k+1} + lp_{k+1} lm_k - rp_{k+1} rm_k
///  - rp_k rm_{k+1})`.
///
/// Must agree with [`direct_liouvillian`] to machine precision; the test
/// suite pins the two assemblies against each other.
pub fn ladder_liouvillian(basis: &Arc<FockBasis>, p: &ParamsAt) -> Result<Array2<C64>> {
    check_param_modes(basis, p)?;
    let s = ladder_supers(basis)?;
    let d2 = basis.dim() * basis.dim();
    let i = C64::new(0.0, 1.0);
    let mut l = Array2::<C64>::zeros((d2, d2));
    for k in 0..basis.n_modes() {
        let (sig, gam) = (p.sigma[k], p.gamma[k]);
        l = l + s.rp[k].dot(&s.rm[k]).mapv(|z| z * (i * sig - gam));
        l = l - s.lp[k].dot(&s.lm[k]).mapv(|z| z * (i * sig + gam));
        l = l + s.lm[k].dot(&s.rm[k]).mapv(|z| z * (2.0 * gam));
    }
    for k in 0..p.kappa.len() {
        let hop = s.lp[k].dot(&s.lm[k + 1])
            + s.lp[k + 1].dot(&s.lm[k])
            - s.rp[k + 1].dot(&s.rm[k])
            - s.rp[k].dot(&s.rm[k + 1]);
        l = l - hop.mapv(|z| z * (i * p.kappa[k]));
    }
    Ok(l)
}

/// A generator frozen at one instant, tagged with its basis.
pub struct Superoperator {
    basis: Arc<FockBasis>,
    m: Array2<C64>,
}

impl Superoperator {
    pub fn new(basis: Arc<FockBasis>, m: Array2<C64>) -> Result<Self> {
        let d2 = basis.dim() * basis.dim();
        if m.nrows() != d2 || m.ncols() != d2 {
            return Err(Error::DimensionMismatch {
                context: format!("superoperator {}x{} on basis of dim {}", m.nrows(), m.ncols(), basis.dim()),
            });
        }
        Ok(Superoperator { basis, m })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.m
    }

    pub fn apply(&self, v: &ArrayView1<C64>) -> Array1<C64> {
        self.m.dot(v)
    }
}
