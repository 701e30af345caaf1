//! Spectral solver: closed-form eigendecomposition of the generator
//! through ladder superoperators.
//!
//! The non-Hermitian one-excitation matrix (tridiagonal, complex
//! symmetric) is diagonalized once; its eigenvectors, normalized with
//! the unconjugated bilinear form, define raising and lowering
//! superoperators whose repeated action on the vacuum projector builds a
//! complete biorthogonal eigenbasis of the full generator. Evolution is
//! then a sum of exponentials, exact on the truncated space.
//!
//! The construction degenerates where eigenvectors coalesce; such
//! parameter points are detected and refused rather than silently
//! producing garbage.

use crate::fock::{DensityMatrix, FockBasis, StateCheck};
use crate::linalg::eig_small;
use crate::liouville::{
    devectorize, heff_matrix, ladder_supers, liouville_inner, vectorize, SystemParams,
};
use crate::oracle::Trajectory;
use crate::{C64, Error, Result};
use ndarray::prelude::*;
use std::sync::Arc;

/// Condition threshold above which the eigenvector basis is treated as
/// coalesced.
const EP_CONDITION_LIMIT: f64 = 1e8;

/// Eigenvalues and complex-orthogonal mode coefficients of the
/// one-excitation matrix.
#[derive(Debug, Clone)]
pub struct ModeSpectrum {
    /// Single-excitation decay rates, one per mode: eigenvalues of
    /// -i times the one-excitation matrix. Sorted by descending real
    /// part (slowest decay first), then ascending imaginary part.
    pub lambdas: Vec<C64>,
    /// Row i holds the coefficients of mode i, normalized so that the
    /// unconjugated row-by-row product is the identity.
    pub coeffs: Array2<C64>,
    /// max_i 1 / |v_i^T v_i| over unit eigenvectors; grows without bound
    /// toward an exceptional point.
    pub ep_condition: f64,
}

/// Diagonalizes the one-excitation matrix of a constant-parameter chain.
///
/// Fails with [`Error::NearExceptionalPoint`] when eigenvalues collide or
/// an eigenvector becomes self-orthogonal under the bilinear form, and
/// with [`Error::NonConstantParams`] for scheduled parameters.
pub fn heff_spectrum(params: &SystemParams) -> Result<ModeSpectrum> {
    if !params.is_constant() {
        return Err(Error::NonConstantParams);
    }
    let p = params.at(0.0);
    let h = heff_matrix(&p);
    let n = h.nrows();
    let (mus, vecs) = eig_small(&h.view())?;

    let scale = mus.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (mus[i] - mus[j]).norm();
            if gap < 1e-10 * scale {
                return Err(Error::NearExceptionalPoint { condition: scale / gap.max(1e-300) });
            }
        }
    }

    let mut lambdas = Vec::with_capacity(n);
    let mut coeffs = Array2::zeros((n, n));
    let mut ep_condition: f64 = 0.0;
    let minus_i = C64::new(0.0, -1.0);
    for i in 0..n {
        let v = vecs.column(i);
        // Unit 2-norm before measuring bilinear self-orthogonality.
        let norm2 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let u = v.mapv(|z| z / norm2);
        let vtv: C64 = u.iter().map(|z| z * z).sum();
        let cond = 1.0 / vtv.norm().max(1e-300);
        ep_condition = ep_condition.max(cond);
        if cond > EP_CONDITION_LIMIT {
            return Err(Error::NearExceptionalPoint { condition: cond });
        }
        let mut c = u.mapv(|z| z / vtv.sqrt());
        // Sign convention: the largest component has nonnegative real
        // part, breaking the +-c ambiguity deterministically.
        let m = (0..n)
            .max_by(|&a, &b| c[a].norm().partial_cmp(&c[b].norm()).unwrap())
            .expect("nonempty eigenvector");
        let tol = 1e-12 * c[m].norm();
        if c[m].re < -tol || (c[m].re.abs() <= tol && c[m].im < 0.0) {
            c = c.mapv(|z| -z);
        }
        lambdas.push(minus_i * mus[i]);
        coeffs.row_mut(i).assign(&c);
    }

    // Deterministic mode order: slowest decay first.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        (-lambdas[a].re, lambdas[a].im)
            .partial_cmp(&(-lambdas[b].re, lambdas[b].im))
            .unwrap()
    });
    let lambdas: Vec<C64> = order.iter().map(|&i| lambdas[i]).collect();
    let mut sorted = Array2::zeros((n, n));
    for (row, &i) in order.iter().enumerate() {
        sorted.row_mut(row).assign(&coeffs.row(i));
    }
    Ok(ModeSpectrum { lambdas, coeffs: sorted, ep_condition })
}

/// The 4n x 4n matrix of the generator's adjoint action on the span of
/// the ladder superoperators, ordered as the four n-blocks
/// (left-raise, right-lower, right-raise, left-lower). Block triangular,
/// so its spectrum is the union of the four diagonal blocks.
pub fn regular_representation(params: &SystemParams) -> Result<Array2<C64>> {
    if !params.is_constant() {
        return Err(Error::NonConstantParams);
    }
    let p = params.at(0.0);
    let h = heff_matrix(&p);
    let n = h.nrows();
    let i = C64::new(0.0, 1.0);
    let hc = h.mapv(|z| z.conj());
    let mut m = Array2::zeros((4 * n, 4 * n));
    for r in 0..n {
        for c in 0..n {
            m[[r, c]] = -i * h[[r, c]];
            m[[n + r, n + c]] = -i * hc[[r, c]];
            m[[2 * n + r, 2 * n + c]] = i * hc[[r, c]];
            m[[3 * n + r, 3 * n + c]] = i * h[[r, c]];
        }
        // Loss feeds raisers into the opposite-side lowerers.
        m[[n + r, r]] = C64::new(2.0 * p.gamma[r], 0.0);
        m[[3 * n + r, 2 * n + r]] = C64::new(2.0 * p.gamma[r], 0.0);
    }
    Ok(m)
}

/// Eigenvalues of [`regular_representation`], computed block by block:
/// the multiset {lambda_i, -conj(lambda_i), conj(lambda_i), -lambda_i}.
pub fn regular_representation_eigenvalues(params: &SystemParams) -> Result<Vec<C64>> {
    if !params.is_constant() {
        return Err(Error::NonConstantParams);
    }
    let h = heff_matrix(&params.at(0.0));
    let i = C64::new(0.0, 1.0);
    let hc = h.mapv(|z| z.conj());
    let mut out = Vec::with_capacity(4 * h.nrows());
    for block in [
        h.mapv(|z| -i * z),
        hc.mapv(|z| -i * z),
        hc.mapv(|z| i * z),
        h.mapv(|z| i * z),
    ] {
        out.extend(eig_small(&block.view())?.0);
    }
    Ok(out)
}

/// The closure of a mode spectrum: {lambda, -conj(lambda), conj(lambda),
/// -lambda} in block order, for comparison with
/// [`regular_representation_eigenvalues`].
pub fn spectrum_multiset(spec: &ModeSpectrum) -> Vec<C64> {
    let mut out = Vec::with_capacity(4 * spec.lambdas.len());
    out.extend(spec.lambdas.iter().copied());
    out.extend(spec.lambdas.iter().map(|l| -l.conj()));
    out.extend(spec.lambdas.iter().map(|l| l.conj()));
    out.extend(spec.lambdas.iter().map(|l| -*l));
    out
}

/// Ladder superoperators of the eigenmodes on a concrete truncated basis,
/// with everything needed to expand and evolve states.
pub struct LadderSet {
    basis: Arc<FockBasis>,
    spectrum: ModeSpectrum,
    p_plus: Vec<Array2<C64>>,
    p_minus: Vec<Array2<C64>>,
    q_plus: Vec<Array2<C64>>,
    q_minus: Vec<Array2<C64>>,
}

pub fn build_ladder_operators(basis: &Arc<FockBasis>, params: &SystemParams) -> Result<LadderSet> {
    let spectrum = heff_spectrum(params)?;
    let n = basis.n_modes();
    if spectrum.lambdas.len() != n {
        return Err(Error::DimensionMismatch {
            context: format!("{}-mode parameters on {}-mode basis", spectrum.lambdas.len(), n),
        });
    }
    let s = ladder_supers(basis)?;
    let d2 = basis.dim() * basis.dim();
    let mut p_plus = Vec::with_capacity(n);
    let mut p_minus = Vec::with_capacity(n);
    let mut q_plus = Vec::with_capacity(n);
    let mut q_minus = Vec::with_capacity(n);
    for i in 0..n {
        let mut pp = Array2::<C64>::zeros((d2, d2));
        let mut pm = Array2::<C64>::zeros((d2, d2));
        let mut qp = Array2::<C64>::zeros((d2, d2));
        let mut qm = Array2::<C64>::zeros((d2, d2));
        for k in 0..n {
            let c = spectrum.coeffs[[i, k]];
            let cc = c.conj();
            pp = pp + (&s.lp[k] - &s.rm[k]).mapv(|z| z * c);
            pm = pm + s.lm[k].mapv(|z| z * c);
            qp = qp + (&s.rp[k] - &s.lm[k]).mapv(|z| z * cc);
            qm = qm + s.rm[k].mapv(|z| z * cc);
        }
        p_plus.push(pp);
        p_minus.push(pm);
        q_plus.push(qp);
        q_minus.push(qm);
    }
    Ok(LadderSet { basis: basis.clone(), spectrum, p_plus, p_minus, q_plus, q_minus })
}

fn multi_factorial(occ: &[u32]) -> f64 {
    occ.iter()
        .map(|&n| (1..=n).map(f64::from).product::<f64>())
        .product()
}

impl LadderSet {
    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn spectrum(&self) -> &ModeSpectrum {
        &self.spectrum
    }

    pub fn p_plus(&self, i: usize) -> &Array2<C64> {
        &self.p_plus[i]
    }

    pub fn p_minus(&self, i: usize) -> &Array2<C64> {
        &self.p_minus[i]
    }

    pub fn q_plus(&self, i: usize) -> &Array2<C64> {
        &self.q_plus[i]
    }

    pub fn q_minus(&self, i: usize) -> &Array2<C64> {
        &self.q_minus[i]
    }

    /// Stationary state: the vacuum projector, annihilated by every
    /// lowering superoperator.
    pub fn ground_state(&self) -> Array1<C64> {
        let d = self.basis.dim();
        let mut v = Array1::zeros(d * d);
        let vac = self.basis.layer(0).start;
        v[vac + d * vac] = C64::new(1.0, 0.0);
        v
    }

    fn check_multiindex(&self, occ: &[u32]) -> Result<()> {
        if occ.len() != self.basis.n_modes() {
            return Err(Error::DimensionMismatch {
                context: format!("{} mode indices for {} modes", occ.len(), self.basis.n_modes()),
            });
        }
        if occ.iter().sum::<u32>() > self.basis.max_total() {
            return Err(Error::InvalidState {
                reason: format!(
                    "multi-index {occ:?} exceeds truncation {}",
                    self.basis.max_total()
                ),
            });
        }
        Ok(())
    }

    /// Right eigenstate labeled by raising multi-indices `alpha` (bra-ket
    /// excitations of the decaying modes) and `beta` (their conjugates):
    /// normalized repeated raising of the stationary state. The conjugate
    /// raisers act first; both orders stay inside the truncation, this
    /// one provably so.
    pub fn ladder_state(&self, alpha: &[u32], beta: &[u32]) -> Result<Array1<C64>> {
        self.check_multiindex(alpha)?;
        self.check_multiindex(beta)?;
        let mut v = self.ground_state();
        for (i, &b) in beta.iter().enumerate() {
            for _ in 0..b {
                v = self.q_plus[i].dot(&v);
            }
        }
        for (i, &a) in alpha.iter().enumerate() {
            for _ in 0..a {
                v = self.p_plus[i].dot(&v);
            }
        }
        let norm = (multi_factorial(alpha) * multi_factorial(beta)).sqrt();
        Ok(v.mapv(|z| z / norm))
    }

    /// Left (dual) eigenstate as an adjoint vector: overlaps are taken
    /// with [`liouville_inner`], so `inner(dual, state)` is biorthonormal
    /// against [`Self::ladder_state`]. Built by raising the trace
    /// functional with the adjoints of the lowering superoperators.
    pub fn dual_state(&self, alpha: &[u32], beta: &[u32]) -> Result<Array1<C64>> {
        self.check_multiindex(alpha)?;
        self.check_multiindex(beta)?;
        let d = self.basis.dim();
        let mut w = vectorize(&crate::linalg::identity(d).view());
        for (i, &a) in alpha.iter().enumerate() {
            for _ in 0..a {
                w = dagger_dot(&self.p_minus[i], &w);
            }
        }
        for (i, &b) in beta.iter().enumerate() {
            for _ in 0..b {
                w = dagger_dot(&self.q_minus[i], &w);
            }
        }
        let norm = (multi_factorial(alpha) * multi_factorial(beta)).sqrt();
        Ok(w.mapv(|z| z / norm))
    }

    /// Decay exponent of the labeled eigenstate:
    /// alpha . lambda + beta . conj(lambda).
    pub fn eigenvalue(&self, alpha: &[u32], beta: &[u32]) -> C64 {
        let mut z = C64::new(0.0, 0.0);
        for (i, l) in self.spectrum.lambdas.iter().enumerate() {
            z += f64::from(alpha[i]) * l + f64::from(beta[i]) * l.conj();
        }
        z
    }
}

/// a^dag . w without forming the adjoint matrix.
fn dagger_dot(a: &Array2<C64>, w: &Array1<C64>) -> Array1<C64> {
    let n = a.ncols();
    let mut out = Array1::zeros(n);
    for j in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..a.nrows() {
            acc += a[[i, j]].conj() * w[i];
        }
        out[j] = acc;
    }
    out
}

/// Evolves a state by spectral expansion: expand the initial state over
/// the biorthogonal ladder basis once, then sum decaying exponentials at
/// each query time. Constant parameters only, and refused near
/// exceptional points where the expansion loses completeness.
pub fn evolve_eigendecomposition(
    params: &SystemParams,
    rho0: &DensityMatrix,
    t_grid: &[f64],
) -> Result<Trajectory> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParams { reason: "empty time grid".into() });
    }
    if !t_grid.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::InvalidParams { reason: "time grid must be nondecreasing".into() });
    }
    let basis = rho0.basis().clone();
    let set = build_ladder_operators(&basis, params)?;
    let v0 = vectorize(&rho0.matrix().view());
    let d = basis.dim();

    // One (state, exponent, weight) triple per label pair.
    let labels: Vec<Vec<u32>> = basis.states().map(|s| s.to_vec()).collect();
    let mut terms: Vec<(Array1<C64>, C64, C64)> = Vec::with_capacity(d * d);
    for alpha in &labels {
        for beta in &labels {
            let state = set.ladder_state(alpha, beta)?;
            let dual = set.dual_state(alpha, beta)?;
            let weight = liouville_inner(&dual.view(), &v0.view());
            terms.push((state, set.eigenvalue(alpha, beta), weight));
        }
    }

    let t0 = t_grid[0];
    let mut states = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let tau = t - t0;
        let mut v = Array1::<C64>::zeros(d * d);
        for (state, exponent, weight) in &terms {
            let amp = *weight * (*exponent * tau).exp();
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            v.zip_mut_with(state, |o, s| *o += amp * s);
        }
        let rho = devectorize(&v.view(), d)?;
        states.push(DensityMatrix::with_check(basis.clone(), rho, StateCheck::evolved())?);
    }
    Ok(Trajectory { times: t_grid.to_vec(), states })
}

/// Two-photon coincidence after simultaneous single-photon injection
/// into both modes of a two-mode chain with loss on the first mode only
/// and no detuning. Closed form in the coupling `kappa` and loss
/// `gamma`; the discriminant 4 kappa^2 - gamma^2 may take either sign,
/// and a series expansion covers its neighborhood of zero.
pub fn coincidence_closed_form(kappa: f64, gamma: f64, t: f64) -> f64 {
    let u = 4.0 * kappa * kappa - gamma * gamma;
    let ratio = if u.abs() * t * t < 1e-3 {
        // (gamma^2 - 4k^2 cos(t sqrt(u))) / u expanded about u = 0.
        let t2 = t * t;
        -1.0 + 4.0 * kappa * kappa * (t2 / 2.0 - u * t2 * t2 / 24.0 + u * u * t2 * t2 * t2 / 720.0)
    } else {
        let root = C64::new(u, 0.0).sqrt();
        let num = C64::new(gamma * gamma, 0.0)
            - 4.0 * kappa * kappa * (root * t).cos();
        // Real by construction: u real, cos of real-or-imaginary argument.
        (num / u).re
    };
    (-2.0 * gamma * t).exp() * ratio * ratio
}

/// Location and depth of the first coincidence dip: the first local
/// minimum of [`coincidence_closed_form`] in time, found by scan and
/// golden-section refinement. Returns `(t_dip, coincidence_min)`.
pub fn hom_dip(kappa: f64, gamma: f64, resolution: usize) -> Result<(f64, f64)> {
    if kappa <= 0.0 {
        return Err(Error::InvalidParams { reason: format!("coupling must be positive, got {kappa}") });
    }
    if gamma < 0.0 {
        return Err(Error::InvalidParams { reason: format!("loss must be nonnegative, got {gamma}") });
    }
    let n = resolution.max(64);
    let t_max = std::f64::consts::PI / kappa;
    let f = |t: f64| coincidence_closed_form(kappa, gamma, t);
    let mut bracket = None;
    let mut prev_t = 0.0;
    let mut prev_v = f(0.0);
    let mut falling = false;
    for k in 1..=n {
        let t = t_max * k as f64 / n as f64;
        let v = f(t);
        if v < prev_v {
            falling = true;
        } else if falling {
            // prev was a local minimum between t - 2h and t.
            let h = t_max / n as f64;
            bracket = Some(((prev_t - h).max(0.0), t));
            break;
        }
        prev_t = t;
        prev_v = v;
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| Error::InvalidParams {
        reason: "no coincidence dip inside one coupling period".into(),
    })?;
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo < 1e-13 * t_max {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let t_dip = 0.5 * (lo + hi);
    Ok((t_dip, f(t_dip)))
}
