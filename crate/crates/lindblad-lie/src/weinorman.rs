//! Product-form solver for two coupled lossy modes with arbitrary
//! time-dependent parameters.
//!
//! The generator splits into a solvable radical (mean drift plus the
//! excitation-removing jumps) and two commuting sl(2) copies acting on
//! kets and bras. Each sl(2) factor becomes a product of three
//! exponentials whose scalar coefficient functions come from one 2x2
//! fundamental-matrix integration; the radical coefficients follow by
//! quadrature. The assembled propagator works on any truncation and
//! remains valid where the spectral route refuses to run.

use crate::fock::{DensityMatrix, FockBasis, StateCheck};
use crate::liouville::{devectorize, ladder_supers, vectorize, SystemParams};
use crate::ode::{integrate, DenseOutput};
use crate::oracle::{expm, validate_grid, IntegratorConfig, Trajectory};
use crate::{C64, Error, Result};
use ndarray::prelude::*;
use std::sync::Arc;

/// Relative floor on the lower-right fundamental-matrix entry below
/// which the triangular factorization does not exist.
const SINGULAR_FLOOR: f64 = 1e-10;

/// Largest admitted phase step when tracking the logarithm branch.
const MAX_BRANCH_STEP: f64 = 0.5;

const TAU: f64 = std::f64::consts::TAU;

/// Instantaneous coefficients of the radical / semisimple split of the
/// two-mode generator.
///
/// The right-acting simple part carries the complex conjugates of the
/// left-acting coefficients and is not stored separately.
#[derive(Debug, Clone, Copy)]
pub struct WnSplit {
    /// Half the difference of the complex mode constants,
    /// (sigma_1 - sigma_2) / 2 - i (gamma_1 - gamma_2) / 2.
    pub delta: C64,
    /// Coefficient of the left number-difference superoperator;
    /// identically -i times `delta`.
    pub k_zero: C64,
    /// Coefficient of the left raising superoperator, -i kappa.
    pub k_plus: C64,
    /// Coefficient of the left lowering superoperator, -i kappa.
    pub k_minus: C64,
    /// Coefficient of the summed left number superoperators.
    pub abelian_left: C64,
    /// Coefficient of the summed right number superoperators.
    pub abelian_right: C64,
    /// Coefficients of the per-mode excitation-removing superoperators.
    pub loss: [f64; 2],
}

impl WnSplit {
    /// Sums radical and both simple parts back into a full generator
    /// matrix on the given basis. Agrees with the direct assembly to
    /// machine precision.
    pub fn reassemble(&self, basis: &Arc<FockBasis>) -> Result<Array2<C64>> {
        if basis.n_modes() != 2 {
            return Err(Error::DimensionMismatch {
                context: format!("two-mode split on a {}-mode basis", basis.n_modes()),
            });
        }
        let s = ladder_supers(basis)?;
        let number_left = s.lp[0].dot(&s.lm[0]) + s.lp[1].dot(&s.lm[1]);
        let number_right = s.rp[0].dot(&s.rm[0]) + s.rp[1].dot(&s.rm[1]);
        let diff_left = s.lp[0].dot(&s.lm[0]) - s.lp[1].dot(&s.lm[1]);
        let diff_right = s.rp[0].dot(&s.rm[0]) - s.rp[1].dot(&s.rm[1]);
        let mut l = number_left.mapv(|z| z * self.abelian_left)
            + number_right.mapv(|z| z * self.abelian_right)
            + s.lm[0].dot(&s.rm[0]).mapv(|z| z * self.loss[0])
            + s.lm[1].dot(&s.rm[1]).mapv(|z| z * self.loss[1]);
        l = l
            + diff_left.mapv(|z| z * self.k_zero)
            + s.lp[0].dot(&s.lm[1]).mapv(|z| z * self.k_plus)
            + s.lp[1].dot(&s.lm[0]).mapv(|z| z * self.k_minus);
        l = l
            + diff_right.mapv(|z| z * self.k_zero.conj())
            + s.rp[0].dot(&s.rm[1]).mapv(|z| z * self.k_plus.conj())
            + s.rp[1].dot(&s.rm[0]).mapv(|z| z * self.k_minus.conj());
        Ok(l)
    }
}

fn require_two_modes(params: &SystemParams) -> Result<()> {
    if params.n_modes() != 2 {
        return Err(Error::Unsupported {
            reason: format!(
                "the product-form solver handles two modes, got {}",
                params.n_modes()
            ),
        });
    }
    Ok(())
}

fn split_coeffs(params: &SystemParams, t: f64) -> WnSplit {
    let p = params.at(t);
    let half_diff_sigma = 0.5 * (p.sigma[0] - p.sigma[1]);
    let half_diff_gamma = 0.5 * (p.gamma[0] - p.gamma[1]);
    let half_sum_sigma = 0.5 * (p.sigma[0] + p.sigma[1]);
    let half_sum_gamma = 0.5 * (p.gamma[0] + p.gamma[1]);
    let kappa = p.kappa[0];
    WnSplit {
        delta: C64::new(half_diff_sigma, -half_diff_gamma),
        k_zero: C64::new(-half_diff_gamma, -half_diff_sigma),
        k_plus: C64::new(0.0, -kappa),
        k_minus: C64::new(0.0, -kappa),
        abelian_left: C64::new(-half_sum_gamma, -half_sum_sigma),
        abelian_right: C64::new(-half_sum_gamma, half_sum_sigma),
        loss: [2.0 * p.gamma[0], 2.0 * p.gamma[1]],
    }
}

/// Splits the two-mode generator at time `t` into radical and simple
/// coefficients.
pub fn split_liouvillian(params: &SystemParams, t: f64) -> Result<WnSplit> {
    require_two_modes(params)?;
    Ok(split_coeffs(params, t))
}

/// Values of the three sl(2) coefficient functions at one time.
#[derive(Debug, Clone, Copy)]
pub struct FValues {
    /// Coefficient of the raising factor.
    pub f_plus: C64,
    /// Coefficient of the diagonal factor, branch-tracked along the
    /// trajectory.
    pub f_zero: C64,
    /// Coefficient of the lowering factor.
    pub f_minus: C64,
}

#[derive(Debug, Clone, Copy)]
struct BranchPoint {
    t: f64,
    /// Continuously unwound argument of the lower-right entry.
    theta: f64,
    /// Lower-right magnitude relative to the Frobenius norm.
    rel: f64,
}

/// Fundamental 2x2 matrix of the left sl(2) part as a dense-output
/// trajectory, with a branch table for the logarithm in f0.
///
/// The triangular factorization has isolated coordinate singularities
/// where the lower-right entry crosses zero; the propagator itself is
/// regular there. Crossings inside the window are located and recorded,
/// and only queries landing on one fail.
#[derive(Debug)]
pub struct Sl2Solution {
    dense: DenseOutput,
    branch: Vec<BranchPoint>,
    crossings: Vec<f64>,
    t_start: f64,
    t_end: f64,
}

impl Sl2Solution {
    /// Integrated time window.
    pub fn t_range(&self) -> (f64, f64) {
        (self.t_start, self.t_end)
    }

    /// Times inside the window where the factorization breaks down.
    pub fn singularities(&self) -> &[f64] {
        &self.crossings
    }

    fn entries(&self, t: f64) -> Result<[C64; 4]> {
        let y = self.dense.eval(t)?;
        Ok([y[0], y[1], y[2], y[3]])
    }

    /// Fundamental matrix at `t`, row-major 2x2.
    pub fn fundamental_matrix(&self, t: f64) -> Result<Array2<C64>> {
        let m = self.entries(t)?;
        Ok(array![[m[0], m[1]], [m[2], m[3]]])
    }

    /// Coefficient functions at `t`. Fails where the triangular
    /// factorization of the fundamental matrix does not exist.
    pub fn f_at(&self, t: f64) -> Result<FValues> {
        let m = self.entries(t)?;
        let fro = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if m[3].norm() < SINGULAR_FLOOR * fro {
            return Err(Error::FactorizationSingular { t });
        }
        let theta_ref = self.branch_arg(t);
        let phi = m[3].arg();
        let winding = ((theta_ref - phi) / TAU).round();
        let theta = phi + TAU * winding;
        Ok(FValues {
            f_plus: m[1] / m[3],
            f_zero: C64::new(-m[3].norm().ln(), -theta),
            f_minus: m[2] / m[3],
        })
    }

    fn branch_arg(&self, t: f64) -> f64 {
        let k = self.branch.partition_point(|p| p.t <= t);
        if k == 0 {
            return self.branch[0].theta;
        }
        if k == self.branch.len() {
            return self.branch[k - 1].theta;
        }
        let (a, b) = (&self.branch[k - 1], &self.branch[k]);
        let w = (t - a.t) / (b.t - a.t).max(1e-300);
        a.theta + w * (b.theta - a.theta)
    }
}

fn probe(dense: &DenseOutput, t: f64) -> Result<(f64, f64)> {
    let y = dense.eval(t)?;
    let fro = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    Ok((y[3].arg(), y[3].norm() / fro))
}

fn wrap_angle(x: f64) -> f64 {
    x - TAU * (x / TAU).round()
}

fn extend_branch(
    dense: &DenseOutput,
    t_b: f64,
    depth: u32,
    budget: &mut usize,
    out: &mut Vec<BranchPoint>,
) -> Result<()> {
    let last = *out.last().expect("branch table starts nonempty");
    let (phi, rel) = probe(dense, t_b)?;
    let step = wrap_angle(phi - last.theta);
    if step.abs() <= MAX_BRANCH_STEP {
        out.push(BranchPoint { t: t_b, theta: last.theta + step, rel });
        return Ok(());
    }
    let t_mid = 0.5 * (last.t + t_b);
    if depth == 0 || *budget == 0 {
        let (_, rel_mid) = probe(dense, t_mid)?;
        if rel_mid < SINGULAR_FLOOR {
            // Zero crossing of the lower-right entry: the branch has a
            // genuine jump here. Restart at the principal value; any
            // branch consistent with the entry itself leaves the
            // assembled propagator unchanged.
            out.push(BranchPoint { t: t_b, theta: phi, rel });
            return Ok(());
        }
        return Err(Error::IntegrationFailure {
            t: t_mid,
            reason: "cannot track the factorization branch".into(),
        });
    }
    *budget -= 1;
    extend_branch(dense, t_mid, depth - 1, budget, out)?;
    extend_branch(dense, t_b, depth - 1, budget, out)
}

fn build_branch(dense: &DenseOutput, t_start: f64, t_end: f64) -> Result<Vec<BranchPoint>> {
    let (phi0, rel0) = probe(dense, t_start)?;
    let mut table = vec![BranchPoint { t: t_start, theta: phi0, rel: rel0 }];
    if t_end <= t_start {
        return Ok(table);
    }
    let seeds = 1024usize;
    let mut budget = 200_000usize;
    for j in 1..=seeds {
        let t = t_start + (t_end - t_start) * j as f64 / seeds as f64;
        extend_branch(dense, t, 24, &mut budget, &mut table)?;
    }
    Ok(table)
}

fn golden_min(dense: &DenseOutput, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let width_floor = 1e-14 * (a.abs().max(b.abs()) + 1.0);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = probe(dense, c)?.1;
    let mut fd = probe(dense, d)?.1;
    for _ in 0..200 {
        if b - a < width_floor {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = probe(dense, c)?.1;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = probe(dense, d)?.1;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Refines every local minimum of the relative lower-right magnitude
/// and collects the crossings below the factorization floor.
fn collect_crossings(dense: &DenseOutput, table: &[BranchPoint]) -> Result<Vec<f64>> {
    let mut crossings = Vec::new();
    for j in 0..table.len() {
        let left_higher = j == 0 || table[j - 1].rel >= table[j].rel;
        let right_higher = j + 1 == table.len() || table[j + 1].rel >= table[j].rel;
        if !(left_higher && right_higher) {
            continue;
        }
        let a = if j == 0 { table[j].t } else { table[j - 1].t };
        let b = if j + 1 == table.len() { table[j].t } else { table[j + 1].t };
        let (t_min, rel_min) = if b <= a { (table[j].t, table[j].rel) } else { golden_min(dense, a, b)? };
        if rel_min < SINGULAR_FLOOR {
            let distinct = crossings
                .last()
                .map_or(true, |&prev: &f64| t_min - prev > 1e-12 * (t_min.abs() + 1.0));
            if distinct {
                crossings.push(t_min);
            }
        }
    }
    Ok(crossings)
}

pub(crate) fn integrate_sl2_from(
    params: &SystemParams,
    t_start: f64,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<Sl2Solution> {
    require_two_modes(params)?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let y0 = array![one, zero, zero, one];
    let owned = params.clone();
    let rhs = move |t: f64, y: &ArrayView1<C64>| -> Array1<C64> {
        let s = split_coeffs(&owned, t);
        array![
            s.k_zero * y[0] + s.k_plus * y[2],
            s.k_zero * y[1] + s.k_plus * y[3],
            s.k_minus * y[0] - s.k_zero * y[2],
            s.k_minus * y[1] - s.k_zero * y[3],
        ]
    };
    let dense = integrate(rhs, t_start, t_end, &y0, &config.to_ode())?;
    let branch = build_branch(&dense, t_start, t_end)?;
    let crossings = collect_crossings(&dense, &branch)?;
    let (_, rel_end) = probe(&dense, t_end)?;
    if rel_end < SINGULAR_FLOOR {
        let t = crossings
            .iter()
            .copied()
            .min_by(|a, b| (a - t_end).abs().partial_cmp(&(b - t_end).abs()).unwrap())
            .unwrap_or(t_end);
        return Err(Error::FactorizationSingular { t });
    }
    Ok(Sl2Solution { dense, branch, crossings, t_start, t_end })
}

/// Integrates the left sl(2) fundamental matrix on [0, t_end] and
/// prepares the coefficient functions f+, f0, f-.
///
/// Fails with [`Error::FactorizationSingular`] if the factorization
/// breaks down anywhere inside the window.
pub fn integrate_sl2(
    params: &SystemParams,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<Sl2Solution> {
    integrate_sl2_from(params, 0.0, t_end, config)
}

/// Defect of the quadratic first-order equation governing f+, for given
/// values of f+ and its derivative.
pub fn riccati_residual_values(f_plus: C64, f_plus_dot: C64, delta: C64, kappa: f64) -> C64 {
    let i = C64::new(0.0, 1.0);
    f_plus_dot + 2.0 * i * delta * f_plus - i * kappa * f_plus * f_plus + i * kappa
}

/// Evaluates the quadratic-equation defect of the integrated f+ at `t`;
/// a small value validates the fundamental-matrix integration.
pub fn riccati_residual(sol: &Sl2Solution, params: &SystemParams, t: f64) -> Result<C64> {
    let s = split_liouvillian(params, t)?;
    let m = sol.entries(t)?;
    let fro = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if m[3].norm() < SINGULAR_FLOOR * fro {
        return Err(Error::FactorizationSingular { t });
    }
    let m12_dot = s.k_zero * m[1] + s.k_plus * m[3];
    let m22_dot = s.k_minus * m[1] - s.k_zero * m[3];
    let f_plus = m[1] / m[3];
    let f_plus_dot = (m12_dot * m[3] - m[1] * m22_dot) / (m[3] * m[3]);
    Ok(riccati_residual_values(f_plus, f_plus_dot, s.delta, params.at(t).kappa[0]))
}

/// Radical coefficient functions a1..a6 as a dense-output trajectory.
#[derive(Debug)]
pub struct RadicalSolution {
    dense: DenseOutput,
    t_start: f64,
    t_end: f64,
}

impl RadicalSolution {
    /// Integrated time window.
    pub fn t_range(&self) -> (f64, f64) {
        (self.t_start, self.t_end)
    }

    /// Values a1..a6 at `t`.
    pub fn a_at(&self, t: f64) -> Result<[C64; 6]> {
        let y = self.dense.eval(t)?;
        Ok([y[0], y[1], y[2], y[3], y[4], y[5]])
    }
}

/// Integrates the six radical coefficient functions driven by the sl(2)
/// solution, from the start of its window up to `t_end`.
pub fn integrate_radical(
    params: &SystemParams,
    sl2: &Sl2Solution,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<RadicalSolution> {
    require_two_modes(params)?;
    let (t_start, t_avail) = sl2.t_range();
    if !(t_end >= t_start) || t_end > t_avail {
        return Err(Error::InvalidParams {
            reason: format!(
                "radical window [{t_start}, {t_end}] outside the sl(2) range [{t_start}, {t_avail}]"
            ),
        });
    }
    let y0 = Array1::<C64>::zeros(6);
    let rhs = |t: f64, y: &ArrayView1<C64>| -> Array1<C64> {
        let p = params.at(t);
        let m = sl2.entries(t).expect("radical window inside the sl(2) range");
        let mean = C64::new(-0.5 * (p.gamma[0] + p.gamma[1]), -0.5 * (p.sigma[0] + p.sigma[1]));
        let scale = (y[0] + y[1]).exp() * 2.0;
        let (g1, g2) = (p.gamma[0], p.gamma[1]);
        array![
            mean,
            mean.conj(),
            scale * (g1 * m[0].norm_sqr() + g2 * m[2].norm_sqr()),
            scale * (g1 * m[1].norm_sqr() + g2 * m[3].norm_sqr()),
            scale * (g1 * m[0].conj() * m[1] + g2 * m[2].conj() * m[3]),
            scale * (g1 * m[0] * m[1].conj() + g2 * m[2] * m[3].conj()),
        ]
    };
    let dense = integrate(rhs, t_start, t_end, &y0, &config.to_ode())?;
    Ok(RadicalSolution { dense, t_start, t_end })
}

/// All nine coefficient functions of the product-form propagator,
/// queryable anywhere in the integrated window.
#[derive(Debug)]
pub struct WnFunctions {
    /// Fundamental matrix and f-functions of the simple parts.
    pub sl2: Sl2Solution,
    /// Radical functions a1..a6.
    pub radical: RadicalSolution,
}

impl WnFunctions {
    /// Integrates everything needed by the propagator on [0, t_end].
    pub fn solve(params: &SystemParams, t_end: f64, config: &IntegratorConfig) -> Result<Self> {
        Self::solve_from(params, 0.0, t_end, config)
    }

    pub(crate) fn solve_from(
        params: &SystemParams,
        t_start: f64,
        t_end: f64,
        config: &IntegratorConfig,
    ) -> Result<Self> {
        let sl2 = integrate_sl2_from(params, t_start, t_end, config)?;
        let radical = integrate_radical(params, &sl2, t_end, config)?;
        Ok(WnFunctions { sl2, radical })
    }

    /// Integrated time window.
    pub fn t_range(&self) -> (f64, f64) {
        self.sl2.t_range()
    }

    /// Times inside the window where the factorization breaks down.
    pub fn singularities(&self) -> &[f64] {
        self.sl2.singularities()
    }

    /// f-functions at `t`.
    pub fn f_at(&self, t: f64) -> Result<FValues> {
        self.sl2.f_at(t)
    }

    /// a-functions at `t`.
    pub fn a_at(&self, t: f64) -> Result<[C64; 6]> {
        self.radical.a_at(t)
    }
}

/// Evolves a two-mode state through the product of twelve exponential
/// factors, sampling at every grid time.
///
/// Valid for scheduled parameters and at parameter points where the
/// spectral route is refused.
pub fn evolve_weinorman(
    params: &SystemParams,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    require_two_modes(params)?;
    let basis = rho0.basis().clone();
    if basis.n_modes() != 2 {
        return Err(Error::DimensionMismatch {
            context: format!("two-mode propagator on a {}-mode basis", basis.n_modes()),
        });
    }
    validate_grid(t_grid)?;
    let t_start = t_grid[0];
    let t_end = *t_grid.last().expect("grid validated nonempty");
    let wn = WnFunctions::solve_from(params, t_start, t_end, config)?;

    let s = ladder_supers(&basis)?;
    let generators: [Array2<C64>; 12] = [
        s.lp[0].dot(&s.lm[1]),
        s.lp[0].dot(&s.lm[0]) - s.lp[1].dot(&s.lm[1]),
        s.lp[1].dot(&s.lm[0]),
        s.rp[0].dot(&s.rm[1]),
        s.rp[0].dot(&s.rm[0]) - s.rp[1].dot(&s.rm[1]),
        s.rp[1].dot(&s.rm[0]),
        s.lp[0].dot(&s.lm[0]) + s.lp[1].dot(&s.lm[1]),
        s.rp[0].dot(&s.rm[0]) + s.rp[1].dot(&s.rm[1]),
        s.lm[0].dot(&s.rm[0]),
        s.lm[1].dot(&s.rm[1]),
        s.lm[1].dot(&s.rm[0]),
        s.lm[0].dot(&s.rm[1]),
    ];

    let v0 = vectorize(&rho0.matrix().view());
    let mut states = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let f = wn.f_at(t)?;
        let a = wn.a_at(t)?;
        let coeffs: [C64; 12] = [
            f.f_plus,
            f.f_zero,
            f.f_minus,
            f.f_plus.conj(),
            f.f_zero.conj(),
            f.f_minus.conj(),
            a[0],
            a[1],
            a[2],
            a[3],
            a[4],
            a[5],
        ];
        let mut v = v0.clone();
        for (gen, co) in generators.iter().zip(coeffs.iter()).rev() {
            if co.norm() == 0.0 {
                continue;
            }
            let factor = expm(&gen.mapv(|z| z * co).view())?;
            v = factor.dot(&v);
        }
        let m = devectorize(&v.view(), basis.dim())?;
        states.push(DensityMatrix::with_check(basis.clone(), m, StateCheck::evolved())?);
    }
    Ok(Trajectory { times: t_grid.to_vec(), states })
}

/// Two-photon coincidence rate for the twin-excitation input, from the
/// coefficient functions at a common time.
pub fn coincidence_weinorman(f: &FValues, a: &[C64; 6]) -> f64 {
    let amp = C64::new(1.0, 0.0) + 2.0 * f.f_plus * f.f_minus * (-2.0 * f.f_zero).exp();
    (2.0 * (a[0] + a[1]).re).exp() * amp.norm_sqr()
}
