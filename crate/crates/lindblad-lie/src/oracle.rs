//! Reference solver: direct adaptive integration of the vectorized
//! master equation, plus a dense matrix exponential for the
//! constant-parameter propagator. The other solver routes are validated
//! against this one, never the other way around.

use crate::fock::{DensityMatrix, FockBasis, StateCheck};
use crate::liouville::{
    direct_liouvillian, left_super, right_super, vectorize, devectorize, SystemParams,
};
use crate::ode::{integrate, OdeConfig};
use crate::{C64, Error, Result};
use ndarray::prelude::*;
use std::sync::Arc;

/// Integration tolerances for the reference route.
#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { rtol: 1e-9, atol: 1e-12, max_steps: 2_000_000, initial_step: None }
    }
}

impl IntegratorConfig {
    pub(crate) fn to_ode(&self) -> OdeConfig {
        OdeConfig {
            rtol: self.rtol,
            atol: self.atol,
            max_steps: self.max_steps,
            initial_step: self.initial_step,
        }
    }
}

/// States sampled on a caller-supplied time grid.
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

/// Generator as a sum of fixed superoperator matrices with
/// time-dependent scalar coefficients. Rebuilding only the coefficients
/// keeps the right-hand side cheap for scheduled parameters, and the
/// combination equals the direct assembly identically.
struct LiouvilleAction {
    params: SystemParams,
    left_n: Vec<Array2<C64>>,
    right_n: Vec<Array2<C64>>,
    jump: Vec<Array2<C64>>,
    hop_left: Vec<Array2<C64>>,
    hop_right: Vec<Array2<C64>>,
}

impl LiouvilleAction {
    fn new(basis: &Arc<FockBasis>, params: &SystemParams) -> Result<Self> {
        let n = basis.n_modes();
        if params.n_modes() != n {
            return Err(Error::DimensionMismatch {
                context: format!("{} parameter modes on {}-mode basis", params.n_modes(), n),
            });
        }
        let mut left_n = Vec::with_capacity(n);
        let mut right_n = Vec::with_capacity(n);
        let mut jump = Vec::with_capacity(n);
        for k in 0..n {
            let a = crate::fock::annihilation(basis, k)?;
            let nk = crate::fock::number(basis, k)?;
            left_n.push(left_super(&nk.matrix().view()));
            right_n.push(right_super(&nk.matrix().view()));
            jump.push(
                left_super(&a.matrix().view()).dot(&right_super(&a.dagger().matrix().view())),
            );
        }
        let mut hop_left = Vec::with_capacity(n.saturating_sub(1));
        let mut hop_right = Vec::with_capacity(n.saturating_sub(1));
        for k in 0..n.saturating_sub(1) {
            let ak = crate::fock::annihilation(basis, k)?;
            let ak1 = crate::fock::annihilation(basis, k + 1)?;
            let hop = ak.dagger().matrix().dot(ak1.matrix());
            let hop = &hop + &crate::linalg::dagger(&hop.view());
            hop_left.push(left_super(&hop.view()));
            hop_right.push(right_super(&hop.view()));
        }
        Ok(LiouvilleAction { params: params.clone(), left_n, right_n, jump, hop_left, hop_right })
    }

    fn apply(&self, t: f64, v: &ArrayView1<C64>, out: &mut Array1<C64>) {
        let p = self.params.at(t);
        let i = C64::new(0.0, 1.0);
        out.fill(C64::new(0.0, 0.0));
        for k in 0..self.left_n.len() {
            let (sig, gam) = (p.sigma[k], p.gamma[k]);
            accumulate(out, &self.left_n[k], v, -(i * sig) - gam);
            accumulate(out, &self.right_n[k], v, i * sig - gam);
            accumulate(out, &self.jump[k], v, C64::new(2.0 * gam, 0.0));
        }
        for k in 0..self.hop_left.len() {
            let ik = i * p.kappa[k];
            accumulate(out, &self.hop_left[k], v, -ik);
            accumulate(out, &self.hop_right[k], v, ik);
        }
    }
}

fn accumulate(out: &mut Array1<C64>, m: &Array2<C64>, v: &ArrayView1<C64>, c: C64) {
    if c.norm_sqr() == 0.0 {
        return;
    }
    let n = out.len();
    for r in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        let row = m.row(r);
        for j in 0..n {
            acc += row[j] * v[j];
        }
        out[r] += c * acc;
    }
}

pub(crate) fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParams { reason: "empty time grid".into() });
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParams { reason: "non-finite time in grid".into() });
    }
    if !t_grid.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::InvalidParams { reason: "time grid must be nondecreasing".into() });
    }
    Ok(())
}

/// Integrates the master equation from `t_grid[0]` and samples the state
/// at every grid time. The grid only selects query points; step sizes
/// are chosen by the error control alone.
pub fn integrate_master(
    params: &SystemParams,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    validate_grid(t_grid)?;
    let basis = rho0.basis().clone();
    let d = basis.dim();
    let v0 = vectorize(&rho0.matrix().view());
    let t0 = t_grid[0];
    let t_end = *t_grid.last().expect("nonempty grid");

    let dense = if params.is_constant() {
        let l = direct_liouvillian(&basis, &params.at(t0))?;
        integrate(|_t, v| l.dot(v), t0, t_end, &v0, &cfg.to_ode())?
    } else {
        let action = LiouvilleAction::new(&basis, params)?;
        let mut buf = Array1::zeros(d * d);
        integrate(
            move |t, v| {
                action.apply(t, v, &mut buf);
                buf.clone()
            },
            t0,
            t_end,
            &v0,
            &cfg.to_ode(),
        )?
    };

    let mut states = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let v = dense.eval(t)?;
        let rho = devectorize(&v.view(), d)?;
        states.push(DensityMatrix::with_check(basis.clone(), rho, StateCheck::evolved())?);
    }
    Ok(Trajectory { times: t_grid.to_vec(), states })
}

/// Propagates a state by `exp(L t)` for constant parameters. Independent
/// of the step-by-step integration; the two must agree and the tests pin
/// that.
pub fn propagate_constant(
    params: &SystemParams,
    rho0: &DensityMatrix,
    t: f64,
) -> Result<DensityMatrix> {
    if !params.is_constant() {
        return Err(Error::NonConstantParams);
    }
    let basis = rho0.basis().clone();
    let l = direct_liouvillian(&basis, &params.at(0.0))?;
    let lt = l.mapv(|z| z * t);
    let u = expm(&lt.view())?;
    let v = u.dot(&vectorize(&rho0.matrix().view()));
    let rho = devectorize(&v.view(), basis.dim())?;
    DensityMatrix::with_check(basis, rho, StateCheck::evolved())
}

const PADE13_THETA: f64 = 5.371920351148152;
const PADE13_B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Dense matrix exponential by scaling and squaring with a degree-13
/// Pade approximant.
pub fn expm(a: &ArrayView2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            context: format!("exponential of {}x{} matrix", n, a.ncols()),
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::IntegrationFailure {
            t: f64::NAN,
            reason: "non-finite entries in matrix exponential".into(),
        });
    }
    let norm = crate::linalg::one_norm(a);
    let s = if norm > PADE13_THETA {
        ((norm / PADE13_THETA).log2().ceil() as i32).max(0)
    } else {
        0
    };
    if s > 60 {
        return Err(Error::IntegrationFailure {
            t: f64::NAN,
            reason: format!("matrix exponential overflow: norm {norm:.3e}"),
        });
    }
    let scaled = a.mapv(|z| z / (2.0f64).powi(s));

    let b = &PADE13_B;
    let id = crate::linalg::identity(n);
    let a2 = scaled.dot(&scaled);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);

    let u_inner = a6.mapv(|z| z * b[13]) + a4.mapv(|z| z * b[11]) + a2.mapv(|z| z * b[9]);
    let u = scaled.dot(
        &(a6.dot(&u_inner)
            + a6.mapv(|z| z * b[7])
            + a4.mapv(|z| z * b[5])
            + a2.mapv(|z| z * b[3])
            + id.mapv(|z| z * b[1])),
    );
    let v_inner = a6.mapv(|z| z * b[12]) + a4.mapv(|z| z * b[10]) + a2.mapv(|z| z * b[8]);
    let v = a6.dot(&v_inner)
        + a6.mapv(|z| z * b[6])
        + a4.mapv(|z| z * b[4])
        + a2.mapv(|z| z * b[2])
        + id.mapv(|z| z * b[0]);

    let vmu = &v - &u;
    let vpu = &v + &u;
    let mut r = crate::linalg::solve(&vmu.view(), &vpu.view(), "pade denominator")?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}
