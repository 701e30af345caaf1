//! Adaptive Runge-Kutta integration with dense output for complex-valued
//! linear systems.
//!
//! The method is the Dormand-Prince 5(4) embedded pair with the standard
//! quartic interpolant, first-same-as-last stage reuse, and PI-free step
//! control. Query times never influence step selection: the integrator
//! marches on its own error-controlled grid and answers arbitrary times
//! through the interpolant afterwards.

use crate::{C64, Error, Result};
use ndarray::prelude::*;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Tolerances and guards for one integration run.
#[derive(Debug, Clone)]
pub struct OdeConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step size; picked automatically when absent.
    pub initial_step: Option<f64>,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig { rtol: 1e-9, atol: 1e-12, max_steps: 2_000_000, initial_step: None }
    }
}

/// One accepted step's interpolation polynomial.
#[derive(Debug)]
struct DenseSegment {
    t0: f64,
    h: f64,
    rcont: [Array1<C64>; 5],
}

impl DenseSegment {
    fn eval(&self, t: f64) -> Array1<C64> {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        let mut acc = r4 + &r5.mapv(|z| z * th1);
        acc = r3 + &acc.mapv(|z| z * theta);
        acc = r2 + &acc.mapv(|z| z * th1);
        acc = r1 + &acc.mapv(|z| z * theta);
        acc
    }
}

/// Piecewise interpolant covering the full integration window.
#[derive(Debug)]
pub struct DenseOutput {
    t_start: f64,
    t_end: f64,
    /// Accepted step boundaries, `breaks[k]` starting segment `k`.
    breaks: Vec<f64>,
    segments: Vec<DenseSegment>,
    y_start: Array1<C64>,
}

impl DenseOutput {
    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Solution at time `t`, which must lie inside the integrated window
    /// up to a relative slack of 1e-9.
    pub fn eval(&self, t: f64) -> Result<Array1<C64>> {
        let span = (self.t_end - self.t_start).abs().max(1.0);
        if t < self.t_start - 1e-9 * span || t > self.t_end + 1e-9 * span {
            return Err(Error::InvalidParams {
                reason: format!(
                    "time {t} outside integrated window [{}, {}]",
                    self.t_start, self.t_end
                ),
            });
        }
        if self.segments.is_empty() {
            return Ok(self.y_start.clone());
        }
        let t = t.clamp(self.t_start, self.t_end);
        // Last break with breaks[k] <= t.
        let k = match self.breaks.binary_search_by(|b| b.partial_cmp(&t).unwrap()) {
            Ok(k) => k.min(self.segments.len() - 1),
            Err(0) => 0,
            Err(k) => k - 1,
        };
        Ok(self.segments[k].eval(t))
    }
}

fn scaled_error(err_vec: &Array1<C64>, y0: &Array1<C64>, y1: &Array1<C64>, cfg: &OdeConfig) -> f64 {
    let n = err_vec.len() as f64;
    let sum: f64 = err_vec
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| {
            let sc = cfg.atol + cfg.rtol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn automatic_initial_step<F>(
    f: &mut F,
    t0: f64,
    y0: &Array1<C64>,
    f0: &Array1<C64>,
    t_end: f64,
    cfg: &OdeConfig,
) -> f64
where
    F: FnMut(f64, &ArrayView1<C64>) -> Array1<C64>,
{
    let n = y0.len() as f64;
    let sc = |y: &Array1<C64>, g: &Array1<C64>| -> (f64, f64) {
        let mut dy = 0.0;
        let mut df = 0.0;
        for i in 0..y.len() {
            let s = cfg.atol + cfg.rtol * y[i].norm();
            dy += (y[i].norm() / s).powi(2);
            df += (g[i].norm() / s).powi(2);
        }
        ((dy / n).sqrt(), (df / n).sqrt())
    };
    let (d0, d1) = sc(y0, f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min((t_end - t0).abs());
    let y1 = y0 + &f0.mapv(|z| z * h0);
    let f1 = f(t0 + h0, &y1.view());
    let mut d2 = 0.0;
    for i in 0..y0.len() {
        let s = cfg.atol + cfg.rtol * y0[i].norm();
        d2 += ((f1[i] - f0[i]).norm() / s).powi(2);
    }
    let d2 = (d2 / n).sqrt() / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
    (100.0 * h0).min(h1).min((t_end - t0).abs())
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t_end >= t0`, returning the
/// dense interpolant of the whole window.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    t_end: f64,
    y0: &Array1<C64>,
    cfg: &OdeConfig,
) -> Result<DenseOutput>
where
    F: FnMut(f64, &ArrayView1<C64>) -> Array1<C64>,
{
    if !(t_end >= t0) || !t0.is_finite() || !t_end.is_finite() {
        return Err(Error::InvalidParams {
            reason: format!("bad integration window [{t0}, {t_end}]"),
        });
    }
    let mut out = DenseOutput {
        t_start: t0,
        t_end,
        breaks: Vec::new(),
        segments: Vec::new(),
        y_start: y0.clone(),
    };
    if t_end == t0 {
        return Ok(out);
    }

    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = f(t, &y.view());
    let mut h = match cfg.initial_step {
        Some(h) if h > 0.0 => h.min(t_end - t0),
        _ => automatic_initial_step(&mut f, t0, &y, &k1, t_end, cfg),
    };
    let mut rejected_last = false;

    for _step in 0..cfg.max_steps {
        if t >= t_end {
            out.t_end = t_end;
            return Ok(out);
        }
        h = h.min(t_end - t);
        if t + h <= t {
            return Err(Error::IntegrationFailure {
                t,
                reason: "step size underflow".into(),
            });
        }

        let k2 = f(t + C2 * h, &(&y + &k1.mapv(|z| z * (h * A21))).view());
        let k3 = f(
            t + C3 * h,
            &(&y + &k1.mapv(|z| z * (h * A31)) + k2.mapv(|z| z * (h * A32))).view(),
        );
        let k4 = f(
            t + C4 * h,
            &(&y + &k1.mapv(|z| z * (h * A41))
                + k2.mapv(|z| z * (h * A42))
                + k3.mapv(|z| z * (h * A43)))
                .view(),
        );
        let k5 = f(
            t + C5 * h,
            &(&y + &k1.mapv(|z| z * (h * A51))
                + k2.mapv(|z| z * (h * A52))
                + k3.mapv(|z| z * (h * A53))
                + k4.mapv(|z| z * (h * A54)))
                .view(),
        );
        let k6 = f(
            t + h,
            &(&y + &k1.mapv(|z| z * (h * A61))
                + k2.mapv(|z| z * (h * A62))
                + k3.mapv(|z| z * (h * A63))
                + k4.mapv(|z| z * (h * A64))
                + k5.mapv(|z| z * (h * A65)))
                .view(),
        );
        // Fifth-order solution; k2 drops out (A72 = 0).
        let y1 = &y
            + &(k1.mapv(|z| z * (h * A71))
                + k3.mapv(|z| z * (h * A73))
                + k4.mapv(|z| z * (h * A74))
                + k5.mapv(|z| z * (h * A75))
                + k6.mapv(|z| z * (h * A76)));
        let k7 = f(t + h, &y1.view());

        let err_vec = k1.mapv(|z| z * (h * E1))
            + k3.mapv(|z| z * (h * E3))
            + k4.mapv(|z| z * (h * E4))
            + k5.mapv(|z| z * (h * E5))
            + k6.mapv(|z| z * (h * E6))
            + k7.mapv(|z| z * (h * E7));
        let finite = y1.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        let err = if finite { scaled_error(&err_vec, &y, &y1, cfg) } else { f64::INFINITY };

        if err <= 1.0 {
            // Accept: record the interpolant for [t, t + h].
            let ydiff = &y1 - &y;
            let bspl = k1.mapv(|z| z * h) - &ydiff;
            let rcont4 = &ydiff - &k7.mapv(|z| z * h) - &bspl;
            let rcont5 = (k1.mapv(|z| z * D1)
                + k3.mapv(|z| z * D3)
                + k4.mapv(|z| z * D4)
                + k5.mapv(|z| z * D5)
                + k6.mapv(|z| z * D6)
                + k7.mapv(|z| z * D7))
            .mapv(|z| z * h);
            out.breaks.push(t);
            out.segments.push(DenseSegment {
                t0: t,
                h,
                rcont: [y.clone(), ydiff, bspl, rcont4, rcont5],
            });

            t += h;
            y = y1;
            k1 = k7;

            let fac = if err == 0.0 {
                10.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 10.0)
            };
            let fac = if rejected_last { fac.min(1.0) } else { fac };
            h *= fac;
            rejected_last = false;
        } else {
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.2, 1.0).min(0.9)
            } else {
                0.2
            };
            h *= fac;
            rejected_last = true;
        }
    }
    Err(Error::IntegrationFailure {
        t,
        reason: format!("exceeded {} steps", cfg.max_steps),
    })
}
