//! Dense complex linear algebra kernels sized for this crate.
//!
//! Everything here operates on operators over truncated Fock spaces, so the
//! matrices are small (a few hundred rows at most). Simple, accuracy-first
//! algorithms win over asymptotics at that scale: LU with partial pivoting,
//! cyclic Jacobi for Hermitian eigenproblems, one-sided Jacobi for singular
//! values, and closed-form eigensolvers for the tiny non-Hermitian mode
//! matrices (chains of up to three modes).

use crate::{C64, Error, Result};
use ndarray::prelude::*;

/// Conjugate transpose.
pub fn dagger(a: &ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Frobenius norm.
pub fn frobenius(a: &ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry magnitude.
pub fn max_abs(a: &ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Largest entrywise difference between two equal-shaped matrices.
pub fn max_abs_diff(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> f64 {
    assert_eq!(a.dim(), b.dim(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Max deviation from Hermiticity, max_ij |a_ij - conj(a_ji)|.
pub fn hermiticity_residual(a: &ArrayView2<C64>) -> f64 {
    let n = a.nrows();
    let mut r: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            r = r.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    r
}

/// Complex identity matrix.
pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag(&Array1::from_elem(n, C64::new(1.0, 0.0)))
}

/// Matrix 1-norm (max column sum), the scaling norm for the exponential.
pub fn one_norm(a: &ArrayView2<C64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        m = m.max(a.column(j).iter().map(|z| z.norm()).sum());
    }
    m
}

/// LU factorization with partial pivoting, kept for repeated solves.
pub struct Lu {
    lu: Array2<C64>,
    perm: Vec<usize>,
}

/// Factors a square matrix; fails if a pivot collapses relative to the scale.
pub fn lu_factor(a: &ArrayView2<C64>, context: &'static str) -> Result<Lu> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "lu_factor needs a square matrix");
    let mut lu = a.to_owned();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = max_abs(&lu.view()).max(f64::MIN_POSITIVE);
    for k in 0..n {
        let mut piv = k;
        let mut piv_mag = lu[[k, k]].norm();
        for i in (k + 1)..n {
            let mag = lu[[i, k]].norm();
            if mag > piv_mag {
                piv = i;
                piv_mag = mag;
            }
        }
        if piv_mag < 1e-300 || piv_mag < 1e-16 * scale * (n as f64) {
            return Err(Error::SingularMatrix { context });
        }
        if piv != k {
            perm.swap(k, piv);
            for j in 0..n {
                let tmp = lu[[k, j]];
                lu[[k, j]] = lu[[piv, j]];
                lu[[piv, j]] = tmp;
            }
        }
        let d = lu[[k, k]];
        for i in (k + 1)..n {
            let f = lu[[i, k]] / d;
            lu[[i, k]] = f;
            for j in (k + 1)..n {
                let sub = f * lu[[k, j]];
                lu[[i, j]] -= sub;
            }
        }
    }
    Ok(Lu { lu, perm })
}

impl Lu {
    pub fn solve_vec(&self, b: &ArrayView1<C64>) -> Array1<C64> {
        let n = self.perm.len();
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut x = Array1::zeros(n);
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s / self.lu[[i, i]];
        }
        x
    }

    pub fn solve_mat(&self, b: &ArrayView2<C64>) -> Array2<C64> {
        let n = self.perm.len();
        assert_eq!(b.nrows(), n, "rhs row count mismatch");
        let mut x = Array2::zeros((n, b.ncols()));
        for j in 0..b.ncols() {
            let col = self.solve_vec(&b.column(j));
            x.column_mut(j).assign(&col);
        }
        x
    }
}

/// One-shot linear solve A X = B.
pub fn solve(a: &ArrayView2<C64>, b: &ArrayView2<C64>, context: &'static str) -> Result<Array2<C64>> {
    Ok(lu_factor(a, context)?.solve_mat(b))
}

/// Eigenvalues and eigenvectors of a Hermitian matrix by cyclic Jacobi
/// rotations. Returns eigenvalues ascending with matching eigenvector
/// columns; the input is symmetrized implicitly by reading only one
/// triangle's worth of information through Hermitian updates.
pub fn eigh(a: &ArrayView2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    let (vals, vecs) = jacobi_hermitian(a, true)?;
    Ok((vals, vecs.expect("vectors requested")))
}

/// Eigenvalues only, ascending.
pub fn eigh_values(a: &ArrayView2<C64>) -> Result<Vec<f64>> {
    Ok(jacobi_hermitian(a, false)?.0)
}

fn jacobi_hermitian(a: &ArrayView2<C64>, want_vecs: bool) -> Result<(Vec<f64>, Option<Array2<C64>>)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigh needs a square matrix");
    let mut h = a.to_owned();
    // Force exact Hermiticity so the rotations stay consistent.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (h[[i, j]] + h[[j, i]].conj());
            h[[i, j]] = avg;
            h[[j, i]] = avg.conj();
        }
        h[[i, i]] = C64::new(h[[i, i]].re, 0.0);
    }
    let mut v = want_vecs.then(|| identity(n));
    let fro = frobenius(&h.view()).max(f64::MIN_POSITIVE);
    let tol = 1e-15 * fro;
    for _sweep in 0..100 {
        let mut off: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * h[[i, j]].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            let mut order: Vec<usize> = (0..n).collect();
            let vals: Vec<f64> = (0..n).map(|i| h[[i, i]].re).collect();
            order.sort_by(|&x, &y| vals[x].partial_cmp(&vals[y]).unwrap());
            let sorted: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
            let vecs = v.map(|v| {
                let mut out = Array2::zeros((n, n));
                for (new, &old) in order.iter().enumerate() {
                    out.column_mut(new).assign(&v.column(old));
                }
                out
            });
            return Ok((sorted, vecs));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let w = h[[p, q]];
                let wn = w.norm();
                if wn <= 1e-300 {
                    continue;
                }
                let phase = w / wn;
                let app = h[[p, p]].re;
                let aqq = h[[q, q]].re;
                // tan(2 theta) = 2|w| / (app - aqq); stable half-angle form.
                let tau = (app - aqq) / (2.0 * wn);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Columns: [colp, colq] <- [colp, colq] * U with
                // U = [[c, -s*phase], [s*conj(phase), c]].
                for i in 0..n {
                    let hip = h[[i, p]];
                    let hiq = h[[i, q]];
                    h[[i, p]] = c * hip + s * phase.conj() * hiq;
                    h[[i, q]] = -s * phase * hip + c * hiq;
                }
                // Rows: A <- U^H * A.
                for j in 0..n {
                    let hpj = h[[p, j]];
                    let hqj = h[[q, j]];
                    h[[p, j]] = c * hpj + s * phase * hqj;
                    h[[q, j]] = -s * phase.conj() * hpj + c * hqj;
                }
                if let Some(v) = v.as_mut() {
                    for i in 0..n {
                        let vip = v[[i, p]];
                        let viq = v[[i, q]];
                        v[[i, p]] = c * vip + s * phase.conj() * viq;
                        v[[i, q]] = -s * phase * vip + c * viq;
                    }
                }
            }
        }
    }
    Err(Error::NoConvergence { context: "hermitian jacobi eigensolve" })
}

/// Singular value decomposition by one-sided Jacobi on the columns.
/// Singular values come back descending; `v` holds the right singular
/// vectors as columns (n x n). One-sided Jacobi resolves tiny singular
/// values with high relative accuracy, which the rank decisions in the
/// structure analysis depend on.
pub struct Svd {
    pub s: Vec<f64>,
    pub v: Array2<C64>,
}

pub fn svd(a: &ArrayView2<C64>) -> Result<Svd> {
    let n = a.ncols();
    let mut cols = a.to_owned();
    let mut v = identity(n);
    // Rotations preserve the Frobenius norm, so this scale is exact for
    // the whole iteration. Columns this far below it hold only rounding
    // noise; rotating them chases that noise forever without settling.
    let dead = 1e-15 * frobenius(a);
    let dead2 = dead * dead;
    let mut converged = false;
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut w = C64::new(0.0, 0.0);
                for i in 0..cols.nrows() {
                    let ap = cols[[i, p]];
                    let aq = cols[[i, q]];
                    alpha += ap.norm_sqr();
                    beta += aq.norm_sqr();
                    w += ap.conj() * aq;
                }
                if alpha <= dead2 || beta <= dead2 {
                    continue;
                }
                let wn = w.norm();
                // Relative orthogonality of the column pair; sqrt(alpha *
                // beta) is the product of the two column norms.
                if wn <= 1e-14 * (alpha * beta).sqrt() + 1e-300 {
                    continue;
                }
                rotated = true;
                let phase = w / wn;
                let tau = (alpha - beta) / (2.0 * wn);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..cols.nrows() {
                    let ap = cols[[i, p]];
                    let aq = cols[[i, q]];
                    cols[[i, p]] = c * ap + s * phase.conj() * aq;
                    cols[[i, q]] = -s * phase * ap + c * aq;
                }
                for i in 0..n {
                    let vp = v[[i, p]];
                    let vq = v[[i, q]];
                    v[[i, p]] = c * vp + s * phase.conj() * vq;
                    v[[i, q]] = -s * phase * vp + c * vq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { context: "one-sided jacobi svd" });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| cols.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut vs = Array2::zeros((n, n));
    for (new, &old) in order.iter().enumerate() {
        vs.column_mut(new).assign(&v.column(old));
    }
    Ok(Svd { s, v: vs })
}

/// Singular values only, descending.
pub fn svd_values(a: &ArrayView2<C64>) -> Result<Vec<f64>> {
    Ok(svd(a)?.s)
}

/// Eigenvalues and unit-norm right eigenvectors (as columns) of a general
/// complex matrix of size 1..=3, via closed forms plus Newton polishing.
/// Chains in this crate have at most three modes, so nothing larger is
/// needed; sizes above 3 are rejected.
pub fn eig_small(a: &ArrayView2<C64>) -> Result<(Vec<C64>, Array2<C64>)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eig_small needs a square matrix");
    match n {
        1 => Ok((vec![a[[0, 0]]], identity(1))),
        2 => eig2(a),
        3 => eig3(a),
        _ => Err(Error::Unsupported {
            reason: format!("dense eigensolve implemented for n <= 3, got n = {n}"),
        }),
    }
}

fn eig2(a: &ArrayView2<C64>) -> Result<(Vec<C64>, Array2<C64>)> {
    let tr = a[[0, 0]] + a[[1, 1]];
    let det = a[[0, 0]] * a[[1, 1]] - a[[0, 1]] * a[[1, 0]];
    let disc = (tr * tr - 4.0 * det).sqrt();
    // Pick the sign that avoids cancellation in tr +/- disc.
    let s = if (tr.conj() * disc).re >= 0.0 { disc } else { -disc };
    let l1 = 0.5 * (tr + s);
    let l2 = if l1.norm() > 0.0 { det / l1 } else { tr - l1 };
    let vals = vec![l1, l2];
    let mut vecs = Array2::zeros((2, 2));
    for (k, &lam) in vals.iter().enumerate() {
        let cand1 = [a[[0, 1]], lam - a[[0, 0]]];
        let cand2 = [lam - a[[1, 1]], a[[1, 0]]];
        let n1 = cand1[0].norm_sqr() + cand1[1].norm_sqr();
        let n2 = cand2[0].norm_sqr() + cand2[1].norm_sqr();
        let (mut v0, mut v1) = if n1 >= n2 {
            (cand1[0], cand1[1])
        } else {
            (cand2[0], cand2[1])
        };
        if v0.norm_sqr() + v1.norm_sqr() < 1e-300 {
            // Diagonal matrix: coordinate eigenvectors.
            v0 = C64::new(if k == 0 { 1.0 } else { 0.0 }, 0.0);
            v1 = C64::new(if k == 0 { 0.0 } else { 1.0 }, 0.0);
        }
        let nrm = (v0.norm_sqr() + v1.norm_sqr()).sqrt();
        vecs[[0, k]] = v0 / nrm;
        vecs[[1, k]] = v1 / nrm;
    }
    Ok((vals, vecs))
}

fn eig3(a: &ArrayView2<C64>) -> Result<(Vec<C64>, Array2<C64>)> {
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    let m = a.mapv(|z| z / scale);
    // Characteristic polynomial l^3 + c2 l^2 + c1 l + c0 of the scaled matrix.
    let tr = m[[0, 0]] + m[[1, 1]] + m[[2, 2]];
    let m2 = m.dot(&m);
    let tr2 = m2[[0, 0]] + m2[[1, 1]] + m2[[2, 2]];
    let det = m[[0, 0]] * (m[[1, 1]] * m[[2, 2]] - m[[1, 2]] * m[[2, 1]])
        - m[[0, 1]] * (m[[1, 0]] * m[[2, 2]] - m[[1, 2]] * m[[2, 0]])
        + m[[0, 2]] * (m[[1, 0]] * m[[2, 1]] - m[[1, 1]] * m[[2, 0]]);
    let c2 = -tr;
    let c1 = 0.5 * (tr * tr - tr2);
    let c0 = -det;
    // Depressed cubic t^3 + p t + q with l = t - c2/3.
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = (0.25 * q * q + p * p * p / 27.0).sqrt();
    let r1 = -0.5 * q + disc;
    let r2 = -0.5 * q - disc;
    let r = if r1.norm() >= r2.norm() { r1 } else { r2 };
    let mut roots = [C64::new(0.0, 0.0); 3];
    if r.norm() < 1e-300 {
        // p and q both vanish: triple root at the shift.
        for root in roots.iter_mut() {
            *root = -shift;
        }
    } else {
        let u0 = r.cbrt();
        let omega = C64::new(-0.5, 0.75f64.sqrt());
        for (k, root) in roots.iter_mut().enumerate() {
            let u = u0 * omega.powu(k as u32);
            *root = u - p / (3.0 * u) - shift;
        }
    }
    // Newton polish on the monic characteristic polynomial.
    for root in roots.iter_mut() {
        for _ in 0..3 {
            let l = *root;
            let f = ((l + c2) * l + c1) * l + c0;
            let df = (3.0 * l + 2.0 * c2) * l + c1;
            if df.norm() < 1e-300 {
                break;
            }
            let step = f / df;
            *root -= step;
            if step.norm() <= 1e-18 * root.norm().max(1.0) {
                break;
            }
        }
    }
    let vals: Vec<C64> = roots.iter().map(|&t| t * scale).collect();
    let mut vecs = Array2::zeros((3, 3));
    for (k, &lam) in vals.iter().enumerate() {
        let v = null_vector_3(a, lam)?;
        vecs.column_mut(k).assign(&v);
    }
    // Keep eigenpair residuals honest; the exceptional-point guard upstream
    // handles near-defective matrices, so only gross failures are fatal.
    for k in 0..3 {
        let v = vecs.column(k);
        let av = a.dot(&v);
        let mut res: f64 = 0.0;
        for i in 0..3 {
            res = res.max((av[i] - vals[k] * v[i]).norm());
        }
        if res > 1e-7 * scale {
            return Err(Error::NoConvergence { context: "3x3 eigenvector refinement" });
        }
    }
    Ok((vals, vecs))
}

/// Unit null-ish vector of (A - lambda I) for a computed eigenvalue of a
/// 3x3 matrix: unconjugated cross products of row pairs give vectors
/// annihilated by all rows; fall back to inverse iteration when the rows
/// are too parallel to resolve.
fn null_vector_3(a: &ArrayView2<C64>, lam: C64) -> Result<Array1<C64>> {
    let mut b = a.to_owned();
    for i in 0..3 {
        b[[i, i]] -= lam;
    }
    let rows: Vec<Array1<C64>> = (0..3).map(|i| b.row(i).to_owned()).collect();
    let mut best: Option<Array1<C64>> = None;
    let mut best_norm = 0.0;
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let c = cross3(&rows[i], &rows[j]);
        let n = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > best_norm {
            best_norm = n;
            best = Some(c);
        }
    }
    let scale = max_abs(&b.view()).max(1.0);
    let v = match best {
        Some(c) if best_norm > 1e-14 * scale * scale => c,
        _ => {
            // Rows nearly rank-1: one inverse-iteration step from a fixed
            // start, with pivots floored away from zero.
            let mut shifted = b.clone();
            let floor = 1e-14 * scale;
            for i in 0..3 {
                if shifted[[i, i]].norm() < floor {
                    shifted[[i, i]] += C64::new(floor, 0.0);
                }
            }
            let start = Array1::from_vec(vec![
                C64::new(1.0, 0.0),
                C64::new(0.5, 0.25),
                C64::new(0.25, -0.5),
            ]);
            let lu = lu_factor(&shifted.view(), "3x3 inverse iteration")?;
            lu.solve_vec(&start.view())
        }
    };
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n < 1e-300 {
        return Err(Error::NoConvergence { context: "3x3 null vector" });
    }
    Ok(v.mapv(|z| z / n))
}

fn cross3(x: &Array1<C64>, y: &Array1<C64>) -> Array1<C64> {
    Array1::from_vec(vec![
        x[1] * y[2] - x[2] * y[1],
        x[2] * y[0] - x[0] * y[2],
        x[0] * y[1] - x[1] * y[0],
    ])
}

/// Trace distance (1/2) * tr |A - B| between Hermitian matrices.
pub fn trace_distance(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> f64 {
    let diff = a - b;
    let vals = eigh_values(&diff.view()).expect("hermitian eigensolve");
    0.5 * vals.iter().map(|x| x.abs()).sum::<f64>()
}
