//! Moreau-Yosida envelope `psi_n(Q) = min_A { n |A - Q|^2 + psi(A) }`.
//!
//! The minimizer shares the eigenframe of `Q`, so the solve runs over the
//! eigenvalues `mu` alone: damped Newton on the plane `sum mu = 0`, halving the
//! step until the objective decreases inside the physical set.

use nalgebra::{Matrix3, Vector3};

use super::dual::{solve_dual_from, DualState};
use crate::error::{Error, Result};
use crate::tensor::{margin_of, EigenData, QTensor};

/// Objective-gradient tolerance, relative to `max(1, 2 pen |mu - lambda|)`.
pub const PROX_TOL: f64 = 1e-10;

const MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 60;
const START_MARGIN: f64 = 0.02;

#[derive(Debug, Clone, Copy)]
pub struct MoreauYosida {
    pub n: u32,
    pub prox: QTensor,
    pub value: f64,
    pub grad: QTensor,
}

/// Proximal point of `psi` with penalty `pen |A - Q|^2`.
#[derive(Debug, Clone, Copy)]
pub struct ProxPoint {
    pub penalty: f64,
    pub eigen: EigenData,
    /// Eigenvalues of the proximal point, in the order of `eigen.lambda`.
    pub mu: [f64; 3],
    pub dual: DualState,
    pub value: f64,
    pub iterations: usize,
}

impl ProxPoint {
    pub fn prox(&self) -> QTensor {
        from_frame(&self.eigen, self.mu)
    }

    /// `2 pen (Q - prox)`.
    pub fn grad(&self) -> QTensor {
        let l = self.eigen.lambda;
        let d = [0, 1, 2].map(|i| 2.0 * self.penalty * (l[i] - self.mu[i]));
        from_frame(&self.eigen, d)
    }
}

fn from_frame(e: &EigenData, d: [f64; 3]) -> QTensor {
    let m = e.frame * Matrix3::from_diagonal(&Vector3::from(d)) * e.frame.transpose();
    QTensor::from_matrix(&m).expect("finite")
}

pub fn moreau_yosida(q: &QTensor, n: u32) -> Result<MoreauYosida> {
    if n == 0 {
        return Err(Error::InvalidParams("envelope index must be positive".into()));
    }
    let p = prox_envelope(q, n as f64, None)?;
    Ok(MoreauYosida { n, prox: p.prox(), value: p.value, grad: p.grad() })
}

/// Euclidean projection of `y` onto `{ x >= 0, sum x = total }`.
fn project_simplex(y: [f64; 3], total: f64) -> [f64; 3] {
    let mut s = y;
    s.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, v) in s.iter().enumerate() {
        acc += v;
        let t = (acc - total) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    y.map(|v| (v - theta).max(0.0))
}

/// Nearest eigenvalue triple with every entry at least `-1/3 + floor`.
fn project_shrunk(lambda: [f64; 3], floor: f64) -> [f64; 3] {
    let shift = 1.0 / 3.0 - floor;
    let y = project_simplex(lambda.map(|l| l + shift), 1.0 - 3.0 * floor);
    y.map(|v| v - shift)
}

/// Distance from `q` to the closure of the physical set.
pub fn distance_to_domain(q: &QTensor) -> f64 {
    let l = q.eigen().lambda;
    let p = project_shrunk(l, 0.0);
    (0..3).map(|i| (l[i] - p[i]).powi(2)).sum::<f64>().sqrt()
}

/// Largest distance between two points of the closed eigenvalue box, `sqrt 2`.
pub fn domain_diameter() -> f64 {
    let vertices: [[f64; 3]; 3] = [[2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0], [-1.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0], [-1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0]];
    let mut d: f64 = 0.0;
    for a in &vertices {
        for b in &vertices {
            d = d.max((0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt());
        }
    }
    d
}

struct Trial {
    mu: [f64; 3],
    dual: DualState,
    perm: [usize; 3],
    value: f64,
    grad: [f64; 3],
}

fn trial(mu: [f64; 3], lambda: &[f64; 3], pen: f64, warm: Option<&DualState>) -> Option<Trial> {
    let mut perm = [0, 1, 2];
    perm.sort_by(|&i, &j| mu[i].total_cmp(&mu[j]));
    let sorted = perm.map(|i| mu[i]);
    let dual = solve_dual_from(sorted, warm).ok()?;
    let mut nu = [0.0; 3];
    for k in 0..3 {
        nu[perm[k]] = dual.nu[k];
    }
    let dist2: f64 = (0..3).map(|i| (mu[i] - lambda[i]).powi(2)).sum();
    let value = pen * dist2 + dual.psi;
    let grad = [0, 1, 2].map(|i| 2.0 * pen * (mu[i] - lambda[i]) + nu[i]);
    Some(Trial { mu, dual, perm, value, grad })
}

fn norm3(v: &[f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn tolerance(t: &Trial, lambda: &[f64; 3], pen: f64) -> f64 {
    let pull: f64 = 2.0 * pen * (0..3).map(|i| (t.mu[i] - lambda[i]).powi(2)).sum::<f64>().sqrt();
    PROX_TOL * pull.max(1.0)
}

/// Proximal point of `psi` at `q` for penalty `pen`, optionally starting from a
/// previous proximal point.
pub fn prox_envelope(q: &QTensor, pen: f64, warm: Option<&ProxPoint>) -> Result<ProxPoint> {
    if !(pen > 0.0 && pen.is_finite()) {
        return Err(Error::InvalidParams(format!("penalty must be positive, got {pen}")));
    }
    let eigen = q.eigen();
    let lambda = eigen.lambda;
    let start = |m: [f64; 3]| margin_of(&{
        let mut s = m;
        s.sort_by(f64::total_cmp);
        s
    });
    let mut cur = None;
    if let Some(w) = warm {
        if start(w.mu) > 0.0 {
            cur = trial(w.mu, &lambda, pen, Some(&w.dual));
        }
    }
    if cur.is_none() {
        let mu0 = if margin_of(&lambda) >= START_MARGIN { lambda } else { project_shrunk(lambda, START_MARGIN) };
        cur = trial(mu0, &lambda, pen, None);
    }
    let mut cur = cur.ok_or(Error::ProxNonConvergence { iterations: 0, residual: f64::INFINITY })?;

    for it in 0..MAX_ITER {
        let gnorm = norm3(&cur.grad);
        if gnorm <= tolerance(&cur, &lambda, pen) {
            return Ok(ProxPoint { penalty: pen, eigen, mu: cur.mu, dual: cur.dual, value: cur.value, iterations: it });
        }
        // plane Hessian of psi, permuted back to the order of mu
        let ks = cur.dual.plane_hessian();
        let mut k = Matrix3::zeros();
        for a in 0..3 {
            for b in 0..3 {
                k[(cur.perm[a], cur.perm[b])] = ks[(a, b)];
            }
        }
        let scale = 2.0 * pen + k.diagonal().abs().max();
        let m = Matrix3::identity() * (2.0 * pen) + k + Matrix3::repeat(scale / 3.0);
        let g = Vector3::from(cur.grad);
        let mut d = match m.cholesky() {
            Some(c) => c.solve(&(-g)),
            None => -g / scale,
        };
        let mean = d.sum() / 3.0;
        d.add_scalar_mut(-mean);
        let slope = g.dot(&d);
        let mut step = 1.0;
        let mut next = None;
        for _ in 0..MAX_HALVINGS {
            let mu = [0, 1, 2].map(|i| cur.mu[i] + step * d[i]);
            if start(mu) > 0.0 {
                if let Some(t) = trial(mu, &lambda, pen, Some(&cur.dual)) {
                    if t.value <= cur.value + 1e-4 * step * slope || norm3(&t.grad) < 0.5 * gnorm {
                        next = Some(t);
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        match next {
            Some(t) => cur = t,
            None => return Err(Error::ProxNonConvergence { iterations: it, residual: gnorm }),
        }
    }
    Err(Error::ProxNonConvergence { iterations: MAX_ITER, residual: norm3(&cur.grad) })
}
