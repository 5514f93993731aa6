//! Dual problem: find multipliers `nu` whose Gibbs moments equal `lambda + 1/3`.

use nalgebra::{Matrix2, Matrix3, Vector2};

use super::partition::{levels_agree, partition_at, Partition, MAX_NODES, MIN_NODES};
use crate::error::{Error, Result};
use crate::tensor::margin_of;

/// Below this eigenvalue margin a solve is refused.
pub const MARGIN_FLOOR: f64 = 1e-12;
/// Cold solves below this margin go through continuation from the origin.
pub const CONTINUATION_BELOW: f64 = 1e-3;

/// Relative tolerance on each moment `m_i = lambda_i + 1/3`.
pub const MOMENT_TOL: f64 = 1e-12;

const MAX_NEWTON: usize = 200;
const MAX_HALVINGS: usize = 60;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualState {
    /// Multipliers in the eigenframe, traceless gauge, ascending eigenvalue order.
    pub nu: [f64; 3],
    /// `(nu_1 - nu_3, nu_2 - nu_3)`, exact to working precision even when the
    /// traceless multipliers are large.
    pub nu_reduced: [f64; 2],
    /// `log Z(nu)` in the traceless gauge.
    pub log_z: f64,
    pub moments: [f64; 3],
    pub cov: Matrix3<f64>,
    /// `psi = nu . (lambda + 1/3) - log Z(nu)`.
    pub psi: f64,
    pub nodes: usize,
    pub iterations: usize,
}

impl DualState {
    fn reduced(&self) -> [f64; 2] {
        self.nu_reduced
    }

    /// Inverse of the leading 2x2 covariance block: the Hessian of `psi` in the
    /// coordinates `(lambda_1, lambda_2)` with `lambda_3 = -lambda_1 - lambda_2`.
    pub fn reduced_hessian(&self) -> Matrix2<f64> {
        let (c11, c12, c22) = (self.cov[(0, 0)], self.cov[(0, 1)], self.cov[(1, 1)]);
        let (s1, s2) = (c11.sqrt(), c22.sqrt());
        let r = c12 / (s1 * s2);
        let det = 1.0 - r * r;
        Matrix2::new(1.0 / (det * c11), -r / (det * s1 * s2), -r / (det * s1 * s2), 1.0 / (det * c22))
    }

    /// Hessian of `psi` as a symmetric 3x3 form on eigenvalue vectors summing to zero,
    /// with `(1,1,1)` in its kernel.
    pub fn plane_hessian(&self) -> Matrix3<f64> {
        let h = self.reduced_hessian();
        // d(lambda_1, lambda_2) along a traceless direction v is (v_1, v_2) after
        // projecting v onto the plane.
        let mut t = nalgebra::Matrix2x3::zeros();
        t[(0, 0)] = 1.0;
        t[(1, 1)] = 1.0;
        let proj = Matrix3::identity() - Matrix3::repeat(1.0 / 3.0);
        let tp = t * proj;
        let k = tp.transpose() * h * tp;
        0.5 * (k + k.transpose())
    }
}

struct Iterate {
    x: [f64; 2],
    p: Partition,
    g: f64,
}

fn iterate(x: [f64; 2], t: &[f64; 3], nodes: usize) -> Iterate {
    let p = partition_at([x[0], x[1], 0.0], nodes);
    let g = p.log_z - x[0] * t[0] - x[1] * t[1];
    Iterate { x, p, g }
}

fn residual(it: &Iterate, t: &[f64; 3]) -> [f64; 2] {
    [it.p.moments[0] - t[0], it.p.moments[1] - t[1]]
}

fn converged(r: &[f64; 2], t: &[f64; 3]) -> bool {
    let r2 = -(r[0] + r[1]);
    r[0].abs() <= MOMENT_TOL * t[0] && r[1].abs() <= MOMENT_TOL * t[1] && r2.abs() <= MOMENT_TOL * t[2]
}

fn scaled_residual(r: &[f64; 2], t: &[f64; 3]) -> f64 {
    let r2 = -(r[0] + r[1]);
    (r[0] / t[0]).abs().max((r[1] / t[1]).abs()).max((r2 / t[2]).abs())
}

fn finish(it: Iterate, t: &[f64; 3], iterations: usize) -> DualState {
    let [a, b] = it.x;
    let mean = (a + b) / 3.0;
    DualState {
        nu: [a - mean, b - mean, -mean],
        nu_reduced: [a, b],
        log_z: it.p.log_z - mean,
        moments: it.p.moments,
        cov: it.p.cov,
        psi: a * t[0] + b * t[1] - it.p.log_z,
        nodes: it.p.nodes,
        iterations,
    }
}

/// Damped Newton on `g(a, b) = log Z(a, b, 0) - a t_1 - b t_2`.
fn newton(t: &[f64; 3], x0: [f64; 2], nodes: usize) -> Result<DualState> {
    let mut nodes = nodes.clamp(MIN_NODES, MAX_NODES);
    let mut cur = iterate(x0, t, nodes);
    if !cur.g.is_finite() {
        return Err(Error::DualStagnation { iterations: 0, residual: f64::INFINITY });
    }
    for k in 0..MAX_NEWTON {
        let r = residual(&cur, t);
        if converged(&r, t) {
            if nodes >= MAX_NODES {
                return Ok(finish(cur, t, k));
            }
            let finer = iterate(cur.x, t, 2 * nodes);
            nodes *= 2;
            if levels_agree(&cur.p, &finer.p) {
                return Ok(finish(cur, t, k));
            }
            cur = finer;
            continue;
        }
        let (c11, c12, c22) = (cur.p.cov[(0, 0)], cur.p.cov[(0, 1)], cur.p.cov[(1, 1)]);
        let (s1, s2) = (c11.sqrt(), c22.sqrt());
        let rho = c12 / (s1 * s2);
        let det = 1.0 - rho * rho;
        let y = Vector2::new(r[0] / s1, r[1] / s2);
        let d = if det > 1e-14 && det.is_finite() {
            [(-y[0] + rho * y[1]) / det / s1, (-y[1] + rho * y[0]) / det / s2]
        } else {
            [-r[0] / c11, -r[1] / c22]
        };
        if !(d[0].is_finite() && d[1].is_finite()) {
            return Err(Error::DualStagnation { iterations: k, residual: scaled_residual(&r, t) });
        }
        let slope = r[0] * d[0] + r[1] * d[1];
        let res0 = scaled_residual(&r, t);
        let mut accepted = None;
        let mut step = 1.0;
        for _ in 0..MAX_HALVINGS {
            let trial = iterate([cur.x[0] + step * d[0], cur.x[1] + step * d[1]], t, nodes);
            if trial.g.is_finite() {
                let armijo = trial.g <= cur.g + ARMIJO * step * slope;
                let tr = residual(&trial, t);
                if armijo || scaled_residual(&tr, t) < 0.5 * res0 {
                    accepted = Some(trial);
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some(trial) => cur = trial,
            None => return Err(Error::DualStagnation { iterations: k, residual: res0 }),
        }
    }
    let r = residual(&cur, t);
    Err(Error::DualStagnation { iterations: MAX_NEWTON, residual: scaled_residual(&r, t) })
}

/// Starting multipliers from the large-multiplier asymptotics `m_i ~ 1/(2|nu_i - nu_max|)`.
fn initial_guess(t: &[f64; 3]) -> [f64; 2] {
    [0.5 / t[2] - 0.5 / t[0], 0.5 / t[2] - 0.5 / t[1]]
}

fn check_lambda(lambda: &[f64; 3]) -> Result<f64> {
    if let Some(&v) = lambda.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(v));
    }
    debug_assert!(lambda[0] <= lambda[1] && lambda[1] <= lambda[2]);
    let margin = margin_of(lambda);
    if margin <= 0.0 {
        return Err(Error::NotPhysical { lambda1: lambda[0] });
    }
    if margin < MARGIN_FLOOR {
        return Err(Error::BoundaryProximity { margin, floor: MARGIN_FLOOR });
    }
    Ok(margin)
}

fn shifted(lambda: &[f64; 3]) -> [f64; 3] {
    lambda.map(|l| l + 1.0 / 3.0)
}

/// Solve the dual problem for ascending eigenvalues `lambda`.
pub fn solve_dual(lambda: [f64; 3]) -> Result<DualState> {
    solve_dual_from(lambda, None)
}

/// As [`solve_dual`], starting Newton from a nearby solution when one is given.
pub fn solve_dual_from(lambda: [f64; 3], warm: Option<&DualState>) -> Result<DualState> {
    let margin = check_lambda(&lambda)?;
    let t = shifted(&lambda);
    if let Some(w) = warm {
        if let Ok(s) = newton(&t, w.reduced(), w.nodes) {
            return Ok(s);
        }
    }
    if margin >= CONTINUATION_BELOW {
        if let Ok(s) = newton(&t, initial_guess(&t), MIN_NODES) {
            return Ok(s);
        }
    }
    continuation(&lambda, margin)
}

/// Follow `s lambda` from near the origin, with the margin shrinking by a
/// factor of four per stage.
fn continuation(lambda: &[f64; 3], margin: f64) -> Result<DualState> {
    let s_for = |m: f64| -> f64 {
        let lo = if lambda[0] < 0.0 { (1.0 / 3.0 - m) / -lambda[0] } else { f64::INFINITY };
        let hi = if lambda[2] > 0.0 { (2.0 / 3.0 - m) / lambda[2] } else { f64::INFINITY };
        lo.min(hi).min(1.0)
    };
    let mut target = 0.1;
    let mut state: Option<DualState> = None;
    let mut total = 0;
    loop {
        let s = if target > margin { s_for(target) } else { 1.0 };
        let l = lambda.map(|v| s * v);
        let t = shifted(&l);
        let next = match &state {
            Some(w) => newton(&t, w.reduced(), w.nodes)?,
            None => newton(&t, initial_guess(&t), MIN_NODES)?,
        };
        total += next.iterations;
        state = Some(next);
        if s >= 1.0 {
            break;
        }
        target *= 0.25;
    }
    let mut out = state.unwrap();
    out.iterations = total;
    Ok(out)
}
