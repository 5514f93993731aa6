//! Minimizing movement: `Q+ = argmin_v Phi(v)`, `Phi(v) = ||v - w||^2 / (2 tau) + E(v)`.
//!
//! `Phi` is `(1/tau - 2 alpha)`-convex, so damped Newton with a line search that
//! rejects non-physical trial points converges from `v = w`. Each Newton system
//! is solved by conjugate gradients preconditioned with the mode-wise inverse of
//! `(1/tau - 2 alpha + h) I + M(k)`, `h` the mean diagonal of the potential Hessian.

use rayon::prelude::*;

use super::{BulkModel, BulkState, FlowState, InnerSolver, SchemeConfig, StepReport};
use crate::elastic::{ElasticOperator, ElasticParams, Mat5};
use crate::error::{Error, Result};
use crate::grid::QField;
use crate::potential::prox_envelope;

const MAX_HALVINGS: usize = 50;
const MAX_CG: usize = 400;

pub fn step_minimizing_movement(s: &FlowState, c: &SchemeConfig, p: &ElasticParams) -> Result<FlowState> {
    let op = ElasticOperator::new(s.field.grid, *p);
    minimizing_step(s, c, &op, c.tau)
}

pub(crate) fn minimizing_step(s: &FlowState, c: &SchemeConfig, op: &ElasticOperator, tau: f64) -> Result<FlowState> {
    if 2.0 * op.params.alpha * tau >= 1.0 {
        return Err(Error::InvalidParams(format!("minimizing movement needs tau < 1/(2 alpha), got {tau}")));
    }
    match c.inner_solver {
        InnerSolver::Newton => newton_step(s, c, op, tau),
        InnerSolver::ForwardBackward => forward_backward_step(s, c, op, tau),
    }
}

struct Iterate {
    v: QField,
    bulk: BulkState,
    phi: f64,
    grad: QField,
    /// Size of the terms in `grad`, for a roundoff floor.
    scale: f64,
}

fn iterate(v: QField, w: &QField, tau: f64, op: &ElasticOperator, warm: &BulkState) -> Option<Iterate> {
    let bulk = BulkState::evaluate(&v, BulkModel::Singular, Some(warm)).ok()?;
    Some(assemble_iterate(v, w, tau, op, bulk))
}

fn assemble_iterate(v: QField, w: &QField, tau: f64, op: &ElasticOperator, bulk: BulkState) -> Iterate {
    let alpha = op.params.alpha;
    let spec = v.to_spectral();
    let elastic = op.energy(&spec);
    let mg = op.apply(&spec).to_real();
    let diff = v.sub(w);
    let phi = diff.norm_sq() / (2.0 * tau) + elastic + bulk.integral() - alpha * v.norm_sq();
    let grad = diff.scale(1.0 / tau).axpy(1.0, &mg).axpy(1.0, &bulk.grad).axpy(-2.0 * alpha, &v);
    let scale = v.norm() / tau + mg.norm() + bulk.grad.norm();
    Iterate { v, bulk, phi, grad, scale }
}

fn dot(a: &QField, b: &QField) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum()
}

fn pointwise(h: &[Mat5], d: &QField) -> QField {
    let mut out = QField::zeros(d.grid);
    for (i, m) in h.iter().enumerate() {
        let x = &d.values[5 * i..5 * i + 5];
        for a in 0..5 {
            out.values[5 * i + a] = (0..5).map(|b| m[(a, b)] * x[b]).sum();
        }
    }
    out
}

/// Preconditioned conjugate gradients for `H d = -g`; returns `(d, iterations)`.
fn solve_newton_system(
    op: &ElasticOperator,
    kappa: f64,
    hess: &[Mat5],
    g: &QField,
    rtol: f64,
) -> (QField, usize) {
    let hbar = hess.iter().map(|m| m.trace()).sum::<f64>() / (5.0 * hess.len() as f64);
    let apply = |d: &QField| -> QField {
        let md = op.apply(&d.to_spectral()).to_real();
        md.axpy(kappa, d).axpy(1.0, &pointwise(hess, d))
    };
    let precond = |r: &QField| -> QField { op.solve_shifted(&r.to_spectral(), kappa + hbar, 1.0).to_real() };
    let mut x = QField::zeros(g.grid);
    let mut r = g.scale(-1.0);
    let target = rtol * dot(&r, &r).sqrt();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for k in 0..MAX_CG {
        if dot(&r, &r).sqrt() <= target {
            return (x, k);
        }
        let hp = apply(&p);
        let php = dot(&p, &hp);
        if !(php > 0.0) {
            return (if k == 0 { z } else { x }, k);
        }
        let a = rz / php;
        x = x.axpy(a, &p);
        r = r.axpy(-a, &hp);
        z = precond(&r);
        let rz_new = dot(&r, &z);
        p = z.axpy(rz_new / rz, &p);
        rz = rz_new;
    }
    (x, MAX_CG)
}

fn newton_step(s: &FlowState, c: &SchemeConfig, op: &ElasticOperator, tau: f64) -> Result<FlowState> {
    let w = &s.field;
    let kappa = 1.0 / tau - 2.0 * op.params.alpha;
    let mut cur = assemble_iterate(w.clone(), w, tau, op, s.bulk.clone());
    let g0 = cur.grad.norm().max(f64::MIN_POSITIVE);
    let mut history = vec![cur.phi];
    let mut linear = 0;
    let cell = w.grid.cell_volume();
    for it in 0..c.max_inner {
        let gnorm = cur.grad.norm();
        let vel = cur.v.sub(w).norm() / tau;
        if gnorm <= 1e-13 * cur.scale {
            return Ok(accept(s, cur, op, tau, it, linear, gnorm));
        }
        let hess: Vec<Mat5> = cur.bulk.points.par_iter().map(|p| p.hessian()).collect();
        let rtol = (gnorm / g0).sqrt().min(0.1);
        let (d, k) = solve_newton_system(op, kappa, &hess, &cur.grad, rtol);
        linear += k;
        let decrement = -dot(&cur.grad, &d) * cell;
        let mut step = 1.0;
        let mut next = None;
        for _ in 0..MAX_HALVINGS {
            if let Some(t) = iterate(cur.v.axpy(step, &d), w, tau, op, &cur.bulk) {
                if t.phi <= cur.phi - 1e-4 * step * decrement || t.grad.norm() < 0.5 * gnorm {
                    next = Some(t);
                    break;
                }
            }
            step *= 0.5;
        }
        let small = 0.5 * decrement <= c.inner_tol * cur.phi.abs().max(1.0);
        match next {
            Some(t) => {
                cur = t;
                history.push(cur.phi);
                let gn = cur.grad.norm();
                let vel_new = cur.v.sub(w).norm() / tau;
                if small && (gn <= c.inner_tol.sqrt() * vel_new.max(vel) || gn <= 1e-13 * cur.scale) {
                    return Ok(accept(s, cur, op, tau, it + 1, linear, gn));
                }
            }
            None if small => return Ok(accept(s, cur, op, tau, it, linear, gnorm)),
            None => return Err(Error::InnerNonConvergence { iterations: it, history }),
        }
    }
    Err(Error::InnerNonConvergence { iterations: c.max_inner, history })
}

fn accept(s: &FlowState, cur: Iterate, op: &ElasticOperator, tau: f64, it: usize, linear: usize, residual: f64) -> FlowState {
    let report = StepReport { inner_iterations: it, linear_iterations: linear, residual, retries: 0 };
    FlowState::assemble(s.t + tau, cur.v, op, cur.bulk, tau, report)
}

/// Forward step on `||v - w||^2/(2 tau) + G(v) - alpha ||v||^2`, backward step on
/// `int psi` through the pointwise proximal map with penalty `1/(2 sigma)`.
fn forward_backward_step(s: &FlowState, c: &SchemeConfig, op: &ElasticOperator, tau: f64) -> Result<FlowState> {
    let w = &s.field;
    let m_max = op.mats.iter().map(|m| m.symmetric_eigenvalues().max()).fold(0.0, f64::max);
    let sigma = 1.0 / (1.0 / tau + m_max);
    let pen = 0.5 / sigma;
    let mut cur = assemble_iterate(w.clone(), w, tau, op, s.bulk.clone());
    let mut history = vec![cur.phi];
    let mut proxes: Option<Vec<crate::potential::ProxPoint>> = None;
    for it in 0..c.max_inner {
        let smooth_grad = cur.grad.axpy(-1.0, &cur.bulk.grad);
        let y = cur.v.axpy(-sigma, &smooth_grad);
        let warm = proxes.take();
        let pts: Vec<_> = (0..y.points())
            .into_par_iter()
            .map(|i| prox_envelope(&y.get(i), pen, warm.as_ref().map(|p| &p[i])))
            .collect::<Result<_>>()?;
        let mut v = QField::zeros(y.grid);
        for (i, p) in pts.iter().enumerate() {
            v.set(i, &p.prox());
        }
        proxes = Some(pts);
        let next = iterate(v, w, tau, op, &cur.bulk).ok_or(Error::InnerNonConvergence { iterations: it, history: history.clone() })?;
        let decrease = cur.phi - next.phi;
        cur = next;
        history.push(cur.phi);
        if decrease.abs() <= c.inner_tol * cur.phi.abs().max(1.0) {
            let residual = cur.grad.norm();
            let report = StepReport { inner_iterations: it + 1, linear_iterations: 0, residual, retries: 0 };
            return Ok(FlowState::assemble(s.t + tau, cur.v, op, cur.bulk, tau, report));
        }
    }
    Err(Error::InnerNonConvergence { iterations: c.max_inner, history })
}
