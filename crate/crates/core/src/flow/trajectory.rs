//! Trajectories, their time series, and the energy-identity and EVI residuals.

use serde::{Deserialize, Serialize};

use super::minimizing::minimizing_step;
use super::semi_implicit::explicit_bulk_step;
use super::{total_energy, BulkModel, FlowState, SchemeConfig, SchemeKind};
use crate::elastic::{ElasticOperator, ElasticParams};
use crate::error::{Error, Result};
use crate::grid::QField;

pub const SERIES_COLUMNS: [&str; 10] =
    ["t", "energy", "elastic", "bulk", "quad", "slope_l2", "grad_l2_sq", "min_margin", "linf_dev_mean", "eff_tau"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub energy: f64,
    pub elastic: f64,
    pub bulk: f64,
    pub quad: f64,
    pub slope_l2: f64,
    pub grad_l2_sq: f64,
    pub min_margin: f64,
    pub linf_dev_mean: f64,
    pub eff_tau: f64,
    /// `||Laplacian Q||`.
    pub lap_l2: f64,
    /// `||Q||`.
    pub q_l2: f64,
    /// `||dG(Q)||`.
    pub elastic_grad_l2: f64,
    /// `||dQ/dt||` by the difference quotient of the step ending here (the first
    /// step for the initial row).
    pub velocity: f64,
}

impl SeriesRow {
    pub fn from_state(s: &FlowState) -> Self {
        SeriesRow {
            t: s.t,
            energy: s.energy.total,
            elastic: s.energy.elastic,
            bulk: s.energy.bulk,
            quad: s.energy.quad,
            slope_l2: s.slope,
            grad_l2_sq: s.grad_l2_sq,
            min_margin: s.min_margin,
            linf_dev_mean: s.linf_dev_mean,
            eff_tau: s.eff_tau,
            lap_l2: s.lap_l2,
            q_l2: s.field.norm(),
            elastic_grad_l2: s.elastic_grad_l2,
            velocity: 0.0,
        }
    }

    /// Values in [`SERIES_COLUMNS`] order.
    pub fn columns(&self) -> [f64; 10] {
        [
            self.t,
            self.energy,
            self.elastic,
            self.bulk,
            self.quad,
            self.slope_l2,
            self.grad_l2_sq,
            self.min_margin,
            self.linf_dev_mean,
            self.eff_tau,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub field: QField,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub scheme: SchemeConfig,
    pub rows: Vec<SeriesRow>,
    pub snapshots: Vec<Snapshot>,
    pub last: FlowState,
    /// Set when a step failed; `last` is then the state it started from.
    pub stall: Option<Error>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }
}

/// Run with a snapshot at every step.
pub fn run(q0: &QField, horizon: f64, c: &SchemeConfig, p: &ElasticParams) -> Result<Trajectory> {
    run_with(q0, horizon, c, p, 1)
}

/// Run to `horizon`, keeping a snapshot every `snapshot_every` steps and at the end.
pub fn run_with(q0: &QField, horizon: f64, c: &SchemeConfig, p: &ElasticParams, snapshot_every: usize) -> Result<Trajectory> {
    c.validate(p)?;
    let model = match c.kind {
        SchemeKind::ApproxFlow { n } => BulkModel::Envelope(n),
        _ => BulkModel::Singular,
    };
    let op = ElasticOperator::new(q0.grid, *p);
    let mut state = FlowState::new(0.0, q0.clone(), p, model)?;
    let every = snapshot_every.max(1);
    let mut rows = vec![SeriesRow::from_state(&state)];
    let mut snapshots = vec![Snapshot { step: 0, t: 0.0, field: q0.clone() }];
    let mut stall = None;
    let mut step = 0;
    while state.t < horizon - 1e-9 * c.tau {
        let tau = c.tau.min(horizon - state.t);
        let next = match c.kind {
            SchemeKind::MinimizingMovement => minimizing_step(&state, c, &op, tau),
            _ => explicit_bulk_step(&state, c, &op, model, tau),
        };
        let next = match next {
            Ok(n) => n,
            Err(e) => {
                stall = Some(e);
                break;
            }
        };
        step += 1;
        let mut row = SeriesRow::from_state(&next);
        row.velocity = next.field.sub(&state.field).norm() / (next.t - state.t);
        if step == 1 {
            rows[0].velocity = row.velocity;
        }
        rows.push(row);
        state = next;
        if step % every == 0 {
            snapshots.push(Snapshot { step, t: state.t, field: state.field.clone() });
        }
    }
    if snapshots.last().map(|s| s.step) != Some(step) {
        snapshots.push(Snapshot { step, t: state.t, field: state.field.clone() });
    }
    Ok(Trajectory { scheme: *c, rows, snapshots, last: state, stall })
}

/// Run the flow of `E_n`, the energy with the envelope of index `n` in place of `psi`.
pub fn approx_flow_run(q0: &QField, horizon: f64, n: u32, c: &SchemeConfig, p: &ElasticParams) -> Result<Trajectory> {
    let mut c = *c;
    c.kind = SchemeKind::ApproxFlow { n };
    run(q0, horizon, &c, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyIdentity {
    /// `int (||dQ/dt||^2 + ||dE||^2) dt` by the trapezoid rule.
    pub lhs: f64,
    /// `2 (E(t0) - E(T))`.
    pub rhs: f64,
    pub raw: f64,
    /// `raw / (E(t0) - E(T))`.
    pub relative: f64,
    /// Largest `| ||dQ/dt|| - ||dE|| |` over the sampled times.
    pub max_speed_gap: f64,
}

pub fn energy_identity_residual(traj: &Trajectory, t0: f64, t_end: f64) -> EnergyIdentity {
    let eps = 1e-9 * traj.scheme.tau;
    let rows: Vec<&SeriesRow> = traj.rows.iter().filter(|r| r.t >= t0 - eps && r.t <= t_end + eps).collect();
    if rows.len() < 2 {
        return EnergyIdentity { lhs: 0.0, rhs: 0.0, raw: 0.0, relative: 0.0, max_speed_gap: 0.0 };
    }
    let mut lhs = 0.0;
    let mut gap: f64 = 0.0;
    for w in rows.windows(2) {
        let f = |r: &SeriesRow| r.velocity * r.velocity + r.slope_l2 * r.slope_l2;
        lhs += 0.5 * (w[1].t - w[0].t) * (f(w[0]) + f(w[1]));
    }
    for r in &rows {
        gap = gap.max((r.velocity - r.slope_l2).abs());
    }
    let drop = rows[0].energy - rows[rows.len() - 1].energy;
    let rhs = 2.0 * drop;
    let raw = (lhs - rhs).abs();
    let relative = if drop > 0.0 { raw / drop } else if raw == 0.0 { 0.0 } else { f64::INFINITY };
    EnergyIdentity { lhs, rhs, raw, relative, max_speed_gap: gap }
}

/// `(1/2) d/dt ||Q - P||^2 + 2 alpha ||Q - P||^2 + E(Q) - E(P)` at each snapshot
/// after the first, the derivative by the backward difference.
pub fn evi_residual(traj: &Trajectory, probe: &QField, p: &ElasticParams) -> Vec<(f64, f64)> {
    let ep = total_energy(probe, p).total;
    let by_step = |step: usize| traj.rows[step].energy;
    let d2: Vec<f64> = traj.snapshots.iter().map(|s| s.field.sub(probe).norm_sq()).collect();
    let mut out = Vec::new();
    for k in 1..traj.snapshots.len() {
        let (a, b) = (&traj.snapshots[k - 1], &traj.snapshots[k]);
        let dt = b.t - a.t;
        if dt <= 0.0 {
            continue;
        }
        let r = 0.5 * (d2[k] - d2[k - 1]) / dt + 2.0 * p.alpha * d2[k] + by_step(b.step) - ep;
        out.push((b.t, r));
    }
    out
}
