//! Flows of the envelope energies `E_n` against the flow of `E`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elastic::ElasticParams;
use crate::error::Result;
use crate::flow::{approx_flow_run, run, SchemeConfig, SchemeKind, Trajectory};
use crate::grid::QField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub n: u32,
    /// `||Q_n(T) - Q(T)||`.
    pub final_distance: f64,
    /// `E_n(Q_n(T)) - E(Q(T))`.
    pub energy_excess: f64,
    /// `L^2(t_1, T)` distance between the speed series `||dQ_n/dt||` and `||dQ/dt||`,
    /// `t_1` the end of the first step.
    pub speed_distance: f64,
    /// `(t, ||Q_n(t) - Q(t)||)`.
    pub distance_series: Vec<(f64, f64)>,
    /// `(t, E_n(Q_n(t)) - E(Q(t)))`.
    pub excess_series: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub horizon: f64,
    pub tau: f64,
    pub rows: Vec<GammaRow>,
    pub distance_monotone: bool,
    /// Monotone decrease of `|energy_excess|`.
    pub excess_monotone: bool,
    pub speed_monotone: bool,
    /// `|excess(first n)| / |excess(last n)|`.
    pub excess_reduction: f64,
}

/// Runs the singular flow with the semi-implicit scheme at `c.tau` and one
/// envelope flow per entry of `n_list`, all concurrently.
pub fn gamma_study(q0: &QField, horizon: f64, n_list: &[u32], c: &SchemeConfig, p: &ElasticParams) -> Result<GammaReport> {
    let mut singular = *c;
    singular.kind = SchemeKind::SemiImplicit;
    let jobs: Vec<Option<u32>> = std::iter::once(None).chain(n_list.iter().map(|&n| Some(n))).collect();
    let runs: Vec<Trajectory> = jobs
        .par_iter()
        .map(|job| {
            let traj = match job {
                None => run(q0, horizon, &singular, p)?,
                Some(n) => approx_flow_run(q0, horizon, *n, c, p)?,
            };
            match traj.stall {
                Some(e) => Err(e),
                None => Ok(traj),
            }
        })
        .collect::<Result<_>>()?;
    let reference = &runs[0];
    let rows = n_list
        .iter()
        .zip(&runs[1..])
        .map(|(&n, traj)| compare(n, traj, reference))
        .collect::<Vec<_>>();
    let decreasing = |v: Vec<f64>| v.windows(2).all(|w| w[1] <= w[0]);
    let excess: Vec<f64> = rows.iter().map(|r| r.energy_excess.abs()).collect();
    let excess_reduction = match (excess.first(), excess.last()) {
        (Some(a), Some(b)) if *b > 0.0 => a / b,
        (Some(a), Some(_)) if *a == 0.0 => 1.0,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    };
    Ok(GammaReport {
        horizon,
        tau: c.tau,
        distance_monotone: decreasing(rows.iter().map(|r| r.final_distance).collect()),
        excess_monotone: decreasing(excess),
        speed_monotone: decreasing(rows.iter().map(|r| r.speed_distance).collect()),
        excess_reduction,
        rows,
    })
}

fn compare(n: u32, traj: &Trajectory, reference: &Trajectory) -> GammaRow {
    let pairs: Vec<(usize, usize)> = traj
        .snapshots
        .iter()
        .enumerate()
        .filter_map(|(i, s)| reference.snapshots.iter().position(|r| (r.t - s.t).abs() <= 1e-9 * traj.scheme.tau.max(1e-300)).map(|j| (i, j)))
        .collect();
    let mut distance_series = Vec::with_capacity(pairs.len());
    let mut excess_series = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let (a, b) = (&traj.snapshots[i], &reference.snapshots[j]);
        distance_series.push((a.t, a.field.sub(&b.field).norm()));
    }
    for &(i, j) in &pairs {
        let (a, b) = (&traj.snapshots[i], &reference.snapshots[j]);
        excess_series.push((a.t, traj.rows[a.step].energy - reference.rows[b.step].energy));
    }
    let final_distance = distance_series.last().map_or(0.0, |d| d.1);
    let energy_excess = excess_series.last().map_or(0.0, |e| e.1);
    let m = traj.rows.len().min(reference.rows.len());
    let mut speed_sq = 0.0;
    for k in 2..m {
        let dt = traj.rows[k].t - traj.rows[k - 1].t;
        let d0 = traj.rows[k - 1].velocity - reference.rows[k - 1].velocity;
        let d1 = traj.rows[k].velocity - reference.rows[k].velocity;
        speed_sq += 0.5 * dt * (d0 * d0 + d1 * d1);
    }
    GammaRow { n, final_distance, energy_excess, speed_distance: speed_sq.sqrt(), distance_series, excess_series }
}
