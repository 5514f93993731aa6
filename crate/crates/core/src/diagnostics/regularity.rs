//! Interpolation and `H^2` bounds along a trajectory.

use serde::{Deserialize, Serialize};

use crate::elastic::{gradient_norm, laplacian_norm, mean_value, ElasticParams};
use crate::flow::Trajectory;
use crate::grid::QField;
use crate::potential::PSI_MIN;

/// Relative slack of the inequality chain.
pub const CHAIN_SLACK: f64 = 1e-8;
/// Relative roundoff allowance of the `H^2` comparisons.
pub const H2_SLACK: f64 = 1e-10;

/// `||Q - mean Q||_inf / (||grad Q||^{1/2} ||Laplacian Q||^{1/2})`, or `None` for
/// a field without gradient.
pub fn mean_deviation_ratio(f: &QField) -> Option<f64> {
    let dev = f.sup_deviation(&mean_value(f));
    let denom = (gradient_norm(f) * laplacian_norm(f)).sqrt();
    if denom > 0.0 && denom.is_finite() {
        Some(dev / denom)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanDeviationSeries {
    /// `(t, ratio)` per snapshot; `None` where the ratio is `0/0`.
    pub rows: Vec<(f64, Option<f64>)>,
    /// Largest ratio over the run, the fitted constant.
    pub fitted_constant: Option<f64>,
}

pub fn mean_deviation_check(traj: &Trajectory) -> MeanDeviationSeries {
    let rows: Vec<(f64, Option<f64>)> = traj.snapshots.iter().map(|s| (s.t, mean_deviation_ratio(&s.field))).collect();
    let fitted_constant = rows.iter().filter_map(|r| r.1).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    MeanDeviationSeries { rows, fitted_constant }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2Row {
    pub t: f64,
    pub lap_l2: f64,
    /// `C_L (e^{4 alpha} sqrt(E(t0) - inf E + 1) + 2 alpha ||Q||)`.
    pub uniform_bound: f64,
    pub uniform_ok: bool,
    /// `C_L (||dE|| + 2 alpha ||Q||)`.
    pub mechanism_bound: f64,
    pub mechanism_ok: bool,
    /// `mechanism_bound - lap_l2`.
    pub mechanism_slack: f64,
    /// `(||dE|| + 2 alpha ||Q||)^2`.
    pub chain_lhs: f64,
    /// `ratio * ||dG||^2`.
    pub chain_rhs: f64,
    pub chain_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2Series {
    pub c_l: f64,
    /// `-ln(4 pi) - (2/3) alpha`, a lower bound for `E` over physical fields.
    pub inf_energy: f64,
    pub energy_t0: f64,
    pub rows: Vec<H2Row>,
    pub all_uniform_ok: bool,
    pub all_mechanism_ok: bool,
    pub all_chain_ok: bool,
}

/// Lower bound of the energy used in the uniform bound: `psi >= -ln(4 pi)`,
/// `G >= 0` and `|Q|^2 <= 2/3` pointwise on the physical set.
pub fn energy_lower_bound(p: &ElasticParams) -> f64 {
    PSI_MIN - p.alpha * 2.0 / 3.0
}

pub fn h2_bound_check(traj: &Trajectory, p: &ElasticParams, energy_t0: f64) -> H2Series {
    let c_l = p.c_l();
    let inf_energy = energy_lower_bound(p);
    let c = p.anisotropy().abs();
    let ratio = (p.l1 + c - 2.0 * (p.l1 * c).sqrt()) / (p.l1 + c);
    let growth = (4.0 * p.alpha).exp() * (energy_t0 - inf_energy + 1.0).max(0.0).sqrt();
    let rows: Vec<H2Row> = traj
        .snapshots
        .iter()
        .map(|s| {
            let r = &traj.rows[s.step];
            let quad = 2.0 * p.alpha * r.q_l2;
            let uniform_bound = c_l * (growth + quad);
            let mechanism_bound = c_l * (r.slope_l2 + quad);
            let chain_lhs = (r.slope_l2 + quad).powi(2);
            let chain_rhs = ratio * r.elastic_grad_l2.powi(2);
            H2Row {
                t: r.t,
                lap_l2: r.lap_l2,
                uniform_bound,
                uniform_ok: r.lap_l2 <= uniform_bound * (1.0 + H2_SLACK),
                mechanism_bound,
                mechanism_ok: r.lap_l2 <= mechanism_bound * (1.0 + H2_SLACK),
                mechanism_slack: mechanism_bound - r.lap_l2,
                chain_lhs,
                chain_rhs,
                chain_ok: chain_lhs >= chain_rhs * (1.0 - CHAIN_SLACK),
            }
        })
        .collect();
    H2Series {
        c_l,
        inf_energy,
        energy_t0,
        all_uniform_ok: rows.iter().all(|r| r.uniform_ok),
        all_mechanism_ok: rows.iter().all(|r| r.mechanism_ok),
        all_chain_ok: rows.iter().all(|r| r.chain_ok),
        rows,
    }
}
