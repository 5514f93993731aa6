//! Time integration of the gradient flow `dQ/dt = -dE(Q)` for
//! `E(Q) = G(Q) + int psi(Q) - alpha ||Q||^2`.

mod bulk;
mod minimizing;
mod semi_implicit;
mod trajectory;

use serde::{Deserialize, Serialize};

pub use bulk::{BulkModel, BulkState};
pub use minimizing::step_minimizing_movement;
pub use semi_implicit::{step_approx, step_semi_implicit};
pub use trajectory::{
    approx_flow_run, energy_identity_residual, evi_residual, run, run_with, EnergyIdentity, SeriesRow, Snapshot,
    Trajectory, SERIES_COLUMNS,
};

use crate::elastic::{gradient_norm_sq, laplacian_norm, mean_value, ElasticOperator, ElasticParams};
use crate::error::{Error, Result};
use crate::grid::QField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    SemiImplicit,
    MinimizingMovement,
    ApproxFlow { n: u32 },
}

/// Inner solver for a minimizing-movement step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// Damped Newton with conjugate gradients preconditioned by the elastic symbol.
    Newton,
    /// Explicit gradient step on the smooth part, proximal step on the potential.
    ForwardBackward,
}

/// Explicit envelope gradients are stable for `tau <= APPROX_STABILITY / n`.
pub const APPROX_STABILITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub tau: f64,
    pub inner_tol: f64,
    pub max_inner: usize,
    pub backtrack_factor: f64,
    pub max_retries: usize,
    pub inner_solver: InnerSolver,
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind, tau: f64) -> Self {
        SchemeConfig {
            kind,
            tau,
            inner_tol: 1e-10,
            max_inner: 500,
            backtrack_factor: 0.5,
            max_retries: 40,
            inner_solver: InnerSolver::Newton,
        }
    }

    pub fn validate(&self, p: &ElasticParams) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParams(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::InvalidParams(format!("backtrack factor must lie in (0, 1), got {}", self.backtrack_factor)));
        }
        if !(self.inner_tol > 0.0) || self.max_inner == 0 {
            return Err(Error::InvalidParams("inner tolerance and iteration cap must be positive".into()));
        }
        match self.kind {
            SchemeKind::MinimizingMovement if 2.0 * p.alpha * self.tau >= 1.0 => Err(Error::InvalidParams(format!(
                "minimizing movement needs tau < 1/(2 alpha) = {}, got {}",
                0.5 / p.alpha,
                self.tau
            ))),
            SchemeKind::ApproxFlow { n } if n == 0 => Err(Error::InvalidParams("envelope index must be positive".into())),
            SchemeKind::ApproxFlow { n } if self.tau > APPROX_STABILITY / n as f64 => Err(Error::InvalidParams(format!(
                "approximate flow with n = {n} needs tau <= {}, got {}",
                APPROX_STABILITY / n as f64,
                self.tau
            ))),
            _ => Ok(()),
        }
    }
}

/// Energy split as `total = elastic + bulk - quad`, with `quad = alpha ||Q||^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParts {
    pub elastic: f64,
    pub bulk: f64,
    pub quad: f64,
    pub total: f64,
}

impl EnergyParts {
    fn new(elastic: f64, bulk: f64, quad: f64) -> Self {
        EnergyParts { elastic, bulk, quad, total: elastic + bulk - quad }
    }

    /// The value outside the physical set.
    pub fn infinite() -> Self {
        EnergyParts { elastic: f64::NAN, bulk: f64::INFINITY, quad: f64::NAN, total: f64::INFINITY }
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }
}

/// Inner-solver data of the step that produced a state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub inner_iterations: usize,
    pub linear_iterations: usize,
    pub residual: f64,
    pub retries: usize,
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub field: QField,
    pub energy: EnergyParts,
    /// `||dE(Q)||`.
    pub slope: f64,
    /// `||grad Q||^2`.
    pub grad_l2_sq: f64,
    /// `||Laplacian Q||`.
    pub lap_l2: f64,
    /// `||dG(Q)||`.
    pub elastic_grad_l2: f64,
    pub min_margin: f64,
    /// `sup |Q - mean Q|`.
    pub linf_dev_mean: f64,
    pub eff_tau: f64,
    pub report: StepReport,
    pub bulk: BulkState,
}

impl FlowState {
    /// State at time `t` with every derived quantity evaluated.
    pub fn new(t: f64, field: QField, p: &ElasticParams, model: BulkModel) -> Result<Self> {
        let op = ElasticOperator::new(field.grid, *p);
        let bulk = BulkState::evaluate(&field, model, None)?;
        Ok(Self::assemble(t, field, &op, bulk, 0.0, StepReport::default()))
    }

    pub(crate) fn assemble(t: f64, field: QField, op: &ElasticOperator, bulk: BulkState, eff_tau: f64, report: StepReport) -> Self {
        let p = &op.params;
        let spec = field.to_spectral();
        let elastic = op.energy(&spec);
        let elastic_grad = op.apply(&spec).to_real();
        let quad = p.alpha * field.norm_sq();
        let energy = EnergyParts::new(elastic, bulk.integral(), quad);
        let total_grad = elastic_grad.axpy(1.0, &bulk.grad).axpy(-2.0 * p.alpha, &field);
        let mean = mean_value(&field);
        FlowState {
            t,
            energy,
            slope: total_grad.norm(),
            grad_l2_sq: gradient_norm_sq(&field),
            lap_l2: laplacian_norm(&field),
            elastic_grad_l2: elastic_grad.norm(),
            min_margin: bulk.min_margin,
            linf_dev_mean: field.sup_deviation(&mean),
            eff_tau,
            report,
            bulk,
            field,
        }
    }

    /// `dE(Q)`.
    pub fn total_gradient(&self, p: &ElasticParams) -> QField {
        let op = ElasticOperator::new(self.field.grid, *p);
        op.apply(&self.field.to_spectral()).to_real().axpy(1.0, &self.bulk.grad).axpy(-2.0 * p.alpha, &self.field)
    }
}

/// `E(Q)` split into its parts; the infinite marker when some point is not
/// strictly physical.
pub fn total_energy(f: &QField, p: &ElasticParams) -> EnergyParts {
    match BulkState::evaluate(f, BulkModel::Singular, None) {
        Ok(b) => {
            let elastic = crate::elastic::elastic_energy(f, p);
            EnergyParts::new(elastic, b.integral(), p.alpha * f.norm_sq())
        }
        Err(_) => EnergyParts::infinite(),
    }
}

/// `dG(Q) + psi'(Q) - 2 alpha Q`.
pub fn total_gradient(f: &QField, p: &ElasticParams) -> Result<QField> {
    let b = BulkState::evaluate(f, BulkModel::Singular, None)?;
    let op = ElasticOperator::new(f.grid, *p);
    Ok(op.apply(&f.to_spectral()).to_real().axpy(1.0, &b.grad).axpy(-2.0 * p.alpha, f))
}

/// `E_n(Q)` with the envelope of index `n` in place of `psi`.
pub fn approx_energy(f: &QField, p: &ElasticParams, n: u32) -> Result<EnergyParts> {
    let b = BulkState::evaluate(f, BulkModel::Envelope(n), None)?;
    let elastic = crate::elastic::elastic_energy(f, p);
    Ok(EnergyParts::new(elastic, b.integral(), p.alpha * f.norm_sq()))
}
