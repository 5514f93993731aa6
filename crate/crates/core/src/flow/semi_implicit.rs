//! Implicit elastic, explicit bulk:
//! `(I + tau M(k)) Q+_k = Q_k + tau (2 alpha Q - psi'(Q))_k`.

use super::{BulkModel, BulkState, FlowState, SchemeConfig, SchemeKind, StepReport};
use crate::elastic::{ElasticOperator, ElasticParams};
use crate::error::{Error, Result};

/// Relative energy increase tolerated before a step is retried with a smaller `tau`.
pub const ENERGY_SLACK: f64 = 1e-12;

pub fn step_semi_implicit(s: &FlowState, c: &SchemeConfig, p: &ElasticParams) -> Result<FlowState> {
    let op = ElasticOperator::new(s.field.grid, *p);
    explicit_bulk_step(s, c, &op, BulkModel::Singular, c.tau)
}

/// One step of the flow of `E_n`, the energy with the envelope of index `n`.
pub fn step_approx(s: &FlowState, c: &SchemeConfig, p: &ElasticParams) -> Result<FlowState> {
    let n = match c.kind {
        SchemeKind::ApproxFlow { n } => n,
        _ => return Err(Error::InvalidParams("step_approx needs an approx_flow scheme".into())),
    };
    let op = ElasticOperator::new(s.field.grid, *p);
    explicit_bulk_step(s, c, &op, BulkModel::Envelope(n), c.tau)
}

pub(crate) fn explicit_bulk_step(
    s: &FlowState,
    c: &SchemeConfig,
    op: &ElasticOperator,
    model: BulkModel,
    tau: f64,
) -> Result<FlowState> {
    let alpha = op.params.alpha;
    let mut tau = tau;
    let e0 = s.energy.total;
    for retry in 0..=c.max_retries {
        let rhs = s.field.scale(1.0 + 2.0 * alpha * tau).axpy(-tau, &s.bulk.grad);
        let next = op.solve_shifted(&rhs.to_spectral(), 1.0, tau).to_real();
        if let Ok(bulk) = BulkState::evaluate(&next, model, Some(&s.bulk)) {
            let report = StepReport { inner_iterations: 0, linear_iterations: 0, residual: 0.0, retries: retry };
            let state = FlowState::assemble(s.t + tau, next, op, bulk, tau, report);
            if state.energy.total <= e0 + ENERGY_SLACK * e0.abs().max(1.0) {
                return Ok(state);
            }
        }
        tau *= c.backtrack_factor;
    }
    Err(Error::StepStall { t: s.t, retries: c.max_retries, tau })
}
