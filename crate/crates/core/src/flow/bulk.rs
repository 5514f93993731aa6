//! Pointwise bulk potential over a field, with per-point solver state kept for
//! warm starts.

use rayon::prelude::*;

use crate::error::Result;
use crate::grid::QField;
use crate::potential::{evaluate, prox_envelope, BulkPoint, ProxPoint};
use crate::tensor::margin_of;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BulkModel {
    /// The singular potential `psi`.
    Singular,
    /// The Moreau-Yosida envelope of index `n`.
    Envelope(u32),
}

#[derive(Debug, Clone)]
pub struct BulkState {
    pub model: BulkModel,
    pub values: Vec<f64>,
    /// Traceless gradient of the bulk density at each point.
    pub grad: QField,
    /// Smallest eigenvalue margin of the field (negative outside the physical set).
    pub min_margin: f64,
    pub points: Vec<BulkPoint>,
    pub proxes: Vec<ProxPoint>,
}

impl BulkState {
    pub fn evaluate(f: &QField, model: BulkModel, warm: Option<&BulkState>) -> Result<BulkState> {
        let np = f.points();
        let warm = warm.filter(|w| w.model == model && w.values.len() == np);
        let mut grad = QField::zeros(f.grid);
        match model {
            BulkModel::Singular => {
                let points: Vec<BulkPoint> = (0..np)
                    .into_par_iter()
                    .map(|i| evaluate(&f.get(i), warm.map(|w| &w.points[i].dual)))
                    .collect::<Result<_>>()?;
                let mut min_margin = f64::INFINITY;
                for (i, pt) in points.iter().enumerate() {
                    grad.set(i, &pt.grad());
                    min_margin = min_margin.min(margin_of(&pt.eigen.lambda));
                }
                let values = points.iter().map(|p| p.psi()).collect();
                Ok(BulkState { model, values, grad, min_margin, points, proxes: Vec::new() })
            }
            BulkModel::Envelope(n) => {
                let pen = n as f64;
                let proxes: Vec<ProxPoint> = (0..np)
                    .into_par_iter()
                    .map(|i| prox_envelope(&f.get(i), pen, warm.map(|w| &w.proxes[i])))
                    .collect::<Result<_>>()?;
                let mut min_margin = f64::INFINITY;
                for (i, pt) in proxes.iter().enumerate() {
                    grad.set(i, &pt.grad());
                    min_margin = min_margin.min(margin_of(&pt.eigen.lambda));
                }
                let values = proxes.iter().map(|p| p.value).collect();
                Ok(BulkState { model, values, grad, min_margin, points: Vec::new(), proxes })
            }
        }
    }

    /// `int psi(Q)` by the grid sum.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}
