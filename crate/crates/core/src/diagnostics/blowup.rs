//! Growth of `|psi'(P)|` as `lambda_1(P) -> -1/3`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::potential::{constant_c1, psi_grad};
use crate::tensor::{eigen, random_rotation, QTensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupScanSpec {
    pub margin_min: f64,
    pub margin_max: f64,
    /// Log-spaced margins between the two ends, inclusive.
    pub margins: usize,
    pub configurations: usize,
    pub seed: u64,
    /// Margins inside this window enter the asserted minimum.
    pub window: (f64, f64),
}

impl Default for BlowupScanSpec {
    fn default() -> Self {
        BlowupScanSpec { margin_min: 1e-6, margin_max: 1e-1, margins: 21, configurations: 20, seed: 0, window: (1e-6, 1e-2) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupRow {
    pub configuration: usize,
    /// Where the second eigenvalue sits between `lambda_1` (0) and `lambda_3` (1).
    pub shape: f64,
    pub margin: f64,
    pub lambda: [f64; 3],
    pub grad_norm: f64,
    /// `|psi'(P)| (lambda_1(P) + 1/3)`.
    pub product: f64,
    pub in_window: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupTable {
    pub spec: BlowupScanSpec,
    pub c1: f64,
    pub rows: Vec<BlowupRow>,
    pub min_product: f64,
    pub holds: bool,
}

pub const BLOWUP_COLUMNS: [&str; 9] =
    ["configuration", "shape", "margin", "lambda1", "lambda2", "lambda3", "grad_norm", "product", "in_window"];

/// Configuration 0 approaches uniaxially (`lambda_2 = lambda_3`), configuration 1
/// biaxially with `lambda_2 -> -1/3` too; the rest use random shapes. Each gets a
/// random eigenframe.
pub fn blowup_rate_scan(spec: &BlowupScanSpec) -> Result<BlowupTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let configs: Vec<(f64, nalgebra::Matrix3<f64>)> = (0..spec.configurations)
        .map(|k| {
            let shape = match k {
                0 => 0.5,
                1 => 0.0,
                _ => rng.gen_range(0.0..0.5),
            };
            (shape, random_rotation(&mut rng))
        })
        .collect();
    let margins: Vec<f64> = (0..spec.margins)
        .map(|j| {
            if spec.margins == 1 {
                return spec.margin_min;
            }
            let s = j as f64 / (spec.margins - 1) as f64;
            (spec.margin_min.ln() + s * (spec.margin_max.ln() - spec.margin_min.ln())).exp()
        })
        .collect();
    let jobs: Vec<(usize, f64)> = (0..configs.len()).flat_map(|k| margins.iter().map(move |&m| (k, m))).collect();
    let rows: Vec<BlowupRow> = jobs
        .par_iter()
        .map(|&(k, m)| {
            let (shape, frame) = configs[k];
            let lambda = shaped_eigenvalues(m, shape);
            let q = QTensor::from_eigen(lambda, &frame)?;
            let g = psi_grad(&q)?;
            let l = eigen(&q).lambda;
            let grad_norm = g.norm();
            let product = grad_norm * (l[0] + 1.0 / 3.0);
            let in_window = m >= spec.window.0 * (1.0 - 1e-12) && m <= spec.window.1 * (1.0 + 1e-12);
            Ok(BlowupRow { configuration: k, shape, margin: m, lambda: l, grad_norm, product, in_window })
        })
        .collect::<Result<_>>()?;
    let c1 = constant_c1();
    let min_product = rows.iter().filter(|r| r.in_window).map(|r| r.product).fold(f64::INFINITY, f64::min);
    Ok(BlowupTable { spec: *spec, c1, holds: min_product >= c1, rows, min_product })
}

/// Eigenvalues `lambda_1 = -1/3 + m` and `lambda_2` placed by `shape`: 0 gives
/// `lambda_2 = -1/3 + 2m`, 0.5 gives `lambda_2 = lambda_3`.
fn shaped_eigenvalues(m: f64, shape: f64) -> [f64; 3] {
    let l1 = -1.0 / 3.0 + m;
    let lo = -1.0 / 3.0 + 2.0 * m;
    let hi = -0.5 * l1;
    let l2 = lo + 2.0 * shape * (hi - lo);
    [l1, l2, -l1 - l2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let l = shaped_eigenvalues(1e-3, 0.5);
        assert!((l[1] - l[2]).abs() < 1e-15);
        let l = shaped_eigenvalues(1e-3, 0.0);
        assert!((l[1] + 1.0 / 3.0 - 2e-3).abs() < 1e-15);
        for s in [0.0, 0.2, 0.5] {
            let l = shaped_eigenvalues(1e-4, s);
            assert!(l[0] <= l[1] && l[1] <= l[2] + 1e-15);
            assert!((crate::tensor::margin_of(&l) - 1e-4).abs() < 1e-15);
        }
    }
}
