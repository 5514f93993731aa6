//! The Ball-Majumdar singular potential
//! `psi(Q) = min { int rho ln rho : rho a density on S^2 with second moment Q + I/3 }`,
//! evaluated through its convex dual, together with its Moreau-Yosida envelopes.

pub mod bessel;
mod constants;
mod dual;
mod envelope;
mod partition;

use nalgebra::{Matrix3, SMatrix, Vector3};

pub use constants::{bessel_ratio, c1_infimum, constant_c1, C1_PREFACTOR};
pub use dual::{solve_dual, solve_dual_from, DualState, CONTINUATION_BELOW, MARGIN_FLOOR};
pub use envelope::{
    distance_to_domain, domain_diameter, moreau_yosida, prox_envelope, MoreauYosida, ProxPoint, PROX_TOL,
};
pub use partition::{log_partition, Partition, MAX_NODES, MIN_NODES};

use crate::error::Result;
use crate::tensor::{basis, EigenData, QTensor};

/// `inf psi = psi(0) = -ln(4 pi)`.
pub const PSI_MIN: f64 = -2.5310242469692907;

/// Eigenvalue gap below which the divided difference `(nu_i - nu_j)/(lambda_i - lambda_j)`
/// is replaced by its limit.
const GAP_LIMIT: f64 = 1e-6;

/// The potential at one tensor: eigen-decomposition and dual solution.
#[derive(Debug, Clone, Copy)]
pub struct BulkPoint {
    pub eigen: EigenData,
    pub dual: DualState,
}

impl BulkPoint {
    pub fn psi(&self) -> f64 {
        self.dual.psi
    }

    /// `frame diag(nu) frame^T`, the traceless gradient of `psi`.
    pub fn grad(&self) -> QTensor {
        let v = &self.eigen.frame;
        let m = v * Matrix3::from_diagonal(&Vector3::from(self.dual.nu)) * v.transpose();
        QTensor::from_matrix(&m).expect("finite multipliers")
    }

    /// Hessian of `psi` in the five basis coordinates.
    pub fn hessian(&self) -> SMatrix<f64, 5, 5> {
        let v = &self.eigen.frame;
        let lam = self.eigen.lambda;
        let nu = self.dual.nu;
        let h = self.dual.reduced_hessian();
        let rotated: Vec<Matrix3<f64>> = basis().iter().map(|e| v.transpose() * e * v).collect();
        let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
        let dirs = [(1.0, -1.0), (1.0, 0.0), (0.0, 1.0)];
        let mut off = [0.0; 3];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let gap = lam[j] - lam[i];
            off[k] = if gap > GAP_LIMIT {
                (nu[j] - nu[i]) / gap
            } else {
                let (x, y) = dirs[k];
                0.5 * (h[(0, 0)] * x * x + 2.0 * h[(0, 1)] * x * y + h[(1, 1)] * y * y)
            };
        }
        let mut out = SMatrix::<f64, 5, 5>::zeros();
        for a in 0..5 {
            for b in a..5 {
                let (ra, rb) = (&rotated[a], &rotated[b]);
                let da = [ra[(0, 0)], ra[(1, 1)]];
                let db = [rb[(0, 0)], rb[(1, 1)]];
                let mut s = da[0] * (h[(0, 0)] * db[0] + h[(0, 1)] * db[1]) + da[1] * (h[(1, 0)] * db[0] + h[(1, 1)] * db[1]);
                for (k, &(i, j)) in pairs.iter().enumerate() {
                    s += 2.0 * off[k] * ra[(i, j)] * rb[(i, j)];
                }
                out[(a, b)] = s;
                out[(b, a)] = s;
            }
        }
        out
    }
}

/// Evaluate the potential at `q`, warm-starting the dual solve when possible.
pub fn evaluate(q: &QTensor, warm: Option<&DualState>) -> Result<BulkPoint> {
    let eigen = q.eigen();
    let dual = solve_dual_from(eigen.lambda, warm)?;
    Ok(BulkPoint { eigen, dual })
}

pub fn psi(q: &QTensor) -> Result<f64> {
    Ok(evaluate(q, None)?.psi())
}

pub fn psi_grad(q: &QTensor) -> Result<QTensor> {
    Ok(evaluate(q, None)?.grad())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psi_min_constant() {
        assert_eq!(PSI_MIN, -(4.0 * std::f64::consts::PI).ln());
        assert!((psi(&QTensor::ZERO).unwrap() - PSI_MIN).abs() < 1e-14);
    }

    #[test]
    fn hessian_at_origin() {
        let h = evaluate(&QTensor::ZERO, None).unwrap().hessian();
        let diff = h - SMatrix::<f64, 5, 5>::identity() * 7.5;
        assert!(diff.abs().max() < 1e-12, "{h}");
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let q = QTensor::new(std::array::from_fn(|_| rng.gen_range(-0.2..0.2))).unwrap();
            let point = evaluate(&q, None).unwrap();
            let h = point.hessian();
            let eps = 1e-6;
            for b in 0..5 {
                let mut c = q.coords();
                c[b] += eps;
                let gp = psi_grad(&QTensor::new(c).unwrap()).unwrap().coords();
                c[b] -= 2.0 * eps;
                let gm = psi_grad(&QTensor::new(c).unwrap()).unwrap().coords();
                for a in 0..5 {
                    let fd = (gp[a] - gm[a]) / (2.0 * eps);
                    assert!((fd - h[(a, b)]).abs() < 1e-5 * (1.0 + h.abs().max()), "{a}{b} {fd} {}", h[(a, b)]);
                }
            }
        }
    }

    #[test]
    fn hessian_with_repeated_eigenvalues() {
        let q = QTensor::uniaxial(0.4, &Vector3::new(0.3, -0.2, 0.9)).unwrap();
        let h = evaluate(&q, None).unwrap().hessian();
        let eps = 1e-6;
        for b in 0..5 {
            let mut c = q.coords();
            c[b] += eps;
            let gp = psi_grad(&QTensor::new(c).unwrap()).unwrap().coords();
            c[b] -= 2.0 * eps;
            let gm = psi_grad(&QTensor::new(c).unwrap()).unwrap().coords();
            for a in 0..5 {
                let fd = (gp[a] - gm[a]) / (2.0 * eps);
                assert!((fd - h[(a, b)]).abs() < 1e-4 * (1.0 + h.abs().max()), "{a}{b} {fd} {}", h[(a, b)]);
            }
        }
    }
}
