//! Anisotropic elastic energy
//! `G(Q) = int L1 |grad Q|^2 + L2 d_j Q_ik d_k Q_ij + L3 d_j Q_ij d_k Q_ik`
//! and its gradient, applied mode by mode in Fourier space.
//!
//! On the torus the `L2` and `L3` terms coincide after integration by parts, so
//! the operator depends on `L2 + L3` only.

use std::f64::consts::PI;

use nalgebra::{SMatrix, SVector, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{QField, SpectralField, SpectralGrid};
use crate::tensor::{basis, QTensor};

pub type Mat5 = SMatrix<f64, 5, 5>;

/// Which Poincare constant `C` to use in the decay bound `4(-(L1 - |L2+L3|)/C^2 + alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoincareConvention {
    /// `(2 pi)^n`.
    Paper,
    /// `1/(2 pi)`, from the smallest nonzero wavenumber of the unit torus.
    SpectralGap,
}

impl PoincareConvention {
    pub fn constant(self, dim: usize) -> f64 {
        match self {
            PoincareConvention::Paper => (2.0 * PI).powi(dim as i32),
            PoincareConvention::SpectralGap => 1.0 / (2.0 * PI),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticParams {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub alpha: f64,
    pub poincare_constant: f64,
}

impl ElasticParams {
    pub fn new(l1: f64, l2: f64, l3: f64, alpha: f64, poincare_constant: f64) -> Result<Self> {
        let p = ElasticParams { l1, l2, l3, alpha, poincare_constant };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with the `(2 pi)^n` Poincare constant.
    pub fn with_paper_poincare(l1: f64, l2: f64, l3: f64, alpha: f64, dim: usize) -> Result<Self> {
        Self::new(l1, l2, l3, alpha, PoincareConvention::Paper.constant(dim))
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.l1, self.l2, self.l3, self.alpha, self.poincare_constant];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("elastic parameters must be finite".into()));
        }
        if self.l1 <= 3.0 * self.anisotropy().abs() {
            return Err(Error::InvalidParams(format!(
                "need L1 > 3|L2 + L3|, got L1 = {}, L2 + L3 = {}",
                self.l1,
                self.anisotropy()
            )));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidParams(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if self.poincare_constant <= 0.0 {
            return Err(Error::InvalidParams("Poincare constant must be positive".into()));
        }
        Ok(())
    }

    /// `L2 + L3`.
    #[inline]
    pub fn anisotropy(&self) -> f64 {
        self.l2 + self.l3
    }

    /// `L1 - 3|L2 + L3|`, the coercivity constant of `G` against `|grad Q|^2`.
    pub fn coercivity(&self) -> f64 {
        self.l1 - 3.0 * self.anisotropy().abs()
    }

    /// `C_L = sqrt((L1+|c|) / (L1+|c| - 2 sqrt(L1|c|))) / (2 (L1 - |c|))` with `c = L2 + L3`.
    pub fn c_l(&self) -> f64 {
        let c = self.anisotropy().abs();
        let s = self.l1 + c;
        (s / (s - 2.0 * (self.l1 * c).sqrt())).sqrt() / (2.0 * (self.l1 - c))
    }

    /// Bounds on the spectrum of the mode operator at `|k|^2`.
    pub fn spectrum_bounds(&self, k_sq: f64) -> (f64, f64) {
        let c = self.anisotropy().abs();
        (2.0 * (self.l1 - c) * k_sq, 2.0 * (self.l1 + c) * k_sq)
    }

    /// `2 sqrt(L1 |c|) / (L1 + |c|)`: the elastic gradient and any pointwise
    /// monotone map of `Q` meet at an angle whose cosine is at least minus this.
    pub fn angle_bound(&self) -> f64 {
        let c = self.anisotropy().abs();
        2.0 * (self.l1 * c).sqrt() / (self.l1 + c)
    }

    /// `4(-(L1 - |c|)/C^2 + alpha)`.
    pub fn decay_rate_bound(&self, poincare: f64) -> f64 {
        4.0 * (-(self.l1 - self.anisotropy().abs()) / (poincare * poincare) + self.alpha)
    }
}

/// Fourier symbol of the elastic gradient at wavevector `k`:
/// `2 L1 |k|^2 I + 2 (L2 + L3) B^T B` with `B e_a = E_a k`.
pub fn mode_operator(k: [f64; 3], p: &ElasticParams) -> Mat5 {
    let kv = Vector3::from(k);
    let cols: Vec<Vector3<f64>> = basis().iter().map(|e| e * kv).collect();
    let k_sq = kv.norm_squared();
    let c = p.anisotropy();
    Mat5::from_fn(|a, b| {
        let iso = if a == b { 2.0 * p.l1 * k_sq } else { 0.0 };
        iso + 2.0 * c * cols[a].dot(&cols[b])
    })
}

/// Mode operators for every wavevector of a grid.
#[derive(Debug, Clone)]
pub struct ElasticOperator {
    pub grid: SpectralGrid,
    pub params: ElasticParams,
    pub mats: Vec<Mat5>,
}

impl ElasticOperator {
    pub fn new(grid: SpectralGrid, params: ElasticParams) -> Self {
        let mats = (0..grid.points()).map(|i| mode_operator(grid.wavevector(i), &params)).collect();
        ElasticOperator { grid, params, mats }
    }

    pub fn apply(&self, s: &SpectralField) -> SpectralField {
        let mut out = SpectralField::zeros(self.grid);
        for idx in 0..self.grid.points() {
            let v = s.coeff(idx);
            out.set_coeff(idx, mat_vec(&self.mats[idx], &v));
        }
        out
    }

    /// `sum_k (1/2) Q_k^* M(k) Q_k`.
    pub fn energy(&self, s: &SpectralField) -> f64 {
        let mut e = 0.0;
        for idx in 0..self.grid.points() {
            let v = s.coeff(idx);
            let mv = mat_vec(&self.mats[idx], &v);
            e += 0.5 * (0..5).map(|a| (v[a].conj() * mv[a]).re).sum::<f64>();
        }
        e
    }

    /// Solve `(shift I + scale M(k)) X_k = R_k` for every mode.
    pub fn solve_shifted(&self, rhs: &SpectralField, shift: f64, scale: f64) -> SpectralField {
        let mut out = SpectralField::zeros(self.grid);
        for idx in 0..self.grid.points() {
            let m = Mat5::identity() * shift + self.mats[idx] * scale;
            let chol = m.cholesky().expect("shifted mode operator is positive definite");
            let v = rhs.coeff(idx);
            let re = chol.solve(&SVector::<f64, 5>::from_fn(|a, _| v[a].re));
            let im = chol.solve(&SVector::<f64, 5>::from_fn(|a, _| v[a].im));
            out.set_coeff(idx, std::array::from_fn(|a| Complex64::new(re[a], im[a])));
        }
        out
    }
}

pub(crate) fn mat_vec(m: &Mat5, v: &[Complex64; 5]) -> [Complex64; 5] {
    std::array::from_fn(|a| {
        let mut s = Complex64::new(0.0, 0.0);
        for b in 0..5 {
            s += v[b] * m[(a, b)];
        }
        s
    })
}

pub fn elastic_energy(f: &QField, p: &ElasticParams) -> f64 {
    ElasticOperator::new(f.grid, *p).energy(&f.to_spectral())
}

pub fn elastic_gradient(f: &QField, p: &ElasticParams) -> QField {
    ElasticOperator::new(f.grid, *p).apply(&f.to_spectral()).to_real()
}

pub fn laplacian(f: &QField) -> QField {
    let g = f.grid;
    let mut s = f.to_spectral();
    for idx in 0..g.points() {
        let k2 = g.k_sq(idx);
        for c in s.comps.iter_mut() {
            c[idx] *= -k2;
        }
    }
    s.to_real()
}

/// `||grad Q||^2`.
pub fn gradient_norm_sq(f: &QField) -> f64 {
    let g = f.grid;
    f.to_spectral().weighted_sum(|i| g.k_sq(i))
}

pub fn gradient_norm(f: &QField) -> f64 {
    gradient_norm_sq(f).sqrt()
}

/// `||Laplacian Q||`.
pub fn laplacian_norm(f: &QField) -> f64 {
    let g = f.grid;
    f.to_spectral().weighted_sum(|i| g.k_sq(i).powi(2)).sqrt()
}

/// Spatial mean, the zero Fourier coefficient.
pub fn mean_value(f: &QField) -> QTensor {
    let mut c = [0.0; 5];
    for i in 0..f.points() {
        for (a, v) in f.get(i).coords().iter().enumerate() {
            c[a] += v;
        }
    }
    let n = f.points() as f64;
    QTensor::new(c.map(|v| v / n)).expect("finite field")
}
