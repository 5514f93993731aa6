//! Periodic grids on the unit torus and fields of Q-tensors over them.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::tensor::QTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpectralGrid {
    pub dim: usize,
    pub n: usize,
}

impl SpectralGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidParams(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidParams(format!("points per axis must be a power of two >= 2, got {n}")));
        }
        Ok(SpectralGrid { dim, n })
    }

    #[inline]
    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        1.0 / self.points() as f64
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Axis indices of a flat point index, last axis fastest. Unused axes are 0.
    #[inline]
    pub fn axes(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        if self.dim == 2 {
            [idx / n, idx % n, 0]
        } else {
            [idx / (n * n), (idx / n) % n, idx % n]
        }
    }

    #[inline]
    pub fn flat(&self, axes: [usize; 3]) -> usize {
        let n = self.n;
        if self.dim == 2 {
            axes[0] * n + axes[1]
        } else {
            (axes[0] * n + axes[1]) * n + axes[2]
        }
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        self.axes(idx).map(|i| i as f64 * h)
    }

    /// Signed integer wavenumber of an FFT index, in `[-N/2, N/2 - 1]`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let a = self.axes(idx);
        let mut m = [0; 3];
        for d in 0..self.dim {
            m[d] = self.wavenumber(a[d]);
        }
        m
    }

    /// `k = 2 pi m`.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        self.mode(idx).map(|m| 2.0 * PI * m as f64)
    }

    pub fn k_sq(&self, idx: usize) -> f64 {
        self.wavevector(idx).iter().map(|k| k * k).sum()
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut p = FftPlanner::new();
            Arc::new(Plans { forward: p.plan_fft_forward(n), inverse: p.plan_fft_inverse(n) })
        })
        .clone()
}

/// In-place multidimensional FFT of one scalar component.
fn transform(grid: &SpectralGrid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n;
    let p = plans(n);
    let fft = if inverse { &p.inverse } else { &p.forward };
    let total = grid.points();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // last axis is contiguous
    for chunk in data.chunks_exact_mut(n) {
        fft.process_with_scratch(chunk, &mut scratch);
    }
    for axis in 0..grid.dim - 1 {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        let block = stride * n;
        for base in (0..total).step_by(block) {
            for off in 0..stride {
                let start = base + off;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[start + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[start + j * stride] = *v;
                }
            }
        }
    }
}

/// Fourier coefficients `FFT(Q) / N^dim` per basis component.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: SpectralGrid,
    pub comps: [Vec<Complex64>; 5],
}

impl SpectralField {
    pub fn zeros(grid: SpectralGrid) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); grid.points()];
        SpectralField { grid, comps: std::array::from_fn(|_| z.clone()) }
    }

    #[inline]
    pub fn coeff(&self, idx: usize) -> [Complex64; 5] {
        std::array::from_fn(|a| self.comps[a][idx])
    }

    #[inline]
    pub fn set_coeff(&mut self, idx: usize, v: [Complex64; 5]) {
        for a in 0..5 {
            self.comps[a][idx] = v[a];
        }
    }

    /// `sum_k w(k) |Q_k|^2`.
    pub fn weighted_sum<F: Fn(usize) -> f64>(&self, w: F) -> f64 {
        let mut s = 0.0;
        for idx in 0..self.grid.points() {
            let wk = w(idx);
            if wk != 0.0 {
                s += wk * self.comps.iter().map(|c| c[idx].norm_sqr()).sum::<f64>();
            }
        }
        s
    }

    pub fn to_real(&self) -> QField {
        let g = self.grid;
        let np = g.points();
        let mut values = vec![0.0; 5 * np];
        for a in 0..5 {
            let mut d = self.comps[a].clone();
            transform(&g, &mut d, true);
            for (i, v) in d.iter().enumerate() {
                values[5 * i + a] = v.re;
            }
        }
        QField { grid: g, values }
    }
}

/// A Q-tensor at every grid point; point-major, 5 coordinates fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct QField {
    pub grid: SpectralGrid,
    pub values: Vec<f64>,
}

impl QField {
    pub fn zeros(grid: SpectralGrid) -> Self {
        QField { grid, values: vec![0.0; 5 * grid.points()] }
    }

    pub fn uniform(grid: SpectralGrid, q: &QTensor) -> Self {
        let mut f = QField::zeros(grid);
        for i in 0..grid.points() {
            f.set(i, q);
        }
        f
    }

    /// Field with `f(x)` at each grid position `x`.
    pub fn from_fn<F: Fn([f64; 3]) -> QTensor>(grid: SpectralGrid, f: F) -> Self {
        let mut out = QField::zeros(grid);
        for i in 0..grid.points() {
            out.set(i, &f(grid.position(i)));
        }
        out
    }

    pub fn from_values(grid: SpectralGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != 5 * grid.points() {
            return Err(Error::Format(format!("expected {} values, got {}", 5 * grid.points(), values.len())));
        }
        if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(v));
        }
        Ok(QField { grid, values })
    }

    #[inline]
    pub fn get(&self, idx: usize) -> QTensor {
        let s = &self.values[5 * idx..5 * idx + 5];
        QTensor::from_coords_unchecked([s[0], s[1], s[2], s[3], s[4]])
    }

    #[inline]
    pub fn set(&mut self, idx: usize, q: &QTensor) {
        self.values[5 * idx..5 * idx + 5].copy_from_slice(&q.coords());
    }

    pub fn points(&self) -> usize {
        self.grid.points()
    }

    pub fn to_spectral(&self) -> SpectralField {
        let g = self.grid;
        let np = g.points();
        let scale = 1.0 / np as f64;
        let comps = std::array::from_fn(|a| {
            let mut d: Vec<Complex64> = (0..np).map(|i| Complex64::new(self.values[5 * i + a], 0.0)).collect();
            transform(&g, &mut d, false);
            for v in d.iter_mut() {
                *v *= scale;
            }
            d
        });
        SpectralField { grid: g, comps }
    }

    /// `int <self, other>` by the grid sum.
    pub fn inner(&self, other: &QField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &QField) -> QField {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect();
        QField { grid: self.grid, values }
    }

    pub fn scale(&self, s: f64) -> QField {
        QField { grid: self.grid, values: self.values.iter().map(|a| s * a).collect() }
    }

    pub fn sub(&self, other: &QField) -> QField {
        self.axpy(-1.0, other)
    }

    /// Pointwise maximum of `|Q(x) - c|`.
    pub fn sup_deviation(&self, c: &QTensor) -> f64 {
        (0..self.points()).map(|i| (self.get(i) - *c).norm()).fold(0.0, f64::max)
    }
}
