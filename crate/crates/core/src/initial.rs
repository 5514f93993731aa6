//! Initial data generators.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{QField, SpectralGrid};
use crate::tensor::QTensor;

/// Stream of the seeded generator used for initial data.
pub const INITIAL_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Point,
    Line,
    Plane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginProfile {
    /// Margin grows quadratically with the distance to the contact set.
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    Zero,
    /// `s (n n^T - I/3)`.
    UniformUniaxial { s: f64, axis: [f64; 3] },
    /// Random modes with `|m_i| <= kmax`, scaled so the margin is at least `margin_min`.
    RandomBandlimited { kmax: usize, margin_min: f64 },
    /// Uniaxial along `e_3` with margin `floor` on a point, line or plane through
    /// the centre of the cell, rising to `1/3` (isotropy) away from it.
    NearBoundary { geometry: Geometry, profile: MarginProfile, floor: f64 },
}

impl InitialSpec {
    pub fn validate(&self, grid: &SpectralGrid) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        match *self {
            InitialSpec::Zero => Ok(()),
            InitialSpec::UniformUniaxial { s, axis } => {
                if !(s > -0.5 && s < 1.0) {
                    return bad(format!("uniaxial order parameter must lie in (-1/2, 1), got {s}"));
                }
                if Vector3::from(axis).norm() == 0.0 || axis.iter().any(|a| !a.is_finite()) {
                    return bad("uniaxial axis must be a finite nonzero vector".into());
                }
                Ok(())
            }
            InitialSpec::RandomBandlimited { kmax, margin_min } => {
                if 2 * kmax >= grid.n {
                    return bad(format!("kmax = {kmax} must be below N/2 = {}", grid.n / 2));
                }
                if !(margin_min > 0.0 && margin_min < 1.0 / 3.0) {
                    return bad(format!("margin floor must lie in (0, 1/3), got {margin_min}"));
                }
                Ok(())
            }
            InitialSpec::NearBoundary { geometry, floor, .. } => {
                if !(floor > 0.0 && floor < 1.0 / 3.0) {
                    return bad(format!("margin floor must lie in (0, 1/3), got {floor}"));
                }
                if grid.dim == 2 && geometry == Geometry::Plane {
                    return bad("a plane contact set needs three dimensions".into());
                }
                Ok(())
            }
        }
    }

    /// Guaranteed lower bound of the margin of the generated field.
    pub fn margin_floor(&self) -> f64 {
        match *self {
            InitialSpec::Zero => 1.0 / 3.0,
            InitialSpec::UniformUniaxial { s, .. } => crate::tensor::margin_of(&uniaxial_eigenvalues(s)),
            InitialSpec::RandomBandlimited { margin_min, .. } => margin_min,
            InitialSpec::NearBoundary { floor, .. } => floor,
        }
    }
}

fn uniaxial_eigenvalues(s: f64) -> [f64; 3] {
    let mut l = [-s / 3.0, -s / 3.0, 2.0 * s / 3.0];
    l.sort_by(f64::total_cmp);
    l
}

pub fn generate_initial(spec: &InitialSpec, grid: SpectralGrid, seed: u64) -> Result<QField> {
    spec.validate(&grid)?;
    match *spec {
        InitialSpec::Zero => Ok(QField::zeros(grid)),
        InitialSpec::UniformUniaxial { s, axis } => {
            let n = Vector3::from(axis).normalize();
            Ok(QField::uniform(grid, &QTensor::uniaxial(s, &n)?))
        }
        InitialSpec::RandomBandlimited { kmax, margin_min } => Ok(random_bandlimited(grid, kmax, margin_min, seed)),
        InitialSpec::NearBoundary { geometry, floor, .. } => near_boundary(grid, geometry, floor),
    }
}

/// `Q(x) = sum_m a_m cos(2 pi m.x) + b_m sin(2 pi m.x)` over `m` in
/// `[-kmax, kmax]^dim` with coordinates uniform in `[-1, 1]`, drawn in a fixed mode
/// order so the field does not depend on `N`. The sum of coefficient norms `S`
/// bounds `|Q|` pointwise, and `|lambda_1| <= sqrt(2/3) |Q|` for traceless `Q`;
/// the field is scaled to `S = (1/3 - margin_min) / sqrt(2/3)`.
fn random_bandlimited(grid: SpectralGrid, kmax: usize, margin_min: f64, seed: u64) -> QField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INITIAL_STREAM);
    let k = kmax as i64;
    let mut modes = Vec::new();
    let span = |d: usize| if d < grid.dim { -k..=k } else { 0..=0 };
    for a in span(0) {
        for b in span(1) {
            for c in span(2) {
                // one representative of each pair m, -m
                let m = [a, b, c];
                let first = m.iter().find(|&&v| v != 0);
                if first.is_none_or(|&v| v > 0) {
                    modes.push(m);
                }
            }
        }
    }
    let mut draw = || -> [f64; 5] { std::array::from_fn(|_| rng.gen_range(-1.0..1.0)) };
    let coeffs: Vec<([i64; 3], [f64; 5], [f64; 5])> = modes
        .into_iter()
        .map(|m| {
            let a = draw();
            let b = if m == [0, 0, 0] { [0.0; 5] } else { draw() };
            (m, a, b)
        })
        .collect();
    let norm = |v: &[f64; 5]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let total: f64 = coeffs.iter().map(|(_, a, b)| norm(a) + norm(b)).sum();
    let target = (1.0 / 3.0 - margin_min) / (2.0f64 / 3.0).sqrt();
    let scale = if total > 0.0 { target / total } else { 0.0 };
    let mut f = QField::zeros(grid);
    for idx in 0..grid.points() {
        let x = grid.position(idx);
        let mut c = [0.0; 5];
        for (m, a, b) in &coeffs {
            let phase = 2.0 * PI * (m[0] as f64 * x[0] + m[1] as f64 * x[1] + m[2] as f64 * x[2]);
            let (s, co) = phase.sin_cos();
            for i in 0..5 {
                c[i] += scale * (a[i] * co + b[i] * s);
            }
        }
        f.values[5 * idx..5 * idx + 5].copy_from_slice(&c);
    }
    f
}

/// Number of leading coordinates pinned to `1/2` on the contact set.
fn constrained_axes(dim: usize, geometry: Geometry) -> usize {
    match geometry {
        Geometry::Point => dim,
        Geometry::Line => dim - 1,
        Geometry::Plane => dim - 2,
    }
}

fn near_boundary(grid: SpectralGrid, geometry: Geometry, floor: f64) -> Result<QField> {
    let k = constrained_axes(grid.dim, geometry);
    let e3 = Vector3::z();
    let mut f = QField::zeros(grid);
    for idx in 0..grid.points() {
        let x = grid.position(idx);
        let g = (0..k).map(|i| (PI * (x[i] - 0.5)).sin().powi(2)).sum::<f64>() / k as f64;
        let m = floor + (1.0 / 3.0 - floor) * g;
        f.set(idx, &QTensor::uniaxial(1.0 - 3.0 * m, &e3)?);
    }
    Ok(f)
}
