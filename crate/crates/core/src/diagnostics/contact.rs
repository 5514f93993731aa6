//! Near-contact sets `{x : rho(Q(x)) <= eps}`, their box-counting dimension, and
//! the covering-content inequality against `||psi'(Q)||^2`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decay::least_squares_slope;
use crate::error::{Error, Result};
use crate::flow::{BulkModel, BulkState};
use crate::grid::{QField, SpectralGrid};
use crate::potential::constant_c1;
use crate::tensor::rho_margin;

/// Shifts with every component at most this many cells are all sampled.
pub const HOLDER_CUTOFF: i64 = 3;
pub const HOLDER_RANDOM_PAIRS: usize = 4096;
const HOLDER_SEED: u64 = 0x5eed;

/// Exponents `beta` reported in two dimensions.
pub const DEFAULT_BETAS: [f64; 3] = [0.5, 0.7, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxCount {
    /// Box side in cells.
    pub cells: usize,
    /// Box side on the unit torus.
    pub r: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentBound {
    pub beta: f64,
    /// Content exponent `s`: 2 in three dimensions, `2 - 2 beta` in two.
    pub exponent: f64,
    /// Measured Holder seminorm with exponent `beta`.
    pub holder: f64,
    pub c_tilde: f64,
    pub content: f64,
    /// `c_tilde / 5^s * content`.
    pub threshold: f64,
    /// `slope_norm_sq >= threshold`; `None` when the seminorm vanishes.
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactReport {
    pub epsilon: f64,
    pub mask: Vec<bool>,
    pub box_counts: Vec<BoxCount>,
    pub dim_estimate: Option<f64>,
    pub status: String,
    /// Covering content with exponent 2.
    pub content2: f64,
    /// `||psi'(Q)||^2`.
    pub slope_norm_sq: f64,
    pub bounds: Vec<ContentBound>,
    /// `N(r) <= N(r/2) <= 2^n N(r)` at every pair of consecutive scales.
    pub nesting_ok: bool,
}

/// Counts of occupied dyadic boxes of side `1, 2, 4, ..., N` cells.
pub fn box_counts(grid: &SpectralGrid, mask: &[bool]) -> Vec<BoxCount> {
    let n = grid.n;
    let mut out = Vec::new();
    let mut cells = 1;
    while cells <= n {
        let per_axis = n / cells;
        let mut seen = vec![false; per_axis.pow(grid.dim as u32)];
        for (idx, &m) in mask.iter().enumerate() {
            if m {
                let a = grid.axes(idx);
                let mut b = 0;
                for d in 0..grid.dim {
                    b = b * per_axis + a[d] / cells;
                }
                seen[b] = true;
            }
        }
        let count = seen.iter().filter(|&&s| s).count();
        out.push(BoxCount { cells, r: cells as f64 / n as f64, count });
        cells *= 2;
    }
    out
}

pub fn nesting_holds(dim: usize, counts: &[BoxCount]) -> bool {
    counts.windows(2).all(|w| {
        let (fine, coarse) = (w[0].count, w[1].count);
        coarse <= fine && fine <= (1 << dim) * coarse
    })
}

/// Least-squares slope of `ln N(r)` against `ln(1/r)` over `r` in `[4/N, 1/4]`,
/// clamped to `[0, dim]`.
pub fn dimension_estimate(grid: &SpectralGrid, counts: &[BoxCount]) -> Option<f64> {
    let lo = 4.0 / grid.n as f64;
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .filter(|c| c.r >= lo - 1e-15 && c.r <= 0.25 + 1e-15 && c.count > 0)
        .map(|c| ((1.0 / c.r).ln(), (c.count as f64).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    least_squares_slope(&pts).map(|s| s.clamp(0.0, grid.dim as f64))
}

/// `min_r N(r) rho(r)^s` over the dyadic covers with side at most 1/4, with
/// `rho = r sqrt(n) / 2` the radius of the ball around a box.
pub fn covering_content(grid: &SpectralGrid, counts: &[BoxCount], s: f64) -> f64 {
    let half_diag = (grid.dim as f64).sqrt() / 2.0;
    counts
        .iter()
        .filter(|c| c.r <= 0.25 + 1e-15)
        .map(|c| c.count as f64 * (c.r * half_diag).powf(s))
        .fold(f64::INFINITY, f64::min)
}

/// `sup |Q(x) - Q(y)| / |x - y|^exponent` over all pairs whose offset is within
/// [`HOLDER_CUTOFF`] cells per axis, all pairs offset along one axis, and a fixed
/// set of random pairs; distances are periodic.
pub fn holder_seminorm(f: &QField, exponent: f64) -> f64 {
    assert!(exponent > 0.0 && exponent < 1.0);
    let g = f.grid;
    let n = g.n as i64;
    let dim = g.dim;
    let mut shifts: Vec<[i64; 3]> = Vec::new();
    let c = HOLDER_CUTOFF.min(n / 2);
    let range = |d: usize| if d < dim { -c..=c } else { 0..=0 };
    for a in range(0) {
        for b in range(1) {
            for e in range(2) {
                if a != 0 || b != 0 || e != 0 {
                    shifts.push([a, b, e]);
                }
            }
        }
    }
    for d in 0..dim {
        for len in c + 1..=n / 2 {
            let mut s = [0; 3];
            s[d] = len;
            shifts.push(s);
        }
    }
    let h = g.spacing();
    let dist = |s: [i64; 3]| -> f64 {
        let mut d2 = 0.0;
        for &v in s.iter().take(dim) {
            let w = v.rem_euclid(n).min((-v).rem_euclid(n)) as f64 * h;
            d2 += w * w;
        }
        d2.sqrt()
    };
    let shift_max = shifts
        .par_iter()
        .map(|&s| {
            let r = dist(s);
            if r == 0.0 {
                return 0.0;
            }
            let w = r.powf(exponent);
            let mut best: f64 = 0.0;
            for idx in 0..g.points() {
                let a = g.axes(idx);
                let mut b = [0; 3];
                for d in 0..dim {
                    b[d] = (a[d] as i64 + s[d]).rem_euclid(n) as usize;
                }
                let diff = (f.get(idx) - f.get(g.flat(b))).norm();
                best = best.max(diff);
            }
            best / w
        })
        .reduce(|| 0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(HOLDER_SEED);
    let mut random_max: f64 = 0.0;
    for _ in 0..HOLDER_RANDOM_PAIRS {
        let i = rng.gen_range(0..g.points());
        let j = rng.gen_range(0..g.points());
        let (a, b) = (g.axes(i), g.axes(j));
        let mut s = [0; 3];
        for d in 0..dim {
            s[d] = b[d] as i64 - a[d] as i64;
        }
        let r = dist(s);
        if r > 0.0 {
            random_max = random_max.max((f.get(i) - f.get(j)).norm() / r.powf(exponent));
        }
    }
    shift_max.max(random_max)
}

/// One report per threshold. `betas` sets the Holder exponents of the
/// two-dimensional bounds; three dimensions always use `beta = 1/2`.
pub fn contact_report(f: &QField, epsilons: &[f64], betas: &[f64]) -> Result<Vec<ContactReport>> {
    let g = f.grid;
    let margins: Vec<f64> = (0..f.points()).into_par_iter().map(|i| rho_margin(&f.get(i))).collect();
    let bulk = BulkState::evaluate(f, BulkModel::Singular, None)?;
    let slope_norm_sq = bulk.grad.norm_sq();
    let c1 = constant_c1();
    let betas: Vec<f64> = if g.dim == 3 { vec![0.5] } else { betas.to_vec() };
    if betas.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
        return Err(Error::InvalidParams("Holder exponents must lie in (0, 1)".into()));
    }
    let holders: Vec<f64> = betas.iter().map(|&b| holder_seminorm(f, b)).collect();
    let mut out = Vec::new();
    for &eps in epsilons {
        let mask: Vec<bool> = margins.iter().map(|&m| m <= eps).collect();
        let counts = box_counts(&g, &mask);
        let empty = !mask.iter().any(|&m| m);
        let dim_estimate = if empty { None } else { dimension_estimate(&g, &counts) };
        let status = if empty {
            "empty set"
        } else if dim_estimate.is_none() {
            "too few scales"
        } else {
            "ok"
        };
        let bounds = betas
            .iter()
            .zip(&holders)
            .map(|(&beta, &holder)| {
                let (exponent, c_tilde) = if g.dim == 3 {
                    (2.0, 4.0 * PI / 3.0 * c1 * c1 / (holder * holder))
                } else {
                    (2.0 - 2.0 * beta, 4.0 * PI * c1 * c1 / (holder * holder))
                };
                let content = covering_content(&g, &counts, exponent);
                let threshold = c_tilde / 5f64.powf(exponent) * content;
                let holds = if holder > 0.0 { Some(slope_norm_sq >= threshold) } else { None };
                ContentBound { beta, exponent, holder, c_tilde, content, threshold, holds }
            })
            .collect();
        out.push(ContactReport {
            epsilon: eps,
            nesting_ok: nesting_holds(g.dim, &counts),
            content2: covering_content(&g, &counts, 2.0),
            mask,
            box_counts: counts,
            dim_estimate,
            status: status.into(),
            slope_norm_sq,
            bounds,
        });
    }
    Ok(out)
}
