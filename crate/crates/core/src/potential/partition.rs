//! Partition function `Z(nu) = int_{S^2} exp(sum_i nu_i p_i^2) dp` and the first
//! two moments of `(p_1^2, p_2^2, p_3^2)` under the Gibbs density.
//!
//! With the axis of the smallest multiplier as pole, the azimuthal integral has a
//! closed form in scaled Bessel functions and only the polar variable `u = cos theta`
//! is integrated numerically. Gauss-Legendre rules double from [`MIN_NODES`]
//! until successive values agree to [`REL_TOL`].

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::Matrix3;

use super::bessel::scaled_combinations;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

pub const MIN_NODES: usize = 32;
pub const MAX_NODES: usize = 1024;
pub const REL_TOL: f64 = 1e-13;

/// Polar window `[0, WINDOW_SIGMAS / sqrt(-a)]` once the Gaussian factor
/// `exp(a u^2)` is negligible beyond it.
const WINDOW_SIGMAS: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partition {
    pub log_z: f64,
    pub moments: [f64; 3],
    pub cov: Matrix3<f64>,
    pub nodes: usize,
}

fn rule(nodes: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        let mut v = Vec::new();
        let mut n = MIN_NODES;
        while n <= MAX_NODES {
            v.push(GaussLegendre::new(n));
            n *= 2;
        }
        v
    });
    let idx = (nodes / MIN_NODES).trailing_zeros() as usize;
    assert!(nodes.is_power_of_two() && nodes >= MIN_NODES && idx < rules.len());
    &rules[idx]
}

struct Sums {
    z: f64,
    x2: f64,
    y2: f64,
    x4: f64,
    x2y2: f64,
    y4: f64,
}

/// Integrals over the sphere of `exp(a x^2 + b y^2)` times monomials, with
/// `a <= b <= 0` and `x` the polar coordinate.
fn reduced_sums(a: f64, b: f64, nodes: usize) -> Sums {
    let w = if a < -WINDOW_SIGMAS * WINDOW_SIGMAS { WINDOW_SIGMAS / (-a).sqrt() } else { 1.0 };
    let g = rule(nodes);
    let mut s = Sums { z: 0.0, x2: 0.0, y2: 0.0, x4: 0.0, x2y2: 0.0, y4: 0.0 };
    for (x, wt) in g.nodes.iter().zip(&g.weights) {
        let u = 0.5 * w * (x + 1.0);
        let u2 = u * u;
        let r = 1.0 - u2;
        // the factor 2 for the mirrored half cancels the 1/2 of the affine map
        let e = wt * w * (a * u2).exp();
        let h = -0.5 * b * r;
        let [f0, f1, f2] = scaled_combinations(h, [[1.0, 0.0, 0.0], [1.0, -1.0, 0.0], [1.5, -2.0, 0.5]]);
        let f0 = 2.0 * PI * f0 * e;
        let f1 = PI * f1 * e;
        let f2 = 0.5 * PI * f2 * e;
        s.z += f0;
        s.x2 += u2 * f0;
        s.y2 += r * f1;
        s.x4 += u2 * u2 * f0;
        s.x2y2 += u2 * r * f1;
        s.y4 += r * r * f2;
    }
    s
}

/// Ascending order of `nu`, ties kept in index order.
fn order(nu: &[f64; 3]) -> [usize; 3] {
    let mut p = [0, 1, 2];
    p.sort_by(|&i, &j| nu[i].total_cmp(&nu[j]));
    p
}

/// One quadrature level, no convergence check.
pub(crate) fn partition_at(nu: [f64; 3], nodes: usize) -> Partition {
    let p = order(&nu);
    let top = nu[p[2]];
    let a = nu[p[0]] - top;
    let b = nu[p[1]] - top;
    let s = reduced_sums(a, b, nodes);
    let m0 = s.x2 / s.z;
    let m1 = s.y2 / s.z;
    let m2 = 1.0 - m0 - m1;
    let c00 = s.x4 / s.z - m0 * m0;
    let c01 = s.x2y2 / s.z - m0 * m1;
    let c11 = s.y4 / s.z - m1 * m1;
    let c02 = -c00 - c01;
    let c12 = -c01 - c11;
    let c22 = -c02 - c12;
    let sorted = [[c00, c01, c02], [c01, c11, c12], [c02, c12, c22]];
    let sm = [m0, m1, m2];
    let mut moments = [0.0; 3];
    let mut cov = Matrix3::zeros();
    for i in 0..3 {
        moments[p[i]] = sm[i];
        for j in 0..3 {
            cov[(p[i], p[j])] = sorted[i][j];
        }
    }
    Partition { log_z: s.z.ln() + top, moments, cov, nodes }
}

pub(crate) fn levels_agree(x: &Partition, y: &Partition) -> bool {
    let close = |u: f64, v: f64, scale: f64| (u - v).abs() <= REL_TOL * scale;
    close(x.log_z, y.log_z, x.log_z.abs().max(1.0))
        && (0..3).all(|i| close(x.moments[i], y.moments[i], x.moments[i].abs()))
}

/// `log Z(nu)`, moments and covariance with node doubling.
pub fn log_partition(nu: [f64; 3]) -> Result<Partition> {
    if let Some(&v) = nu.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(v));
    }
    let mut prev = partition_at(nu, MIN_NODES);
    let mut nodes = MIN_NODES;
    while nodes < MAX_NODES {
        nodes *= 2;
        let next = partition_at(nu, nodes);
        if levels_agree(&prev, &next) {
            return Ok(next);
        }
        prev = next;
    }
    let last = partition_at(nu, MAX_NODES);
    let before = partition_at(nu, MAX_NODES / 2);
    Err(Error::QuadratureNonConvergence { nodes: MAX_NODES, previous: before.log_z, last: last.log_z })
}
