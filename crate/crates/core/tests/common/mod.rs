#![allow(dead_code)]

use nalgebra::Matrix3;
use nematic_core::grid::{QField, SpectralGrid};
use nematic_core::tensor::{random_rotation, QTensor};
use rand::Rng;

pub fn from_lambda(l: [f64; 3]) -> QTensor {
    QTensor::from_eigen(l, &Matrix3::identity()).unwrap()
}

/// Random tensor with margin at least `floor`.
pub fn random_physical<R: Rng>(rng: &mut R, floor: f64) -> QTensor {
    loop {
        let a: f64 = rng.gen_range(-1.0 / 3.0 + floor..2.0 / 3.0 - floor);
        let b: f64 = rng.gen_range(-1.0 / 3.0 + floor..2.0 / 3.0 - floor);
        let mut l = [a, b, -a - b];
        l.sort_by(f64::total_cmp);
        if nematic_core::tensor::margin_of(&l) >= floor {
            return QTensor::from_eigen(l, &random_rotation(rng)).unwrap();
        }
    }
}

/// Sum of a few low Fourier modes with random coefficients, pointwise margin at least `floor`.
pub fn random_field<R: Rng>(rng: &mut R, grid: SpectralGrid, kmax: i64, floor: f64) -> QField {
    let mut terms = Vec::new();
    for _ in 0..6 {
        let m: [i64; 3] = std::array::from_fn(|d| if d < grid.dim { rng.gen_range(-kmax..=kmax) } else { 0 });
        let c: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        terms.push((m, c, phase));
    }
    let raw = QField::from_fn(grid, |x| {
        let mut c = [0.0; 5];
        for (m, a, ph) in &terms {
            let arg = std::f64::consts::TAU * (m[0] as f64 * x[0] + m[1] as f64 * x[1] + m[2] as f64 * x[2]) + ph;
            for i in 0..5 {
                c[i] += a[i] * arg.cos();
            }
        }
        QTensor::new(c).unwrap()
    });
    let sup = (0..raw.points()).map(|i| raw.get(i).norm()).fold(0.0, f64::max);
    // |lambda_i| <= sqrt(2/3) |Q|
    let target = (1.0 / 3.0 - floor) / (2.0f64 / 3.0).sqrt();
    raw.scale(target / sup * rng.gen_range(0.3..1.0))
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Entropy `int rho ln rho` of the minimum-entropy density on a sphere grid whose
/// second moment is `Q + I/3`, by infeasible-start Newton on the primal problem.
pub fn primal_psi(q: &QTensor) -> f64 {
    use nalgebra::{SMatrix, SVector};
    let (nt, np) = (96, 192);
    let rule = nematic_core::quadrature::GaussLegendre::new(nt);
    let b = nematic_core::tensor::basis();
    let mut w = Vec::with_capacity(nt * np);
    let mut g: Vec<[f64; 6]> = Vec::with_capacity(nt * np);
    for (u, wu) in rule.nodes.iter().zip(&rule.weights) {
        let s = (1.0 - u * u).sqrt();
        for k in 0..np {
            let phi = std::f64::consts::TAU * (k as f64 + 0.5) / np as f64;
            let p = nalgebra::Vector3::new(s * phi.cos(), s * phi.sin(), *u);
            w.push(wu * std::f64::consts::TAU / np as f64);
            let mut row = [1.0; 6];
            for a in 0..5 {
                row[a + 1] = p.dot(&(b[a] * p));
            }
            g.push(row);
        }
    }
    let c = q.coords();
    let target = SVector::<f64, 6>::from([1.0, c[0], c[1], c[2], c[3], c[4]]);
    let mut rho = vec![1.0 / (4.0 * std::f64::consts::PI); w.len()];
    let mut nu = SVector::<f64, 6>::zeros();
    let residual = |rho: &[f64], nu: &SVector<f64, 6>| -> f64 {
        let mut prim = -target;
        let mut dual = 0.0;
        for i in 0..rho.len() {
            let gi = SVector::<f64, 6>::from(g[i]);
            prim += gi * (w[i] * rho[i]);
            let r = rho[i].ln() + 1.0 + gi.dot(nu);
            dual += w[i] * r * r;
        }
        (prim.norm_squared() + dual).sqrt()
    };
    for _ in 0..2000 {
        // A H^-1 A^T y = -A H^-1 grad f - (b - A rho), H = diag(w / rho)
        let mut s = SMatrix::<f64, 6, 6>::zeros();
        let mut arho = SVector::<f64, 6>::zeros();
        let mut ahg = SVector::<f64, 6>::zeros();
        for i in 0..rho.len() {
            let gi = SVector::<f64, 6>::from(g[i]);
            let wr = w[i] * rho[i];
            s += gi * gi.transpose() * wr;
            arho += gi * wr;
            ahg += gi * (wr * (rho[i].ln() + 1.0));
        }
        let y = s.cholesky().expect("moment matrix").solve(&(-ahg - (target - arho)));
        let delta: Vec<f64> = (0..rho.len()).map(|i| -rho[i] * (rho[i].ln() + 1.0 + SVector::<f64, 6>::from(g[i]).dot(&y))).collect();
        let r0 = residual(&rho, &nu);
        if r0 < 1e-13 {
            break;
        }
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = rho.iter().zip(&delta).map(|(r, d)| r + t * d).collect();
            let nu_t = nu + (y - nu) * t;
            if trial.iter().all(|&v| v > 0.0) && residual(&trial, &nu_t) <= (1.0 - 0.01 * t) * r0 {
                rho = trial;
                nu = nu_t;
                break;
            }
            t *= 0.5;
            assert!(t > 1e-20, "primal Newton stalled at residual {r0}");
        }
    }
    rho.iter().zip(&w).map(|(r, wi)| wi * r * r.ln()).sum()
}
