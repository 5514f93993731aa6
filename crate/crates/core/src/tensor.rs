//! Q-tensor linear algebra.
//!
//! A Q-tensor is a traceless symmetric 3x3 matrix. It is stored by its five
//! coordinates in the fixed orthonormal basis (Frobenius inner product)
//!
//! ```text
//! E1 = diag(1,-1,0)/sqrt(2)      E2 = diag(1,1,-2)/sqrt(6)
//! E3 = (e1 e2^T + e2 e1^T)/sqrt(2)
//! E4 = (e1 e3^T + e3 e1^T)/sqrt(2)
//! E5 = (e2 e3^T + e3 e2^T)/sqrt(2)
//! ```
//!
//! Snapshot files store exactly these coordinates, so the basis is part of the
//! on-disk format (see [`BASIS_ID`]).

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use crate::error::{Error, Result};

/// Identifier written into snapshot headers.
pub const BASIS_ID: &str = "traceless-sym-5:E1=diag(1,-1,0)/sqrt2,E2=diag(1,1,-2)/sqrt6,E3=xy,E4=xz,E5=yz";

/// Eigenvalue gap below which two eigenvalues are treated as repeated.
pub const TIE_TOLERANCE: f64 = 1e-12;

const SQRT2_INV: f64 = std::f64::consts::FRAC_1_SQRT_2;
const SQRT6_INV: f64 = 0.408_248_290_463_863_05;

/// The five basis matrices.
pub fn basis() -> [Matrix3<f64>; 5] {
    let s = SQRT2_INV;
    let t = SQRT6_INV;
    [
        Matrix3::new(s, 0.0, 0.0, 0.0, -s, 0.0, 0.0, 0.0, 0.0),
        Matrix3::new(t, 0.0, 0.0, 0.0, t, 0.0, 0.0, 0.0, -2.0 * t),
        Matrix3::new(0.0, s, 0.0, s, 0.0, 0.0, 0.0, 0.0, 0.0),
        Matrix3::new(0.0, 0.0, s, 0.0, 0.0, 0.0, s, 0.0, 0.0),
        Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, s, 0.0, s, 0.0),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QTensor {
    c: [f64; 5],
}

impl QTensor {
    pub const ZERO: QTensor = QTensor { c: [0.0; 5] };

    pub fn new(c: [f64; 5]) -> Result<Self> {
        if let Some(bad) = c.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(*bad));
        }
        Ok(QTensor { c })
    }

    /// Construction without the finiteness check, for hot loops whose inputs are
    /// already validated.
    #[inline]
    pub(crate) fn from_coords_unchecked(c: [f64; 5]) -> Self {
        QTensor { c }
    }

    /// Orthogonal projection of an arbitrary 3x3 matrix onto the traceless
    /// symmetric subspace.
    pub fn from_matrix(m: &Matrix3<f64>) -> Result<Self> {
        let s = SQRT2_INV;
        let t = SQRT6_INV;
        let c = [
            s * (m[(0, 0)] - m[(1, 1)]),
            t * (m[(0, 0)] + m[(1, 1)] - 2.0 * m[(2, 2)]),
            s * (m[(0, 1)] + m[(1, 0)]),
            s * (m[(0, 2)] + m[(2, 0)]),
            s * (m[(1, 2)] + m[(2, 1)]),
        ];
        QTensor::new(c)
    }

    /// `frame * diag(lambda) * frame^T`, projected onto the traceless part.
    pub fn from_eigen(lambda: [f64; 3], frame: &Matrix3<f64>) -> Result<Self> {
        let d = Matrix3::from_diagonal(&Vector3::from(lambda));
        QTensor::from_matrix(&(frame * d * frame.transpose()))
    }

    /// Uniaxial tensor `s (n n^T - I/3)`.
    pub fn uniaxial(s: f64, n: &Vector3<f64>) -> Result<Self> {
        let n = n.normalize();
        let m = s * (n * n.transpose() - Matrix3::identity() / 3.0);
        QTensor::from_matrix(&m)
    }

    #[inline]
    pub fn coords(&self) -> [f64; 5] {
        self.c
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        let s = SQRT2_INV;
        let t = SQRT6_INV;
        let [c1, c2, c3, c4, c5] = self.c;
        let d0 = s * c1 + t * c2;
        let d1 = -s * c1 + t * c2;
        let d2 = -2.0 * t * c2;
        Matrix3::new(
            d0,
            s * c3,
            s * c4,
            s * c3,
            d1,
            s * c5,
            s * c4,
            s * c5,
            d2,
        )
    }

    #[inline]
    pub fn dot(&self, other: &QTensor) -> f64 {
        self.c.iter().zip(other.c.iter()).map(|(a, b)| a * b).sum()
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `R Q R^T`.
    pub fn rotate(&self, r: &Matrix3<f64>) -> QTensor {
        let m = r * self.to_matrix() * r.transpose();
        QTensor::from_matrix(&m).expect("rotation of a finite tensor is finite")
    }

    pub fn eigen(&self) -> EigenData {
        eigen(self)
    }
}

impl Add for QTensor {
    type Output = QTensor;
    fn add(self, rhs: QTensor) -> QTensor {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(rhs.c) {
            *a += b;
        }
        QTensor { c }
    }
}

impl AddAssign for QTensor {
    fn add_assign(&mut self, rhs: QTensor) {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a += b;
        }
    }
}

impl Sub for QTensor {
    type Output = QTensor;
    fn sub(self, rhs: QTensor) -> QTensor {
        self + (-rhs)
    }
}

impl Neg for QTensor {
    type Output = QTensor;
    fn neg(self) -> QTensor {
        QTensor { c: self.c.map(|x| -x) }
    }
}

impl Mul<QTensor> for f64 {
    type Output = QTensor;
    fn mul(self, rhs: QTensor) -> QTensor {
        QTensor { c: rhs.c.map(|x| self * x) }
    }
}

/// Eigen-decomposition of a Q-tensor: ascending eigenvalues and a right-handed
/// orthonormal frame whose columns are the matching eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenData {
    pub lambda: [f64; 3],
    pub frame: Matrix3<f64>,
}

impl EigenData {
    pub fn reconstruct(&self) -> Matrix3<f64> {
        let d = Matrix3::from_diagonal(&Vector3::from(self.lambda));
        self.frame * d * self.frame.transpose()
    }
}

/// Closed-form eigen-solver for traceless symmetric matrices.
///
/// Eigenvalues come from the trigonometric formula. The eigenvector of the
/// best separated eigenvalue is taken from cross products of rows of
/// `Q - lambda I`, and the remaining pair is resolved by a 2x2 rotation in its
/// orthogonal complement. Repeated eigenvalues keep the complement basis built by
/// Gram-Schmidt from the canonical seed `e1` (or `e2` when `e1` is nearly parallel).
pub fn eigen(q: &QTensor) -> EigenData {
    let a = q.to_matrix();
    let j2 = 0.5 * q.norm_sq();
    if j2 == 0.0 {
        return EigenData { lambda: [0.0; 3], frame: Matrix3::identity() };
    }
    let p = (j2 / 3.0).sqrt();
    let r = (a.determinant() / (2.0 * p * p * p)).clamp(-1.0, 1.0);
    let theta = r.acos() / 3.0;
    let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
    let l3 = 2.0 * p * theta.cos();
    let l1 = 2.0 * p * (theta + two_pi_3).cos();
    let l2 = -l1 - l3;

    if l3 - l1 < TIE_TOLERANCE {
        return EigenData { lambda: [l1, l2, l3], frame: Matrix3::identity() };
    }

    let isolate_top = (l3 - l2) >= (l2 - l1);
    let l_iso = if isolate_top { l3 } else { l1 };
    let v = isolated_eigenvector(&a, l_iso);
    let l_iso = (v.transpose() * a * v)[(0, 0)];

    let seed = if v.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e_a = (seed - v * v.dot(&seed)).normalize();
    let e_b = v.cross(&e_a);
    let d11 = (e_a.transpose() * a * e_a)[(0, 0)];
    let d22 = (e_b.transpose() * a * e_b)[(0, 0)];
    let off = (e_a.transpose() * a * e_b)[(0, 0)];

    let half_diff = 0.5 * (d11 - d22);
    let spread = (half_diff * half_diff + off * off).sqrt();
    let (u_hi, u_lo) = if 2.0 * spread < TIE_TOLERANCE {
        (e_a, e_b)
    } else {
        let angle = 0.5 * off.atan2(half_diff);
        let (s, c) = angle.sin_cos();
        (e_a * c + e_b * s, e_b * c - e_a * s)
    };
    let mu_hi = (u_hi.transpose() * a * u_hi)[(0, 0)];
    let mu_lo = (u_lo.transpose() * a * u_lo)[(0, 0)];

    let (mut lambda, mut cols) = if isolate_top {
        ([mu_lo, mu_hi, l_iso], [u_lo, u_hi, v])
    } else {
        ([l_iso, mu_lo, mu_hi], [v, u_lo, u_hi])
    };
    // Rayleigh quotients of a near-tie can come out of order by an ulp
    for (i, j) in [(0, 1), (1, 2), (0, 1)] {
        if lambda[i] > lambda[j] {
            lambda.swap(i, j);
            cols.swap(i, j);
        }
    }
    let mut frame = Matrix3::from_columns(&cols);
    if frame.determinant() < 0.0 {
        frame.set_column(2, &(-cols[2]));
    }
    EigenData { lambda, frame }
}

fn isolated_eigenvector(a: &Matrix3<f64>, lambda: f64) -> Vector3<f64> {
    let m = a - Matrix3::identity() * lambda;
    let r0: Vector3<f64> = m.row(0).transpose();
    let r1: Vector3<f64> = m.row(1).transpose();
    let r2: Vector3<f64> = m.row(2).transpose();
    let candidates = [r0.cross(&r1), r1.cross(&r2), r2.cross(&r0)];
    let best = candidates
        .iter()
        .max_by(|x, y| x.norm_squared().total_cmp(&y.norm_squared()))
        .copied()
        .unwrap();
    best.normalize()
}

/// Physicality margin `min_i { lambda_i + 1/3, 2/3 - lambda_i }`.
pub fn rho_margin(q: &QTensor) -> f64 {
    margin_of(&eigen(q).lambda)
}

/// Margin of an ascending eigenvalue triple.
#[inline]
pub fn margin_of(lambda: &[f64; 3]) -> f64 {
    (lambda[0] + 1.0 / 3.0).min(2.0 / 3.0 - lambda[2])
}

/// Euclidean distance to the boundary of the physical set, `(sqrt 6 / 2)(lambda_1 + 1/3)`.
pub fn boundary_distance(q: &QTensor) -> Result<f64> {
    let l1 = eigen(q).lambda[0];
    if l1 <= -1.0 / 3.0 {
        return Err(Error::NotPhysical { lambda1: l1 });
    }
    Ok(0.5 * 6f64.sqrt() * (l1 + 1.0 / 3.0))
}

/// Uniformly distributed rotation from a random unit quaternion.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let normal = |rng: &mut R| {
        let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let q = nalgebra::Quaternion::new(normal(rng), normal(rng), normal(rng), normal(rng));
    nalgebra::UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
}
