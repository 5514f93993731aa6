//! Exponentially scaled modified Bessel functions of the first kind,
//! `e^{-x} I_nu(x)` for `nu = 0, 1, 2` and `x >= 0`.
//!
//! Power series below [`ASYMPTOTIC_FROM`], Hankel asymptotic expansion above.
//! [`scaled_combination`] evaluates linear combinations term by term in the
//! asymptotic regime so that combinations whose leading orders cancel (such as
//! `I0 - I1`) keep full relative accuracy for large arguments.

use std::f64::consts::PI;

pub const ASYMPTOTIC_FROM: f64 = 20.0;

/// `e^{-x} (c0 I0(x) + c1 I1(x) + c2 I2(x))` for `x >= 0`.
pub fn scaled_combination(x: f64, c: [f64; 3]) -> f64 {
    debug_assert!(x >= 0.0);
    if x < ASYMPTOTIC_FROM {
        let [i0, i1, i2] = series(x);
        let scale = (-x).exp();
        scale * (c[0] * i0 + c[1] * i1 + c[2] * i2)
    } else {
        asymptotic(x, c)
    }
}

/// Several combinations at one argument, sharing the series or expansion work.
pub fn scaled_combinations<const K: usize>(x: f64, cs: [[f64; 3]; K]) -> [f64; K] {
    debug_assert!(x >= 0.0);
    if x < ASYMPTOTIC_FROM {
        let [i0, i1, i2] = series(x);
        let scale = (-x).exp();
        cs.map(|c| scale * (c[0] * i0 + c[1] * i1 + c[2] * i2))
    } else {
        cs.map(|c| asymptotic(x, c))
    }
}

pub fn i0e(x: f64) -> f64 {
    scaled_combination(x.abs(), [1.0, 0.0, 0.0])
}

pub fn i1e(x: f64) -> f64 {
    x.signum() * scaled_combination(x.abs(), [0.0, 1.0, 0.0])
}

pub fn i2e(x: f64) -> f64 {
    scaled_combination(x.abs(), [0.0, 0.0, 1.0])
}

/// Unscaled `I0`, `I1`, `I2` by their power series.
fn series(x: f64) -> [f64; 3] {
    let y = 0.25 * x * x;
    let h = 0.5 * x;
    // term_k(nu) = (x/2)^{2k+nu} / (k! (k+nu)!)
    let mut t0 = 1.0;
    let mut t1 = h;
    let mut t2 = 0.5 * h * h;
    let (mut s0, mut s1, mut s2) = (t0, t1, t2);
    let mut k = 0.0;
    loop {
        k += 1.0;
        t0 *= y / (k * k);
        t1 *= y / (k * (k + 1.0));
        t2 *= y / (k * (k + 2.0));
        s0 += t0;
        s1 += t1;
        s2 += t2;
        if t0 < 1e-17 * s0 && k > 2.0 {
            break;
        }
    }
    [s0, s1, s2]
}

fn asymptotic(x: f64, c: [f64; 3]) -> f64 {
    // e^{-x} I_nu(x) ~ (2 pi x)^{-1/2} sum_k (-1)^k a_k(nu) / x^k,
    // a_k(nu) = prod_{j=1}^{k} (4 nu^2 - (2j-1)^2) / (k! 8^k).
    let mu = [0.0, 4.0, 16.0];
    let mut a = [1.0; 3];
    let mut sum: f64 = c.iter().sum();
    let mut sign = 1.0;
    let inv8x = 1.0 / (8.0 * x);
    let mut prev = f64::INFINITY;
    for k in 1..400 {
        let kf = k as f64;
        let odd = (2.0 * kf - 1.0) * (2.0 * kf - 1.0);
        for (an, m) in a.iter_mut().zip(mu) {
            *an *= (m - odd) * inv8x / kf;
        }
        sign = -sign;
        let largest = a.iter().zip(c).map(|(an, cn)| (an * cn).abs()).fold(0.0, f64::max);
        // the expansion diverges once its terms start growing
        if largest > prev {
            break;
        }
        prev = largest;
        sum += sign * (c[0] * a[0] + c[1] * a[1] + c[2] * a[2]);
        if k > 3 && largest <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}
