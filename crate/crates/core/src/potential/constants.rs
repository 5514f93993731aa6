//! The blow-up constant `C1 = sqrt 3 / (9 sqrt(2 pi) e) * inf_xi e^{-xi} I0(xi) / (e^{-xi/2} I0(xi/2))`.

use std::f64::consts::{E, PI};
use std::sync::OnceLock;

use super::bessel::i0e;

/// `sqrt 3 / (9 sqrt(2 pi) e)`.
pub const C1_PREFACTOR: f64 = 0.028244487696781704;

const GRID_MAX: f64 = 1e3;
const GRID_STEP: f64 = 1e-2;

/// `e^{-xi} I0(xi) / (e^{-xi/2} I0(xi/2))`.
pub fn bessel_ratio(xi: f64) -> f64 {
    i0e(xi) / i0e(0.5 * xi)
}

/// `(argmin, min)` of [`bessel_ratio`] over `xi >= 0`.
pub fn c1_infimum() -> (f64, f64) {
    static CACHE: OnceLock<(f64, f64)> = OnceLock::new();
    *CACHE.get_or_init(|| {
        let steps = (GRID_MAX / GRID_STEP) as usize;
        let mut best = (0.0, bessel_ratio(0.0));
        for k in 1..=steps {
            let x = k as f64 * GRID_STEP;
            let r = bessel_ratio(x);
            if r < best.1 {
                best = (x, r);
            }
        }
        // golden section on the bracketing cell pair
        let (mut a, mut b) = ((best.0 - GRID_STEP).max(0.0), (best.0 + GRID_STEP).min(GRID_MAX));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (bessel_ratio(c), bessel_ratio(d));
        while b - a > 1e-10 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = bessel_ratio(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = bessel_ratio(d);
            }
        }
        let x = 0.5 * (a + b);
        let r = bessel_ratio(x);
        // the ratio tends to 1/sqrt 2 from below; an interior minimum must beat it
        let tail = std::f64::consts::FRAC_1_SQRT_2;
        if r < tail {
            (x, r)
        } else {
            (f64::INFINITY, tail)
        }
    })
}

pub fn constant_c1() -> f64 {
    debug_assert!((C1_PREFACTOR - 3f64.sqrt() / (9.0 * (2.0 * PI).sqrt() * E)).abs() < 1e-17);
    C1_PREFACTOR * c1_infimum().1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefactor() {
        assert!((C1_PREFACTOR - 3f64.sqrt() / (9.0 * (2.0 * PI).sqrt() * E)).abs() < 1e-17);
    }

    #[test]
    fn ratio_limits() {
        assert_eq!(bessel_ratio(0.0), 1.0);
        // e^{-x} I0(x) ~ (2 pi x)^{-1/2} (1 + 1/(8x) + ...)
        let x = 1e3;
        let asym = std::f64::consts::FRAC_1_SQRT_2 * (1.0 - 1.0 / (8.0 * x));
        assert!((bessel_ratio(x) - asym).abs() < 1e-6);
        assert!((bessel_ratio(1e5) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    }
}
