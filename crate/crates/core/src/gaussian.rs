//! Standard normal primitives used throughout: density, tails, interval
//! masses and truncated inverse-CDF sampling. Tail-sensitive paths use
//! `erfc` on the side of the distribution where the mass is small.
//!
//! `erf`/`erfc` come from `libm`, which is accurate to about an ulp; the
//! inverse starts from `statrs`'s `erfc_inv` and is polished by Halley steps.

use libm::{erf, erfc};
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// 1/sqrt(2*pi)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// P[N(0,1) <= x]
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// P[N(0,1) > x]
#[inline]
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Inverse of [`cdf`] on (0, 1).
#[inline]
pub fn quantile(p: f64) -> f64 {
    if p < 0.5 {
        -isf(p)
    } else {
        isf(1.0 - p)
    }
}

/// Inverse of [`sf`] on (0, 1).
fn isf(q: f64) -> f64 {
    let mut x = SQRT_2 * erfc_inv(2.0 * q);
    if !x.is_finite() {
        return x;
    }
    for _ in 0..2 {
        let g = pdf(x);
        if g == 0.0 {
            break;
        }
        // Halley step on sf(x) − q = 0
        let r = (sf(x) - q) / g;
        x += r / (1.0 - 0.5 * x * r);
    }
    x
}

/// Gaussian mass of `[a, b]`, computed on whichever tail keeps the
/// subtraction free of cancellation.
pub fn interval_mass(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if a >= 0.0 {
        (sf(a) - sf(b)).max(0.0)
    } else if b <= 0.0 {
        (cdf(b) - cdf(a)).max(0.0)
    } else {
        0.5 * (erf(b * FRAC_1_SQRT_2) - erf(a * FRAC_1_SQRT_2))
    }
}

/// Inverse-CDF draw from N(0,1) conditioned on `[a, b]`, given `u` in [0, 1).
pub fn sample_truncated(a: f64, b: f64, u: f64) -> f64 {
    debug_assert!(a <= b);
    let x = if a >= 0.0 {
        let (qa, qb) = (sf(a), sf(b));
        isf(qa - u * (qa - qb))
    } else if b <= 0.0 {
        // mirror into the upper tail
        let (qa, qb) = (sf(-b), sf(-a));
        -isf(qa - u * (qa - qb))
    } else {
        let (pa, pb) = (cdf(a), cdf(b));
        quantile(pa + u * (pb - pa))
    };
    if x.is_finite() {
        x.clamp(a, b)
    } else {
        0.5 * (a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tails_are_complementary() {
        for &x in &[-8.0, -1.3, 0.0, 0.4, 2.5, 9.0] {
            assert!((cdf(x) + sf(x) - 1.0).abs() < 1e-15);
        }
        assert!((cdf(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn interval_mass_deep_tail_keeps_precision() {
        // sf(10) ~ 7.6e-24; computing via cdf would round to zero.
        let m = interval_mass(10.0, 10.5);
        assert!(m > 7.0e-24 && m < 7.7e-24, "{m}");
        let mirrored = interval_mass(-10.5, -10.0);
        assert_eq!(m, mirrored);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-12, 0.01, 0.3, 0.5, 0.77, 0.999] {
            let x = quantile(p);
            assert!((cdf(x) - p).abs() <= 1e-14 * p.max(1e-3), "p={p}");
        }
    }

    #[test]
    fn truncated_sample_stays_in_bounds() {
        for &(a, b) in &[(-0.05, 0.05), (11.9, 12.0), (-12.0, -11.9), (0.3, 0.4)] {
            for i in 0..100 {
                let u = i as f64 / 100.0;
                let x = sample_truncated(a, b, u);
                assert!(x >= a && x <= b, "{x} not in [{a},{b}]");
            }
        }
    }
}
