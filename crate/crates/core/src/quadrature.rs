//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! This is the independent numerical route for every quantity that the
//! moment engine also computes in closed form, so it deliberately shares no
//! code with the truncated-moment recurrences.

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]` until the summed per-segment error estimate
/// drops below `abs_tol` (or 2000 segments are in use).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> QuadResult {
    if b == a {
        return QuadResult { value: 0.0, error_estimate: 0.0, evaluations: 0 };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    const MAX_SEGMENTS: usize = 2000;

    let mut segments = vec![kronrod15(&f, lo, hi)];
    let mut evaluations = 15;
    loop {
        let total_error: f64 = segments.iter().map(|s| s.error).sum();
        if total_error <= abs_tol || segments.len() >= MAX_SEGMENTS {
            break;
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // cannot split further in floating point
            segments.push(Segment { error: 0.0, ..seg });
            continue;
        }
        segments.push(kronrod15(&f, seg.a, mid));
        segments.push(kronrod15(&f, mid, seg.b));
        evaluations += 30;
    }

    // sum small-to-large to limit rounding
    segments.sort_by(|x, y| x.value.abs().total_cmp(&y.value.abs()));
    let value: f64 = segments.iter().map(|s| s.value).sum();
    let error_estimate: f64 = segments.iter().map(|s| s.error).sum();
    QuadResult { value: sign * value, error_estimate, evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(6) - 2.0 * x, -1.0, 2.0, 1e-14);
        let exact = (2f64.powi(7) + 1.0) / 7.0 - (4.0 - 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn gaussian_mass() {
        let r = integrate(crate::gaussian::pdf, -12.0, 12.0, 1e-14);
        assert!((r.value - 1.0).abs() < 1e-13, "{}", r.value);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let f = |x: f64| x.cos();
        let fwd = integrate(f, 0.0, 1.0, 1e-14).value;
        let rev = integrate(f, 1.0, 0.0, 1e-14).value;
        assert_eq!(fwd, -rev);
        assert!((fwd - 1f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn kink_forces_refinement() {
        let r = integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, 1e-10);
        assert!((r.value - 4.0 / 3.0).abs() < 1e-9);
        assert!(r.evaluations > 15);
    }
}
