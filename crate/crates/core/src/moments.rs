//! Moments of the hard measures and the bounds they are checked against.
//!
//! Three independent routes are available:
//!
//! * the truncated-Gaussian recurrence, assembled piece by piece
//!   ([`measure_moments`]);
//! * adaptive quadrature of `x^t·density` ([`quadrature_moment`]);
//! * the exact lattice series for the untruncated periodic measure
//!   ([`lattice_discrepancy`]), which resolves discrepancies far below
//!   double-precision rounding of the other two.
//!
//! Bounds: the explicit `B`-vs-`A` constant and the Fourier certificate
//! `2·t!·(2δ/π)^t·Σ_{n≥1} exp(−(πn/δ)²/2)`, evaluated in log space.

use crate::error::{Error, Result};
use crate::gaussian;
use crate::numeric::{compensated_sum, double_factorial_odd, CompensatedSum};
use crate::onedim::{HardPair, Piece, PiecewiseGaussianMeasure};
use crate::quadrature;
use serde::Serialize;
use libm::lgamma as ln_gamma;
use std::f64::consts::PI;

pub const K_MAX: usize = 64;

/// Absolute tolerance of the quadrature oracle, per piece.
pub const QUAD_TOL: f64 = 1e-13;

/// `E G^t` for the standard normal.
pub fn gaussian_moment(t: usize) -> f64 {
    if t % 2 == 1 {
        0.0
    } else {
        double_factorial_odd(t)
    }
}

#[inline]
fn boundary_term(x: f64, power: i32) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        x.powi(power) * gaussian::pdf(x)
    }
}

#[inline]
fn recurrence_increment(a: f64, b: f64, t: usize) -> f64 {
    let p = (t - 1) as i32;
    boundary_term(a, p) - boundary_term(b, p)
}

/// `∫_a^b x^t G(x) dx` for `t = 0..=k`.
///
/// Uses `M_t = (t−1)·M_{t−2} + a^{t−1}G(a) − b^{t−1}G(b)` upward while
/// `t − 1 ≤ max(a², b²)`, where it is stable. Beyond that the upward
/// direction amplifies rounding by roughly `(t−1)/x²` per step, so the
/// remaining orders come from the same recurrence run downward from a far
/// start (Miller's method), which damps errors by the reciprocal factor.
pub fn truncated_gaussian_moments(a: f64, b: f64, k: usize) -> Vec<f64> {
    debug_assert!(a <= b);
    let c2 = a.abs().max(b.abs()).powi(2);
    // last order computed upward
    let t0 = if c2 >= k as f64 { k } else { (c2.floor() as usize + 1).min(k) };

    let mut m = Vec::with_capacity(k + 1);
    m.push(gaussian::interval_mass(a, b));
    if k >= 1 {
        m.push(boundary_term(a, 0) - boundary_term(b, 0));
    }
    for t in 2..=t0.max(1).min(k) {
        let next = (t - 1) as f64 * m[t - 2] + recurrence_increment(a, b, t);
        m.push(next);
    }
    if m.len() > k {
        m.truncate(k + 1);
        return m;
    }

    let start = 2 * k + 120;
    let mut down = vec![0.0; start + 2];
    for t in (2..=start + 1).rev() {
        let v = (down[t] - recurrence_increment(a, b, t)) / (t - 1) as f64;
        down[t - 2] = v;
    }
    m.extend_from_slice(&down[m.len()..=k]);
    m
}

pub fn truncated_gaussian_moment(a: f64, b: f64, t: usize) -> f64 {
    truncated_gaussian_moments(a, b, t)[t]
}

fn binomial_rows(k: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = vec![vec![1.0]];
    for n in 1..=k {
        let prev = &rows[n - 1];
        let mut row = vec![1.0; n + 1];
        for j in 1..n {
            row[j] = prev[j - 1] + prev[j];
        }
        rows.push(row);
    }
    rows
}

/// Unnormalised `∫ x^t · scale·G(x+h)` over one piece, `t = 0..=k`.
fn piece_moments(p: &Piece, k: usize, binom: &[Vec<f64>]) -> Vec<f64> {
    let h = p.shift;
    let m = truncated_gaussian_moments(p.lo + h, p.hi + h, k);
    if h == 0.0 {
        return m.into_iter().map(|v| p.scale * v).collect();
    }
    // x^t = (y − h)^t with y = x + h
    let mut powers = vec![1.0; k + 1];
    for j in 1..=k {
        powers[j] = powers[j - 1] * -h;
    }
    (0..=k)
        .map(|t| {
            let mut acc = CompensatedSum::new();
            for j in 0..=t {
                acc.add(binom[t][j] * powers[t - j] * m[j]);
            }
            p.scale * acc.value()
        })
        .collect()
}

fn check_order(k: usize) -> Result<()> {
    if k > K_MAX {
        Err(Error::MomentOrderTooLarge { t: k, max: K_MAX })
    } else {
        Ok(())
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(t) => Err(Error::Range(format!("moment of order {t} is not finite"))),
        None => Ok(()),
    }
}

/// Unnormalised moments `Σ_pieces ∫ x^t·density`, `t = 0..=k`.
pub fn raw_moments(measure: &PiecewiseGaussianMeasure, k: usize) -> Result<Vec<f64>> {
    check_order(k)?;
    let binom = binomial_rows(k);
    let mut acc = vec![CompensatedSum::new(); k + 1];
    for p in measure.pieces() {
        for (t, v) in piece_moments(p, k, &binom).into_iter().enumerate() {
            acc[t].add(v);
        }
    }
    let out: Vec<f64> = acc.iter().map(CompensatedSum::value).collect();
    check_finite(&out)?;
    Ok(out)
}

/// `E X^t` under the normalised measure, `t = 0..=k`.
pub fn measure_moments(measure: &PiecewiseGaussianMeasure, k: usize) -> Result<Vec<f64>> {
    let z = measure.normalizer();
    Ok(raw_moments(measure, k)?.into_iter().map(|v| v / z).collect())
}

pub fn measure_moment(measure: &PiecewiseGaussianMeasure, t: usize) -> Result<f64> {
    Ok(measure_moments(measure, t)?[t])
}

/// `E X^t` by adaptive quadrature of the normalised density on each piece.
pub fn quadrature_moment(measure: &PiecewiseGaussianMeasure, t: usize) -> f64 {
    let z = measure.normalizer();
    let terms = measure.pieces().iter().map(|p| {
        let f = |x: f64| x.powi(t as i32) * p.scale * gaussian::pdf(x + p.shift);
        quadrature::integrate(f, p.lo, p.hi, QUAD_TOL).value
    });
    compensated_sum(terms) / z
}

/// `4ε(2 + 8·sqrt(ln(1/ζ)))^t`.
pub fn ab_moment_bound(zeta: f64, epsilon: f64, t: usize) -> f64 {
    4.0 * epsilon * (2.0 + 8.0 * (1.0 / zeta).ln().sqrt()).powi(t as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierBoundCertificate {
    pub t: usize,
    pub delta: f64,
    /// per-`n` contribution `t!·(2δ/π)^t·exp(−(πn/δ)²/2)`, `n = 1, 2, ...`
    pub series_terms: Vec<f64>,
    /// `ln(total)`; finite even when `total` under- or overflows
    pub log_total: f64,
    pub total: f64,
}

pub fn fourier_discrepancy_bound(t: usize, delta: f64) -> FourierBoundCertificate {
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    let log_prefactor = ln_gamma(t as f64 + 1.0) + t as f64 * (2.0 * delta / PI).ln();
    let a = 0.5 * (PI / delta).powi(2);
    // Σ_n exp(−a n²) = exp(−a)·(1 + Σ_{n≥2} exp(−a(n²−1)))
    let mut rel = vec![1.0];
    let mut n = 2.0_f64;
    loop {
        let r = (-a * (n * n - 1.0)).exp();
        if r < 1e-30 {
            break;
        }
        rel.push(r);
        n += 1.0;
    }
    let log_series = -a + compensated_sum(rel.iter().copied()).ln();
    let series_terms = rel
        .iter()
        .map(|r| (log_prefactor - a + r.ln()).exp())
        .collect();
    let log_total = std::f64::consts::LN_2 + log_prefactor + log_series;
    FourierBoundCertificate {
        t,
        delta,
        series_terms,
        log_total,
        total: log_total.exp(),
    }
}

/// Probabilists' Hermite polynomial `He_t(x)`.
pub fn hermite_he(t: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if t == 0 {
        return prev;
    }
    for n in 1..t {
        let next = x * cur - n as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// A real number stored as sign and log-magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignedLog {
    pub sign: f64,
    pub log_abs: f64,
}

impl SignedLog {
    pub fn value(&self) -> f64 {
        self.sign * self.log_abs.exp()
    }

    fn from_scaled(scaled: f64, log_scale: f64) -> Self {
        if scaled == 0.0 {
            Self {
                sign: 0.0,
                log_abs: f64::NEG_INFINITY,
            }
        } else {
            Self {
                sign: scaled.signum(),
                log_abs: scaled.abs().ln() + log_scale,
            }
        }
    }
}

/// Lattice sums for the untruncated periodic measure `G_{δ,ε}`:
/// `Δ_t = E G_{δ,ε}^t − E G^t = 2 Σ_{n≥1} sinc(ω_n ε)·(−1)^{t/2}·He_t(ω_n)·exp(−ω_n²/2)`
/// for even `t` with `ω_n = 2πn/δ`, and `Δ_t = 0` for odd `t`.
/// Returned as the bracketed sum scaled by `exp(ω_1²/2)`, plus that log scale.
fn lattice_scaled(t: usize, delta: f64, epsilon: f64) -> (f64, f64) {
    let w1 = 2.0 * PI / delta;
    let log_scale = std::f64::consts::LN_2 - 0.5 * w1 * w1;
    if t % 2 == 1 {
        return (0.0, log_scale);
    }
    let sign = if (t / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut acc = CompensatedSum::new();
    for n in 1..=64 {
        let w = w1 * n as f64;
        let damp = (-0.5 * (w * w - w1 * w1)).exp();
        let arg = w * epsilon;
        let term = (arg.sin() / arg) * hermite_he(t, w) * damp;
        acc.add(term);
        if damp < 1e-300 || (n > 1 && term.abs() < 1e-30 * acc.value().abs()) {
            break;
        }
    }
    (sign * acc.value(), log_scale)
}

/// Exact `E G_{δ,ε}^t − E G^t` for the untruncated, unnormalised measure.
pub fn lattice_discrepancy(t: usize, delta: f64, epsilon: f64) -> SignedLog {
    let (s, l) = lattice_scaled(t, delta, epsilon);
    SignedLog::from_scaled(s, l)
}

/// Exact `E A^t − E G^t` for `A = G_{δ,ε}/‖G_{δ,ε}‖` without truncation:
/// `(Δ_t − (t−1)!!·Δ_0)/(1 + Δ_0)`.
pub fn lattice_normalized_discrepancy(t: usize, delta: f64, epsilon: f64) -> SignedLog {
    let (s0, l) = lattice_scaled(0, delta, epsilon);
    let (st, _) = lattice_scaled(t, delta, epsilon);
    let delta0 = SignedLog::from_scaled(s0, l).value();
    let scaled = st - gaussian_moment(t) * s0;
    let mut out = SignedLog::from_scaled(scaled, l);
    out.log_abs -= delta0.ln_1p();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub k: usize,
    pub moments_a: Vec<f64>,
    pub moments_b: Vec<f64>,
    pub moments_gaussian: Vec<f64>,
    pub discrepancy_a: Vec<f64>,
    pub discrepancy_b: Vec<f64>,
    /// `|E B^t − E A^t|`
    pub difference_ab: Vec<f64>,
    pub bound_ab: Vec<f64>,
    pub fourier_bounds: Vec<f64>,
    /// `difference_ab[t] ≤ bound_ab[t]` for every `t`
    pub ab_within_bound: bool,
}

/// Slack allowed on top of the explicit `B`-vs-`A` bound for rounding.
pub const AB_SLACK: f64 = 1e-12;

pub fn moment_discrepancy_report(pair: &HardPair, k: usize) -> Result<MomentReport> {
    let moments_a = measure_moments(&pair.a, k)?;
    let moments_b = measure_moments(&pair.b, k)?;
    let moments_gaussian: Vec<f64> = (0..=k).map(gaussian_moment).collect();
    let dist = |m: &[f64]| -> Vec<f64> {
        m.iter()
            .zip(&moments_gaussian)
            .map(|(x, g)| (x - g).abs())
            .collect()
    };
    let discrepancy_a = dist(&moments_a);
    let discrepancy_b = dist(&moments_b);
    let difference_ab: Vec<f64> = moments_a
        .iter()
        .zip(&moments_b)
        .map(|(a, b)| (b - a).abs())
        .collect();
    let cfg = &pair.config;
    let bound_ab: Vec<f64> = (0..=k)
        .map(|t| ab_moment_bound(cfg.zeta, cfg.epsilon, t))
        .collect();
    let fourier_bounds = (0..=k)
        .map(|t| fourier_discrepancy_bound(t, cfg.delta).total)
        .collect();
    let ab_within_bound = difference_ab
        .iter()
        .zip(&bound_ab)
        .all(|(d, b)| *d <= b + AB_SLACK);
    Ok(MomentReport {
        k,
        moments_a,
        moments_b,
        moments_gaussian,
        discrepancy_a,
        discrepancy_b,
        difference_ab,
        bound_ab,
        fourier_bounds,
        ab_within_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub closed_form: f64,
    pub quadrature: f64,
}

/// `χ²(μ, N(0,1)) = ∫ μ²/G − 1` for a normalised piecewise measure.
///
/// On a piece with density `s·G(x+h)`, `G(x+h)²/G(x) = e^{h²}·G(x+2h)`, so
/// the closed form is a sum of shifted Gaussian masses. The quadrature route
/// integrates `μ(x)²/G(x)` directly.
pub fn chi_square_vs_gaussian(measure: &PiecewiseGaussianMeasure) -> ChiSquare {
    let z = measure.normalizer();
    let closed = compensated_sum(measure.pieces().iter().map(|p| {
        let r = p.scale / z;
        let h2 = 2.0 * p.shift;
        r * r * (p.shift * p.shift).exp() * gaussian::interval_mass(p.lo + h2, p.hi + h2)
    }));
    let quad = compensated_sum(measure.pieces().iter().map(|p| {
        let r = p.scale / z;
        let f = |x: f64| {
            let g = gaussian::pdf(x + p.shift);
            r * r * g * g / gaussian::pdf(x)
        };
        quadrature::integrate(f, p.lo, p.hi, QUAD_TOL).value
    }));
    ChiSquare {
        closed_form: closed - 1.0,
        quadrature: quad - 1.0,
    }
}

/// The unnormalised periodic Gaussian `G_{δ,ε}` on `|n| ≤ n_max`, for
/// experiments that vary δ independently of a hard-pair config.
pub fn periodic_gaussian(delta: f64, epsilon: f64, n_max: u32) -> Result<PiecewiseGaussianMeasure> {
    if !(epsilon > 0.0 && 2.0 * epsilon < delta) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < epsilon < delta/2, got epsilon={epsilon}, delta={delta}"
        )));
    }
    let scale = delta / (2.0 * epsilon);
    let n_max = n_max as i64;
    let pieces = (-n_max..=n_max)
        .map(|n| {
            let c = n as f64 * delta;
            Piece {
                lo: c - epsilon,
                hi: c + epsilon,
                scale,
                shift: 0.0,
            }
        })
        .collect();
    let reach = n_max as f64 * delta - epsilon;
    PiecewiseGaussianMeasure::new(pieces, 1.0, 2.0 * gaussian::sf(reach))
}
