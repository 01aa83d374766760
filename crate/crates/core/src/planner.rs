//! Parameter schedule, desk-scale configs and the Tsybakov translation.
//!
//! The schedule is evaluated entirely in natural-log space so that `M` can
//! be as large as `e^(1e6)` without overflow. [`evaluate_schedule`] computes
//! every quantity and lists the violated constraints; [`plan`] turns any
//! violation into an error.

use crate::error::{Error, Result};
use crate::instance::MassartInstance;
use crate::onedim::HardPairConfig;
use libm::lgamma;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c_tau: f64,
    pub c_m: f64,
    pub c_d: f64,
    pub c_zeta: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c_tau: 64.0,
            c_m: 64.0,
            c_d: 8.0,
            c_zeta: 4.0,
        }
    }
}

impl Constants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("C_tau", self.c_tau),
            ("C_m", self.c_m),
            ("C_d", self.c_d),
            ("C_zeta", self.c_zeta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticPlan {
    /// natural log of the SQ-dimension scale `M`
    pub log_m: f64,
    pub eta: f64,
    pub zeta: f64,
    pub constants: Constants,
    /// `log M / ((log log M)^3 · log(1/ζ))`
    pub l: f64,
    pub log_tau: f64,
    pub m: u64,
    pub d: u64,
    pub k: f64,
    pub delta: f64,
    pub log_epsilon: f64,
    pub c: f64,
    /// `log binom(m + 8d, 8d)`
    pub m_prime_log: f64,
    /// constraints that fail, empty for a feasible plan
    pub violations: Vec<String>,
}

impl AsymptoticPlan {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_probabilities(eta: f64, zeta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(Error::EtaOutOfRange(eta));
    }
    if !(zeta > 0.0) {
        return Err(Error::ZetaOutOfRange(zeta));
    }
    if zeta > eta {
        return Err(Error::ZetaAboveEta { zeta, eta });
    }
    Ok(())
}

fn to_count(x: f64, name: &str) -> Result<u64> {
    if !(x.is_finite() && x >= 0.0 && x < u64::MAX as f64) {
        return Err(Error::Range(format!("{name} = {x} does not fit in 64 bits")));
    }
    Ok(x as u64)
}

/// Computes the full schedule without rejecting infeasible outcomes.
/// Errors only when a quantity is undefined (input ranges, logs of
/// logs of numbers ≤ 1, 64-bit overflow).
pub fn evaluate_schedule(log_m: f64, eta: f64, zeta: f64, constants: Constants) -> Result<AsymptoticPlan> {
    check_probabilities(eta, zeta)?;
    constants.validate()?;
    let lz = (1.0 / zeta).ln();
    if !(log_m > std::f64::consts::E) {
        return Err(Error::Infeasible(format!(
            "log M = {log_m} must exceed e so that log log M > 0"
        )));
    }
    if !(lz > 1.0) {
        return Err(Error::Infeasible(format!(
            "log(1/zeta) = {lz} must exceed 1 so that log log(1/zeta) > 0"
        )));
    }
    let llm = log_m.ln();
    let l = log_m / (llm.powi(3) * lz);
    let log_inv_tau = log_m * log_m / (constants.c_tau * llm.powi(3) * lz);
    if !(log_inv_tau > 1.0) {
        return Err(Error::Infeasible(format!(
            "log(1/tau) = {log_inv_tau} must exceed 1 so that log log(1/tau) > 0"
        )));
    }
    let m = to_count((constants.c_m * log_inv_tau * lz.powi(4)).ceil(), "m")?;
    let d = to_count(
        (constants.c_d * (lz * log_inv_tau * log_inv_tau.ln()).sqrt()).ceil(),
        "d",
    )?;
    let k = 4.0 * log_inv_tau / lz.ln();
    let log_tau = -log_inv_tau;
    let log_epsilon = log_tau - k * (12.0 * lz.sqrt()).ln();
    let delta = 4.0 * lz.sqrt() / d as f64;
    let c = 1.0 / (144.0 * lz * lz);
    let eight_d = d.checked_mul(8).ok_or_else(|| Error::Range("8d overflows".into()))?;
    let total = m
        .checked_add(eight_d)
        .ok_or_else(|| Error::Range("m + 8d overflows".into()))?;
    let m_prime_log = log_binomial(total, eight_d);

    let mut violations = Vec::new();
    if l < constants.c_zeta {
        violations.push(format!("l = {l} is below C_zeta = {}", constants.c_zeta));
    }
    if d < 2 {
        violations.push(format!("d = {d} is below 2"));
    }
    if !(delta < 1.0) {
        violations.push(format!("delta = {delta} is not below 1"));
    }
    if !(log_epsilon < (delta / 8.0).ln()) {
        violations.push(format!(
            "epsilon = exp({log_epsilon}) is not below delta/8 = {}",
            delta / 8.0
        ));
    }
    if !(m_prime_log <= log_m) {
        violations.push(format!(
            "log binom(m+8d, 8d) = {m_prime_log} exceeds log M = {log_m}"
        ));
    }

    Ok(AsymptoticPlan {
        log_m,
        eta,
        zeta,
        constants,
        l,
        log_tau,
        m,
        d,
        k,
        delta,
        log_epsilon,
        c,
        m_prime_log,
        violations,
    })
}

/// Feasible schedule or an [`Error::Infeasible`] naming every violated
/// constraint.
pub fn plan(log_m: f64, eta: f64, zeta: f64, constants: Constants) -> Result<AsymptoticPlan> {
    let p = evaluate_schedule(log_m, eta, zeta, constants)?;
    if p.is_feasible() {
        Ok(p)
    } else {
        Err(Error::Infeasible(p.violations.join("; ")))
    }
}

/// Below this many factors the log-binomial is summed term by term.
const DIRECT_TERMS: u64 = 1_000_000;

/// `ln binom(n, r)`.
pub fn log_binomial(n: u64, r: u64) -> f64 {
    assert!(r <= n, "log_binomial requires r <= n");
    let r = r.min(n - r);
    if r == 0 {
        return 0.0;
    }
    if r <= DIRECT_TERMS {
        // Σ_{i=1}^{r} ln((n − r + i)/i)
        let base = (n - r) as f64;
        let mut acc = crate::numeric::CompensatedSum::new();
        for i in 1..=r {
            acc.add((base / i as f64).ln_1p());
        }
        return acc.value();
    }
    // lnΓ(n+1) − lnΓ(n−r+1) by Stirling, written to avoid cancellation
    let (nf, rf) = (n as f64, r as f64);
    let y = nf - rf;
    let head = rf * nf.ln() - y * (-rf / nf).ln_1p() - rf + 0.5 * (nf / y).ln();
    let tail = 1.0 / (12.0 * nf) - 1.0 / (12.0 * y) - 1.0 / (360.0 * nf.powi(3)) + 1.0 / (360.0 * y.powi(3));
    head + tail - lgamma(rf + 1.0)
}

/// Validated hard-pair config for directly chosen `(ζ, d, ε)`.
pub fn desk_config(zeta: f64, d: u32, epsilon: f64) -> Result<HardPairConfig> {
    HardPairConfig::new(zeta, d, epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsybakovParams {
    pub a_const: f64,
    pub alpha: f64,
}

impl TsybakovParams {
    pub fn new(a_const: f64, alpha: f64) -> Result<Self> {
        if !(a_const > 0.0 && a_const.is_finite()) {
            return Err(Error::InvalidParameter(format!("A must be positive, got {a_const}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { a_const, alpha })
    }

    /// `α/(1−α)`
    pub fn exponent(&self) -> f64 {
        self.alpha / (1.0 - self.alpha)
    }

    /// `A·t^{α/(1−α)}`
    pub fn tail_bound(&self, t: f64) -> f64 {
        self.a_const * t.powf(self.exponent())
    }
}

/// `η = 1/2 − (ζ/A)^{(1−α)/α}`.
pub fn tsybakov_to_massart(params: TsybakovParams, zeta: f64) -> Result<f64> {
    let params = TsybakovParams::new(params.a_const, params.alpha)?;
    if !(zeta > 0.0) {
        return Err(Error::ZetaOutOfRange(zeta));
    }
    let eta = 0.5 - (zeta / params.a_const).powf(1.0 / params.exponent());
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(Error::EtaOutOfRange(eta));
    }
    Ok(eta)
}

/// Inverse of [`tsybakov_to_massart`]: `ζ = A·(1/2 − η)^{α/(1−α)}`.
pub fn massart_to_tsybakov_zeta(params: TsybakovParams, eta: f64) -> f64 {
    params.tail_bound(0.5 - eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TsybakovRow {
    pub t: f64,
    pub probability: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TsybakovCheck {
    pub rows: Vec<TsybakovRow>,
    pub pass: bool,
}

/// Exact `P[η(x) ≥ 1/2 − t]` against `A·t^{α/(1−α)}` on every grid point.
/// Since `η(x) ∈ {0, η}`, the probability is 0, the mass of the noisy
/// region, or 1.
pub fn verify_tsybakov(instance: &MassartInstance, params: TsybakovParams, t_grid: &[f64]) -> TsybakovCheck {
    let noisy = instance.noisy_mass();
    let rows: Vec<TsybakovRow> = t_grid
        .iter()
        .map(|&t| {
            let threshold = 0.5 - t;
            let probability = if threshold <= 0.0 {
                1.0
            } else if instance.eta >= threshold {
                noisy
            } else {
                0.0
            };
            let bound = params.tail_bound(t);
            TsybakovRow {
                t,
                probability,
                bound,
                holds: probability <= bound,
            }
        })
        .collect();
    let pass = rows.iter().all(|r| r.holds);
    TsybakovCheck { rows, pass }
}
