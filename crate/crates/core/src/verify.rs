//! End-to-end verification of a desk configuration.
//!
//! Every check records the measured value next to the limit it is held to,
//! so a failing report says by how much.

use crate::error::Result;
use crate::instance::{flip_probability, make_instance, opt_error, sample_labeled, unit_axis, MassartInstance};
use crate::lift::{check_consistency, enumerate_basis, halfspace_from_ptf};
use crate::moments::{
    chi_square_vs_gaussian, fourier_discrepancy_bound, gaussian_moment,
    lattice_normalized_discrepancy, moment_discrepancy_report, quadrature_moment, AB_SLACK,
};
use crate::onedim::{build_hard_pair, HardPair, HardPairConfig, IntervalUnion};
use crate::planner::{massart_to_tsybakov_zeta, tsybakov_to_massart, verify_tsybakov, TsybakovParams};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

pub const CHI_SQUARE_TOL: f64 = 1e-8;
pub const QUADRATURE_REL_TOL: f64 = 1e-10;
pub const FOURIER_MAX_ORDER: usize = 8;
pub const ROUND_TRIP_TOL: f64 = 1e-12;
/// Points sampled per unit length when comparing densities pointwise.
const DENSITY_GRID_PER_UNIT: f64 = 2000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftCheckConfig {
    pub zeta: f64,
    pub d: u32,
    pub epsilon: f64,
    pub m: usize,
    pub d_max: u32,
    pub padding: usize,
    pub samples: usize,
}

impl Default for LiftCheckConfig {
    /// Small enough that the monomial expansion of the `J2` polynomial stays
    /// well conditioned in double precision.
    fn default() -> Self {
        Self {
            zeta: 0.45,
            d: 4,
            epsilon: 0.05,
            m: 3,
            d_max: 32,
            padding: 16,
            samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub zeta: f64,
    pub d: u32,
    pub epsilon: f64,
    pub k: usize,
    pub eta: f64,
    pub m: usize,
    pub samples: usize,
    pub seed: u64,
    pub tsybakov_a: f64,
    pub tsybakov_alpha: f64,
    pub lift: LiftCheckConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            zeta: 0.05,
            d: 10,
            epsilon: 0.05,
            k: 12,
            eta: 0.3,
            m: 20,
            samples: 100_000,
            seed: 0,
            tsybakov_a: 1.0,
            tsybakov_alpha: 0.5,
            lift: LiftCheckConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub limit: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass: value <= limit,
            value,
            limit,
            detail: detail.into(),
        }
    }

    fn flag(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            value: if pass { 1.0 } else { 0.0 },
            limit: 1.0,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub t: usize,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub gaussian: f64,
    pub quadrature_a: f64,
    pub quadrature_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyRow {
    pub t: usize,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "AB")]
    pub ab: f64,
    /// normalized untruncated periodic measure, where `t ≤ 8`
    pub lattice: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub t: usize,
    #[serde(rename = "AB")]
    pub ab: f64,
    pub fourier: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairValues {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareSection {
    pub closed_form: PairValues,
    pub quadrature: PairValues,
    /// `max(χ²) / (δ/ε)²`
    #[serde(rename = "C")]
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub zeta: f64,
    pub d: u32,
    pub delta: f64,
    pub epsilon: f64,
    pub n_max: u32,
    pub normalizer: f64,
    pub request: VerifyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub config: ReportConfig,
    pub moments: Vec<MomentRow>,
    pub discrepancies: Vec<DiscrepancyRow>,
    pub bounds: Vec<BoundRow>,
    pub chi_square: ChiSquareSection,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

fn construction_checks(pair: &HardPair, checks: &mut Vec<Check>) {
    let d = pair.config.d as usize;
    checks.push(Check::flag(
        "construction.interval_counts",
        pair.j1.len() == 2 * d + 1 && pair.j2.len() == 2 * d + 1,
        format!("|J1| = {}, |J2| = {}", pair.j1.len(), pair.j2.len()),
    ));
    let disjoint = pair.j1.union(&pair.j2).is_ok();
    checks.push(Check::flag("construction.disjoint", disjoint, "J1 and J2 share no point"));

    // Structural: A has no piece meeting J2, B none meeting J1, and pieces
    // outside the core coincide exactly.
    let meets = |lo: f64, hi: f64, u: &IntervalUnion| u.intervals().iter().any(|i| lo <= i.hi && i.lo <= hi);
    let a_avoids = pair.a.pieces().iter().all(|p| !meets(p.lo, p.hi, &pair.j2));
    let b_avoids = pair.b.pieces().iter().all(|p| !meets(p.lo, p.hi, &pair.j1));
    let core = pair.support_core();
    let outer = |m: &crate::onedim::PiecewiseGaussianMeasure| -> Vec<_> {
        m.pieces()
            .iter()
            .filter(|p| !meets(p.lo, p.hi, &core))
            .copied()
            .collect()
    };
    let same_outside = outer(&pair.a) == outer(&pair.b) && pair.a.normalizer() == pair.b.normalizer();

    // Pointwise on a uniform grid covering every piece.
    let reach = pair.a.pieces().last().map(|p| p.hi).unwrap_or(1.0) + 1.0;
    let points = (2.0 * reach * DENSITY_GRID_PER_UNIT) as usize;
    let mut a_zero = true;
    let mut b_zero = true;
    let mut equal_off = true;
    for i in 0..=points {
        let x = -reach + 2.0 * reach * i as f64 / points as f64;
        let (da, db) = (pair.a.density(x), pair.b.density(x));
        if pair.j2.contains(x) && da != 0.0 {
            a_zero = false;
        }
        if pair.j1.contains(x) && db != 0.0 {
            b_zero = false;
        }
        if !core.contains(x) && da != db {
            equal_off = false;
        }
    }
    checks.push(Check::flag(
        "construction.a_zero_on_j2",
        a_avoids && a_zero,
        format!("pieces and {points} grid points"),
    ));
    checks.push(Check::flag(
        "construction.b_zero_on_j1",
        b_avoids && b_zero,
        format!("pieces and {points} grid points"),
    ));
    checks.push(Check::flag(
        "construction.equal_off_core",
        same_outside && equal_off,
        "identical pieces and bit-equal densities off J1 ∪ J2",
    ));

    let zeta = pair.config.zeta;
    let limit = (10.0 * zeta.powi(8)).min(zeta);
    for (name, m) in [("construction.tail_a", &pair.a), ("construction.tail_b", &pair.b)] {
        let tail = m.mass_outside(&core) + m.total_mass().tail_bound / m.normalizer();
        checks.push(Check::at_most(name, tail, limit, "mass off J1 ∪ J2 plus truncation bound"));
    }
}

struct MomentOutcome {
    moments: Vec<MomentRow>,
    discrepancies: Vec<DiscrepancyRow>,
    bounds: Vec<BoundRow>,
}

fn moment_checks(pair: &HardPair, k: usize, checks: &mut Vec<Check>) -> Result<MomentOutcome> {
    let report = moment_discrepancy_report(pair, k)?;
    let cfg = pair.config;
    let mut moments = Vec::with_capacity(k + 1);
    let mut worst_rel: f64 = 0.0;
    for t in 0..=k {
        let qa = quadrature_moment(&pair.a, t);
        let qb = quadrature_moment(&pair.b, t);
        for (rec, q) in [(report.moments_a[t], qa), (report.moments_b[t], qb)] {
            let scale = rec.abs().max(gaussian_moment(t + t % 2));
            worst_rel = worst_rel.max((rec - q).abs() / scale);
        }
        moments.push(MomentRow {
            t,
            a: report.moments_a[t],
            b: report.moments_b[t],
            gaussian: report.moments_gaussian[t],
            quadrature_a: qa,
            quadrature_b: qb,
        });
    }
    checks.push(Check::at_most(
        "moments.recurrence_vs_quadrature",
        worst_rel,
        QUADRATURE_REL_TOL,
        format!("worst relative difference over t ≤ {k}"),
    ));

    let mut worst_ab: f64 = f64::NEG_INFINITY;
    let mut triangle = true;
    for t in 0..=k {
        worst_ab = worst_ab.max(report.difference_ab[t] - report.bound_ab[t]);
        if report.discrepancy_b[t] > report.discrepancy_a[t] + report.bound_ab[t] + AB_SLACK {
            triangle = false;
        }
    }
    checks.push(Check::at_most(
        "moments.ab_bound",
        worst_ab,
        AB_SLACK,
        "max over t of |E B^t − E A^t| − 4ε(2+8·sqrt(ln(1/ζ)))^t",
    ));
    checks.push(Check::flag(
        "moments.triangle",
        triangle,
        "discrepancy_B ≤ discrepancy_A + bound_AB for every order",
    ));

    // Fourier certificate: the untruncated periodic measure, and A itself.
    let mut discrepancies = Vec::with_capacity(k + 1);
    let mut bounds = Vec::with_capacity(k + 1);
    let mut worst_lattice = f64::NEG_INFINITY;
    let mut worst_a = f64::NEG_INFINITY;
    for t in 0..=k {
        let fourier = report.fourier_bounds[t];
        let lattice = (t <= FOURIER_MAX_ORDER).then(|| lattice_normalized_discrepancy(t, cfg.delta, cfg.epsilon).value().abs());
        if let Some(l) = lattice {
            worst_lattice = worst_lattice.max(l - fourier);
            let rounding = 1e-13 * gaussian_moment(t + t % 2);
            worst_a = worst_a.max(report.discrepancy_a[t] - fourier - rounding);
        }
        discrepancies.push(DiscrepancyRow {
            t,
            a: report.discrepancy_a[t],
            b: report.discrepancy_b[t],
            ab: report.difference_ab[t],
            lattice,
        });
        bounds.push(BoundRow {
            t,
            ab: report.bound_ab[t],
            fourier,
        });
    }
    checks.push(Check::at_most(
        "fourier.periodic",
        worst_lattice,
        0.0,
        format!("max over t ≤ {FOURIER_MAX_ORDER} of measured minus certified"),
    ));
    checks.push(Check::at_most(
        "fourier.measure_a",
        worst_a,
        0.0,
        "A's discrepancy minus certificate, after rounding allowance",
    ));

    let cert0 = fourier_discrepancy_bound(0, cfg.delta).total;
    let z = pair.normalizer();
    checks.push(Check::flag("normalization.lower", z >= 0.2, format!("Z = {z}")));
    let truncation = cfg.delta / (2.0 * cfg.epsilon) * pair.a.total_mass().tail_bound;
    checks.push(Check::at_most(
        "normalization.certificate",
        (z - 1.0).abs(),
        cert0 + truncation,
        "|Z − 1| against the order-0 certificate plus truncation",
    ));
    Ok(MomentOutcome {
        moments,
        discrepancies,
        bounds,
    })
}

fn chi_square_checks(pair: &HardPair, checks: &mut Vec<Check>) -> ChiSquareSection {
    let ca = chi_square_vs_gaussian(&pair.a);
    let cb = chi_square_vs_gaussian(&pair.b);
    let finite = [ca.closed_form, ca.quadrature, cb.closed_form, cb.quadrature]
        .iter()
        .all(|v| v.is_finite());
    checks.push(Check::flag("chi_square.finite", finite, "all four values finite"));
    let diff = (ca.closed_form - ca.quadrature)
        .abs()
        .max((cb.closed_form - cb.quadrature).abs());
    checks.push(Check::at_most(
        "chi_square.agreement",
        diff,
        CHI_SQUARE_TOL,
        "closed form against quadrature",
    ));
    let ratio = pair.config.delta / pair.config.epsilon;
    ChiSquareSection {
        closed_form: PairValues {
            a: ca.closed_form,
            b: cb.closed_form,
        },
        quadrature: PairValues {
            a: ca.quadrature,
            b: cb.quadrature,
        },
        c: ca.closed_form.max(cb.closed_form) / (ratio * ratio),
    }
}

fn massart_checks(instance: &MassartInstance, config: &VerifyConfig, checks: &mut Vec<Check>) -> Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let samples = sample_labeled(instance, &mut rng, config.samples);
    let mut exact = true;
    let mut noisy = 0usize;
    for s in &samples {
        let f = flip_probability(instance, &s.x)?;
        if f == instance.eta {
            noisy += 1;
        } else if f != 0.0 {
            exact = false;
        }
    }
    checks.push(Check::flag(
        "massart.flip_values",
        exact,
        format!("{} samples, {noisy} in the noisy region", samples.len()),
    ));
    let opt = opt_error(instance);
    checks.push(Check::at_most(
        "massart.opt",
        opt,
        instance.eta * config.zeta,
        "OPT ≤ η·ζ",
    ));
    Ok(())
}

fn tsybakov_checks(pair: &HardPair, config: &VerifyConfig, checks: &mut Vec<Check>) -> Result<()> {
    let params = TsybakovParams::new(config.tsybakov_a, config.tsybakov_alpha)?;
    let eta = tsybakov_to_massart(params, config.zeta)?;
    let back = massart_to_tsybakov_zeta(params, eta);
    checks.push(Check::at_most(
        "tsybakov.round_trip",
        (back - config.zeta).abs(),
        ROUND_TRIP_TOL,
        format!("eta = {eta}"),
    ));
    let instance = make_instance(pair.clone(), unit_axis(config.m), eta)?;
    let grid: Vec<f64> = (1..=100).map(|i| 0.5 * i as f64 / 101.0).collect();
    let check = verify_tsybakov(&instance, params, &grid);
    checks.push(Check::flag(
        "tsybakov.tail",
        check.pass,
        format!("{} grid points in (0, 1/2)", grid.len()),
    ));
    Ok(())
}

fn lift_checks(config: &LiftCheckConfig, seed: u64, checks: &mut Vec<Check>) -> Result<()> {
    let pair = build_hard_pair(HardPairConfig::new(config.zeta, config.d, config.epsilon)?)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let v = crate::instance::random_unit(config.m, &mut rng);
    let instance = make_instance(pair, v, 0.3)?;
    let basis = enumerate_basis(config.m, config.d_max)?;
    let ambient = basis.len() + config.padding;
    let weights = halfspace_from_ptf(&instance.v, &instance.j2_polynomial, &basis, ambient)?;
    checks.push(Check::flag(
        "lift.padding_zero",
        weights.padding_is_zero(),
        format!("M' = {}, M = {ambient}", basis.len()),
    ));
    let samples = sample_labeled(&instance, &mut rng, config.samples);
    let report = check_consistency(&instance, &weights, &samples)?;
    checks.push(Check {
        name: "lift.consistency".into(),
        pass: report.fraction == 1.0,
        value: report.fraction,
        limit: 1.0,
        detail: format!(
            "{} samples, {} excluded near endpoints",
            report.total, report.excluded
        ),
    });
    Ok(())
}

/// Runs every check. Configuration errors are returned; failed checks are
/// reported with `pass = false`.
pub fn run_verification(config: &VerifyConfig) -> Result<VerificationReport> {
    let pair_config = HardPairConfig::new(config.zeta, config.d, config.epsilon)?;
    crate::instance::check_eta(config.eta)?;
    if config.k > crate::moments::K_MAX {
        return Err(crate::Error::MomentOrderTooLarge {
            t: config.k,
            max: crate::moments::K_MAX,
        });
    }
    let pair = build_hard_pair(pair_config)?;
    let mut checks = Vec::new();
    construction_checks(&pair, &mut checks);
    let moments = moment_checks(&pair, config.k, &mut checks)?;
    let chi_square = chi_square_checks(&pair, &mut checks);
    let instance = make_instance(pair.clone(), unit_axis(config.m), config.eta)?;
    massart_checks(&instance, config, &mut checks)?;
    tsybakov_checks(&pair, config, &mut checks)?;
    lift_checks(&config.lift, config.seed, &mut checks)?;
    let pass = checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        config: ReportConfig {
            zeta: pair_config.zeta,
            d: pair_config.d,
            delta: pair_config.delta,
            epsilon: pair_config.epsilon,
            n_max: pair_config.n_max,
            normalizer: pair.normalizer(),
            request: config.clone(),
        },
        moments: moments.moments,
        discrepancies: moments.discrepancies,
        bounds: moments.bounds,
        chi_square,
        checks,
        pass,
    })
}
