//! The distinguishing game between a planted Massart instance and its null.

use super::directions::{near_orthogonal_set, pair_failure_bound};
use super::learners::LearnerKind;
use super::oracle::{NullDistribution, Oracle, OracleConfig};
use super::query::SQQuery;
use crate::error::{Error, Result};
use crate::gaussian::interval_mass;
use crate::instance::{dot, make_instance, sample_labeled, MassartInstance};
use crate::moments::{chi_square_vs_gaussian, moment_discrepancy_report};
use crate::numeric::compensated_sum;
use crate::onedim::{build_hard_pair, HardPairConfig, IntervalUnion};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const STREAM_DIRECTIONS: u64 = 0;
const STREAM_PLANTED: u64 = 1;
const STREAM_NULL: u64 = 2;
const STREAM_HELDOUT: u64 = 3;
const STREAM_LEARNER: u64 = 16;

const DIRECTION_TRIES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub zeta: f64,
    pub d: u32,
    pub epsilon: f64,
    pub eta: f64,
    pub m: usize,
    pub tau: f64,
    pub seeds: Vec<u64>,
    pub learners: Vec<LearnerKind>,
    /// moment order used for the diagnostics
    pub k: usize,
    /// overlap bound for the test directions
    pub overlap: f64,
    /// test directions besides the planted one
    pub directions: usize,
    pub heldout: usize,
    /// per oracle
    pub query_budget: usize,
    pub adversarial: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            zeta: 0.05,
            d: 10,
            epsilon: 0.05,
            eta: 0.3,
            m: 20,
            tau: 0.01,
            seeds: (0..10).collect(),
            learners: LearnerKind::ALL.to_vec(),
            k: 12,
            overlap: 0.3,
            directions: 20,
            heldout: 100_000,
            query_budget: 1000,
            adversarial: false,
        }
    }
}

impl ExperimentConfig {
    fn oracle_config(&self, p: f64) -> OracleConfig {
        if self.adversarial {
            OracleConfig::adversarial(self.tau, self.query_budget, NullDistribution { m: self.m, p })
        } else {
            OracleConfig::honest(self.tau, self.query_budget)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRecord {
    pub seed: u64,
    pub query: String,
    /// `"planted"` or `"moment"`
    pub kind: String,
    /// overlap of the query direction with the planted one
    pub overlap: f64,
    pub answer_planted: f64,
    pub answer_null: f64,
    pub true_planted: Option<f64>,
    pub true_null: Option<f64>,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnerError {
    pub seed: u64,
    pub learner: String,
    pub hypothesis: String,
    pub error: f64,
    pub queries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentChecks {
    pub planted_gap_min: f64,
    pub planted_gap_above_5tau: bool,
    pub moment_gap_max: f64,
    pub moment_gaps_within_2tau: bool,
    pub learner_error_min: f64,
    pub learners_above_floor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub nu: f64,
    pub rho: f64,
    pub alpha_chi: f64,
    #[serde(rename = "N_bound")]
    pub n_bound: f64,
    pub tau: f64,
    pub queries_used: usize,
    pub gaps: Vec<GapRecord>,
    pub learner_errors: Vec<LearnerError>,
    pub seeds: Vec<u64>,
    pub eta: f64,
    pub m: usize,
    /// overlap parameter `1/(144·ln²(1/ζ))` of the diagnostics
    pub c: f64,
    pub checks: ExperimentChecks,
}

/// Diagnostic quantities computed from the one-dimensional pair alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub nu: f64,
    pub alpha_chi: f64,
    pub c: f64,
    pub rho: f64,
    pub n_bound: f64,
}

/// `ν` is the largest moment discrepancy of either distribution against the
/// Gaussian for orders `1..=k`; `α` the chi-square sum; `ρ = ν² + α·c^k`.
/// `N` uses `sqrt(2/q)` with `q` the per-pair overlap failure bound as the
/// size of a near-orthogonal family; the true constant may differ.
pub fn diagnostics(config: HardPairConfig, m: usize, k: usize) -> Result<Diagnostics> {
    let pair = build_hard_pair(config)?;
    let report = moment_discrepancy_report(&pair, k)?;
    let nu = report
        .discrepancy_a
        .iter()
        .chain(&report.discrepancy_b)
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let alpha_chi = chi_square_vs_gaussian(&pair.a).closed_form + chi_square_vs_gaussian(&pair.b).closed_form;
    let l = (1.0 / config.zeta).ln();
    let c = 1.0 / (144.0 * l * l);
    let rho = nu * nu + alpha_chi * c.powi(k as i32);
    let q = pair_failure_bound(m, c);
    let n_bound = (2.0 / q).sqrt() * rho / alpha_chi;
    Ok(Diagnostics {
        nu,
        alpha_chi,
        c,
        rho,
        n_bound,
    })
}

fn seeded(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `1[⟨v, x⟩ ∈ J1]`.
pub fn planted_query(instance: &MassartInstance) -> SQQuery {
    let v = instance.v.clone();
    let j1 = instance.pair.j1.clone();
    SQQuery::new("1[<v,x> in J1]", move |x, _| if j1.contains(dot(&v, x)) { 1.0 } else { 0.0 })
}

/// `y·clamp((⟨u, x⟩/4)^j)`.
pub fn moment_query(u: &[f64], j: u32, label: &str) -> SQQuery {
    let u = u.to_vec();
    SQQuery::new(format!("y*(<{label},x>/4)^{j}"), move |x, y| {
        y as f64 * (dot(&u, x) / 4.0).powi(j as i32)
    })
}

fn gaussian_mass(region: &IntervalUnion) -> f64 {
    compensated_sum(region.intervals().iter().map(|i| interval_mass(i.lo, i.hi)))
}

struct SeedOutcome {
    gaps: Vec<GapRecord>,
    errors: Vec<LearnerError>,
    queries: usize,
}

fn run_seed(config: &ExperimentConfig, pair_config: HardPairConfig, seed: u64) -> Result<SeedOutcome> {
    let pair = build_hard_pair(pair_config)?;
    let mut rng = seeded(seed, STREAM_DIRECTIONS);
    let set = near_orthogonal_set(config.m, config.overlap, config.directions + 1, DIRECTION_TRIES, &mut rng)?;
    let v = set.vectors[0].clone();
    let instance = make_instance(pair, v, config.eta)?;
    let null = NullDistribution {
        m: config.m,
        p: instance.p,
    };

    let mut battery = vec![planted_query(&instance)];
    let mut overlaps = vec![1.0];
    for (i, u) in set.vectors[1..].iter().enumerate() {
        for j in 0..=2 {
            battery.push(moment_query(u, j, &format!("u{}", i + 1)));
            overlaps.push(dot(u, &instance.v));
        }
    }
    let oc = config.oracle_config(instance.p);
    let mut planted = Oracle::new(oc.clone(), &instance, seeded(seed, STREAM_PLANTED))?;
    let mut against = Oracle::new(oc.clone(), &null, seeded(seed, STREAM_NULL))?;
    let ans_planted = planted.answer_batch(&battery)?;
    let ans_null = against.answer_batch(&battery)?;
    let mut queries = planted.queries_used() + against.queries_used();

    let p = instance.p;
    let planted_true = p * instance.pair.a.mass_in(&instance.pair.j1) + (1.0 - p) * instance.pair.b.mass_in(&instance.pair.j1);
    let mut gaps = Vec::with_capacity(battery.len());
    for (idx, q) in battery.iter().enumerate() {
        let (kind, tp, tn) = if idx == 0 {
            ("planted", Some(planted_true), Some(gaussian_mass(&instance.pair.j1)))
        } else if (idx - 1) % 3 == 0 {
            ("moment", Some(2.0 * p - 1.0), Some(2.0 * p - 1.0))
        } else {
            ("moment", None, None)
        };
        gaps.push(GapRecord {
            seed,
            query: q.description.clone(),
            kind: kind.into(),
            overlap: overlaps[idx],
            answer_planted: ans_planted[idx],
            answer_null: ans_null[idx],
            true_planted: tp,
            true_null: tn,
            gap: ans_planted[idx] - ans_null[idx],
        });
    }

    let heldout = sample_labeled(&instance, &mut seeded(seed, STREAM_HELDOUT), config.heldout);
    let mut errors = Vec::new();
    for (i, kind) in config.learners.iter().enumerate() {
        let stream = STREAM_LEARNER + 2 * i as u64;
        let mut oracle = Oracle::new(oc.clone(), &instance, seeded(seed, stream))?;
        let h = kind.run(&mut oracle, &mut seeded(seed, stream + 1))?;
        queries += oracle.queries_used();
        errors.push(LearnerError {
            seed,
            learner: kind.name().into(),
            hypothesis: h.describe(),
            error: h.error_on(&heldout),
            queries: oracle.queries_used(),
        });
    }
    Ok(SeedOutcome { gaps, errors, queries })
}

/// Runs the battery and the learners for every seed, seeds in parallel.
pub fn distinguishing_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.seeds.is_empty() {
        return Err(Error::InvalidParameter("at least one seed is required".into()));
    }
    if config.k == 0 {
        return Err(Error::InvalidParameter("moment order must be positive".into()));
    }
    let pair_config = HardPairConfig::new(config.zeta, config.d, config.epsilon)?;
    crate::instance::check_eta(config.eta)?;
    config.oracle_config(0.5).validate()?;
    let diag = diagnostics(pair_config, config.m, config.k)?;

    let outcomes: Vec<SeedOutcome> = config
        .seeds
        .par_iter()
        .map(|&s| run_seed(config, pair_config, s))
        .collect::<Result<_>>()?;

    let mut gaps = Vec::new();
    let mut learner_errors = Vec::new();
    let mut queries_used = 0;
    for o in outcomes {
        gaps.extend(o.gaps);
        learner_errors.extend(o.errors);
        queries_used += o.queries;
    }
    let planted_gap_min = gaps
        .iter()
        .filter(|g| g.kind == "planted")
        .map(|g| g.gap)
        .fold(f64::INFINITY, f64::min);
    let moment_gap_max = gaps
        .iter()
        .filter(|g| g.kind == "moment")
        .map(|g| g.gap.abs())
        .fold(0.0, f64::max);
    let learner_error_min = learner_errors.iter().map(|e| e.error).fold(f64::INFINITY, f64::min);
    let checks = ExperimentChecks {
        planted_gap_min,
        planted_gap_above_5tau: planted_gap_min > 5.0 * config.tau,
        moment_gap_max,
        moment_gaps_within_2tau: moment_gap_max <= 2.0 * config.tau,
        learner_error_min,
        learners_above_floor: learner_errors.is_empty() || learner_error_min >= config.eta - 0.02,
    };
    Ok(ExperimentReport {
        nu: diag.nu,
        rho: diag.rho,
        alpha_chi: diag.alpha_chi,
        n_bound: diag.n_bound,
        tau: config.tau,
        queries_used,
        gaps,
        learner_errors,
        seeds: config.seeds.clone(),
        eta: config.eta,
        m: config.m,
        c: diag.c,
        checks,
    })
}
