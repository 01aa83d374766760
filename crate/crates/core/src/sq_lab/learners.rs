//! Baseline learners that see the data only through an [`Oracle`].

use super::oracle::Oracle;
use super::query::SQQuery;
use crate::error::{Error, Result};
use crate::instance::LabeledSample;
use crate::lift::enumerate_basis;
use rand::Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;

/// Unlabelled Gaussian draws used to place threshold candidates.
const QUANTILE_SAMPLES: usize = 20_000;

/// Sparse monomial `Π x_i^{k_i}` stored as `(i, k_i)` pairs.
pub type Monomial = Vec<(usize, u8)>;

#[derive(Debug, Clone, PartialEq)]
pub enum Hypothesis {
    Constant(i8),
    Threshold {
        monomials: Arc<Vec<Monomial>>,
        coefficients: Vec<f64>,
        threshold: f64,
    },
}

/// `clamp(x^α / 4^{|α|}, −1, 1)`.
pub fn feature(mono: &[(usize, u8)], x: &[f64]) -> f64 {
    let mut v = 1.0;
    for &(i, k) in mono {
        v *= (x[i] / 4.0).powi(k as i32);
    }
    v.clamp(-1.0, 1.0)
}

fn score(monomials: &[Monomial], coefficients: &[f64], x: &[f64]) -> f64 {
    monomials
        .iter()
        .zip(coefficients)
        .map(|(m, c)| c * feature(m, x))
        .sum()
}

fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

impl Hypothesis {
    pub fn predict(&self, x: &[f64]) -> i8 {
        match self {
            Hypothesis::Constant(s) => *s,
            Hypothesis::Threshold {
                monomials,
                coefficients,
                threshold,
            } => sign(score(monomials, coefficients, x) - threshold),
        }
    }

    /// Fraction of samples with `predict(x) ≠ y`.
    pub fn error_on(&self, samples: &[LabeledSample]) -> f64 {
        if samples.is_empty() {
            return 0.0;
        }
        let wrong = samples.iter().filter(|s| self.predict(&s.x) != s.y).count();
        wrong as f64 / samples.len() as f64
    }

    pub fn describe(&self) -> String {
        match self {
            Hypothesis::Constant(s) => format!("constant {s:+}"),
            Hypothesis::Threshold {
                monomials, threshold, ..
            } => format!("threshold over {} monomials at {threshold:.6}", monomials.len()),
        }
    }
}

/// One query for `E[y]`; returns the constant with that sign.
pub fn learner_constant(oracle: &mut Oracle<'_>) -> Result<Hypothesis> {
    let ey = oracle.answer(&SQQuery::label())?;
    Ok(Hypothesis::Constant(sign(ey)))
}

fn nonconstant_monomials(m: usize, degree: u32) -> Result<Vec<Monomial>> {
    let basis = enumerate_basis(m, degree)?;
    Ok(basis
        .iter()
        .skip(1)
        .map(|e| {
            e.iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| (i, k))
                .collect()
        })
        .collect())
}

/// Chow-parameter learner.
///
/// Estimates `ĉ_α = E[y·φ_α(x)]` for every nonconstant monomial of degree at
/// most `degree`, forms `f = Σ ĉ_α φ_α`, and picks a threshold among the
/// Gaussian quantiles of `f` (plus the two constants) by querying the
/// correlation `E[y·sign(f − θ)]` of each candidate.
pub fn learner_chow<R: Rng + ?Sized>(oracle: &mut Oracle<'_>, degree: u32, rng: &mut R) -> Result<Hypothesis> {
    if degree == 0 {
        return learner_constant(oracle);
    }
    let m = oracle.dim();
    let monomials = Arc::new(nonconstant_monomials(m, degree)?);
    let queries: Vec<SQQuery> = monomials
        .iter()
        .map(|mono| {
            let mono = mono.clone();
            SQQuery::new(format!("y*phi{mono:?}"), move |x, y| y as f64 * feature(&mono, x))
        })
        .collect();
    let coefficients = oracle.answer_batch(&queries)?;

    let mut scores: Vec<f64> = (0..QUANTILE_SAMPLES)
        .map(|_| {
            let x: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            score(&monomials, &coefficients, &x)
        })
        .collect();
    scores.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = (1..20)
        .map(|i| scores[(i * QUANTILE_SAMPLES) / 20])
        .collect();
    thresholds.dedup();

    let mut candidates: Vec<SQQuery> = thresholds
        .iter()
        .map(|&theta| {
            let monos = Arc::clone(&monomials);
            let coef = coefficients.clone();
            SQQuery::new(format!("y*sign(f-{theta:.6})"), move |x, y| {
                (y as i32 * sign(score(&monos, &coef, x) - theta) as i32) as f64
            })
        })
        .collect();
    candidates.push(SQQuery::label());
    let answers = oracle.answer_batch(&candidates)?;

    // correlation of the constant −1 is −E[y]
    let ey = answers[thresholds.len()];
    let mut best = (ey.abs(), Hypothesis::Constant(sign(ey)));
    for (&theta, &corr) in thresholds.iter().zip(&answers) {
        if corr > best.0 {
            best = (
                corr,
                Hypothesis::Threshold {
                    monomials: Arc::clone(&monomials),
                    coefficients: coefficients.clone(),
                    threshold: theta,
                },
            );
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Constant,
    Chow1,
    Chow2,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 3] = [LearnerKind::Constant, LearnerKind::Chow1, LearnerKind::Chow2];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Constant => "constant",
            LearnerKind::Chow1 => "chow1",
            LearnerKind::Chow2 => "chow2",
        }
    }

    pub fn run<R: Rng + ?Sized>(self, oracle: &mut Oracle<'_>, rng: &mut R) -> Result<Hypothesis> {
        match self {
            LearnerKind::Constant => learner_constant(oracle),
            LearnerKind::Chow1 => learner_chow(oracle, 1, rng),
            LearnerKind::Chow2 => learner_chow(oracle, 2, rng),
        }
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(LearnerKind::Constant),
            "chow1" => Ok(LearnerKind::Chow1),
            "chow2" => Ok(LearnerKind::Chow2),
            other => Err(Error::InvalidParameter(format!(
                "unknown learner {other:?}; expected constant, chow1 or chow2"
            ))),
        }
    }
}
