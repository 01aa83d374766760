//! Simulated SQ oracles.
//!
//! Honest mode answers with the empirical mean over `ceil(C/τ²)` fresh
//! samples. For `φ ∈ [−1, 1]` Hoeffding gives a failure probability of
//! `2·exp(−C/2)`, about `6.7e−4` at the default `C = 16`.
//!
//! Adversarial mode estimates the true value densely (4σ ≤ τ/4) and lets an
//! [`Adversary`] move it by at most `3τ/4`, so the answer stays within `τ`
//! of the truth whenever the estimate is within its 4σ band.

use super::query::SQQuery;
use crate::error::{Error, Result};
use crate::instance::{sample_labeled, sample_null, LabeledSample, MassartInstance};
use rand_chacha::ChaCha20Rng;
use std::fmt;
use std::sync::Arc;

pub const DEFAULT_SAMPLE_CONSTANT: f64 = 16.0;

/// Samples per chunk when streaming large batches.
const CHUNK: usize = 50_000;

/// Something the oracle can draw labelled samples from.
pub trait LabeledSource: Send + Sync {
    fn dim(&self) -> usize;
    fn draw(&self, rng: &mut ChaCha20Rng, n: usize) -> Vec<LabeledSample>;
    fn label(&self) -> String;
}

impl LabeledSource for MassartInstance {
    fn dim(&self) -> usize {
        self.m
    }

    fn draw(&self, rng: &mut ChaCha20Rng, n: usize) -> Vec<LabeledSample> {
        sample_labeled(self, rng, n)
    }

    fn label(&self) -> String {
        format!("massart(m={}, eta={})", self.m, self.eta)
    }
}

/// Standard Gaussian `x`, label `+1` with probability `p` independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullDistribution {
    pub m: usize,
    pub p: f64,
}

impl LabeledSource for NullDistribution {
    fn dim(&self) -> usize {
        self.m
    }

    fn draw(&self, rng: &mut ChaCha20Rng, n: usize) -> Vec<LabeledSample> {
        sample_null(self.m, self.p, rng, n)
    }

    fn label(&self) -> String {
        format!("null(m={}, p={})", self.m, self.p)
    }
}

/// Noise-free `y = sign(x_1)` under Gaussian `x`; a plumbing self-test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizableLinear {
    pub m: usize,
}

impl LabeledSource for RealizableLinear {
    fn dim(&self) -> usize {
        self.m
    }

    fn draw(&self, rng: &mut ChaCha20Rng, n: usize) -> Vec<LabeledSample> {
        sample_null(self.m, 0.5, rng, n)
            .into_iter()
            .map(|mut s| {
                s.y = if s.x[0] >= 0.0 { 1 } else { -1 };
                s
            })
            .collect()
    }

    fn label(&self) -> String {
        format!("realizable(m={})", self.m)
    }
}

/// Chooses the perturbation applied to a dense estimate in adversarial mode.
pub trait Adversary: Send + Sync {
    /// Returned perturbation is clamped to `[−budget, budget]` by the oracle.
    fn perturb(&self, query: &SQQuery, estimate: f64, null_value: f64, budget: f64) -> f64;
}

/// Moves the answer as far toward the null distribution's value as allowed.
#[derive(Debug, Clone, Copy, Default)]
pub struct TowardNull;

impl Adversary for TowardNull {
    fn perturb(&self, _query: &SQQuery, estimate: f64, null_value: f64, budget: f64) -> f64 {
        (null_value - estimate).clamp(-budget, budget)
    }
}

#[derive(Clone)]
pub enum OracleMode {
    Honest { sample_constant: f64 },
    Adversarial { adversary: Arc<dyn Adversary>, null: NullDistribution },
}

impl fmt::Debug for OracleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleMode::Honest { sample_constant } => {
                f.debug_struct("Honest").field("sample_constant", sample_constant).finish()
            }
            OracleMode::Adversarial { null, .. } => f.debug_struct("Adversarial").field("null", null).finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub tau: f64,
    pub mode: OracleMode,
    pub query_budget: usize,
}

impl OracleConfig {
    pub fn honest(tau: f64, query_budget: usize) -> Self {
        Self {
            tau,
            mode: OracleMode::Honest {
                sample_constant: DEFAULT_SAMPLE_CONSTANT,
            },
            query_budget,
        }
    }

    pub fn adversarial(tau: f64, query_budget: usize, null: NullDistribution) -> Self {
        Self {
            tau,
            mode: OracleMode::Adversarial {
                adversary: Arc::new(TowardNull),
                null,
            },
            query_budget,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidParameter(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if let OracleMode::Honest { sample_constant } = self.mode {
            if !(sample_constant > 0.0) {
                return Err(Error::InvalidParameter("sample constant must be positive".into()));
            }
        }
        Ok(())
    }

    /// Fresh samples per honest answer, `ceil(C/τ²)`.
    pub fn honest_samples(&self) -> usize {
        let c = match self.mode {
            OracleMode::Honest { sample_constant } => sample_constant,
            OracleMode::Adversarial { .. } => DEFAULT_SAMPLE_CONSTANT,
        };
        (c / (self.tau * self.tau)).ceil() as usize
    }

    /// Samples for a dense estimate with `4σ ≤ τ/4`, i.e. `ceil(256/τ²)`.
    pub fn dense_samples(&self) -> usize {
        (256.0 / (self.tau * self.tau)).ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct QueryRecord {
    pub description: String,
    pub answer: f64,
    /// dense estimate, available in adversarial mode
    pub reference: Option<f64>,
}

/// An oracle bound to one distribution, with its own RNG stream and budget.
pub struct Oracle<'a> {
    config: OracleConfig,
    source: &'a dyn LabeledSource,
    rng: ChaCha20Rng,
    used: usize,
    records: Vec<QueryRecord>,
}

/// Means of each query over `n` fresh samples, streamed in chunks.
pub fn empirical_means(
    source: &dyn LabeledSource,
    rng: &mut ChaCha20Rng,
    queries: &[SQQuery],
    n: usize,
) -> Vec<f64> {
    let mut sums = vec![0.0; queries.len()];
    let mut left = n;
    while left > 0 {
        let k = left.min(CHUNK);
        let batch = source.draw(rng, k);
        for (q, s) in queries.iter().zip(sums.iter_mut()) {
            *s += batch.iter().map(|z| q.eval(&z.x, z.y)).sum::<f64>();
        }
        left -= k;
    }
    sums.into_iter().map(|s| s / n as f64).collect()
}

impl<'a> Oracle<'a> {
    pub fn new(config: OracleConfig, source: &'a dyn LabeledSource, rng: ChaCha20Rng) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            source,
            rng,
            used: 0,
            records: Vec::new(),
        })
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn queries_used(&self) -> usize {
        self.used
    }

    pub fn records(&self) -> &[QueryRecord] {
        &self.records
    }

    pub fn answer(&mut self, query: &SQQuery) -> Result<f64> {
        Ok(self.answer_batch(std::slice::from_ref(query))?[0])
    }

    /// Answers several queries from one fresh sample set. Every query is
    /// charged to the budget; the batch is rejected whole if it does not fit.
    pub fn answer_batch(&mut self, queries: &[SQQuery]) -> Result<Vec<f64>> {
        if self.used + queries.len() > self.config.query_budget {
            return Err(Error::BudgetExhausted(self.config.query_budget));
        }
        self.used += queries.len();
        let (answers, refs): (Vec<f64>, Vec<Option<f64>>) = match &self.config.mode {
            OracleMode::Honest { .. } => {
                let n = self.config.honest_samples();
                let a = empirical_means(self.source, &mut self.rng, queries, n);
                let r = vec![None; a.len()];
                (a, r)
            }
            OracleMode::Adversarial { adversary, null } => {
                let n = self.config.dense_samples();
                let est = empirical_means(self.source, &mut self.rng, queries, n);
                let nulls = empirical_means(null, &mut self.rng, queries, n);
                let budget = 0.75 * self.config.tau;
                let a = queries
                    .iter()
                    .zip(est.iter().zip(&nulls))
                    .map(|(q, (&e, &z))| e + adversary.perturb(q, e, z, budget).clamp(-budget, budget))
                    .collect();
                (a, est.into_iter().map(Some).collect())
            }
        };
        for ((q, a), r) in queries.iter().zip(&answers).zip(refs) {
            self.records.push(QueryRecord {
                description: q.description.clone(),
                answer: *a,
                reference: r,
            });
        }
        Ok(answers)
    }
}
