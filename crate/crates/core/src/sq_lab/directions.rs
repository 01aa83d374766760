//! Random unit vectors with small pairwise overlaps.

use crate::error::{Error, Result};
use crate::instance::{dot, random_unit};
use rand::Rng;

/// Per-pair probability that two uniform unit vectors in `R^m` overlap by
/// more than `c`: `2·exp(−c²m/4) + 2·exp(−m/32)`.
pub fn pair_failure_bound(m: usize, c: f64) -> f64 {
    let m = m as f64;
    2.0 * (-c * c * m / 4.0).exp() + 2.0 * (-m / 32.0).exp()
}

/// Set size `exp(c²m/64)` below which a random set is near-orthogonal with
/// good probability. Reported, not enforced.
pub fn size_guard(m: usize, c: f64) -> f64 {
    (c * c * m as f64 / 64.0).exp()
}

/// Draws needed by sequential rejection if every pair fails with the bound's
/// probability: one draw per vector plus the expected number of rejections.
pub fn implied_try_budget(m: usize, c: f64, target_size: usize) -> usize {
    let n = target_size as f64;
    let pairs = n * (n - 1.0) / 2.0;
    target_size + (pairs * pair_failure_bound(m, c).min(1.0)).ceil() as usize
}

/// Largest `|⟨u, v⟩|` over distinct pairs.
pub fn max_overlap(set: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..set.len() {
        for j in 0..i {
            worst = worst.max(dot(&set[i], &set[j]).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    pub vectors: Vec<Vec<f64>>,
    pub tries: usize,
    pub max_overlap: f64,
}

/// Draws uniform unit vectors and keeps each one whose overlap with every
/// kept vector is at most `c`, until `target_size` are kept or `max_tries`
/// candidates have been drawn.
pub fn near_orthogonal_set<R: Rng + ?Sized>(
    m: usize,
    c: f64,
    target_size: usize,
    max_tries: usize,
    rng: &mut R,
) -> Result<DirectionSet> {
    if m == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidParameter(format!("overlap bound must lie in (0, 1], got {c}")));
    }
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(target_size);
    let mut tries = 0;
    while kept.len() < target_size {
        if tries == max_tries {
            return Err(Error::DirectionsExhausted {
                tries,
                accepted: kept.len(),
                target: target_size,
                pair_bound: pair_failure_bound(m, c),
            });
        }
        tries += 1;
        let u = random_unit(m, rng);
        if kept.iter().all(|w| dot(&u, w).abs() <= c) {
            kept.push(u);
        }
    }
    let max_overlap = max_overlap(&kept);
    Ok(DirectionSet {
        vectors: kept,
        tries,
        max_overlap,
    })
}
