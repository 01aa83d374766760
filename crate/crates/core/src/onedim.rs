//! One-dimensional hard pair.
//!
//! `A` keeps the Gaussian density on the periodic cells `[nδ−ε, nδ+ε]`,
//! rescaled by `δ/(2ε)`. `B` agrees with `A` away from the origin and, for
//! `|n| ≤ d`, moves each cell `4ε` to the left, carrying the density of the
//! original cell with it. Both are normalised by the same constant `Z`.

use crate::error::{Error, Result};
use crate::format::sig17;
use crate::gaussian;
use crate::numeric::compensated_sum;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// Shift carried by the rearranged cells of `B`, in units of ε.
pub const SHIFT_UNITS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardPairConfig {
    pub zeta: f64,
    pub d: u32,
    pub delta: f64,
    pub epsilon: f64,
    pub n_max: u32,
}

impl HardPairConfig {
    /// Config with the derived period and the default truncation.
    pub fn new(zeta: f64, d: u32, epsilon: f64) -> Result<Self> {
        let delta = Self::delta_for(zeta, d);
        let n_max = if delta.is_finite() && delta > 0.0 {
            Self::default_n_max(delta)
        } else {
            0
        };
        Self::with_n_max(zeta, d, epsilon, n_max)
    }

    pub fn with_n_max(zeta: f64, d: u32, epsilon: f64, n_max: u32) -> Result<Self> {
        let cfg = Self {
            zeta,
            d,
            delta: Self::delta_for(zeta, d),
            epsilon,
            n_max,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `4·sqrt(ln(1/ζ))/d`.
    pub fn delta_for(zeta: f64, d: u32) -> f64 {
        4.0 * (1.0 / zeta).ln().sqrt() / d as f64
    }

    /// `ceil(12/δ)` periods on each side.
    pub fn default_n_max(delta: f64) -> u32 {
        (12.0 / delta).ceil() as u32
    }

    /// Largest admissible half-width (exclusive).
    pub fn epsilon_limit(&self) -> f64 {
        self.delta / 8.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta < 0.5) {
            return Err(Error::ZetaOutOfRange(self.zeta));
        }
        if self.d < 2 {
            return Err(Error::DegreeTooSmall(self.d));
        }
        let expected = Self::delta_for(self.zeta, self.d);
        if self.delta != expected {
            return Err(Error::InvalidParameter(format!(
                "delta must equal 4*sqrt(ln(1/zeta))/d = {expected}, got {}",
                self.delta
            )));
        }
        if !(self.delta < 1.0) {
            return Err(Error::DeltaNotBelowOne(self.delta));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::EpsilonNotPositive(self.epsilon));
        }
        if !(self.epsilon < self.epsilon_limit()) {
            return Err(Error::EpsilonTooLarge {
                epsilon: self.epsilon,
                limit: self.epsilon_limit(),
            });
        }
        let reach = self.n_max as f64 * self.delta;
        if !(reach >= 10.0) {
            return Err(Error::TruncationTooShort {
                n_max: self.n_max,
                reach,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Sorted, pairwise disjoint union of closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    intervals: Vec<Interval>,
}

impl IntervalUnion {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        for iv in &intervals {
            if !(iv.lo <= iv.hi) {
                return Err(Error::InvalidParameter(format!(
                    "interval [{}, {}] is empty or NaN",
                    iv.lo, iv.hi
                )));
            }
        }
        for w in intervals.windows(2) {
            if !(w[0].hi < w[1].lo) {
                return Err(Error::OverlappingIntervals(w[1].lo));
            }
        }
        Ok(Self { intervals })
    }

    pub fn empty() -> Self {
        Self { intervals: vec![] }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Closed membership; a shared endpoint would resolve to the earlier
    /// interval, but disjointness rules that out.
    pub fn contains(&self, x: f64) -> bool {
        self.locate(x).is_some()
    }

    /// Index of the interval containing `x`.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let i = self.intervals.partition_point(|iv| iv.hi < x);
        (i < self.intervals.len() && self.intervals[i].lo <= x).then_some(i)
    }

    /// Distance from `x` to the nearest endpoint.
    pub fn endpoint_distance(&self, x: f64) -> f64 {
        if self.intervals.is_empty() {
            return f64::INFINITY;
        }
        let i = self.intervals.partition_point(|iv| iv.hi < x);
        let mut best = f64::INFINITY;
        for j in [i.wrapping_sub(1), i] {
            if let Some(iv) = self.intervals.get(j) {
                best = best.min((x - iv.lo).abs()).min((x - iv.hi).abs());
            }
        }
        best
    }

    /// Union of two disjoint unions; fails if they touch.
    pub fn union(&self, other: &IntervalUnion) -> Result<IntervalUnion> {
        let mut all: Vec<Interval> = self
            .intervals
            .iter()
            .chain(other.intervals.iter())
            .copied()
            .collect();
        all.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        IntervalUnion::new(all)
    }

    /// Closure of the complement; unbounded ends use infinite endpoints.
    pub fn complement(&self) -> IntervalUnion {
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        let mut cursor = f64::NEG_INFINITY;
        for iv in &self.intervals {
            if cursor < iv.lo {
                out.push(Interval::new(cursor, iv.lo));
            }
            cursor = iv.hi;
        }
        if cursor < f64::INFINITY {
            out.push(Interval::new(cursor, f64::INFINITY));
        }
        // endpoints are shared with `self`, so skip the strict check in new()
        IntervalUnion { intervals: out }
    }
}

/// One piece of a piecewise-Gaussian density: `scale·G(x + shift)` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub scale: f64,
    pub shift: f64,
}

impl Piece {
    /// Unnormalised mass of the piece.
    pub fn mass(&self) -> f64 {
        self.mass_between(self.lo, self.hi)
    }

    /// Unnormalised mass of the piece restricted to `[a, b]`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let lo = a.max(self.lo);
        let hi = b.min(self.hi);
        if lo >= hi {
            return 0.0;
        }
        self.scale * gaussian::interval_mass(lo + self.shift, hi + self.shift)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalMass {
    pub value: f64,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseGaussianMeasure {
    pieces: Vec<Piece>,
    normalizer: f64,
    tail_bound: f64,
    /// cumulative unnormalised piece masses, for sampling
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl PiecewiseGaussianMeasure {
    /// Pieces must be sorted and disjoint. `normalizer` is the constant the
    /// density is divided by; `tail_bound` bounds the mass dropped by
    /// truncation.
    pub fn new(pieces: Vec<Piece>, normalizer: f64, tail_bound: f64) -> Result<Self> {
        for w in pieces.windows(2) {
            if !(w[0].hi < w[1].lo) {
                return Err(Error::OverlappingIntervals(w[1].lo));
            }
        }
        if pieces.iter().any(|p| !(p.scale >= 0.0) || !(p.lo <= p.hi)) {
            return Err(Error::InvalidParameter("malformed piece".into()));
        }
        if !(normalizer > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "normalizer must be positive, got {normalizer}"
            )));
        }
        let mut acc = 0.0;
        let cumulative = pieces
            .iter()
            .map(|p| {
                acc += p.mass();
                acc
            })
            .collect();
        Ok(Self {
            pieces,
            normalizer,
            tail_bound,
            cumulative,
        })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn piece_at(&self, x: f64) -> Option<&Piece> {
        let i = self.pieces.partition_point(|p| p.hi < x);
        self.pieces.get(i).filter(|p| p.lo <= x)
    }

    /// Normalised density.
    pub fn density(&self, x: f64) -> f64 {
        match self.piece_at(x) {
            Some(p) => p.scale * gaussian::pdf(x + p.shift) / self.normalizer,
            None => 0.0,
        }
    }

    /// Unnormalised retained mass and a bound on the truncated remainder.
    pub fn total_mass(&self) -> TotalMass {
        TotalMass {
            value: compensated_sum(self.pieces.iter().map(Piece::mass)),
            tail_bound: self.tail_bound,
        }
    }

    /// Normalised mass inside `region`.
    pub fn mass_in(&self, region: &IntervalUnion) -> f64 {
        let mut terms = Vec::new();
        for iv in region.intervals() {
            let start = self.pieces.partition_point(|p| p.hi < iv.lo);
            for p in self.pieces[start..].iter().take_while(|p| p.lo <= iv.hi) {
                terms.push(p.mass_between(iv.lo, iv.hi));
            }
        }
        compensated_sum(terms) / self.normalizer
    }

    /// Normalised mass outside `region`, summed directly over the complement
    /// so that tiny remainders are not lost to cancellation.
    pub fn mass_outside(&self, region: &IntervalUnion) -> f64 {
        self.mass_in(&region.complement())
    }

    /// Exact draw: pick a piece by mass, then invert the truncated CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cumulative.last().expect("measure has pieces");
        let target = rng.random::<f64>() * total;
        let i = self
            .cumulative
            .partition_point(|&c| c <= target)
            .min(self.pieces.len() - 1);
        let p = &self.pieces[i];
        let u: f64 = rng.random();
        let z = gaussian::sample_truncated(p.lo + p.shift, p.hi + p.shift, u);
        (z - p.shift).clamp(p.lo, p.hi)
    }

    /// CDF of the normalised retained measure.
    pub fn cdf(&self, x: f64) -> f64 {
        let region = IntervalUnion {
            intervals: vec![Interval::new(f64::NEG_INFINITY, x)],
        };
        self.mass_in(&region)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardPair {
    pub config: HardPairConfig,
    pub a: PiecewiseGaussianMeasure,
    pub b: PiecewiseGaussianMeasure,
    pub j1: IntervalUnion,
    pub j2: IntervalUnion,
}

impl HardPair {
    /// `J1 ∪ J2`.
    pub fn support_core(&self) -> IntervalUnion {
        self.j1.union(&self.j2).expect("J1 and J2 are disjoint")
    }

    /// The truncated periodic Gaussian `G_{δ,ε}` before normalisation,
    /// i.e. `A` with normaliser 1.
    pub fn unnormalized_total(&self) -> TotalMass {
        self.a.total_mass()
    }

    pub fn normalizer(&self) -> f64 {
        self.a.normalizer()
    }
}

fn cell(n: i64, delta: f64, lo_off: f64, hi_off: f64) -> Interval {
    let c = n as f64 * delta;
    Interval::new(c + lo_off, c + hi_off)
}

pub fn build_hard_pair(config: HardPairConfig) -> Result<HardPair> {
    config.validate()?;
    let HardPairConfig {
        d,
        delta,
        epsilon: eps,
        n_max,
        ..
    } = config;
    let (d, n_max) = (d as i64, n_max as i64);
    let scale = delta / (2.0 * eps);
    let h = SHIFT_UNITS * eps;

    let mut a_pieces = Vec::with_capacity(2 * n_max as usize + 1);
    let mut b_pieces = Vec::with_capacity(2 * n_max as usize + 1);
    let mut j1 = Vec::with_capacity(2 * d as usize + 1);
    let mut j2 = Vec::with_capacity(2 * d as usize + 1);
    for n in -n_max..=n_max {
        let home = cell(n, delta, -eps, eps);
        a_pieces.push(Piece {
            lo: home.lo,
            hi: home.hi,
            scale,
            shift: 0.0,
        });
        if n.abs() <= d {
            let moved = cell(n, delta, -5.0 * eps, -3.0 * eps);
            b_pieces.push(Piece {
                lo: moved.lo,
                hi: moved.hi,
                scale,
                shift: h,
            });
            j1.push(home);
            j2.push(moved);
        } else {
            b_pieces.push(a_pieces[a_pieces.len() - 1]);
        }
    }

    let z = compensated_sum(a_pieces.iter().map(Piece::mass));
    let reach = n_max as f64 * delta - eps;
    let tail_bound = 2.0 * gaussian::sf(reach);

    let a = PiecewiseGaussianMeasure::new(a_pieces, z, tail_bound)?;
    let b = PiecewiseGaussianMeasure::new(b_pieces, z, tail_bound)?;
    let j1 = IntervalUnion::new(j1)?;
    let j2 = IntervalUnion::new(j2)?;
    Ok(HardPair {
        config,
        a,
        b,
        j1,
        j2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRow {
    pub x: f64,
    pub density_a: f64,
    pub density_b: f64,
    pub in_j1: bool,
    pub in_j2: bool,
}

/// Densities on a uniform grid of `points` points over `[lo, hi]`.
pub fn density_curve(pair: &HardPair, lo: f64, hi: f64, points: usize) -> Vec<DensityRow> {
    let step = if points > 1 {
        (hi - lo) / (points - 1) as f64
    } else {
        0.0
    };
    (0..points)
        .map(|i| {
            let x = if i + 1 == points && points > 1 {
                hi
            } else {
                lo + i as f64 * step
            };
            DensityRow {
                x,
                density_a: pair.a.density(x),
                density_b: pair.b.density(x),
                in_j1: pair.j1.contains(x),
                in_j2: pair.j2.contains(x),
            }
        })
        .collect()
}

/// Default plotting window `[−dδ−1, dδ+1]`.
pub fn default_density_window(config: &HardPairConfig) -> (f64, f64) {
    let r = config.d as f64 * config.delta + 1.0;
    (-r, r)
}

pub fn write_density_csv<W: Write>(mut out: W, rows: &[DensityRow]) -> io::Result<()> {
    writeln!(out, "x,density_A,density_B,in_J1,in_J2")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            sig17(r.x),
            sig17(r.density_a),
            sig17(r.density_b),
            r.in_j1 as u8,
            r.in_j2 as u8
        )?;
    }
    Ok(())
}
