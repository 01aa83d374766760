//! The labelled distribution `D_v^{A,B,p}` in `R^m`.
//!
//! Along the hidden unit direction `v` the projection is drawn from `A`
//! (label +1, probability `p = 1 − η`) or from `B` (label −1); the
//! orthogonal complement is standard Gaussian. The target is the PTF that
//! is −1 exactly on `J2`.

use crate::error::{Error, Result};
use crate::format::sig17;
use crate::onedim::{HardPair, Interval, IntervalUnion};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// Tolerance on `‖v‖ − 1`.
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: i8,
}

/// Householder reflection `H` with `H·e_1 = s·v`, `s = ±1`. Its remaining
/// columns form an orthonormal basis of `v^⊥`.
#[derive(Debug, Clone, PartialEq)]
struct Householder {
    u: Vec<f64>,
    uu: f64,
    sign: f64,
}

impl Householder {
    fn new(v: &[f64]) -> Self {
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut u = v.to_vec();
        u[0] += sign;
        let uu = u.iter().map(|a| a * a).sum();
        // H v = −sign·e_1, hence H e_1 = −sign·v
        Self { u, uu, sign: -sign }
    }

    /// `x = H z`
    fn apply(&self, z: &mut [f64]) {
        let dot: f64 = self.u.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
        let f = 2.0 * dot / self.uu;
        for (zi, ui) in z.iter_mut().zip(&self.u) {
            *zi -= f * ui;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassartInstance {
    pub m: usize,
    pub v: Vec<f64>,
    pub eta: f64,
    pub p: f64,
    pub pair: HardPair,
    /// ascending coefficients of `q(t) = Π (t − a_i)(t − b_i)` over `J2`
    pub j2_polynomial: Vec<f64>,
    core: IntervalUnion,
    reflector: Householder,
}

pub fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 0.5 {
        Ok(())
    } else {
        Err(Error::EtaOutOfRange(eta))
    }
}

pub fn make_instance(pair: HardPair, v: Vec<f64>, eta: f64) -> Result<MassartInstance> {
    check_eta(eta)?;
    if v.is_empty() {
        return Err(Error::InvalidParameter("direction must be non-empty".into()));
    }
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() <= UNIT_TOL) {
        return Err(Error::NonUnitDirection(norm));
    }
    let j2_polynomial = build_interval_polynomial(pair.j2.intervals())?;
    let core = pair.support_core();
    let reflector = Householder::new(&v);
    Ok(MassartInstance {
        m: v.len(),
        eta,
        p: 1.0 - eta,
        j2_polynomial,
        core,
        reflector,
        v,
        pair,
    })
}

/// `e_1` in `R^m`.
pub fn unit_axis(m: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[0] = 1.0;
    v
}

/// Uniformly random unit vector.
pub fn random_unit<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let n = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 0.0 {
            return g.into_iter().map(|a| a / n).collect();
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl MassartInstance {
    pub fn projection(&self, x: &[f64]) -> f64 {
        dot(&self.v, x)
    }

    /// Point with projection `t` on `v` and complement coordinates `rest`
    /// (length `m − 1`) in the orthonormal completion of `v`.
    pub fn embed(&self, t: f64, rest: &[f64]) -> Vec<f64> {
        debug_assert_eq!(rest.len() + 1, self.m);
        let mut z = Vec::with_capacity(self.m);
        z.push(self.reflector.sign * t);
        z.extend_from_slice(rest);
        self.reflector.apply(&mut z);
        z
    }

    /// `J1 ∪ J2`.
    pub fn core(&self) -> &IntervalUnion {
        &self.core
    }

    /// Marginal mass where `η(x) = η`, i.e. with projection off `J1 ∪ J2`.
    pub fn noisy_mass(&self) -> f64 {
        self.p * self.pair.a.mass_outside(&self.core) + self.eta * self.pair.b.mass_outside(&self.core)
    }
}

pub fn sample_labeled<R: Rng + ?Sized>(instance: &MassartInstance, rng: &mut R, n: usize) -> Vec<LabeledSample> {
    let mut rest = vec![0.0; instance.m - 1];
    (0..n)
        .map(|_| {
            let plus = rng.random::<f64>() < instance.p;
            let t = if plus {
                instance.pair.a.sample(rng)
            } else {
                instance.pair.b.sample(rng)
            };
            for r in rest.iter_mut() {
                *r = rng.sample(StandardNormal);
            }
            LabeledSample {
                x: instance.embed(t, &rest),
                y: if plus { 1 } else { -1 },
            }
        })
        .collect()
}

/// `P[y ≠ g_v(x) | x]`. Takes values in `{0, η}` exactly: on `J1` and `J2`
/// the minority label has zero density, and off them `A(t) = B(t)`, where
/// `η·B/(p·A + η·B)` reduces to `η` and is returned as such.
pub fn flip_probability(instance: &MassartInstance, x: &[f64]) -> Result<f64> {
    let t = instance.projection(x);
    flip_probability_at(instance, t)
}

pub fn flip_probability_at(instance: &MassartInstance, t: f64) -> Result<f64> {
    let a = instance.pair.a.density(t);
    let b = instance.pair.b.density(t);
    let plus = instance.p * a;
    let minus = instance.eta * b;
    let marginal = plus + minus;
    if !(marginal > 0.0) {
        return Err(Error::ZeroMarginalDensity(t));
    }
    let target_plus = !instance.pair.j2.contains(t);
    if a == b {
        return Ok(if target_plus { instance.eta } else { instance.p });
    }
    let disagree = if target_plus { minus } else { plus };
    Ok(disagree / marginal)
}

/// `OPT = η · P[⟨v,x⟩ ∉ J1 ∪ J2]`.
pub fn opt_error(instance: &MassartInstance) -> f64 {
    instance.eta * instance.noisy_mass()
}

/// Ascending coefficients of `Π (t − a_i)(t − b_i)`; negative exactly on
/// the interval interiors.
pub fn build_interval_polynomial(intervals: &[Interval]) -> Result<Vec<f64>> {
    if intervals.is_empty() {
        return Err(Error::EmptyIntervals);
    }
    IntervalUnion::new(intervals.to_vec())?;
    let mut c = vec![1.0];
    for iv in intervals {
        for root in [iv.lo, iv.hi] {
            // multiply by (t − root)
            let mut next = vec![0.0; c.len() + 1];
            for (j, cj) in c.iter().enumerate() {
                next[j + 1] += cj;
                next[j] -= root * cj;
            }
            c = next;
        }
    }
    Ok(c)
}

/// Horner evaluation with an error-free-transformation correction term,
/// as accurate as plain Horner in doubled precision.
pub fn eval_polynomial(coeffs: &[f64], t: f64) -> f64 {
    let mut s = match coeffs.last() {
        Some(&c) => c,
        None => return 0.0,
    };
    let mut err = 0.0_f64;
    for &c in coeffs.iter().rev().skip(1) {
        let p = s * t;
        let pe = s.mul_add(t, -p);
        let sum = p + c;
        let z = sum - p;
        let se = (p - (sum - z)) + (c - z);
        s = sum;
        err = err.mul_add(t, pe + se);
    }
    s + err
}

/// −1 iff `t ∈ J2` (closed intervals).
pub fn ptf_sign_at(instance: &MassartInstance, t: f64) -> i8 {
    if instance.pair.j2.contains(t) {
        -1
    } else {
        1
    }
}

pub fn ptf_sign(instance: &MassartInstance, x: &[f64]) -> i8 {
    ptf_sign_at(instance, instance.projection(x))
}

/// Standard Gaussian `x` with labels independent of `x`.
pub fn sample_null<R: Rng + ?Sized>(m: usize, p: f64, rng: &mut R, n: usize) -> Vec<LabeledSample> {
    (0..n)
        .map(|_| {
            let x = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            let y = if rng.random::<f64>() < p { 1 } else { -1 };
            LabeledSample { x, y }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub m: usize,
    pub eta: f64,
    pub zeta: f64,
    pub d: u32,
    pub delta: f64,
    pub epsilon: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub v: Option<Vec<f64>>,
    pub opt: f64,
}

impl DatasetSidecar {
    pub fn new(instance: &MassartInstance, seed: u64, redact: bool) -> Self {
        let cfg = &instance.pair.config;
        Self {
            m: instance.m,
            eta: instance.eta,
            zeta: cfg.zeta,
            d: cfg.d,
            delta: cfg.delta,
            epsilon: cfg.epsilon,
            seed,
            v: (!redact).then(|| instance.v.clone()),
            opt: opt_error(instance),
        }
    }
}

pub fn write_dataset_csv<W: Write>(mut out: W, m: usize, samples: &[LabeledSample]) -> io::Result<()> {
    let header: Vec<String> = (1..=m).map(|i| format!("x_{i}")).chain(["y".to_string()]).collect();
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::new();
    for s in samples {
        line.clear();
        for xi in &s.x {
            line.push_str(&sig17(*xi));
            line.push(',');
        }
        line.push_str(if s.y > 0 { "1" } else { "-1" });
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::onedim::{build_hard_pair, HardPairConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn pair() -> HardPair {
        build_hard_pair(HardPairConfig::new(0.05, 10, 0.05).unwrap()).unwrap()
    }

    #[test]
    fn construction_checks() {
        let inst = make_instance(pair(), unit_axis(5), 0.5).unwrap();
        assert_eq!(inst.p, 0.5);
        assert!(matches!(make_instance(pair(), unit_axis(5), 0.6), Err(Error::EtaOutOfRange(_))));
        assert!(matches!(
            make_instance(pair(), vec![1.0, 1.0], 0.3),
            Err(Error::NonUnitDirection(_))
        ));
        assert_eq!(inst.j2_polynomial.len(), 2 * 21 + 1);
    }

    #[test]
    fn axis_direction_projects_to_first_coordinate() {
        let inst = make_instance(pair(), unit_axis(4), 0.3).unwrap();
        let x = inst.embed(0.7, &[1.0, 2.0, 3.0]);
        assert_eq!(x, vec![0.7, 1.0, 2.0, 3.0]);
        assert_eq!(inst.projection(&x), x[0]);
    }

    #[test]
    fn embedding_is_orthonormal() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let v = random_unit(7, &mut rng);
        let inst = make_instance(pair(), v.clone(), 0.3).unwrap();
        for k in 0..6 {
            let mut rest = vec![0.0; 6];
            rest[k] = 1.0;
            let col = inst.embed(0.0, &rest);
            assert!(dot(&col, &v).abs() < 1e-15);
            assert!((dot(&col, &col) - 1.0).abs() < 1e-15);
        }
        let x = inst.embed(1.25, &[0.0; 6]);
        assert!((inst.projection(&x) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn flip_probability_cases() {
        let inst = make_instance(pair(), unit_axis(3), 0.3).unwrap();
        let delta = inst.pair.config.delta;
        for n in -10..=10 {
            assert_eq!(flip_probability_at(&inst, n as f64 * delta).unwrap(), 0.0);
        }
        for n in [11, -11, 14] {
            assert_eq!(flip_probability_at(&inst, n as f64 * delta).unwrap(), 0.3);
        }
        let j2_mid = -4.0 * inst.pair.config.epsilon;
        assert_eq!(flip_probability_at(&inst, j2_mid).unwrap(), 0.0);
        assert!(matches!(
            flip_probability_at(&inst, delta / 2.0),
            Err(Error::ZeroMarginalDensity(_))
        ));
    }

    #[test]
    fn opt_bounds() {
        let inst = make_instance(pair(), unit_axis(3), 0.3).unwrap();
        let opt = opt_error(&inst);
        assert!(opt > 0.0 && opt <= 0.3 * 0.05);
        let tiny = make_instance(pair(), unit_axis(3), 1e-9).unwrap();
        assert!(opt_error(&tiny) < 1e-9);
    }

    #[test]
    fn interval_polynomial_examples() {
        let q = build_interval_polynomial(&[Interval::new(-1.0, 1.0)]).unwrap();
        assert_eq!(q, vec![-1.0, 0.0, 1.0]);
        let q = build_interval_polynomial(&[Interval::new(0.0, 1.0), Interval::new(2.0, 3.0)]).unwrap();
        assert!(eval_polynomial(&q, 1.5) > 0.0);
        assert!(eval_polynomial(&q, 0.5) < 0.0);
        assert!(eval_polynomial(&q, 2.5) < 0.0);
        for r in [0.0, 1.0, 2.0, 3.0] {
            assert_eq!(eval_polynomial(&q, r), 0.0);
        }
        assert!(matches!(
            build_interval_polynomial(&[Interval::new(0.0, 2.0), Interval::new(1.0, 3.0)]),
            Err(Error::OverlappingIntervals(_))
        ));
        assert!(matches!(build_interval_polynomial(&[]), Err(Error::EmptyIntervals)));
    }

    #[test]
    fn compensated_horner_beats_cancellation() {
        // (t − 1)^10 expanded, evaluated next to its root
        let mut c = vec![1.0];
        for _ in 0..10 {
            let mut next = vec![0.0; c.len() + 1];
            for (j, cj) in c.iter().enumerate() {
                next[j + 1] += cj;
                next[j] -= cj;
            }
            c = next;
        }
        let t = 1.01;
        let exact = 0.01f64.powi(10);
        assert!((eval_polynomial(&c, t) - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn ptf_sign_membership() {
        let inst = make_instance(pair(), unit_axis(2), 0.3).unwrap();
        let eps = inst.pair.config.epsilon;
        assert_eq!(ptf_sign_at(&inst, -4.0 * eps), -1);
        assert_eq!(ptf_sign_at(&inst, -5.0 * eps), -1);
        assert_eq!(ptf_sign_at(&inst, 0.0), 1);
    }

    #[test]
    fn null_and_labeled_sampling_shapes() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let inst = make_instance(pair(), random_unit(6, &mut rng), 0.3).unwrap();
        let s = sample_labeled(&inst, &mut rng, 500);
        assert!(s.iter().all(|z| z.x.len() == 6));
        for z in s.iter().filter(|z| z.y == 1) {
            assert!(!inst.pair.j2.contains(inst.projection(&z.x)));
        }
        let null = sample_null(6, 0.9, &mut rng, 500);
        assert!(null.iter().filter(|z| z.y == 1).count() > 400);
    }

    #[test]
    fn csv_and_sidecar() {
        let inst = make_instance(pair(), unit_axis(2), 0.3).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let s = sample_labeled(&inst, &mut rng, 3);
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, 2, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x_1,x_2,y\n"));
        assert_eq!(text.lines().count(), 4);
        let red = serde_json::to_value(DatasetSidecar::new(&inst, 1, true)).unwrap();
        assert!(red.get("v").is_none());
        let full = serde_json::to_value(DatasetSidecar::new(&inst, 1, false)).unwrap();
        assert_eq!(full["v"].as_array().unwrap().len(), 2);
    }
}
