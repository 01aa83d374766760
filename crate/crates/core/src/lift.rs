//! Veronese lift of the PTF to a halfspace.
//!
//! The basis lists every multi-index `α` with `|α| ≤ D` in graded
//! lexicographic order: by degree, then lexicographically descending, so
//! for `m = 2, D = 2` the order is `1, x1, x2, x1², x1x2, x2²`.
//!
//! Each non-constant monomial records a parent `β` and a variable `i` with
//! `α = β + e_i`, so `V(x)` costs one multiplication per coordinate and
//! multinomial coefficients follow from `mult(α) = mult(β)·|α|/α_i`.

use crate::error::{Error, Result};
use crate::instance::{ptf_sign_at, MassartInstance, LabeledSample, UNIT_TOL};
use crate::numeric::CompensatedSum;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

/// Default cap on the number of basis elements.
pub const DEFAULT_SIZE_CAP: u128 = 20_000_000;

/// Largest supported degree.
pub const MAX_DEGREE: u32 = 255;

/// Endpoint neighbourhood excluded from sign comparisons.
pub const ENDPOINT_EXCLUSION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    m: usize,
    d_max: u32,
    /// flattened exponent vectors, `m` entries per element
    exponents: Vec<u8>,
    /// `(parent index, variable)`; unused for the constant monomial
    parents: Vec<(u32, u32)>,
    /// index of the first element of each degree, plus the total size
    degree_start: Vec<usize>,
}

/// `binom(n, r)` in `u128`, or `None` on overflow.
pub fn binomial_u128(n: u64, r: u64) -> Option<u128> {
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc·(n−i) is divisible by (i+1) after the multiplication
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

pub fn enumerate_basis(m: usize, d_max: u32) -> Result<MonomialBasis> {
    enumerate_basis_capped(m, d_max, DEFAULT_SIZE_CAP)
}

pub fn enumerate_basis_capped(m: usize, d_max: u32, cap: u128) -> Result<MonomialBasis> {
    if m == 0 {
        return Err(Error::InvalidParameter("basis needs at least one variable".into()));
    }
    if d_max > MAX_DEGREE {
        return Err(Error::DegreeOverflow {
            degree: d_max as usize,
            max: MAX_DEGREE as usize,
        });
    }
    let size = binomial_u128(m as u64 + d_max as u64, d_max as u64).unwrap_or(u128::MAX);
    if size > cap {
        return Err(Error::BasisTooLarge { size, cap });
    }
    let size = size as usize;
    let mut exponents = Vec::with_capacity(size * m);
    let mut parents = Vec::with_capacity(size);
    let mut degree_start = vec![0usize];
    // first_var[k]: first variable with a nonzero exponent in element k
    let mut first_var: Vec<usize> = Vec::with_capacity(size);

    exponents.extend(std::iter::repeat_n(0u8, m));
    parents.push((0, 0));
    first_var.push(m);
    degree_start.push(1);

    for j in 1..=d_max as usize {
        let (lo, hi) = (degree_start[j - 1], degree_start[j]);
        for i in 0..m {
            // elements of degree j−1 whose first nonzero variable is ≥ i
            // form a suffix of that degree block
            let from = lo + first_var[lo..hi].partition_point(|&f| f < i);
            for parent in from..hi {
                let base = parent * m;
                for k in 0..m {
                    let e = exponents[base + k] + u8::from(k == i);
                    exponents.push(e);
                }
                parents.push((parent as u32, i as u32));
                first_var.push(i);
            }
        }
        degree_start.push(parents.len());
    }
    debug_assert_eq!(parents.len(), size);
    Ok(MonomialBasis {
        m,
        d_max,
        exponents,
        parents,
        degree_start,
    })
}

impl MonomialBasis {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d_max(&self) -> u32 {
        self.d_max
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn exponent(&self, k: usize) -> &[u8] {
        &self.exponents[k * self.m..(k + 1) * self.m]
    }

    pub fn degree_of(&self, k: usize) -> usize {
        self.degree_start.partition_point(|&s| s <= k) - 1
    }

    /// Index range of the monomials of degree `j`.
    pub fn degree_range(&self, j: usize) -> std::ops::Range<usize> {
        self.degree_start[j]..self.degree_start[j + 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        self.exponents.chunks_exact(self.m)
    }
}

/// `V(x) = (x^α)_α` in basis order.
pub fn veronese(basis: &MonomialBasis, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != basis.m {
        return Err(Error::DimensionMismatch {
            expected: basis.m,
            got: x.len(),
        });
    }
    let mut out = Vec::with_capacity(basis.len());
    out.push(1.0);
    for &(parent, var) in &basis.parents[1..] {
        let v = out[parent as usize] * x[var as usize];
        out.push(v);
    }
    Ok(out)
}

/// Exact multinomial coefficients `|α|!/Π α_i!` in basis order.
pub fn multinomials(basis: &MonomialBasis) -> Vec<BigUint> {
    let mut out: Vec<BigUint> = Vec::with_capacity(basis.len());
    out.push(BigUint::one());
    for k in 1..basis.len() {
        let (parent, var) = basis.parents[k];
        let degree = basis.degree_of(k) as u32;
        let alpha_i = basis.exponent(k)[var as usize] as u32;
        let v = &out[parent as usize] * degree / alpha_i;
        out.push(v);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceWeights {
    /// length `ambient`; entries beyond `basis.len()` are zero
    pub w: Vec<f64>,
    pub basis: MonomialBasis,
    pub ambient: usize,
}

/// Weights with `⟨w, V(x)⟩ = Σ_j c_j ⟨v, x⟩^j`, zero-padded to `ambient`.
pub fn halfspace_from_ptf(v: &[f64], poly: &[f64], basis: &MonomialBasis, ambient: usize) -> Result<HalfspaceWeights> {
    if v.len() != basis.m {
        return Err(Error::DimensionMismatch {
            expected: basis.m,
            got: v.len(),
        });
    }
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() <= UNIT_TOL) {
        return Err(Error::NonUnitDirection(norm));
    }
    let degree = poly.len().saturating_sub(1) as u32;
    if degree > basis.d_max {
        return Err(Error::DegreeOverflow {
            degree: degree as usize,
            max: basis.d_max as usize,
        });
    }
    if ambient < basis.len() {
        return Err(Error::AmbientTooSmall {
            ambient,
            lifted: basis.len(),
        });
    }
    let powers = veronese(basis, v)?;
    let mult = multinomials(basis);
    let mut w = vec![0.0; ambient];
    for (j, &c) in poly.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for k in basis.degree_range(j) {
            let coef = mult[k].to_f64().unwrap_or(f64::INFINITY);
            w[k] = c * coef * powers[k];
        }
    }
    Ok(HalfspaceWeights {
        w,
        basis: basis.clone(),
        ambient,
    })
}

/// `⟨w, E(V(x))⟩` and the scale `Σ |w_α x^α|` that bounds its rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedValue {
    pub value: f64,
    pub scale: f64,
}

impl HalfspaceWeights {
    pub fn m_prime(&self) -> usize {
        self.basis.len()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<LiftedValue> {
        let feats = veronese(&self.basis, x)?;
        let mut acc = CompensatedSum::new();
        let mut scale = 0.0;
        for (w, f) in self.w.iter().zip(&feats) {
            let term = w * f;
            acc.add(term);
            scale += term.abs();
        }
        Ok(LiftedValue {
            value: acc.value(),
            scale,
        })
    }

    /// +1 when `⟨w, E(V(x))⟩ ≥ 0`, else −1.
    pub fn sign(&self, x: &[f64]) -> Result<i8> {
        Ok(if self.evaluate(x)?.value >= 0.0 { 1 } else { -1 })
    }

    pub fn padding_is_zero(&self) -> bool {
        self.w[self.m_prime()..].iter().all(|&w| w == 0.0)
    }

    pub fn export(&self) -> WeightsExport<'_> {
        WeightsExport {
            m_big: self.ambient,
            m_prime: self.m_prime(),
            basis_order: "grlex",
            w: &self.w,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct WeightsExport<'a> {
    #[serde(rename = "M")]
    pub m_big: usize,
    #[serde(rename = "M_prime")]
    pub m_prime: usize,
    pub basis_order: &'static str,
    pub w: &'a [f64],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub total: usize,
    pub excluded: usize,
    pub agreements: usize,
    pub fraction: f64,
    /// indices of disagreeing samples
    pub disagreements: Vec<usize>,
}

/// Compares the lifted halfspace with the PTF on every sample whose
/// projection is at least [`ENDPOINT_EXCLUSION`] away from `J2`'s endpoints.
pub fn check_consistency(
    instance: &MassartInstance,
    weights: &HalfspaceWeights,
    samples: &[LabeledSample],
) -> Result<ConsistencyReport> {
    let mut excluded = 0;
    let mut agreements = 0;
    let mut disagreements = Vec::new();
    for (idx, s) in samples.iter().enumerate() {
        let t = instance.projection(&s.x);
        if instance.pair.j2.endpoint_distance(t) < ENDPOINT_EXCLUSION {
            excluded += 1;
            continue;
        }
        if weights.sign(&s.x)? == ptf_sign_at(instance, t) {
            agreements += 1;
        } else {
            disagreements.push(idx);
        }
    }
    let checked = samples.len() - excluded;
    Ok(ConsistencyReport {
        total: samples.len(),
        excluded,
        agreements,
        fraction: if checked == 0 {
            1.0
        } else {
            agreements as f64 / checked as f64
        },
        disagreements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_bases() {
        let b = enumerate_basis(2, 2).unwrap();
        let got: Vec<Vec<u8>> = b.iter().map(|e| e.to_vec()).collect();
        assert_eq!(
            got,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(enumerate_basis(1, 3).unwrap().len(), 4);
    }

    #[test]
    fn grlex_order_and_uniqueness() {
        let b = enumerate_basis(4, 5).unwrap();
        assert_eq!(b.len() as u128, binomial_u128(9, 5).unwrap());
        let all: Vec<&[u8]> = b.iter().collect();
        for w in all.windows(2) {
            let (da, db): (u32, u32) = (
                w[0].iter().map(|&e| e as u32).sum(),
                w[1].iter().map(|&e| e as u32).sum(),
            );
            assert!(da < db || (da == db && w[0] > w[1]));
        }
    }

    #[test]
    fn veronese_examples() {
        let b = enumerate_basis(2, 2).unwrap();
        assert_eq!(veronese(&b, &[2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
        let z = veronese(&b, &[0.0, 0.0]).unwrap();
        assert_eq!(z, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(veronese(&b, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn multinomial_values() {
        let b = enumerate_basis(3, 4).unwrap();
        let mult = multinomials(&b);
        for (k, e) in b.iter().enumerate() {
            let n: u32 = e.iter().map(|&a| a as u32).sum();
            let fact = |k: u32| (1..=k as u64).product::<u64>();
            let expected = fact(n) / e.iter().map(|&a| fact(a as u32)).product::<u64>();
            assert_eq!(mult[k], BigUint::from(expected));
        }
    }

    #[test]
    fn linear_and_quadratic_weights() {
        let b = enumerate_basis(2, 2).unwrap();
        let w = halfspace_from_ptf(&[1.0, 0.0], &[0.0, 1.0], &b, 10).unwrap();
        assert_eq!(w.w, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(w.padding_is_zero());
        let (a, c) = (0.6, 0.8);
        let w = halfspace_from_ptf(&[a, c], &[0.0, 0.0, 1.0], &b, 6).unwrap();
        assert_eq!(&w.w[3..], &[a * a, 2.0 * a * c, c * c]);
    }

    #[test]
    fn weight_errors() {
        let b = enumerate_basis(2, 2).unwrap();
        assert!(matches!(
            halfspace_from_ptf(&[1.0, 0.0], &[0.0, 0.0, 0.0, 1.0], &b, 6),
            Err(Error::DegreeOverflow { .. })
        ));
        assert!(matches!(
            halfspace_from_ptf(&[1.0, 1.0], &[1.0], &b, 6),
            Err(Error::NonUnitDirection(_))
        ));
        assert!(matches!(
            halfspace_from_ptf(&[1.0, 0.0], &[1.0], &b, 5),
            Err(Error::AmbientTooSmall { .. })
        ));
    }

    #[test]
    fn size_cap() {
        assert!(matches!(
            enumerate_basis(20, 42),
            Err(Error::BasisTooLarge { .. })
        ));
        assert!(matches!(
            enumerate_basis_capped(3, 3, 19),
            Err(Error::BasisTooLarge { size: 20, cap: 19 })
        ));
    }

    #[test]
    fn export_shape() {
        let b = enumerate_basis(2, 1).unwrap();
        let w = halfspace_from_ptf(&[1.0, 0.0], &[0.5, 1.0], &b, 5).unwrap();
        let v = serde_json::to_value(w.export()).unwrap();
        assert_eq!(v["M"], 5);
        assert_eq!(v["M_prime"], 3);
        assert_eq!(v["basis_order"], "grlex");
        assert_eq!(v["w"].as_array().unwrap().len(), 5);
    }
}
