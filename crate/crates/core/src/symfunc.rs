//! Numerical symmetric functions at finite specializations.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::partitions::{even_conjugate_subpartitions, strip_subpartitions, Partition};

type C = Complex64;

const ONE: C = C::new(1.0, 0.0);
const ZERO: C = C::new(0.0, 0.0);

/// A finite ordered list of complex values; disjoint union is concatenation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Specialization {
    pub values: Vec<C>,
}

impl Specialization {
    pub fn new(values: Vec<C>) -> Self {
        Self { values }
    }

    pub fn real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| C::new(v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn union(&self, other: &Specialization) -> Specialization {
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Self { values }
    }

    pub fn union_all<'a, I: IntoIterator<Item = &'a Specialization>>(parts: I) -> Specialization {
        let values = parts.into_iter().flat_map(|s| s.values.iter().copied()).collect();
        Self { values }
    }

    pub fn max_abs(&self) -> Option<f64> {
        self.values.iter().map(|v| v.norm()).reduce(f64::max)
    }

    pub fn min_abs(&self) -> Option<f64> {
        self.values.iter().map(|v| v.norm()).reduce(f64::min)
    }

    /// `h_0..=h_max` by one-variable-at-a-time geometric convolution.
    pub fn h_table(&self, max_degree: usize) -> Vec<C> {
        let mut h = vec![ZERO; max_degree + 1];
        h[0] = ONE;
        for &x in &self.values {
            for r in 1..=max_degree {
                let prev = h[r - 1];
                h[r] += x * prev;
            }
        }
        h
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawValue {
    Real(f64),
    Pair([f64; 2]),
}

impl Serialize for Specialization {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.values.iter().map(|v| [v.re, v.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Specialization {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<RawValue>::deserialize(d)?;
        let values = raw
            .into_iter()
            .map(|r| match r {
                RawValue::Real(x) => C::new(x, 0.0),
                RawValue::Pair([re, im]) => C::new(re, im),
            })
            .collect();
        Ok(Self { values })
    }
}

pub fn power_sum(r: usize, s: &Specialization) -> C {
    s.values.iter().map(|x| x.powu(r as u32)).sum()
}

pub fn complete_homogeneous(r: i64, s: &Specialization) -> C {
    if r < 0 {
        return ZERO;
    }
    s.h_table(r as usize)[r as usize]
}

pub fn elementary(r: usize, values: &[C]) -> C {
    let mut e = vec![ZERO; r + 1];
    e[0] = ONE;
    for &x in values {
        for k in (1..=r).rev() {
            let prev = e[k - 1];
            e[k] += x * prev;
        }
    }
    e[r]
}

/// Sum of `x^β` over the distinct rearrangements `β` of `α` padded with zeros.
pub fn monomial(alpha: &[usize], s: &Specialization) -> Result<C> {
    let mut exps: Vec<usize> = alpha.iter().copied().filter(|&a| a > 0).collect();
    let n = s.len();
    if exps.len() > n {
        return Err(Error::LengthMismatch(format!(
            "monomial with {} nonzero exponents in {} variables",
            exps.len(),
            n
        )));
    }
    exps.resize(n, 0);
    exps.sort_unstable();
    let mut total = ZERO;
    loop {
        total += exps
            .iter()
            .zip(&s.values)
            .map(|(&e, x)| x.powu(e as u32))
            .product::<C>();
        if !next_permutation(&mut exps) {
            break;
        }
    }
    Ok(total)
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

pub(crate) fn determinant(size: usize, cell: impl Fn(usize, usize) -> C) -> C {
    match size {
        0 => ONE,
        1 => cell(0, 0),
        2 => cell(0, 0) * cell(1, 1) - cell(0, 1) * cell(1, 0),
        _ => DMatrix::from_fn(size, size, cell).determinant(),
    }
}

fn jacobi_trudi(lambda: &Partition, mu: &Partition, h: &[C]) -> C {
    let size = lambda.length().max(mu.length());
    determinant(size, |i, j| {
        let idx = lambda.part(i) as i64 - mu.part(j) as i64 - i as i64 + j as i64;
        if idx < 0 {
            ZERO
        } else {
            h[idx as usize]
        }
    })
}

fn jt_degree(lambda: &Partition, mu: &Partition) -> usize {
    lambda.part(0) + lambda.length().max(mu.length())
}

pub fn schur(lambda: &Partition, s: &Specialization) -> C {
    skew_schur(lambda, &Partition::empty(), s)
}

pub fn skew_schur(lambda: &Partition, mu: &Partition, s: &Specialization) -> C {
    let h = s.h_table(jt_degree(lambda, mu));
    jacobi_trudi(lambda, mu, &h)
}

pub fn tau(lambda: &Partition, s: &Specialization) -> C {
    let h = s.h_table(jt_degree(lambda, &Partition::empty()));
    even_conjugate_subpartitions(lambda)
        .iter()
        .map(|mu| jacobi_trudi(lambda, mu, &h))
        .sum()
}

/// Schur polynomial by brute-force enumeration of semistandard tableaux.
pub fn schur_by_tableaux(lambda: &Partition, s: &Specialization) -> C {
    let n = s.len();
    let cells: Vec<(usize, usize)> = (0..lambda.length())
        .flat_map(|r| (0..lambda.part(r)).map(move |c| (r, c)))
        .collect();
    let mut fill = vec![vec![0usize; lambda.part(0)]; lambda.length()];
    fn rec(k: usize, cells: &[(usize, usize)], fill: &mut [Vec<usize>], n: usize, x: &[C], acc: C) -> C {
        if k == cells.len() {
            return acc;
        }
        let (r, c) = cells[k];
        let lo_row = if c > 0 { fill[r][c - 1] } else { 0 };
        let lo_col = if r > 0 { fill[r - 1][c] + 1 } else { 0 };
        let mut total = ZERO;
        for v in lo_row.max(lo_col)..n {
            fill[r][c] = v;
            total += rec(k + 1, cells, fill, n, x, acc * x[v]);
        }
        total
    }
    rec(0, &cells, &mut fill, n, &s.values, ONE)
}

fn check_pair(i: usize, j: usize, a: C, b: C) -> Result<C> {
    let p = a * b;
    if p.norm() >= 1.0 {
        return Err(Error::Divergence { i, j, a, b });
    }
    Ok(p)
}

/// `∏_{i,j} 1/(1 − x_i y_j)`.
pub fn cauchy_h(sx: &Specialization, sy: &Specialization) -> Result<C> {
    let mut acc = ONE;
    for (i, &x) in sx.values.iter().enumerate() {
        for (j, &y) in sy.values.iter().enumerate() {
            acc /= ONE - check_pair(i, j, x, y)?;
        }
    }
    Ok(acc)
}

/// `∏_{i<j} 1/(1 − x_i x_j)`.
pub fn h0(sx: &Specialization) -> Result<C> {
    let v = &sx.values;
    let mut acc = ONE;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            acc /= ONE - check_pair(i, j, v[i], v[j])?;
        }
    }
    Ok(acc)
}

/// `exp Σ_{k ≤ kmax} p_k(X) p_k(Y) / k`.
pub fn cauchy_h_exp(sx: &Specialization, sy: &Specialization, kmax: usize) -> C {
    (1..=kmax)
        .map(|k| power_sum(k, sx) * power_sum(k, sy) / k as f64)
        .sum::<C>()
        .exp()
}

/// `exp Σ_{k ≤ kmax} (p_k(X)² − p_{2k}(X)) / 2k`.
pub fn h0_exp(sx: &Specialization, kmax: usize) -> C {
    (1..=kmax)
        .map(|k| (power_sum(k, sx).powu(2) - power_sum(2 * k, sx)) / (2 * k) as f64)
        .sum::<C>()
        .exp()
}

/// `∏ (1 − z x_i)/(1 − q z x_i)`.
pub fn h1(s: &Specialization, z: C, q: C) -> Result<C> {
    let mut acc = ONE;
    for &x in &s.values {
        let den = ONE - q * z * x;
        if den == ZERO {
            return Err(Error::Pole {
                context: format!("H1 at q z x = 1 (x = {x})"),
            });
        }
        acc *= (ONE - z * x) / den;
    }
    Ok(acc)
}

/// `∏ (1 − x_i/(q z))/(1 − x_i/z)`.
pub fn h2(s: &Specialization, z: C, q: C) -> Result<C> {
    if z == ZERO || q == ZERO {
        return Err(Error::Pole {
            context: "H2 with zero argument".into(),
        });
    }
    let mut acc = ONE;
    for &x in &s.values {
        if z == x {
            return Err(Error::Pole {
                context: format!("H2 at z = x = {x}"),
            });
        }
        acc *= (ONE - x / (q * z)) / (ONE - x / z);
    }
    Ok(acc)
}

/// `∏_i 1/(1 − x_i z)` without divergence checks, for use inside integrands.
#[inline]
pub fn h_single(values: &[C], z: C) -> C {
    values.iter().fold(ONE, |acc, &x| acc / (ONE - x * z))
}

/// `∏_i (1 − x_i z)`, the reciprocal of [`h_single`].
#[inline]
pub fn h_single_inv(values: &[C], z: C) -> C {
    values.iter().fold(ONE, |acc, &x| acc * (ONE - x * z))
}

/// Memoized evaluator bound to one specialization.
#[derive(Debug, Clone)]
pub struct SymCache {
    spec: Specialization,
    h: Vec<C>,
    skew: HashMap<(Partition, Partition), C>,
    tau: HashMap<Partition, C>,
}

impl SymCache {
    pub fn new(spec: Specialization) -> Self {
        Self {
            h: spec.h_table(8),
            spec,
            skew: HashMap::new(),
            tau: HashMap::new(),
        }
    }

    pub fn specialization(&self) -> &Specialization {
        &self.spec
    }

    fn ensure(&mut self, degree: usize) {
        if degree >= self.h.len() {
            self.h = self.spec.h_table((2 * self.h.len()).max(degree + 1));
        }
    }

    pub fn skew_schur(&mut self, lambda: &Partition, mu: &Partition) -> C {
        if let Some(&v) = self.skew.get(&(lambda.clone(), mu.clone())) {
            return v;
        }
        self.ensure(jt_degree(lambda, mu));
        let v = jacobi_trudi(lambda, mu, &self.h);
        self.skew.insert((lambda.clone(), mu.clone()), v);
        v
    }

    pub fn schur(&mut self, lambda: &Partition) -> C {
        if lambda.length() > self.spec.len() {
            return ZERO;
        }
        self.skew_schur(lambda, &Partition::empty())
    }

    pub fn tau(&mut self, lambda: &Partition) -> C {
        if let Some(&v) = self.tau.get(lambda) {
            return v;
        }
        let v = strip_subpartitions(lambda, self.spec.len())
            .iter()
            .filter(|mu| mu.is_even_conjugate())
            .map(|mu| self.skew_schur(lambda, mu))
            .sum();
        self.tau.insert(lambda.clone(), v);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::{enumerate_up_to_weight, subpartitions};

    fn p(v: &[usize]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    fn close(a: C, b: C, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn power_sum_examples() {
        assert!(close(power_sum(2, &Specialization::real(&[0.5, 0.5])), C::new(0.5, 0.0), 1e-15));
        assert_eq!(power_sum(1, &Specialization::default()), ZERO);
        let a = Specialization::real(&[0.2, 0.3]);
        let b = Specialization::real(&[0.4]);
        assert!(close(power_sum(3, &a.union(&b)), power_sum(3, &a) + power_sum(3, &b), 1e-15));
    }

    #[test]
    fn complete_homogeneous_examples() {
        let x = C::new(0.7, 0.2);
        assert!(close(complete_homogeneous(2, &Specialization::new(vec![x])), x * x, 1e-15));
        assert!(close(complete_homogeneous(2, &Specialization::real(&[1.0, 1.0])), C::new(3.0, 0.0), 1e-14));
        assert_eq!(complete_homogeneous(-1, &Specialization::real(&[0.3])), ZERO);
    }

    #[test]
    fn monomial_examples() {
        let s = Specialization::real(&[0.3, 0.8]);
        assert!(close(monomial(&[1], &s).unwrap(), C::new(1.1, 0.0), 1e-15));
        assert!(close(monomial(&[2, 1], &Specialization::real(&[1.0, 1.0])).unwrap(), C::new(2.0, 0.0), 1e-15));
        assert!(close(monomial(&[], &s).unwrap(), ONE, 1e-15));
        assert!(monomial(&[1, 1, 1], &s).is_err());
    }

    #[test]
    fn schur_examples() {
        let s = Specialization::real(&[0.3, 0.4]);
        assert!(close(schur(&p(&[1]), &s), C::new(0.7, 0.0), 1e-15));
        assert!(close(schur(&p(&[2, 1]), &Specialization::real(&[0.5, 0.5])), C::new(0.25, 0.0), 1e-15));
        assert!(schur(&p(&[1, 1, 1]), &s).norm() < 1e-15);
        assert_eq!(schur(&Partition::empty(), &s), ONE);
    }

    #[test]
    fn skew_schur_examples() {
        let s = Specialization::real(&[0.3, 0.4, 0.1]);
        assert!(close(skew_schur(&p(&[2, 1]), &p(&[2, 1]), &s), ONE, 1e-14));
        let x = Specialization::real(&[0.6]);
        assert!(close(skew_schur(&p(&[2]), &p(&[1]), &x), C::new(0.6, 0.0), 1e-15));
        let ones = Specialization::real(&[1.0, 1.0]);
        let v = skew_schur(&p(&[2, 1]), &p(&[1]), &ones);
        assert!(close(v, C::new(4.0, 0.0), 1e-13));
        assert!(close(v, schur(&p(&[2]), &ones) + schur(&p(&[1, 1]), &ones), 1e-13));
        assert!(skew_schur(&p(&[1]), &p(&[2]), &s).norm() < 1e-15);
        assert!(skew_schur(&p(&[2]), &p(&[1, 1]), &s).norm() < 1e-15);
    }

    #[test]
    fn tau_examples() {
        let s = Specialization::real(&[0.3, 0.45]);
        assert_eq!(tau(&Partition::empty(), &s), ONE);
        assert!(close(tau(&p(&[1]), &s), power_sum(1, &s), 1e-15));
        assert!(close(tau(&p(&[1, 1]), &Specialization::real(&[0.9])), ONE, 1e-15));
    }

    #[test]
    fn cauchy_and_h0_examples() {
        let half = Specialization::real(&[0.5]);
        assert!(close(cauchy_h(&half, &half).unwrap(), C::new(4.0 / 3.0, 0.0), 1e-15));
        assert_eq!(cauchy_h(&Specialization::default(), &half).unwrap(), ONE);
        assert!(matches!(
            cauchy_h(&half, &Specialization::real(&[2.0])),
            Err(Error::Divergence { i: 0, j: 0, .. })
        ));
        assert_eq!(h0(&half).unwrap(), ONE);
        assert!(close(h0(&Specialization::real(&[0.5, 0.5])).unwrap(), C::new(4.0 / 3.0, 0.0), 1e-15));
        assert_eq!(h0(&Specialization::default()).unwrap(), ONE);
    }

    #[test]
    fn h1_h2_examples() {
        let z = C::new(0.3, 0.2);
        let q = C::new(0.5, -0.1);
        let x = C::new(0.4, 0.0);
        let s = Specialization::new(vec![x]);
        assert_eq!(h1(&Specialization::default(), z, q).unwrap(), ONE);
        assert!(close(h1(&s, z, q).unwrap(), (ONE - z * x) / (ONE - q * z * x), 1e-15));
        assert!(close(h1(&s, z, ONE).unwrap(), ONE, 1e-15));
        assert_eq!(h2(&Specialization::default(), z, q).unwrap(), ONE);
        assert!(close(h2(&s, z, q).unwrap(), (ONE - x / (q * z)) / (ONE - x / z), 1e-15));
        assert!(close(h2(&s, z, ONE).unwrap(), ONE, 1e-15));
        assert!(h2(&s, x, q).is_err());
        assert!(h1(&s, C::new(2.5, 0.0), ONE).is_err());
    }

    #[test]
    fn skew_zero_outside_containment_via_determinant() {
        let s = Specialization::real(&[0.3, 0.2, 0.1]);
        for lam in enumerate_up_to_weight(5) {
            for mu in enumerate_up_to_weight(5) {
                if !lam.contains(&mu) {
                    assert!(skew_schur(&lam, &mu, &s).norm() < 1e-14, "{lam}/{mu}");
                }
            }
        }
    }

    #[test]
    fn cache_agrees_with_direct() {
        let s = Specialization::real(&[0.3, 0.2]);
        let mut cache = SymCache::new(s.clone());
        for lam in enumerate_up_to_weight(9) {
            assert!(close(cache.tau(&lam), tau(&lam, &s), 1e-13));
            assert!(close(cache.schur(&lam), schur(&lam, &s), 1e-13));
            for mu in subpartitions(&lam) {
                assert!(close(cache.skew_schur(&lam, &mu), skew_schur(&lam, &mu, &s), 1e-13));
            }
        }
    }

    #[test]
    fn specialization_json_forms() {
        let s: Specialization = serde_json::from_str("[0.5, [0.1, -0.2]]").unwrap();
        assert_eq!(s.values, vec![C::new(0.5, 0.0), C::new(0.1, -0.2)]);
        let back: Specialization = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
