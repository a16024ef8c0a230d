//! Integer partitions and Young diagram utilities.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A weakly decreasing sequence of positive integers. Trailing zeros are
/// stripped on construction, so two partitions are equal iff their diagrams are.
#[derive(Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<usize>")]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidPartition {
                parts: parts.iter().map(|&p| p as i64).collect(),
                reason: "parts must be weakly decreasing",
            });
        }
        Ok(Self::from_sorted(parts))
    }

    pub fn empty() -> Self {
        Self::default()
    }

    fn from_sorted(mut parts: Vec<usize>) -> Self {
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Partition { parts }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn weight(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn length(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Row `i` (0-based), zero past the length.
    pub fn part(&self, i: usize) -> usize {
        self.parts.get(i).copied().unwrap_or(0)
    }

    pub fn conjugate(&self) -> Partition {
        let first = self.part(0);
        let parts = (1..=first)
            .map(|i| self.parts.iter().take_while(|&&p| p >= i).count())
            .collect();
        Partition { parts }
    }

    /// True iff every column has even height, i.e. rows pair up as
    /// `mu[2i] == mu[2i+1]`.
    pub fn is_even_conjugate(&self) -> bool {
        (0..self.parts.len())
            .step_by(2)
            .all(|i| self.part(i) == self.part(i + 1))
    }

    /// Diagram containment: `mu ⊆ self`.
    pub fn contains(&self, mu: &Partition) -> bool {
        mu.length() <= self.length() && mu.parts.iter().zip(&self.parts).all(|(a, b)| a <= b)
    }

    /// `{λ_i − i : 1 ≤ i ≤ n}`, strictly decreasing.
    pub fn point_configuration(&self, n: usize) -> Vec<i64> {
        (0..n).map(|i| self.part(i) as i64 - (i as i64 + 1)).collect()
    }

    /// Membership of `t` in the infinite configuration `{λ_i − i}_{i ≥ 1}`.
    pub fn occupies(&self, t: i64) -> bool {
        let len = self.length() as i64;
        t < -len || (0..self.length()).any(|k| self.parts[k] as i64 - (k as i64 + 1) == t)
    }

    /// Inverse of [`Partition::point_configuration`].
    pub fn from_point_configuration(points: &[i64]) -> Result<Partition> {
        let mut parts = Vec::with_capacity(points.len());
        for (i, &p) in points.iter().enumerate() {
            let v = p + i as i64 + 1;
            if v < 0 {
                return Err(Error::InvalidPartition {
                    parts: points.to_vec(),
                    reason: "configuration below the empty diagram",
                });
            }
            parts.push(v as usize);
        }
        Partition::new(parts)
    }
}

impl TryFrom<Vec<i64>> for Partition {
    type Error = Error;

    fn try_from(raw: Vec<i64>) -> Result<Self> {
        if raw.iter().any(|&p| p < 0) {
            return Err(Error::InvalidPartition {
                parts: raw,
                reason: "parts must be nonnegative",
            });
        }
        Partition::new(raw.into_iter().map(|p| p as usize).collect())
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.parts
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.parts)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "∅");
        }
        let s: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

impl PartialOrd for Partition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Weight first, then reverse lexicographic, matching the enumeration order.
impl Ord for Partition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight()
            .cmp(&other.weight())
            .then_with(|| other.parts.cmp(&self.parts))
    }
}

/// All partitions of weight at most `max_weight` with at most `max_len` rows,
/// weight-major and lexicographically descending within a weight.
pub fn partitions_bounded(max_len: usize, max_weight: usize) -> Vec<Partition> {
    fn rec(rest: usize, cap: usize, rows: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(Partition { parts: cur.clone() });
            return;
        }
        if rows == 0 {
            return;
        }
        for p in (1..=cap.min(rest)).rev() {
            cur.push(p);
            rec(rest - p, p, rows - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for w in 0..=max_weight {
        rec(w, w, max_len, &mut Vec::new(), &mut out);
    }
    out
}

pub fn enumerate_up_to_weight(max_weight: usize) -> Vec<Partition> {
    partitions_bounded(usize::MAX, max_weight)
}

/// Partitions `μ ⊆ λ` such that every column of `λ/μ` has at most `k` boxes
/// (`μ_i ≥ λ_{i+k}`). With `k ≥ length(λ)` this is every subdiagram.
pub fn strip_subpartitions(lambda: &Partition, k: usize) -> Vec<Partition> {
    fn rec(lam: &Partition, k: usize, i: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if i == lam.length() {
            out.push(Partition::from_sorted(cur.clone()));
            return;
        }
        let lo = lam.part(i + k);
        let hi = lam.part(i).min(cap);
        for v in (lo..=hi).rev() {
            cur.push(v);
            rec(lam, k, i + 1, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(lambda, k, 0, usize::MAX, &mut Vec::new(), &mut out);
    out
}

pub fn subpartitions(lambda: &Partition) -> Vec<Partition> {
    strip_subpartitions(lambda, lambda.length())
}

/// Partitions `λ ⊇ μ` of weight at most `max_weight` such that every column of
/// `λ/μ` has at most `k` boxes (`λ_i ≤ μ_{i−k}`).
pub fn strip_superpartitions(mu: &Partition, k: usize, max_weight: usize) -> Vec<Partition> {
    fn rec(
        mu: &Partition,
        k: usize,
        i: usize,
        cap: usize,
        budget: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Partition>,
    ) {
        let lo = mu.part(i);
        if lo == 0 {
            // Rows past the length of mu may stay empty; emit that branch first.
            out.push(Partition::from_sorted(cur.clone()));
        }
        if i >= mu.length() + k {
            return;
        }
        let above = if i >= k { mu.part(i - k) } else { usize::MAX };
        let hi = cap.min(above).min(lo + budget);
        for v in (lo.max(1)..=hi).rev() {
            cur.push(v);
            rec(mu, k, i + 1, v, budget - (v - lo), cur, out);
            cur.pop();
        }
    }
    if mu.weight() > max_weight {
        return Vec::new();
    }
    let mut out = Vec::new();
    rec(mu, k, 0, usize::MAX, max_weight - mu.weight(), &mut Vec::new(), &mut out);
    out
}

pub fn even_conjugate_subpartitions(lambda: &Partition) -> Vec<Partition> {
    subpartitions(lambda)
        .into_iter()
        .filter(Partition::is_even_conjugate)
        .collect()
}

/// Number of partitions of `n` by Euler's pentagonal recurrence.
pub fn partition_count(n: usize) -> u128 {
    let mut p = vec![0u128; n + 1];
    p[0] = 1;
    for i in 1..=n {
        let mut acc: i128 = 0;
        for k in 1.. {
            let g1 = k * (3 * k - 1) / 2;
            if g1 > i {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc += sign * p[i - g1] as i128;
            let g2 = k * (3 * k + 1) / 2;
            if g2 <= i {
                acc += sign * p[i - g2] as i128;
            }
        }
        p[i] = acc as u128;
    }
    p[n]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[usize]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn conjugate_examples() {
        assert_eq!(p(&[3, 1]).conjugate(), p(&[2, 1, 1]));
        assert_eq!(Partition::empty().conjugate(), Partition::empty());
        assert_eq!(p(&[2, 2]).conjugate(), p(&[2, 2]));
    }

    #[test]
    fn even_conjugate_examples() {
        assert!(p(&[1, 1]).is_even_conjugate());
        assert!(!p(&[1]).is_even_conjugate());
        assert!(p(&[3, 3]).is_even_conjugate());
        assert_eq!(p(&[3, 3]).conjugate(), p(&[2, 2, 2]));
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(enumerate_up_to_weight(0), vec![Partition::empty()]);
        assert_eq!(
            enumerate_up_to_weight(2),
            vec![Partition::empty(), p(&[1]), p(&[2]), p(&[1, 1])]
        );
        assert_eq!(enumerate_up_to_weight(4).len(), 12);
        let e = enumerate_up_to_weight(6);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn even_subpartitions_examples() {
        assert_eq!(even_conjugate_subpartitions(&Partition::empty()), vec![Partition::empty()]);
        assert_eq!(even_conjugate_subpartitions(&p(&[1])), vec![Partition::empty()]);
        let mut got = even_conjugate_subpartitions(&p(&[2, 1]));
        got.sort();
        assert_eq!(got, vec![Partition::empty(), p(&[1, 1])]);
    }

    #[test]
    fn point_configuration_examples() {
        assert_eq!(p(&[2]).point_configuration(3), vec![1, -2, -3]);
        assert_eq!(Partition::empty().point_configuration(2), vec![-1, -2]);
        assert_eq!(p(&[3, 1]).point_configuration(4), vec![2, -1, -3, -4]);
    }

    #[test]
    fn construction_rejects_increasing_and_strips_zeros() {
        assert!(Partition::new(vec![1, 2]).is_err());
        assert_eq!(p(&[2, 1, 0, 0]).parts(), &[2, 1]);
        assert!(Partition::try_from(vec![1, -1]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let lam = p(&[3, 1]);
        let s = serde_json::to_string(&lam).unwrap();
        assert_eq!(s, "[3,1]");
        assert_eq!(serde_json::from_str::<Partition>("[]").unwrap(), Partition::empty());
        assert_eq!(serde_json::from_str::<Partition>(&s).unwrap(), lam);
        assert!(serde_json::from_str::<Partition>("[1,3]").is_err());
    }

    #[test]
    fn occupancy_matches_long_configuration() {
        for lam in enumerate_up_to_weight(7) {
            let conf = lam.point_configuration(20);
            for t in -15..8 {
                assert_eq!(lam.occupies(t), conf.contains(&t), "{lam} {t}");
            }
        }
    }

    #[test]
    fn strip_enumerators_match_filters() {
        for lam in enumerate_up_to_weight(7) {
            for k in 0..3 {
                let mut got = strip_subpartitions(&lam, k);
                got.sort();
                let mut want: Vec<_> = subpartitions(&lam)
                    .into_iter()
                    .filter(|mu| (0..lam.length()).all(|i| mu.part(i) >= lam.part(i + k)))
                    .collect();
                want.sort();
                assert_eq!(got, want);

                let mut sup = strip_superpartitions(&lam, k, 9);
                sup.sort();
                let mut want: Vec<_> = enumerate_up_to_weight(9)
                    .into_iter()
                    .filter(|nu| nu.contains(&lam))
                    .filter(|nu| (0..nu.length()).all(|i| lam.part(i) >= nu.part(i + k)))
                    .collect();
                want.sort();
                assert_eq!(sup, want, "{lam} k={k}");
            }
        }
    }

    #[test]
    fn euler_counts() {
        let known = [1u128, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42];
        for (n, &c) in known.iter().enumerate() {
            assert_eq!(partition_count(n), c);
        }
        assert_eq!(partition_count(20), 627);
    }
}
