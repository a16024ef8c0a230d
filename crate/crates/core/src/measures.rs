//! Pfaffian Schur measures and processes: weights, partition functions and
//! brute-force oracles by truncated enumeration.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partitions::{partitions_bounded, strip_subpartitions, strip_superpartitions, Partition};
use crate::symfunc::{cauchy_h, h0, skew_schur, tau, Specialization, SymCache};

type C = Complex64;

pub const DEFAULT_TRUNCATION: usize = 30;
/// Offset used by the tail diagnostic `|S_L − S_{L−5}| / S_L`.
pub const TAIL_OFFSET: usize = 5;

/// Specializations `ρ+_1..ρ+_m` and `ρ−_0..ρ−_{m−1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub rho_plus: Vec<Specialization>,
    pub rho_minus: Vec<Specialization>,
}

impl ProcessSpec {
    pub fn new(rho_plus: Vec<Specialization>, rho_minus: Vec<Specialization>) -> Result<Self> {
        let spec = Self { rho_plus, rho_minus };
        spec.validate()?;
        Ok(spec)
    }

    /// The single-partition measure `τ_λ(Y) s_λ(X)`.
    pub fn single(x: Specialization, y: Specialization) -> Result<Self> {
        Self::new(vec![x], vec![y])
    }

    pub fn m(&self) -> usize {
        self.rho_plus.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho_plus.is_empty() {
            return Err(Error::Config("a process needs at least one level".into()));
        }
        if self.rho_plus.len() != self.rho_minus.len() {
            return Err(Error::LengthMismatch(format!(
                "{} plus and {} minus specializations",
                self.rho_plus.len(),
                self.rho_minus.len()
            )));
        }
        for (name, list) in [("rho_plus", &self.rho_plus), ("rho_minus", &self.rho_minus)] {
            for (k, s) in list.iter().enumerate() {
                if s.values.iter().any(|v| v.im != 0.0 || !(v.re > 0.0 && v.re < 1.0)) {
                    return Err(Error::Config(format!("{name}[{k}] must hold reals in (0, 1)")));
                }
            }
        }
        Ok(())
    }

    /// `ρ+_{[i,m]}` for a 1-based level `i`.
    pub fn plus_from(&self, i: usize) -> Specialization {
        Specialization::union_all(&self.rho_plus[i - 1..])
    }

    /// `ρ+_{[1,m]} ∪ ρ−_{[0,i)}` for a 1-based level `i`.
    pub fn full_before(&self, i: usize) -> Specialization {
        Specialization::union_all(self.rho_plus.iter().chain(&self.rho_minus[..i]))
    }

    pub fn all_plus(&self) -> Specialization {
        Specialization::union_all(&self.rho_plus)
    }

    pub fn all_values(&self) -> Specialization {
        Specialization::union_all(self.rho_plus.iter().chain(&self.rho_minus))
    }

    /// Number of variables seen by level `i`: `|ρ+_{[i,m]}|`.
    pub fn level_size(&self, i: usize) -> usize {
        self.rho_plus[i - 1..].iter().map(Specialization::len).sum()
    }
}

/// Points `(level, position)` with 1-based levels.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointSet {
    pub points: Vec<(usize, i64)>,
}

impl PointSet {
    pub fn new(points: Vec<(usize, i64)>) -> Self {
        Self { points }
    }

    /// All points on level 1.
    pub fn single(positions: &[i64]) -> Self {
        Self::new(positions.iter().map(|&t| (1, t)).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        for (k, &(level, t)) in self.points.iter().enumerate() {
            if level == 0 || level > m {
                return Err(Error::Config(format!("point {k} has level {level} outside [1, {m}]")));
            }
            if self.points[..k].contains(&(level, t)) {
                return Err(Error::Config(format!("point ({level}, {t}) listed twice")));
            }
        }
        Ok(())
    }

    pub fn min_position(&self) -> Option<i64> {
        self.points.iter().map(|p| p.1).min()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    #[default]
    Pfaffian,
    Schur,
}

/// Closed form used for the Pfaffian partition function.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    /// `H0(ρ+_1 ∪ … ∪ ρ+_m) ∏_{i<j} H(ρ−_i; ρ+_j)`.
    #[default]
    Union,
    /// `∏_i H0(ρ+_i) ∏_{i<j} H(ρ−_i; ρ+_j)`.
    LiteralProduct,
}

/// Unnormalized weight of `(λ(1..m), μ(1..m−1))`.
pub fn process_weight(lambdas: &[Partition], mus: &[Partition], spec: &ProcessSpec) -> Result<f64> {
    process_weight_kind(lambdas, mus, spec, MeasureKind::Pfaffian)
}

pub fn process_weight_kind(lambdas: &[Partition], mus: &[Partition], spec: &ProcessSpec, kind: MeasureKind) -> Result<f64> {
    let m = spec.m();
    if lambdas.len() != m || mus.len() + 1 != m {
        return Err(Error::LengthMismatch(format!(
            "{} λ and {} μ for m = {m}",
            lambdas.len(),
            mus.len()
        )));
    }
    let empty = Partition::empty();
    let mut w = match kind {
        MeasureKind::Pfaffian => tau(&lambdas[0], &spec.rho_minus[0]),
        MeasureKind::Schur => skew_schur(&lambdas[0], &empty, &spec.rho_minus[0]),
    };
    for k in 0..m {
        let below = if k + 1 < m { &mus[k] } else { &empty };
        w *= skew_schur(&lambdas[k], below, &spec.rho_plus[k]);
        if k > 0 {
            w *= skew_schur(&lambdas[k], &mus[k - 1], &spec.rho_minus[k]);
        }
    }
    Ok(w.re)
}

pub fn partition_function_closed(spec: &ProcessSpec, kind: MeasureKind) -> Result<f64> {
    partition_function_closed_with(spec, kind, ClosedForm::Union)
}

pub fn partition_function_closed_with(spec: &ProcessSpec, kind: MeasureKind, form: ClosedForm) -> Result<f64> {
    let m = spec.m();
    let mut z = C::new(1.0, 0.0);
    for i in 0..m {
        for j in i + 1..=m {
            z *= cauchy_h(&spec.rho_minus[i], &spec.rho_plus[j - 1])?;
        }
    }
    if kind == MeasureKind::Pfaffian {
        match form {
            ClosedForm::Union => z *= h0(&spec.all_plus())?,
            ClosedForm::LiteralProduct => {
                for p in &spec.rho_plus {
                    z *= h0(p)?;
                }
            }
        }
    }
    Ok(z.re)
}

/// Weighted sums binned by the largest weight among the `λ(i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedSums {
    pub mass: Vec<f64>,
    pub observable: Vec<C>,
}

impl BinnedSums {
    fn zero(len: usize) -> Self {
        Self {
            mass: vec![0.0; len],
            observable: vec![C::new(0.0, 0.0); len],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.mass.iter_mut().zip(other.mass) {
            *a += b;
        }
        for (a, b) in self.observable.iter_mut().zip(other.observable) {
            *a += b;
        }
        self
    }

    fn prefix(&self, cap: usize) -> (f64, C) {
        let end = (cap + 1).min(self.mass.len());
        (self.mass[..end].iter().sum(), self.observable[..end].iter().sum())
    }

    pub fn total(&self) -> (f64, C) {
        self.prefix(self.mass.len())
    }

    /// `|S_L − S_{L−5}| / S_L` for the normalized observable.
    pub fn tail(&self) -> f64 {
        let l = self.mass.len() - 1;
        let (z, s) = self.total();
        if l < TAIL_OFFSET {
            return if z > 0.0 { (s / z).norm() } else { 0.0 };
        }
        let (z5, s5) = self.prefix(l - TAIL_OFFSET);
        let (v, v5) = (s / z, if z5 > 0.0 { s5 / z5 } else { C::new(0.0, 0.0) });
        (v - v5).norm() / v.norm().max(f64::MIN_POSITIVE)
    }

    /// `|Z_L − Z_{L−5}| / Z_L`.
    pub fn mass_tail(&self) -> f64 {
        let l = self.mass.len() - 1;
        let (z, _) = self.total();
        if l < TAIL_OFFSET {
            return 1.0;
        }
        (z - self.prefix(l - TAIL_OFFSET).0).abs() / z
    }
}

struct Caches {
    plus: Vec<SymCache>,
    minus: Vec<SymCache>,
}

impl Caches {
    fn new(spec: &ProcessSpec) -> Self {
        Self {
            plus: spec.rho_plus.iter().cloned().map(SymCache::new).collect(),
            minus: spec.rho_minus.iter().cloned().map(SymCache::new).collect(),
        }
    }
}

struct Walk<'a, F> {
    spec: &'a ProcessSpec,
    kind: MeasureKind,
    cap: usize,
    observable: &'a F,
}

impl<F: Fn(&[Partition]) -> C + Sync> Walk<'_, F> {
    /// Levels `level+1..m` are fixed in `stack` (stored top-down); extends to level 1.
    fn descend(&self, caches: &mut Caches, stack: &mut Vec<Partition>, weight: f64, sums: &mut BinnedSums) {
        let level = self.spec.m() - stack.len() + 1;
        let top = stack.last().unwrap().clone();
        if level == 1 {
            let w = weight
                * match self.kind {
                    MeasureKind::Pfaffian => caches.minus[0].tau(&top).re,
                    MeasureKind::Schur => caches.minus[0].schur(&top).re,
                };
            if w == 0.0 {
                return;
            }
            let lambdas: Vec<Partition> = stack.iter().rev().cloned().collect();
            let bin = lambdas.iter().map(Partition::weight).max().unwrap_or(0);
            sums.mass[bin] += w;
            sums.observable[bin] += (self.observable)(&lambdas) * w;
            return;
        }
        let k_minus = self.spec.rho_minus[level - 1].len();
        let k_plus = self.spec.rho_plus[level - 2].len();
        for mu in strip_subpartitions(&top, k_minus) {
            let a = caches.minus[level - 1].skew_schur(&top, &mu).re;
            if a == 0.0 {
                continue;
            }
            for below in strip_superpartitions(&mu, k_plus, self.cap) {
                let b = caches.plus[level - 2].skew_schur(&below, &mu).re;
                if b == 0.0 {
                    continue;
                }
                stack.push(below);
                self.descend(caches, stack, weight * a * b, sums);
                stack.pop();
            }
        }
    }
}

/// Sums `w` and `w·obs(λ(1..m))` over all sequences with every `|λ(i)| ≤ cap`.
pub fn weighted_sums<F>(spec: &ProcessSpec, kind: MeasureKind, cap: usize, observable: &F) -> Result<BinnedSums>
where
    F: Fn(&[Partition]) -> C + Sync,
{
    spec.validate()?;
    let m = spec.m();
    let walk = Walk {
        spec,
        kind,
        cap,
        observable,
    };
    let tops = partitions_bounded(spec.rho_plus[m - 1].len(), cap);
    let sums = tops
        .par_iter()
        .map_init(
            || Caches::new(spec),
            |caches, top| {
                let mut sums = BinnedSums::zero(cap + 1);
                let w = caches.plus[m - 1].schur(top).re;
                if w != 0.0 {
                    walk.descend(caches, &mut vec![top.clone()], w, &mut sums);
                }
                sums
            },
        )
        .reduce(|| BinnedSums::zero(cap + 1), BinnedSums::merge);
    Ok(sums)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Truncated {
    pub value: f64,
    /// `|S_L − S_{L−5}| / S_L`.
    pub tail: f64,
}

pub fn partition_function_truncated(spec: &ProcessSpec, kind: MeasureKind, cap: usize) -> Result<Truncated> {
    let sums = weighted_sums(spec, kind, cap, &|_: &[Partition]| C::new(0.0, 0.0))?;
    Ok(Truncated {
        value: sums.total().0,
        tail: sums.mass_tail(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleValue {
    pub value: C,
    pub partition_function: f64,
    pub tail: f64,
}

/// `ℙ(T ⊆ {λ(i)_κ − κ})` by truncated enumeration.
pub fn correlation_oracle(spec: &ProcessSpec, points: &PointSet, cap: usize, n_terms: usize) -> Result<OracleValue> {
    points.validate(spec.m())?;
    if let Some(lo) = points.min_position() {
        if lo < -(n_terms as i64) {
            return Err(Error::Config(format!(
                "position {lo} below the decidable window -{n_terms}"
            )));
        }
    }
    let hit = |lambdas: &[Partition]| {
        let all = points.points.iter().all(|&(level, t)| lambdas[level - 1].occupies(t));
        C::new(if all { 1.0 } else { 0.0 }, 0.0)
    };
    let sums = weighted_sums(spec, MeasureKind::Pfaffian, cap, &hit)?;
    let (z, s) = sums.total();
    Ok(OracleValue {
        value: s / z,
        partition_function: z,
        tail: sums.tail(),
    })
}

/// `𝔼[∏_{i,j} Σ_{k ≤ n_i} q_{i,j}^{λ(i)_k + n_i − k}]` with `n_i = |ρ+_{[i,m]}|`.
pub fn observable_expectation_oracle(qs: &[Vec<C>], spec: &ProcessSpec, cap: usize) -> Result<OracleValue> {
    observable_expectation_oracle_kind(qs, spec, MeasureKind::Pfaffian, cap)
}

pub fn observable_expectation_oracle_kind(
    qs: &[Vec<C>],
    spec: &ProcessSpec,
    kind: MeasureKind,
    cap: usize,
) -> Result<OracleValue> {
    if qs.len() > spec.m() {
        return Err(Error::LengthMismatch(format!("{} q-groups for m = {}", qs.len(), spec.m())));
    }
    if qs.iter().flatten().any(|q| q.norm() >= 1.0) {
        return Err(Error::Config("every q must satisfy |q| < 1".into()));
    }
    let sizes: Vec<usize> = (1..=spec.m()).map(|i| spec.level_size(i)).collect();
    let obs = |lambdas: &[Partition]| {
        let mut acc = C::new(1.0, 0.0);
        for (i, group) in qs.iter().enumerate() {
            let n = sizes[i];
            for &q in group {
                acc *= (1..=n)
                    .map(|k| q.powu((lambdas[i].part(k - 1) + n - k) as u32))
                    .sum::<C>();
            }
        }
        acc
    };
    let sums = weighted_sums(spec, kind, cap, &obs)?;
    let (z, s) = sums.total();
    Ok(OracleValue {
        value: s / z,
        partition_function: z,
        tail: sums.tail(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(parts: &[usize]) -> Partition {
        Partition::new(parts.to_vec()).unwrap()
    }

    fn singleton() -> ProcessSpec {
        ProcessSpec::single(Specialization::real(&[0.5]), Specialization::real(&[0.5])).unwrap()
    }

    #[test]
    fn weight_examples() {
        let spec = ProcessSpec::new(
            vec![Specialization::real(&[0.3]), Specialization::real(&[0.45])],
            vec![Specialization::real(&[0.2]), Specialization::real(&[0.4])],
        )
        .unwrap();
        assert_eq!(process_weight(&[p(&[]), p(&[])], &[p(&[])], &spec).unwrap(), 1.0);
        let w = process_weight(&[p(&[1]), p(&[1])], &[p(&[1])], &spec).unwrap();
        assert!((w - 0.2 * 0.45).abs() < 1e-15);
        assert!(process_weight(&[p(&[1])], &[], &spec).is_err());
    }

    #[test]
    fn single_level_weight_is_tau_times_schur() {
        let x = Specialization::real(&[0.4, 0.1]);
        let y = Specialization::real(&[0.3, 0.2]);
        let spec = ProcessSpec::single(x.clone(), y.clone()).unwrap();
        let lam = p(&[2, 1]);
        let want = (tau(&lam, &y) * skew_schur(&lam, &Partition::empty(), &x)).re;
        assert!((process_weight(&[lam], &[], &spec).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn closed_forms() {
        let spec = singleton();
        assert!((partition_function_closed(&spec, MeasureKind::Pfaffian).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((partition_function_closed(&spec, MeasureKind::Schur).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        let x = Specialization::real(&[0.3, 0.2]);
        let spec = ProcessSpec::single(x.clone(), Specialization::default()).unwrap();
        let z = partition_function_closed(&spec, MeasureKind::Pfaffian).unwrap();
        assert!((z - 1.0 / 0.94).abs() < 1e-14);
    }

    #[test]
    fn truncation_examples() {
        let spec = singleton();
        assert_eq!(partition_function_truncated(&spec, MeasureKind::Pfaffian, 0).unwrap().value, 1.0);
        let t = partition_function_truncated(&spec, MeasureKind::Pfaffian, 40).unwrap();
        assert!((t.value - 4.0 / 3.0).abs() < 1e-10);
        let mut last = 0.0;
        for cap in [2, 4, 8] {
            let v = partition_function_truncated(&spec, MeasureKind::Pfaffian, cap).unwrap().value;
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn singleton_correlations() {
        let spec = singleton();
        let v = correlation_oracle(&spec, &PointSet::single(&[0]), 40, 40).unwrap();
        assert!((v.value.re - 0.1875).abs() < 1e-10);
        let v = correlation_oracle(&spec, &PointSet::single(&[-2]), 40, 40).unwrap();
        assert!((v.value.re - 1.0).abs() < 1e-12);
        let v = correlation_oracle(&spec, &PointSet::default(), 10, 10).unwrap();
        assert_eq!(v.value.re, 1.0);
    }

    #[test]
    fn geometric_observable() {
        let spec = singleton();
        let q = C::new(0.3, 0.0);
        let v = observable_expectation_oracle(&[vec![q]], &spec, 60).unwrap();
        let want = (1.0 - 0.25) / (1.0 - 0.3 * 0.25);
        assert!((v.value.re - want).abs() < 1e-12);
        let v = observable_expectation_oracle(&[], &spec, 10).unwrap();
        assert!((v.value - C::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn frozen_two_variable_values() {
        let spec = ProcessSpec::single(Specialization::real(&[0.5, 0.25]), Specialization::real(&[0.5, 0.25])).unwrap();
        for (t, want) in [
            (vec![0], 0.3465499877929817),
            (vec![1], 0.13773679733276878),
            (vec![-1], 0.5921630859375221),
            (vec![0, 2], 0.004722175654024064),
        ] {
            let v = correlation_oracle(&spec, &PointSet::single(&t), 30, 30).unwrap();
            assert!((v.value.re - want).abs() < 1e-9, "{t:?}: {}", v.value.re);
        }
    }

    #[test]
    fn point_set_validation() {
        assert!(PointSet::new(vec![(1, 0), (1, 0)]).validate(1).is_err());
        assert!(PointSet::new(vec![(2, 0)]).validate(1).is_err());
        assert!(PointSet::new(vec![(1, 0), (2, 0)]).validate(2).is_ok());
        let json = serde_json::to_string(&PointSet::new(vec![(1, 0), (2, -1)])).unwrap();
        assert_eq!(json, "[[1,0],[2,-1]]");
    }

    #[test]
    fn invalid_spec_rejected() {
        assert!(ProcessSpec::single(Specialization::real(&[1.2]), Specialization::real(&[0.1])).is_err());
        assert!(ProcessSpec::new(vec![Specialization::real(&[0.1])], vec![]).is_err());
    }
}
