//! Macdonald difference operators: direct action and contour-integral action.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::partitions::Partition;
use crate::quadrature::{integrate_nd, Circle, ContourSpec, QuadOptions};
use crate::symfunc::{cauchy_h, elementary, h0, schur, Specialization};

type C = Complex64;

const ONE: C = C::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OperatorParams {
    pub r: usize,
    pub q: C,
    pub t: C,
    pub n: usize,
}

impl OperatorParams {
    pub fn new(r: usize, q: C, t: C, n: usize) -> Result<Self> {
        if n == 0 || r == 0 || r > n {
            return Err(Error::Config(format!("operator order r={r} must lie in [1, n={n}]")));
        }
        Ok(Self { r, q, t, n })
    }

    /// The `t = q` operator used by every contour formula.
    pub fn diagonal(r: usize, q: C, n: usize) -> Result<Self> {
        Self::new(r, q, q, n)
    }

    fn prefactor(&self) -> C {
        self.q.powu((self.r * (self.r - 1) / 2) as u32)
    }
}

fn check_distinct(x: &[C]) -> Result<()> {
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if x[i] == x[j] {
                return Err(Error::Coincident { i, j });
            }
        }
    }
    Ok(())
}

fn subsets(n: usize, r: usize) -> impl Iterator<Item = u64> {
    (0u64..1 << n).filter(move |m| m.count_ones() as usize == r)
}

fn weight_and_shift(p: &OperatorParams, x: &[C], mask: u64) -> (C, Vec<C>) {
    let mut a = ONE;
    let mut shifted = x.to_vec();
    for i in 0..x.len() {
        if mask >> i & 1 == 1 {
            shifted[i] *= p.q;
            for j in 0..x.len() {
                if mask >> j & 1 == 0 {
                    a *= (p.t * x[i] - x[j]) / (x[i] - x[j]);
                }
            }
        }
    }
    (a, shifted)
}

/// `q^{r(r−1)/2} A_I(x;t) F(T_{q,I} x)` for one subset `I` (bit mask).
pub fn apply_direct_term(p: &OperatorParams, f: &dyn Fn(&[C]) -> C, x: &[C], subset: u64) -> C {
    let (a, shifted) = weight_and_shift(p, x, subset);
    p.prefactor() * a * f(&shifted)
}

pub fn apply_direct(p: &OperatorParams, f: &dyn Fn(&[C]) -> C, x: &[C]) -> Result<C> {
    if x.len() != p.n {
        return Err(Error::LengthMismatch(format!("{} variables for n = {}", x.len(), p.n)));
    }
    check_distinct(x)?;
    Ok(subsets(p.n, p.r).map(|m| apply_direct_term(p, f, x, m)).sum())
}

/// `D^{1,q_d} ∘ … ∘ D^{1,q_1} F` with each operator at `t = q_j`.
pub fn compose_direct(qs: &[C], f: &dyn Fn(&[C]) -> C, x: &[C]) -> Result<C> {
    check_distinct(x)?;
    let n = x.len();
    match qs.split_last() {
        None => Ok(f(x)),
        Some((&q, rest)) => {
            let p = OperatorParams::diagonal(1, q, n)?;
            let inner = |y: &[C]| compose_direct(rest, f, y).unwrap_or(C::new(f64::NAN, f64::NAN));
            apply_direct(&p, &inner, x)
        }
    }
}

/// `e_r(q^{λ_1} t^{n−1}, …, q^{λ_n})`.
pub fn schur_eigenvalue(lambda: &Partition, p: &OperatorParams) -> C {
    let args: Vec<C> = (0..p.n)
        .map(|i| p.q.powu(lambda.part(i) as u32) * p.t.powu((p.n - 1 - i) as u32))
        .collect();
    elementary(p.r, &args)
}

pub fn eigen_residual(lambda: &Partition, p: &OperatorParams, x: &Specialization) -> Result<f64> {
    if lambda.length() > p.n {
        return Err(Error::LengthMismatch(format!("{lambda} has more than {} rows", p.n)));
    }
    let f = |y: &[C]| schur(lambda, &Specialization::new(y.to_vec()));
    let lhs = apply_direct(p, &f, &x.values)?;
    let s = f(&x.values);
    Ok((lhs - schur_eigenvalue(lambda, p) * s).norm() / (s.norm() + 1.0))
}

pub type ScalarFn = Arc<dyn Fn(C) -> C + Send + Sync>;

/// `G(X) = ∏_{i<j} f(x_i x_j) ∏_i g(x_i)`.
#[derive(Clone)]
pub struct ProductFormFunction {
    pub f: ScalarFn,
    pub g: ScalarFn,
}

impl ProductFormFunction {
    pub fn new(f: impl Fn(C) -> C + Send + Sync + 'static, g: impl Fn(C) -> C + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            g: Arc::new(g),
        }
    }

    /// `f(x) = 1/(1 − x)`, `g(x) = ∏ 1/(1 − x y_i)`: the single-partition function `Z(X;Y)`.
    pub fn pfaffian_partition(y: &Specialization) -> Self {
        let ys = y.values.clone();
        Self::new(|u| ONE / (ONE - u), move |u| crate::symfunc::h_single(&ys, u))
    }

    pub fn evaluate(&self, x: &[C]) -> C {
        let mut acc = ONE;
        for i in 0..x.len() {
            acc *= (self.g)(x[i]);
            for j in i + 1..x.len() {
                acc *= (self.f)(x[i] * x[j]);
            }
        }
        acc
    }
}

/// Circles of one common radius around each `x_i`, small enough that `q·C`
/// stays outside `C` and each circle avoids the listed extra poles.
pub fn action_contour(x: &[C], q: C, extra_poles: &[C], nodes: usize) -> Result<ContourSpec> {
    let mut gap = f64::INFINITY;
    for (i, &xi) in x.iter().enumerate() {
        for (j, &xj) in x.iter().enumerate() {
            if i != j {
                gap = gap.min((xi - xj).norm());
            }
            gap = gap.min((q * xi - xj).norm() / (1.0 + q.norm()));
        }
        for &p in extra_poles {
            gap = gap.min((xi - p).norm());
        }
    }
    if gap.is_nan() || gap <= 0.0 {
        return Err(Error::Radius("no admissible radius around the variables".into()));
    }
    let radius = if gap.is_finite() { 0.45 * gap } else { 0.1 };
    ContourSpec::new(x.iter().map(|&c| Circle::around(c, radius)).collect(), nodes)
}

/// Integrand of the r-fold contour formula, without the constant prefactor.
pub fn contour_action_integrand<'a>(q: C, g: &'a ProductFormFunction, x: &'a [C]) -> impl Fn(&[C]) -> C + Sync + 'a {
    move |z: &[C]| {
        let f = &g.f;
        let r = z.len();
        let mut acc = ONE;
        for i in 0..r {
            for j in 0..r {
                if i != j {
                    acc *= (z[i] - z[j]) / ((q * z[i] - z[j]) * f(q * z[i] * z[j]));
                }
            }
            for j in i + 1..r {
                acc *= f(q * q * z[i] * z[j]) * f(z[i] * z[j]);
            }
            acc *= f(z[i] * z[i]) / f(q * z[i] * z[i]);
            for &xj in x {
                acc *= (q * z[i] - xj) * f(q * z[i] * xj) / ((z[i] - xj) * f(z[i] * xj));
            }
            acc *= (g.g)(q * z[i]) / ((g.g)(z[i]) * z[i]);
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContourAction {
    pub value: C,
    pub nodes: usize,
}

fn factorial(r: usize) -> f64 {
    (1..=r).map(|k| k as f64).product()
}

/// Contour-integral evaluation of `D^{r,q} G(X)` over `C^r`, where `c` is the
/// union of circles around the variables.
pub fn apply_via_contour(
    p: &OperatorParams,
    g: &ProductFormFunction,
    x: &[C],
    c: &ContourSpec,
    opts: &QuadOptions,
) -> Result<ContourAction> {
    let contours = vec![c.clone(); p.r];
    apply_via_contour_on(p, g, x, &contours, opts)
}

/// As [`apply_via_contour`], with an explicit contour per integration variable.
pub fn apply_via_contour_on(
    p: &OperatorParams,
    g: &ProductFormFunction,
    x: &[C],
    contours: &[ContourSpec],
    opts: &QuadOptions,
) -> Result<ContourAction> {
    if p.t != p.q {
        return Err(Error::Config("contour formula requires t = q".into()));
    }
    if x.len() != p.n || contours.len() != p.r {
        return Err(Error::LengthMismatch("variables or contours do not match the operator".into()));
    }
    check_distinct(x)?;
    let integrand = contour_action_integrand(p.q, g, x);
    let quad = integrate_nd(integrand, contours, opts)?;
    let pre = g.evaluate(x) * p.prefactor() / (factorial(p.r) * (p.q - ONE).powu(p.r as u32));
    Ok(ContourAction {
        value: pre * quad.value,
        nodes: quad.nodes,
    })
}

#[derive(Clone, Debug, Default)]
pub struct IteratedConfig {
    /// Strictly decreasing circle radii, one per operator; derived from the
    /// admissibility conditions when absent.
    pub radii: Option<Vec<f64>>,
    pub nodes: usize,
    pub quad: QuadOptions,
}

impl IteratedConfig {
    pub fn with_nodes(nodes: usize) -> Self {
        Self {
            radii: None,
            nodes,
            quad: QuadOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IteratedAction {
    /// `∏ D^{1,q_j} Φ / Φ`.
    pub ratio: C,
    /// `∏ D^{1,q_j} Φ`.
    pub value: C,
    pub radii: Vec<f64>,
    pub nodes: usize,
}

/// Factor by which successive default radii shrink.
pub const RADIUS_DECAY: f64 = 0.8;
const RADIUS_SAFETY: f64 = 0.99;
const MERGE_EPS: f64 = 1e-12;

fn push_distinct(points: &mut Vec<C>, p: C) {
    if points.iter().all(|&v| (v - p).norm() > MERGE_EPS) {
        points.push(p);
    }
}

fn min_gap(points: &[C]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            gap = gap.min((points[i] - points[j]).norm());
        }
    }
    gap
}

fn dist_to(avoid: &[C], centers: &[C]) -> f64 {
    avoid
        .iter()
        .flat_map(|p| centers.iter().map(move |c| (p - c).norm()))
        .fold(f64::INFINITY, f64::min)
}

fn check_domain(x: &[C], y: &[C]) -> Result<()> {
    check_distinct(x)?;
    if x.iter().any(|v| v.im != 0.0 || !(v.re > 0.0 && v.re < 1.0)) {
        return Err(Error::Config("x values must be distinct positive reals below 1".into()));
    }
    if y.iter().any(|v| v.im != 0.0 || v.re < 0.0 || v.re > 1.0) {
        return Err(Error::Config("y values must be reals in [0, 1]".into()));
    }
    Ok(())
}

/// Centers enclosed by the contour of `z_j`: every `x_i` together with its
/// images `x_i ∏_{k∈S} q_k` for nonempty `S ⊆ {j+1, …, d}`.
pub fn enclosed_centers(qs: &[C], x: &[C], j: usize) -> Vec<C> {
    let later = &qs[j + 1..];
    let mut centers = Vec::new();
    for mask in 0u64..1 << later.len() {
        let scale: C = later
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &q)| q)
            .product();
        for &xi in x {
            push_distinct(&mut centers, scale * xi);
        }
    }
    centers
}

/// Poles of the `z_j` integrand that its contour must exclude.
fn excluded_poles(qs: &[C], x: &[C], y: &[C], centers: &[Vec<C>], j: usize) -> Vec<C> {
    let q = qs[j];
    let mut avoid = vec![C::new(0.0, 0.0), ONE, -ONE];
    for &xi in x {
        avoid.extend([ONE / (q * xi), ONE / xi]);
    }
    for &yi in y {
        if yi != C::new(0.0, 0.0) {
            avoid.push(ONE / (q * yi));
        }
    }
    for (k, ek) in centers.iter().enumerate() {
        if k == j {
            continue;
        }
        for &c in ek {
            avoid.extend([ONE / c, ONE / (q * qs[k] * c), ONE / (q * c), ONE / (qs[k] * c)]);
            if k > j {
                avoid.push(c / q);
            } else {
                avoid.push(qs[k] * c);
                if centers[j].iter().all(|&e| (e - c / q).norm() > MERGE_EPS) {
                    avoid.push(c / q);
                }
            }
        }
    }
    avoid
}

/// Largest admissible outer radius for the nested circle families.
pub fn radius_bound(qs: &[C], x: &[C], y: &[C]) -> f64 {
    let centers: Vec<Vec<C>> = (0..qs.len()).map(|j| enclosed_centers(qs, x, j)).collect();
    let c = qs.iter().map(|q| q.norm().min(1.0 / q.norm())).fold(1.0, f64::min);
    let mut bound = f64::INFINITY;
    for j in 0..qs.len() {
        let dist = dist_to(&excluded_poles(qs, x, y, &centers, j), &centers[j]);
        bound = bound.min(0.5 * min_gap(&centers[j])).min(dist * c / (1.0 + c));
    }
    bound
}

fn resolve_radii(cfg: &IteratedConfig, d: usize, bound: f64) -> Result<Vec<f64>> {
    if bound.is_nan() || bound <= 0.0 {
        return Err(Error::Radius(format!("no admissible outer radius (bound {bound:e})")));
    }
    match &cfg.radii {
        None => Ok((0..d)
            .map(|j| RADIUS_SAFETY * bound * RADIUS_DECAY.powi(j as i32))
            .collect()),
        Some(r) => {
            if r.len() != d {
                return Err(Error::Radius(format!("{} radii for {d} operators", r.len())));
            }
            if r.windows(2).any(|w| w[0] <= w[1]) || r.iter().any(|&v| v.is_nan() || v <= 0.0) {
                return Err(Error::Radius("radii must be positive and strictly decreasing".into()));
            }
            if r[0] >= bound {
                return Err(Error::Radius(format!("outer radius {} must be below {bound:e}", r[0])));
            }
            Ok(r.clone())
        }
    }
}

/// Admissible radii `r_1 > … > r_d` for the iterated actions.
pub fn iterated_radii(qs: &[C], x: &[C], y: &[C], cfg: &IteratedConfig) -> Result<Vec<f64>> {
    resolve_radii(cfg, qs.len(), radius_bound(qs, x, y))
}

/// Contour of `z_j`: circles of radius `r_j` around [`enclosed_centers`].
pub fn iterated_contours(qs: &[C], x: &[C], radii: &[f64], nodes: usize) -> Result<Vec<ContourSpec>> {
    radii
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            let circles = enclosed_centers(qs, x, j).into_iter().map(|c| Circle::around(c, r)).collect();
            ContourSpec::new(circles, nodes)
        })
        .collect()
}

fn pair_factor(qj: C, zj: C, qk: C, zk: C) -> C {
    (qj * zj - qk * zk) * (zj - zk) / ((zj - qk * zk) * (qj * zj - zk))
}

/// Integrand for `∏ D^{1,q_j} Z / Z`.
pub fn iterated_z_integrand<'a>(qs: &'a [C], x: &'a [C], y: &'a [C]) -> impl Fn(&[C]) -> C + Sync + 'a {
    move |z: &[C]| {
        let d = z.len();
        let mut acc = ONE;
        for j in 0..d {
            let (q, w) = (qs[j], z[j]);
            acc /= q * w - w;
            for &xi in x {
                acc *= (q * w - xi) * (ONE - w * xi) / ((w - xi) * (ONE - q * w * xi));
            }
            for &yi in y {
                acc *= (ONE - w * yi) / (ONE - q * w * yi);
            }
            acc *= (ONE - q * w * w) / (ONE - w * w);
            for k in j + 1..d {
                let (qk, wk) = (qs[k], z[k]);
                acc *= pair_factor(q, w, qk, wk);
                acc *= (ONE - qk * wk * w) * (ONE - q * wk * w) / ((ONE - q * qk * w * wk) * (ONE - w * wk));
            }
        }
        acc
    }
}

/// Integrand for `∏ D^{1,q_j} F / F`.
pub fn iterated_f_integrand<'a>(qs: &'a [C], x: &'a [C], y: &'a [C]) -> impl Fn(&[C]) -> C + Sync + 'a {
    move |z: &[C]| {
        let d = z.len();
        let mut acc = ONE;
        for j in 0..d {
            let (q, w) = (qs[j], z[j]);
            acc /= q * w - w;
            for &xi in x {
                acc *= (q * w - xi) / (w - xi);
            }
            for &yi in y {
                acc *= (ONE - w * yi) / (ONE - q * w * yi);
            }
            for k in j + 1..d {
                acc *= pair_factor(q, w, qs[k], z[k]);
            }
        }
        acc
    }
}

/// `Z(X;Y) = H0(X) H(X;Y)`.
pub fn z_single(x: &Specialization, y: &Specialization) -> Result<C> {
    Ok(h0(x)? * cauchy_h(x, y)?)
}

/// `F(X;Y) = H(X;Y)`.
pub fn f_single(x: &Specialization, y: &Specialization) -> Result<C> {
    cauchy_h(x, y)
}

fn iterate(
    qs: &[C],
    x: &Specialization,
    y: &Specialization,
    cfg: &IteratedConfig,
    integrand: &(dyn Fn(&[C]) -> C + Sync),
    base: C,
) -> Result<IteratedAction> {
    check_domain(&x.values, &y.values)?;
    let radii = iterated_radii(qs, &x.values, &y.values, cfg)?;
    let contours = iterated_contours(qs, &x.values, &radii, cfg.nodes)?;
    let quad = integrate_nd(integrand, &contours, &cfg.quad)?;
    Ok(IteratedAction {
        ratio: quad.value,
        value: quad.value * base,
        radii,
        nodes: quad.nodes,
    })
}

/// `∏ D^{1,q_j} Z(X;Y)`, with `D^{1,q_1}` applied first.
pub fn iterated_action_z(qs: &[C], x: &Specialization, y: &Specialization, cfg: &IteratedConfig) -> Result<IteratedAction> {
    let integrand = iterated_z_integrand(qs, &x.values, &y.values);
    iterate(qs, x, y, cfg, &integrand, z_single(x, y)?)
}

/// `∏ D^{1,q_j} F(X;Y)`, with `D^{1,q_1}` applied first.
pub fn iterated_action_f(qs: &[C], x: &Specialization, y: &Specialization, cfg: &IteratedConfig) -> Result<IteratedAction> {
    let integrand = iterated_f_integrand(qs, &x.values, &y.values);
    iterate(qs, x, y, cfg, &integrand, f_single(x, y)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfunc::h_single;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    fn z_fn(y: Specialization) -> impl Fn(&[C]) -> C {
        move |v: &[C]| z_single(&Specialization::new(v.to_vec()), &y).unwrap()
    }

    #[test]
    fn constant_function_two_variables() {
        let q = C::new(0.4, 0.1);
        let p = OperatorParams::diagonal(1, q, 2).unwrap();
        let v = apply_direct(&p, &|_| ONE, &[c(0.3), c(0.7)]).unwrap();
        assert!((v - (q + ONE)).norm() < 1e-14);
    }

    #[test]
    fn top_order_shifts_everything() {
        let q = C::new(0.5, -0.2);
        let x = [c(0.2), c(0.5), c(0.6)];
        let f = |v: &[C]| v[0] * v[1] * v[1] + v[2];
        let p = OperatorParams::diagonal(3, q, 3).unwrap();
        let want = q.powu(3) * f(&[q * x[0], q * x[1], q * x[2]]);
        assert!((apply_direct(&p, &f, &x).unwrap() - want).norm() < 1e-14);
    }

    #[test]
    fn one_variable_eigenrelation() {
        let q = C::new(0.3, 0.2);
        let p = OperatorParams::diagonal(1, q, 1).unwrap();
        let lam = Partition::new(vec![1]).unwrap();
        assert!(eigen_residual(&lam, &p, &Specialization::real(&[0.4])).unwrap() < 1e-15);
    }

    #[test]
    fn eigenvalue_examples() {
        let p = OperatorParams::new(1, c(0.3), c(0.3), 2).unwrap();
        let lam = Partition::new(vec![2, 1]).unwrap();
        assert!((schur_eigenvalue(&lam, &p) - c(0.327)).norm() < 1e-15);
        assert!(eigen_residual(&lam, &p, &Specialization::real(&[0.2, 0.6])).unwrap() < 1e-10);
        let p = OperatorParams::diagonal(1, C::new(0.2, 0.5), 2).unwrap();
        assert!(eigen_residual(&Partition::empty(), &p, &Specialization::real(&[0.2, 0.6])).unwrap() < 1e-12);
    }

    #[test]
    fn eigenrelation_needs_t_equal_q_beyond_one_row() {
        let p = OperatorParams::new(1, c(0.3), c(0.6), 2).unwrap();
        let x = Specialization::real(&[0.2, 0.5]);
        assert!(eigen_residual(&Partition::new(vec![1]).unwrap(), &p, &x).unwrap() < 1e-12);
        assert!(eigen_residual(&Partition::new(vec![2]).unwrap(), &p, &x).unwrap() > 1e-4);
    }

    #[test]
    fn coincident_variables_rejected() {
        let p = OperatorParams::diagonal(1, c(0.5), 2).unwrap();
        assert_eq!(apply_direct(&p, &|_| ONE, &[c(0.3), c(0.3)]).unwrap_err(), Error::Coincident { i: 0, j: 1 });
    }

    #[test]
    fn contour_matches_direct_for_z() {
        let y = Specialization::real(&[0.2, 0.35]);
        let g = ProductFormFunction::pfaffian_partition(&y);
        let x = [c(0.3), c(0.5)];
        let q = C::new(0.45, 0.2);
        let p = OperatorParams::diagonal(1, q, 2).unwrap();
        let cont = action_contour(&x, q, &[], 32).unwrap();
        let got = apply_via_contour(&p, &g, &x, &cont, &QuadOptions::with_tol(1e-12)).unwrap();
        let want = apply_direct(&p, &|v| g.evaluate(v), &x).unwrap();
        assert!((got.value - want).norm() < 1e-9, "{} vs {}", got.value, want);
    }

    #[test]
    fn single_variable_residue() {
        let ys = vec![c(0.4)];
        let g = ProductFormFunction::new(|u| ONE / (ONE - u), move |u| h_single(&ys, u));
        let x = [c(0.3)];
        let q = c(0.6);
        let p = OperatorParams::diagonal(1, q, 1).unwrap();
        let cont = action_contour(&x, q, &[], 16).unwrap();
        let got = apply_via_contour(&p, &g, &x, &cont, &QuadOptions::with_tol(1e-13)).unwrap();
        let want = (g.g)(q * x[0]) / (g.g)(x[0]) * g.evaluate(&x);
        assert!((got.value - want).norm() < 1e-12);
    }

    #[test]
    fn iterated_z_single_operator() {
        let x = Specialization::real(&[0.3, 0.2]);
        let y = Specialization::real(&[0.25, 0.1]);
        let q = C::new(0.4, 0.15);
        let got = iterated_action_z(&[q], &x, &y, &IteratedConfig::with_nodes(16)).unwrap();
        let want = compose_direct(&[q], &z_fn(y.clone()), &x.values).unwrap();
        assert!((got.value - want).norm() < 1e-8);
    }

    #[test]
    fn iterated_f_single_variable_by_hand() {
        let x = Specialization::real(&[0.3]);
        let y = Specialization::real(&[0.45]);
        let q = c(0.5);
        let got = iterated_action_f(&[q], &x, &y, &IteratedConfig::with_nodes(16)).unwrap();
        let want = (ONE - 0.3 * 0.45) / (ONE - q * 0.3 * 0.45);
        assert!((got.ratio - want).norm() < 1e-12);
    }

    #[test]
    fn radius_violations_are_config_errors() {
        let x = Specialization::real(&[0.3, 0.2]);
        let y = Specialization::real(&[0.25, 0.1]);
        let mut cfg = IteratedConfig::with_nodes(16);
        cfg.radii = Some(vec![0.5]);
        assert!(matches!(iterated_action_z(&[c(0.4)], &x, &y, &cfg), Err(Error::Radius(_))));
        cfg.radii = Some(vec![1e-4, 2e-4]);
        assert!(matches!(iterated_action_z(&[c(0.4), c(0.3)], &x, &y, &cfg), Err(Error::Radius(_))));
    }

    #[test]
    fn iterated_two_operators_match_composition() {
        let x = Specialization::real(&[0.3, 0.2]);
        let y = Specialization::real(&[0.25, 0.1]);
        let qs = [C::new(0.4, 0.1), C::new(0.3, -0.2)];
        let cfg = IteratedConfig::with_nodes(16);
        let got = iterated_action_z(&qs, &x, &y, &cfg).unwrap();
        let want = compose_direct(&qs, &z_fn(y.clone()), &x.values).unwrap();
        assert!((got.value - want).norm() < 1e-6, "{} vs {}", got.value, want);
        let fy = y.clone();
        let f = move |v: &[C]| f_single(&Specialization::new(v.to_vec()), &fy).unwrap();
        for qs in [qs, [c(0.35), c(0.35)]] {
            let got = iterated_action_f(&qs, &x, &y, &cfg).unwrap();
            let want = compose_direct(&qs, &f, &x.values).unwrap();
            assert!((got.value - want).norm() < 1e-6, "{} vs {}", got.value, want);
        }
    }

    #[test]
    fn three_operators_need_product_images() {
        let x = Specialization::real(&[0.3, 0.2]);
        let y = Specialization::real(&[0.25, 0.1]);
        let qs = [C::new(0.4, 0.1), C::new(0.3, -0.2), C::new(0.5, 0.2)];
        let got = iterated_action_z(&qs, &x, &y, &IteratedConfig::with_nodes(16)).unwrap();
        let want = compose_direct(&qs, &z_fn(y.clone()), &x.values).unwrap();
        assert!((got.value - want).norm() < 1e-6, "{} vs {}", got.value, want);
        assert_eq!(enclosed_centers(&qs, &x.values, 0).len(), 8);
        assert_eq!(enclosed_centers(&qs, &x.values, 2).len(), 2);
    }

    #[test]
    fn near_unit_q_counts_variables() {
        let y = Specialization::real(&[0.2]);
        let g = ProductFormFunction::pfaffian_partition(&y);
        let x = [c(0.3), c(0.5), c(0.1)];
        let q = c(1.0 - 1e-6);
        let p = OperatorParams::diagonal(1, q, 3).unwrap();
        let v = apply_direct(&p, &|v| g.evaluate(v), &x).unwrap();
        assert!((v - 3.0 * g.evaluate(&x)).norm() < 1e-4);
    }
}
