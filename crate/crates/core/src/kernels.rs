//! Double-contour Pfaffian kernels for the Pfaffian Schur measure and process.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::macdonald::{iterated_action_z, IteratedConfig};
use crate::measures::{PointSet, ProcessSpec};
use crate::pfaffian::{pfaffian, verify_schur_pfaffian, SkewMatrix};
use crate::quadrature::{integrate_nd, ContourSpec, QuadOptions};
use crate::symfunc::{h_single, h_single_inv, Specialization};

type C = Complex64;

const ONE: C = C::new(1.0, 0.0);

/// Denominator convention for the `K22` block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignConvention {
    /// `(zw − 1)`.
    #[default]
    #[serde(rename = "paper")]
    ZwMinusOne,
    /// `(1 − zw)`.
    #[serde(rename = "br")]
    OneMinusZw,
}

impl SignConvention {
    fn factor(self) -> f64 {
        match self {
            SignConvention::ZwMinusOne => 1.0,
            SignConvention::OneMinusZw => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Entry {
    K11,
    K12,
    K21,
    K22,
}

/// Optional radius overrides; every absent value takes its default.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelRadii {
    /// `|z|, |w|` for `K11` and `|z|` for `K12`, in `(1, 1/max|ρ|)`.
    pub outer: Option<f64>,
    /// `|z|, |w|` for `K22`, in `(max|ρ|, 1)`.
    pub inner: Option<f64>,
    /// `|w|` for `K12` when the first level is below the second, in `(0, 1/outer)`.
    pub w_below: Option<f64>,
    /// `|w|` for `K12` otherwise, in `(1/outer, 1/max|ρ|)`.
    pub w_above: Option<f64>,
}

pub const DEFAULT_KERNEL_TOL: f64 = 1e-10;
pub const DEFAULT_KERNEL_START_NODES: usize = 32;
pub const DEFAULT_KERNEL_MAX_NODES: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub radii: KernelRadii,
    pub quad_tol: f64,
    pub start_nodes: usize,
    pub max_nodes: usize,
    pub sign_convention: SignConvention,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            radii: KernelRadii::default(),
            quad_tol: DEFAULT_KERNEL_TOL,
            start_nodes: DEFAULT_KERNEL_START_NODES,
            max_nodes: DEFAULT_KERNEL_MAX_NODES,
            sign_convention: SignConvention::ZwMinusOne,
        }
    }
}

impl KernelConfig {
    pub fn with_sign(mut self, sign: SignConvention) -> Self {
        self.sign_convention = sign;
        self
    }

    fn quad(&self) -> QuadOptions {
        QuadOptions {
            tol: self.quad_tol,
            max_nodes: self.max_nodes,
        }
    }
}

/// Radii after defaults and admissibility checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedRadii {
    pub outer: f64,
    pub inner: f64,
    /// Per first level `i`, the `K12` radius for `i < j`.
    pub w_below: Vec<f64>,
    pub w_above: f64,
}

impl ResolvedRadii {
    pub fn k12_w(&self, i: usize, j: usize) -> f64 {
        if i < j {
            self.w_below[i - 1]
        } else {
            self.w_above
        }
    }
}

/// Open interval `(lo, hi)` admissible for each radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    fn mid(self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    fn check(self, name: &str, v: f64) -> Result<f64> {
        if v > self.lo && v < self.hi {
            Ok(v)
        } else {
            Err(Error::Radius(format!("{name} radius {v} outside ({}, {})", self.lo, self.hi)))
        }
    }
}

fn max_abs(spec: &ProcessSpec) -> f64 {
    spec.all_values().max_abs().unwrap_or(0.0)
}

pub fn outer_interval(spec: &ProcessSpec) -> Interval {
    let mx = max_abs(spec);
    Interval {
        lo: 1.0,
        hi: if mx > 0.0 { 1.0 / mx } else { f64::INFINITY },
    }
}

pub fn inner_interval(spec: &ProcessSpec) -> Interval {
    Interval { lo: max_abs(spec), hi: 1.0 }
}

pub fn w_below_interval(outer: f64) -> Interval {
    Interval { lo: 0.0, hi: 1.0 / outer }
}

pub fn w_above_interval(spec: &ProcessSpec, outer: f64) -> Interval {
    Interval {
        lo: 1.0 / outer,
        hi: outer_interval(spec).hi,
    }
}

fn finite_mid(iv: Interval, fallback: f64) -> f64 {
    if iv.hi.is_finite() {
        iv.mid()
    } else {
        fallback
    }
}

pub fn resolve_radii(spec: &ProcessSpec, r: &KernelRadii) -> Result<ResolvedRadii> {
    let oi = outer_interval(spec);
    let outer = match r.outer {
        Some(v) => oi.check("outer", v)?,
        None => finite_mid(oi, 1.5),
    };
    let inner = match r.inner {
        Some(v) => inner_interval(spec).check("inner", v)?,
        None => inner_interval(spec).mid(),
    };
    let below = w_below_interval(outer);
    let w_below = match r.w_below {
        Some(v) => vec![below.check("w_below", v)?; spec.m()],
        None => (1..=spec.m())
            .map(|i| {
                let lo = spec.plus_from(i).max_abs().unwrap_or(0.0).min(below.hi);
                0.5 * (lo + below.hi)
            })
            .collect(),
    };
    let above = w_above_interval(spec, outer);
    let w_above = match r.w_above {
        Some(v) => above.check("w_above", v)?,
        None => finite_mid(above, 2.0 / outer),
    };
    Ok(ResolvedRadii {
        outer,
        inner,
        w_below,
        w_above,
    })
}

/// Radius parameters in resolution order.
pub const RADIUS_PARAMETERS: [&str; 4] = ["outer", "inner", "w_below", "w_above"];

fn with_parameter(base: &KernelRadii, name: &str, v: f64) -> KernelRadii {
    let mut r = *base;
    match name {
        "outer" => r.outer = Some(v),
        "inner" => r.inner = Some(v),
        "w_below" => r.w_below = Some(v),
        _ => r.w_above = Some(v),
    }
    r
}

fn parameter_interval(spec: &ProcessSpec, resolved: &ResolvedRadii, name: &str) -> Interval {
    match name {
        "outer" => outer_interval(spec),
        "inner" => inner_interval(spec),
        "w_below" => w_below_interval(resolved.outer),
        _ => w_above_interval(spec, resolved.outer),
    }
}

fn parameter_value(resolved: &ResolvedRadii, name: &str) -> Vec<f64> {
    match name {
        "outer" => vec![resolved.outer],
        "inner" => vec![resolved.inner],
        "w_below" => resolved.w_below.clone(),
        _ => vec![resolved.w_above],
    }
}

/// A named radius override, varying one parameter from the defaults.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusVariant {
    pub parameter: &'static str,
    pub radius: f64,
    pub radii: KernelRadii,
}

/// One variant per parameter and per fraction of its admissible interval.
pub fn radius_sweep(spec: &ProcessSpec, fractions: &[f64]) -> Result<Vec<RadiusVariant>> {
    let resolved = resolve_radii(spec, &KernelRadii::default())?;
    let mut out = Vec::new();
    for name in RADIUS_PARAMETERS {
        let iv = parameter_interval(spec, &resolved, name);
        if !iv.hi.is_finite() {
            continue;
        }
        for &f in fractions {
            let radius = iv.lo + f * (iv.hi - iv.lo);
            out.push(RadiusVariant {
                parameter: name,
                radius,
                radii: with_parameter(&KernelRadii::default(), name, radius),
            });
        }
    }
    Ok(out)
}

/// Every single-parameter perturbation `r(1 ± rel)` of the defaults that stays admissible.
pub fn radius_perturbations(spec: &ProcessSpec, rel: f64) -> Result<Vec<RadiusVariant>> {
    let resolved = resolve_radii(spec, &KernelRadii::default())?;
    let mut out = Vec::new();
    for name in RADIUS_PARAMETERS {
        for base in parameter_value(&resolved, name) {
            for radius in [base * (1.0 - rel), base * (1.0 + rel)] {
                let radii = with_parameter(&KernelRadii::default(), name, radius);
                if resolve_radii(spec, &radii).is_ok() && parameter_interval(spec, &resolved, name).check(name, radius).is_ok() {
                    out.push(RadiusVariant {
                        parameter: name,
                        radius,
                        radii,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Level data shared by every entry: `ρ+_{[i,m]}` and `ρ+_{[1,m]} ∪ ρ−_{[0,i)}`.
struct Levels {
    plus: Vec<Vec<C>>,
    full: Vec<Vec<C>>,
}

impl Levels {
    fn new(spec: &ProcessSpec) -> Self {
        Self {
            plus: (1..=spec.m()).map(|i| spec.plus_from(i).values).collect(),
            full: (1..=spec.m()).map(|i| spec.full_before(i).values).collect(),
        }
    }

    /// `H(ρ+_{[i,m]}; z) / H(full_i; 1/z)`.
    fn outer_factor(&self, i: usize, z: C) -> C {
        h_single(&self.plus[i - 1], z) * h_single_inv(&self.full[i - 1], ONE / z)
    }

    /// `H(full_i; z) / H(ρ+_{[i,m]}; 1/z)`.
    fn inner_factor(&self, i: usize, z: C) -> C {
        h_single(&self.full[i - 1], z) * h_single_inv(&self.plus[i - 1], ONE / z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelEntry {
    pub value: C,
    pub nodes: usize,
}

fn entry_integral(
    which: Entry,
    (i, t): (usize, i64),
    (j, s): (usize, i64),
    levels: &Levels,
    radii: &ResolvedRadii,
    cfg: &KernelConfig,
) -> Result<KernelEntry> {
    let ti = -t as i32;
    let si = -s as i32;
    let sign = cfg.sign_convention.factor();
    let circle = |r: f64| ContourSpec::centered(r).with_nodes(cfg.start_nodes);
    let (rz, rw) = match which {
        Entry::K11 => (radii.outer, radii.outer),
        Entry::K12 => (radii.outer, radii.k12_w(i, j)),
        Entry::K22 => (radii.inner, radii.inner),
        Entry::K21 => unreachable!(),
    };
    let f = |v: &[C]| {
        let (z, w) = (v[0], v[1]);
        let mono = z.powi(ti) * w.powi(si);
        match which {
            Entry::K11 => {
                (z - w) / ((z * z - ONE) * (w * w - ONE) * (z * w - ONE))
                    * levels.outer_factor(i, z)
                    * levels.outer_factor(j, w)
                    * mono
            }
            Entry::K12 => {
                (z - w) / (w * (z * z - ONE) * (z * w - ONE)) * levels.outer_factor(i, z) * levels.inner_factor(j, w) * mono
            }
            _ => sign * (z - w) / (z * w * (z * w - ONE)) * levels.inner_factor(i, z) * levels.inner_factor(j, w) * mono,
        }
    };
    let q = integrate_nd(f, &[circle(rz), circle(rw)], &cfg.quad())?;
    Ok(KernelEntry {
        value: q.value,
        nodes: q.nodes,
    })
}

fn check_point(spec: &ProcessSpec, (level, _): (usize, i64)) -> Result<()> {
    if level == 0 || level > spec.m() {
        return Err(Error::Config(format!("level {level} outside [1, {}]", spec.m())));
    }
    Ok(())
}

/// One block entry at points `a = (i, t)` and `b = (j, s)`; `K21(a, b) = −K12(b, a)`.
pub fn kernel_entry_process(
    which: Entry,
    a: (usize, i64),
    b: (usize, i64),
    spec: &ProcessSpec,
    cfg: &KernelConfig,
) -> Result<KernelEntry> {
    spec.validate()?;
    check_point(spec, a)?;
    check_point(spec, b)?;
    let radii = resolve_radii(spec, &cfg.radii)?;
    let levels = Levels::new(spec);
    match which {
        Entry::K21 => {
            let e = entry_integral(Entry::K12, b, a, &levels, &radii, cfg)?;
            Ok(KernelEntry {
                value: -e.value,
                nodes: e.nodes,
            })
        }
        _ => entry_integral(which, a, b, &levels, &radii, cfg),
    }
}

/// Single-partition entry for positions `points[k]`, `points[l]`.
pub fn kernel_entry_single(
    which: Entry,
    k: usize,
    l: usize,
    x: &Specialization,
    y: &Specialization,
    points: &[i64],
    cfg: &KernelConfig,
) -> Result<KernelEntry> {
    let spec = ProcessSpec::single(x.clone(), y.clone())?;
    let (Some(&t), Some(&s)) = (points.get(k), points.get(l)) else {
        return Err(Error::LengthMismatch(format!("indices {k}, {l} for {} points", points.len())));
    };
    kernel_entry_process(which, (1, t), (1, s), &spec, cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssembledKernel {
    pub matrix: SkewMatrix,
    pub defect: f64,
    pub max_nodes: usize,
    pub radii: ResolvedRadii,
}

/// The `2d × 2d` matrix with `(a, b)` block `[[K11, K12], [K21, K22]]`.
pub fn assemble_kernel(spec: &ProcessSpec, points: &PointSet, cfg: &KernelConfig) -> Result<AssembledKernel> {
    spec.validate()?;
    points.validate(spec.m())?;
    let radii = resolve_radii(spec, &cfg.radii)?;
    let levels = Levels::new(spec);
    let d = points.len();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).collect();
    let blocks = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (pa, pb) = (points.points[a], points.points[b]);
            let k11 = entry_integral(Entry::K11, pa, pb, &levels, &radii, cfg)?;
            let k12 = entry_integral(Entry::K12, pa, pb, &levels, &radii, cfg)?;
            let k22 = entry_integral(Entry::K22, pa, pb, &levels, &radii, cfg)?;
            Ok([k11, k12, k22])
        })
        .collect::<Result<Vec<_>>>()?;
    let at = |a: usize, b: usize| &blocks[a * d + b];
    let raw = |r: usize, c: usize| {
        let (a, b) = (r / 2, c / 2);
        match (r % 2, c % 2) {
            (0, 0) => at(a, b)[0].value,
            (0, 1) => at(a, b)[1].value,
            (1, 0) => -at(b, a)[1].value,
            _ => at(a, b)[2].value,
        }
    };
    let matrix = SkewMatrix::from_fn(2 * d, raw)?;
    let defect = matrix.asymmetry_defect();
    let limit = 100.0 * cfg.quad_tol;
    if defect > limit {
        return Err(Error::Asymmetry { defect, limit });
    }
    let max_nodes = blocks.iter().flatten().map(|e| e.nodes).max().unwrap_or(0);
    Ok(AssembledKernel {
        matrix,
        defect,
        max_nodes,
        radii,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelCorrelation {
    pub value: f64,
    pub imag_defect: f64,
    pub asymmetry_defect: f64,
    pub max_nodes: usize,
    /// Whether `n > max(d, d − min T)` holds at every level (`n = |ρ+_{[i,m]}|`).
    pub hypothesis_holds: bool,
}

/// The stated size hypothesis `n_i > max(d, d − min T)`.
pub fn size_hypothesis_holds(spec: &ProcessSpec, points: &PointSet) -> bool {
    let d = points.len() as i64;
    let need = d.max(d - points.min_position().unwrap_or(0));
    points.points.iter().all(|&(level, _)| spec.level_size(level) as i64 > need)
}

pub fn correlation_via_kernel(spec: &ProcessSpec, points: &PointSet, cfg: &KernelConfig) -> Result<KernelCorrelation> {
    let hypothesis_holds = size_hypothesis_holds(spec, points);
    if points.is_empty() {
        return Ok(KernelCorrelation {
            value: 1.0,
            imag_defect: 0.0,
            asymmetry_defect: 0.0,
            max_nodes: 0,
            hypothesis_holds,
        });
    }
    let k = assemble_kernel(spec, points, cfg)?;
    let pf = pfaffian(&k.matrix);
    Ok(KernelCorrelation {
        value: pf.re,
        imag_defect: pf.im.abs(),
        asymmetry_defect: k.defect,
        max_nodes: k.max_nodes,
        hypothesis_holds,
    })
}

pub const DEFAULT_Q_RADIUS: f64 = 0.6;
pub const DEFAULT_Q_NODES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QExtractionConfig {
    pub q_radius: f64,
    pub q_nodes: usize,
    pub inner_nodes: usize,
    pub tol: f64,
    pub max_nodes: usize,
}

impl Default for QExtractionConfig {
    fn default() -> Self {
        Self {
            q_radius: DEFAULT_Q_RADIUS,
            q_nodes: DEFAULT_Q_NODES,
            inner_nodes: DEFAULT_Q_NODES,
            tol: 1e-9,
            max_nodes: 1024,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QExtraction {
    pub value: f64,
    pub imag_defect: f64,
    pub nodes: usize,
    /// Positions `≤ −n−1`, occupied with probability one and dropped before extraction.
    pub always_occupied: Vec<i64>,
}

/// Coefficient of `∏ q_j^{t_j+n}` in `∏ D^{1,q_j} Z / Z`, by contour integrals over `|q_j| = r_q`.
pub fn correlation_via_q_extraction(
    x: &Specialization,
    y: &Specialization,
    points: &[i64],
    cfg: &QExtractionConfig,
) -> Result<QExtraction> {
    let n = x.len() as i64;
    if !(cfg.q_radius > 0.0 && cfg.q_radius < 1.0) {
        return Err(Error::Radius(format!("q radius {} must lie in (0, 1)", cfg.q_radius)));
    }
    for (i, a) in x.values.iter().enumerate() {
        for (k, b) in x.values.iter().enumerate() {
            if i != k && ((b / a).norm() - cfg.q_radius).abs() < 1e-9 {
                return Err(Error::Radius(format!(
                    "q radius {} equals the ratio x[{k}]/x[{i}]",
                    cfg.q_radius
                )));
            }
        }
    }
    let mut distinct = points.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != points.len() {
        return Err(Error::Config("positions must be distinct".into()));
    }
    let (always, live): (Vec<i64>, Vec<i64>) = points.iter().partition(|&&t| t < -n);
    if live.is_empty() {
        return Ok(QExtraction {
            value: 1.0,
            imag_defect: 0.0,
            nodes: 0,
            always_occupied: always,
        });
    }
    let inner = IteratedConfig {
        radii: None,
        nodes: cfg.inner_nodes,
        quad: QuadOptions {
            tol: cfg.tol * 0.1,
            max_nodes: cfg.max_nodes,
        },
    };
    let integrand = |qs: &[C]| {
        let ratio = match iterated_action_z(qs, x, y, &inner) {
            Ok(a) => a.ratio,
            Err(_) => return C::new(f64::NAN, f64::NAN),
        };
        qs.iter()
            .zip(&live)
            .fold(ratio, |acc, (&q, &t)| acc * q.powi((-t - n - 1) as i32))
    };
    let circle = ContourSpec::centered(cfg.q_radius).with_nodes(cfg.q_nodes);
    let contours = vec![circle; live.len()];
    let opts = QuadOptions {
        tol: cfg.tol,
        max_nodes: cfg.max_nodes,
    };
    let q = integrate_nd(integrand, &contours, &opts)?;
    if !q.value.re.is_finite() {
        return Err(Error::Radius("iterated action failed on the q contour".into()));
    }
    Ok(QExtraction {
        value: q.value.re,
        imag_defect: q.value.im.abs(),
        nodes: q.nodes,
        always_occupied: always,
    })
}

/// Relative residual between the principal product and the Pfaffian of its
/// `2d × 2d` block matrix, together with the Schur Pfaffian identity at the
/// substituted points `u_{2k−1} = z_k`, `u_{2k} = 1/(q_k z_k)`.
pub fn verify_principal_pfaffian_factorization(qs: &[C], zs: &[C]) -> Result<f64> {
    if qs.len() != zs.len() {
        return Err(Error::LengthMismatch(format!("{} q and {} z values", qs.len(), zs.len())));
    }
    let d = zs.len();
    let mut special = Vec::new();
    for k in 0..d {
        special.extend([zs[k], qs[k] * zs[k], ONE / (qs[k] * zs[k])]);
    }
    for a in 0..special.len() {
        for b in a + 1..special.len() {
            if (special[a] - special[b]).norm() < 1e-12 || !special[a].is_finite() {
                return Err(Error::Pole {
                    context: "coincident z, qz or 1/(qz) values".into(),
                });
            }
        }
    }
    let m11 = |k: usize, l: usize| (zs[k] - zs[l]) / (ONE - zs[k] * zs[l]);
    let m12 = |k: usize, l: usize| (ONE - qs[l] * zs[l] * zs[k]) / (zs[k] - qs[l] * zs[l]);
    let m22 = |k: usize, l: usize| (qs[k] * zs[k] - qs[l] * zs[l]) / (ONE - qs[l] * qs[k] * zs[l] * zs[k]);
    let m = SkewMatrix::from_fn(2 * d, |r, c| {
        let (k, l) = (r / 2, c / 2);
        match (r % 2, c % 2) {
            (0, 0) => m11(k, l),
            (0, 1) => m12(k, l),
            (1, 0) => -m12(l, k),
            _ => m22(k, l),
        }
    })?;
    let mut product = ONE;
    for j in 0..d {
        let (q, z) = (qs[j], zs[j]);
        product *= (ONE - q * z * z) / (z - q * z);
        for k in j + 1..d {
            let (qk, zk) = (qs[k], zs[k]);
            product *= (q * z - qk * zk) * (z - zk) / ((z - qk * zk) * (q * z - zk));
            product *= (ONE - qk * zk * z) * (ONE - q * zk * z) / ((ONE - q * qk * z * zk) * (ONE - z * zk));
        }
    }
    let direct = (pfaffian(&m) - product).norm() / (product.norm() + 1.0);
    let u: Vec<C> = (0..d).flat_map(|k| [zs[k], ONE / (qs[k] * zs[k])]).collect();
    Ok(direct.max(verify_schur_pfaffian(&u)?))
}
