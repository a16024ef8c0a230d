//! Trapezoidal quadrature on unions of circles with node doubling.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C = Complex64;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_START_NODES: usize = 64;
pub const DEFAULT_MAX_NODES: usize = 1 << 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCircle", into = "RawCircle")]
pub struct Circle {
    pub center: C,
    pub radius: f64,
    pub orientation: Orientation,
}

#[derive(Serialize, Deserialize)]
struct RawCircle {
    center: [f64; 2],
    radius: f64,
    #[serde(default = "positive")]
    orientation: Orientation,
}

fn positive() -> Orientation {
    Orientation::Positive
}

impl TryFrom<RawCircle> for Circle {
    type Error = Error;
    fn try_from(r: RawCircle) -> Result<Self> {
        Circle::new(C::new(r.center[0], r.center[1]), r.radius, r.orientation)
    }
}

impl From<Circle> for RawCircle {
    fn from(c: Circle) -> Self {
        RawCircle {
            center: [c.center.re, c.center.im],
            radius: c.radius,
            orientation: c.orientation,
        }
    }
}

impl Circle {
    pub fn new(center: C, radius: f64, orientation: Orientation) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!("circle radius must be positive, got {radius}")));
        }
        Ok(Self {
            center,
            radius,
            orientation,
        })
    }

    pub fn centered(radius: f64) -> Self {
        Self::new(C::new(0.0, 0.0), radius, Orientation::Positive).expect("positive radius")
    }

    pub fn around(center: C, radius: f64) -> Self {
        Self::new(center, radius, Orientation::Positive).expect("positive radius")
    }

    pub fn reversed(self) -> Self {
        let orientation = match self.orientation {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        };
        Self { orientation, ..self }
    }

    /// Nodes and weights such that `Σ w f(z) ≈ (1/2πi) ∮ f(z) dz`.
    pub fn nodes(&self, n: usize) -> Vec<(C, C)> {
        let s = self.orientation.sign() / n as f64;
        (0..n)
            .map(|k| {
                let offset = C::from_polar(self.radius, 2.0 * PI * k as f64 / n as f64);
                (self.center + offset, offset * s)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub circles: Vec<Circle>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn default_nodes() -> usize {
    DEFAULT_START_NODES
}

impl ContourSpec {
    pub fn new(circles: Vec<Circle>, nodes: usize) -> Result<Self> {
        let spec = Self { circles, nodes };
        spec.validate()?;
        Ok(spec)
    }

    pub fn circle(circle: Circle) -> Self {
        Self {
            circles: vec![circle],
            nodes: DEFAULT_START_NODES,
        }
    }

    pub fn centered(radius: f64) -> Self {
        Self::circle(Circle::centered(radius))
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.circles.is_empty() {
            return Err(Error::Config("contour has no circles".into()));
        }
        if self.nodes < 8 || !self.nodes.is_power_of_two() {
            return Err(Error::Config(format!(
                "nodes per circle must be a power of two >= 8, got {}",
                self.nodes
            )));
        }
        Ok(())
    }

    fn nodes_at(&self, per_circle: usize) -> Vec<(C, C)> {
        self.circles.iter().flat_map(|c| c.nodes(per_circle)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadOptions {
    pub tol: f64,
    pub max_nodes: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_nodes: DEFAULT_MAX_NODES,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// A converged integral with its final per-circle node count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quadrature {
    pub value: C,
    pub nodes: usize,
    pub change: f64,
}

fn converged(new: C, old: C, tol: f64) -> (bool, f64) {
    let change = (new - old).norm();
    (change < tol * new.norm().max(1.0), change)
}

pub fn integrate<F>(f: F, c: &ContourSpec, tol: f64) -> Result<Quadrature>
where
    F: Fn(C) -> C + Sync,
{
    integrate_with(f, c, &QuadOptions::with_tol(tol))
}

pub fn integrate_with<F>(f: F, c: &ContourSpec, opts: &QuadOptions) -> Result<Quadrature>
where
    F: Fn(C) -> C + Sync,
{
    integrate_nd(|z: &[C]| f(z[0]), std::slice::from_ref(c), opts)
}

pub fn integrate2<F>(f: F, c1: &ContourSpec, c2: &ContourSpec, tol: f64) -> Result<Quadrature>
where
    F: Fn(C, C) -> C + Sync,
{
    integrate2_with(f, c1, c2, &QuadOptions::with_tol(tol))
}

pub fn integrate2_with<F>(f: F, c1: &ContourSpec, c2: &ContourSpec, opts: &QuadOptions) -> Result<Quadrature>
where
    F: Fn(C, C) -> C + Sync,
{
    integrate_nd(|z: &[C]| f(z[0], z[1]), &[c1.clone(), c2.clone()], opts)
}

/// `(1/2πi)^d ∮…∮ f` over a product of contours; all node counts are doubled
/// together until successive estimates agree.
pub fn integrate_nd<F>(f: F, contours: &[ContourSpec], opts: &QuadOptions) -> Result<Quadrature>
where
    F: Fn(&[C]) -> C + Sync,
{
    for c in contours {
        c.validate()?;
    }
    if contours.is_empty() {
        return Ok(Quadrature {
            value: f(&[]),
            nodes: 0,
            change: 0.0,
        });
    }
    let mut scale = 1usize;
    let mut previous = tensor_sum(&f, contours, scale);
    loop {
        scale *= 2;
        let nodes = contours.iter().map(|c| c.nodes * scale).max().unwrap_or(0);
        let current = tensor_sum(&f, contours, scale);
        let (ok, change) = converged(current, previous, opts.tol);
        if ok {
            return Ok(Quadrature {
                value: current,
                nodes,
                change,
            });
        }
        if nodes * 2 > opts.max_nodes {
            return Err(Error::NonConvergence {
                nodes,
                last: current,
                previous,
            });
        }
        previous = current;
    }
}

/// Fixed-node tensor trapezoid sum, no convergence control.
pub fn tensor_sum<F>(f: &F, contours: &[ContourSpec], scale: usize) -> C
where
    F: Fn(&[C]) -> C + Sync,
{
    let grids: Vec<Vec<(C, C)>> = contours.iter().map(|c| c.nodes_at(c.nodes * scale)).collect();
    let d = grids.len();
    grids[0]
        .par_iter()
        .map(|&(z0, w0)| {
            let mut idx = vec![0usize; d];
            let mut z = vec![z0; d];
            let mut acc = C::new(0.0, 0.0);
            if grids[1..].iter().any(|g| g.is_empty()) {
                return acc;
            }
            loop {
                let mut w = w0;
                for k in 1..d {
                    let (zk, wk) = grids[k][idx[k]];
                    z[k] = zk;
                    w *= wk;
                }
                acc += f(&z) * w;
                let mut k = d;
                loop {
                    if k == 1 {
                        return acc;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < grids[k].len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        })
        .sum()
}
