//! Pfaffians of skew-symmetric complex matrices.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

type C = Complex64;

const ONE: C = C::new(1.0, 0.0);
const ZERO: C = C::new(0.0, 0.0);

/// Dimension up to which the recursive expansion is used.
pub const EXPANSION_MAX_DIM: usize = 8;

/// Dense skew-symmetric matrix. Construction projects onto `(A − Aᵀ)/2` and
/// keeps the size of the discarded symmetric part.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkewMatrix {
    dim: usize,
    #[serde(serialize_with = "serialize_entries")]
    entries: Vec<C>,
    defect: f64,
}

fn serialize_entries<S: serde::Serializer>(v: &[C], s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<[f64; 2]> = v.iter().map(|c| [c.re, c.im]).collect();
    pairs.serialize(s)
}

impl SkewMatrix {
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C) -> Result<Self> {
        if dim % 2 == 1 {
            return Err(Error::OddDimension(dim));
        }
        let raw: Vec<C> = (0..dim * dim).map(|k| f(k / dim, k % dim)).collect();
        let mut entries = vec![ZERO; dim * dim];
        let mut defect = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let a = raw[i * dim + j];
                let b = raw[j * dim + i];
                entries[i * dim + j] = (a - b) * 0.5;
                defect = defect.max(((a + b) * 0.5).norm());
            }
        }
        Ok(Self { dim, entries, defect })
    }

    pub fn from_rows(rows: &[Vec<C>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::LengthMismatch("matrix rows must be square".into()));
        }
        Self::from_fn(dim, |i, j| rows[i][j])
    }

    /// Builds from the strict upper triangle, row by row.
    pub fn from_upper(dim: usize, upper: &[C]) -> Result<Self> {
        if upper.len() != dim * dim.saturating_sub(1) / 2 {
            return Err(Error::LengthMismatch(format!(
                "{} upper entries for dimension {dim}",
                upper.len()
            )));
        }
        let mut full = vec![ZERO; dim * dim];
        let mut k = 0;
        for i in 0..dim {
            for j in i + 1..dim {
                full[i * dim + j] = upper[k];
                full[j * dim + i] = -upper[k];
                k += 1;
            }
        }
        Self::from_fn(dim, |i, j| full[i * dim + j])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C {
        self.entries[i * self.dim + j]
    }

    /// Largest entry of the symmetric part removed at construction.
    pub fn asymmetry_defect(&self) -> f64 {
        self.defect
    }

    pub fn rows(&self) -> Vec<Vec<C>> {
        self.entries.chunks(self.dim.max(1)).map(|r| r.to_vec()).collect()
    }

    /// Applies a simultaneous row and column permutation: `B[i][j] = A[p[i]][p[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim {
            return Err(Error::LengthMismatch("permutation length".into()));
        }
        Self::from_fn(self.dim, |i, j| self.get(perm[i], perm[j]))
    }

    pub fn determinant(&self) -> C {
        crate::symfunc::determinant(self.dim, |i, j| self.get(i, j))
    }
}

pub fn pfaffian(a: &SkewMatrix) -> C {
    if a.dim <= EXPANSION_MAX_DIM {
        pfaffian_expansion(a)
    } else {
        pfaffian_elimination(a)
    }
}

/// Recursive first-row expansion.
pub fn pfaffian_expansion(a: &SkewMatrix) -> C {
    let idx: Vec<usize> = (0..a.dim).collect();
    expand(a, &idx)
}

fn expand(a: &SkewMatrix, idx: &[usize]) -> C {
    match idx.len() {
        0 => ONE,
        2 => a.get(idx[0], idx[1]),
        _ => {
            let first = idx[0];
            let mut total = ZERO;
            let mut rest = Vec::with_capacity(idx.len() - 2);
            for j in 1..idx.len() {
                let entry = a.get(first, idx[j]);
                if entry == ZERO {
                    continue;
                }
                rest.clear();
                rest.extend(idx[1..].iter().enumerate().filter(|&(k, _)| k + 1 != j).map(|(_, &v)| v));
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                total += entry * sign * expand(a, &rest);
            }
            total
        }
    }
}

/// Skew tridiagonal reduction with largest-magnitude pivoting.
pub fn pfaffian_elimination(a: &SkewMatrix) -> C {
    let n = a.dim;
    let mut m = a.entries.clone();
    let at = |m: &Vec<C>, i: usize, j: usize| m[i * n + j];
    let mut pf = ONE;
    for k in (0..n.saturating_sub(1)).step_by(2) {
        let kp = (k + 1..n)
            .max_by(|&x, &y| at(&m, x, k).norm().total_cmp(&at(&m, y, k).norm()))
            .unwrap();
        if kp != k + 1 {
            for c in 0..n {
                m.swap((k + 1) * n + c, kp * n + c);
            }
            for r in 0..n {
                m.swap(r * n + k + 1, r * n + kp);
            }
            pf = -pf;
        }
        let pivot = at(&m, k, k + 1);
        if pivot == ZERO {
            return ZERO;
        }
        pf *= pivot;
        if k + 2 < n {
            let tau: Vec<C> = (k + 2..n).map(|c| at(&m, k, c) / pivot).collect();
            let col: Vec<C> = (k + 2..n).map(|r| at(&m, r, k + 1)).collect();
            for (ri, r) in (k + 2..n).enumerate() {
                for (ci, c) in (k + 2..n).enumerate() {
                    m[r * n + c] += tau[ri] * col[ci] - col[ri] * tau[ci];
                }
            }
        }
    }
    pf
}

/// Relative residual of `Pf[(u_j − u_k)/(1 − u_j u_k)] = ∏_{j<k} (u_j − u_k)/(1 − u_j u_k)`.
pub fn verify_schur_pfaffian(u: &[C]) -> Result<f64> {
    let n = u.len();
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    for j in 0..n {
        for k in j + 1..n {
            if ONE - u[j] * u[k] == ZERO {
                return Err(Error::Pole {
                    context: format!("u[{j}] u[{k}] = 1"),
                });
            }
        }
    }
    let m = SkewMatrix::from_fn(n, |j, k| (u[j] - u[k]) / (ONE - u[j] * u[k]))?;
    let mut prod = ONE;
    for j in 0..n {
        for k in j + 1..n {
            prod *= (u[j] - u[k]) / (ONE - u[j] * u[k]);
        }
    }
    Ok((pfaffian(&m) - prod).norm() / (prod.norm() + 1.0))
}
