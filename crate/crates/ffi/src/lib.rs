//! C ABI over `pfschur`.
//!
//! Every function returns a [`PfsStatus`]; on failure the message is available
//! from [`pfs_last_error`] on the calling thread until the next call.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use num_complex::Complex64;
use pfschur::kernels::{correlation_via_kernel, correlation_via_q_extraction, KernelConfig, QExtractionConfig, SignConvention};
use pfschur::measures::{correlation_oracle, partition_function_closed, MeasureKind, PointSet, ProcessSpec};
use pfschur::pfaffian::{pfaffian, SkewMatrix};
use pfschur::symfunc::Specialization;
use pfschur::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PfsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Divergence = 3,
    NonConvergence = 4,
    Asymmetry = 5,
    Pole = 6,
    Panic = 7,
}

/// `K22` denominator convention.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PfsSign {
    /// `(zw − 1)`.
    ZwMinusOne = 0,
    /// `(1 − zw)`.
    OneMinusZw = 1,
}

/// Opaque multi-level specialization data.
pub struct PfsProcess {
    spec: ProcessSpec,
}

/// A correlation value with its diagnostic.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PfsValue {
    pub value: f64,
    /// Imaginary part magnitude for kernel results, truncation tail for oracle results.
    pub diagnostic: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PfsStatus {
    match e {
        Error::Divergence { .. } => PfsStatus::Divergence,
        Error::NonConvergence { .. } => PfsStatus::NonConvergence,
        Error::Asymmetry { .. } => PfsStatus::Asymmetry,
        Error::Pole { .. } | Error::Coincident { .. } => PfsStatus::Pole,
        _ => PfsStatus::InvalidArgument,
    }
}

struct Fail(PfsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PfsStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PfsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PfsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PfsStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be null or valid for `n` reads.
unsafe fn view<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn split_levels(values: *const f64, lens: *const usize, m: usize, what: &str) -> Result<Vec<Specialization>, Fail> {
    let lens = view(lens, m, what)?;
    let total = lens.iter().sum();
    let flat = view(values, total, what)?;
    let mut out = Vec::with_capacity(m);
    let mut at = 0;
    for &n in lens {
        out.push(Specialization::real(&flat[at..at + n]));
        at += n;
    }
    Ok(out)
}

unsafe fn handle<'a>(p: *const PfsProcess) -> Result<&'a PfsProcess, Fail> {
    p.as_ref().ok_or_else(|| null("process"))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output"));
    }
    out.write(v);
    Ok(())
}

unsafe fn points(levels: *const usize, positions: *const i64, d: usize) -> Result<PointSet, Fail> {
    let positions = view(positions, d, "positions")?;
    let levels = if levels.is_null() { vec![1; d] } else { view(levels, d, "levels")?.to_vec() };
    Ok(PointSet::new(levels.into_iter().zip(positions.iter().copied()).collect()))
}

/// Message for the most recent failure on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn pfs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a process with `m` levels. Level `i` takes `plus_lens[i]` consecutive
/// values of `plus_values` for `ρ+_i` and likewise `minus_*` for `ρ−_{i−1}`.
///
/// # Safety
/// Arrays must hold the stated number of elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pfs_process_new(
    m: usize,
    plus_values: *const f64,
    plus_lens: *const usize,
    minus_values: *const f64,
    minus_lens: *const usize,
    out: *mut *mut PfsProcess,
) -> PfsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output"));
        }
        let plus = split_levels(plus_values, plus_lens, m, "plus")?;
        let minus = split_levels(minus_values, minus_lens, m, "minus")?;
        let spec = ProcessSpec::new(plus, minus)?;
        spec.validate()?;
        out.write(Box::into_raw(Box::new(PfsProcess { spec })));
        Ok(())
    })
}

/// # Safety
/// `p` must come from [`pfs_process_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pfs_process_free(p: *mut PfsProcess) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of levels.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pfs_process_levels(p: *const PfsProcess, out: *mut usize) -> PfsStatus {
    guard(|| write(out, handle(p)?.spec.m()))
}

/// Closed-form normalization of the Pfaffian Schur process.
///
/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pfs_partition_function(p: *const PfsProcess, out: *mut f64) -> PfsStatus {
    guard(|| {
        let z = partition_function_closed(&handle(p)?.spec, MeasureKind::Pfaffian)?;
        write(out, z)
    })
}

/// `ρ(T)` by the Pfaffian of the contour-integral kernel. `levels` may be null for all-level-1.
///
/// # Safety
/// `levels` (if non-null) and `positions` must hold `d` elements; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pfs_correlation_kernel(
    p: *const PfsProcess,
    levels: *const usize,
    positions: *const i64,
    d: usize,
    sign: PfsSign,
    quad_tol: f64,
    out: *mut PfsValue,
) -> PfsStatus {
    guard(|| {
        let h = handle(p)?;
        let pts = points(levels, positions, d)?;
        let sign = match sign {
            PfsSign::ZwMinusOne => SignConvention::ZwMinusOne,
            PfsSign::OneMinusZw => SignConvention::OneMinusZw,
        };
        let mut cfg = KernelConfig::default().with_sign(sign);
        if quad_tol > 0.0 {
            cfg.quad_tol = quad_tol;
        }
        let k = correlation_via_kernel(&h.spec, &pts, &cfg)?;
        write(
            out,
            PfsValue {
                value: k.value,
                diagnostic: k.imag_defect,
            },
        )
    })
}

/// `ρ(T)` by truncated enumeration up to weight `truncation`.
///
/// # Safety
/// As [`pfs_correlation_kernel`].
#[no_mangle]
pub unsafe extern "C" fn pfs_correlation_oracle(
    p: *const PfsProcess,
    levels: *const usize,
    positions: *const i64,
    d: usize,
    truncation: usize,
    out: *mut PfsValue,
) -> PfsStatus {
    guard(|| {
        let h = handle(p)?;
        let pts = points(levels, positions, d)?;
        let o = correlation_oracle(&h.spec, &pts, truncation, truncation)?;
        write(
            out,
            PfsValue {
                value: o.value.re,
                diagnostic: o.tail,
            },
        )
    })
}

/// `ρ(T)` for a single-level process by coefficient extraction in `q`.
///
/// # Safety
/// `positions` must hold `d` elements; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pfs_correlation_q_extraction(
    p: *const PfsProcess,
    positions: *const i64,
    d: usize,
    out: *mut PfsValue,
) -> PfsStatus {
    guard(|| {
        let h = handle(p)?;
        if h.spec.m() != 1 {
            return Err(Fail(PfsStatus::InvalidArgument, "q-extraction needs a single-level process".into()));
        }
        let t = view(positions, d, "positions")?;
        let q = correlation_via_q_extraction(&h.spec.rho_plus[0], &h.spec.rho_minus[0], t, &QExtractionConfig::default())?;
        write(
            out,
            PfsValue {
                value: q.value,
                diagnostic: q.imag_defect,
            },
        )
    })
}

/// Pfaffian of a `dim × dim` skew-symmetric complex matrix in row-major split storage.
/// `im` may be null for a real matrix. Inputs that are not skew-symmetric to roundoff are rejected.
///
/// # Safety
/// `re` (and `im` if non-null) must hold `dim²` elements; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn pfs_pfaffian(
    dim: usize,
    re: *const f64,
    im: *const f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> PfsStatus {
    guard(|| {
        let n = dim.checked_mul(dim).ok_or_else(|| Fail(PfsStatus::InvalidArgument, "dimension overflow".into()))?;
        let re = view(re, n, "re")?;
        let im = if im.is_null() { None } else { Some(view(im, n, "im")?) };
        let at = |i: usize, j: usize| Complex64::new(re[i * dim + j], im.map_or(0.0, |v| v[i * dim + j]));
        let rows: Vec<Vec<Complex64>> = (0..dim).map(|i| (0..dim).map(|j| at(i, j)).collect()).collect();
        let m = SkewMatrix::from_rows(&rows)?;
        let scale = rows.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
        let limit = 1e-12 * scale;
        if m.asymmetry_defect() > limit {
            return Err(Error::Asymmetry {
                defect: m.asymmetry_defect(),
                limit,
            }
            .into());
        }
        let pf = pfaffian(&m);
        write(out_re, pf.re)?;
        write(out_im, pf.im)
    })
}
