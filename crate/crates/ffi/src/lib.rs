//! C ABI over `kvgeom`.
//!
//! Algebras are opaque handles created by `kvg_algebra_builtin` or
//! `kvg_algebra_from_json` and released with `kvg_algebra_free`. Every
//! fallible call returns a `KvgStatus`; on failure the message is available
//! from `kvg_last_error_message` on the same thread until the next failing
//! call. Vectors are `double` arrays of length `kvg_algebra_dim`. Strings
//! returned by the library are freed with `kvg_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kvgeom::matrix_lie::{self, kappa_t, phi_t};
use kvgeom::nalgebra::DVector;
use kvgeom::poisson::{eq1_numeric_residual, extract_ab};
use kvgeom::{BchOrder, KvError, PointV, QuadraticLieAlgebra};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KvgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The point lies outside the region where the construction is defined.
    OutsideDomain = 3,
    /// Quadrature failure, non-finite value or loss of subalgebra closure.
    NumericalFailure = 4,
    Parse = 5,
    Io = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

/// BCH word order.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KvgOrder {
    Xy = 0,
    Yx = 1,
}

/// Opaque quadratic Lie algebra.
pub struct KvgAlgebra {
    inner: QuadraticLieAlgebra,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &KvError) -> KvgStatus {
    match e {
        KvError::OutsideExpDomain(_) | KvError::OutsideV(_) | KvError::DomainExit { .. } => KvgStatus::OutsideDomain,
        KvError::NonFinite | KvError::Closure { .. } | KvError::Quadrature { .. } | KvError::Infeasible { .. } => {
            KvgStatus::NumericalFailure
        }
        KvError::Parse(_) | KvError::Json(_) => KvgStatus::Parse,
        KvError::Io(_) => KvgStatus::Io,
        _ => KvgStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (KvgStatus, String)>) -> KvgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KvgStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            KvgStatus::Internal
        }
    }
}

fn lift(e: KvError) -> (KvgStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (KvgStatus, String) {
    (KvgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (KvgStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (KvgStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn alg_arg<'a>(p: *const KvgAlgebra) -> Result<&'a QuadraticLieAlgebra, (KvgStatus, String)> {
    p.as_ref().map(|a| &a.inner).ok_or_else(|| null("algebra"))
}

unsafe fn vec_arg(p: *const f64, d: usize, what: &str) -> Result<DVector<f64>, (KvgStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(DVector::from_column_slice(std::slice::from_raw_parts(p, d)))
}

unsafe fn point_arg(x: *const f64, y: *const f64, d: usize) -> Result<PointV, (KvgStatus, String)> {
    Ok(PointV::new(vec_arg(x, d, "x")?, vec_arg(y, d, "y")?))
}

unsafe fn write_vec(out: *mut f64, v: &DVector<f64>, what: &str) -> Result<(), (KvgStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
    Ok(())
}

unsafe fn write_handle(out: *mut *mut KvgAlgebra, alg: QuadraticLieAlgebra) {
    *out = Box::into_raw(Box::new(KvgAlgebra { inner: alg }));
}

/// Message of the last failing call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kvg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a built-in algebra (`so3`, `sl2`, `gl2`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kvg_algebra_builtin(name: *const c_char, out: *mut *mut KvgAlgebra) -> KvgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let alg = matrix_lie::builtin(str_arg(name, "name")?).map_err(lift)?;
        write_handle(out, alg);
        Ok(())
    })
}

/// Creates an algebra from a JSON descriptor `{name, basis, form?, domainRadius?}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kvg_algebra_from_json(json: *const c_char, out: *mut *mut KvgAlgebra) -> KvgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let alg = QuadraticLieAlgebra::from_json(str_arg(json, "json")?).map_err(lift)?;
        write_handle(out, alg);
        Ok(())
    })
}

/// Releases a handle; null is a no-op.
///
/// # Safety
/// `alg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kvg_algebra_free(alg: *mut KvgAlgebra) {
    if !alg.is_null() {
        drop(Box::from_raw(alg));
    }
}

/// Dimension of the algebra; 0 for a null handle.
///
/// # Safety
/// `alg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kvg_algebra_dim(alg: *const KvgAlgebra) -> usize {
    alg.as_ref().map_or(0, |a| a.inner.dim())
}

/// Writes `Φ_t(x, y) = t⁻¹ log(e^{tx} e^{ty})` to `out`.
///
/// # Safety
/// `x`, `y`, `out` must each point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn kvg_phi_t(
    alg: *const KvgAlgebra,
    t: f64,
    x: *const f64,
    y: *const f64,
    out: *mut f64,
) -> KvgStatus {
    guard(|| {
        let alg = alg_arg(alg)?;
        let p = point_arg(x, y, alg.dim())?;
        write_vec(out, &phi_t(alg, t, &p).map_err(lift)?, "out")
    })
}

/// Writes the Jacobian ratio `κ_t(x, y)` to `out`.
///
/// # Safety
/// `x`, `y` must each point to `dim` doubles; `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn kvg_kappa_t(
    alg: *const KvgAlgebra,
    t: f64,
    x: *const f64,
    y: *const f64,
    out: *mut f64,
) -> KvgStatus {
    guard(|| {
        let alg = alg_arg(alg)?;
        let p = point_arg(x, y, alg.dim())?;
        let k = kappa_t(alg, t, &p).map_err(lift)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = k;
        Ok(())
    })
}

/// Pointwise values of the pair `(A, B)` at `(x, y)`.
///
/// # Safety
/// All four arrays must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn kvg_extract_ab(
    alg: *const KvgAlgebra,
    x: *const f64,
    y: *const f64,
    a_out: *mut f64,
    b_out: *mut f64,
) -> KvgStatus {
    guard(|| {
        let alg = alg_arg(alg)?;
        let p = point_arg(x, y, alg.dim())?;
        let (a, b) = extract_ab(alg, &p).map_err(lift)?;
        write_vec(a_out, &a, "a_out")?;
        write_vec(b_out, &b, "b_out")
    })
}

/// Max-norm residual of the first KV equation for the values `a`, `b` at `(x, y)`.
///
/// # Safety
/// `x`, `y`, `a`, `b` must each point to `dim` doubles; `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn kvg_eq1_residual(
    alg: *const KvgAlgebra,
    x: *const f64,
    y: *const f64,
    a: *const f64,
    b: *const f64,
    out: *mut f64,
) -> KvgStatus {
    guard(|| {
        let alg = alg_arg(alg)?;
        let d = alg.dim();
        let p = point_arg(x, y, d)?;
        let r = eq1_numeric_residual(alg, &p, &vec_arg(a, d, "a")?, &vec_arg(b, d, "b")?).map_err(lift)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = r;
        Ok(())
    })
}

/// BCH series through `degree` (1..=10) as the JSON report; free with `kvg_string_free`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kvg_bch_json(degree: usize, order: KvgOrder, out: *mut *mut c_char) -> KvgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(1..=kvgeom::cli::MAX_DEGREE).contains(&degree) {
            return Err((KvgStatus::InvalidArgument, format!("degree {degree} outside 1..=10")));
        }
        let order = match order {
            KvgOrder::Xy => BchOrder::XY,
            KvgOrder::Yx => BchOrder::YX,
        };
        let series = kvgeom::bch(degree, order);
        let json = kvgeom::bch_cache::BchFile::from_series(&series, order).to_json().map_err(lift)?;
        *out = CString::new(json).map_err(|e| (KvgStatus::Internal, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Frees a string returned by this library; null is a no-op.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kvg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
