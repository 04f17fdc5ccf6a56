//! C interface to `hidemix`.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `_free` function. Every fallible call returns a status code;
//! on failure a message is available from [`hidemix_last_error`] on the same
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use hidemix::memory::{peano_error, quadrature_error};
use hidemix::stepper::Method;
use hidemix::verify::{convergence_study, manufactured_problem, ConvergenceReport, Metric, StudySpec};
use hidemix::{Error, Mesh, Rect, SpacePair};

pub const HIDEMIX_OK: i32 = 0;
pub const HIDEMIX_NULL_POINTER: i32 = 1;
pub const HIDEMIX_INVALID_ARGUMENT: i32 = 2;
pub const HIDEMIX_NUMERICAL: i32 = 3;
pub const HIDEMIX_INTERNAL: i32 = 4;

/// Space pair selector: lowest order.
pub const HIDEMIX_PAIR_RT0_DG0: i32 = 0;
/// Space pair selector: linear.
pub const HIDEMIX_PAIR_RT1_DG1: i32 = 1;

pub const HIDEMIX_METHOD_EXTENDED: i32 = 0;
pub const HIDEMIX_METHOD_STANDARD: i32 = 1;

/// A triangulated rectangle.
pub struct HidemixMesh(Arc<Mesh>);

/// Result of a spatial convergence study.
pub struct HidemixReport(ConvergenceReport);

/// Scalar callback `g(s, user_data)`.
pub type HidemixScalarFn = Option<unsafe extern "C" fn(s: f64, user_data: *mut c_void) -> f64>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) | Error::ElementOutOfRange { .. } | Error::DimensionMismatch { .. } => {
            HIDEMIX_INVALID_ARGUMENT
        }
        Error::Io(_) => HIDEMIX_INTERNAL,
        _ => HIDEMIX_NUMERICAL,
    }
}

/// Runs `f`, turning errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (i32, String)>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HIDEMIX_OK
        }
        Ok(Err((code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            HIDEMIX_INTERNAL
        }
    }
}

fn lib_err(e: Error) -> (i32, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (i32, String) {
    (HIDEMIX_NULL_POINTER, format!("{what} is null"))
}

fn bad(msg: impl Into<String>) -> (i32, String) {
    (HIDEMIX_INVALID_ARGUMENT, msg.into())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (i32, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), (i32, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread (empty after a success).
/// Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn hidemix_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Structured `nx × ny` mesh of `[x0, x1] × [y0, y1]`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hidemix_mesh_structured(
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    out: *mut *mut HidemixMesh,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mesh = Mesh::structured(nx, ny, Rect::new(x0, y0, x1, y1)).map_err(lib_err)?;
        write(out, Box::into_raw(Box::new(HidemixMesh(Arc::new(mesh)))), "out")
    })
}

/// Uniform red refinement: a new mesh with four times the triangles.
///
/// # Safety
/// `mesh` must come from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hidemix_mesh_refine(mesh: *const HidemixMesh, out: *mut *mut HidemixMesh) -> i32 {
    guard(|| {
        let m = deref(mesh, "mesh")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let fine = m.0.refine_uniform().map_err(lib_err)?;
        write(out, Box::into_raw(Box::new(HidemixMesh(Arc::new(fine)))), "out")
    })
}

/// Vertex, edge and triangle counts. Any output pointer may be null.
///
/// # Safety
/// `mesh` must come from this library; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn hidemix_mesh_counts(
    mesh: *const HidemixMesh,
    vertices: *mut usize,
    edges: *mut usize,
    triangles: *mut usize,
) -> i32 {
    guard(|| {
        let m = &deref(mesh, "mesh")?.0;
        for (p, v) in [(vertices, m.num_vertices()), (edges, m.num_edges()), (triangles, m.num_triangles())] {
            if !p.is_null() {
                p.write(v);
            }
        }
        Ok(())
    })
}

/// Longest edge length.
///
/// # Safety
/// `mesh` must come from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hidemix_mesh_size(mesh: *const HidemixMesh, out: *mut f64) -> i32 {
    guard(|| {
        let m = deref(mesh, "mesh")?;
        write(out, m.0.mesh_size(), "out")
    })
}

/// Frees a mesh. Null is a no-op.
///
/// # Safety
/// `mesh` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hidemix_mesh_free(mesh: *mut HidemixMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

fn scalar_fn(g: HidemixScalarFn, user_data: *mut c_void) -> Result<impl Fn(f64) -> f64, (i32, String)> {
    let g = g.ok_or_else(|| null("callback"))?;
    let ud = user_data as usize;
    Ok(move |s: f64| unsafe { g(s, ud as *mut c_void) })
}

/// Composite midpoint error `∫₀^{nk} g − k Σ g(midpoints)` over `n` panels.
///
/// # Safety
/// `g` must be safe to call with `user_data`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hidemix_quadrature_error(
    g: HidemixScalarFn,
    user_data: *mut c_void,
    n: usize,
    k: f64,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let f = scalar_fn(g, user_data)?;
        if n == 0 || !(k > 0.0 && k.is_finite()) {
            return Err(bad("need n > 0 and a positive finite k"));
        }
        write(out, quadrature_error(&f, n, k), "out")
    })
}

/// The same error computed from the second derivative `g2` of the integrand.
///
/// # Safety
/// As for [`hidemix_quadrature_error`].
#[no_mangle]
pub unsafe extern "C" fn hidemix_peano_error(
    g2: HidemixScalarFn,
    user_data: *mut c_void,
    n: usize,
    k: f64,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let f = scalar_fn(g2, user_data)?;
        if n == 0 || !(k > 0.0 && k.is_finite()) {
            return Err(bad("need n > 0 and a positive finite k"));
        }
        write(out, peano_error(&f, n, k), "out")
    })
}

/// Spatial convergence study on a catalog problem with `k = coupling · h`
/// and final time 1.
///
/// # Safety
/// `problem` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hidemix_convergence_study(
    problem: *const c_char,
    pair: i32,
    method: i32,
    base_cells: usize,
    levels: usize,
    coupling: f64,
    workers: usize,
    out: *mut *mut HidemixReport,
) -> i32 {
    guard(|| {
        if problem.is_null() {
            return Err(null("problem"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let name = CStr::from_ptr(problem).to_str().map_err(|_| bad("problem name is not UTF-8"))?;
        let p = manufactured_problem(name).map_err(lib_err)?;
        let pair = match pair {
            HIDEMIX_PAIR_RT0_DG0 => SpacePair::Rt0Dg0,
            HIDEMIX_PAIR_RT1_DG1 => SpacePair::Rt1Dg1,
            other => return Err(bad(format!("unknown space pair {other}"))),
        };
        let method = match method {
            HIDEMIX_METHOD_EXTENDED => Method::Extended,
            HIDEMIX_METHOD_STANDARD => Method::Standard,
            other => return Err(bad(format!("unknown method {other}"))),
        };
        if base_cells == 0 || levels < 2 || workers == 0 || !(coupling > 0.0) {
            return Err(bad("need base_cells > 0, levels >= 2, workers > 0 and coupling > 0"));
        }
        let spec = StudySpec {
            method,
            pair,
            base_cells,
            levels,
            coupling,
            workers,
            ..StudySpec::default()
        };
        let report = convergence_study(&p, &spec).map_err(lib_err)?;
        if let Some(msg) = &report.aborted {
            return Err((HIDEMIX_NUMERICAL, msg.clone()));
        }
        write(out, Box::into_raw(Box::new(HidemixReport(report))), "out")
    })
}

/// Number of levels in a report.
///
/// # Safety
/// `report` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn hidemix_report_level_count(report: *const HidemixReport, out: *mut usize) -> i32 {
    guard(|| {
        let r = deref(report, "report")?;
        write(out, r.0.rows.len(), "out")
    })
}

/// `max_n ‖u − U‖` on level `level`.
///
/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hidemix_report_error_u(report: *const HidemixReport, level: usize, out: *mut f64) -> i32 {
    guard(|| {
        let r = deref(report, "report")?;
        let row = r.0.rows.get(level).ok_or_else(|| bad(format!("level {level} out of range")))?;
        write(out, row.get(Metric::ULinfL2).unwrap_or(f64::NAN), "out")
    })
}

/// Observed order of the `u` error between `level - 1` and `level`;
/// NaN on level 0 or when an error is at round-off.
///
/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hidemix_report_order_u(report: *const HidemixReport, level: usize, out: *mut f64) -> i32 {
    guard(|| {
        let r = deref(report, "report")?;
        if level >= r.0.rows.len() {
            return Err(bad(format!("level {level} out of range")));
        }
        write(out, r.0.order(Metric::ULinfL2, level).unwrap_or(f64::NAN), "out")
    })
}

/// The report as CSV. Free the string with [`hidemix_string_free`].
///
/// # Safety
/// `report` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hidemix_report_csv(report: *const HidemixReport, out: *mut *mut c_char) -> i32 {
    guard(|| {
        let r = deref(report, "report")?;
        let s = CString::new(r.0.to_csv()).map_err(|_| (HIDEMIX_INTERNAL, "CSV contains NUL".into()))?;
        write(out, s.into_raw(), "out")
    })
}

/// Frees a report. Null is a no-op.
///
/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hidemix_report_free(report: *mut HidemixReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Frees a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hidemix_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use std::ptr;

    use super::*;

    #[test]
    fn last_error_is_cleared_by_success() {
        let mut m: *mut HidemixMesh = ptr::null_mut();
        unsafe {
            assert_eq!(hidemix_mesh_structured(0, 1, 0.0, 0.0, 1.0, 1.0, &mut m), HIDEMIX_INVALID_ARGUMENT);
            assert!(!CStr::from_ptr(hidemix_last_error()).to_bytes().is_empty());
            assert_eq!(hidemix_mesh_structured(1, 1, 0.0, 0.0, 1.0, 1.0, &mut m), HIDEMIX_OK);
            assert!(CStr::from_ptr(hidemix_last_error()).to_bytes().is_empty());
            hidemix_mesh_free(m);
        }
    }

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::Config("x".into())), HIDEMIX_INVALID_ARGUMENT);
        assert_eq!(status_of(&Error::Divergence { step: 3 }), HIDEMIX_NUMERICAL);
        assert_eq!(status_of(&Error::SingularMatrix { pivot: 0 }), HIDEMIX_NUMERICAL);
    }
}
