//! C interface. Every function returns an [`LlStatus`]; on failure the message is available
//! from [`ll_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use lightlike::graph::MaximalGraph;
use lightlike::pipeline::{run_pipeline, solve_polygon, write_outputs, PipelineConfig, Stage};
use lightlike::tessellate::{alternating_labels, assign_heights, classify, js_check, Point2};
use lightlike::{Error, LorentzVec3};
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    OutsideDomain = 4,
    DegenerateVector = 5,
    BufferTooSmall = 6,
    Io = 7,
    Config = 20,
    NotInClass = 21,
    ConditionsFail = 22,
    Heights = 23,
    SolverFailed = 24,
    Sampling = 25,
    Extension = 26,
    Periodize = 27,
    VerificationFailed = 28,
    Export = 29,
    Panic = 99,
}

/// Opaque handle to a solved maximal graph.
pub struct LlPatch {
    graph: MaximalGraph,
    jumps: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> LlStatus {
    match e {
        Error::DegenerateVector => LlStatus::DegenerateVector,
        Error::OutsideDomain(_)
        | Error::BranchCutViolation { .. }
        | Error::Pole(_)
        | Error::MoebiusPole
        | Error::InverseMap { .. } => LlStatus::OutsideDomain,
        Error::Io(_) => LlStatus::Io,
        _ => LlStatus::InvalidInput,
    }
}

fn stage_status(s: Stage) -> LlStatus {
    match s {
        Stage::Config => LlStatus::Config,
        Stage::Classify => LlStatus::NotInClass,
        Stage::JsCheck => LlStatus::ConditionsFail,
        Stage::Heights => LlStatus::Heights,
        Stage::Solve => LlStatus::SolverFailed,
        Stage::Sample => LlStatus::Sampling,
        Stage::Extend => LlStatus::Extension,
        Stage::Periodize => LlStatus::Periodize,
        Stage::Verify => LlStatus::VerificationFailed,
        Stage::Export => LlStatus::Export,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (LlStatus, String)>) -> LlStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LlStatus::Ok,
        Ok(Err((s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("panic inside the library");
            LlStatus::Panic
        }
    }
}

fn lift_err(e: Error) -> (LlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null() -> (LlStatus, String) {
    (LlStatus::NullPointer, "null pointer argument".into())
}

unsafe fn read3(p: *const f64) -> Result<LorentzVec3, (LlStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    let s = std::slice::from_raw_parts(p, 3);
    Ok(LorentzVec3::new(s[0], s[1], s[2]))
}

unsafe fn write3(out: *mut f64, v: LorentzVec3) -> Result<(), (LlStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    std::slice::from_raw_parts_mut(out, 3).copy_from_slice(&v.to_array());
    Ok(())
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, (LlStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (LlStatus::InvalidUtf8, e.to_string()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ll_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. Valid until the next call into the library.
#[no_mangle]
pub extern "C" fn ll_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// `<u, v> = u_x v_x + u_y v_y - u_t v_t`.
///
/// # Safety
/// `u` and `v` point to 3 doubles, `out` to one.
#[no_mangle]
pub unsafe extern "C" fn ll_minkowski(u: *const f64, v: *const f64, out: *mut f64) -> LlStatus {
    guard(|| {
        let (a, b) = (read3(u)?, read3(v)?);
        if out.is_null() {
            return Err(null());
        }
        *out = a.minkowski(&b);
        Ok(())
    })
}

/// Residual of a catalogued implicit surface (`"S1"`, `"S2"`, `"S3"`, `"H"`, `"P"`) at `p = (x, y, t)`.
///
/// # Safety
/// `name` is a NUL-terminated string, `p` points to 3 doubles, `out` to one.
#[no_mangle]
pub unsafe extern "C" fn ll_implicit_residual(name: *const c_char, p: *const f64, out: *mut f64) -> LlStatus {
    guard(|| {
        let name = read_str(name)?;
        let p = read3(p)?;
        if out.is_null() {
            return Err(null());
        }
        *out = lightlike::verify::implicit_residual(name, &p).map_err(lift_err)?;
        Ok(())
    })
}

/// Builds the maximal graph over a counterclockwise polygon with alternating labels.
/// `xy` holds `n` vertex pairs. On success `*out` owns a handle to release with [`ll_patch_free`].
///
/// # Safety
/// `xy` points to `2 n` doubles and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ll_patch_from_polygon(xy: *const f64, n: usize, out: *mut *mut LlPatch) -> LlStatus {
    guard(|| {
        if xy.is_null() || out.is_null() {
            return Err(null());
        }
        *out = std::ptr::null_mut();
        let coords = std::slice::from_raw_parts(xy, 2 * n);
        let vertices: Vec<Point2> = coords.chunks(2).map(|c| Point2::new(c[0], c[1])).collect();
        let class = classify(&vertices).map_err(lift_err)?;
        if !class.in_class || !class.constructible {
            return Err((
                LlStatus::NotInClass,
                class.reason.unwrap_or_else(|| "not in class".into()),
            ));
        }
        let labels = alternating_labels(n);
        let js = js_check(&vertices, &labels).map_err(lift_err)?;
        if !js.passes {
            return Err((
                LlStatus::ConditionsFail,
                js.reason.unwrap_or_else(|| "conditions fail".into()),
            ));
        }
        let poly = assign_heights(&vertices, &labels).map_err(|e| (LlStatus::Heights, e.to_string()))?;
        let rep = solve_polygon(&poly, &Default::default()).map_err(|e| (LlStatus::SolverFailed, e.to_string()))?;
        if !rep.converged {
            return Err((
                LlStatus::SolverFailed,
                format!("residual {:e} after {} iterations", rep.residual_norm, rep.iterations),
            ));
        }
        let graph = MaximalGraph::new(poly, &rep.jumps).map_err(lift_err)?;
        *out = Box::into_raw(Box::new(LlPatch {
            graph,
            jumps: rep.jumps,
        }));
        Ok(())
    })
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `patch` came from [`ll_patch_from_polygon`] and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ll_patch_free(patch: *mut LlPatch) {
    if !patch.is_null() {
        drop(Box::from_raw(patch));
    }
}

/// Copies the jump points into `out` (capacity `cap`) and stores their count in `*len`.
///
/// # Safety
/// `patch` is a live handle, `out` has room for `cap` doubles, `len` is writable.
#[no_mangle]
pub unsafe extern "C" fn ll_patch_jumps(patch: *const LlPatch, out: *mut f64, cap: usize, len: *mut usize) -> LlStatus {
    guard(|| {
        let p = patch.as_ref().ok_or_else(null)?;
        if len.is_null() {
            return Err(null());
        }
        *len = p.jumps.len();
        if cap < p.jumps.len() {
            return Err((
                LlStatus::BufferTooSmall,
                format!("need room for {} values", p.jumps.len()),
            ));
        }
        if out.is_null() {
            return Err(null());
        }
        std::slice::from_raw_parts_mut(out, p.jumps.len()).copy_from_slice(&p.jumps);
        Ok(())
    })
}

/// Harmonic map at `ζ = re + i im` in the upper half-plane; writes `(x, y, t)`.
///
/// # Safety
/// `patch` is a live handle and `out` points to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn ll_patch_eval(patch: *const LlPatch, re: f64, im: f64, out: *mut f64) -> LlStatus {
    guard(|| {
        let p = patch.as_ref().ok_or_else(null)?;
        let x = p.graph.patch().eval(Complex64::new(re, im)).map_err(lift_err)?;
        write3(out, x)
    })
}

/// Height `t = ψ(x, y)` of the graph over an interior point.
///
/// # Safety
/// `patch` is a live handle and `out` points to one double.
#[no_mangle]
pub unsafe extern "C" fn ll_patch_graph_value(patch: *const LlPatch, x: f64, y: f64, out: *mut f64) -> LlStatus {
    guard(|| {
        let p = patch.as_ref().ok_or_else(null)?;
        if out.is_null() {
            return Err(null());
        }
        *out = p.graph.psi(Point2::new(x, y)).map_err(lift_err)?;
        Ok(())
    })
}

/// Runs the full pipeline on a JSON configuration. When `out_dir` is non-NULL, meshes and
/// reports are written there. When `report` is non-NULL it receives the verification report
/// as JSON, to be released with [`ll_string_free`].
///
/// # Safety
/// `config_json` is NUL-terminated; `out_dir` is NULL or NUL-terminated; `report` is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn ll_run_pipeline(
    config_json: *const c_char,
    out_dir: *const c_char,
    report: *mut *mut c_char,
) -> LlStatus {
    guard(|| {
        if !report.is_null() {
            *report = std::ptr::null_mut();
        }
        let cfg = PipelineConfig::from_json(read_str(config_json)?).map_err(|e| (LlStatus::Config, e.to_string()))?;
        let out = run_pipeline(&cfg).map_err(|f| (stage_status(f.stage), f.to_string()))?;
        if !out_dir.is_null() {
            let dir = read_str(out_dir)?;
            let name = cfg.output.name.clone().unwrap_or_else(|| "surface".into());
            write_outputs(&out, Path::new(dir), &name).map_err(|e| (LlStatus::Export, e.to_string()))?;
        }
        if !report.is_null() {
            let s = serde_json_string(&out.verification)?;
            *report = CString::new(s)
                .map_err(|e| (LlStatus::InvalidInput, e.to_string()))?
                .into_raw();
        }
        Ok(())
    })
}

fn serde_json_string(v: &lightlike::verify::VerificationReport) -> Result<String, (LlStatus, String)> {
    serde_json::to_string(v).map_err(|e| (LlStatus::InvalidInput, e.to_string()))
}

/// Releases a string returned by the library; NULL is ignored.
///
/// # Safety
/// `s` came from this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ll_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
