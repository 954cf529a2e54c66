//! C ABI over the `unfitted` library.
//!
//! Objects are opaque handles created by `*_new`/`uf_study_run` and released
//! by the matching `*_free`. Every function returns a [`UfStatus`]; on
//! failure the message is kept per thread and read with
//! [`uf_last_error_message`]. Strings are copied into caller buffers
//! `snprintf`-style: the return value is the full length without the NUL.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use unfitted::mesh::Mesh;
use unfitted::{Error, Geometry, Problem, StudyConfig, StudyReport};

/// Result code of every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    /// Mesh does not resolve the geometry, or the deformation degenerates.
    Geometry = 4,
    /// Not SPD, or the iterative solver did not converge.
    Solver = 5,
    /// A study stopped early. The report holds the completed levels.
    StudyIncomplete = 6,
    OutOfRange = 7,
    Internal = 8,
    Panic = 9,
}

/// Error norm selector for [`uf_report_eoc`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UfNorm {
    L2 = 0,
    H1Semi = 1,
    L2Boundary = 2,
    InterfaceDistance = 3,
}

/// One refinement level of a study.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UfLevel {
    pub level: usize,
    pub h_max: f64,
    pub elements: usize,
    pub active_elements: usize,
    pub cut_elements: usize,
    pub ndof: usize,
    pub err_l2: f64,
    pub err_h1: f64,
    pub err_l2_boundary: f64,
    pub interface_distance: f64,
    pub max_displacement: f64,
    pub iterations: usize,
    pub residual: f64,
    pub solve_seconds: f64,
}

/// Study configuration handle.
pub struct UfConfig(StudyConfig);

/// Finished study handle.
pub struct UfReport(StudyReport);

/// Mesh handle.
pub struct UfMesh(Mesh);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> UfStatus {
    match e {
        Error::InvalidArgument(_) => UfStatus::InvalidArgument,
        Error::Io(_) => UfStatus::Io,
        Error::DegenerateCut(_)
        | Error::GeometryUnresolved(_)
        | Error::SingularDirection(_)
        | Error::DeformationDegenerate(_)
        | Error::InvalidGeometry(_) => UfStatus::Geometry,
        Error::NotSpd(_) | Error::NotConverged { .. } => UfStatus::Solver,
        Error::Internal(_) => UfStatus::Internal,
    }
}

struct Failure(UfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

type Outcome = Result<UfStatus, Failure>;

/// Run `f`, turning errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Outcome) -> UfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            UfStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(UfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(UfStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copy `s` into `buf` (capacity `len`), NUL-terminated and truncated if
/// needed. Returns the full length of `s`.
unsafe fn copy_out(s: &str, buf: *mut c_char, len: usize) -> usize {
    if !buf.is_null() && len > 0 {
        let n = s.len().min(len - 1);
        std::ptr::copy_nonoverlapping(s.as_ptr() as *const c_char, buf, n);
        *buf.add(n) = 0;
    }
    s.len()
}

/// NUL-terminated version string of the library.
#[no_mangle]
pub extern "C" fn uf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the last error message of the calling thread into `buf`.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn uf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| copy_out(&e.borrow(), buf, len))
}

/// New configuration with default values (ring, k = 2, 3 levels).
#[no_mangle]
pub extern "C" fn uf_config_new() -> *mut UfConfig {
    Box::into_raw(Box::new(UfConfig(StudyConfig::default())))
}

/// # Safety
/// `config` must be null or a handle from [`uf_config_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uf_config_free(config: *mut UfConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Set one option by name, with the same keys as the config file
/// (`geometry`, `order`, `levels`, `deformation`, `lambda_scale`, ...).
///
/// # Safety
/// `config` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn uf_config_set(config: *mut UfConfig, key: *const c_char, value: *const c_char) -> UfStatus {
    guard(|| {
        let config = config.as_mut().ok_or_else(|| null("config"))?;
        let (key, value) = (str_arg(key, "key")?, str_arg(value, "value")?);
        let mut next = config.0.clone();
        next.set(key, value)?;
        config.0 = next;
        Ok(UfStatus::Ok)
    })
}

/// Apply a `key = value` file on top of the current values.
///
/// # Safety
/// `config` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn uf_config_load(config: *mut UfConfig, path: *const c_char) -> UfStatus {
    guard(|| {
        let config = config.as_mut().ok_or_else(|| null("config"))?;
        let text = std::fs::read_to_string(Path::new(str_arg(path, "path")?)).map_err(Error::from)?;
        let mut next = config.0.clone();
        next.apply_text(&text)?;
        config.0 = next;
        Ok(UfStatus::Ok)
    })
}

/// Run the study described by `config`. On `Ok` and `StudyIncomplete`,
/// `*out` receives a report handle; otherwise `*out` is null.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uf_study_run(config: *const UfConfig, out: *mut *mut UfReport) -> UfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let config = handle(config, "config")?;
        let report = unfitted::run_study(&config.0)?;
        let status = match &report.failure {
            Some(f) => {
                set_error(f.clone());
                UfStatus::StudyIncomplete
            }
            None => UfStatus::Ok,
        };
        *out = Box::into_raw(Box::new(UfReport(report)));
        Ok(status)
    })
}

/// # Safety
/// `report` must be null or a handle from [`uf_study_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uf_report_free(report: *mut UfReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of completed levels; 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uf_report_num_levels(report: *const UfReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.levels.len())
}

/// Copy level `index` into `*out`.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uf_report_level(report: *const UfReport, index: usize, out: *mut UfLevel) -> UfStatus {
    guard(|| {
        let report = handle(report, "report")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let l = report
            .0
            .levels
            .get(index)
            .ok_or_else(|| Failure(UfStatus::OutOfRange, format!("level {index} of {}", report.0.levels.len())))?;
        *out = UfLevel {
            level: l.level,
            h_max: l.h_max,
            elements: l.elements,
            active_elements: l.active_elements,
            cut_elements: l.cut_elements,
            ndof: l.ndof,
            err_l2: l.errors.l2,
            err_h1: l.errors.h1_semi,
            err_l2_boundary: l.errors.l2_boundary,
            interface_distance: l.interface_distance,
            max_displacement: l.max_displacement,
            iterations: l.iterations,
            residual: l.residual,
            solve_seconds: l.solve_time.as_secs_f64(),
        };
        Ok(UfStatus::Ok)
    })
}

/// EOC between levels `pair` and `pair + 1` for the chosen norm. A
/// saturated (zero) error gives NaN.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uf_report_eoc(report: *const UfReport, norm: UfNorm, pair: usize, out: *mut f64) -> UfStatus {
    guard(|| {
        let report = &handle(report, "report")?.0;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let rates = match norm {
            UfNorm::L2 => report.eoc_l2(),
            UfNorm::H1Semi => report.eoc_h1(),
            UfNorm::L2Boundary => report.eoc_l2_boundary(),
            UfNorm::InterfaceDistance => report.eoc_interface_distance(),
        };
        let r = rates
            .get(pair)
            .ok_or_else(|| Failure(UfStatus::OutOfRange, format!("level pair {pair} of {}", rates.len())))?;
        *out = r.unwrap_or(f64::NAN);
        Ok(UfStatus::Ok)
    })
}

/// Copy the CSV report into `buf`; returns its full length, 0 for a null
/// handle.
///
/// # Safety
/// `report` must be null or a live handle; `buf` null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn uf_report_csv(report: *const UfReport, buf: *mut c_char, len: usize) -> usize {
    match report.as_ref() {
        Some(r) => copy_out(&r.0.csv(), buf, len),
        None => 0,
    }
}

/// Write `<tag>.csv` and `<tag>.svg` into directory `dir`.
///
/// # Safety
/// `report` must be a live handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn uf_report_write(report: *const UfReport, dir: *const c_char) -> UfStatus {
    guard(|| {
        let report = handle(report, "report")?;
        report.0.write(Path::new(str_arg(dir, "dir")?))?;
        Ok(UfStatus::Ok)
    })
}

/// Mesh of refinement level `level` for a built-in geometry
/// (`ring`, `ellipse` or `circle`).
///
/// # Safety
/// `geometry` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uf_mesh_new(geometry: *const c_char, level: usize, out: *mut *mut UfMesh) -> UfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let geometry: Geometry = str_arg(geometry, "geometry")?.parse()?;
        if level > 8 {
            return Err(Failure(UfStatus::OutOfRange, format!("level {level} exceeds 8")));
        }
        let mesh = Problem::new(geometry).mesh_chain(level + 1)?.pop().expect("nonempty chain");
        *out = Box::into_raw(Box::new(UfMesh(Mesh::clone(&mesh))));
        Ok(UfStatus::Ok)
    })
}

/// # Safety
/// `mesh` must be null or a handle from [`uf_mesh_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uf_mesh_free(mesh: *mut UfMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uf_mesh_num_vertices(mesh: *const UfMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.num_vertices())
}

/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uf_mesh_num_elements(mesh: *const UfMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.num_elements())
}

/// Copy vertex coordinates as `x0, y0, x1, y1, ...`; `len` counts doubles
/// and must be at least `2 * uf_mesh_num_vertices`.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn uf_mesh_vertices(mesh: *const UfMesh, out: *mut f64, len: usize) -> UfStatus {
    guard(|| {
        let mesh = &handle(mesh, "mesh")?.0;
        let need = 2 * mesh.num_vertices();
        if out.is_null() {
            return Err(null("out"));
        }
        if len < need {
            return Err(Failure(UfStatus::OutOfRange, format!("buffer holds {len} values, {need} needed")));
        }
        let out = std::slice::from_raw_parts_mut(out, need);
        for (dst, v) in out.chunks_exact_mut(2).zip(mesh.vertices()) {
            dst.copy_from_slice(v);
        }
        Ok(UfStatus::Ok)
    })
}

/// Copy counterclockwise element vertex indices, three per element; `len`
/// must be at least `3 * uf_mesh_num_elements`.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn uf_mesh_elements(mesh: *const UfMesh, out: *mut usize, len: usize) -> UfStatus {
    guard(|| {
        let mesh = &handle(mesh, "mesh")?.0;
        let need = 3 * mesh.num_elements();
        if out.is_null() {
            return Err(null("out"));
        }
        if len < need {
            return Err(Failure(UfStatus::OutOfRange, format!("buffer holds {len} values, {need} needed")));
        }
        let out = std::slice::from_raw_parts_mut(out, need);
        for (dst, t) in out.chunks_exact_mut(3).zip(mesh.elements()) {
            dst.copy_from_slice(t);
        }
        Ok(UfStatus::Ok)
    })
}
