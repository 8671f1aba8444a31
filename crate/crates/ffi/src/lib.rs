//! C ABI for heatframe.
//!
//! A statement is solved into an opaque [`HfProblem`] handle; results are read through
//! accessor functions that return an [`HfStatus`]. Strings handed out by the library are
//! owned by the caller and released with [`hf_string_free`].

use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use heatframe::parser::Commonsense;
use heatframe::report::{build_report, failure_report, solve_problem, write_outputs, Outcome, RunOptions, SolutionReport};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The statement could not be solved; the handle still carries the defect report.
    ProblemDefect = 3,
    /// The finite element budget was exhausted; results are from the last iterate.
    Partial = 4,
    /// The requested quantity does not exist for this problem class.
    NotApplicable = 5,
    /// The output buffer is too small; the required length was written.
    BufferTooSmall = 6,
    /// Reading the commonsense file or writing outputs failed.
    Io = 7,
    /// The commonsense database could not be parsed.
    InvalidCommonsense = 8,
    /// The library panicked; this is a bug.
    Panic = 9,
}

/// Solver settings. Obtain defaults from [`hf_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HfOptions {
    /// Nonzero to run the adaptive finite element solver on generalized walls.
    pub fe: c_int,
    /// Relative tolerance on the QoI estimate.
    pub tol_qoi: f64,
    /// Tolerance on the energy estimate relative to the discrete energy norm.
    pub tol_energy: f64,
    pub max_dofs: usize,
    pub marking_fraction: f64,
}

/// A solved (or rejected) problem statement.
pub struct HfProblem {
    outcome: Option<Outcome>,
    report: SolutionReport,
    report_json: CString,
}

impl HfProblem {
    fn new(outcome: Option<Outcome>, report: SolutionReport) -> HfProblem {
        let report_json = CString::new(report.to_json()).expect("report JSON has no interior NUL");
        HfProblem { outcome, report, report_json }
    }

    fn status(&self) -> HfStatus {
        match self.report.status.as_str() {
            "ok" => HfStatus::Ok,
            "partial" => HfStatus::Partial,
            _ => HfStatus::ProblemDefect,
        }
    }
}

fn guard(f: impl FnOnce() -> HfStatus) -> HfStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(HfStatus::Panic)
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, HfStatus> {
    if p.is_null() {
        return Err(HfStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| HfStatus::InvalidUtf8)
}

unsafe fn problem<'a>(p: *const HfProblem) -> Result<&'a HfProblem, HfStatus> {
    p.as_ref().ok_or(HfStatus::NullPointer)
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Default solver settings.
#[no_mangle]
pub extern "C" fn hf_options_default() -> HfOptions {
    let d = RunOptions::default();
    HfOptions {
        fe: d.fe as c_int,
        tol_qoi: d.adaptive.tol_qoi,
        tol_energy: d.adaptive.tol_energy,
        max_dofs: d.adaptive.max_dofs,
        marking_fraction: d.adaptive.marking_fraction,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn hf_status_message(status: HfStatus) -> *const c_char {
    let s: &'static str = match status {
        HfStatus::Ok => "ok\0",
        HfStatus::NullPointer => "null pointer argument\0",
        HfStatus::InvalidUtf8 => "string argument is not valid UTF-8\0",
        HfStatus::ProblemDefect => "the statement has defects; see the report\0",
        HfStatus::Partial => "finite element budget exhausted; results are partial\0",
        HfStatus::NotApplicable => "quantity not available for this problem\0",
        HfStatus::BufferTooSmall => "output buffer too small\0",
        HfStatus::Io => "file input or output failed\0",
        HfStatus::InvalidCommonsense => "commonsense database could not be parsed\0",
        HfStatus::Panic => "internal error\0",
    };
    s.as_ptr().cast()
}

/// Solves a statement. `name` labels the report; `options` and `commonsense_path` may be
/// null for defaults. On `Ok`, `Partial` and `ProblemDefect` a handle is stored in `*out`
/// and must be released with [`hf_problem_free`]; on other codes `*out` is null.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_solve(
    statement: *const c_char,
    name: *const c_char,
    options: *const HfOptions,
    commonsense_path: *const c_char,
    out: *mut *mut HfProblem,
) -> HfStatus {
    guard(|| {
        if out.is_null() {
            return HfStatus::NullPointer;
        }
        *out = ptr::null_mut();
        let src = tri!(str_arg(statement));
        let name = tri!(str_arg(name));
        let commonsense = if commonsense_path.is_null() {
            Commonsense::bundled()
        } else {
            let path = tri!(str_arg(commonsense_path));
            let Ok(text) = std::fs::read_to_string(path) else { return HfStatus::Io };
            tri!(Commonsense::parse(&text).map_err(|_| HfStatus::InvalidCommonsense))
        };
        let mut opts = RunOptions::default();
        if let Some(o) = options.as_ref() {
            opts.fe = o.fe != 0;
            opts.adaptive.tol_qoi = o.tol_qoi;
            opts.adaptive.tol_energy = o.tol_energy;
            opts.adaptive.max_dofs = o.max_dofs;
            opts.adaptive.marking_fraction = o.marking_fraction;
        }
        let handle = match solve_problem(src, name, &commonsense, &opts) {
            Ok(outcome) => {
                let report = build_report(&outcome, Vec::new(), false);
                HfProblem::new(Some(outcome), report)
            }
            Err(failure) => HfProblem::new(None, failure_report(name, &failure)),
        };
        let status = handle.status();
        *out = Box::into_raw(Box::new(handle));
        status
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `p` must come from [`hf_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hf_problem_free(p: *mut HfProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Status of a solved handle: `Ok`, `Partial` or `ProblemDefect`.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_problem_status(p: *const HfProblem) -> HfStatus {
    guard(|| tri!(problem(p)).status())
}

/// Copies the JSON report into a new string owned by the caller.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_report_json(p: *const HfProblem, out: *mut *mut c_char) -> HfStatus {
    guard(|| {
        let p = tri!(problem(p));
        if out.is_null() {
            return HfStatus::NullPointer;
        }
        *out = p.report_json.clone().into_raw();
        HfStatus::Ok
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Number of defects in the report.
///
/// # Safety
/// `p` must be a live handle; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_defect_count(p: *const HfProblem, count: *mut usize) -> HfStatus {
    guard(|| {
        let p = tri!(problem(p));
        let Some(count) = count.as_mut() else { return HfStatus::NullPointer };
        *count = p.report.defects.len();
        HfStatus::Ok
    })
}

/// Sentence index of defect `i`, or -1 when it has none.
///
/// # Safety
/// `p` must be a live handle; `sentence` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_defect_sentence(p: *const HfProblem, i: usize, sentence: *mut i64) -> HfStatus {
    guard(|| {
        let p = tri!(problem(p));
        let Some(sentence) = sentence.as_mut() else { return HfStatus::NullPointer };
        let Some(d) = p.report.defects.get(i) else { return HfStatus::NotApplicable };
        *sentence = d.sentence.map_or(-1, |s| s as i64);
        HfStatus::Ok
    })
}

/// Biot number and verdict (`1` small, `0` not small, `-1` not gated) of a quasi-1d problem.
///
/// # Safety
/// `p` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_biot(p: *const HfProblem, value: *mut f64, small: *mut c_int) -> HfStatus {
    guard(|| {
        let p = tri!(problem(p));
        let (Some(value), Some(small)) = (value.as_mut(), small.as_mut()) else { return HfStatus::NullPointer };
        let Some(b) = &p.report.biot else { return HfStatus::NotApplicable };
        *value = b.value;
        *small = match b.verdict.as_str() {
            "small" => 1,
            "not small" => 0,
            _ => -1,
        };
        HfStatus::Ok
    })
}

/// Port positions and temperatures of a quasi-1d problem. `*len` holds the buffer capacity
/// on entry and the number of ports on return; null buffers query the length only.
///
/// # Safety
/// `p` must be a live handle; `len` must be writable; non-null buffers must hold `*len` values.
#[no_mangle]
pub unsafe extern "C" fn hf_ports(p: *const HfProblem, positions: *mut f64, temperatures: *mut f64, len: *mut usize) -> HfStatus {
    guard(|| {
        let p = tri!(problem(p));
        let Some(len) = len.as_mut() else { return HfStatus::NullPointer };
        let Some(q) = &p.report.quasi1d else { return HfStatus::NotApplicable };
        let capacity = *len;
        *len = q.ports.len();
        if positions.is_null() || temperatures.is_null() {
            return HfStatus::Ok;
        }
        if capacity < q.ports.len() {
            return HfStatus::BufferTooSmall;
        }
        for (i, port) in q.ports.iter().enumerate() {
            *positions.add(i) = port.position;
            *temperatures.add(i) = port.temperature;
        }
        HfStatus::Ok
    })
}

/// Lower and upper bounds on the nondimensional heat transfer rate of a generalized wall.
///
/// # Safety
/// `p` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_bounds(p: *const HfProblem, lower: *mut f64, upper: *mut f64) -> HfStatus {
    guard(|| {
        let p = tri!(problem(p));
        let (Some(lower), Some(upper)) = (lower.as_mut(), upper.as_mut()) else { return HfStatus::NullPointer };
        let Some(b) = &p.report.bounds else { return HfStatus::NotApplicable };
        *lower = b.h_lb;
        *upper = b.h_ub;
        HfStatus::Ok
    })
}

/// Finite element value of the nondimensional rate, its error estimate and the final dof count.
/// Returns `Partial` when the dof budget was exhausted.
///
/// # Safety
/// `p` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_fe_result(p: *const HfProblem, value: *mut f64, estimate: *mut f64, dofs: *mut usize) -> HfStatus {
    guard(|| {
        let p = tri!(problem(p));
        let (Some(value), Some(estimate), Some(dofs)) = (value.as_mut(), estimate.as_mut(), dofs.as_mut()) else {
            return HfStatus::NullPointer;
        };
        let Some(fe) = &p.report.fe else { return HfStatus::NotApplicable };
        *value = fe.qoi;
        *estimate = fe.qoi_estimate;
        *dofs = fe.dofs;
        if fe.converged {
            HfStatus::Ok
        } else {
            HfStatus::Partial
        }
    })
}

/// Writes `report.json` and the SVG figures into `dir`.
///
/// # Safety
/// `p` must be a live handle; `dir` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn hf_write_outputs(p: *const HfProblem, dir: *const c_char) -> HfStatus {
    guard(|| {
        let p = tri!(problem(p));
        let dir = tri!(str_arg(dir));
        let Some(outcome) = &p.outcome else { return HfStatus::ProblemDefect };
        match write_outputs(outcome, Path::new(dir), false) {
            Ok(_) => HfStatus::Ok,
            Err(_) => HfStatus::Io,
        }
    })
}
