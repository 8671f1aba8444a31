use std::ffi::{c_char, c_int, CStr, CString};
use std::ptr;

use heatframe::corpus;
use heatframe_ffi::*;

struct Handle(*mut HfProblem);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { hf_problem_free(self.0) }
    }
}

fn solve(src: &str, options: Option<&HfOptions>) -> (HfStatus, Handle) {
    let src = CString::new(src).unwrap();
    let name = CString::new("t").unwrap();
    let mut out = ptr::null_mut();
    let opts = options.map_or(ptr::null(), |o| o as *const HfOptions);
    let status = unsafe { hf_solve(src.as_ptr(), name.as_ptr(), opts, ptr::null(), &mut out) };
    (status, Handle(out))
}

fn report(h: &Handle) -> serde_json::Value {
    let mut s: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { hf_report_json(h.0, &mut s) }, HfStatus::Ok);
    let value = serde_json::from_str(unsafe { CStr::from_ptr(s) }.to_str().unwrap()).unwrap();
    unsafe { hf_string_free(s) };
    value
}

#[test]
fn wall_1d_ports_match_series_resistance() {
    let (status, h) = solve(corpus::WALL_1D, None);
    assert_eq!(status, HfStatus::Ok);
    let mut len = 0usize;
    assert_eq!(unsafe { hf_ports(h.0, ptr::null_mut(), ptr::null_mut(), &mut len) }, HfStatus::Ok);
    assert_eq!(len, 4);
    let (mut x, mut t) = (vec![0.0; 4], vec![0.0; 4]);
    let mut short = 2usize;
    assert_eq!(unsafe { hf_ports(h.0, x.as_mut_ptr(), t.as_mut_ptr(), &mut short) }, HfStatus::BufferTooSmall);
    assert_eq!(short, 4);
    assert_eq!(unsafe { hf_ports(h.0, x.as_mut_ptr(), t.as_mut_ptr(), &mut len) }, HfStatus::Ok);
    // q = 23 / (1/10 + 0.05/0.2 + 0.1/0.1 + 0.05/0.05 + 1/100) per unit area.
    let q = 23.0 / 2.36;
    let expected = [23.0 - q / 10.0, 23.0 - q * 0.35, 23.0 - q * 1.35, q / 100.0];
    for (got, want) in t.iter().zip(expected) {
        assert!((got - want).abs() < 1e-9 * want.abs(), "{got} vs {want}");
    }
    assert_eq!(x, vec![0.0, 0.05, 0.15, 0.2]);
    let (mut lb, mut ub) = (0.0, 0.0);
    assert_eq!(unsafe { hf_bounds(h.0, &mut lb, &mut ub) }, HfStatus::NotApplicable);
}

#[test]
fn spoon_biot_is_small() {
    let (status, h) = solve(corpus::SPOON, None);
    assert_eq!(status, HfStatus::Ok);
    let (mut bi, mut small): (f64, c_int) = (0.0, -2);
    assert_eq!(unsafe { hf_biot(h.0, &mut bi, &mut small) }, HfStatus::Ok);
    assert!((bi - 1.0 / 6000.0).abs() < 1e-12);
    assert_eq!(small, 1);
}

#[test]
fn wall_3d_bounds_and_partial_fe() {
    let (status, h) = solve(corpus::WALL_3D, None);
    assert_eq!(status, HfStatus::Ok);
    let (mut lb, mut ub) = (0.0, 0.0);
    assert_eq!(unsafe { hf_bounds(h.0, &mut lb, &mut ub) }, HfStatus::Ok);
    assert!((lb - 1.0 / (31.0 * 0.05)).abs() < 1e-12);
    assert!((ub - 1.0 / ((10.0 + 10.0 + 11.0 / 3.0) * 0.05)).abs() < 1e-12);
    let (mut v, mut e, mut n) = (0.0, 0.0, 0usize);
    assert_eq!(unsafe { hf_fe_result(h.0, &mut v, &mut e, &mut n) }, HfStatus::NotApplicable);

    let mut opts = hf_options_default();
    opts.fe = 1;
    opts.max_dofs = 60;
    let (status, h) = solve(corpus::WALL_3D, Some(&opts));
    assert_eq!(status, HfStatus::Partial);
    assert_eq!(unsafe { hf_fe_result(h.0, &mut v, &mut e, &mut n) }, HfStatus::Partial);
    assert!(lb <= v && v <= ub && n >= 60);
    let r = report(&h);
    assert_eq!(r["status"], "partial");
    assert_eq!(r["defects"][0]["kind"], "BudgetExceeded");
}

#[test]
fn defective_statement_keeps_report_with_provenance() {
    let src = corpus::WALL_1D.replace("$k_p= 0.1$, ", "");
    let (status, h) = solve(&src, None);
    assert_eq!(status, HfStatus::ProblemDefect);
    assert!(!h.0.is_null());
    assert_eq!(unsafe { hf_problem_status(h.0) }, HfStatus::ProblemDefect);
    let mut n = 0usize;
    assert_eq!(unsafe { hf_defect_count(h.0, &mut n) }, HfStatus::Ok);
    assert_eq!(n, 1);
    let mut s = -2i64;
    assert_eq!(unsafe { hf_defect_sentence(h.0, 0, &mut s) }, HfStatus::Ok);
    assert!(s >= 0);
    assert_eq!(unsafe { hf_defect_sentence(h.0, 1, &mut s) }, HfStatus::NotApplicable);
    let dir = tempfile::tempdir().unwrap();
    let d = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { hf_write_outputs(h.0, d.as_ptr()) }, HfStatus::ProblemDefect);
    let r = report(&h);
    assert_eq!(r["schema"], "report_v1");
    assert_eq!(r["defects"][0]["kind"], "MissingBinding");
    assert_eq!(r["defects"][0]["sentence"], s);
}

#[test]
fn outputs_are_written() {
    let (_, h) = solve(corpus::WALL_1D, None);
    let dir = tempfile::tempdir().unwrap();
    let d = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { hf_write_outputs(h.0, d.as_ptr()) }, HfStatus::Ok);
    for f in ["report.json", "graph.svg", "geometry.svg", "field.svg"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn bad_arguments_are_rejected() {
    let mut out = ptr::null_mut();
    let name = CString::new("t").unwrap();
    unsafe {
        assert_eq!(hf_solve(ptr::null(), name.as_ptr(), ptr::null(), ptr::null(), &mut out), HfStatus::NullPointer);
        assert!(out.is_null());
        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(hf_solve(bad.as_ptr().cast(), name.as_ptr(), ptr::null(), ptr::null(), &mut out), HfStatus::InvalidUtf8);
        let src = CString::new(corpus::WALL_1D).unwrap();
        assert_eq!(hf_solve(src.as_ptr(), name.as_ptr(), ptr::null(), ptr::null(), ptr::null_mut()), HfStatus::NullPointer);
        let missing = CString::new("/nonexistent/commonsense.txt").unwrap();
        assert_eq!(hf_solve(src.as_ptr(), name.as_ptr(), ptr::null(), missing.as_ptr(), &mut out), HfStatus::Io);
        assert_eq!(hf_problem_status(ptr::null()), HfStatus::NullPointer);
        let mut n = 0usize;
        assert_eq!(hf_defect_count(ptr::null(), &mut n), HfStatus::NullPointer);
        hf_problem_free(ptr::null_mut());
        hf_string_free(ptr::null_mut());
    }
}

#[test]
fn static_strings() {
    let v = unsafe { CStr::from_ptr(hf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let m = unsafe { CStr::from_ptr(hf_status_message(HfStatus::BufferTooSmall)) };
    assert_eq!(m.to_str().unwrap(), "output buffer too small");
    let d = hf_options_default();
    assert_eq!((d.fe, d.max_dofs), (0, 200_000));
}
