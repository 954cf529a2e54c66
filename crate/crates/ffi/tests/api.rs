use std::ffi::{c_char, CStr, CString};
use std::ptr;

use unfitted_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe {
        uf_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn set(config: *mut UfConfig, key: &str, value: &str) -> UfStatus {
    let (k, v) = (CString::new(key).unwrap(), CString::new(value).unwrap());
    unsafe { uf_config_set(config, k.as_ptr(), v.as_ptr()) }
}

#[test]
fn study_round_trip() {
    unsafe {
        let config = uf_config_new();
        assert_eq!(set(config, "geometry", "ring"), UfStatus::Ok);
        assert_eq!(set(config, "order", "2"), UfStatus::Ok);
        assert_eq!(set(config, "levels", "3"), UfStatus::Ok);
        assert_eq!(set(config, "solver", "direct"), UfStatus::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(uf_study_run(config, &mut report), UfStatus::Ok);
        assert_eq!(uf_report_num_levels(report), 3);

        let mut level = UfLevel::default();
        assert_eq!(uf_report_level(report, 2, &mut level), UfStatus::Ok);
        assert_eq!(level.level, 2);
        assert!(level.ndof > 0 && level.err_l2 > 0.0 && level.err_l2 < level.err_h1);
        assert_eq!(uf_report_level(report, 3, &mut level), UfStatus::OutOfRange);

        let mut rate = 0.0;
        assert_eq!(uf_report_eoc(report, UfNorm::L2, 1, &mut rate), UfStatus::Ok);
        assert!(rate > 2.5, "{rate}");
        assert_eq!(uf_report_eoc(report, UfNorm::H1Semi, 2, &mut rate), UfStatus::OutOfRange);

        let need = uf_report_csv(report, ptr::null_mut(), 0);
        let mut buf = vec![0 as c_char; need + 1];
        assert_eq!(uf_report_csv(report, buf.as_mut_ptr(), buf.len()), need);
        let csv = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        assert!(csv.starts_with("level,h_max,ndof"));
        assert_eq!(csv.lines().count(), 4);

        // truncation keeps the terminator
        let mut small = [1 as c_char; 6];
        uf_report_csv(report, small.as_mut_ptr(), small.len());
        assert_eq!(CStr::from_ptr(small.as_ptr()).to_str().unwrap(), "level");

        uf_report_free(report);
        uf_config_free(config);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let config = uf_config_new();
        assert_eq!(set(config, "order", "9"), UfStatus::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(uf_study_run(config, &mut report), UfStatus::InvalidArgument);
        assert!(report.is_null());
        assert!(last_error().contains("order"));

        assert_eq!(set(config, "colour", "red"), UfStatus::InvalidArgument);
        assert!(last_error().contains("colour"));
        assert_eq!(set(config, "levels", "many"), UfStatus::InvalidArgument);

        let key = CString::new("order").unwrap();
        assert_eq!(uf_config_set(config, key.as_ptr(), ptr::null()), UfStatus::NullPointer);
        assert_eq!(uf_config_set(ptr::null_mut(), key.as_ptr(), key.as_ptr()), UfStatus::NullPointer);
        assert_eq!(uf_study_run(ptr::null(), &mut report), UfStatus::NullPointer);

        let missing = CString::new("/nonexistent/study.cfg").unwrap();
        assert_eq!(uf_config_load(config, missing.as_ptr()), UfStatus::Io);
        uf_config_free(config);

        // null handles are harmless
        uf_config_free(ptr::null_mut());
        uf_report_free(ptr::null_mut());
        uf_mesh_free(ptr::null_mut());
        assert_eq!(uf_report_num_levels(ptr::null()), 0);
    }
}

#[test]
fn config_file_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.cfg");
    std::fs::write(&path, "geometry = ellipse\norder = 1\nlevels = 2\n").unwrap();
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    unsafe {
        let config = uf_config_new();
        assert_eq!(uf_config_load(config, c_path.as_ptr()), UfStatus::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(uf_study_run(config, &mut report), UfStatus::Ok);
        assert_eq!(uf_report_num_levels(report), 2);
        assert_eq!(uf_report_write(report, out.as_ptr()), UfStatus::Ok);
        uf_report_free(report);
        uf_config_free(config);
    }
    assert!(dir.path().join("ellipse_k1.csv").exists());
    assert!(dir.path().join("ellipse_k1.svg").exists());
}

#[test]
fn mesh_export() {
    unsafe {
        let name = CString::new("ring").unwrap();
        let mut mesh = ptr::null_mut();
        assert_eq!(uf_mesh_new(name.as_ptr(), 0, &mut mesh), UfStatus::Ok);
        let (nv, ne) = (uf_mesh_num_vertices(mesh), uf_mesh_num_elements(mesh));
        assert_eq!((nv, ne), (145, 256));
        let mut coords = vec![0.0; 2 * nv];
        assert_eq!(uf_mesh_vertices(mesh, coords.as_mut_ptr(), coords.len()), UfStatus::Ok);
        assert!(coords.iter().all(|c| c.abs() <= 1.0));
        let mut tris = vec![0usize; 3 * ne];
        assert_eq!(uf_mesh_elements(mesh, tris.as_mut_ptr(), tris.len() - 1), UfStatus::OutOfRange);
        assert_eq!(uf_mesh_elements(mesh, tris.as_mut_ptr(), tris.len()), UfStatus::Ok);
        assert!(tris.iter().all(|&v| v < nv));
        uf_mesh_free(mesh);

        let bad = CString::new("torus").unwrap();
        assert_eq!(uf_mesh_new(bad.as_ptr(), 0, &mut mesh), UfStatus::InvalidArgument);
        assert!(mesh.is_null());
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(uf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
