use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use slopegrowth_ffi::*;

fn last_error() -> String {
    let p = sg_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn preset(name: &str, n: u32) -> *mut SgSpec {
    let name = CString::new(name).unwrap();
    let mut spec = ptr::null_mut();
    assert_eq!(unsafe { sg_spec_from_preset(name.as_ptr(), n, &mut spec) }, SgStatus::Ok);
    spec
}

#[test]
fn preset_round_trip_through_handles() {
    let spec = preset("example31", 0);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { sg_spectrum_compute(spec, 8, 90, 0, 1, &mut s) }, SgStatus::Ok);

    let mut n_max = 0;
    assert_eq!(unsafe { sg_spectrum_n_max(s, &mut n_max) }, SgStatus::Ok);
    assert_eq!(n_max, 11);
    // spheres of size 4 * 3^(k-1) sit at radius sqrt(2) k
    let mut c = 0;
    assert_eq!(unsafe { sg_spectrum_annulus_count(s, 2, &mut c) }, SgStatus::Ok);
    assert_eq!(c, 4);

    let eps = [0.4, 0.2, 0.1, 0.05, 0.01];
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { sg_profile_build(s, 91, eps.as_ptr(), eps.len(), 4, 0, 0, &mut p) }, SgStatus::Ok);
    let mut len = 0;
    assert_eq!(unsafe { sg_profile_len(p, &mut len) }, SgStatus::Ok);
    assert_eq!(len, 91);
    let (mut theta, mut delta, mut se, mut low) = (0.0, 0.0, 0.0, 0u8);
    assert_eq!(unsafe { sg_profile_point(p, 0, &mut theta, &mut delta, &mut se, &mut low) }, SgStatus::Ok);
    assert_eq!((theta, delta, low), (0.0, f64::NEG_INFINITY, 0));
    assert_eq!(unsafe { sg_profile_theta_star(p, &mut theta, &mut delta) }, SgStatus::Ok);
    assert!((theta - std::f64::consts::FRAC_PI_4).abs() < 1e-12);

    let mut fp = ptr::null_mut();
    assert_eq!(unsafe { sg_spec_fingerprint(spec, &mut fp) }, SgStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(fp) }.to_bytes().len(), 16);
    unsafe {
        sg_string_free(fp);
        sg_profile_free(p);
        sg_spectrum_free(s);
        sg_spec_free(spec);
    }
}

#[test]
fn save_and_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("s.cache").to_str().unwrap()).unwrap();
    let spec = preset("example41", 0);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { sg_spectrum_compute(spec, 6, 90, 0, 1, &mut s) }, SgStatus::Ok);
    assert_eq!(unsafe { sg_spectrum_save(s, path.as_ptr()) }, SgStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { sg_spectrum_load(path.as_ptr(), &mut back) }, SgStatus::Ok);
    let (mut a, mut b) = (0, 0);
    for n in 1..=8 {
        unsafe {
            sg_spectrum_annulus_count(s, n, &mut a);
            sg_spectrum_annulus_count(back, n, &mut b);
        }
        assert_eq!(a, b);
    }
    unsafe {
        sg_spectrum_free(back);
        sg_spectrum_free(s);
        sg_spec_free(spec);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let name = CString::new("example99").unwrap();
    let mut spec = ptr::null_mut();
    assert_eq!(unsafe { sg_spec_from_preset(name.as_ptr(), 0, &mut spec) }, SgStatus::Usage);
    assert!(last_error().contains("example99"));
    assert!(spec.is_null());

    let name = CString::new("example51").unwrap();
    assert_eq!(unsafe { sg_spec_from_preset(name.as_ptr(), 2, &mut spec) }, SgStatus::InvalidInput);
    assert_eq!(unsafe { sg_spec_from_preset(ptr::null(), 0, &mut spec) }, SgStatus::NullPointer);
    assert_eq!(unsafe { sg_spec_from_preset(name.as_ptr(), 0, ptr::null_mut()) }, SgStatus::NullPointer);

    let missing = CString::new("/nonexistent/s.cache").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { sg_spectrum_load(missing.as_ptr(), &mut s) }, SgStatus::Io);

    let mut n = 0;
    assert_eq!(unsafe { sg_spectrum_n_max(ptr::null(), &mut n) }, SgStatus::NullPointer);
    unsafe { sg_spec_free(ptr::null_mut()) };
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(sg_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/slopegrowth.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["sg_spec_from_preset", "sg_spectrum_compute", "sg_profile_build", "sg_last_error_message"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"slopegrowth.h\"\nint main(void) { SgSpec *s = 0; return sg_spec_from_preset(\"example31\", 0, &s) == SG_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .status()
    else {
        eprintln!("no C compiler found; skipping syntax check");
        return;
    };
    assert!(status.success());
}
