use std::ffi::{CStr, CString};
use std::ptr;

use speclab_ffi::*;

fn last_error() -> String {
    let p = speclab_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn golden(depth: usize) -> *mut SpeclabCf {
    let a = CString::new("golden").unwrap();
    let mut cf = ptr::null_mut();
    assert_eq!(unsafe { speclab_cf_expand(a.as_ptr(), depth, &mut cf) }, SpeclabStatus::Ok);
    cf
}

#[test]
fn continued_fraction_handle() {
    let cf = golden(20);
    unsafe {
        let mut depth = 0;
        assert_eq!(speclab_cf_depth(cf, &mut depth), SpeclabStatus::Ok);
        assert_eq!(depth, 20);
        let mut q = 0;
        assert_eq!(speclab_cf_q(cf, 10, &mut q), SpeclabStatus::Ok);
        assert_eq!(q, 89);
        let mut a = 0.0;
        speclab_cf_alpha(cf, &mut a);
        // the frequency is the last convergent p_20/q_20 = 6765/10946
        assert_eq!(a, 6765.0 / 10946.0);
        assert!((a - (5f64.sqrt() - 1.0) / 2.0).abs() < 1.0 / (10946f64 * 10946.0));
        let mut b = 0.0;
        assert_eq!(speclab_cf_beta(cf, 0, &mut b), SpeclabStatus::Ok);
        assert!((b - 144f64.ln() / 89.0).abs() < 1e-12);
        assert_eq!(speclab_cf_q(cf, 500, &mut q), SpeclabStatus::Validation);
        speclab_cf_free(cf);
    }
}

#[test]
fn synthesized_frequency_overflows_u64() {
    let mut cf = ptr::null_mut();
    let prefix = [1u64, 4];
    unsafe {
        assert_eq!(speclab_cf_synthesize(1.5, prefix.as_ptr(), 2, 4, &mut cf), SpeclabStatus::Ok);
        let mut q = 0;
        assert_eq!(speclab_cf_q(cf, 3, &mut q), SpeclabStatus::Ok);
        assert_eq!(q, 1806);
        assert_eq!(speclab_cf_q(cf, 4, &mut q), SpeclabStatus::Resource);
        speclab_cf_free(cf);
    }
}

#[test]
fn rational_frequency_is_rejected() {
    let a = CString::new("3/7").unwrap();
    let mut cf = ptr::null_mut();
    assert_eq!(unsafe { speclab_cf_expand(a.as_ptr(), 10, &mut cf) }, SpeclabStatus::Validation);
    assert!(cf.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        assert_eq!(speclab_cf_expand(ptr::null(), 10, &mut ptr::null_mut()), SpeclabStatus::InvalidArgument);
        assert!(last_error().contains("null"));
        let mut d = 0;
        assert_eq!(speclab_cf_depth(ptr::null(), &mut d), SpeclabStatus::InvalidArgument);
        speclab_cf_free(ptr::null_mut());
        speclab_model_free(ptr::null_mut());
    }
}

#[test]
fn classification_and_closed_form() {
    let mut r = SpeclabRegion::Boundary;
    unsafe {
        assert_eq!(speclab_ehm_classify(0.1, 0.5, 0.2, &mut r), SpeclabStatus::Ok);
        assert_eq!(r, SpeclabRegion::RegionI);
        speclab_ehm_classify(0.1, 2.0, 0.2, &mut r);
        assert_eq!(r, SpeclabRegion::RegionII);
        assert_eq!(speclab_ehm_classify(-0.1, 0.5, 0.2, &mut r), SpeclabStatus::Validation);
        let mut l = 0.0;
        assert_eq!(speclab_ehm_lyapunov_closed_form(0.1, 0.5, 0.2, &mut l), SpeclabStatus::Ok);
        let exact = ((1.0 + 0.92f64.sqrt()) / (0.5 + 0.17f64.sqrt())).ln();
        assert!((l - exact).abs() < 1e-12);
        assert_ne!(speclab_ehm_lyapunov_closed_form(0.1, 2.0, 0.2, &mut l), SpeclabStatus::Ok);
    }
}

#[test]
fn model_numerics() {
    let cf = golden(40);
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(speclab_model_new_ehm(0.1, 0.5, 0.2, cf, &mut m), SpeclabStatus::Ok);
        speclab_cf_free(cf);

        let (mut v, mut s) = (0.0, 0.0);
        assert_eq!(speclab_model_lyapunov(m, 3.0, 20000, 2, 7, &mut v, &mut s), SpeclabStatus::Ok);
        assert!(v > 0.5 && s >= 0.0);

        let mut rho = -1.0;
        assert_eq!(speclab_model_rotation_number(m, 10.0, 5000, 0.1, &mut rho), SpeclabStatus::Ok);
        assert!(rho.abs() < 1e-3);

        let mut ev = vec![0.0; 41];
        let mut len = 0;
        assert_eq!(speclab_model_eigenvalues(m, 0.3, 20, ev.as_mut_ptr(), ev.len(), &mut len), SpeclabStatus::Ok);
        assert_eq!(len, 41);
        assert!(ev.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(
            speclab_model_eigenvalues(m, 0.3, 20, ev.as_mut_ptr(), 10, &mut len),
            SpeclabStatus::InvalidArgument
        );
        assert_eq!(len, 41);

        let energies = [-10.0, 0.0, 10.0];
        let mut out = [0.0; 3];
        assert_eq!(speclab_model_ids(m, energies.as_ptr(), 3, 50, 2, 1, out.as_mut_ptr()), SpeclabStatus::Ok);
        assert_eq!(out[0], 0.0);
        assert_eq!(out[2], 1.0);
        assert!(out[1] > 0.0 && out[1] < 1.0);
        speclab_model_free(m);
    }
}

#[test]
fn winding_of_monomials() {
    let re = [0.5, 1.0];
    let im = [0.0, 0.0];
    let mut w = 0;
    unsafe {
        assert_eq!(speclab_winding(re.as_ptr(), im.as_ptr(), 2, 0, &mut w), SpeclabStatus::Ok);
        assert_eq!(w, 1);
        assert_eq!(speclab_winding(re.as_ptr(), im.as_ptr(), 2, -3, &mut w), SpeclabStatus::Ok);
        assert_eq!(w, -2);
        // zero on the circle
        let re = [1.0, 1.0];
        assert_eq!(speclab_winding(re.as_ptr(), im.as_ptr(), 2, 0, &mut w), SpeclabStatus::Contract);
    }
}

#[test]
fn run_json_writes_artifacts() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("run");
    let cfg = serde_json::json!({
        "command": "beta",
        "params": {"alpha": "golden", "depth": 20},
        "out_dir": out,
    });
    let c = CString::new(cfg.to_string()).unwrap();
    assert_eq!(unsafe { speclab_run_json(c.as_ptr()) }, 0);
    assert!(out.join("beta.json").exists() && out.join("manifest.json").exists());
    let bad = CString::new(r#"{"command": "beta", "nope": 1}"#).unwrap();
    assert_eq!(unsafe { speclab_run_json(bad.as_ptr()) }, 2);
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(speclab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/speclab.h");
    assert!(std::path::Path::new(header).exists());
    let Ok(cc) = which_cc() else { return };
    let t = tempfile::tempdir().unwrap();
    let src = t.path().join("probe.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{header}\"\nint main(void) {{ SpeclabCf *cf = 0; return speclab_cf_expand(\"golden\", 10, &cf) == SPECLAB_STATUS_OK; }}\n"
        ),
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc);
        }
    }
    Err(())
}
