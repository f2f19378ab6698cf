use std::ffi::{CStr, CString};
use std::ptr;

use bmeb_ffi::*;

fn last_error() -> String {
    let p = bmeb_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn dataset(n: usize, spins: &[i8]) -> *mut BmebDataset {
    let mut out = ptr::null_mut();
    let status = unsafe { bmeb_dataset_new(n, spins.len() / n, spins.as_ptr(), &mut out) };
    assert_eq!(status, BmebStatus::Ok, "{}", last_error());
    out
}

fn estimate_view(data: *const BmebDataset) -> BmebEstimate {
    let mut result = ptr::null_mut();
    assert_eq!(unsafe { bmeb_estimate(data, &mut result) }, BmebStatus::Ok);
    let mut view = std::mem::MaybeUninit::<BmebEstimate>::uninit();
    assert_eq!(
        unsafe { bmeb_result_get(result, view.as_mut_ptr()) },
        BmebStatus::Ok
    );
    unsafe { bmeb_result_free(result) };
    unsafe { view.assume_init() }
}

#[test]
fn hand_dataset_diverges() {
    let data = dataset(3, &[1, 1, -1, 1, -1, -1]);
    let view = estimate_view(data);
    assert_eq!(view.branch, BmebBranch::Diverged);
    assert_eq!(view.gamma_hat, f64::INFINITY);
    assert!(!view.has_h_hat && view.h_hat.is_nan());
    assert!((view.phi - 1.0 / 18.0).abs() < 1e-15);
    unsafe { bmeb_dataset_free(data) };
}

#[test]
fn matches_the_rust_api() {
    let mut data = ptr::null_mut();
    let status =
        unsafe { bmeb_dataset_generate(40, 30, 0.1, 0.8, BmebPrior::Gaussian, 4, &mut data) };
    assert_eq!(status, BmebStatus::Ok);
    let mut spins = vec![0i8; 40 * 30];
    assert_eq!(
        unsafe { bmeb_dataset_spins(data, spins.as_mut_ptr(), spins.len()) },
        BmebStatus::Ok
    );
    let native = bmeb::Dataset::new(40, spins).unwrap();
    let want = bmeb::estimate(&bmeb::SufficientStats::from_dataset(&native)).unwrap();
    let view = estimate_view(data);
    assert_eq!(view.gamma_hat.to_bits(), want.gamma_hat.to_bits());
    assert_eq!(Some(view.h_hat), want.h_hat);

    let mut stats = std::mem::MaybeUninit::<BmebStats>::uninit();
    assert_eq!(
        unsafe { bmeb_dataset_stats(data, stats.as_mut_ptr()) },
        BmebStatus::Ok
    );
    let stats = unsafe { stats.assume_init() };
    assert_eq!((stats.n, stats.n_samples), (40, 30));
    let mut result = ptr::null_mut();
    assert_eq!(
        unsafe { bmeb_estimate_from_stats(&stats, &mut result) },
        BmebStatus::Ok
    );
    let mut again = std::mem::MaybeUninit::<BmebEstimate>::uninit();
    unsafe { bmeb_result_get(result, again.as_mut_ptr()) };
    assert_eq!(unsafe { again.assume_init() }.gamma_hat, view.gamma_hat);
    unsafe {
        bmeb_result_free(result);
        bmeb_dataset_free(data);
    }
}

#[test]
fn errors_have_codes_and_messages() {
    let data = dataset(3, &[1, 1, 1, 1, 1, 1]);
    let mut result = ptr::null_mut();
    let status = unsafe { bmeb_estimate(data, &mut result) };
    assert_eq!(status, BmebStatus::DegenerateMagnetization);
    assert!(result.is_null());
    assert!(last_error().contains("degenerate magnetization"));
    unsafe { bmeb_dataset_free(data) };

    let bad = [1i8, 0, 1, 1];
    let mut out = ptr::null_mut();
    let status = unsafe { bmeb_dataset_new(2, 2, bad.as_ptr(), &mut out) };
    assert_eq!(status, BmebStatus::InvalidInput);
    assert!(out.is_null());

    let status = unsafe { bmeb_estimate(ptr::null(), &mut result) };
    assert_eq!(status, BmebStatus::NullPointer);
    assert_eq!(last_error(), "data is null");

    let missing = CString::new("/nonexistent/bmeb.txt").unwrap();
    let status = unsafe { bmeb_dataset_read(missing.as_ptr(), &mut out) };
    assert_eq!(status, BmebStatus::Io);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "3 2\n1 1 1\n1 2 1\n").unwrap();
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let status = unsafe { bmeb_dataset_read(c_path.as_ptr(), &mut out) };
    assert_eq!(status, BmebStatus::Parse);
    assert!(last_error().contains("line 3"));

    unsafe {
        bmeb_dataset_free(ptr::null_mut());
        bmeb_result_free(ptr::null_mut());
    }
}

#[test]
fn advice_anchors() {
    assert_eq!(bmeb_advise_sample_size(0.0, 300), 120);
    assert_eq!(bmeb_advise_sample_size(0.2, 300), 30);
    assert_eq!(bmeb_advise_sample_size(0.4, 300), 5);
}
