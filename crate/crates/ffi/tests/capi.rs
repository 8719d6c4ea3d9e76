use std::ffi::{CStr, CString};
use std::ptr;

use subsel_ffi::*;

const SQUARE: [f32; 8] = [0.0, 0.0, 0.0, 1.0, 10.0, 0.0, 10.0, 1.0];

fn features(data: &[f32], n: usize, d: usize) -> *mut SubselFeatures {
    let mut h = ptr::null_mut();
    let status = unsafe { subsel_features_from_data(data.as_ptr(), n, d, &mut h) };
    assert_eq!(status, SubselStatus::Ok);
    h
}

fn last_error() -> String {
    let p = subsel_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn indices(sel: *const SubselSelection) -> Vec<usize> {
    let len = subsel_selection_len(sel);
    std::slice::from_raw_parts(subsel_selection_indices(sel), len).to_vec()
}

#[test]
fn feature_handles_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("f.bin").to_str().unwrap()).unwrap();
    let h = features(&SQUARE, 4, 2);
    unsafe {
        assert_eq!(subsel_features_rows(h), 4);
        assert_eq!(subsel_features_cols(h), 2);
        assert_eq!(subsel_features_save(h, path.as_ptr()), SubselStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(
            subsel_features_load(path.as_ptr(), &mut back),
            SubselStatus::Ok
        );
        assert_eq!(
            (subsel_features_rows(back), subsel_features_cols(back)),
            (4, 2)
        );
        subsel_features_free(back);
        subsel_features_free(h);
    }
    assert_eq!(
        std::fs::metadata(dir.path().join("f.bin")).unwrap().len(),
        26 + 32 + 4
    );
}

#[test]
fn load_errors_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("bad.bin");
    std::fs::write(&garbage, b"NOTMAGIC and more bytes here..").unwrap();
    let mut h = ptr::null_mut();
    unsafe {
        let p = CString::new(garbage.to_str().unwrap()).unwrap();
        assert_eq!(
            subsel_features_load(p.as_ptr(), &mut h),
            SubselStatus::Format
        );
        let missing = CString::new("/nonexistent/f.bin").unwrap();
        assert_eq!(
            subsel_features_load(missing.as_ptr(), &mut h),
            SubselStatus::Io
        );
        assert!(last_error().contains("/nonexistent/f.bin"));
        assert_eq!(
            subsel_features_load(ptr::null(), &mut h),
            SubselStatus::NullPointer
        );
        assert_eq!(
            subsel_features_load(p.as_ptr(), ptr::null_mut()),
            SubselStatus::NullPointer
        );
    }
    assert!(h.is_null());
}

#[test]
fn from_data_validates() {
    let mut h = ptr::null_mut();
    let nan = [f32::NAN, 1.0];
    unsafe {
        assert_eq!(
            subsel_features_from_data(nan.as_ptr(), 1, 2, &mut h),
            SubselStatus::Validation
        );
        assert_eq!(
            subsel_features_from_data(ptr::null(), 1, 2, &mut h),
            SubselStatus::NullPointer
        );
        assert_eq!(
            subsel_features_from_data(nan.as_ptr(), usize::MAX, 2, &mut h),
            SubselStatus::InvalidArgument
        );
    }
    assert!(h.is_null());
}

#[test]
fn select_both_objectives() {
    let h = features(&SQUARE, 4, 2);
    unsafe {
        let mut sel = ptr::null_mut();
        assert_eq!(
            subsel_select(h, SubselObjective::DisparityMin, 2, 0, &mut sel),
            SubselStatus::Ok
        );
        let idx = indices(sel);
        assert_eq!(idx.len(), 2);
        // the two picks straddle the gap, at the diagonal distance
        assert!(idx.iter().any(|&i| i < 2) && idx.iter().any(|&i| i >= 2));
        assert!((subsel_selection_value(sel) - 101f64.sqrt()).abs() < 1e-6);
        subsel_selection_free(sel);

        let mut sel = ptr::null_mut();
        assert_eq!(
            subsel_select(h, SubselObjective::FacilityLocation, 2, 0, &mut sel),
            SubselStatus::Validation
        );
        assert!(last_error().contains("row 0"));

        let rays = features(&[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.1], 4, 2);
        let mut sel = ptr::null_mut();
        assert_eq!(
            subsel_select(rays, SubselObjective::FacilityLocation, 3, 2, &mut sel),
            SubselStatus::Ok
        );
        assert_eq!(subsel_selection_len(sel), 3);
        assert!(subsel_selection_value(sel) > 0.0);
        subsel_selection_free(sel);
        subsel_features_free(rays);

        let mut single = ptr::null_mut();
        assert_eq!(
            subsel_select(h, SubselObjective::DisparityMin, 1, 0, &mut single),
            SubselStatus::Ok
        );
        assert_eq!(subsel_selection_value(single), f64::INFINITY);
        subsel_selection_free(single);
        subsel_features_free(h);
    }
}

#[test]
fn select_rejects_bad_arguments() {
    let h = features(&SQUARE, 4, 2);
    let mut sel = ptr::null_mut();
    unsafe {
        assert_eq!(
            subsel_select(h, SubselObjective::FacilityLocation, 5, 0, &mut sel),
            SubselStatus::Validation
        );
        assert_eq!(
            subsel_select(h, SubselObjective::DisparityMin, 2, 1, &mut sel),
            SubselStatus::InvalidArgument
        );
        assert_eq!(
            subsel_select(h, SubselObjective::FacilityLocation, 2, 4, &mut sel),
            SubselStatus::Validation
        );
        assert_eq!(
            subsel_select(
                ptr::null(),
                SubselObjective::FacilityLocation,
                2,
                0,
                &mut sel
            ),
            SubselStatus::NullPointer
        );
        assert!(sel.is_null());
        assert_eq!(subsel_selection_len(ptr::null()), 0);
        assert!(subsel_selection_indices(ptr::null()).is_null());
        assert!(subsel_selection_value(ptr::null()).is_nan());
        assert_eq!(subsel_features_rows(ptr::null()), 0);
        subsel_selection_free(ptr::null_mut());
        subsel_features_free(ptr::null_mut());
        subsel_features_free(h);
    }
}

#[test]
fn uncertainty_values() {
    let p = [0.5, 0.3, 0.2];
    let expected = [
        (SubselUncertainty::LeastConfidence, 0.5),
        (SubselUncertainty::Margin, 0.8),
        (SubselUncertainty::Entropy, 1.485_475_297_227_334_3),
    ];
    for (method, want) in expected {
        let mut out = f64::NAN;
        let status = unsafe { subsel_uncertainty(p.as_ptr(), 3, method, &mut out) };
        assert_eq!(status, SubselStatus::Ok);
        assert!((out - want).abs() < 1e-12);
    }
    let mut out = 0.0;
    let bad = [0.7, 0.7];
    unsafe {
        assert_eq!(
            subsel_uncertainty(bad.as_ptr(), 2, SubselUncertainty::Margin, &mut out),
            SubselStatus::Validation
        );
        assert_eq!(
            subsel_uncertainty([1.0].as_ptr(), 1, SubselUncertainty::Entropy, &mut out),
            SubselStatus::Validation
        );
    }
}

#[test]
fn filter_includes_ties() {
    let scores = [0.5, 0.9, 0.1, 0.5];
    let mut positions = [usize::MAX; 4];
    let mut len = 0;
    let status = unsafe {
        subsel_filter_uncertain(scores.as_ptr(), 4, 50.0, positions.as_mut_ptr(), &mut len)
    };
    assert_eq!(status, SubselStatus::Ok);
    assert_eq!(&positions[..len], &[1, 0, 3]);
    let status = unsafe {
        subsel_filter_uncertain(scores.as_ptr(), 0, 50.0, positions.as_mut_ptr(), &mut len)
    };
    assert_eq!(status, SubselStatus::Validation);
    assert!(!last_error().is_empty());
}

#[test]
fn header_declares_every_entry_point() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/subsel.h")).unwrap();
    for name in [
        "subsel_last_error",
        "subsel_features_load",
        "subsel_features_from_data",
        "subsel_features_save",
        "subsel_features_rows",
        "subsel_features_cols",
        "subsel_features_free",
        "subsel_select",
        "subsel_selection_len",
        "subsel_selection_indices",
        "subsel_selection_value",
        "subsel_selection_free",
        "subsel_uncertainty",
        "subsel_filter_uncertain",
        "SUBSEL_STATUS_OK",
        "typedef struct SubselFeatures SubselFeatures",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
