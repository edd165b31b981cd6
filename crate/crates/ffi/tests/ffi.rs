use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use newsmacro::synthetic::{generate_world, WorldSpec};
use newsmacro_ffi::*;

fn last_error() -> String {
    let p = nm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn line() -> CString {
    let mut cols = vec![""; 27];
    cols[0] = "20170301000000-12";
    cols[1] = "20170301000000";
    cols[7] = "ECON_INFLATION;TAX_FNCACT";
    cols[9] = "1#United States#US#US#39.828#-98.5795#US";
    cols[15] = "-1.5,2,3.5,5.5,20,0,612";
    cols[17] = "wc:612,c3.1:7,v10.1:5.5";
    CString::new(cols.join("\t")).unwrap()
}

#[test]
fn record_handle_exposes_parsed_fields() {
    let mut rec = ptr::null_mut();
    unsafe {
        assert_eq!(nm_record_parse(line().as_ptr(), &mut rec), NmStatus::Ok);
        assert_eq!(CStr::from_ptr(nm_record_id(rec)).to_str().unwrap(), "20170301000000-12");
        let mut wc = 0u64;
        assert_eq!(nm_record_word_count(rec, &mut wc), NmStatus::Ok);
        assert_eq!(wc, 612);
        let mut tone = 0.0;
        assert_eq!(nm_record_average_tone(rec, &mut tone), NmStatus::Ok);
        assert_eq!(tone, -1.5);
        let (mut themes, mut locations) = (0usize, 0usize);
        assert_eq!(nm_record_counts(rec, &mut themes, &mut locations), NmStatus::Ok);
        assert_eq!((themes, locations), (2, 1));
        let key = CString::new("c3.1").unwrap();
        let mut v = 0.0;
        assert_eq!(nm_record_gcam_value(rec, key.as_ptr(), &mut v), NmStatus::Ok);
        assert_eq!(v, 7.0);
        let missing = CString::new("c9.9").unwrap();
        assert_eq!(nm_record_gcam_value(rec, missing.as_ptr(), &mut v), NmStatus::NotFound);
        nm_record_free(rec);
        nm_record_free(ptr::null_mut());
    }
}

#[test]
fn malformed_line_sets_error() {
    let bad = CString::new("a\tb").unwrap();
    let mut rec = ptr::null_mut();
    assert_eq!(unsafe { nm_record_parse(bad.as_ptr(), &mut rec) }, NmStatus::ParseError);
    assert!(rec.is_null());
    assert!(last_error().contains("expected 27 columns"));
    assert_eq!(unsafe { nm_record_parse(ptr::null(), &mut rec) }, NmStatus::NullArgument);
}

#[test]
fn bh_matches_library() {
    let p = [0.01, 0.04, 0.02, 0.5];
    let mut out = [0.0; 4];
    assert_eq!(unsafe { nm_bh_adjust(p.as_ptr(), 4, out.as_mut_ptr()) }, NmStatus::Ok);
    assert_eq!(out.to_vec(), newsmacro::econometrics::bh_adjust(&p).unwrap());
    assert!(nm_last_error().is_null());

    let bad = [1.5];
    assert_eq!(unsafe { nm_bh_adjust(bad.as_ptr(), 1, out.as_mut_ptr()) }, NmStatus::InvalidArgument);
    assert_eq!(unsafe { nm_bh_adjust(ptr::null(), 3, out.as_mut_ptr()) }, NmStatus::NullArgument);
}

#[test]
fn dm_and_adf() {
    let a: Vec<f64> = (0..40).map(|i| ((i * 7919) % 13) as f64 / 6.0 - 1.0).collect();
    let b: Vec<f64> = a.iter().map(|x| 1.7 * x + 0.1).collect();
    let mut r = NmDmResult::default();
    assert_eq!(unsafe { nm_dm_test(a.as_ptr(), b.as_ptr(), 40, 1, &mut r) }, NmStatus::Ok);
    let lib = newsmacro::econometrics::dm_test(&a, &b, 1).unwrap();
    assert_eq!((r.statistic, r.p_value), (lib.statistic, lib.p_value));
    assert_eq!(unsafe { nm_dm_test(a.as_ptr(), a.as_ptr(), 40, 1, &mut r) }, NmStatus::Ok);
    assert!(r.degenerate && r.p_value == 1.0);
    assert_eq!(unsafe { nm_dm_test(a.as_ptr(), b.as_ptr(), 5, 1, &mut r) }, NmStatus::InsufficientData);

    let series: Vec<f64> = (0..120).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
    let mut adf = NmAdfResult::default();
    assert_eq!(unsafe { nm_adf_test(series.as_ptr(), series.len(), 4, &mut adf) }, NmStatus::Ok);
    let lib = newsmacro::econometrics::adf_test(&series, 4).unwrap();
    assert_eq!(adf.t_stat, lib.t_stat);
    assert_eq!(adf.critical_values, lib.critical_values);
}

#[test]
fn pls_handle_round_trip() {
    let (n, k) = (30, 4);
    let x: Vec<f64> = (0..n * k).map(|i| ((i * 2654435761usize) % 1000) as f64 / 500.0 - 1.0).collect();
    let y: Vec<f64> = (0..n).map(|i| x[i * k] - 0.5 * x[i * k + 2] + 0.01 * (i % 3) as f64).collect();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(nm_pls_fit(x.as_ptr(), n, k, y.as_ptr(), 2, &mut model), NmStatus::Ok);
        let mut a = 0;
        assert_eq!(nm_pls_components(model, &mut a), NmStatus::Ok);
        assert_eq!(a, 2);
        let mut pred = vec![0.0; n];
        assert_eq!(nm_pls_predict(model, x.as_ptr(), n, pred.as_mut_ptr()), NmStatus::Ok);
        let lib = newsmacro::econometrics::simpls(&nalgebra::DMatrix::from_row_slice(n, k, &x), &nalgebra::DVector::from_vec(y.clone()), 2)
            .unwrap()
            .predict(&nalgebra::DMatrix::from_row_slice(n, k, &x))
            .unwrap();
        assert_eq!(pred, lib.as_slice());
        nm_pls_free(model);
    }
}

#[test]
fn pipeline_errors_carry_json() {
    let dir = tempfile::tempdir().unwrap();
    let world = generate_world(&WorldSpec {
        relevant_per_month: 20,
        irrelevant_per_month: 5,
        noise_per_month: 40,
        labeled_per_topic: 200,
        ..WorldSpec::default()
    });
    let config = world.write(&dir.path().join("world"), false).unwrap();
    let config = CString::new(config.to_str().unwrap()).unwrap();
    let out = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();

    let forecast = CString::new("forecast").unwrap();
    let status = unsafe { nm_run_pipeline(config.as_ptr(), out.as_ptr(), forecast.as_ptr(), -1) };
    assert_eq!(status, NmStatus::PipelineError);
    let err: serde_json::Value = serde_json::from_str(&last_error()).unwrap();
    assert_eq!(err["error"], "MissingArtifact");
    assert_eq!(err["stage"], "forecast");

    let bogus = CString::new("nonsense").unwrap();
    assert_eq!(unsafe { nm_run_pipeline(config.as_ptr(), out.as_ptr(), bogus.as_ptr(), -1) }, NmStatus::InvalidArgument);

    let ingest = CString::new("ingest").unwrap();
    assert_eq!(unsafe { nm_run_pipeline(config.as_ptr(), out.as_ptr(), ingest.as_ptr(), 3) }, NmStatus::Ok);
    assert!(dir.path().join("out/ingest/corpus.gkg").exists());
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/newsmacro.h");
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(out) = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, header])
            .output()
        else {
            eprintln!("{compiler} not available; skipping");
            continue;
        };
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
