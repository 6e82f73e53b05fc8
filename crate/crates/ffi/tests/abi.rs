use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use vidmas::harness::{generate_corpus, write_corpus, SyntheticSpec};
use vidmas_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> serde_json::Value {
    assert!(!s.is_null());
    let v = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
    vidmas_string_free(s);
    v
}

fn last_error() -> String {
    let p = vidmas_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn corpus_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        docs_per_domain: 6,
        ..SyntheticSpec::default()
    };
    write_corpus(&generate_corpus(&spec).unwrap(), dir.path()).unwrap();
    dir
}

unsafe fn open(data_dir: Option<&Path>) -> *mut VidmasEngine {
    let dir = data_dir.map(|d| c(d.to_str().unwrap()));
    let mut engine = ptr::null_mut();
    let status = vidmas_engine_open(
        ptr::null(),
        dir.as_ref().map_or(ptr::null(), |d| d.as_ptr()),
        &mut engine,
    );
    assert_eq!(status, VidmasStatus::Ok);
    assert!(!engine.is_null());
    engine
}

unsafe fn load(engine: *mut VidmasEngine, corpus: &Path) {
    let mut out = ptr::null_mut();
    let descriptors = c(corpus.join("descriptors").to_str().unwrap());
    assert_eq!(vidmas_ingest(engine, descriptors.as_ptr(), &mut out), VidmasStatus::Ok);
    assert_eq!(take(out)["ingested"], 18);
    let labels = c(corpus.join("train.jsonl").to_str().unwrap());
    assert_eq!(vidmas_train(engine, labels.as_ptr(), &mut out), VidmasStatus::Ok);
    assert!(take(out)["training_accuracy"].as_f64().is_some());
    let (user, country, language) = (c("ana"), c("FR"), c("fr"));
    assert_eq!(
        vidmas_create_user(engine, user.as_ptr(), country.as_ptr(), language.as_ptr()),
        VidmasStatus::Ok
    );
}

#[test]
fn query_feedback_round_trip() {
    let corpus = corpus_dir();
    unsafe {
        let engine = open(None);
        load(engine, corpus.path());
        let (user, domain, text) = (c("ana"), c("sports"), c("football"));
        let mut out = ptr::null_mut();
        assert_eq!(
            vidmas_query(engine, user.as_ptr(), domain.as_ptr(), text.as_ptr(), 3, &mut out),
            VidmasStatus::Ok
        );
        let resp = take(out);
        let doc = resp["results"][0]["doc_id"].as_str().unwrap().to_string();

        let doc_c = c(&doc);
        let mut tau = 0.0;
        assert_eq!(
            vidmas_feedback(engine, user.as_ptr(), doc_c.as_ptr(), 5, &mut tau),
            VidmasStatus::Ok
        );
        assert!((tau - 2.0).abs() < 1e-12);

        let mut moved = usize::MAX;
        assert_eq!(vidmas_reorganize(engine, false, &mut moved), VidmasStatus::Ok);
        assert_eq!(moved, 1);
        assert_eq!(vidmas_stats(engine, &mut out), VidmasStatus::Ok);
        assert_eq!(take(out)["active"], 1);

        assert_eq!(
            vidmas_suggest(engine, user.as_ptr(), domain.as_ptr(), 5, &mut out),
            VidmasStatus::Ok
        );
        assert_eq!(take(out)[0]["text"], "football");
        vidmas_engine_free(engine);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let engine = open(None);
        let (user, doc) = (c("ghost"), c("nope"));
        let mut tau = 0.0;
        assert_eq!(
            vidmas_feedback(engine, user.as_ptr(), doc.as_ptr(), 3, &mut tau),
            VidmasStatus::UnknownUser
        );
        assert!(last_error().starts_with("UnknownUser"));

        let (domain, text) = (c("cooking"), c("pasta"));
        let mut out = ptr::null_mut();
        let status = vidmas_query(engine, user.as_ptr(), domain.as_ptr(), text.as_ptr(), 3, &mut out);
        assert_eq!(status, VidmasStatus::UnknownDomain);
        assert!(out.is_null());

        assert_eq!(vidmas_stats(ptr::null_mut(), &mut out), VidmasStatus::NullPointer);
        assert_eq!(vidmas_stats(engine, ptr::null_mut()), VidmasStatus::NullPointer);
        assert_eq!(
            vidmas_feedback(engine, ptr::null(), doc.as_ptr(), 3, &mut tau),
            VidmasStatus::NullPointer
        );

        let bad = [0xffu8, 0];
        assert_eq!(
            vidmas_feedback(engine, bad.as_ptr().cast(), doc.as_ptr(), 3, &mut tau),
            VidmasStatus::InvalidUtf8
        );

        assert_eq!(vidmas_stats(engine, &mut out), VidmasStatus::Ok);
        assert!(vidmas_last_error_message().is_null());
        take(out);
        vidmas_engine_free(engine);
        vidmas_engine_free(ptr::null_mut());
        vidmas_string_free(ptr::null_mut());
    }
}

#[test]
fn global_performance_over_the_abi() {
    let mut p = 0.0;
    unsafe {
        assert_eq!(
            vidmas_global_performance([0.9, 0.8].as_ptr(), 2, &mut p),
            VidmasStatus::Ok
        );
        assert_eq!(p, 0.9 * 0.8);
        assert_eq!(vidmas_global_performance(ptr::null(), 0, &mut p), VidmasStatus::Ok);
        assert_eq!(p, 1.0);
        assert_eq!(
            vidmas_global_performance([0.5, 1.5].as_ptr(), 2, &mut p),
            VidmasStatus::OutOfRangePerformance
        );
        assert_eq!(
            vidmas_global_performance(ptr::null(), 3, &mut p),
            VidmasStatus::NullPointer
        );
    }
}

#[test]
fn saved_store_reopens() {
    let corpus = corpus_dir();
    let store = tempfile::tempdir().unwrap();
    unsafe {
        let engine = open(Some(store.path()));
        load(engine, corpus.path());
        assert_eq!(vidmas_save(engine), VidmasStatus::Ok);
        vidmas_engine_free(engine);

        let engine = open(Some(store.path()));
        let mut out = ptr::null_mut();
        assert_eq!(vidmas_stats(engine, &mut out), VidmasStatus::Ok);
        assert_eq!(take(out)["total"], 18);
        let (user, country, language) = (c("ana"), c("FR"), c("fr"));
        assert_eq!(
            vidmas_create_user(engine, user.as_ptr(), country.as_ptr(), language.as_ptr()),
            VidmasStatus::DuplicateUser
        );
        vidmas_engine_free(engine);
    }
}

#[test]
fn bad_config_path_is_io_failure() {
    let path = c("/nonexistent/vidmas.toml");
    let mut engine = ptr::null_mut();
    let status = unsafe { vidmas_engine_open(path.as_ptr(), ptr::null(), &mut engine) };
    assert_eq!(status, VidmasStatus::IoFailure);
    assert!(engine.is_null());
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_header() {
    let lib_dir = target_dir();
    if !lib_dir.join("libvidmas_ffi.so").exists() && !lib_dir.join("libvidmas_ffi.dylib").exists() {
        eprintln!("shared library not built in {}; skipping", lib_dir.display());
        return;
    }
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let work = tempfile::tempdir().unwrap();
    let exe = work.path().join("smoke");
    let built = Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lvidmas_ffi")
        .arg("-o")
        .arg(&exe)
        .status();
    match built {
        Ok(s) => assert!(s.success(), "C compilation failed"),
        Err(e) => {
            eprintln!("no C compiler ({e}); skipping");
            return;
        }
    }
    let corpus = corpus_dir();
    let out = Command::new(&exe)
        .arg(corpus.path().join("descriptors"))
        .arg(corpus.path().join("train.jsonl"))
        .env("LD_LIBRARY_PATH", &lib_dir)
        .env("DYLD_LIBRARY_PATH", &lib_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let line = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(fields.len(), 3, "{line}");
    assert!(fields[0].starts_with("sports-"));
    assert_eq!(fields[1], "2.000000");
    assert_eq!(fields[2], "0.250000");
}
