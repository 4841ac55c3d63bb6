use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use synlex_ffi::*;

const WHO: &str = "INDEX: who\tENTRY: who\tPOS: Noun\tFRAME: Base_Noun\tFS: wh+";
const MAP_OUT: &str = "INDEX: map\tENTRY: map out\tPOS: Verb Verb_Particle\tFRAME: Transitive_Verb_Particle";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    synlex_string_free(p);
    s
}

unsafe fn last_error() -> String {
    CStr::from_ptr(synlex_last_error_message()).to_string_lossy().into_owned()
}

#[test]
fn put_lookup_query_delete_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let path = c(dir.path().join("lex.db").to_str().unwrap());
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(synlex_open(path.as_ptr(), true, &mut h), SynlexStatus::Ok);
        assert_eq!(synlex_put_flat(h, c(WHO).as_ptr()), SynlexStatus::Ok);
        assert_eq!(synlex_put_flat(h, c(MAP_OUT).as_ptr()), SynlexStatus::Ok);
        assert_eq!(synlex_put_flat(h, c(WHO).as_ptr()), SynlexStatus::Duplicate);
        assert!(last_error().contains("who"));

        let mut out = ptr::null_mut();
        assert_eq!(synlex_lookup_flat(h, c("map").as_ptr(), SynlexMode::Verbose, &mut out), SynlexStatus::Ok);
        assert_eq!(take(out), format!("{MAP_OUT}\n"));
        assert_eq!(synlex_lookup_flat(h, c("absent").as_ptr(), SynlexMode::Verbose, &mut out), SynlexStatus::Ok);
        assert_eq!(take(out), "");

        assert_eq!(synlex_query_flat(h, c("FS=wh+").as_ptr(), SynlexMode::Xtag, &mut out), SynlexStatus::Ok);
        assert_eq!(take(out), "INDEX: who\tENTRY: who\tPOS: N\tFRAME: N\tFS: +wh\n");
        assert_eq!(synlex_query_flat(h, c("EX=x").as_ptr(), SynlexMode::Xtag, &mut out), SynlexStatus::Query);

        assert_eq!(synlex_render(h, c(WHO).as_ptr(), SynlexMode::Verbose, &mut out), SynlexStatus::Ok);
        assert_eq!(take(out), "INDEX: who\nENTRY: who\nPOS: Noun\nFRAME: Base_Noun\nFS: wh+\n");

        let mut m0 = 0;
        synlex_mutation_counter(h, &mut m0);
        assert_eq!(synlex_delete_flat(h, c(WHO).as_ptr()), SynlexStatus::Ok);
        assert_eq!(synlex_delete_flat(h, c(WHO).as_ptr()), SynlexStatus::NotFound);
        let mut m1 = 0;
        synlex_mutation_counter(h, &mut m1);
        assert!(m1 > m0);
        assert_eq!(synlex_close(h), SynlexStatus::Ok);

        let mut h = ptr::null_mut();
        assert_eq!(synlex_open(path.as_ptr(), false, &mut h), SynlexStatus::Ok);
        let mut n = 0;
        assert_eq!(synlex_len(h, &mut n), SynlexStatus::Ok);
        assert_eq!(n, 1);
        assert_eq!(synlex_put_flat(h, c(WHO).as_ptr()), SynlexStatus::ReadOnly);
        assert_eq!(synlex_close(h), SynlexStatus::Ok);
    }
}

#[test]
fn error_codes() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut h = ptr::null_mut();
        let missing = c(dir.path().join("missing.db").to_str().unwrap());
        assert_eq!(synlex_open(missing.as_ptr(), false, &mut h), SynlexStatus::Io);
        assert!(last_error().contains("missing.db"));

        let junk = dir.path().join("junk.db");
        std::fs::write(&junk, b"not a store at all, just some bytes that are long enough to fill a header....").unwrap();
        let junk = c(junk.to_str().unwrap());
        assert_eq!(synlex_open(junk.as_ptr(), false, &mut h), SynlexStatus::Integrity);

        let path = c(dir.path().join("lex.db").to_str().unwrap());
        assert_eq!(synlex_open(path.as_ptr(), true, &mut h), SynlexStatus::Ok);
        assert_eq!(synlex_put_flat(h, c("INDEX: x").as_ptr()), SynlexStatus::Parse);
        let bad = "INDEX: x\tENTRY: x\tPOS: Noun\tFRAME: Transitive_Verb";
        assert_eq!(synlex_put_flat(h, c(bad).as_ptr()), SynlexStatus::Parse);
        assert!(last_error().contains("frame not in POS registry"));
        let invalid = [0xffu8, 0];
        assert_eq!(synlex_put_flat(h, invalid.as_ptr().cast()), SynlexStatus::InvalidUtf8);
        assert_eq!(synlex_close(h), SynlexStatus::Ok);
    }
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libsynlex_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg(crate_dir.join("examples/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).arg(dir.path().join("c.db")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "INDEX: who\tENTRY: who\tPOS: N\tFRAME: N\tFS: +wh\nlen=1\n"
    );
}
