use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use ctg_core::fixtures::worked_example_instance;
use ctg_core::scenario::save_instance;
use ctg_ffi::*;

fn instance_json() -> CString {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    save_instance(&path, &worked_example_instance()).unwrap();
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ctg_last_error()) }.to_string_lossy().into_owned()
}

unsafe fn worked_catalog() -> *mut CtgCatalog {
    let mut cat = ptr::null_mut();
    let st = ctg_catalog_generate(instance_json().as_ptr(), 3, 10.0, CtgMetric::Euclidean, 1.0, &mut cat);
    assert_eq!(st, CtgStatus::Ok, "{}", last_error());
    cat
}

#[test]
fn catalog_shares_solve_verify() {
    unsafe {
        let cat = worked_catalog();
        assert_eq!(ctg_catalog_len(cat), 7);
        assert_eq!(ctg_catalog_riders(cat), 3);

        let pair = [1usize, 0];
        let mut cost = 0.0;
        assert_eq!(ctg_catalog_total_cost(cat, pair.as_ptr(), 2, &mut cost), CtgStatus::Ok);
        assert!((cost - 31.0).abs() < 1e-9);

        let mut shares = ptr::null_mut();
        assert_eq!(ctg_shares_build(cat, CtgProtocol::Externality, f64::NAN, &mut shares), CtgStatus::Ok);
        let mut s = 0.0;
        assert_eq!(ctg_shares_get(shares, cat, pair.as_ptr(), 2, 0, &mut s), CtgStatus::Ok);
        assert!((s - 12.0).abs() < 1e-9);

        let mut m = ptr::null_mut();
        assert_eq!(ctg_solve(cat, shares, CtgNotion::Rsie, CtgObjective::Minimize, &mut m), CtgStatus::Ok);
        let all = [0usize, 1, 2];
        let mut grand = 0.0;
        assert_eq!(ctg_catalog_total_cost(cat, all.as_ptr(), 3, &mut grand), CtgStatus::Ok);
        assert!((grand - 40.44).abs() < 0.01);
        assert_eq!(ctg_matching_objective(m), grand);
        assert_eq!(ctg_matching_len(m), 1);
        let mut buf = [0usize; 3];
        let mut len = 0;
        assert_eq!(ctg_matching_group(m, 0, buf.as_mut_ptr(), 3, &mut len), CtgStatus::Ok);
        assert_eq!(&buf[..len], &[0, 1, 2]);
        assert_eq!(ctg_matching_group(m, 0, buf.as_mut_ptr(), 1, &mut len), CtgStatus::BufferTooSmall);
        assert_eq!(len, 3);

        let mut holds = false;
        assert_eq!(ctg_verify(cat, shares, m, CtgNotion::Rsie, &mut holds), CtgStatus::Ok);
        assert!(holds);

        ctg_matching_free(m);
        ctg_shares_free(shares);
        ctg_catalog_free(cat);
    }
}

#[test]
fn json_round_trip() {
    unsafe {
        let cat = worked_catalog();
        let mut json = ptr::null_mut();
        assert_eq!(ctg_catalog_to_json(cat, &mut json), CtgStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(ctg_catalog_from_json(json, &mut back), CtgStatus::Ok);
        assert_eq!(ctg_catalog_len(back), 7);
        ctg_string_free(json);
        ctg_catalog_free(back);
        ctg_catalog_free(cat);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut cat = ptr::null_mut();
        assert_eq!(ctg_catalog_from_json(ptr::null(), &mut cat), CtgStatus::NullArgument);
        assert!(last_error().contains("null"));

        let bad = CString::new("[{\"members\": [0]}]").unwrap();
        assert_eq!(ctg_catalog_from_json(bad.as_ptr(), &mut cat), CtgStatus::InvalidInput);
        assert!(!last_error().is_empty());

        let cat = worked_catalog();
        assert!(last_error().is_empty());
        let unknown = [0usize, 7];
        let mut cost = 0.0;
        assert_eq!(ctg_catalog_total_cost(cat, unknown.as_ptr(), 2, &mut cost), CtgStatus::UnknownGroup);

        let mut shares = ptr::null_mut();
        assert_eq!(
            ctg_shares_build(cat, CtgProtocol::ExternalityOvercharged, 1.0, &mut shares),
            CtgStatus::InvalidInput
        );
        assert_eq!(ctg_shares_build(cat, CtgProtocol::Subgroup, f64::NAN, &mut shares), CtgStatus::Ok);
        let mut m = ptr::null_mut();
        assert_eq!(ctg_solve(cat, shares, CtgNotion::Tse, CtgObjective::Minimize, &mut m), CtgStatus::Unsupported);
        assert_eq!(ctg_solve(cat, ptr::null(), CtgNotion::Rhe, CtgObjective::Minimize, &mut m), CtgStatus::NullArgument);
        assert_eq!(ctg_solve(cat, ptr::null(), CtgNotion::None, CtgObjective::Maximize, &mut m), CtgStatus::Ok);
        assert_eq!(ctg_matching_len(m), 3);
        ctg_matching_free(m);
        ctg_shares_free(shares);
        ctg_catalog_free(cat);
    }
}

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "ctg.h"
int main(void) {
    CtgCatalog *cat = NULL;
    const char *json = "[{\"direct_costs\":{\"0\":1.0},\"members\":[0],\"operator_cost\":2.0,\"total_cost\":3.0},"
                       "{\"direct_costs\":{\"1\":1.0},\"members\":[1],\"operator_cost\":1.0,\"total_cost\":2.0},"
                       "{\"direct_costs\":{\"0\":1.0,\"1\":1.0},\"members\":[0,1],\"operator_cost\":2.0,\"total_cost\":4.0}]";
    if (ctg_catalog_from_json(json, &cat) != CTG_STATUS_OK) { fprintf(stderr, "%s\n", ctg_last_error()); return 1; }
    CtgMatching *m = NULL;
    if (ctg_solve(cat, NULL, CTG_NOTION_NONE, CTG_OBJECTIVE_MINIMIZE, &m) != CTG_STATUS_OK) return 2;
    printf("%zu %.2f\n", ctg_matching_len(m), ctg_matching_objective(m));
    ctg_matching_free(m);
    ctg_catalog_free(cat);
    return 0;
}
"#,
    )
    .unwrap();
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let lib = target_dir().join("libctg_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let bin = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "1 4.00");
}
