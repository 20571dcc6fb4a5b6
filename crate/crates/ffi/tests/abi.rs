use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use cotrap_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cotrap_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn ratios_in_hundredths() {
    let mut out = 0i64;
    unsafe {
        assert_eq!(cotrap_rel_incr(615, 394, &mut out), CotrapStatus::Ok);
        assert_eq!(out, 5609);
        assert_eq!(cotrap_decrease_ratio(630, 567, &mut out), CotrapStatus::Ok);
        assert_eq!(out, 1000);
        assert_eq!(cotrap_rel_incr(1, 0, &mut out), CotrapStatus::ZeroDenominator);
        assert!(!last_error().is_empty());
        assert_eq!(cotrap_rel_incr(1, 1, ptr::null_mut()), CotrapStatus::NullPointer);
        assert!(last_error().contains("out_hundredths"));
    }
}

#[test]
fn detection_handle() {
    let source = CString::new("x = 1\n# y = f(x)\n# z = g(y)\n# w = h(z)\npass\n# Prose only.\n").unwrap();
    let mut det = ptr::null_mut();
    unsafe {
        assert_eq!(cotrap_detect(source.as_ptr(), &mut det), CotrapStatus::Ok);
        assert_eq!(cotrap_detection_len(det), 1);
        let mut block = CotrapBlock {
            start_line: 0,
            end_line: 0,
            co_line_count: 0,
        };
        assert_eq!(cotrap_detection_get(det, 0, &mut block), CotrapStatus::Ok);
        assert_eq!((block.start_line, block.end_line, block.co_line_count), (2, 4, 3));
        assert_eq!(cotrap_detection_get(det, 1, &mut block), CotrapStatus::OutOfRange);
        cotrap_detection_free(det);
        assert_eq!(cotrap_detect(ptr::null(), &mut det), CotrapStatus::NullPointer);
        assert!(det.is_null());
        let bad = [0xffu8, 0];
        assert_eq!(cotrap_detect(bad.as_ptr().cast(), &mut det), CotrapStatus::InvalidUtf8);
    }
}

#[test]
fn variant_handle() {
    let context = CString::new("a = 1\nb = 2\nc = 3\n").unwrap();
    let block = CString::new("# leak(a)").unwrap();
    let mut v = ptr::null_mut();
    unsafe {
        assert_eq!(cotrap_insert_block(context.as_ptr(), block.as_ptr(), 3, -1, &mut v), CotrapStatus::Ok);
        let text = CStr::from_ptr(cotrap_variant_text(v)).to_str().unwrap();
        assert_eq!(text, "a = 1\n# leak(a)\nb = 2\nc = 3\n");
        let (mut s, mut e, mut cp) = (0, 0, 0);
        assert_eq!(cotrap_variant_geometry(v, &mut s, &mut e, &mut cp), CotrapStatus::Ok);
        assert_eq!((s, e, cp), (2, 2, 4));
        let mut class = CotrapSparsity::SurroundedBlank;
        assert_eq!(cotrap_variant_sparsity(v, &mut class), CotrapStatus::Ok);
        assert_eq!(class, CotrapSparsity::Tight);
        cotrap_variant_free(v);

        assert_eq!(cotrap_insert_block(context.as_ptr(), block.as_ptr(), 3, 0, &mut v), CotrapStatus::InvalidArgument);
        assert_eq!(cotrap_insert_block(context.as_ptr(), block.as_ptr(), 3, -3, &mut v), CotrapStatus::OutOfRange);
        assert!(v.is_null());
        cotrap_variant_free(ptr::null_mut());
    }
}

#[test]
fn truncation_string() {
    let block = CString::new("# abcdef\n# ghijkl").unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(cotrap_truncate_block(block.as_ptr(), 0.5, &mut out), CotrapStatus::Ok);
        assert_eq!(CStr::from_ptr(out).to_str().unwrap(), "# abcdef");
        cotrap_string_free(out);
        assert_eq!(cotrap_truncate_block(block.as_ptr(), 1.5, &mut out), CotrapStatus::InvalidArgument);
        assert!(out.is_null());
    }
}

fn target_dir() -> PathBuf {
    // tests/abi-<hash> lives in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_owned()
}

#[test]
fn c_program_links_against_the_header() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libcotrap_ffi.a");
    assert!(lib.is_file(), "static library missing at {}", lib.display());
    let tmp = tempfile_dir();
    let src = tmp.join("probe.c");
    std::fs::write(
        &src,
        r##"#include <stdio.h>
#include <string.h>
#include "cotrap.h"
int main(void) {
    int64_t h = 0;
    if (cotrap_rel_incr(658, 416, &h) != COTRAP_STATUS_OK || h != 5817) return 1;
    CotrapDetection *d = NULL;
    if (cotrap_detect("# import os\nx = 1\n", &d) != COTRAP_STATUS_OK) return 2;
    CotrapBlock b;
    if (cotrap_detection_len(d) != 1 || cotrap_detection_get(d, 0, &b) != COTRAP_STATUS_OK) return 3;
    cotrap_detection_free(d);
    if (cotrap_rel_incr(1, 0, &h) != COTRAP_STATUS_ZERO_DENOMINATOR || strlen(cotrap_last_error()) == 0) return 4;
    printf("%s %zu\n", cotrap_version(), (size_t)b.co_line_count);
    return 0;
}
"##,
    )
    .unwrap();
    let exe = tmp.join("probe");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("{} 1", env!("CARGO_PKG_VERSION")));
    std::fs::remove_dir_all(tmp).ok();
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cotrap-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
