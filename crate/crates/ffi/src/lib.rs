//! C ABI over the cotrap toolkit.
//!
//! Every fallible function returns a [`CotrapStatus`] and writes its result
//! through an out-pointer. On failure `cotrap_last_error()` describes the
//! problem for the calling thread. Handles are opaque; release each with
//! its matching `_free` function. Strings returned by the library are owned
//! by the handle they came from unless documented otherwise.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cotrap::dataset::SampleId;
use cotrap::detector::{CoVerdict, Detector};
use cotrap::metrics::{decrease_ratio, rel_incr, MetricsError};
use cotrap::prompt::{classify_sparsity, insert_block, truncate_block, InsertionOffset, PromptVariant, SparsityClass, VariantKind};
use cotrap::source::extract_comment_blocks;
use cotrap::{Decimal2, SourceFile};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CotrapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    OutOfRange = 4,
    ZeroDenominator = 5,
    Panic = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CotrapSparsity {
    SurroundedBlank = 0,
    LeadingBlank = 1,
    TrailingBlank = 2,
    Tight = 3,
    Misaligned = 4,
}

impl From<SparsityClass> for CotrapSparsity {
    fn from(c: SparsityClass) -> Self {
        match c {
            SparsityClass::SurroundedBlank => CotrapSparsity::SurroundedBlank,
            SparsityClass::LeadingBlank => CotrapSparsity::LeadingBlank,
            SparsityClass::TrailingBlank => CotrapSparsity::TrailingBlank,
            SparsityClass::Tight => CotrapSparsity::Tight,
            SparsityClass::Misaligned => CotrapSparsity::Misaligned,
        }
    }
}

/// One comment block judged to be commented-out code.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CotrapBlock {
    pub start_line: usize,
    pub end_line: usize,
    pub co_line_count: usize,
}

/// Commented-out code blocks found in one source text.
pub struct CotrapDetection {
    blocks: Vec<CotrapBlock>,
}

/// A prompt with a block inserted relative to its completion point.
pub struct CotrapVariant {
    variant: PromptVariant,
    text: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(message).expect("nul bytes replaced"));
}

struct Failure(CotrapStatus, String);

impl Failure {
    fn new(status: CotrapStatus, message: impl Into<String>) -> Self {
        Failure(status, message.into())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CotrapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CotrapStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CotrapStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(CotrapStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(CotrapStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::new(CotrapStatus::NullPointer, format!("{what} is null")))
}

fn ratio(result: Result<Decimal2, MetricsError>) -> Result<i64, Failure> {
    result
        .map(Decimal2::hundredths)
        .map_err(|e| Failure::new(CotrapStatus::ZeroDenominator, e.to_string()))
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn cotrap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cotrap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Relative increase of `count` over `blank`, in hundredths of a percent.
///
/// # Safety
/// `out_hundredths` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cotrap_rel_incr(count: u64, blank: u64, out_hundredths: *mut i64) -> CotrapStatus {
    guard(|| {
        let out = out(out_hundredths, "out_hundredths")?;
        *out = ratio(rel_incr(count, blank))?;
        Ok(())
    })
}

/// Relative decrease from `before` to `after`, in hundredths of a percent.
///
/// # Safety
/// `out_hundredths` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cotrap_decrease_ratio(before: u64, after: u64, out_hundredths: *mut i64) -> CotrapStatus {
    guard(|| {
        let out = out(out_hundredths, "out_hundredths")?;
        *out = ratio(decrease_ratio(before, after))?;
        Ok(())
    })
}

/// Finds the commented-out code blocks of a Python source text.
///
/// # Safety
/// `source` must be null or a NUL-terminated string; `out_detection` must
/// be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cotrap_detect(source: *const c_char, out_detection: *mut *mut CotrapDetection) -> CotrapStatus {
    guard(|| {
        let slot = out(out_detection, "out_detection")?;
        *slot = ptr::null_mut();
        let file = SourceFile::new("<ffi>", text(source, "source")?);
        let detector = Detector::default();
        let blocks = extract_comment_blocks(&file)
            .iter()
            .map(|b| detector.verdict(b))
            .filter(CoVerdict::is_co)
            .map(|v| CotrapBlock {
                start_line: v.span.start_line(),
                end_line: v.span.end_line(),
                co_line_count: v.co_line_count,
            })
            .collect();
        *slot = Box::into_raw(Box::new(CotrapDetection { blocks }));
        Ok(())
    })
}

/// Number of blocks in a detection; 0 for a null handle.
///
/// # Safety
/// `detection` must be null or a live handle from `cotrap_detect`.
#[no_mangle]
pub unsafe extern "C" fn cotrap_detection_len(detection: *const CotrapDetection) -> usize {
    detection.as_ref().map_or(0, |d| d.blocks.len())
}

/// # Safety
/// `detection` must be null or a live handle; `out_block` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cotrap_detection_get(
    detection: *const CotrapDetection,
    index: usize,
    out_block: *mut CotrapBlock,
) -> CotrapStatus {
    guard(|| {
        let d = detection
            .as_ref()
            .ok_or_else(|| Failure::new(CotrapStatus::NullPointer, "detection is null"))?;
        let block = d.blocks.get(index).ok_or_else(|| {
            Failure::new(CotrapStatus::OutOfRange, format!("index {index} out of {} blocks", d.blocks.len()))
        })?;
        *out(out_block, "out_block")? = *block;
        Ok(())
    })
}

/// # Safety
/// `detection` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cotrap_detection_free(detection: *mut CotrapDetection) {
    if !detection.is_null() {
        drop(Box::from_raw(detection));
    }
}

/// Inserts `co_block` so its first line lands on context line
/// `completion_point + offset`. Offsets run from -8 to -1 and 1 to 3.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out_variant` must be
/// null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cotrap_insert_block(
    context: *const c_char,
    co_block: *const c_char,
    completion_point: usize,
    offset: i32,
    out_variant: *mut *mut CotrapVariant,
) -> CotrapStatus {
    guard(|| {
        let slot = out(out_variant, "out_variant")?;
        *slot = ptr::null_mut();
        let context = text(context, "context")?;
        let block = text(co_block, "co_block")?;
        let invalid = |e: cotrap::prompt::ForgeError| Failure::new(CotrapStatus::InvalidArgument, e.to_string());
        let offset = InsertionOffset::new(offset.into()).map_err(invalid)?;
        let ins = insert_block(context, block, completion_point, offset).map_err(|e| match e {
            cotrap::prompt::ForgeError::OutOfRange { .. } => Failure::new(CotrapStatus::OutOfRange, e.to_string()),
            other => invalid(other),
        })?;
        let text = CString::new(ins.text.clone()).map_err(|_| Failure::new(CotrapStatus::InvalidArgument, "prompt contains NUL"))?;
        let variant = PromptVariant {
            sample_id: SampleId(0),
            kind: VariantKind::FullInsertion,
            offset: Some(offset),
            text: ins.text,
            inserted_span: Some(ins.inserted_span),
            completion_point_in_prompt: ins.completion_point_in_prompt,
            instruction_line: None,
        };
        *slot = Box::into_raw(Box::new(CotrapVariant { variant, text }));
        Ok(())
    })
}

/// The prompt text, owned by the handle. Null for a null handle.
///
/// # Safety
/// `variant` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cotrap_variant_text(variant: *const CotrapVariant) -> *const c_char {
    variant.as_ref().map_or(ptr::null(), |v| v.text.as_ptr())
}

/// Inserted line range and the completion point within the prompt.
///
/// # Safety
/// `variant` must be null or a live handle; out-pointers must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cotrap_variant_geometry(
    variant: *const CotrapVariant,
    out_start_line: *mut usize,
    out_end_line: *mut usize,
    out_completion_point: *mut usize,
) -> CotrapStatus {
    guard(|| {
        let v = &variant
            .as_ref()
            .ok_or_else(|| Failure::new(CotrapStatus::NullPointer, "variant is null"))?
            .variant;
        let span = v.inserted_span.expect("inserted variants carry a span");
        *out(out_start_line, "out_start_line")? = span.start_line();
        *out(out_end_line, "out_end_line")? = span.end_line();
        *out(out_completion_point, "out_completion_point")? = v.completion_point_in_prompt;
        Ok(())
    })
}

/// # Safety
/// `variant` must be null or a live handle; `out_class` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cotrap_variant_sparsity(variant: *const CotrapVariant, out_class: *mut CotrapSparsity) -> CotrapStatus {
    guard(|| {
        let v = variant
            .as_ref()
            .ok_or_else(|| Failure::new(CotrapStatus::NullPointer, "variant is null"))?;
        let class = classify_sparsity(&v.variant).map_err(|e| Failure::new(CotrapStatus::InvalidArgument, e.to_string()))?;
        *out(out_class, "out_class")? = class.into();
        Ok(())
    })
}

/// # Safety
/// `variant` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cotrap_variant_free(variant: *mut CotrapVariant) {
    if !variant.is_null() {
        drop(Box::from_raw(variant));
    }
}

/// Drops the trailing `fraction` of the block's characters, then any
/// trailing line left without its `#`. Release the result with
/// `cotrap_string_free`.
///
/// # Safety
/// `co_block` must be null or NUL-terminated; `out_text` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cotrap_truncate_block(co_block: *const c_char, fraction: c_double, out_text: *mut *mut c_char) -> CotrapStatus {
    guard(|| {
        let slot = out(out_text, "out_text")?;
        *slot = ptr::null_mut();
        let block = text(co_block, "co_block")?;
        let t = truncate_block(block, fraction).map_err(|e| Failure::new(CotrapStatus::InvalidArgument, e.to_string()))?;
        *slot = CString::new(t).expect("input had no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cotrap_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
