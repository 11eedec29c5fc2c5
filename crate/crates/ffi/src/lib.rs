//! C ABI over `amr-bench`: parse and serialize graphs, measure depth, validate, extract
//! graphs from raw generations and compute SMATCH.
//!
//! Conventions:
//! - every function returns an [`AmrStatus`]; outputs go through pointer arguments and are
//!   only written on `AMR_STATUS_OK` (and, for validation, `AMR_STATUS_STRUCTURAL`),
//! - on any other status [`amr_last_error`] describes the failure,
//! - strings are NUL-terminated UTF-8; strings returned by this library are released with
//!   [`amr_string_free`], graphs with [`amr_graph_free`],
//! - panics never cross the boundary; they surface as `AMR_STATUS_PANIC`.

use amr_bench::analysis;
use amr_bench::extraction::{extract_amr, TemplateFamily};
use amr_bench::penman::{parse, serialize, validate};
use amr_bench::smatch::{score_pair, PairOutcome, ScoreConfig};
use amr_bench::AmrGraph;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmrStatus {
    Ok = 0,
    /// The input is not a well-formed graph; details in `amr_last_error`.
    Structural = 1,
    NullPointer = -1,
    InvalidUtf8 = -2,
    /// A gold graph does not parse, or a result could not be represented.
    Integrity = -3,
    InvalidArgument = -4,
    Panic = -99,
}

/// Chat template used to wrap a raw generation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmrTemplateFamily {
    Llama32 = 0,
    DeepSeekR1LlamaDistilled = 1,
    Phi35 = 2,
    Gemma2 = 3,
    Plain = 4,
}

impl From<AmrTemplateFamily> for TemplateFamily {
    fn from(f: AmrTemplateFamily) -> Self {
        match f {
            AmrTemplateFamily::Llama32 => TemplateFamily::Llama32,
            AmrTemplateFamily::DeepSeekR1LlamaDistilled => TemplateFamily::DeepSeekR1LlamaDistilled,
            AmrTemplateFamily::Phi35 => TemplateFamily::Phi35,
            AmrTemplateFamily::Gemma2 => TemplateFamily::Gemma2,
            AmrTemplateFamily::Plain => TemplateFamily::Plain,
        }
    }
}

/// Opaque parsed graph.
pub struct AmrGraphHandle {
    graph: AmrGraph,
}

/// SMATCH result for one pair.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AmrScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub gold_triples: usize,
    pub pred_triples: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let msg = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

type Failure = (AmrStatus, String);

/// Clears the last error, runs `f`, and converts failures and panics into a status.
fn guard(f: impl FnOnce() -> Result<AmrStatus, Failure>) -> AmrStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AmrStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or a NUL-terminated string valid for the duration of the call.
unsafe fn input<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err((AmrStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (AmrStatus::InvalidUtf8, format!("{name} is not UTF-8: {e}")))
}

fn output_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| (AmrStatus::Integrity, "result contains a NUL byte".into()))
}

fn non_null<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err((AmrStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Message describing the last failed call on this thread, or NULL. Owned by the library and
/// valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn amr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses Penman text (optionally preceded by `# ::` header lines) into a new graph.
///
/// # Safety
/// `text` is a NUL-terminated string; `out` points to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn amr_parse(text: *const c_char, out: *mut *mut AmrGraphHandle) -> AmrStatus {
    guard(|| {
        non_null(out, "out")?;
        let text = input(text, "text")?;
        let graph = parse(text).map_err(|r| (AmrStatus::Structural, r.to_string()))?;
        *out = Box::into_raw(Box::new(AmrGraphHandle { graph }));
        Ok(AmrStatus::Ok)
    })
}

/// Releases a graph from [`amr_parse`]. NULL is ignored.
///
/// # Safety
/// `graph` is NULL or a live handle from [`amr_parse`], not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn amr_graph_free(graph: *mut AmrGraphHandle) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

unsafe fn graph_ref<'a>(graph: *const AmrGraphHandle) -> Result<&'a AmrGraph, Failure> {
    graph
        .as_ref()
        .map(|h| &h.graph)
        .ok_or((AmrStatus::NullPointer, "graph is null".into()))
}

/// Depth of the graph along its Penman nesting (a single node has depth 0).
///
/// # Safety
/// `graph` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn amr_graph_depth(graph: *const AmrGraphHandle, out: *mut usize) -> AmrStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = analysis::depth(graph_ref(graph)?);
        Ok(AmrStatus::Ok)
    })
}

/// Number of variables (instances) in the graph.
///
/// # Safety
/// `graph` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn amr_graph_variable_count(graph: *const AmrGraphHandle, out: *mut usize) -> AmrStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = graph_ref(graph)?.variable_count();
        Ok(AmrStatus::Ok)
    })
}

/// Number of triples (instances plus edges) in the graph.
///
/// # Safety
/// `graph` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn amr_graph_triple_count(graph: *const AmrGraphHandle, out: *mut usize) -> AmrStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = analysis::extract_triples(graph_ref(graph)?).len();
        Ok(AmrStatus::Ok)
    })
}

/// Pretty-prints the graph. Free the result with [`amr_string_free`].
///
/// # Safety
/// `graph` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn amr_graph_serialize(graph: *const AmrGraphHandle, out: *mut *mut c_char) -> AmrStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = output_string(serialize(graph_ref(graph)?))?;
        Ok(AmrStatus::Ok)
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` is NULL or a string returned by this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn amr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Validates `text`, writing the number of structural errors to `error_count`. Returns
/// `AMR_STATUS_OK` for a valid graph and `AMR_STATUS_STRUCTURAL` otherwise.
///
/// # Safety
/// `text` is a NUL-terminated string; `error_count` is writable.
#[no_mangle]
pub unsafe extern "C" fn amr_validate(text: *const c_char, error_count: *mut usize) -> AmrStatus {
    guard(|| {
        non_null(error_count, "error_count")?;
        let report = validate(input(text, "text")?);
        *error_count = report.error_count();
        if report.valid {
            Ok(AmrStatus::Ok)
        } else {
            Err((AmrStatus::Structural, report.to_string()))
        }
    })
}

/// SMATCH of `pred` against `gold`. `restarts` must be at least 1. Returns
/// `AMR_STATUS_STRUCTURAL` when `pred` does not parse and `AMR_STATUS_INTEGRITY` when `gold`
/// does not.
///
/// # Safety
/// `gold` and `pred` are NUL-terminated strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn amr_score(
    gold: *const c_char,
    pred: *const c_char,
    restarts: u32,
    seed: u64,
    out: *mut AmrScore,
) -> AmrStatus {
    guard(|| {
        non_null(out, "out")?;
        if restarts == 0 {
            return Err((AmrStatus::InvalidArgument, "restarts must be at least 1".into()));
        }
        let config = ScoreConfig {
            restarts: restarts as usize,
            seed,
            ..ScoreConfig::default()
        };
        let outcome = score_pair(input(gold, "gold")?, input(pred, "pred")?, &config)
            .map_err(|e| (AmrStatus::Integrity, e.to_string()))?;
        match outcome {
            PairOutcome::Scored(r) => {
                *out = AmrScore {
                    precision: r.precision,
                    recall: r.recall,
                    f1: r.f1,
                    matched: r.matched,
                    gold_triples: r.gold_triples,
                    pred_triples: r.pred_triples,
                };
                Ok(AmrStatus::Ok)
            }
            PairOutcome::Invalid(report) => Err((AmrStatus::Structural, report.to_string())),
        }
    })
}

/// Extracts the graph text from a raw generation of the given template family. Free the
/// result with [`amr_string_free`].
///
/// # Safety
/// `raw` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn amr_extract(
    raw: *const c_char,
    family: AmrTemplateFamily,
    out: *mut *mut c_char,
) -> AmrStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = output_string(extract_amr(input(raw, "raw")?, family.into()))?;
        Ok(AmrStatus::Ok)
    })
}
