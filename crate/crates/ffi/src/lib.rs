//! C ABI for the popstab synthesizer and verifier.
//!
//! Every fallible function returns a [`PopstabStatus`]. On anything other
//! than `POPSTAB_STATUS_OK` or a verification failure, a message is available
//! from [`popstab_last_error`] on the same thread. Handles are opaque and must
//! be released with their `_free` function; strings returned through `char **`
//! must be released with [`popstab_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use popstab::engine::Protocol;
use popstab::format::{parse_protocol, parse_spec, render_protocol};
use popstab::funcspec::{check_subset_closed, spec_root_set, FunctionSpec};
use popstab::multiset::parse_multiset;
use popstab::synthesizer::synthesize;
use popstab::verifier::{verify_self_stabilizing, DEFAULT_NODE_BUDGET};
use popstab::Error;

/// Result codes shared by every function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PopstabStatus {
    Ok = 0,
    /// The function is not subset-closed, or a verdict is violated.
    Failure = 1,
    /// Malformed text, unknown symbol, or mismatched alphabets.
    InvalidInput = 2,
    /// The configuration graph exceeds the node budget.
    Resource = 3,
    NullPointer = 4,
    Internal = 5,
}

/// A parsed function specification.
pub struct PopstabSpec {
    spec: FunctionSpec,
    budget: Option<u64>,
}

/// A protocol, synthesized or parsed from a protocol file.
pub struct PopstabProtocol {
    inner: Arc<dyn Protocol>,
}

/// Summary of one verification run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PopstabVerdict {
    pub self_stabilizing: bool,
    /// Index of `f(A)` in the output alphabet.
    pub expected_output: usize,
    pub nodes: u64,
    pub edges: u64,
    pub sccs: u64,
    pub bottom_sccs: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> PopstabStatus {
    match e {
        Error::NotSubsetClosed { .. } => PopstabStatus::Failure,
        Error::Resource(_) => PopstabStatus::Resource,
        Error::Internal(_) => PopstabStatus::Internal,
        _ => PopstabStatus::InvalidInput,
    }
}

/// Runs `f`, recording errors and converting panics to `Internal`.
fn guard(f: impl FnOnce() -> Result<PopstabStatus, (PopstabStatus, String)>) -> PopstabStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, message))) => {
            set_error(message);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            PopstabStatus::Internal
        }
    }
}

fn lib(e: Error) -> (PopstabStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (PopstabStatus, String) {
    (PopstabStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, (PopstabStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        (
            PopstabStatus::InvalidInput,
            format!("`{name}` is not UTF-8"),
        )
    })
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, (PopstabStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

fn give<T>(out: *mut *mut T, value: T) {
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

fn give_string(out: *mut *mut c_char, s: String) -> Result<(), (PopstabStatus, String)> {
    let c = CString::new(s)
        .map_err(|_| (PopstabStatus::Internal, "string contains NUL".to_string()))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// The message for the last failed call on this thread, or NULL. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn popstab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a specification file's contents.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn popstab_spec_parse(
    text: *const c_char,
    out: *mut *mut PopstabSpec,
) -> PopstabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let file = parse_spec(self::text(text, "text")?).map_err(lib)?;
        give(
            out,
            PopstabSpec {
                spec: file.spec,
                budget: file.budget,
            },
        );
        Ok(PopstabStatus::Ok)
    })
}

/// # Safety
/// `spec` must come from [`popstab_spec_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn popstab_spec_free(spec: *mut PopstabSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// `POPSTAB_STATUS_OK` if the function is subset-closed, `POPSTAB_STATUS_FAILURE`
/// with the violating pair in the last error otherwise.
///
/// # Safety
/// `spec` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn popstab_spec_check(spec: *const PopstabSpec) -> PopstabStatus {
    guard(|| {
        let s = &handle(spec, "spec")?.spec;
        check_subset_closed(s).into_result(s).map_err(lib)?;
        Ok(PopstabStatus::Ok)
    })
}

/// Number of roots in the minimal root set.
///
/// # Safety
/// `spec` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn popstab_spec_root_count(
    spec: *const PopstabSpec,
    out: *mut usize,
) -> PopstabStatus {
    guard(|| {
        let s = &handle(spec, "spec")?.spec;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = spec_root_set(s).map_err(lib)?.len();
        Ok(PopstabStatus::Ok)
    })
}

/// Builds the self-stabilizing protocol for a subset-closed spec.
///
/// # Safety
/// `spec` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn popstab_synthesize(
    spec: *const PopstabSpec,
    out: *mut *mut PopstabProtocol,
) -> PopstabStatus {
    guard(|| {
        let s = &handle(spec, "spec")?.spec;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = synthesize(s).map_err(lib)?;
        give(out, PopstabProtocol { inner: Arc::new(p) });
        Ok(PopstabStatus::Ok)
    })
}

/// Parses a protocol file's contents.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn popstab_protocol_parse(
    text: *const c_char,
    out: *mut *mut PopstabProtocol,
) -> PopstabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = parse_protocol(self::text(text, "text")?).map_err(lib)?;
        give(out, PopstabProtocol { inner: Arc::new(p) });
        Ok(PopstabStatus::Ok)
    })
}

/// # Safety
/// `protocol` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn popstab_protocol_free(protocol: *mut PopstabProtocol) {
    if !protocol.is_null() {
        drop(Box::from_raw(protocol));
    }
}

/// # Safety
/// `protocol` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn popstab_protocol_state_count(
    protocol: *const PopstabProtocol,
    out: *mut u32,
) -> PopstabStatus {
    guard(|| {
        let p = handle(protocol, "protocol")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = p.inner.num_states();
        Ok(PopstabStatus::Ok)
    })
}

/// Renders the protocol in the protocol file format.
///
/// # Safety
/// `protocol` must be a live handle and `out` a valid pointer. Release the
/// string with [`popstab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn popstab_protocol_render(
    protocol: *const PopstabProtocol,
    out: *mut *mut c_char,
) -> PopstabStatus {
    guard(|| {
        let p = handle(protocol, "protocol")?;
        if out.is_null() {
            return Err(null("out"));
        }
        give_string(out, render_protocol(p.inner.as_ref()))?;
        Ok(PopstabStatus::Ok)
    })
}

/// Model-checks `protocol` on one input of `spec`. A `budget` of 0 uses the
/// spec file's budget, or the default. Returns `POPSTAB_STATUS_FAILURE` when
/// the verdict is violated. `report` may be NULL; otherwise it receives the
/// rendered verdict.
///
/// # Safety
/// Handles must be live, `input` NUL-terminated, `verdict` valid, and
/// `report` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn popstab_verify(
    protocol: *const PopstabProtocol,
    spec: *const PopstabSpec,
    input: *const c_char,
    budget: u64,
    verdict: *mut PopstabVerdict,
    report: *mut *mut c_char,
) -> PopstabStatus {
    guard(|| {
        let p = handle(protocol, "protocol")?;
        let s = handle(spec, "spec")?;
        if verdict.is_null() {
            return Err(null("verdict"));
        }
        let a = parse_multiset(text(input, "input")?, s.spec.alphabet()).map_err(lib)?;
        let budget = if budget == 0 {
            s.budget.unwrap_or(DEFAULT_NODE_BUDGET)
        } else {
            budget
        };
        let v = verify_self_stabilizing(p.inner.as_ref(), &s.spec, &a, budget).map_err(lib)?;
        *verdict = PopstabVerdict {
            self_stabilizing: v.is_self_stabilizing(),
            expected_output: v.expected,
            nodes: v.stats.nodes as u64,
            edges: v.stats.edges as u64,
            sccs: v.stats.sccs as u64,
            bottom_sccs: v.stats.bottom_sccs as u64,
        };
        if !report.is_null() {
            give_string(report, v.render(p.inner.as_ref()))?;
        }
        Ok(if v.is_self_stabilizing() {
            PopstabStatus::Ok
        } else {
            PopstabStatus::Failure
        })
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn popstab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
