//! C ABI over the giots core: N-Triples graphs, query evaluation and the
//! offline validators.
//!
//! Every fallible call returns a [`GiotsStatus`]. On failure the message is
//! kept per thread and read with [`giots_last_error`]. Strings returned
//! through `out` parameters are owned by the caller and released with
//! [`giots_string_free`]; handles are released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use giots::knowledge::Ontology;
use giots::rdf::{parse_ntriples, serialize_ntriples, Graph};
use giots::rules::{RuleBase, RuleSpec};
use giots::sparql::{evaluate, parse_sparql};
use giots::validate::{Kind, Validator};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GiotsStatus {
    Ok = 0,
    /// A required pointer was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Input text did not parse (N-Triples, query, rule JSON).
    ParseError = 3,
    /// Input parsed but was rejected, e.g. an unknown validation kind.
    InvalidArgument = 4,
    /// The library panicked; the handle involved should be freed.
    Internal = 5,
}

/// An RDF graph.
pub struct GiotsGraph {
    graph: Graph,
}

/// Validator context: reference ontology, deployed rules and witness.
pub struct GiotsValidator {
    inner: Validator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: GiotsStatus, message: impl Into<String>) -> GiotsStatus {
    set_error(message);
    status
}

/// Runs `body`, turning panics into `Internal`.
fn guard(body: impl FnOnce() -> GiotsStatus) -> GiotsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(GiotsStatus::Internal, "internal panic"),
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, GiotsStatus> {
    if p.is_null() {
        return Err(fail(GiotsStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(GiotsStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn hand_out(out: *mut *mut c_char, s: String) -> GiotsStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            GiotsStatus::Ok
        }
        Err(_) => fail(GiotsStatus::Internal, "output contains a NUL byte"),
    }
}

macro_rules! try_arg {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

macro_rules! non_null {
    ($p:expr, $what:literal) => {
        if $p.is_null() {
            return fail(GiotsStatus::NullArgument, concat!($what, " is null"));
        }
    };
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn giots_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn giots_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn giots_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses N-Triples text into a new graph.
///
/// # Safety
/// `ntriples` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn giots_graph_parse(ntriples: *const c_char, out: *mut *mut GiotsGraph) -> GiotsStatus {
    guard(|| {
        non_null!(out, "out");
        let src = try_arg!(text(ntriples, "ntriples"));
        match parse_ntriples(src) {
            Ok(graph) => {
                *out = Box::into_raw(Box::new(GiotsGraph { graph }));
                GiotsStatus::Ok
            }
            Err(e) => fail(GiotsStatus::ParseError, e.to_string()),
        }
    })
}

/// Number of triples; 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn giots_graph_len(graph: *const GiotsGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.len())
}

/// Canonical N-Triples serialization of the graph.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn giots_graph_serialize(graph: *const GiotsGraph, out: *mut *mut c_char) -> GiotsStatus {
    guard(|| {
        non_null!(out, "out");
        let Some(g) = graph.as_ref() else {
            return fail(GiotsStatus::NullArgument, "graph is null");
        };
        hand_out(out, serialize_ntriples(&g.graph))
    })
}

/// Evaluates a SELECT or ASK query against the graph. The result is JSON:
/// `{"boolean": b}` or `{"solutions": [{var: term}, ...]}`.
///
/// # Safety
/// `graph` must be a live handle, `query` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn giots_graph_query(
    graph: *const GiotsGraph,
    query: *const c_char,
    out: *mut *mut c_char,
) -> GiotsStatus {
    guard(|| {
        non_null!(out, "out");
        let Some(g) = graph.as_ref() else {
            return fail(GiotsStatus::NullArgument, "graph is null");
        };
        let src = try_arg!(text(query, "query"));
        match parse_sparql(src) {
            Ok(q) => hand_out(out, evaluate(&q, &g.graph).to_json().to_string()),
            Err(e) => fail(GiotsStatus::ParseError, e.to_string()),
        }
    })
}

/// Releases a graph. Null is ignored.
///
/// # Safety
/// `graph` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn giots_graph_free(graph: *mut GiotsGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// A validator with an empty reference ontology and no deployed rules.
#[no_mangle]
pub extern "C" fn giots_validator_new() -> *mut GiotsValidator {
    Box::into_raw(Box::new(GiotsValidator {
        inner: Validator::default(),
    }))
}

/// Replaces the reference ontology with the given N-Triples.
///
/// # Safety
/// `validator` must be a live handle and `ntriples` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn giots_validator_set_reference(
    validator: *mut GiotsValidator,
    ntriples: *const c_char,
) -> GiotsStatus {
    guard(|| {
        let Some(v) = validator.as_mut() else {
            return fail(GiotsStatus::NullArgument, "validator is null");
        };
        let src = try_arg!(text(ntriples, "ntriples"));
        let graph = match parse_ntriples(src) {
            Ok(g) => g,
            Err(e) => return fail(GiotsStatus::ParseError, e.to_string()),
        };
        match Ontology::load(&graph) {
            Ok(onto) => {
                v.inner.reference = onto;
                GiotsStatus::Ok
            }
            Err(e) => fail(GiotsStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Replaces the deployed rules with a JSON array of rule objects.
///
/// # Safety
/// `validator` must be a live handle and `rules_json` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn giots_validator_set_rules(
    validator: *mut GiotsValidator,
    rules_json: *const c_char,
) -> GiotsStatus {
    guard(|| {
        let Some(v) = validator.as_mut() else {
            return fail(GiotsStatus::NullArgument, "validator is null");
        };
        let src = try_arg!(text(rules_json, "rules_json"));
        let specs: Vec<RuleSpec> = match serde_json::from_str(src) {
            Ok(s) => s,
            Err(e) => return fail(GiotsStatus::ParseError, e.to_string()),
        };
        match RuleBase::from_specs(&specs) {
            Ok(rules) => {
                v.inner.rules = rules;
                GiotsStatus::Ok
            }
            Err(e) => fail(GiotsStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Validates `payload` as `kind` (ontology, annotation, rule or sparql) and
/// writes the JSON report to `out`. A payload that fails validation is
/// still `Ok`; read `passed` in the report.
///
/// # Safety
/// `validator` must be a live handle, `kind` and `payload` NUL-terminated
/// strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn giots_validator_submit(
    validator: *const GiotsValidator,
    kind: *const c_char,
    payload: *const c_char,
    out: *mut *mut c_char,
) -> GiotsStatus {
    guard(|| {
        non_null!(out, "out");
        let Some(v) = validator.as_ref() else {
            return fail(GiotsStatus::NullArgument, "validator is null");
        };
        let kind: Kind = match try_arg!(text(kind, "kind")).parse() {
            Ok(k) => k,
            Err(e) => return fail(GiotsStatus::InvalidArgument, e),
        };
        let payload = try_arg!(text(payload, "payload"));
        let report = v.inner.submit(kind, payload);
        match serde_json::to_string(&report) {
            Ok(json) => hand_out(out, json),
            Err(e) => fail(GiotsStatus::Internal, e.to_string()),
        }
    })
}

/// Releases a validator. Null is ignored.
///
/// # Safety
/// `validator` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn giots_validator_free(validator: *mut GiotsValidator) {
    if !validator.is_null() {
        drop(Box::from_raw(validator));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    unsafe fn take(p: *mut c_char) -> String {
        let s = CStr::from_ptr(p).to_str().unwrap().to_string();
        giots_string_free(p);
        s
    }

    unsafe fn last_error() -> String {
        CStr::from_ptr(giots_last_error()).to_string_lossy().into_owned()
    }

    const NT: &str = "<http://e/b> <http://e/p> \"2\" .\n<http://e/a> <http://e/p> \"1\" .\n";

    #[test]
    fn graph_round_trip_and_query() {
        unsafe {
            let mut g = ptr::null_mut();
            assert_eq!(giots_graph_parse(c(NT).as_ptr(), &mut g), GiotsStatus::Ok);
            assert_eq!(giots_graph_len(g), 2);
            assert!(giots_last_error().is_null());

            let mut out = ptr::null_mut();
            assert_eq!(giots_graph_serialize(g, &mut out), GiotsStatus::Ok);
            let text = take(out);
            assert!(text.starts_with("<http://e/a>"), "canonical order: {text}");

            let q = c("ASK { ?s <http://e/p> \"2\" }");
            assert_eq!(giots_graph_query(g, q.as_ptr(), &mut out), GiotsStatus::Ok);
            assert_eq!(take(out), r#"{"boolean":true}"#);
            giots_graph_free(g);
        }
    }

    #[test]
    fn errors_carry_a_message() {
        unsafe {
            let mut g = ptr::null_mut();
            assert_eq!(
                giots_graph_parse(c("<a> <b>").as_ptr(), &mut g),
                GiotsStatus::ParseError
            );
            assert!(g.is_null());
            assert!(!last_error().is_empty());

            assert_eq!(giots_graph_parse(ptr::null(), &mut g), GiotsStatus::NullArgument);
            assert_eq!(last_error(), "ntriples is null");

            let bad = [0xffu8, 0];
            assert_eq!(giots_graph_parse(bad.as_ptr().cast(), &mut g), GiotsStatus::InvalidUtf8);

            let mut out = ptr::null_mut();
            assert_eq!(giots_graph_serialize(ptr::null(), &mut out), GiotsStatus::NullArgument);
            assert_eq!(giots_graph_len(ptr::null()), 0);
        }
    }

    #[test]
    fn bad_query_is_a_parse_error() {
        unsafe {
            let mut g = ptr::null_mut();
            giots_graph_parse(c(NT).as_ptr(), &mut g);
            let mut out = ptr::null_mut();
            assert_eq!(
                giots_graph_query(g, c("SELECT").as_ptr(), &mut out),
                GiotsStatus::ParseError
            );
            assert!(out.is_null());
            giots_graph_free(g);
        }
    }

    #[test]
    fn validator_reports_cycle() {
        let cycle = "<http://e/A> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://e/B> .\n\
                     <http://e/B> <http://www.w3.org/2000/01/rdf-schema#subClassOf> <http://e/A> .\n";
        unsafe {
            let v = giots_validator_new();
            let mut out = ptr::null_mut();
            assert_eq!(
                giots_validator_submit(v, c("ontology").as_ptr(), c(cycle).as_ptr(), &mut out),
                GiotsStatus::Ok
            );
            let report: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
            assert_eq!(report["passed"], false);
            assert_eq!(report["errors"][0]["category"], "logical");

            assert_eq!(
                giots_validator_submit(v, c("turtle").as_ptr(), c(cycle).as_ptr(), &mut out),
                GiotsStatus::InvalidArgument
            );
            assert_eq!(giots_validator_set_rules(v, c("[{").as_ptr()), GiotsStatus::ParseError);
            assert_eq!(giots_validator_set_rules(v, c("[]").as_ptr()), GiotsStatus::Ok);
            assert_eq!(giots_validator_set_reference(v, c(NT).as_ptr()), GiotsStatus::Ok);
            giots_validator_free(v);
        }
    }

    #[test]
    fn version_is_the_crate_version() {
        let v = unsafe { CStr::from_ptr(giots_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
