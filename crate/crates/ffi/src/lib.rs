//! C ABI for the vql engine: opaque handles, integer error codes, and
//! UTF-8 strings. The generated header lives in `include/vql.h`.
//!
//! Error codes mirror the CLI exit codes: 0 success, 1 store errors,
//! 2 query diagnostics, 3 runtime errors, plus 4 for invalid arguments
//! (null pointers, non-UTF-8 strings). After any non-zero return,
//! [`vql_last_error`] fetches a message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use vql::engine::{self, ExecOptions, IndexSet};
use vql::index::Indices;
use vql::query::{self, Catalog};
use vql::store::{Dictionary, RegionStore};

pub const VQL_OK: i32 = 0;
pub const VQL_ERR_STORE: i32 = 1;
pub const VQL_ERR_QUERY: i32 = 2;
pub const VQL_ERR_RUNTIME: i32 = 3;
pub const VQL_ERR_ARGUMENT: i32 = 4;

/// An immutable region store plus its registered dictionaries.
pub struct VqlStore {
    inner: RegionStore,
}

/// Text and region indices built from one store.
pub struct VqlIndices {
    inner: Indices,
}

/// A finished query result.
pub struct VqlResult {
    inner: engine::ResultSet,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).unwrap_or_default();
    });
}

fn guard<F: FnOnce() -> i32>(f: F) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic");
            VQL_ERR_RUNTIME
        }
    }
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn utf8_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, i32> {
    if s.is_null() {
        set_error(format!("{what} is null"));
        return Err(VQL_ERR_ARGUMENT);
    }
    match unsafe { CStr::from_ptr(s) }.to_str() {
        Ok(s) => Ok(s),
        Err(_) => {
            set_error(format!("{what} is not valid UTF-8"));
            Err(VQL_ERR_ARGUMENT)
        }
    }
}

/// Message describing the most recent error on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vql_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer previously returned by a `vql_*` function
/// that documents this deallocator, and not freed before.
#[no_mangle]
pub unsafe extern "C" fn vql_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Loads a JSONL region store from `path`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vql_store_load(path: *const c_char, out: *mut *mut VqlStore) -> i32 {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return VQL_ERR_ARGUMENT;
        }
        let path = match unsafe { utf8_arg(path, "path") } {
            Ok(p) => p,
            Err(code) => return code,
        };
        match RegionStore::load_path(Path::new(path)) {
            Ok(store) => {
                unsafe { *out = Box::into_raw(Box::new(VqlStore { inner: store })) };
                VQL_OK
            }
            Err(e) => {
                set_error(e.to_string());
                VQL_ERR_STORE
            }
        }
    })
}

/// Generates a deterministic synthetic store (see the `gen` CLI command).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vql_store_generate(
    pages: u64,
    regions_per_page: u64,
    seed: u64,
    out: *mut *mut VqlStore,
) -> i32 {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return VQL_ERR_ARGUMENT;
        }
        if pages == 0 || regions_per_page == 0 {
            set_error("pages and regions_per_page must be at least 1");
            return VQL_ERR_ARGUMENT;
        }
        let store = vql::store::synth::synth_corpus(
            pages as usize,
            regions_per_page as usize,
            &vql::store::synth::default_vocabulary(),
            seed,
        );
        unsafe { *out = Box::into_raw(Box::new(VqlStore { inner: store })) };
        VQL_OK
    })
}

/// Registers a dictionary from a plain-text file (one phrase per line).
///
/// # Safety
/// `store` must be a live handle from a `vql_store_*` constructor; `name`
/// and `path` must be valid NUL-terminated strings. The store must not be
/// in concurrent use.
#[no_mangle]
pub unsafe extern "C" fn vql_store_register_dictionary(
    store: *mut VqlStore,
    name: *const c_char,
    path: *const c_char,
) -> i32 {
    guard(|| {
        if store.is_null() {
            set_error("store is null");
            return VQL_ERR_ARGUMENT;
        }
        let name = match unsafe { utf8_arg(name, "name") } {
            Ok(s) => s.to_string(),
            Err(code) => return code,
        };
        let path = match unsafe { utf8_arg(path, "path") } {
            Ok(s) => s,
            Err(code) => return code,
        };
        let file = match std::fs::File::open(path) {
            Ok(f) => f,
            Err(e) => {
                set_error(format!("{path}: {e}"));
                return VQL_ERR_STORE;
            }
        };
        match Dictionary::from_reader(std::io::BufReader::new(file)) {
            Ok(dict) => {
                unsafe { &mut *store }.inner.register_dictionary(name, dict);
                VQL_OK
            }
            Err(e) => {
                set_error(format!("{path}: {e}"));
                VQL_ERR_STORE
            }
        }
    })
}

/// Number of pages in the store.
///
/// # Safety
/// `store` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn vql_store_page_count(store: *const VqlStore) -> i64 {
    if store.is_null() {
        return -1;
    }
    unsafe { &*store }.inner.page_count() as i64
}

/// Number of regions in the store.
///
/// # Safety
/// `store` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn vql_store_region_count(store: *const VqlStore) -> i64 {
    if store.is_null() {
        return -1;
    }
    unsafe { &*store }.inner.region_count() as i64
}

/// # Safety
/// `store` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn vql_store_free(store: *mut VqlStore) {
    if !store.is_null() {
        drop(unsafe { Box::from_raw(store) });
    }
}

/// Builds the text and region indices for a store.
///
/// # Safety
/// `store` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vql_indices_build(
    store: *const VqlStore,
    out: *mut *mut VqlIndices,
) -> i32 {
    guard(|| {
        if store.is_null() || out.is_null() {
            set_error("store or out is null");
            return VQL_ERR_ARGUMENT;
        }
        let indices = Indices::build(&unsafe { &*store }.inner);
        unsafe { *out = Box::into_raw(Box::new(VqlIndices { inner: indices })) };
        VQL_OK
    })
}

/// # Safety
/// `indices` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn vql_indices_free(indices: *mut VqlIndices) {
    if !indices.is_null() {
        drop(unsafe { Box::from_raw(indices) });
    }
}

/// # Safety
/// When non-null, `indices` must stay alive for the duration of the call.
unsafe fn index_set<'a>(indices: *const VqlIndices) -> IndexSet<'a> {
    if indices.is_null() {
        IndexSet::default()
    } else {
        let inner = unsafe { &(*indices).inner };
        IndexSet {
            text: Some(&inner.text),
            region: Some(&inner.region),
        }
    }
}

/// Compiles and runs a query. `indices` may be null for unindexed
/// execution.
///
/// # Safety
/// `store` must be a live handle, `indices` null or a live handle built
/// from the same store, `query` a valid NUL-terminated string, and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vql_query_run(
    store: *const VqlStore,
    indices: *const VqlIndices,
    query: *const c_char,
    out: *mut *mut VqlResult,
) -> i32 {
    guard(|| {
        if store.is_null() || out.is_null() {
            set_error("store or out is null");
            return VQL_ERR_ARGUMENT;
        }
        let text = match unsafe { utf8_arg(query, "query") } {
            Ok(s) => s,
            Err(code) => return code,
        };
        let store = &unsafe { &*store }.inner;
        let tq = match query::compile(text, &Catalog::from_store(store)) {
            Ok(tq) => tq,
            Err(diags) => {
                set_error(
                    diags
                        .iter()
                        .map(|d| d.render(text))
                        .collect::<Vec<_>>()
                        .join("\n"),
                );
                return VQL_ERR_QUERY;
            }
        };
        let plan = engine::lower(&tq);
        let iset = unsafe { index_set(indices) };
        let phys = engine::optimize(&plan, store, iset);
        match engine::execute(&phys, store, iset, &ExecOptions::default()) {
            Ok(result) => {
                unsafe { *out = Box::into_raw(Box::new(VqlResult { inner: result })) };
                VQL_OK
            }
            Err(e) => {
                set_error(e.to_string());
                VQL_ERR_RUNTIME
            }
        }
    })
}

/// Number of rows in a result.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn vql_result_row_count(result: *const VqlResult) -> i64 {
    if result.is_null() {
        return -1;
    }
    unsafe { &*result }.inner.len() as i64
}

/// Serializes a result as JSONL (one object per row). Free the returned
/// string with [`vql_string_free`]; returns null on error.
///
/// # Safety
/// `store` and `result` must be live handles, with `result` produced from
/// `store`.
#[no_mangle]
pub unsafe extern "C" fn vql_result_to_jsonl(
    store: *const VqlStore,
    result: *const VqlResult,
) -> *mut c_char {
    if store.is_null() || result.is_null() {
        set_error("store or result is null");
        return std::ptr::null_mut();
    }
    let text = unsafe { &*result }.inner.to_jsonl(&unsafe { &*store }.inner);
    CString::new(text.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// # Safety
/// `result` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn vql_result_free(result: *mut VqlResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}

/// Renders the optimized plan for a query. Free with [`vql_string_free`];
/// returns null on error (fetch it with [`vql_last_error`]).
///
/// # Safety
/// As for [`vql_query_run`].
#[no_mangle]
pub unsafe extern "C" fn vql_explain(
    store: *const VqlStore,
    indices: *const VqlIndices,
    query: *const c_char,
) -> *mut c_char {
    if store.is_null() {
        set_error("store is null");
        return std::ptr::null_mut();
    }
    let text = match unsafe { utf8_arg(query, "query") } {
        Ok(s) => s,
        Err(_) => return std::ptr::null_mut(),
    };
    let store = &unsafe { &*store }.inner;
    let tq = match query::compile(text, &Catalog::from_store(store)) {
        Ok(tq) => tq,
        Err(diags) => {
            set_error(
                diags
                    .iter()
                    .map(|d| d.render(text))
                    .collect::<Vec<_>>()
                    .join("\n"),
            );
            return std::ptr::null_mut();
        }
    };
    let plan = engine::lower(&tq);
    let iset = unsafe { index_set(indices) };
    let rendered = engine::explain(&engine::optimize(&plan, store, iset));
    CString::new(rendered.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// Translates a query into a SQL statement over the Regions schema. The
/// store supplies the dictionary catalog and may be null when the query
/// uses no dictionaries. Free with [`vql_string_free`].
///
/// # Safety
/// `store` must be null or a live handle; `query` a valid NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn vql_emit_sql(
    store: *const VqlStore,
    query: *const c_char,
    strict: bool,
) -> *mut c_char {
    let text = match unsafe { utf8_arg(query, "query") } {
        Ok(s) => s,
        Err(_) => return std::ptr::null_mut(),
    };
    let catalog = if store.is_null() {
        Catalog::default()
    } else {
        Catalog::from_store(&unsafe { &*store }.inner)
    };
    let tq = match query::compile(text, &catalog) {
        Ok(tq) => tq,
        Err(diags) => {
            set_error(
                diags
                    .iter()
                    .map(|d| d.render(text))
                    .collect::<Vec<_>>()
                    .join("\n"),
            );
            return std::ptr::null_mut();
        }
    };
    let plan = engine::lower(&tq);
    let emitted = if strict {
        vql::sql::emit_strict(&plan)
    } else {
        vql::sql::emit(&plan)
    };
    match emitted {
        Ok(sql) => CString::new(sql.statement.replace('\0', " "))
            .map(CString::into_raw)
            .unwrap_or(std::ptr::null_mut()),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}
