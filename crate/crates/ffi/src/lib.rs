//! C ABI over the lexicon store.
//!
//! Entries cross the boundary as flat-file text (one entry per line), the
//! same format the `synlex` tool reads and writes. Every function returns
//! a [`SynlexStatus`]; on failure, [`synlex_last_error_message`] describes
//! the most recent error on the calling thread. Strings returned through
//! `out` parameters are owned by the caller and must be released with
//! [`synlex_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use synlex::flatfile::{parse_entry_line, serialize_lexicon_as};
use synlex::lexstore::StoreError;
use synlex::query::{eval_query, render_entry, Query, QueryError};
use synlex::{OpenMode, RenderMode, Store};

/// Result code of every call. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynlexStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Integrity = 4,
    VersionMismatch = 5,
    RegistryMismatch = 6,
    ReadOnly = 7,
    Duplicate = 8,
    NotFound = 9,
    InvalidEntry = 10,
    Query = 11,
    Parse = 12,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynlexMode {
    Verbose = 0,
    Xtag = 1,
}

impl From<SynlexMode> for RenderMode {
    fn from(m: SynlexMode) -> RenderMode {
        match m {
            SynlexMode::Verbose => RenderMode::Verbose,
            SynlexMode::Xtag => RenderMode::Xtag,
        }
    }
}

/// Opaque store handle.
pub struct SynlexStore {
    inner: Store,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SynlexStatus, String);

impl Failure {
    fn null(what: &str) -> Failure {
        Failure(SynlexStatus::NullArgument, format!("{what} is null"))
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Failure {
        let status = match &e {
            StoreError::Io { .. } => SynlexStatus::Io,
            StoreError::Integrity { .. } | StoreError::Codec(_) => SynlexStatus::Integrity,
            StoreError::VersionMismatch { .. } => SynlexStatus::VersionMismatch,
            StoreError::RegistryMismatch { .. } => SynlexStatus::RegistryMismatch,
            StoreError::ReadOnly => SynlexStatus::ReadOnly,
            StoreError::Duplicate(_) => SynlexStatus::Duplicate,
            StoreError::NotFound(_) | StoreError::UnknownRecord(_) => SynlexStatus::NotFound,
            StoreError::Invalid(_) => SynlexStatus::InvalidEntry,
        };
        Failure(status, e.to_string())
    }
}

impl From<QueryError> for Failure {
    fn from(e: QueryError) -> Failure {
        match e {
            QueryError::Store(s) => s.into(),
            other => Failure(SynlexStatus::Query, other.to_string()),
        }
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SynlexStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SynlexStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SynlexStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SynlexStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn store_ref<'a>(p: *const SynlexStore) -> Result<&'a SynlexStore, Failure> {
    p.as_ref().ok_or_else(|| Failure::null("store"))
}

unsafe fn store_mut<'a>(p: *mut SynlexStore) -> Result<&'a mut SynlexStore, Failure> {
    p.as_mut().ok_or_else(|| Failure::null("store"))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null("out"));
    }
    let c = CString::new(s).map_err(|_| Failure(SynlexStatus::Parse, "result contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn parse_line(store: &Store, line: &str) -> Result<synlex::LexEntry, Failure> {
    parse_entry_line(line, store.registry()).map_err(|diags| {
        let msg = diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        Failure(SynlexStatus::Parse, msg)
    })
}

fn flat_text(store: &Store, entries: &[synlex::LexEntry], mode: SynlexMode) -> Result<String, Failure> {
    serialize_lexicon_as(entries, store.registry(), mode.into())
        .map_err(|e| Failure(SynlexStatus::InvalidEntry, e.to_string()))
}

/// Open a store. A writable open creates the file when it is missing.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn synlex_open(
    path: *const c_char,
    writable: bool,
    out: *mut *mut SynlexStore,
) -> SynlexStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let mode = if writable { OpenMode::ReadWrite } else { OpenMode::ReadOnly };
        let inner = Store::open(path, mode, None)?;
        *out = Box::into_raw(Box::new(SynlexStore { inner }));
        Ok(())
    })
}

/// Flush and release a handle. Null is accepted and ignored.
///
/// # Safety
/// `store` must come from [`synlex_open`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn synlex_close(store: *mut SynlexStore) -> SynlexStatus {
    guard(|| {
        if store.is_null() {
            return Ok(());
        }
        let handle = Box::from_raw(store);
        handle.inner.close()?;
        Ok(())
    })
}

/// Number of live entries.
///
/// # Safety
/// `store` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn synlex_len(store: *const SynlexStore, out: *mut u64) -> SynlexStatus {
    guard(|| {
        let s = store_ref(store)?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = s.inner.len();
        Ok(())
    })
}

/// Store mutation counter; it changes whenever entries are added or
/// removed.
///
/// # Safety
/// `store` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn synlex_mutation_counter(store: *const SynlexStore, out: *mut u64) -> SynlexStatus {
    guard(|| {
        let s = store_ref(store)?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = s.inner.mutation_counter();
        Ok(())
    })
}

/// All entries under `index`, as flat-file lines (empty string if none).
///
/// # Safety
/// `store` must be a live handle, `index` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn synlex_lookup_flat(
    store: *const SynlexStore,
    index: *const c_char,
    mode: SynlexMode,
    out: *mut *mut c_char,
) -> SynlexStatus {
    guard(|| {
        let s = store_ref(store)?;
        let index = str_arg(index, "index")?;
        let entries = s.inner.lookup(index)?;
        put_string(out, flat_text(&s.inner, &entries, mode)?)
    })
}

/// Entries matching a query such as `POS=Noun FS=wh+`, as flat-file lines.
///
/// # Safety
/// `store` must be a live handle, `query` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn synlex_query_flat(
    store: *const SynlexStore,
    query: *const c_char,
    mode: SynlexMode,
    out: *mut *mut c_char,
) -> SynlexStatus {
    guard(|| {
        let s = store_ref(store)?;
        let q = Query::parse(str_arg(query, "query")?)?;
        let rs = eval_query(&s.inner, &q)?;
        put_string(out, flat_text(&s.inner, &rs.to_entries(), mode)?)
    })
}

/// Add one entry given as a flat-file line.
///
/// # Safety
/// `store` must be a live handle and `line` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn synlex_put_flat(store: *mut SynlexStore, line: *const c_char) -> SynlexStatus {
    guard(|| {
        let s = store_mut(store)?;
        let e = parse_line(&s.inner, str_arg(line, "line")?)?;
        s.inner.put(&e)?;
        Ok(())
    })
}

/// Remove the entry equal to a flat-file line.
///
/// # Safety
/// `store` must be a live handle and `line` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn synlex_delete_flat(store: *mut SynlexStore, line: *const c_char) -> SynlexStatus {
    guard(|| {
        let s = store_mut(store)?;
        let e = parse_line(&s.inner, str_arg(line, "line")?)?;
        s.inner.delete(&e)?;
        Ok(())
    })
}

/// Write pending changes so another process can open the file.
///
/// # Safety
/// `store` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn synlex_flush(store: *mut SynlexStore) -> SynlexStatus {
    guard(|| {
        store_mut(store)?.inner.flush()?;
        Ok(())
    })
}

/// Display block for a flat-file line (`INDEX: ...` one field per line).
///
/// # Safety
/// `store` must be a live handle, `line` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn synlex_render(
    store: *const SynlexStore,
    line: *const c_char,
    mode: SynlexMode,
    out: *mut *mut c_char,
) -> SynlexStatus {
    guard(|| {
        let s = store_ref(store)?;
        let e = parse_line(&s.inner, str_arg(line, "line")?)?;
        put_string(out, render_entry(&e, mode.into(), s.inner.registry()))
    })
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn synlex_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn synlex_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
