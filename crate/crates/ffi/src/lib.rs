//! C ABI over `cgprobe`.
//!
//! Every function returns a [`CgpStatus`]. On anything other than
//! `CGP_STATUS_OK` the thread-local message from [`cgp_last_error_message`]
//! describes the failure. Treebanks are opaque handles released with
//! [`cgp_treebank_free`]; strings handed out by the library are released
//! with [`cgp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cgprobe::cg::{generate_cg, GenerationConfig, SourceTriple};
use cgprobe::conllu::{self, Split, Treebank};
use cgprobe::schema::SchemaConfig;
use cgprobe::{embeddings, probe, tasks, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CgpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Io = 4,
    Format = 5,
    MissingRecord = 6,
    Contract = 7,
    Config = 8,
    Data = 9,
    Probe = 10,
    OutOfRange = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CgpSplit {
    Train = 0,
    Dev = 1,
    Test = 2,
}

impl From<CgpSplit> for Split {
    fn from(s: CgpSplit) -> Split {
        match s {
            CgpSplit::Train => Split::Train,
            CgpSplit::Dev => Split::Dev,
            CgpSplit::Test => Split::Test,
        }
    }
}

/// Opaque treebank handle.
pub struct CgpTreebank {
    inner: Treebank,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(error: &Error) -> CgpStatus {
    match error {
        Error::Parse { .. } | Error::FileParse { .. } => CgpStatus::Parse,
        Error::Io { .. } | Error::Stream(_) => CgpStatus::Io,
        Error::Format { .. } => CgpStatus::Format,
        Error::MissingRecord(_) => CgpStatus::MissingRecord,
        Error::Contract(_) => CgpStatus::Contract,
        Error::Config(_) => CgpStatus::Config,
        Error::Probe(_) => CgpStatus::Probe,
        _ => CgpStatus::Data,
    }
}

struct Failure(CgpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CgpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CgpStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_owned());
            set_error(format!("internal panic: {message}"));
            CgpStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CgpStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CgpStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn handle<'a>(p: *const CgpTreebank, what: &str) -> Result<&'a Treebank, Failure> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

fn boxed(tb: Treebank) -> *mut CgpTreebank {
    Box::into_raw(Box::new(CgpTreebank { inner: tb }))
}

/// Message for the last failed call on this thread, or NULL after a
/// successful one. Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn cgp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parse CoNLL-U text strictly.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cgp_treebank_parse(
    text: *const c_char,
    split: CgpSplit,
    out: *mut *mut CgpTreebank,
) -> CgpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let tb = conllu::parse_conllu(c_str(text, "text")?, split.into())?;
        put(out, boxed(tb), "out")
    })
}

/// Read a CoNLL-U file. With `lenient`, invalid sentences are skipped.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cgp_treebank_read(
    path: *const c_char,
    split: CgpSplit,
    lenient: bool,
    out: *mut *mut CgpTreebank,
) -> CgpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let parsed = conllu::read_treebank(Path::new(c_str(path, "path")?), split.into(), lenient)?;
        put(out, boxed(parsed.treebank), "out")
    })
}

/// # Safety
/// `tb` must be NULL or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cgp_treebank_free(tb: *mut CgpTreebank) {
    if !tb.is_null() {
        drop(Box::from_raw(tb));
    }
}

/// # Safety
/// `tb` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cgp_treebank_sentence_count(tb: *const CgpTreebank, out: *mut usize) -> CgpStatus {
    guard(|| put(out, handle(tb, "tb")?.sentences.len(), "out"))
}

/// # Safety
/// `tb` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cgp_treebank_token_count(tb: *const CgpTreebank, out: *mut usize) -> CgpStatus {
    guard(|| put(out, handle(tb, "tb")?.token_count(), "out"))
}

/// Serialize to CoNLL-U. Release the string with [`cgp_string_free`].
///
/// # Safety
/// `tb` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cgp_treebank_serialize(tb: *const CgpTreebank, out: *mut *mut c_char) -> CgpStatus {
    guard(|| put(out, into_c_string(conllu::serialize(handle(tb, "tb")?)), "out"))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cgp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Depth in edges of sentence `index` (0-based).
///
/// # Safety
/// `tb` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cgp_treebank_tree_depth(tb: *const CgpTreebank, index: usize, out: *mut usize) -> CgpStatus {
    guard(|| {
        let tb = handle(tb, "tb")?;
        let sentence = tb.sentences.get(index).ok_or_else(|| {
            Failure(
                CgpStatus::OutOfRange,
                format!("sentence index {index} out of range ({} sentences)", tb.sentences.len()),
            )
        })?;
        put(out, tasks::tree_depth(sentence)?, "out")
    })
}

/// Support-weighted F1 over `len` parallel label strings.
///
/// # Safety
/// `predictions` and `golds` must each point to `len` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn cgp_weighted_f1(
    predictions: *const *const c_char,
    golds: *const *const c_char,
    len: usize,
    out: *mut f64,
) -> CgpStatus {
    guard(|| {
        if len > 0 && (predictions.is_null() || golds.is_null()) {
            return Err(null("labels"));
        }
        let mut p = Vec::with_capacity(len);
        let mut g = Vec::with_capacity(len);
        for i in 0..len {
            p.push(c_str(*predictions.add(i), "prediction")?);
            g.push(c_str(*golds.add(i), "gold")?);
        }
        put(out, probe::weighted_f1(&p, &g)?, "out")
    })
}

/// Validate a VYKE1 embedding file against `count` treebanks. `passed`
/// receives the verdict; `report_json`, if not NULL, receives the report
/// as JSON (release with [`cgp_string_free`]). A file that fails
/// validation still returns `CGP_STATUS_OK`.
///
/// # Safety
/// `path` must be a NUL-terminated string, `treebanks` must point to
/// `count` live handles and `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cgp_embeddings_validate(
    path: *const c_char,
    treebanks: *const *const CgpTreebank,
    count: usize,
    passed: *mut bool,
    report_json: *mut *mut c_char,
) -> CgpStatus {
    guard(|| {
        if count > 0 && treebanks.is_null() {
            return Err(null("treebanks"));
        }
        if passed.is_null() {
            return Err(null("passed"));
        }
        let tbs = (0..count)
            .map(|i| handle(*treebanks.add(i), "treebank"))
            .collect::<Result<Vec<_>, _>>()?;
        let report = embeddings::validate(Path::new(c_str(path, "path")?), &tbs)?;
        if !report_json.is_null() {
            let json = serde_json::to_string(&report).map_err(Error::from)?;
            report_json.write(into_c_string(json));
        }
        passed.write(report.passed());
        Ok(())
    })
}

/// Generate colorless-green treebanks with the default generation settings
/// and `seed`. Inputs must carry the train, dev and test splits. On
/// success the three outputs are new handles.
///
/// # Safety
/// Inputs must be live handles and outputs writable pointers.
#[no_mangle]
pub unsafe extern "C" fn cgp_generate_cg(
    train: *const CgpTreebank,
    dev: *const CgpTreebank,
    test: *const CgpTreebank,
    seed: u64,
    out_train: *mut *mut CgpTreebank,
    out_dev: *mut *mut CgpTreebank,
    out_test: *mut *mut CgpTreebank,
) -> CgpStatus {
    guard(|| {
        if out_train.is_null() || out_dev.is_null() || out_test.is_null() {
            return Err(null("out"));
        }
        let source = SourceTriple {
            train: handle(train, "train")?.clone(),
            dev: handle(dev, "dev")?.clone(),
            test: handle(test, "test")?.clone(),
        };
        let cg = generate_cg(&source, &GenerationConfig::with_seed(seed), &SchemaConfig::default())?;
        out_train.write(boxed(cg.train.treebank));
        out_dev.write(boxed(cg.dev.treebank));
        out_test.write(boxed(cg.test.treebank));
        Ok(())
    })
}
