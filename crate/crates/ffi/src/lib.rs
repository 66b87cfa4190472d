//! C ABI over `mubsearch`.
//!
//! Objects cross the boundary as opaque handles created by `mub_*_new`-style
//! constructors and released with the matching `*_free`. Every fallible call
//! returns a [`MubStatus`]; on failure a message is available from
//! [`mub_last_error_message`] on the same thread.
//!
//! Matrices are exchanged as row-major arrays of interleaved `(re, im)`
//! doubles, `2·d²` values per matrix.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mubsearch::io::{write_trials_csv, SummaryRecord};
use mubsearch::{
    is_mub_set, objective_value, prime_mub_construction, run_search, BasisSet, Complex,
    ComplexMatrix, LmOptions, MubError, SearchConfig, SearchReport,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MubStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument is out of range or inconsistent with the others.
    InvalidArgument = 2,
    /// Input matrices are not unitary within tolerance.
    NotUnitary = 3,
    /// A numerical routine failed.
    Numerical = 4,
    /// Reading or writing a file failed.
    Io = 5,
    /// Internal error; the library state is unaffected.
    Panic = 6,
}

/// Opaque set of `n_bases` unitaries in dimension `d`, with the standard
/// basis implied.
pub struct MubBasisSet(BasisSet);

/// Opaque aggregate of a finished search.
pub struct MubSearchReport(SearchReport);

/// Plain-data search settings. Obtain defaults from
/// [`mub_search_options_default`] and adjust fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MubSearchOptions {
    pub d: usize,
    pub n_bases: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub success_threshold: f64,
    pub func_change_tol: f64,
    pub max_iterations: usize,
    pub parallelism: usize,
    pub bin_width: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: MubStatus, msg: impl Into<String>) -> MubStatus {
    set_error(msg);
    status
}

fn from_error(e: MubError) -> MubStatus {
    let status = match e {
        MubError::NotUnitary { .. } => MubStatus::NotUnitary,
        MubError::NoConvergence { .. }
        | MubError::RankDeficient { .. }
        | MubError::NonFinite { .. } => MubStatus::Numerical,
        _ => MubStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> MubStatus) -> MubStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == MubStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => fail(MubStatus::Panic, "internal panic"),
    }
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mub_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mub_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a basis set from `n_bases` matrices of dimension `d`, packed as
/// `n_bases · d · d` row-major complex entries (`2·n_bases·d²` doubles).
///
/// # Safety
/// `data` must point to `2·n_bases·d²` readable doubles and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mub_basis_set_new(
    d: usize,
    n_bases: usize,
    data: *const f64,
    out: *mut *mut MubBasisSet,
) -> MubStatus {
    guard(|| {
        if data.is_null() || out.is_null() {
            return fail(MubStatus::NullPointer, "null argument");
        }
        let Some(len) = d
            .checked_mul(d)
            .and_then(|x| x.checked_mul(n_bases))
            .and_then(|x| x.checked_mul(2))
        else {
            return fail(MubStatus::InvalidArgument, "size overflow");
        };
        if d == 0 || n_bases == 0 {
            return fail(MubStatus::InvalidArgument, "d and n_bases must be positive");
        }
        let values = std::slice::from_raw_parts(data, len);
        let bases = values
            .chunks_exact(2 * d * d)
            .map(|m| {
                let entries = m
                    .chunks_exact(2)
                    .map(|z| Complex::new(z[0], z[1]))
                    .collect();
                ComplexMatrix::from_row_major(d, d, entries)
            })
            .collect::<Result<Vec<_>, _>>();
        match bases.and_then(|b| BasisSet::new(d, b)) {
            Ok(set) => {
                *out = Box::into_raw(Box::new(MubBasisSet(set)));
                MubStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// The `d + 1` bases of the standard construction for prime `d` (returned
/// as `d` explicit bases plus the implied standard basis).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mub_prime_construction(d: usize, out: *mut *mut MubBasisSet) -> MubStatus {
    guard(|| {
        if out.is_null() {
            return fail(MubStatus::NullPointer, "null argument");
        }
        match prime_mub_construction(d) {
            Ok(set) => {
                *out = Box::into_raw(Box::new(MubBasisSet(set)));
                MubStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `set` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mub_basis_set_free(set: *mut MubBasisSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Dimension of the set, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mub_basis_set_dim(set: *const MubBasisSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.dim())
}

/// Number of explicit bases, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mub_basis_set_n_bases(set: *const MubBasisSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.n_bases())
}

/// Copies basis `k` into `out` as `2·d²` interleaved doubles.
///
/// # Safety
/// `set` must be a live handle and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mub_basis_set_copy_basis(
    set: *const MubBasisSet,
    k: usize,
    out: *mut f64,
    len: usize,
) -> MubStatus {
    guard(|| {
        let (Some(set), false) = (set.as_ref(), out.is_null()) else {
            return fail(MubStatus::NullPointer, "null argument");
        };
        let Some(u) = set.0.bases().get(k) else {
            return fail(
                MubStatus::InvalidArgument,
                format!("basis index {k} out of range"),
            );
        };
        let need = 2 * u.as_slice().len();
        if len < need {
            return fail(
                MubStatus::InvalidArgument,
                format!("buffer holds {len} doubles, need {need}"),
            );
        }
        let dst = std::slice::from_raw_parts_mut(out, need);
        for (pair, z) in dst.chunks_exact_mut(2).zip(u.as_slice()) {
            pair[0] = z.re;
            pair[1] = z.im;
        }
        MubStatus::Ok
    })
}

/// Objective value of the set; zero exactly for mutually unbiased bases.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mub_basis_set_objective(
    set: *const MubBasisSet,
    out: *mut f64,
) -> MubStatus {
    guard(|| {
        let (Some(set), Some(out)) = (set.as_ref(), out.as_mut()) else {
            return fail(MubStatus::NullPointer, "null argument");
        };
        *out = objective_value(&set.0);
        MubStatus::Ok
    })
}

/// Classifies the set against `threshold`. Any of the output pointers may
/// be null.
///
/// # Safety
/// `set` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mub_basis_set_verify(
    set: *const MubBasisSet,
    threshold: f64,
    is_mub: *mut bool,
    objective: *mut f64,
    worst_deviation: *mut f64,
) -> MubStatus {
    guard(|| {
        let Some(set) = set.as_ref() else {
            return fail(MubStatus::NullPointer, "null argument");
        };
        if threshold.is_nan() || threshold < 0.0 {
            return fail(MubStatus::InvalidArgument, "threshold must be non-negative");
        }
        let check = is_mub_set(&set.0, threshold);
        if let Some(p) = is_mub.as_mut() {
            *p = check.is_mub;
        }
        if let Some(p) = objective.as_mut() {
            *p = check.objective;
        }
        if let Some(p) = worst_deviation.as_mut() {
            *p = check.worst_deviation;
        }
        MubStatus::Ok
    })
}

/// Default settings for a search of `n_bases` unitaries in dimension `d`.
#[no_mangle]
pub extern "C" fn mub_search_options_default(
    d: usize,
    n_bases: usize,
    trials: usize,
    base_seed: u64,
) -> MubSearchOptions {
    let c = SearchConfig::new(d, n_bases, trials, base_seed);
    MubSearchOptions {
        d,
        n_bases,
        trials,
        base_seed,
        success_threshold: c.success_threshold,
        func_change_tol: c.lm_options.func_change_tol,
        max_iterations: c.lm_options.max_iterations,
        parallelism: c.parallelism,
        bin_width: c.bin_width,
    }
}

fn to_config(o: &MubSearchOptions) -> SearchConfig {
    SearchConfig {
        d: o.d,
        n_bases: o.n_bases,
        trials: o.trials,
        base_seed: o.base_seed,
        success_threshold: o.success_threshold,
        lm_options: LmOptions {
            func_change_tol: o.func_change_tol,
            max_iterations: o.max_iterations,
            ..LmOptions::default()
        },
        parallelism: o.parallelism,
        bin_width: o.bin_width,
    }
}

/// Runs a multi-start search. Blocks until every trial has finished.
///
/// # Safety
/// `options` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mub_search_run(
    options: *const MubSearchOptions,
    out: *mut *mut MubSearchReport,
) -> MubStatus {
    guard(|| {
        let (Some(options), false) = (options.as_ref(), out.is_null()) else {
            return fail(MubStatus::NullPointer, "null argument");
        };
        match run_search(&to_config(options)) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(MubSearchReport(report)));
                MubStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `report` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mub_search_report_free(report: *mut MubSearchReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mub_search_report_trials(report: *const MubSearchReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.trials.len())
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mub_search_report_success_count(report: *const MubSearchReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.success_count)
}

/// Smallest finite final objective; infinity if there is none or the
/// handle is null.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mub_search_report_min_objective(report: *const MubSearchReport) -> f64 {
    report.as_ref().map_or(f64::INFINITY, |r| r.0.min_objective)
}

/// Final objective of trial `trial_id`.
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mub_search_report_trial_objective(
    report: *const MubSearchReport,
    trial_id: usize,
    out: *mut f64,
) -> MubStatus {
    guard(|| {
        let (Some(report), Some(out)) = (report.as_ref(), out.as_mut()) else {
            return fail(MubStatus::NullPointer, "null argument");
        };
        match report.0.trials.get(trial_id) {
            Some(t) => {
                *out = t.objective_final;
                MubStatus::Ok
            }
            None => fail(
                MubStatus::InvalidArgument,
                format!("trial {trial_id} out of range"),
            ),
        }
    })
}

/// Writes `PREFIX.trials.csv` and `PREFIX.summary.json`, the same files the
/// command line `search` produces.
///
/// # Safety
/// `report` must be a live handle and `prefix` a NUL-terminated UTF-8 path.
#[no_mangle]
pub unsafe extern "C" fn mub_search_report_write(
    report: *const MubSearchReport,
    prefix: *const c_char,
) -> MubStatus {
    guard(|| {
        let (Some(report), false) = (report.as_ref(), prefix.is_null()) else {
            return fail(MubStatus::NullPointer, "null argument");
        };
        let Ok(prefix) = CStr::from_ptr(prefix).to_str() else {
            return fail(MubStatus::InvalidArgument, "prefix is not UTF-8");
        };
        let csv = format!("{prefix}.trials.csv");
        let written = std::fs::File::create(&csv)
            .map_err(|e| e.to_string())
            .and_then(|f| {
                write_trials_csv(std::io::BufWriter::new(f), &report.0).map_err(|e| e.to_string())
            });
        if let Err(e) = written {
            return fail(MubStatus::Io, format!("{csv}: {e}"));
        }
        let json = format!("{prefix}.summary.json");
        let text = match SummaryRecord::from_report(&report.0).to_json_pretty() {
            Ok(t) => t,
            Err(e) => return fail(MubStatus::Io, e.to_string()),
        };
        if let Err(e) = std::fs::write(Path::new(&json), text) {
            return fail(MubStatus::Io, format!("{json}: {e}"));
        }
        MubStatus::Ok
    })
}
