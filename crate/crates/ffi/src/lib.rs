//! C ABI for the `bmeb` estimator.
//!
//! Datasets and estimates live behind opaque handles that the caller frees
//! with the matching `*_free` function. Every fallible call returns a
//! [`BmebStatus`]; on failure the message is available from
//! [`bmeb_last_error_message`] until the next failing call on the same thread.
//! Panics never cross the boundary; they are reported as
//! `BMEB_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use bmeb::estimator::advise_sample_size;
use bmeb::{
    estimate, Branch, Dataset, Error, EstimateResult, PriorFamily, PriorSpec, SamplerConfig,
    SufficientStats,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmebStatus {
    Ok = 0,
    InvalidInput = 1,
    NullPointer = 2,
    Capability = 3,
    DegenerateMagnetization = 4,
    DegenerateObjective = 5,
    Numerical = 6,
    Parse = 7,
    Io = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmebBranch {
    Zero = 0,
    Finite = 1,
    Diverged = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmebPrior {
    Gaussian = 0,
    Laplace = 1,
}

/// Aggregate statistics of a dataset.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmebStats {
    pub n: usize,
    pub n_samples: usize,
    pub magnetization: f64,
    pub c1: f64,
    pub c2: f64,
    pub omega: f64,
}

/// Flat view of an estimate. `gamma_hat` and `j_hat` are `+inf` on the
/// diverged branch, where `has_h_hat` is false and `h_hat` is NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmebEstimate {
    pub branch: BmebBranch,
    pub gamma_hat: f64,
    pub j_hat: f64,
    pub has_h_hat: bool,
    pub h_hat: f64,
    pub magnetization: f64,
    pub entropy: f64,
    pub phi: f64,
    pub phi2: f64,
    pub laplace_ok: bool,
    pub laplace_margin: f64,
}

/// Opaque dataset handle.
pub struct BmebDataset(Dataset);

/// Opaque estimate handle.
pub struct BmebResult(EstimateResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> BmebStatus {
    match err {
        Error::InvalidInput(_) => BmebStatus::InvalidInput,
        Error::Capability { .. } => BmebStatus::Capability,
        Error::DegenerateMagnetization { .. } => BmebStatus::DegenerateMagnetization,
        Error::DegenerateObjective { .. } => BmebStatus::DegenerateObjective,
        Error::Numerical(_) => BmebStatus::Numerical,
        Error::Parse { .. } => BmebStatus::Parse,
        Error::Io { .. } => BmebStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BmebStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BmebStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("{what} is null"));
            BmebStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("internal error: {msg}"));
            BmebStatus::Internal
        }
    }
}

fn non_null<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: callers pass pointers that are either null or valid for reads.
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

fn out_slot<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: callers pass pointers that are either null or valid for writes.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

/// Message of the last failed call on this thread, or null if none. Valid
/// until the next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn bmeb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bmeb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy `n_samples * n` spins (row-major, each -1 or +1) into a new dataset.
///
/// # Safety
/// `spins` must point to `n * n_samples` readable `int8_t`; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bmeb_dataset_new(
    n: usize,
    n_samples: usize,
    spins: *const i8,
    out: *mut *mut BmebDataset,
) -> BmebStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        *out = ptr::null_mut();
        if spins.is_null() {
            return Err(Failure::Null("spins"));
        }
        let len = n
            .checked_mul(n_samples)
            .ok_or_else(|| Error::InvalidInput("n * N overflows".into()))?;
        // SAFETY: the caller guarantees `len` readable elements.
        let values = unsafe { std::slice::from_raw_parts(spins, len) }.to_vec();
        let data = Dataset::new(n, values)?;
        *out = Box::into_raw(Box::new(BmebDataset(data)));
        Ok(())
    })
}

/// Read a dataset file: a header line `n N`, then `N` rows of `n` spins.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bmeb_dataset_read(
    path: *const c_char,
    out: *mut *mut BmebDataset,
) -> BmebStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        *out = ptr::null_mut();
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        // SAFETY: the caller guarantees a NUL-terminated string.
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| Error::InvalidInput("path is not UTF-8".into()))?;
        let (data, _) = bmeb::cli::read_dataset(Path::new(path))?;
        *out = Box::into_raw(Box::new(BmebDataset(data)));
        Ok(())
    })
}

/// Draw a machine with field `h` and coupling scale `j` from `prior`, then
/// sample `n_samples` configurations with the default annealing schedule.
/// Identical to `bmeb generate` with the same arguments.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bmeb_dataset_generate(
    n: usize,
    n_samples: usize,
    h: f64,
    j: f64,
    prior: BmebPrior,
    seed: u64,
    out: *mut *mut BmebDataset,
) -> BmebStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        *out = ptr::null_mut();
        if !(j >= 0.0) || !j.is_finite() {
            return Err(Error::InvalidInput(format!("J must be finite and >= 0, got {j}")).into());
        }
        let family = match prior {
            BmebPrior::Gaussian => PriorFamily::Gaussian,
            BmebPrior::Laplace => PriorFamily::Laplace,
        };
        let spec = PriorSpec::new(family, j * j, h)?;
        let machine = spec.sample(n, bmeb::seed::child(seed, bmeb::seed::stream::MACHINE))?;
        let data = bmeb::generate_dataset(
            &machine,
            n_samples,
            &SamplerConfig::default(),
            bmeb::seed::child(seed, bmeb::seed::stream::DATA),
        )?;
        *out = Box::into_raw(Box::new(BmebDataset(data)));
        Ok(())
    })
}

/// # Safety
/// `data` must be a live handle or null; `stats` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bmeb_dataset_stats(
    data: *const BmebDataset,
    stats: *mut BmebStats,
) -> BmebStatus {
    guard(|| {
        let data = non_null(data, "data")?;
        let out = out_slot(stats, "stats")?;
        let st = SufficientStats::from_dataset(&data.0);
        *out = BmebStats {
            n: st.n,
            n_samples: st.n_samples,
            magnetization: st.magnetization,
            c1: st.c1,
            c2: st.c2,
            omega: st.omega,
        };
        Ok(())
    })
}

/// Copy the spins (row-major) into `buf`, which holds `len` entries.
///
/// # Safety
/// `data` must be a live handle or null; `buf` must be valid for `len`
/// writes.
#[no_mangle]
pub unsafe extern "C" fn bmeb_dataset_spins(
    data: *const BmebDataset,
    buf: *mut i8,
    len: usize,
) -> BmebStatus {
    guard(|| {
        let data = non_null(data, "data")?;
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        let spins = data.0.as_flat();
        if len != spins.len() {
            return Err(Error::InvalidInput(format!(
                "buffer holds {len} entries, dataset has {}",
                spins.len()
            ))
            .into());
        }
        // SAFETY: `buf` has room for `len` elements by contract.
        unsafe { ptr::copy_nonoverlapping(spins.as_ptr(), buf, len) };
        Ok(())
    })
}

/// # Safety
/// `data` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bmeb_dataset_free(data: *mut BmebDataset) {
    if !data.is_null() {
        // SAFETY: the handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(data) });
    }
}

fn boxed_result(out: &mut *mut BmebResult, r: EstimateResult) {
    *out = Box::into_raw(Box::new(BmebResult(r)));
}

/// Estimate `gamma` and `H` from a dataset.
///
/// # Safety
/// `data` must be a live handle or null; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bmeb_estimate(
    data: *const BmebDataset,
    out: *mut *mut BmebResult,
) -> BmebStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        *out = ptr::null_mut();
        let data = non_null(data, "data")?;
        boxed_result(out, estimate(&SufficientStats::from_dataset(&data.0))?);
        Ok(())
    })
}

/// Estimate from aggregate statistics alone.
///
/// # Safety
/// `stats` must be readable or null; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bmeb_estimate_from_stats(
    stats: *const BmebStats,
    out: *mut *mut BmebResult,
) -> BmebStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        *out = ptr::null_mut();
        let s = non_null(stats, "stats")?;
        let st = SufficientStats::from_aggregates(
            s.n,
            s.n_samples,
            s.magnetization,
            s.c1,
            s.c2,
            s.omega,
        )?;
        boxed_result(out, estimate(&st)?);
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle or null; `view` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bmeb_result_get(
    result: *const BmebResult,
    view: *mut BmebEstimate,
) -> BmebStatus {
    guard(|| {
        let r = &non_null(result, "result")?.0;
        let out = out_slot(view, "view")?;
        let d = &r.diagnostics;
        *out = BmebEstimate {
            branch: match r.branch {
                Branch::Zero => BmebBranch::Zero,
                Branch::Finite => BmebBranch::Finite,
                Branch::Diverged => BmebBranch::Diverged,
            },
            gamma_hat: r.gamma_hat,
            j_hat: r.j_hat,
            has_h_hat: r.h_hat.is_some(),
            h_hat: r.h_hat.unwrap_or(f64::NAN),
            magnetization: d.magnetization,
            entropy: d.entropy,
            phi: d.phi,
            phi2: d.phi2,
            laplace_ok: d.laplace_ok,
            laplace_margin: d.laplace_margin,
        };
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bmeb_result_free(result: *mut BmebResult) {
    if !result.is_null() {
        // SAFETY: the handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(result) });
    }
}

/// Suggested sample size `N` for a field guess `h` at `n` spins.
#[no_mangle]
pub extern "C" fn bmeb_advise_sample_size(h: f64, n: usize) -> usize {
    catch_unwind(|| advise_sample_size(h, n)).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(
            status_of(&Error::DegenerateMagnetization { magnetization: 1.0 }),
            BmebStatus::DegenerateMagnetization
        );
        assert_eq!(
            status_of(&Error::Parse {
                line: 2,
                message: String::new()
            }),
            BmebStatus::Parse
        );
    }

    #[test]
    fn panics_are_contained() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, BmebStatus::Internal);
        let msg = unsafe { CStr::from_ptr(bmeb_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "internal error: boom");
    }

    #[test]
    fn version_is_nul_terminated() {
        let v = unsafe { CStr::from_ptr(bmeb_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
