//! C interface to the `gsrdp` accountant and generator.
//!
//! Every fallible function returns a [`GsrdpStatus`]; results come back
//! through out-pointers that are written only on success. The message for
//! the most recent failure on the calling thread is available from
//! [`gsrdp_last_error_message`]. Datasets are opaque handles created by
//! `gsrdp_dataset_*` constructors and released with [`gsrdp_dataset_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gsrdp::accountant::{self, AccountantError, Mode, PrivacyParams};
use gsrdp::dataset::{self, Dataset, DatasetError};
use gsrdp::mechanism::{self, GeneratorConfig, MechanismError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsrdpStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    InvalidArgument = 2,
    /// The privacy bound's conditions fail, or the dataset is outside the
    /// eigenvalue floor.
    ConditionViolated = 3,
    Io = 4,
    /// A covariance could not be factorized.
    Numeric = 5,
    /// The caller's buffer is too small.
    BufferTooSmall = 6,
    /// An internal panic was caught at the boundary.
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsrdpMode {
    Unbounded = 0,
    Bounded = 1,
}

impl From<GsrdpMode> for Mode {
    fn from(m: GsrdpMode) -> Self {
        match m {
            GsrdpMode::Unbounded => Mode::Unbounded,
            GsrdpMode::Bounded => Mode::Bounded,
        }
    }
}

/// Opaque dataset handle.
pub struct GsrdpDataset {
    inner: Dataset,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|&b| b != 0));
    });
}

struct Failure(GsrdpStatus, String);

impl From<AccountantError> for Failure {
    fn from(e: AccountantError) -> Self {
        let status = match e {
            AccountantError::InvalidParameter { .. } | AccountantError::EmptyGrid => {
                GsrdpStatus::InvalidArgument
            }
            AccountantError::ConditionViolated(_) | AccountantError::AllInfeasible => {
                GsrdpStatus::ConditionViolated
            }
        };
        Failure(status, e.to_string())
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        let status = match e {
            DatasetError::Io { .. } | DatasetError::Csv(_) => GsrdpStatus::Io,
            DatasetError::SingularCovariance { .. } | DatasetError::Matrix(_) => {
                GsrdpStatus::Numeric
            }
            _ => GsrdpStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<MechanismError> for Failure {
    fn from(e: MechanismError) -> Self {
        match e {
            MechanismError::Dataset(d) => d.into(),
            MechanismError::Covariance(m) => Failure(GsrdpStatus::Numeric, m.to_string()),
        }
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GsrdpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GsrdpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GsrdpStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(GsrdpStatus::NullPointer, format!("{name} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(GsrdpStatus::InvalidArgument, msg.into())
}

/// Length in bytes of the last error message on this thread, excluding the
/// terminating NUL.
#[no_mangle]
pub extern "C" fn gsrdp_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message on this thread into `buf` as a
/// NUL-terminated string. `len` must be at least
/// `gsrdp_last_error_length() + 1`.
///
/// # Safety
/// `buf` must be valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn gsrdp_last_error_message(buf: *mut c_char, len: usize) -> GsrdpStatus {
    if buf.is_null() {
        return GsrdpStatus::NullPointer;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if len < e.len() + 1 {
            return GsrdpStatus::BufferTooSmall;
        }
        // SAFETY: caller guarantees `len` writable bytes, checked above.
        unsafe {
            ptr::copy_nonoverlapping(e.as_ptr(), buf.cast::<u8>(), e.len());
            *buf.add(e.len()) = 0;
        }
        GsrdpStatus::Ok
    })
}

/// Per-record (α, ε)-RDP bound for a size-`n` input in `[-1, 1]^d` whose
/// covariance has minimum eigenvalue at least `sigma`.
///
/// # Safety
/// `out_epsilon` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn gsrdp_epsilon(
    d: usize,
    n: u64,
    sigma: f64,
    alpha: f64,
    mode: GsrdpMode,
    out_epsilon: *mut f64,
) -> GsrdpStatus {
    guard(|| {
        if out_epsilon.is_null() {
            return Err(null("out_epsilon"));
        }
        let params = PrivacyParams::new(d, n, sigma, alpha, mode.into())?;
        let r = accountant::epsilon(&params)?;
        // SAFETY: non-null, caller guarantees validity.
        unsafe { *out_epsilon = r.epsilon };
        Ok(())
    })
}

/// RDP budget of `k` releases at the same order.
#[no_mangle]
pub extern "C" fn gsrdp_compose(eps_single: f64, k: u64) -> f64 {
    accountant::compose(eps_single, k)
}

/// (ε, δ)-DP epsilon implied by (α, ε)-RDP.
///
/// # Safety
/// `out_epsilon_dp` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn gsrdp_rdp_to_dp(
    alpha: f64,
    eps: f64,
    delta: f64,
    out_epsilon_dp: *mut f64,
) -> GsrdpStatus {
    guard(|| {
        if out_epsilon_dp.is_null() {
            return Err(null("out_epsilon_dp"));
        }
        let g = accountant::rdp_to_dp(alpha, eps, delta)?;
        // SAFETY: non-null, caller guarantees validity.
        unsafe { *out_epsilon_dp = g.epsilon_dp };
        Ok(())
    })
}

fn store(out: *mut *mut GsrdpDataset, data: Dataset) {
    let handle = Box::into_raw(Box::new(GsrdpDataset { inner: data }));
    // SAFETY: callers check `out` for null first.
    unsafe { *out = handle };
}

/// Builds a dataset from `n * d` row-major values in `[-1, 1]`.
///
/// # Safety
/// `values` must point to `n * d` readable doubles (it may be null when
/// `n == 0`); `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn gsrdp_dataset_new(
    values: *const f64,
    n: usize,
    d: usize,
    out: *mut *mut GsrdpDataset,
) -> GsrdpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let total = n
            .checked_mul(d)
            .ok_or_else(|| invalid("n * d overflows"))?;
        if values.is_null() && total > 0 {
            return Err(null("values"));
        }
        let flat: &[f64] = if total == 0 {
            &[]
        } else {
            // SAFETY: caller guarantees `total` readable doubles.
            unsafe { std::slice::from_raw_parts(values, total) }
        };
        let records = flat.chunks(d.max(1)).map(<[f64]>::to_vec).collect();
        store(out, Dataset::new(d, records)?);
        Ok(())
    })
}

/// Loads every column of a CSV file. With `normalize` non-zero each column
/// is min-max mapped onto `[-1, 1]`; otherwise values must already lie
/// there.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn gsrdp_dataset_from_csv(
    path: *const c_char,
    normalize: i32,
    out: *mut *mut GsrdpDataset,
) -> GsrdpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if path.is_null() {
            return Err(null("path"));
        }
        // SAFETY: caller guarantees a NUL-terminated string.
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| invalid("path is not UTF-8"))?;
        let table = dataset::load_csv(path, &[])?;
        let data = if normalize != 0 {
            dataset::normalize(&table)?
        } else {
            Dataset::new(table.columns.len(), table.rows)?
        };
        store(out, data);
        Ok(())
    })
}

/// Releases a dataset. Null is ignored.
///
/// # Safety
/// `ds` must come from a `gsrdp_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gsrdp_dataset_free(ds: *mut GsrdpDataset) {
    if !ds.is_null() {
        // SAFETY: pointer came from Box::into_raw in `store`.
        drop(unsafe { Box::from_raw(ds) });
    }
}

/// Number of records; 0 for null.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gsrdp_dataset_len(ds: *const GsrdpDataset) -> usize {
    // SAFETY: caller guarantees a live handle or null.
    unsafe { ds.as_ref() }.map_or(0, |d| d.inner.len())
}

/// Record dimension; 0 for null.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gsrdp_dataset_dim(ds: *const GsrdpDataset) -> usize {
    // SAFETY: caller guarantees a live handle or null.
    unsafe { ds.as_ref() }.map_or(0, |d| d.inner.dim())
}

/// Copies the records row-major into `buf`, which holds `len` doubles.
///
/// # Safety
/// `ds` must be a live handle; `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gsrdp_dataset_copy_records(
    ds: *const GsrdpDataset,
    buf: *mut f64,
    len: usize,
) -> GsrdpStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or null.
        let ds = unsafe { ds.as_ref() }.ok_or_else(|| null("ds"))?;
        let need = ds.inner.len() * ds.inner.dim();
        if need == 0 {
            return Ok(());
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < need {
            return Err(Failure(
                GsrdpStatus::BufferTooSmall,
                format!("need {need} doubles, got {len}"),
            ));
        }
        // SAFETY: `need <= len` writable doubles.
        let dst = unsafe { std::slice::from_raw_parts_mut(buf, need) };
        for (chunk, r) in dst.chunks_mut(ds.inner.dim()).zip(ds.inner.records()) {
            chunk.copy_from_slice(r);
        }
        Ok(())
    })
}

/// Smallest eigenvalue of the dataset's covariance.
///
/// # Safety
/// `ds` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn gsrdp_dataset_min_eigenvalue(
    ds: *const GsrdpDataset,
    out: *mut f64,
) -> GsrdpStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or null.
        let ds = unsafe { ds.as_ref() }.ok_or_else(|| null("ds"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let report = ds.inner.in_sigma_floor(0.0)?;
        // SAFETY: non-null, caller guarantees validity.
        unsafe { *out = report.min_eigenvalue };
        Ok(())
    })
}

/// Draws `count` synthetic records from `ds`. Fails with
/// `ConditionViolated` when the covariance's minimum eigenvalue is below
/// `sigma`, since no guarantee would hold.
///
/// # Safety
/// `ds` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn gsrdp_generate(
    ds: *const GsrdpDataset,
    sigma: f64,
    seed: u64,
    count: usize,
    out: *mut *mut GsrdpDataset,
) -> GsrdpStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle or null.
        let ds = unsafe { ds.as_ref() }.ok_or_else(|| null("ds"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(sigma > 0.0) {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        let floor = ds.inner.in_sigma_floor(sigma)?;
        if !floor.member {
            return Err(Failure(
                GsrdpStatus::ConditionViolated,
                format!(
                    "minimum covariance eigenvalue {} is below sigma = {sigma}",
                    floor.min_eigenvalue
                ),
            ));
        }
        let generated = mechanism::generate(
            &ds.inner,
            GeneratorConfig {
                seed,
                output_count: count,
            },
        )?;
        store(out, generated);
        Ok(())
    })
}
