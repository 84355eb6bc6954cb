//! C ABI over the core solvers: opaque handles, integer error codes, and a
//! thread-local last-error message.
//!
//! The canonical header lives at `include/ot.h` and is maintained by hand in
//! lockstep with this file; `tests/header.rs` checks that every exported
//! symbol is declared there.
//!
//! Ownership rules: every `*_new`/`*_from_json` pointer is owned by the
//! caller and must be released with the matching `*_free`; output buffers
//! are caller-allocated.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ot_core::error::OtError;
use ot_core::instances::{Instance, InstanceFile};
use ot_core::oracle::exact_ot;
use ot_core::solvers::{approx_ot, ApproxResult, Method};
use ot_core::types::{CostMatrix, Histogram};

pub const OT_OK: i32 = 0;
pub const OT_ERR_INVALID_ARGUMENT: i32 = 1;
pub const OT_ERR_NUMERICAL: i32 = 2;
pub const OT_ERR_IO: i32 = 3;
pub const OT_ERR_NULL_POINTER: i32 = 4;
pub const OT_ERR_PANIC: i32 = 5;

pub const OT_METHOD_SINKHORN: i32 = 0;
pub const OT_METHOD_GREENKHORN: i32 = 1;
pub const OT_METHOD_APDAMD: i32 = 2;
pub const OT_METHOD_APDAGD: i32 = 3;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn code_for(err: &OtError) -> i32 {
    match err {
        OtError::Io { .. } => OT_ERR_IO,
        OtError::Overflow { .. } | OtError::SolverFailed { .. } => OT_ERR_NUMERICAL,
        _ => OT_ERR_INVALID_ARGUMENT,
    }
}

fn record_err(err: OtError) -> i32 {
    let code = code_for(&err);
    set_last_error(err.to_string());
    code
}

/// Opaque OT instance: cost matrix plus both marginals.
pub struct OtInstance {
    cost: CostMatrix,
    r: Histogram,
    c: Histogram,
}

/// Opaque solver result: exactly feasible plan, its cost, run metadata.
pub struct OtResult {
    inner: ApproxResult,
    n: usize,
}

/// Copies the last error message for this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null (query mode).
#[no_mangle]
pub unsafe extern "C" fn ot_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

unsafe fn slice_arg<'a>(data: *const f64, len: usize) -> Option<&'a [f64]> {
    if data.is_null() {
        None
    } else {
        Some(unsafe { std::slice::from_raw_parts(data, len) })
    }
}

/// Builds an instance from row-major cost entries (n×n) and marginals
/// (length n each). Returns null on error; see `ot_last_error`.
///
/// # Safety
/// `cost` must point to n² doubles, `r` and `c` to n doubles each.
#[no_mangle]
pub unsafe extern "C" fn ot_instance_new(
    n: usize,
    cost: *const f64,
    r: *const f64,
    c: *const f64,
) -> *mut OtInstance {
    let result = catch_unwind(AssertUnwindSafe(|| {
        let (Some(cost), Some(r), Some(c)) = (
            unsafe { slice_arg(cost, n * n) },
            unsafe { slice_arg(r, n) },
            unsafe { slice_arg(c, n) },
        ) else {
            set_last_error("null input pointer");
            return ptr::null_mut();
        };
        let built = (|| -> Result<OtInstance, OtError> {
            Ok(OtInstance {
                cost: CostMatrix::new(cost.to_vec(), n)?,
                r: Histogram::new(r.to_vec())?,
                c: Histogram::new(c.to_vec())?,
            })
        })();
        match built {
            Ok(inst) => Box::into_raw(Box::new(inst)),
            Err(err) => {
                record_err(err);
                ptr::null_mut()
            }
        }
    }));
    result.unwrap_or_else(|_| {
        set_last_error("panic in ot_instance_new");
        ptr::null_mut()
    })
}

/// Builds an instance from an instance JSON document (the `ot gen` format).
///
/// # Safety
/// `json` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn ot_instance_from_json(json: *const c_char) -> *mut OtInstance {
    let result = catch_unwind(AssertUnwindSafe(|| {
        if json.is_null() {
            set_last_error("null input pointer");
            return ptr::null_mut();
        }
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_last_error("instance JSON is not valid UTF-8");
                return ptr::null_mut();
            }
        };
        let parsed: Result<InstanceFile, _> = serde_json_from(text);
        let built = parsed
            .map_err(|e| OtError::Parse {
                offset: 0,
                message: e,
            })
            .and_then(Instance::from_file);
        match built {
            Ok(inst) => Box::into_raw(Box::new(OtInstance {
                cost: inst.cost,
                r: inst.r,
                c: inst.c,
            })),
            Err(err) => {
                record_err(err);
                ptr::null_mut()
            }
        }
    }));
    result.unwrap_or_else(|_| {
        set_last_error("panic in ot_instance_from_json");
        ptr::null_mut()
    })
}

fn serde_json_from(text: &str) -> Result<InstanceFile, String> {
    serde_json::from_str(text).map_err(|e| e.to_string())
}

/// Number of atoms per marginal.
///
/// # Safety
/// `inst` must be a live pointer from `ot_instance_new`/`ot_instance_from_json`.
#[no_mangle]
pub unsafe extern "C" fn ot_instance_n(inst: *const OtInstance) -> usize {
    if inst.is_null() {
        return 0;
    }
    unsafe { &*inst }.cost.n()
}

/// # Safety
/// `inst` must come from this library and not already be freed; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn ot_instance_free(inst: *mut OtInstance) {
    if !inst.is_null() {
        drop(unsafe { Box::from_raw(inst) });
    }
}

/// Runs the ε-approximation pipeline. On success writes a result handle to
/// `out` and returns OT_OK.
///
/// # Safety
/// `inst` must be a live instance handle and `out` a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn ot_approx(
    inst: *const OtInstance,
    eps: f64,
    method: i32,
    out: *mut *mut OtResult,
) -> i32 {
    let result = catch_unwind(AssertUnwindSafe(|| {
        if inst.is_null() || out.is_null() {
            set_last_error("null input pointer");
            return OT_ERR_NULL_POINTER;
        }
        let inst = unsafe { &*inst };
        let method = match method {
            OT_METHOD_SINKHORN => Method::Sinkhorn,
            OT_METHOD_GREENKHORN => Method::Greenkhorn,
            OT_METHOD_APDAMD => Method::Apdamd,
            OT_METHOD_APDAGD => Method::Apdagd,
            other => {
                set_last_error(format!("unknown method code {other}"));
                return OT_ERR_INVALID_ARGUMENT;
            }
        };
        match approx_ot(&inst.cost, &inst.r, &inst.c, eps, method) {
            Ok(res) => {
                let handle = Box::new(OtResult {
                    n: res.plan.n(),
                    inner: res,
                });
                unsafe { *out = Box::into_raw(handle) };
                OT_OK
            }
            Err(err) => record_err(err),
        }
    }));
    result.unwrap_or_else(|_| {
        set_last_error("panic in ot_approx");
        OT_ERR_PANIC
    })
}

/// Exact LP optimum ⟨C, X*⟩ (n ≤ 256), written to `out_value`.
///
/// # Safety
/// `inst` must be a live instance handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn ot_exact_value(inst: *const OtInstance, out_value: *mut f64) -> i32 {
    let result = catch_unwind(AssertUnwindSafe(|| {
        if inst.is_null() || out_value.is_null() {
            set_last_error("null input pointer");
            return OT_ERR_NULL_POINTER;
        }
        let inst = unsafe { &*inst };
        match exact_ot(&inst.cost, &inst.r, &inst.c) {
            Ok(sol) => {
                unsafe { *out_value = sol.value };
                OT_OK
            }
            Err(err) => record_err(err),
        }
    }));
    result.unwrap_or_else(|_| {
        set_last_error("panic in ot_exact_value");
        OT_ERR_PANIC
    })
}

/// ⟨C, X̂⟩ of the returned plan.
///
/// # Safety
/// `res` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ot_result_cost(res: *const OtResult) -> f64 {
    if res.is_null() {
        return f64::NAN;
    }
    unsafe { &*res }.inner.cost
}

/// Iterations the inner solver performed.
///
/// # Safety
/// `res` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ot_result_iterations(res: *const OtResult) -> u64 {
    if res.is_null() {
        return 0;
    }
    unsafe { &*res }.inner.trace.iterations() as u64
}

/// The (η, ε′) schedule used by the run.
///
/// # Safety
/// `res` must be a live result handle; out pointers may be null to skip.
#[no_mangle]
pub unsafe extern "C" fn ot_result_schedule(
    res: *const OtResult,
    out_eta: *mut f64,
    out_eps_prime: *mut f64,
) -> i32 {
    if res.is_null() {
        set_last_error("null input pointer");
        return OT_ERR_NULL_POINTER;
    }
    let res = unsafe { &*res };
    if !out_eta.is_null() {
        unsafe { *out_eta = res.inner.eta };
    }
    if !out_eps_prime.is_null() {
        unsafe { *out_eps_prime = res.inner.eps_prime };
    }
    OT_OK
}

/// Copies the n×n plan row-major into `buf` (length `len` ≥ n²).
///
/// # Safety
/// `res` must be a live result handle and `buf` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ot_result_plan(res: *const OtResult, buf: *mut f64, len: usize) -> i32 {
    if res.is_null() || buf.is_null() {
        set_last_error("null input pointer");
        return OT_ERR_NULL_POINTER;
    }
    let res = unsafe { &*res };
    let entries = res.inner.plan.as_slice();
    if len < entries.len() {
        set_last_error(format!(
            "plan buffer too small: {len} < {} (n = {})",
            entries.len(),
            res.n
        ));
        return OT_ERR_INVALID_ARGUMENT;
    }
    unsafe { ptr::copy_nonoverlapping(entries.as_ptr(), buf, entries.len()) };
    OT_OK
}

/// # Safety
/// `res` must come from this library and not already be freed; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn ot_result_free(res: *mut OtResult) {
    if !res.is_null() {
        drop(unsafe { Box::from_raw(res) });
    }
}
