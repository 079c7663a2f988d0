//! C ABI for the packing-bb solver.
//!
//! Instances and results are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`PbStatus`]; on failure the
//! message is available from [`pb_last_error_message`] on the same thread.
//! Strings returned through `char **` out-parameters are owned by the caller
//! and released with [`pb_string_free`]. Panics are caught at the boundary and
//! reported as [`PbStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use packing_bb::bb::{self, BbConfig, BbError, BbOutcome, BbResult, NodeRule, VariableRule};
use packing_bb::instance::{InstanceError, PackingInstance};
use packing_bb::lp::{self, LpError};
use packing_bb::oracle::{self, OracleCaps, OracleError};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    /// Numerical failure of the LP solver (iteration cap, singular basis).
    Lp = 5,
    /// Input exceeds an enumeration cap.
    CapExceeded = 6,
    /// A checked property failed (for example the best-bound check).
    Assertion = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbVarRule {
    First = 0,
    MostFractional = 1,
    Random = 2,
    AdversarialReplay = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbNodeRule {
    BestBound = 0,
    DepthFirst = 1,
}

/// Opaque packing instance.
pub struct PbInstance(PackingInstance);

/// Opaque branch-and-bound result.
pub struct PbBbResult(BbResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl ToString) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("no interior nul"));
}

struct Failure(PbStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(PbStatus::NullPointer, format!("{what} is null"))
    }

    fn invalid(message: impl ToString) -> Self {
        Failure(PbStatus::InvalidArgument, message.to_string())
    }
}

impl From<InstanceError> for Failure {
    fn from(e: InstanceError) -> Self {
        let status = match e {
            InstanceError::Parse { .. } | InstanceError::Structure(_) => PbStatus::Parse,
            InstanceError::Io(_) => PbStatus::Io,
            _ => PbStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<LpError> for Failure {
    fn from(e: LpError) -> Self {
        Failure(PbStatus::Lp, e.to_string())
    }
}

impl From<BbError> for Failure {
    fn from(e: BbError) -> Self {
        let status = match e {
            BbError::Lp(_) => PbStatus::Lp,
            BbError::InvalidScript { .. } => PbStatus::InvalidArgument,
            _ => PbStatus::Assertion,
        };
        Failure(status, e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let status = match e {
            OracleError::TooLarge { .. } => PbStatus::CapExceeded,
            OracleError::Lp(_) => PbStatus::Lp,
            OracleError::EmptySlice => PbStatus::Assertion,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PbStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("panic: {message}"));
            PbStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn path<'a>(ptr: *const c_char) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure::null("path"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure::invalid("path is not valid UTF-8"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, text: String) -> Result<(), Failure> {
    let s = CString::new(text).map_err(|_| Failure::invalid("string contains nul"))?;
    write_out(out, s.into_raw())
}

unsafe fn instance<'a>(ptr: *const PbInstance) -> Result<&'a PackingInstance, Failure> {
    ptr.as_ref()
        .map(|p| &p.0)
        .ok_or_else(|| Failure::null("instance"))
}

unsafe fn result<'a>(ptr: *const PbBbResult) -> Result<&'a BbResult, Failure> {
    ptr.as_ref()
        .map(|p| &p.0)
        .ok_or_else(|| Failure::null("result"))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn pb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Draws a random instance. `beta` holds `beta_len` values, either 1 or `m`.
///
/// # Safety
/// `beta` must point to `beta_len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_instance_generate(
    m: usize,
    n: usize,
    beta: *const f64,
    beta_len: usize,
    seed: u64,
    out: *mut *mut PbInstance,
) -> PbStatus {
    guard(|| {
        let beta = slice(beta, beta_len, "beta")?;
        let beta = if beta.len() == 1 {
            vec![beta[0]; m]
        } else {
            beta.to_vec()
        };
        let inst = PackingInstance::generate(m, n, &beta, seed)?;
        write_out(out, Box::into_raw(Box::new(PbInstance(inst))))
    })
}

/// Builds an instance from explicit data; `a` is row-major `m x n`.
///
/// # Safety
/// `a`, `c`, `b` must point to `m*n`, `n` and `m` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_instance_new(
    m: usize,
    n: usize,
    a: *const f64,
    c: *const f64,
    b: *const f64,
    out: *mut *mut PbInstance,
) -> PbStatus {
    guard(|| {
        let a = slice(a, m * n, "a")?;
        let rows = if n == 0 {
            vec![Vec::new(); m]
        } else {
            a.chunks(n).map(<[f64]>::to_vec).collect()
        };
        let inst =
            PackingInstance::new(rows, slice(c, n, "c")?.to_vec(), slice(b, m, "b")?.to_vec())?;
        write_out(out, Box::into_raw(Box::new(PbInstance(inst))))
    })
}

/// Loads an instance file. Load warnings are not reported.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_instance_load(
    path_ptr: *const c_char,
    out: *mut *mut PbInstance,
) -> PbStatus {
    guard(|| {
        let loaded = PackingInstance::load_from_path(path(path_ptr)?)?;
        write_out(out, Box::into_raw(Box::new(PbInstance(loaded.instance))))
    })
}

/// Writes an instance file.
///
/// # Safety
/// `inst` must come from this library; `path` must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn pb_instance_save(
    inst: *const PbInstance,
    path_ptr: *const c_char,
) -> PbStatus {
    guard(|| Ok(instance(inst)?.save_to_path(path(path_ptr)?)?))
}

/// Releases an instance; null is ignored.
///
/// # Safety
/// `inst` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pb_instance_free(inst: *mut PbInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// # Safety
/// `inst` must come from this library; `m` and `n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_instance_dims(
    inst: *const PbInstance,
    m: *mut usize,
    n: *mut usize,
) -> PbStatus {
    guard(|| {
        let inst = instance(inst)?;
        write_out(m, inst.m())?;
        write_out(n, inst.n())
    })
}

/// Root LP relaxation value.
///
/// # Safety
/// `inst` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_lp_value(inst: *const PbInstance, out: *mut f64) -> PbStatus {
    guard(|| write_out(out, lp::lp_value(instance(inst)?)?))
}

/// Exhaustive IP optimum (`n <= 25`). `solution` receives `n` bytes if non-null.
///
/// # Safety
/// `inst` must come from this library; `value` must be writable; `solution`
/// is null or points to `n` bytes.
#[no_mangle]
pub unsafe extern "C" fn pb_ip_opt(
    inst: *const PbInstance,
    value: *mut f64,
    solution: *mut u8,
) -> PbStatus {
    guard(|| {
        let (v, x) = oracle::ip_opt(instance(inst)?)?;
        write_out(value, v)?;
        if !solution.is_null() {
            ptr::copy_nonoverlapping(x.as_ptr(), solution, x.len());
        }
        Ok(())
    })
}

/// Runs branch and bound. `seed` is used by the random rule, `script` by
/// adversarial replay. `node_budget = 0` selects the default budget; a run that
/// hits the budget still returns `Ok` with `pb_result_completed() == false`.
///
/// # Safety
/// `inst` must come from this library; `script` must point to `script_len`
/// values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_solve(
    inst: *const PbInstance,
    var_rule: PbVarRule,
    seed: u64,
    script: *const usize,
    script_len: usize,
    node_rule: PbNodeRule,
    node_budget: usize,
    out: *mut *mut PbBbResult,
) -> PbStatus {
    guard(|| {
        let inst = instance(inst)?;
        let rule = match var_rule {
            PbVarRule::First => VariableRule::First,
            PbVarRule::MostFractional => VariableRule::MostFractional,
            PbVarRule::Random => VariableRule::Random { seed },
            PbVarRule::AdversarialReplay => VariableRule::AdversarialReplay {
                script: slice(script, script_len, "script")?.to_vec(),
            },
        };
        let node_rule = match node_rule {
            PbNodeRule::BestBound => NodeRule::BestBound,
            PbNodeRule::DepthFirst => NodeRule::DepthFirst,
        };
        let mut config = BbConfig::default();
        if node_budget > 0 {
            config.node_budget = node_budget;
        }
        let result = bb::solve_with(inst, &rule, node_rule, &config)?;
        write_out(out, Box::into_raw(Box::new(PbBbResult(result))))
    })
}

/// Releases a result; null is ignored.
///
/// # Safety
/// `res` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pb_result_free(res: *mut PbBbResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// False when the node budget ran out (or `res` is null).
///
/// # Safety
/// `res` is null or comes from this library.
#[no_mangle]
pub unsafe extern "C" fn pb_result_completed(res: *const PbBbResult) -> bool {
    res.as_ref()
        .is_some_and(|r| r.0.outcome == BbOutcome::Completed)
}

/// Optimal value; `InvalidArgument` if no incumbent was found.
///
/// # Safety
/// `res` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pb_result_opt_value(res: *const PbBbResult, out: *mut f64) -> PbStatus {
    guard(|| {
        let v = result(res)?
            .opt_value
            .ok_or_else(|| Failure::invalid("no incumbent"))?;
        write_out(out, v)
    })
}

/// Copies the optimal 0/1 vector into `buf` (`len` must be at least `n`).
///
/// # Safety
/// `res` must come from this library; `buf` must point to `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pb_result_solution(
    res: *const PbBbResult,
    buf: *mut u8,
    len: usize,
) -> PbStatus {
    guard(|| {
        let x = result(res)?
            .opt_solution
            .as_ref()
            .ok_or_else(|| Failure::invalid("no incumbent"))?;
        if buf.is_null() {
            return Err(Failure::null("buf"));
        }
        if len < x.len() {
            return Err(Failure::invalid(format!(
                "buffer holds {len} bytes, need {}",
                x.len()
            )));
        }
        ptr::copy_nonoverlapping(x.as_ptr(), buf, x.len());
        Ok(())
    })
}

/// Number of tree nodes; 0 for null.
///
/// # Safety
/// `res` is null or comes from this library.
#[no_mangle]
pub unsafe extern "C" fn pb_result_node_count(res: *const PbBbResult) -> usize {
    res.as_ref().map_or(0, |r| r.0.node_count)
}

/// Number of branched nodes; 0 for null.
///
/// # Safety
/// `res` is null or comes from this library.
#[no_mangle]
pub unsafe extern "C" fn pb_result_branched_count(res: *const PbBbResult) -> usize {
    res.as_ref().map_or(0, |r| r.0.branched_count)
}

/// Tree in the line format `id parent status branch_var lp_value depth`.
///
/// # Safety
/// `res` must come from this library; `out` must be writable. Free the string
/// with `pb_string_free`.
#[no_mangle]
pub unsafe extern "C" fn pb_result_tree_dump(
    res: *const PbBbResult,
    out: *mut *mut c_char,
) -> PbStatus {
    guard(|| {
        let mut buf = Vec::new();
        result(res)?
            .write_tree_dump(&mut buf)
            .map_err(|e| Failure(PbStatus::Io, e.to_string()))?;
        write_string(out, String::from_utf8(buf).expect("dump is ASCII"))
    })
}

/// JSON summary (counts, optimum, incumbent trace).
///
/// # Safety
/// `res` must come from this library; `out` must be writable. Free the string
/// with `pb_string_free`.
#[no_mangle]
pub unsafe extern "C" fn pb_result_summary_json(
    res: *const PbBbResult,
    out: *mut *mut c_char,
) -> PbStatus {
    guard(|| {
        let json = serde_json::to_string(&result(res)?.summary()).map_err(Failure::invalid)?;
        write_string(out, json)
    })
}

/// Good-set census as JSON. `cap = 0` selects the default cap; larger `n`
/// returns `CapExceeded`.
///
/// # Safety
/// `inst` must come from this library; `out` must be writable. Free the string
/// with `pb_string_free`.
#[no_mangle]
pub unsafe extern "C" fn pb_census_json(
    inst: *const PbInstance,
    cap: usize,
    out: *mut *mut c_char,
) -> PbStatus {
    guard(|| {
        let mut caps = OracleCaps::default();
        if cap > 0 {
            caps.census_max_n = cap;
        }
        let report = oracle::good_set_capped(instance(inst)?, caps)?;
        let json = serde_json::to_string(&report).map_err(Failure::invalid)?;
        write_string(out, json)
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
