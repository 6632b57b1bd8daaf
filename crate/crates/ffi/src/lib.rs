//! C ABI over the simulation core: opaque state handles, status codes, and a
//! thread-local last-error message. The header is generated into
//! `include/squeezer.h` at build time.
//!
//! Conventions:
//! * every constructor writes through an out-pointer and returns a status;
//! * states returned by this API are owned by the caller and released with
//!   [`sq_state_free`];
//! * strings returned by this API are released with [`sq_string_free`].

use squeezer_core::cli::apply_dephasing;
use squeezer_core::error::Error;
use squeezer_core::fock::{DensityMatrix, DensityMatrixJson, Ket, Parity};
use squeezer_core::gates::{
    prepare_experimental_photon, AncillaModel, LossBudget, SqueezeOrientation,
};
use squeezer_core::mb_squeezer::{mb_squeeze_channel, SqueezeGateConfig};
use squeezer_core::metrics::{anticorrelation, distinguishability, fit_css_amplitude, interference};
use squeezer_core::phase_space::{wigner_min, WignerEvaluator};
use squeezer_core::C64;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    CutoffError = 3,
    NumericalError = 4,
    SerializationError = 5,
}

/// Opaque single-mode state handle (a density matrix).
pub struct SqState {
    rho: DensityMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SqStatus {
    match err {
        Error::CutoffViolation { .. } | Error::TailWeight { .. } => SqStatus::CutoffError,
        Error::QuadratureResidual { .. }
        | Error::OptimizerFailure(_)
        | Error::LikelihoodDecrease(_)
        | Error::ZeroProbability(_) => SqStatus::NumericalError,
        Error::Json(_) => SqStatus::SerializationError,
        _ => SqStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> SqStatus {
    let code = status_of(&err);
    set_error(err.to_string());
    code
}

/// Most recent error message on this thread, or NULL when the last call
/// succeeded. The pointer stays valid until the next failing call.
#[no_mangle]
pub extern "C" fn sq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(c) => c.as_ptr(),
        None => ptr::null(),
    })
}

/// Release a string returned by this API.
///
/// # Safety
/// `s` must be a pointer previously returned by a `sq_*` call that documents
/// this deallocator, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Release a state handle.
///
/// # Safety
/// `state` must come from a `sq_state_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sq_state_free(state: *mut SqState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

fn deliver(out: *mut *mut SqState, rho: DensityMatrix) -> SqStatus {
    if out.is_null() {
        set_error("output pointer is NULL".into());
        return SqStatus::NullPointer;
    }
    unsafe {
        *out = Box::into_raw(Box::new(SqState { rho }));
    }
    SqStatus::Ok
}

unsafe fn borrow<'a>(state: *const SqState) -> Option<&'a SqState> {
    state.as_ref()
}

/// Fock state |n⟩ at the given cutoff.
#[no_mangle]
pub extern "C" fn sq_state_fock(n: usize, cutoff: usize, out: *mut *mut SqState) -> SqStatus {
    match Ket::fock(n, cutoff) {
        Ok(k) => deliver(out, k.to_density_matrix()),
        Err(e) => fail(e),
    }
}

/// Coherent state |α⟩.
#[no_mangle]
pub extern "C" fn sq_state_coherent(
    alpha_re: f64,
    alpha_im: f64,
    cutoff: usize,
    out: *mut *mut SqState,
) -> SqStatus {
    match Ket::coherent(C64::new(alpha_re, alpha_im), cutoff) {
        Ok(k) => deliver(out, k.to_density_matrix()),
        Err(e) => fail(e),
    }
}

/// Coherent-state superposition |α⟩ ± |-α⟩; `odd` selects the minus sign.
#[no_mangle]
pub extern "C" fn sq_state_css(
    alpha_re: f64,
    alpha_im: f64,
    odd: bool,
    cutoff: usize,
    out: *mut *mut SqState,
) -> SqStatus {
    let parity = if odd { Parity::Odd } else { Parity::Even };
    match Ket::css(C64::new(alpha_re, alpha_im), parity, cutoff) {
        Ok(k) => deliver(out, k.to_density_matrix()),
        Err(e) => fail(e),
    }
}

/// Realistic heralded single photon for a loss budget
/// (detection/propagation efficiencies, dark and two-photon fractions).
#[no_mangle]
pub extern "C" fn sq_state_experimental_photon(
    eta_detection: f64,
    eta_propagation: f64,
    dark_fraction: f64,
    multiphoton_fraction: f64,
    cutoff: usize,
    out: *mut *mut SqState,
) -> SqStatus {
    let budget = LossBudget {
        eta_detection,
        eta_propagation,
        dark_fraction,
        multiphoton_fraction,
    };
    match prepare_experimental_photon(&budget, cutoff) {
        Ok(rho) => deliver(out, rho),
        Err(e) => fail(e),
    }
}

/// Apply the measurement-based squeezing gate.
///
/// `squeezed_db`/`antisqueezed_db` describe the ancilla relative to shot
/// noise (e.g. -6.8 and 10.3); `dephasing_stddev` adds Gaussian phase jitter
/// in radians (0 disables it). A new state is written to `out`.
#[no_mangle]
pub extern "C" fn sq_apply_squeeze_gate(
    state: *const SqState,
    gamma: f64,
    squeezed_db: f64,
    antisqueezed_db: f64,
    dephasing_stddev: f64,
    out: *mut *mut SqState,
) -> SqStatus {
    let Some(s) = (unsafe { borrow(state) }) else {
        set_error("state pointer is NULL".into());
        return SqStatus::NullPointer;
    };
    let orientation = if gamma >= 0.0 {
        SqueezeOrientation::SqueezeP
    } else {
        SqueezeOrientation::SqueezeX
    };
    let ancilla = AncillaModel::from_db(squeezed_db, antisqueezed_db, orientation);
    let result = SqueezeGateConfig::new(gamma, ancilla)
        .and_then(|cfg| mb_squeeze_channel(&s.rho, &cfg))
        .and_then(|rho| apply_dephasing(&rho, dephasing_stddev));
    match result {
        Ok(rho) => deliver(out, rho),
        Err(e) => fail(e),
    }
}

/// Cutoff dimension of a state.
#[no_mangle]
pub extern "C" fn sq_state_dim(state: *const SqState, out: *mut usize) -> SqStatus {
    let Some(s) = (unsafe { borrow(state) }) else {
        set_error("state pointer is NULL".into());
        return SqStatus::NullPointer;
    };
    if out.is_null() {
        set_error("output pointer is NULL".into());
        return SqStatus::NullPointer;
    }
    unsafe { *out = s.rho.dim() };
    SqStatus::Ok
}

/// Photon-number probability P(n).
#[no_mangle]
pub extern "C" fn sq_state_photon_probability(
    state: *const SqState,
    n: usize,
    out: *mut f64,
) -> SqStatus {
    let Some(s) = (unsafe { borrow(state) }) else {
        set_error("state pointer is NULL".into());
        return SqStatus::NullPointer;
    };
    if out.is_null() {
        set_error("output pointer is NULL".into());
        return SqStatus::NullPointer;
    }
    if n >= s.rho.dim() {
        set_error(format!("photon number {n} outside cutoff {}", s.rho.dim()));
        return SqStatus::InvalidArgument;
    }
    unsafe { *out = s.rho.element(n, n).re };
    SqStatus::Ok
}

/// Uhlmann fidelity between two states of equal cutoff.
#[no_mangle]
pub extern "C" fn sq_state_fidelity(
    a: *const SqState,
    b: *const SqState,
    out: *mut f64,
) -> SqStatus {
    let (Some(sa), Some(sb)) = (unsafe { borrow(a) }, unsafe { borrow(b) }) else {
        set_error("state pointer is NULL".into());
        return SqStatus::NullPointer;
    };
    if out.is_null() {
        set_error("output pointer is NULL".into());
        return SqStatus::NullPointer;
    }
    match sa.rho.fidelity(&sb.rho) {
        Ok(f) => {
            unsafe { *out = f };
            SqStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Wigner function value at one phase-space point.
#[no_mangle]
pub extern "C" fn sq_wigner_at(
    state: *const SqState,
    x: f64,
    p: f64,
    out: *mut f64,
) -> SqStatus {
    let Some(s) = (unsafe { borrow(state) }) else {
        set_error("state pointer is NULL".into());
        return SqStatus::NullPointer;
    };
    if out.is_null() {
        set_error("output pointer is NULL".into());
        return SqStatus::NullPointer;
    }
    let ev = WignerEvaluator::new(&s.rho);
    unsafe { *out = ev.value(x, p) };
    SqStatus::Ok
}

/// Global Wigner minimum over a square search window.
#[no_mangle]
pub extern "C" fn sq_wigner_min(
    state: *const SqState,
    half_range: f64,
    out_value: *mut f64,
    out_x: *mut f64,
    out_p: *mut f64,
) -> SqStatus {
    let Some(s) = (unsafe { borrow(state) }) else {
        set_error("state pointer is NULL".into());
        return SqStatus::NullPointer;
    };
    if out_value.is_null() || out_x.is_null() || out_p.is_null() {
        set_error("output pointer is NULL".into());
        return SqStatus::NullPointer;
    }
    if !(half_range > 0.0) {
        set_error("half_range must be positive".into());
        return SqStatus::InvalidArgument;
    }
    let (v, (x, p)) = wigner_min(&s.rho, half_range, 81);
    unsafe {
        *out_value = v;
        *out_x = x;
        *out_p = p;
    }
    SqStatus::Ok
}

/// Coherent-state distinguishability D(β).
#[no_mangle]
pub extern "C" fn sq_distinguishability(
    state: *const SqState,
    beta_re: f64,
    beta_im: f64,
    out: *mut f64,
) -> SqStatus {
    metric_call(state, beta_re, beta_im, out, distinguishability)
}

/// Coherent-state interference V(β).
#[no_mangle]
pub extern "C" fn sq_interference(
    state: *const SqState,
    beta_re: f64,
    beta_im: f64,
    out: *mut f64,
) -> SqStatus {
    metric_call(state, beta_re, beta_im, out, interference)
}

fn metric_call(
    state: *const SqState,
    beta_re: f64,
    beta_im: f64,
    out: *mut f64,
    f: fn(&DensityMatrix, C64) -> squeezer_core::error::Result<f64>,
) -> SqStatus {
    let Some(s) = (unsafe { borrow(state) }) else {
        set_error("state pointer is NULL".into());
        return SqStatus::NullPointer;
    };
    if out.is_null() {
        set_error("output pointer is NULL".into());
        return SqStatus::NullPointer;
    }
    match f(&s.rho, C64::new(beta_re, beta_im)) {
        Ok(v) => {
            unsafe { *out = v };
            SqStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Anti-correlation witness from splitting on a balanced beam splitter with
/// on/off detectors of efficiency `eta`.
#[no_mangle]
pub extern "C" fn sq_anticorrelation(
    state: *const SqState,
    eta: f64,
    out_a: *mut f64,
    out_pc: *mut f64,
    out_ps: *mut f64,
) -> SqStatus {
    let Some(s) = (unsafe { borrow(state) }) else {
        set_error("state pointer is NULL".into());
        return SqStatus::NullPointer;
    };
    if out_a.is_null() || out_pc.is_null() || out_ps.is_null() {
        set_error("output pointer is NULL".into());
        return SqStatus::NullPointer;
    }
    match anticorrelation(&s.rho, eta) {
        Ok(r) => {
            unsafe {
                *out_a = r.a_value;
                *out_pc = r.p_c;
                *out_ps = r.p_s;
            }
            SqStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Best-fitting odd-superposition amplitude and the achieved fidelity.
#[no_mangle]
pub extern "C" fn sq_fit_css_amplitude(
    state: *const SqState,
    out_alpha: *mut f64,
    out_fidelity: *mut f64,
) -> SqStatus {
    let Some(s) = (unsafe { borrow(state) }) else {
        set_error("state pointer is NULL".into());
        return SqStatus::NullPointer;
    };
    if out_alpha.is_null() || out_fidelity.is_null() {
        set_error("output pointer is NULL".into());
        return SqStatus::NullPointer;
    }
    match fit_css_amplitude(&s.rho) {
        Ok((alpha, fid)) => {
            unsafe {
                *out_alpha = alpha;
                *out_fidelity = fid;
            }
            SqStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Serialize a state to the JSON object `{dim, re[][], im[][]}`; free the
/// returned string with [`sq_string_free`].
#[no_mangle]
pub extern "C" fn sq_state_to_json(state: *const SqState, out: *mut *mut c_char) -> SqStatus {
    let Some(s) = (unsafe { borrow(state) }) else {
        set_error("state pointer is NULL".into());
        return SqStatus::NullPointer;
    };
    if out.is_null() {
        set_error("output pointer is NULL".into());
        return SqStatus::NullPointer;
    }
    let json: DensityMatrixJson = (&s.rho).into();
    match serde_json::to_string(&json) {
        Ok(text) => match CString::new(text) {
            Ok(c) => {
                unsafe { *out = c.into_raw() };
                SqStatus::Ok
            }
            Err(_) => {
                set_error("serialized state contained an interior NUL".into());
                SqStatus::SerializationError
            }
        },
        Err(e) => {
            set_error(e.to_string());
            SqStatus::SerializationError
        }
    }
}

/// Parse a state from the JSON object `{dim, re[][], im[][]}`.
///
/// # Safety
/// `json` must point to a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn sq_state_from_json(
    json: *const c_char,
    out: *mut *mut SqState,
) -> SqStatus {
    if json.is_null() {
        set_error("json pointer is NULL".into());
        return SqStatus::NullPointer;
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("json is not valid UTF-8".into());
            return SqStatus::SerializationError;
        }
    };
    let parsed: DensityMatrixJson = match serde_json::from_str(text) {
        Ok(p) => p,
        Err(e) => {
            set_error(e.to_string());
            return SqStatus::SerializationError;
        }
    };
    match DensityMatrix::try_from(parsed) {
        Ok(rho) => deliver(out, rho),
        Err(e) => fail(e),
    }
}
