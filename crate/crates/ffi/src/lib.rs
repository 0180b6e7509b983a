//! C ABI over `bssn-lab`.
//!
//! Every fallible call returns a [`BssnStatus`] and writes its result through
//! an out pointer. On failure the message is available from
//! [`bssn_last_error`] on the same thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use bssn_lab::analytic;
use bssn_lab::constraints::{derive, DEFAULT_TOL};
use bssn_lab::fock::{FockDims, QOperator, QState};
use bssn_lab::modemap::{bssn_outputs, family_coefficients, BssnParams, ModeOps};
use bssn_lab::observables::Moments;
use bssn_lab::residual::BlockSet;
use bssn_lab::LabError;
use num_complex::Complex64;

pub const BSSN_PORT_C: u32 = 0;
pub const BSSN_PORT_D: u32 = 1;
pub const BSSN_PORT_HARM_C: u32 = 2;
pub const BSSN_PORT_HARM_D: u32 = 3;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BssnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The expression has a vanishing denominator at these parameters.
    Singular = 3,
    /// Mandel Q of a port with zero mean photon number.
    Undefined = 4,
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BssnComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for BssnComplex {
    fn from(c: Complex64) -> Self {
        BssnComplex { re: c.re, im: c.im }
    }
}

/// Coupling coefficients of the reduced family.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BssnFamily {
    pub z: [BssnComplex; 4],
    pub w: [BssnComplex; 3],
}

/// Output-port statistics for coherent fundamental inputs and vacuum harmonics.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BssnPortStats {
    pub mean_n: f64,
    /// Meaningful only when `mandel_q_defined` is set.
    pub mandel_q: f64,
    pub mandel_q_defined: bool,
    pub squeeze_min: f64,
    pub squeeze_argmin: f64,
}

/// Opaque handle: output operators of the map at fixed parameters and cutoffs.
pub struct BssnLab {
    dims: FockDims,
    params: BssnParams,
    outputs: [QOperator; 4],
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &LabError) -> BssnStatus {
    match e {
        LabError::Singular(_) => BssnStatus::Singular,
        LabError::UndefinedMandelQ => BssnStatus::Undefined,
        LabError::NonLinearProbe { .. } | LabError::Io(_) => BssnStatus::Internal,
        _ => BssnStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (BssnStatus, String)>) -> BssnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BssnStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BssnStatus::Internal
        }
    }
}

fn lab<T>(r: bssn_lab::Result<T>) -> Result<T, (BssnStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (BssnStatus, String) {
    (BssnStatus::NullPointer, format!("null pointer: {what}"))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), (BssnStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn read_dims(cutoffs: *const usize) -> Result<FockDims, (BssnStatus, String)> {
    if cutoffs.is_null() {
        return Err(null("cutoffs"));
    }
    let mut c = [0usize; 4];
    c.copy_from_slice(std::slice::from_raw_parts(cutoffs, 4));
    lab(FockDims::new(c))
}

fn port(p: u32) -> Result<usize, (BssnStatus, String)> {
    if p <= BSSN_PORT_HARM_D {
        Ok(p as usize)
    } else {
        Err((BssnStatus::InvalidArgument, format!("unknown port {p}")))
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn bssn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn bssn_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Builds the output operators at `cutoffs` (four entries, modes a, b, A, B).
#[no_mangle]
pub unsafe extern "C" fn bssn_lab_new(
    kappa: f64,
    eta: f64,
    theta_bs: f64,
    cutoffs: *const usize,
    out: *mut *mut BssnLab,
) -> BssnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let dims = read_dims(cutoffs)?;
        let params = lab(BssnParams::new(kappa, eta, theta_bs))?;
        let outputs = bssn_outputs(&params, &ModeOps::ladders(dims));
        out.write(Box::into_raw(Box::new(BssnLab { dims, params, outputs })));
        Ok(())
    })
}

/// Accepts null.
#[no_mangle]
pub unsafe extern "C" fn bssn_lab_free(handle: *mut BssnLab) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

#[no_mangle]
pub unsafe extern "C" fn bssn_lab_family(handle: *const BssnLab, out: *mut BssnFamily) -> BssnStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("lab"))?;
        let ans = family_coefficients(&h.params);
        let fam = BssnFamily { z: ans.z.map(Into::into), w: ans.w.map(Into::into) };
        write(out, fam, "out")
    })
}

/// Statistics of `port` for coherent inputs `|x⟩_a |y⟩_b` (real amplitudes).
#[no_mangle]
pub unsafe extern "C" fn bssn_lab_port_stats(
    handle: *const BssnLab,
    port_id: u32,
    x: f64,
    y: f64,
    out: *mut BssnPortStats,
) -> BssnStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("lab"))?;
        let m = moments(h, port(port_id)?, x, y)?;
        let q = m.mandel_q().ok();
        let (squeeze_min, squeeze_argmin) = m.squeeze_minimum();
        let stats = BssnPortStats {
            mean_n: m.n,
            mandel_q: q.unwrap_or(f64::NAN),
            mandel_q_defined: q.is_some(),
            squeeze_min,
            squeeze_argmin,
        };
        write(out, stats, "out")
    })
}

/// Squeezing witness of `port` at quadrature angle `theta`.
#[no_mangle]
pub unsafe extern "C" fn bssn_lab_squeeze(
    handle: *const BssnLab,
    port_id: u32,
    x: f64,
    y: f64,
    theta: f64,
    out: *mut f64,
) -> BssnStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("lab"))?;
        let m = moments(h, port(port_id)?, x, y)?;
        if !theta.is_finite() {
            return Err((BssnStatus::InvalidArgument, format!("non-finite theta {theta}")));
        }
        write(out, m.squeeze_witness(theta), "out")
    })
}

fn moments(h: &BssnLab, port: usize, x: f64, y: f64) -> Result<Moments, (BssnStatus, String)> {
    let zero = Complex64::default();
    let (state, _) = lab(QState::coherent_product(h.dims, [Complex64::new(x, 0.0), Complex64::new(y, 0.0), zero, zero]))?;
    lab(Moments::of(&state, &h.outputs[port]))
}

/// Dimension of the constraint nullspace at `theta_bs`.
#[no_mangle]
pub unsafe extern "C" fn bssn_nullspace_dimension(
    theta_bs: f64,
    cutoffs: *const usize,
    margin: usize,
    drop_energy: bool,
    out: *mut usize,
) -> BssnStatus {
    guard(|| {
        let dims = read_dims(cutoffs)?;
        let blocks = if drop_energy { BlockSet::without_energy() } else { BlockSet::ALL };
        let report = lab(derive(theta_bs, dims, margin, DEFAULT_TOL, blocks))?;
        write(out, report.nullspace.dimension, "out")
    })
}

fn finite(name: &str, values: &[f64]) -> Result<(), (BssnStatus, String)> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err((BssnStatus::InvalidArgument, format!("non-finite argument to {name}: {v}"))),
        None => Ok(()),
    }
}

#[no_mangle]
pub unsafe extern "C" fn bssn_s_fund(kappa: f64, eta: f64, theta_bs: f64, theta: f64, x: f64, y: f64, out: *mut f64) -> BssnStatus {
    guard(|| {
        finite("bssn_s_fund", &[kappa, eta, theta_bs, theta, x, y])?;
        write(out, analytic::s_fund(kappa, eta, theta_bs, theta, x, y), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn bssn_q_fund(kappa: f64, x: f64, y: f64, out: *mut f64) -> BssnStatus {
    guard(|| {
        finite("bssn_q_fund", &[kappa, x, y])?;
        write(out, analytic::q_fund(kappa, x, y), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn bssn_q_sh(kappa: f64, eta: f64, x: f64, y: f64, out: *mut f64) -> BssnStatus {
    guard(|| {
        finite("bssn_q_sh", &[kappa, eta, x, y])?;
        write(out, lab(analytic::q_sh(kappa, eta, x, y))?, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn bssn_s_sh(kappa: f64, eta: f64, x: f64, y: f64, out: *mut f64) -> BssnStatus {
    guard(|| {
        finite("bssn_s_sh", &[kappa, eta, x, y])?;
        write(out, analytic::s_sh(kappa, eta, x, y), "out")
    })
}

#[cfg(test)]
mod tests {
    use std::ptr;

    use super::*;

    #[test]
    fn errors_set_the_message() {
        let st = unsafe { bssn_q_fund(f64::NAN, 1.0, 1.0, ptr::null_mut()) };
        assert_eq!(st, BssnStatus::InvalidArgument);
        let msg = unsafe { std::ffi::CStr::from_ptr(bssn_last_error()) };
        assert!(msg.to_str().unwrap().contains("non-finite"));
    }

    #[test]
    fn null_out_is_reported() {
        assert_eq!(unsafe { bssn_q_fund(0.1, 1.0, 1.0, ptr::null_mut()) }, BssnStatus::NullPointer);
    }
}
