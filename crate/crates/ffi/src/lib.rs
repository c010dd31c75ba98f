//! C ABI over the `nmrqi` toolkit.
//!
//! Every fallible function returns an `NmrqiStatus` and writes results through
//! out-pointers. On failure the message is kept per thread and can be read
//! with `nmrqi_last_error_message`. Objects cross the boundary as opaque
//! handles that the caller releases with the matching `_free` function.
//! Panics never unwind into C; they surface as `NMRQI_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nmrqi::aaqst::{model_condition_number, reconstruct_state, simulate_readout, UnitaryModel};
use nmrqi::dd::{self, DDSequence};
use nmrqi::files::{parse_model, parse_system};
use nmrqi::macrorealism::information_deficit;
use nmrqi::measurement::{add_noise, NoiseSpec};
use nmrqi::noon::{effective_gamma, StarSystem};
use nmrqi::quantum::{CMatrix, DeviationDensityMatrix, SpinSystem, C64};
use nmrqi::sspt::{self, QuantumChannel, SsptPipeline};
use nmrqi::Error;

const SSPT_SYSTEM: &str = include_str!("../../core/data/sspt_system.toml");
const SSPT_MODEL: &str = include_str!("../../core/data/sspt_model.toml");

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmrqiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    DimensionMismatch = 4,
    RankDeficient = 5,
    NegativeDelay = 6,
    Numerical = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// DD sequence family for `nmrqi_dd_sequence_new`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmrqiScheme {
    Cpmg = 0,
    Udd = 1,
    Rudd = 2,
}

/// Opaque spin system.
pub struct NmrqiSystem(SpinSystem);

/// Opaque pulse-program model with its parameter values.
pub struct NmrqiModel(UnitaryModel);

/// Opaque DD pulse sequence.
pub struct NmrqiSequence(DDSequence);

/// Opaque single-scan process-tomography pipeline.
pub struct NmrqiSspt(SsptPipeline);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> NmrqiStatus {
    match e {
        Error::Parse { .. } | Error::Io(_) => NmrqiStatus::Parse,
        Error::DimensionMismatch { .. } => NmrqiStatus::DimensionMismatch,
        Error::RankDeficient { .. } => NmrqiStatus::RankDeficient,
        Error::NegativeDelay { .. } | Error::NegativeSequenceDelay { .. } => {
            NmrqiStatus::NegativeDelay
        }
        Error::Numerical(_) => NmrqiStatus::Numerical,
        _ => NmrqiStatus::InvalidArgument,
    }
}

struct Failure(NmrqiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(NmrqiStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NmrqiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NmrqiStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            NmrqiStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(NmrqiStatus::InvalidArgument, format!("{what}: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nmrqi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses a spin system from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_system_from_toml(
    toml: *const c_char,
    out: *mut *mut NmrqiSystem,
) -> NmrqiStatus {
    guard(|| {
        let sys = parse_system(text(toml, "toml")?, Path::new("<ffi>"))?;
        put(out, Box::into_raw(Box::new(NmrqiSystem(sys))), "out")
    })
}

/// # Safety
/// `sys` must be null or a handle from `nmrqi_system_from_toml` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_system_free(sys: *mut NmrqiSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Number of spins in the system.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_system_n_spins(
    sys: *const NmrqiSystem,
    out: *mut usize,
) -> NmrqiStatus {
    guard(|| put(out, handle(sys, "sys")?.0.n_spins(), "out"))
}

/// Parses a pulse-program model from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_model_from_toml(
    toml: *const c_char,
    out: *mut *mut NmrqiModel,
) -> NmrqiStatus {
    guard(|| {
        let model = parse_model(text(toml, "toml")?, Path::new("<ffi>"))?;
        put(out, Box::into_raw(Box::new(NmrqiModel(model))), "out")
    })
}

/// # Safety
/// `model` must be null or a handle from `nmrqi_model_from_toml` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_model_free(model: *mut NmrqiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of free delay parameters of the model.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_model_n_params(
    model: *const NmrqiModel,
    out: *mut usize,
) -> NmrqiStatus {
    guard(|| put(out, handle(model, "model")?.0.n_params(), "out"))
}

/// Condition number of the tomography constraint matrix at `params`
/// (`n_params` delays in seconds); infinite when rank deficient.
///
/// # Safety
/// Handles must be live, `params` valid for `n_params` reads, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_condition_number(
    sys: *const NmrqiSystem,
    model: *const NmrqiModel,
    params: *const f64,
    n_params: usize,
    out: *mut f64,
) -> NmrqiStatus {
    guard(|| {
        let (sys, model) = (handle(sys, "sys")?, handle(model, "model")?);
        if params.is_null() {
            return Err(null("params"));
        }
        let p = std::slice::from_raw_parts(params, n_params);
        if p.len() != model.0.n_params() {
            return Err(Failure(
                NmrqiStatus::DimensionMismatch,
                format!(
                    "model has {} parameters, got {}",
                    model.0.n_params(),
                    p.len()
                ),
            ));
        }
        put(out, model_condition_number(&sys.0, &model.0, p), "out")
    })
}

fn model_params(model: &UnitaryModel) -> Result<Vec<f64>, Failure> {
    model.default_params().ok_or_else(|| {
        Failure(
            NmrqiStatus::InvalidArgument,
            "every model parameter needs a value".into(),
        )
    })
}

fn read_matrix(re: *const f64, im: *const f64, dim: usize) -> Result<CMatrix, Failure> {
    if re.is_null() {
        return Err(null("re"));
    }
    // Row-major input; `im` may be null for a real matrix.
    Ok(CMatrix::from_fn(dim, dim, |r, c| unsafe {
        C64::new(
            *re.add(r * dim + c),
            if im.is_null() {
                0.0
            } else {
                *im.add(r * dim + c)
            },
        )
    }))
}

/// Simulates the tomography readout of a register deviation matrix (row-major
/// `dim x dim`, `im` may be null), optionally adds noise of level `eta` with
/// `seed`, reconstructs, and writes the estimate to `out_re` / `out_im`.
///
/// # Safety
/// Handles must be live; matrix pointers must be valid for `dim * dim` values.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn nmrqi_aaqst_round_trip(
    sys: *const NmrqiSystem,
    model: *const NmrqiModel,
    dim: usize,
    re: *const f64,
    im: *const f64,
    eta: f64,
    seed: u64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> NmrqiStatus {
    guard(|| {
        let (sys, model) = (handle(sys, "sys")?, handle(model, "model")?);
        if out_re.is_null() || out_im.is_null() {
            return Err(null("output matrix"));
        }
        let rho = DeviationDensityMatrix::new(read_matrix(re, im, dim)?)?;
        let u = model.0.unitaries(&sys.0, &model_params(&model.0)?)?;
        let m = nmrqi::aaqst::build_constraint_matrix(&sys.0, &u)?;
        let noise = if eta == 0.0 {
            NoiseSpec::none()
        } else {
            NoiseSpec::new(eta, seed)?
        };
        let readout = add_noise(&simulate_readout(&sys.0, &rho, &u)?, noise);
        let est = reconstruct_state(&m, &readout)?;
        if est.dim() != dim {
            return Err(Failure(
                NmrqiStatus::DimensionMismatch,
                format!("register dimension is {}, got {dim}", est.dim()),
            ));
        }
        for r in 0..dim {
            for c in 0..dim {
                let z = est.matrix()[(r, c)];
                *out_re.add(r * dim + c) = z.re;
                *out_im.add(r * dim + c) = z.im;
            }
        }
        Ok(())
    })
}

/// Builds a process-tomography pipeline. Null `system_toml` or `model_toml`
/// selects the bundled three-spin register or readout program.
///
/// # Safety
/// Strings must be null or NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_sspt_new(
    system_toml: *const c_char,
    model_toml: *const c_char,
    out: *mut *mut NmrqiSspt,
) -> NmrqiStatus {
    guard(|| {
        let sys_text = if system_toml.is_null() {
            SSPT_SYSTEM
        } else {
            text(system_toml, "system_toml")?
        };
        let model_text = if model_toml.is_null() {
            SSPT_MODEL
        } else {
            text(model_toml, "model_toml")?
        };
        let sys = parse_system(sys_text, Path::new("<ffi>"))?;
        let model = parse_model(model_text, Path::new("<ffi>"))?;
        let u = model.unitaries(&sys, &model_params(&model)?)?;
        put(
            out,
            Box::into_raw(Box::new(NmrqiSspt(SsptPipeline::new(sys, u)?))),
            "out",
        )
    })
}

/// # Safety
/// `p` must be null or a handle from `nmrqi_sspt_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_sspt_free(p: *mut NmrqiSspt) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Fidelity of the tomographed named gate (`nop`, `not-x`, `not-y`,
/// `hadamard`, `phase-pi`, `phase-pi/4`) against its ideal process matrix.
///
/// # Safety
/// `p` must be live, `gate` NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_sspt_gate_fidelity(
    p: *const NmrqiSspt,
    gate: *const c_char,
    eta: f64,
    seed: u64,
    out: *mut f64,
) -> NmrqiStatus {
    guard(|| {
        let p = handle(p, "pipeline")?;
        let channel = QuantumChannel::unitary(sspt::gate(text(gate, "gate")?)?)?;
        let noise = if eta == 0.0 {
            NoiseSpec::none()
        } else {
            NoiseSpec::new(eta, seed)?
        };
        let chi = p.0.run(&channel, noise)?;
        put(
            out,
            sspt::gate_fidelity(&chi, &sspt::chi_theory(&channel)?)?,
            "out",
        )
    })
}

/// Tomographed twirl process matrix at angle `phi`, written row-major as
/// 16 real and 16 imaginary parts in the basis E, X, Y, Z.
///
/// # Safety
/// `p` must be live and `out_re` / `out_im` valid for 16 writes each.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_sspt_twirl_chi(
    p: *const NmrqiSspt,
    phi: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> NmrqiStatus {
    guard(|| {
        let p = handle(p, "pipeline")?;
        if out_re.is_null() || out_im.is_null() {
            return Err(null("output matrix"));
        }
        let chi = p.0.run(&QuantumChannel::twirl(phi)?, NoiseSpec::none())?;
        for r in 0..4 {
            for c in 0..4 {
                let z = chi.entries()[(r, c)];
                *out_re.add(4 * r + c) = z.re;
                *out_im.add(4 * r + c) = z.im;
            }
        }
        Ok(())
    })
}

/// Information deficit `D_n(theta)` in bits.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_information_deficit(
    theta: f64,
    n: usize,
    out: *mut f64,
) -> NmrqiStatus {
    guard(|| put(out, information_deficit(theta, n)?, "out"))
}

/// Builds a DD sequence. CPMG uses `tau` and ignores `total_t`; UDD and RUDD
/// use `total_t` and ignore `tau`. All times in seconds.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_dd_sequence_new(
    scheme: NmrqiScheme,
    n: usize,
    tau: f64,
    tau_pi: f64,
    total_t: f64,
    out: *mut *mut NmrqiSequence,
) -> NmrqiStatus {
    guard(|| {
        let seq = match scheme {
            NmrqiScheme::Cpmg => dd::make_cpmg(n, tau, tau_pi, false)?,
            NmrqiScheme::Udd => dd::make_udd(n, total_t, tau_pi)?,
            NmrqiScheme::Rudd => dd::make_rudd(n, total_t, tau_pi)?,
        };
        put(out, Box::into_raw(Box::new(NmrqiSequence(seq))), "out")
    })
}

/// # Safety
/// `seq` must be null or a handle from `nmrqi_dd_sequence_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_dd_sequence_free(seq: *mut NmrqiSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Total duration and pulse count.
///
/// # Safety
/// `seq` must be live; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_dd_sequence_info(
    seq: *const NmrqiSequence,
    total_t: *mut f64,
    n_pulses: *mut usize,
) -> NmrqiStatus {
    guard(|| {
        let s = &handle(seq, "seq")?.0;
        put(total_t, s.total_t(), "total_t")?;
        put(n_pulses, s.pulses().len(), "n_pulses")
    })
}

/// Pulse center times; `len` must be at least the pulse count.
///
/// # Safety
/// `seq` must be live and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_dd_pulse_centers(
    seq: *const NmrqiSequence,
    out: *mut f64,
    len: usize,
) -> NmrqiStatus {
    guard(|| {
        let c = handle(seq, "seq")?.0.centers();
        if out.is_null() {
            return Err(null("out"));
        }
        if len < c.len() {
            return Err(Failure(
                NmrqiStatus::BufferTooSmall,
                format!("need {} slots, got {len}", c.len()),
            ));
        }
        ptr::copy_nonoverlapping(c.as_ptr(), out, c.len());
        Ok(())
    })
}

/// Filter function `F(omega)` for `omega` in rad/s.
///
/// # Safety
/// `seq` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_dd_filter_function(
    seq: *const NmrqiSequence,
    omega: f64,
    out: *mut f64,
) -> NmrqiStatus {
    guard(|| {
        let s = &handle(seq, "seq")?.0;
        if !omega.is_finite() || omega < 0.0 {
            return Err(Failure(
                NmrqiStatus::InvalidArgument,
                format!("omega must be finite and >= 0, got {omega}"),
            ));
        }
        put(out, dd::filter_function(s, omega), "out")
    })
}

/// Integral of `F(omega) / omega^2` over `[omega_lo, omega_hi]`.
///
/// # Safety
/// `seq` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_dd_ff_area(
    seq: *const NmrqiSequence,
    omega_lo: f64,
    omega_hi: f64,
    out: *mut f64,
) -> NmrqiStatus {
    guard(|| {
        put(
            out,
            dd::ff_area(&handle(seq, "seq")?.0, (omega_lo, omega_hi))?,
            "out",
        )
    })
}

/// Effective gyromagnetic ratio and amplification of a star system with one
/// central spin `gamma_a` and `n_total - 1` satellites `gamma_m`.
///
/// # Safety
/// Outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn nmrqi_noon_gfactor(
    gamma_a: f64,
    gamma_m: f64,
    n_total: usize,
    gamma_eff: *mut f64,
    g: *mut f64,
) -> NmrqiStatus {
    guard(|| {
        let (ge, gg) = effective_gamma(&StarSystem::new(gamma_a, gamma_m, n_total)?);
        put(gamma_eff, ge, "gamma_eff")?;
        put(g, gg, "g")
    })
}
