//! C ABI over the `spinchain` simulator.
//!
//! Scenarios and trajectories are opaque handles created and destroyed on the
//! Rust side. Every fallible call returns a [`SpinchainStatus`]; on failure the
//! message is kept per thread and read back with [`spinchain_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use spinchain::config::{GammaPreset, ScenarioConfig};
use spinchain::export::write_record_csv;
use spinchain::{DissipatorMode, Error, TrajectoryRecord};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinchainStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Integrity = 5,
    Io = 6,
    OutOfRange = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinchainMode {
    Markovian = 0,
    QuasiNonMarkovian = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinchainPreset {
    Lo = 0,
    Hi = 1,
}

/// One sampled point of a trajectory.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpinchainSample {
    /// us
    pub t: f64,
    /// |rho_13|, |rho_14|, |rho_34|
    pub coherences: [f64; 3],
    pub purity: f64,
    pub trace_dev: f64,
    pub herm_dev: f64,
    pub min_eig: f64,
}

/// Worst monitor values over a whole run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpinchainPeak {
    pub trace_dev: f64,
    pub herm_dev: f64,
    pub min_eig: f64,
}

/// Opaque scenario under construction.
pub struct SpinchainScenario {
    config: ScenarioConfig,
}

/// Opaque result of a run.
pub struct SpinchainTrajectory {
    record: TrajectoryRecord,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: SpinchainStatus,
    message: String,
}

impl Failure {
    fn new(status: SpinchainStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Argument(_) | Error::State(_) | Error::Unsupported(_) => {
                SpinchainStatus::InvalidArgument
            }
            Error::Config(_) => SpinchainStatus::Config,
            Error::Numerical { .. } => SpinchainStatus::Numerical,
            Error::Integrity { .. } => SpinchainStatus::Integrity,
            Error::Io { .. } | Error::Csv { .. } => SpinchainStatus::Io,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SpinchainStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            SpinchainStatus::Ok
        }
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            SpinchainStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(SpinchainStatus::NullPointer, format!("{what} is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(SpinchainStatus::NullPointer, format!("{what} is null")))
}

unsafe fn string_arg(p: *const c_char, what: &str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::new(
            SpinchainStatus::NullPointer,
            format!("{what} is null"),
        ));
    }
    CStr::from_ptr(p).to_str().map(str::to_owned).map_err(|_| {
        Failure::new(
            SpinchainStatus::InvalidArgument,
            format!("{what} is not UTF-8"),
        )
    })
}

fn finite(v: f64, what: &str) -> Result<f64, Failure> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::new(
            SpinchainStatus::InvalidArgument,
            format!("{what} = {v} is not finite"),
        ))
    }
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn spinchain_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spinchain_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a scenario with every setting at its default.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn spinchain_scenario_new(
    out: *mut *mut SpinchainScenario,
) -> SpinchainStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = Box::into_raw(Box::new(SpinchainScenario {
            config: ScenarioConfig::default(),
        }));
        Ok(())
    })
}

/// Parses a TOML scenario.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spinchain_scenario_from_toml(
    toml: *const c_char,
    out: *mut *mut SpinchainScenario,
) -> SpinchainStatus {
    guard(|| {
        let text = string_arg(toml, "toml")?;
        let out = deref_mut(out, "out")?;
        let config = ScenarioConfig::from_toml(&text)?;
        *out = Box::into_raw(Box::new(SpinchainScenario { config }));
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn spinchain_scenario_free(scenario: *mut SpinchainScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

unsafe fn with_scenario(
    scenario: *mut SpinchainScenario,
    f: impl FnOnce(&mut ScenarioConfig) -> Result<(), Failure>,
) -> SpinchainStatus {
    guard(|| f(&mut deref_mut(scenario, "scenario")?.config))
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spinchain_scenario_set_mode(
    scenario: *mut SpinchainScenario,
    mode: SpinchainMode,
) -> SpinchainStatus {
    with_scenario(scenario, |c| {
        let m = match mode {
            SpinchainMode::Markovian => DissipatorMode::Markovian,
            SpinchainMode::QuasiNonMarkovian => DissipatorMode::QuasiNonMarkovian,
        };
        c.run.mode = Some(m.as_str().into());
        Ok(())
    })
}

/// Bath temperature in kelvin.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spinchain_scenario_set_temperature(
    scenario: *mut SpinchainScenario,
    kelvin: f64,
) -> SpinchainStatus {
    with_scenario(scenario, |c| {
        c.bath.temperature_k = Some(finite(kelvin, "temperature")?);
        Ok(())
    })
}

/// Dissipation rate in MHz; replaces any preset.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spinchain_scenario_set_gamma_mhz(
    scenario: *mut SpinchainScenario,
    gamma: f64,
) -> SpinchainStatus {
    with_scenario(scenario, |c| {
        c.set_gamma_mhz(finite(gamma, "gamma")?);
        Ok(())
    })
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spinchain_scenario_set_preset(
    scenario: *mut SpinchainScenario,
    preset: SpinchainPreset,
) -> SpinchainStatus {
    with_scenario(scenario, |c| {
        c.set_preset(match preset {
            SpinchainPreset::Lo => GammaPreset::Lo,
            SpinchainPreset::Hi => GammaPreset::Hi,
        });
        Ok(())
    })
}

/// Rabi frequency in MHz.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spinchain_scenario_set_rabi_mhz(
    scenario: *mut SpinchainScenario,
    rabi: f64,
) -> SpinchainStatus {
    with_scenario(scenario, |c| {
        c.system.rabi_mhz = Some(finite(rabi, "rabi")?);
        Ok(())
    })
}

/// Couplings J and J' in MHz.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spinchain_scenario_set_couplings_mhz(
    scenario: *mut SpinchainScenario,
    j1: f64,
    j2: f64,
) -> SpinchainStatus {
    with_scenario(scenario, |c| {
        c.system.j1_mhz = Some(finite(j1, "j1")?);
        c.system.j2_mhz = Some(finite(j2, "j2")?);
        Ok(())
    })
}

/// End time in us.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spinchain_scenario_set_horizon(
    scenario: *mut SpinchainScenario,
    horizon_us: f64,
) -> SpinchainStatus {
    with_scenario(scenario, |c| {
        c.sequence.horizon_us = Some(finite(horizon_us, "horizon")?);
        Ok(())
    })
}

/// Number of trailing pi pulses after the CNOT pair (may be fractional).
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spinchain_scenario_set_trailing_pulses(
    scenario: *mut SpinchainScenario,
    count: f64,
) -> SpinchainStatus {
    with_scenario(scenario, |c| {
        c.sequence.trailing_pi_pulses = Some(finite(count, "trailing pulses")?);
        Ok(())
    })
}

/// Integration step in us and sampling stride in steps. A zero argument keeps
/// the current value.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn spinchain_scenario_set_integrator(
    scenario: *mut SpinchainScenario,
    dt_us: f64,
    sample_stride: usize,
) -> SpinchainStatus {
    with_scenario(scenario, |c| {
        if dt_us != 0.0 {
            c.integrator.dt_us = Some(finite(dt_us, "dt")?);
        }
        if sample_stride != 0 {
            c.integrator.sample_stride = Some(sample_stride);
        }
        Ok(())
    })
}

/// Resolves and integrates the scenario from |000>.
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spinchain_scenario_run(
    scenario: *const SpinchainScenario,
    out: *mut *mut SpinchainTrajectory,
) -> SpinchainStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        let out = deref_mut(out, "out")?;
        let record = s.config.resolve()?.run()?;
        *out = Box::into_raw(Box::new(SpinchainTrajectory { record }));
        Ok(())
    })
}

/// # Safety
/// `trajectory` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn spinchain_trajectory_free(trajectory: *mut SpinchainTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// Number of samples; 0 for NULL.
///
/// # Safety
/// `trajectory` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn spinchain_trajectory_len(trajectory: *const SpinchainTrajectory) -> usize {
    trajectory.as_ref().map_or(0, |t| t.record.samples.len())
}

/// Hilbert-space dimension; 0 for NULL.
///
/// # Safety
/// `trajectory` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn spinchain_trajectory_dim(trajectory: *const SpinchainTrajectory) -> usize {
    trajectory.as_ref().map_or(0, |t| t.record.dim)
}

/// # Safety
/// `trajectory` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spinchain_trajectory_sample(
    trajectory: *const SpinchainTrajectory,
    index: usize,
    out: *mut SpinchainSample,
) -> SpinchainStatus {
    guard(|| {
        let t = deref(trajectory, "trajectory")?;
        let out = deref_mut(out, "out")?;
        let s = t.record.samples.get(index).ok_or_else(|| {
            Failure::new(
                SpinchainStatus::OutOfRange,
                format!("sample {index} of {}", t.record.samples.len()),
            )
        })?;
        *out = SpinchainSample {
            t: s.t,
            coherences: s.coherences,
            purity: s.purity,
            trace_dev: s.trace_dev,
            herm_dev: s.herm_dev,
            min_eig: s.min_eig,
        };
        Ok(())
    })
}

/// Copies the populations of sample `index` into `buf`, which must hold
/// `dim` values.
///
/// # Safety
/// `trajectory` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn spinchain_trajectory_populations(
    trajectory: *const SpinchainTrajectory,
    index: usize,
    buf: *mut f64,
    len: usize,
) -> SpinchainStatus {
    guard(|| {
        let t = deref(trajectory, "trajectory")?;
        if buf.is_null() {
            return Err(Failure::new(SpinchainStatus::NullPointer, "buf is null"));
        }
        let pops = t.record.populations.get(index).ok_or_else(|| {
            Failure::new(
                SpinchainStatus::OutOfRange,
                format!("sample {index} of {}", t.record.populations.len()),
            )
        })?;
        if len < pops.len() {
            return Err(Failure::new(
                SpinchainStatus::OutOfRange,
                format!("buffer holds {len} values, {} needed", pops.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, pops.len()).copy_from_slice(pops);
        Ok(())
    })
}

/// Final density matrix, row-major, split into real and imaginary parts.
/// Both buffers must hold `dim * dim` values.
///
/// # Safety
/// `trajectory` must be a live handle and both buffers valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn spinchain_trajectory_final_state(
    trajectory: *const SpinchainTrajectory,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> SpinchainStatus {
    guard(|| {
        let t = deref(trajectory, "trajectory")?;
        if re.is_null() || im.is_null() {
            return Err(Failure::new(
                SpinchainStatus::NullPointer,
                "output buffer is null",
            ));
        }
        let rho = t.record.final_state.as_slice();
        if len < rho.len() {
            return Err(Failure::new(
                SpinchainStatus::OutOfRange,
                format!("buffers hold {len} values, {} needed", rho.len()),
            ));
        }
        let re = std::slice::from_raw_parts_mut(re, rho.len());
        let im = std::slice::from_raw_parts_mut(im, rho.len());
        for (i, z) in rho.iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `trajectory` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn spinchain_trajectory_peak(
    trajectory: *const SpinchainTrajectory,
    out: *mut SpinchainPeak,
) -> SpinchainStatus {
    guard(|| {
        let t = deref(trajectory, "trajectory")?;
        let out = deref_mut(out, "out")?;
        let p = t.record.peak;
        *out = SpinchainPeak {
            trace_dev: p.trace_dev,
            herm_dev: p.herm_dev,
            min_eig: p.min_eig,
        };
        Ok(())
    })
}

/// Writes the trajectory in the CLI's CSV layout.
///
/// # Safety
/// `trajectory` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn spinchain_trajectory_write_csv(
    trajectory: *const SpinchainTrajectory,
    path: *const c_char,
) -> SpinchainStatus {
    guard(|| {
        let t = deref(trajectory, "trajectory")?;
        let path = PathBuf::from(string_arg(path, "path")?);
        write_record_csv(&t.record, &path)?;
        Ok(())
    })
}
