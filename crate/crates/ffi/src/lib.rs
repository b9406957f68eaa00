//! C ABI over `maglev-core`.
//!
//! Scenarios and trajectory logs cross the boundary as opaque handles that
//! the caller releases with the matching `*_free` function. Every fallible
//! call returns a [`MaglevStatus`]; the message of the last failure on the
//! calling thread is available from [`maglev_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::OnceLock;

use maglev_core::harness::{run_metrics, simulate, ControllerKind, Record, ScenarioConfig, SimError, TrajectoryLog};
use maglev_core::observer::MomentaVariant;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaglevStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    /// The ball reached the magnet; the partial log is still returned.
    Crash = 4,
    /// A state or estimate became non-finite; the partial log is still returned.
    Overflow = 5,
    Io = 6,
    OutOfRange = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaglevController {
    IdaSensorless = 0,
    IdaState = 1,
    Backstepping = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaglevObserver {
    Kkl = 0,
    Luenberger = 1,
}

/// Steady-state errors averaged over the plateaus after the first.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MaglevMetrics {
    pub plateaus: usize,
    pub position_estimate_error: f64,
    pub position_estimate_bias: f64,
    pub position_jitter_rms: f64,
    pub flux_error: f64,
    pub momentum_error: f64,
    pub momentum_error_luenberger: f64,
    pub resistance_error: f64,
    pub tracking_error: f64,
    /// Number of warnings the metric pass produced.
    pub warnings: usize,
}

/// Opaque scenario handle.
pub struct MaglevScenario(ScenarioConfig);

/// Opaque trajectory handle.
pub struct MaglevLog(TrajectoryLog);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: MaglevStatus, message: impl Into<String>) -> MaglevStatus {
    set_error(message);
    status
}

/// Run `body`, turning a panic into [`MaglevStatus::Panic`].
fn guard(body: impl FnOnce() -> MaglevStatus) -> MaglevStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(MaglevStatus::Panic, format!("panic: {what}"))
        }
    }
}

fn field_names() -> &'static [CString] {
    static NAMES: OnceLock<Vec<CString>> = OnceLock::new();
    NAMES.get_or_init(|| {
        Record::FIELDS
            .iter()
            .map(|f| CString::new(*f).expect("field names have no NUL"))
            .collect()
    })
}

unsafe fn scenario_mut<'a>(handle: *mut MaglevScenario) -> Result<&'a mut ScenarioConfig, MaglevStatus> {
    handle
        .as_mut()
        .map(|s| &mut s.0)
        .ok_or_else(|| fail(MaglevStatus::NullPointer, "scenario handle is null"))
}

unsafe fn scenario_ref<'a>(handle: *const MaglevScenario) -> Result<&'a ScenarioConfig, MaglevStatus> {
    handle
        .as_ref()
        .map(|s| &s.0)
        .ok_or_else(|| fail(MaglevStatus::NullPointer, "scenario handle is null"))
}

unsafe fn log_ref<'a>(handle: *const MaglevLog) -> Result<&'a TrajectoryLog, MaglevStatus> {
    handle
        .as_ref()
        .map(|l| &l.0)
        .ok_or_else(|| fail(MaglevStatus::NullPointer, "log handle is null"))
}

unsafe fn c_str<'a>(text: *const c_char, what: &str) -> Result<&'a str, MaglevStatus> {
    if text.is_null() {
        return Err(fail(MaglevStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(text)
        .to_str()
        .map_err(|_| fail(MaglevStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn finite_positive(name: &str, value: f64) -> Result<f64, MaglevStatus> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(fail(
            MaglevStatus::InvalidArgument,
            format!("{name} must be finite and > 0, got {value}"),
        ))
    }
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn maglev_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Built-in scenario: state-feedback observer study, or the same scenario
/// closed through the observer when `sensorless` is true.
#[no_mangle]
pub extern "C" fn maglev_scenario_default(sensorless: bool) -> *mut MaglevScenario {
    let cfg = if sensorless {
        ScenarioConfig::sensorless()
    } else {
        ScenarioConfig::simulation()
    };
    Box::into_raw(Box::new(MaglevScenario(cfg)))
}

/// Parse and validate a TOML scenario into `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn maglev_scenario_from_toml(text: *const c_char, out: *mut *mut MaglevScenario) -> MaglevStatus {
    guard(|| {
        if out.is_null() {
            return fail(MaglevStatus::NullPointer, "output pointer is null");
        }
        *out = ptr::null_mut();
        let text = try_status!(c_str(text, "scenario text"));
        match ScenarioConfig::from_toml_str(text) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(MaglevScenario(cfg)));
                MaglevStatus::Ok
            }
            Err(e) => fail(MaglevStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// Serialise the scenario as TOML into `*out`; release it with
/// [`maglev_string_free`].
///
/// # Safety
/// `scenario` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn maglev_scenario_to_toml(
    scenario: *const MaglevScenario,
    out: *mut *mut c_char,
) -> MaglevStatus {
    guard(|| {
        if out.is_null() {
            return fail(MaglevStatus::NullPointer, "output pointer is null");
        }
        *out = ptr::null_mut();
        let cfg = try_status!(scenario_ref(scenario));
        match CString::new(cfg.to_toml_string()) {
            Ok(s) => {
                *out = s.into_raw();
                MaglevStatus::Ok
            }
            Err(e) => fail(MaglevStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// # Safety
/// `text` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn maglev_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn maglev_scenario_set_seed(scenario: *mut MaglevScenario, seed: u64) -> MaglevStatus {
    guard(|| {
        try_status!(scenario_mut(scenario)).noise.seed = seed;
        MaglevStatus::Ok
    })
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn maglev_scenario_set_epsilon(scenario: *mut MaglevScenario, epsilon: f64) -> MaglevStatus {
    guard(|| {
        let cfg = try_status!(scenario_mut(scenario));
        cfg.injection.epsilon = try_status!(finite_positive("epsilon", epsilon));
        MaglevStatus::Ok
    })
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn maglev_scenario_set_duration(scenario: *mut MaglevScenario, duration: f64) -> MaglevStatus {
    guard(|| {
        let cfg = try_status!(scenario_mut(scenario));
        if !(duration.is_finite() && duration >= 0.0) {
            return fail(
                MaglevStatus::InvalidArgument,
                format!("duration must be finite and >= 0, got {duration}"),
            );
        }
        cfg.sim.duration = duration;
        MaglevStatus::Ok
    })
}

/// Integration steps per probe period. The log keeps its rate, so `steps`
/// must stay a multiple of it.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn maglev_scenario_set_steps_per_period(
    scenario: *mut MaglevScenario,
    steps: u32,
) -> MaglevStatus {
    guard(|| {
        let cfg = try_status!(scenario_mut(scenario));
        if steps == 0 || !steps.is_multiple_of(cfg.sim.log_rate) {
            return fail(
                MaglevStatus::InvalidArgument,
                format!(
                    "steps per period must be a positive multiple of the log rate {}",
                    cfg.sim.log_rate
                ),
            );
        }
        cfg.sim.steps_per_period = steps;
        MaglevStatus::Ok
    })
}

/// Half-range of the uniform current noise (A).
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn maglev_scenario_set_noise_amplitude(
    scenario: *mut MaglevScenario,
    amplitude: f64,
) -> MaglevStatus {
    guard(|| {
        let cfg = try_status!(scenario_mut(scenario));
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return fail(
                MaglevStatus::InvalidArgument,
                format!("noise amplitude must be finite and >= 0, got {amplitude}"),
            );
        }
        cfg.noise.amplitude = amplitude;
        MaglevStatus::Ok
    })
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn maglev_scenario_set_controller(
    scenario: *mut MaglevScenario,
    controller: MaglevController,
) -> MaglevStatus {
    guard(|| {
        try_status!(scenario_mut(scenario)).controller.kind = match controller {
            MaglevController::IdaSensorless => ControllerKind::IdaSensorless,
            MaglevController::IdaState => ControllerKind::IdaState,
            MaglevController::Backstepping => ControllerKind::Backstepping,
        };
        MaglevStatus::Ok
    })
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn maglev_scenario_set_observer(
    scenario: *mut MaglevScenario,
    observer: MaglevObserver,
) -> MaglevStatus {
    guard(|| {
        try_status!(scenario_mut(scenario)).observer.momenta = match observer {
            MaglevObserver::Kkl => MomentaVariant::Kkl,
            MaglevObserver::Luenberger => MomentaVariant::Luenberger,
        };
        MaglevStatus::Ok
    })
}

/// # Safety
/// `scenario` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn maglev_scenario_free(scenario: *mut MaglevScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Run the scenario. On success and on a crash or overflow `*out` receives
/// the (possibly partial) log, which the caller frees with
/// [`maglev_log_free`]; otherwise `*out` is null.
///
/// # Safety
/// `scenario` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn maglev_simulate(scenario: *const MaglevScenario, out: *mut *mut MaglevLog) -> MaglevStatus {
    guard(|| {
        if out.is_null() {
            return fail(MaglevStatus::NullPointer, "output pointer is null");
        }
        *out = ptr::null_mut();
        let cfg = try_status!(scenario_ref(scenario));
        let (log, status) = match simulate(cfg) {
            Ok(log) => (log, MaglevStatus::Ok),
            Err(err) => {
                let status = match err {
                    SimError::Config(_) => MaglevStatus::InvalidConfig,
                    SimError::Crash { .. } => MaglevStatus::Crash,
                    SimError::Overflow { .. } => MaglevStatus::Overflow,
                };
                set_error(err.to_string());
                match err {
                    SimError::Crash { log, .. } | SimError::Overflow { log, .. } => (*log, status),
                    SimError::Config(_) => return status,
                }
            }
        };
        *out = Box::into_raw(Box::new(MaglevLog(log)));
        status
    })
}

/// Number of records, or 0 for a null handle.
///
/// # Safety
/// `log` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn maglev_log_len(log: *const MaglevLog) -> usize {
    log.as_ref().map_or(0, |l| l.0.len())
}

#[no_mangle]
pub extern "C" fn maglev_log_field_count() -> usize {
    Record::FIELDS.len()
}

/// Static name of column `index`, or null when out of range.
#[no_mangle]
pub extern "C" fn maglev_log_field_name(index: usize) -> *const c_char {
    field_names().get(index).map_or(ptr::null(), |s| s.as_ptr())
}

/// Column index of `name` into `*index`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `index` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn maglev_log_field_index(name: *const c_char, index: *mut usize) -> MaglevStatus {
    guard(|| {
        if index.is_null() {
            return fail(MaglevStatus::NullPointer, "output pointer is null");
        }
        let name = try_status!(c_str(name, "field name"));
        match Record::field_index(name) {
            Some(i) => {
                *index = i;
                MaglevStatus::Ok
            }
            None => fail(MaglevStatus::OutOfRange, format!("unknown field `{name}`")),
        }
    })
}

/// Value of column `field` at record `row`.
///
/// # Safety
/// `log` must be a live handle and `value` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn maglev_log_value(
    log: *const MaglevLog,
    row: usize,
    field: usize,
    value: *mut f64,
) -> MaglevStatus {
    guard(|| {
        if value.is_null() {
            return fail(MaglevStatus::NullPointer, "output pointer is null");
        }
        let log = try_status!(log_ref(log));
        match log.records.get(row).and_then(|r| r.field(field)) {
            Some(v) => {
                *value = v;
                MaglevStatus::Ok
            }
            None => fail(
                MaglevStatus::OutOfRange,
                format!(
                    "record {row} field {field} outside {}x{}",
                    log.len(),
                    Record::FIELDS.len()
                ),
            ),
        }
    })
}

/// Copy column `field` into `buffer`, which must hold at least
/// [`maglev_log_len`] values.
///
/// # Safety
/// `log` must be a live handle and `buffer` must point to `capacity`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn maglev_log_column(
    log: *const MaglevLog,
    field: usize,
    buffer: *mut f64,
    capacity: usize,
) -> MaglevStatus {
    guard(|| {
        if buffer.is_null() {
            return fail(MaglevStatus::NullPointer, "buffer is null");
        }
        let log = try_status!(log_ref(log));
        if field >= Record::FIELDS.len() {
            return fail(MaglevStatus::OutOfRange, format!("field {field} out of range"));
        }
        if capacity < log.len() {
            return fail(
                MaglevStatus::OutOfRange,
                format!("buffer holds {capacity} values, log has {}", log.len()),
            );
        }
        let out = std::slice::from_raw_parts_mut(buffer, log.len());
        for (slot, record) in out.iter_mut().zip(&log.records) {
            *slot = record.values()[field];
        }
        MaglevStatus::Ok
    })
}

/// Write the log as CSV to `path`.
///
/// # Safety
/// `log` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn maglev_log_write_csv(log: *const MaglevLog, path: *const c_char) -> MaglevStatus {
    guard(|| {
        let log = try_status!(log_ref(log));
        let path = try_status!(c_str(path, "path"));
        match log.export_csv(Path::new(path)) {
            Ok(()) => MaglevStatus::Ok,
            Err(e) => fail(MaglevStatus::Io, e.to_string()),
        }
    })
}

/// Steady-state metrics of `log`, which must come from `scenario`.
///
/// # Safety
/// `log` and `scenario` must be live handles and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn maglev_log_metrics(
    log: *const MaglevLog,
    scenario: *const MaglevScenario,
    out: *mut MaglevMetrics,
) -> MaglevStatus {
    guard(|| {
        if out.is_null() {
            return fail(MaglevStatus::NullPointer, "output pointer is null");
        }
        let log = try_status!(log_ref(log));
        let cfg = try_status!(scenario_ref(scenario));
        let metrics = run_metrics(log, cfg);
        let s = metrics.steady();
        *out = MaglevMetrics {
            plateaus: s.plateaus,
            position_estimate_error: s.position_estimate_error,
            position_estimate_bias: s.position_estimate_bias,
            position_jitter_rms: s.position_jitter_rms,
            flux_error: s.flux_error,
            momentum_error: s.momentum_error,
            momentum_error_luenberger: s.momentum_error_luenberger,
            resistance_error: s.resistance_error,
            tracking_error: s.tracking_error,
            warnings: metrics.warnings.len(),
        };
        MaglevStatus::Ok
    })
}

/// # Safety
/// `log` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn maglev_log_free(log: *mut MaglevLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}
