//! C ABI over `iwd-sched`.
//!
//! Objects cross the boundary as opaque handles created by `*_load`,
//! `*_default` or `iwd_schedule_run` and released with the matching `*_free`.
//! Every fallible call returns an [`IwdStatus`]; on failure [`iwd_last_error`]
//! describes what went wrong on the calling thread. Strings returned by the
//! library are freed with [`iwd_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use iwd_sched::cli::ScheduleReport;
use iwd_sched::evaluator::{deadline_set, schedule_once, EvalError, SchedulerKind};
use iwd_sched::io::{self, IoError};
use iwd_sched::iwd::{IwdError, IwdParams, UpdateCoefficients};
use iwd_sched::resource::{CloudProfile, Platform};
use iwd_sched::schedule::Schedule;
use iwd_sched::workflow::Workflow;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IwdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidWorkflow = 5,
    InvalidArgument = 6,
    NoFeasibleSchedule = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IwdScheduler {
    Iwd = 0,
    Greedy = 1,
    Oracle = 2,
}

impl From<IwdScheduler> for SchedulerKind {
    fn from(s: IwdScheduler) -> Self {
        match s {
            IwdScheduler::Iwd => SchedulerKind::Iwd,
            IwdScheduler::Greedy => SchedulerKind::Greedy,
            IwdScheduler::Oracle => SchedulerKind::Oracle,
        }
    }
}

/// Search parameters; fill with [`iwd_params_default`] and adjust.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IwdSearchParams {
    pub a_v: f64,
    pub b_v: f64,
    pub c_v: f64,
    pub a_s: f64,
    pub b_s: f64,
    pub c_s: f64,
    pub max_iterations: usize,
    pub initial_soil: f64,
    pub vms_to_visit: usize,
    pub initial_velocity: f64,
    pub initial_drop_soil: f64,
    pub epsilon: f64,
    pub rho_n: f64,
    pub rho_iwd: f64,
}

impl From<IwdParams> for IwdSearchParams {
    fn from(p: IwdParams) -> Self {
        IwdSearchParams {
            a_v: p.velocity.a,
            b_v: p.velocity.b,
            c_v: p.velocity.c,
            a_s: p.soil.a,
            b_s: p.soil.b,
            c_s: p.soil.c,
            max_iterations: p.max_iterations,
            initial_soil: p.initial_soil,
            vms_to_visit: p.vms_to_visit,
            initial_velocity: p.initial_velocity,
            initial_drop_soil: p.initial_drop_soil,
            epsilon: p.epsilon,
            rho_n: p.rho_n,
            rho_iwd: p.rho_iwd,
        }
    }
}

impl From<IwdSearchParams> for IwdParams {
    fn from(p: IwdSearchParams) -> Self {
        IwdParams {
            velocity: UpdateCoefficients::new(p.a_v, p.b_v, p.c_v),
            soil: UpdateCoefficients::new(p.a_s, p.b_s, p.c_s),
            max_iterations: p.max_iterations,
            initial_soil: p.initial_soil,
            vms_to_visit: p.vms_to_visit,
            initial_velocity: p.initial_velocity,
            initial_drop_soil: p.initial_drop_soil,
            epsilon: p.epsilon,
            rho_n: p.rho_n,
            rho_iwd: p.rho_iwd,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IwdDeadlines {
    pub fastest_s: f64,
    pub slowest_s: f64,
    pub interval_s: f64,
    pub deadlines_s: [f64; 4],
}

/// Opaque workflow handle.
pub struct IwdWorkflow(Workflow);

/// Opaque cloud profile handle.
pub struct IwdProfile(CloudProfile);

/// Opaque schedule handle.
pub struct IwdSchedule {
    schedule: Schedule,
    feasible: bool,
    report: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', "\\0")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(IwdStatus, String);

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let status = match e {
            IoError::Io { .. } => IwdStatus::Io,
            IoError::Invalid { .. } => IwdStatus::InvalidWorkflow,
            IoError::UnknownBundled(_) => IwdStatus::InvalidArgument,
            _ => IwdStatus::Parse,
        };
        Failure(status, e.to_string())
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let status = match e {
            EvalError::InvalidWorkflow(_) | EvalError::Iwd(IwdError::InvalidWorkflow(_)) => IwdStatus::InvalidWorkflow,
            _ => IwdStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IwdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            IwdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            IwdStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(IwdStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(IwdStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(IwdStatus::NullPointer, format!("{name} is null")))
}

unsafe fn out_arg<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(IwdStatus::NullPointer, "out is null".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn iwd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn iwd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn iwd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a workflow file, a `.dax` file, or `bundled:<name>`.
#[no_mangle]
pub unsafe extern "C" fn iwd_workflow_load(path: *const c_char, out: *mut *mut IwdWorkflow) -> IwdStatus {
    guard(|| {
        let wf = io::resolve_workflow(str_arg(path, "path")?)?;
        out_arg(out, IwdWorkflow(wf))
    })
}

/// Parses a workflow document from JSON text.
#[no_mangle]
pub unsafe extern "C" fn iwd_workflow_from_json(json: *const c_char, out: *mut *mut IwdWorkflow) -> IwdStatus {
    guard(|| {
        let wf = io::parse_workflow(str_arg(json, "json")?, "<json>")?;
        out_arg(out, IwdWorkflow(wf))
    })
}

#[no_mangle]
pub unsafe extern "C" fn iwd_workflow_free(wf: *mut IwdWorkflow) {
    free_handle(wf)
}

/// Number of tasks, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn iwd_workflow_task_count(wf: *const IwdWorkflow) -> usize {
    wf.as_ref().map_or(0, |w| w.0.len())
}

/// The built-in EC2-style profile.
#[no_mangle]
pub unsafe extern "C" fn iwd_profile_default(out: *mut *mut IwdProfile) -> IwdStatus {
    guard(|| out_arg(out, IwdProfile(CloudProfile::default())))
}

#[no_mangle]
pub unsafe extern "C" fn iwd_profile_load(path: *const c_char, out: *mut *mut IwdProfile) -> IwdStatus {
    guard(|| {
        let p = io::load_profile(str_arg(path, "path")?)?;
        out_arg(out, IwdProfile(p))
    })
}

#[no_mangle]
pub unsafe extern "C" fn iwd_profile_free(p: *mut IwdProfile) {
    free_handle(p)
}

#[no_mangle]
pub unsafe extern "C" fn iwd_params_default(out: *mut IwdSearchParams) -> IwdStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| Failure(IwdStatus::NullPointer, "out is null".into()))?;
        *out = IwdParams::default().into();
        Ok(())
    })
}

/// Fastest/slowest single-VM makespans and the four interval deadlines.
#[no_mangle]
pub unsafe extern "C" fn iwd_deadline_set(
    wf: *const IwdWorkflow,
    profile: *const IwdProfile,
    out: *mut IwdDeadlines,
) -> IwdStatus {
    guard(|| {
        let (wf, profile) = (ref_arg(wf, "wf")?, ref_arg(profile, "profile")?);
        let out = out.as_mut().ok_or_else(|| Failure(IwdStatus::NullPointer, "out is null".into()))?;
        let set = deadline_set(&wf.0, &profile.0)?;
        *out = IwdDeadlines {
            fastest_s: set.fastest,
            slowest_s: set.slowest,
            interval_s: set.interval,
            deadlines_s: set.deadlines,
        };
        Ok(())
    })
}

/// Schedules `wf` on a pool of `pool_size` VMs (0 selects three per catalog
/// type) whose degradation is sampled from `seed`. `params` may be null for
/// the defaults. An infeasible IWD or greedy result still returns `OK` with a
/// handle; check [`iwd_schedule_is_feasible`]. The oracle returns
/// `NO_FEASIBLE_SCHEDULE` and no handle when no assignment meets the deadline.
#[no_mangle]
pub unsafe extern "C" fn iwd_schedule_run(
    wf: *const IwdWorkflow,
    profile: *const IwdProfile,
    scheduler: IwdScheduler,
    deadline_s: f64,
    seed: u64,
    pool_size: usize,
    params: *const IwdSearchParams,
    out: *mut *mut IwdSchedule,
) -> IwdStatus {
    guard(|| {
        let (wf, profile) = (ref_arg(wf, "wf")?, ref_arg(profile, "profile")?);
        if out.is_null() {
            return Err(Failure(IwdStatus::NullPointer, "out is null".into()));
        }
        if !(deadline_s >= 0.0) {
            return Err(Failure(IwdStatus::InvalidArgument, format!("deadline must be non-negative, got {deadline_s}")));
        }
        let params: IwdParams = params.as_ref().map_or_else(IwdParams::default, |p| (*p).into());
        let pool = if pool_size == 0 { 3 * profile.0.catalog.len() } else { pool_size };
        let platform = Platform::sampled(profile.0.clone(), pool, seed)
            .map_err(|e| Failure(IwdStatus::InvalidArgument, e.to_string()))?;
        let kind = SchedulerKind::from(scheduler);
        let outcome = schedule_once(&wf.0, &platform, kind, deadline_s, seed, &params)?;
        let Some(schedule) = outcome.schedule else {
            return Err(Failure(IwdStatus::NoFeasibleSchedule, "no assignment meets the deadline".into()));
        };
        let report = ScheduleReport::new(&wf.0, &platform, kind, seed, deadline_s, Some(&schedule));
        let json = serde_json::to_string_pretty(&report).map_err(|e| Failure(IwdStatus::Internal, e.to_string()))?;
        let handle = IwdSchedule {
            feasible: schedule.is_feasible(deadline_s),
            schedule,
            report: CString::new(json).map_err(|e| Failure(IwdStatus::Internal, e.to_string()))?,
        };
        out_arg(out, handle)
    })
}

#[no_mangle]
pub unsafe extern "C" fn iwd_schedule_free(s: *mut IwdSchedule) {
    free_handle(s)
}

/// Total execution cost, or NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn iwd_schedule_tec(s: *const IwdSchedule) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.schedule.total_cost)
}

/// Makespan in seconds, or NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn iwd_schedule_makespan(s: *const IwdSchedule) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.schedule.makespan)
}

#[no_mangle]
pub unsafe extern "C" fn iwd_schedule_is_feasible(s: *const IwdSchedule) -> bool {
    s.as_ref().is_some_and(|s| s.feasible)
}

/// Number of leased VMs, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn iwd_schedule_resource_count(s: *const IwdSchedule) -> usize {
    s.as_ref().map_or(0, |s| s.schedule.resources.len())
}

/// The schedule report as JSON; release with [`iwd_string_free`].
#[no_mangle]
pub unsafe extern "C" fn iwd_schedule_to_json(s: *const IwdSchedule, out: *mut *mut c_char) -> IwdStatus {
    guard(|| {
        let s = ref_arg(s, "schedule")?;
        if out.is_null() {
            return Err(Failure(IwdStatus::NullPointer, "out is null".into()));
        }
        *out = s.report.clone().into_raw();
        Ok(())
    })
}
