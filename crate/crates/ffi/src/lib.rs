//! C ABI over the nls-surgery library.
//!
//! Objects are opaque handles created by `*_new`/solver functions and
//! released with the matching `*_free`. Every fallible call returns an
//! [`NlsStatus`]; on failure `nls_last_error_message` describes the error for
//! the calling thread. Panics are caught at the boundary and reported as
//! `NLS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use nls_surgery::config::{ExperimentId, RunConfig};
use nls_surgery::evolve::{evolve_to, observables, EvolveConfig, SimState};
use nls_surgery::exact_solutions::SolutionFamily;
use nls_surgery::experiments::{emit_outputs, run_experiment};
use nls_surgery::ground_state::{solve_ground_state, GroundState};
use nls_surgery::surgery::{run_semi_strichartz, ContinuationRun, SurgeryConfig, Trigger};
use nls_surgery::{Error, RadialField, RadialGrid};
use num_complex::Complex64;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGrid = 3,
    LengthMismatch = 4,
    GridMismatch = 5,
    NonFinite = 6,
    Aliasing = 7,
    NonConvergence = 8,
    UnresolvedCore = 9,
    BlowupSuspected = 10,
    InsufficientPoints = 11,
    NoTrigger = 12,
    NoPlateau = 13,
    MaxEvents = 14,
    Config = 15,
    Io = 16,
    Parse = 17,
    Panic = 18,
}

impl From<&Error> for NlsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidGrid(_) => NlsStatus::InvalidGrid,
            Error::InvalidArgument(_) => NlsStatus::InvalidArgument,
            Error::NonFinite { .. } => NlsStatus::NonFinite,
            Error::LengthMismatch { .. } => NlsStatus::LengthMismatch,
            Error::GridMismatch => NlsStatus::GridMismatch,
            Error::Aliasing { .. } => NlsStatus::Aliasing,
            Error::NonConvergence { .. } => NlsStatus::NonConvergence,
            Error::UnresolvedCore { .. } => NlsStatus::UnresolvedCore,
            Error::BlowupSuspected { .. } => NlsStatus::BlowupSuspected,
            Error::InsufficientPoints { .. } => NlsStatus::InsufficientPoints,
            Error::NoTrigger => NlsStatus::NoTrigger,
            Error::NoPlateau => NlsStatus::NoPlateau,
            Error::MaxEvents(_) => NlsStatus::MaxEvents,
            Error::Config(_) => NlsStatus::Config,
            Error::Io(_) => NlsStatus::Io,
            Error::Parse(_) | Error::Json(_) => NlsStatus::Parse,
        }
    }
}

/// Radial grid handle.
pub struct NlsGrid(Arc<RadialGrid>);

/// Complex radial field handle, tied to the grid it was created on.
pub struct NlsField(RadialField);

/// Ground state handle.
pub struct NlsGroundState(GroundState);

/// Finished surgery run handle.
pub struct NlsRun(ContinuationRun);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlsObservables {
    pub mass: f64,
    pub energy: f64,
    pub grad_norm: f64,
    pub variance: f64,
    pub core_radius: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlsEvolveConfig {
    pub dt_min: f64,
    pub dt_max: f64,
    pub dt_safety: f64,
    pub grad_cap: f64,
    /// Zero for the free Schrödinger flow.
    pub nonlinear: c_int,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlsSurgeryConfig {
    pub window: f64,
    pub s_max: f64,
    pub g_max: f64,
    pub plateau_tol: f64,
    pub min_core_cells: f64,
    pub max_events: usize,
    pub trace_every: usize,
    pub evolve: NlsEvolveConfig,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlsTrigger {
    WindowNorm = 0,
    CoreWidth = 1,
    GradCap = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlsSurgeryEvent {
    pub t_event: f64,
    pub mass_before: f64,
    pub mass_after: f64,
    pub jump: f64,
    pub excision_radius: f64,
    pub trigger: NlsTrigger,
}

impl From<EvolveConfig> for NlsEvolveConfig {
    fn from(c: EvolveConfig) -> Self {
        NlsEvolveConfig {
            dt_min: c.dt_min,
            dt_max: c.dt_max,
            dt_safety: c.dt_safety,
            grad_cap: c.grad_cap,
            nonlinear: c.nonlinear as c_int,
        }
    }
}

impl From<NlsEvolveConfig> for EvolveConfig {
    fn from(c: NlsEvolveConfig) -> Self {
        EvolveConfig {
            dt_min: c.dt_min,
            dt_max: c.dt_max,
            dt_safety: c.dt_safety,
            grad_cap: c.grad_cap,
            nonlinear: c.nonlinear != 0,
        }
    }
}

impl From<SurgeryConfig> for NlsSurgeryConfig {
    fn from(c: SurgeryConfig) -> Self {
        NlsSurgeryConfig {
            window: c.window,
            s_max: c.s_max,
            g_max: c.g_max,
            plateau_tol: c.plateau_tol,
            min_core_cells: c.min_core_cells,
            max_events: c.max_events,
            trace_every: c.trace_every,
            evolve: c.evolve.into(),
        }
    }
}

impl From<NlsSurgeryConfig> for SurgeryConfig {
    fn from(c: NlsSurgeryConfig) -> Self {
        SurgeryConfig {
            window: c.window,
            s_max: c.s_max,
            g_max: c.g_max,
            plateau_tol: c.plateau_tol,
            min_core_cells: c.min_core_cells,
            max_events: c.max_events,
            trace_every: c.trace_every,
            checkpoint_every: 0,
            evolve: c.evolve.into(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

/// Run `f`, mapping errors and panics to a status and recording the message.
fn guard(f: impl FnOnce() -> Result<(), (NlsStatus, String)>) -> NlsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NlsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside nls-surgery".into());
            NlsStatus::Panic
        }
    }
}

fn lib(e: Error) -> (NlsStatus, String) {
    ((&e).into(), e.to_string())
}

fn null(what: &str) -> (NlsStatus, String) {
    (NlsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (NlsStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), (NlsStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (NlsStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], (NlsStatus, String)> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nls_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn nls_status_name(status: NlsStatus) -> *const c_char {
    let s: &'static CStr = match status {
        NlsStatus::Ok => c"ok",
        NlsStatus::NullPointer => c"null pointer",
        NlsStatus::InvalidArgument => c"invalid argument",
        NlsStatus::InvalidGrid => c"invalid grid",
        NlsStatus::LengthMismatch => c"length mismatch",
        NlsStatus::GridMismatch => c"grid mismatch",
        NlsStatus::NonFinite => c"non-finite value",
        NlsStatus::Aliasing => c"aliasing",
        NlsStatus::NonConvergence => c"non-convergence",
        NlsStatus::UnresolvedCore => c"unresolved core",
        NlsStatus::BlowupSuspected => c"blowup suspected",
        NlsStatus::InsufficientPoints => c"insufficient points",
        NlsStatus::NoTrigger => c"no trigger",
        NlsStatus::NoPlateau => c"no plateau",
        NlsStatus::MaxEvents => c"too many events",
        NlsStatus::Config => c"config",
        NlsStatus::Io => c"i/o",
        NlsStatus::Parse => c"parse",
        NlsStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Grid for dimension `d >= 4` with `n` nodes on `[0, r_max]`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn nls_grid_new(d: usize, n: usize, r_max: f64, out: *mut *mut NlsGrid) -> NlsStatus {
    guard(|| write_out(out, NlsGrid(RadialGrid::new(d, n, r_max).map_err(lib)?)))
}

/// # Safety
/// `grid` must be NULL or a handle from `nls_grid_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nls_grid_free(grid: *mut NlsGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of nodes, 0 for NULL.
///
/// # Safety
/// `grid` must be NULL or a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn nls_grid_len(grid: *const NlsGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// Copy the `len` radial nodes into `out`.
///
/// # Safety
/// `grid` must be a live grid handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nls_grid_nodes(grid: *const NlsGrid, out: *mut f64, len: usize) -> NlsStatus {
    guard(|| {
        let g = borrow(grid, "grid")?;
        let dst = slice_mut(out, len, "out")?;
        if len != g.0.len() {
            return Err(lib(Error::LengthMismatch { expected: g.0.len(), got: len }));
        }
        dst.copy_from_slice(g.0.nodes());
        Ok(())
    })
}

/// Field with samples `re[j] + i im[j]` at the grid nodes; `im` may be NULL
/// for a real field.
///
/// # Safety
/// `grid` must be a live grid handle, `re` (and `im` unless NULL) must hold
/// `len` doubles, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nls_field_new(
    grid: *const NlsGrid,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut NlsField,
) -> NlsStatus {
    guard(|| {
        let g = borrow(grid, "grid")?;
        let re = slice(re, len, "re")?;
        let values: Vec<Complex64> = if im.is_null() {
            re.iter().map(|&x| Complex64::new(x, 0.0)).collect()
        } else {
            let im = slice(im, len, "im")?;
            re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect()
        };
        write_out(out, NlsField(RadialField::new(g.0.clone(), values).map_err(lib)?))
    })
}

/// # Safety
/// `field` must be NULL or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn nls_field_free(field: *mut NlsField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Copy the samples into `re` and `im` (either may be NULL to skip it).
///
/// # Safety
/// `field` must be a live field handle; non-NULL buffers must hold `len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn nls_field_values(field: *const NlsField, re: *mut f64, im: *mut f64, len: usize) -> NlsStatus {
    guard(|| {
        let f = borrow(field, "field")?;
        let values = f.0.values();
        if len != values.len() {
            return Err(lib(Error::LengthMismatch { expected: values.len(), got: len }));
        }
        if !re.is_null() {
            for (d, v) in slice_mut(re, len, "re")?.iter_mut().zip(values) {
                *d = v.re;
            }
        }
        if !im.is_null() {
            for (d, v) in slice_mut(im, len, "im")?.iter_mut().zip(values) {
                *d = v.im;
            }
        }
        Ok(())
    })
}

/// Mass, energy, gradient norm, variance and 50% mass radius.
///
/// # Safety
/// `field` must be a live field handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nls_field_observables(field: *const NlsField, out: *mut NlsObservables) -> NlsStatus {
    guard(|| {
        let f = borrow(field, "field")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let o = observables(&f.0);
        *out = NlsObservables {
            mass: o.mass,
            energy: o.energy,
            grad_norm: o.grad_norm,
            variance: o.variance,
            core_radius: o.core_radius,
        };
        Ok(())
    })
}

/// Solve for the ground state on `grid` to residual `tol`.
///
/// # Safety
/// `grid` must be a live grid handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nls_ground_state_solve(grid: *const NlsGrid, tol: f64, out: *mut *mut NlsGroundState) -> NlsStatus {
    guard(|| {
        let g = borrow(grid, "grid")?;
        write_out(out, NlsGroundState(solve_ground_state(&g.0, tol).map_err(lib)?))
    })
}

/// # Safety
/// `gs` must be NULL or a live ground state handle.
#[no_mangle]
pub unsafe extern "C" fn nls_ground_state_free(gs: *mut NlsGroundState) {
    if !gs.is_null() {
        drop(Box::from_raw(gs));
    }
}

/// Mass, residual and peak value `Q(0)`; any output may be NULL.
///
/// # Safety
/// `gs` must be a live ground state handle; non-NULL outputs writable.
#[no_mangle]
pub unsafe extern "C" fn nls_ground_state_info(
    gs: *const NlsGroundState,
    mass: *mut f64,
    residual: *mut f64,
    peak: *mut f64,
) -> NlsStatus {
    guard(|| {
        let g = &borrow(gs, "ground state")?.0;
        for (p, v) in [(mass, g.mass), (residual, g.residual), (peak, g.peak)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// The profile `Q` as a new field on the ground state's grid.
///
/// # Safety
/// `gs` must be a live ground state handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nls_ground_state_profile(gs: *const NlsGroundState, out: *mut *mut NlsField) -> NlsStatus {
    guard(|| write_out(out, NlsField(borrow(gs, "ground state")?.0.profile.clone())))
}

/// Pseudoconformal solution at time `t != 0` sampled on `grid`.
///
/// # Safety
/// `gs` and `grid` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nls_pseudoconformal(
    gs: *const NlsGroundState,
    t: f64,
    grid: *const NlsGrid,
    out: *mut *mut NlsField,
) -> NlsStatus {
    guard(|| {
        let (gs, g) = (borrow(gs, "ground state")?, borrow(grid, "grid")?);
        write_out(out, NlsField(SolutionFamily::pseudoconformal(&gs.0).sample(t, &g.0).map_err(lib)?))
    })
}

/// Soliton of radius `radius` at time `t` sampled on `grid`.
///
/// # Safety
/// `gs` and `grid` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nls_rescaled_soliton(
    gs: *const NlsGroundState,
    radius: f64,
    t: f64,
    grid: *const NlsGrid,
    out: *mut *mut NlsField,
) -> NlsStatus {
    guard(|| {
        let (gs, g) = (borrow(gs, "ground state")?, borrow(grid, "grid")?);
        let family = SolutionFamily::rescaled_soliton(&gs.0, radius).map_err(lib)?;
        write_out(out, NlsField(family.sample(t, &g.0).map_err(lib)?))
    })
}

/// Default time stepping parameters.
#[no_mangle]
pub extern "C" fn nls_evolve_config_default() -> NlsEvolveConfig {
    EvolveConfig::default().into()
}

/// Default surgery parameters.
#[no_mangle]
pub extern "C" fn nls_surgery_config_default() -> NlsSurgeryConfig {
    SurgeryConfig::default().into()
}

/// Evolve `u0` from `t0` to `t_end` with adaptive steps; `config` may be
/// NULL for the defaults.
///
/// # Safety
/// `u0` must be a live field handle, `config` NULL or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nls_evolve(
    u0: *const NlsField,
    t0: f64,
    t_end: f64,
    config: *const NlsEvolveConfig,
    out: *mut *mut NlsField,
) -> NlsStatus {
    guard(|| {
        let u0 = borrow(u0, "u0")?;
        let cfg: EvolveConfig = config.as_ref().map_or_else(EvolveConfig::default, |c| (*c).into());
        let s = evolve_to(SimState::new(u0.0.clone(), t0, 0.0), t_end, &cfg).map_err(lib)?;
        write_out(out, NlsField(s.u))
    })
}

/// Continuation with core excision from `t0` to `t_end`; `config` may be
/// NULL for the defaults.
///
/// # Safety
/// `u0` must be a live field handle, `config` NULL or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nls_run_semi_strichartz(
    u0: *const NlsField,
    t0: f64,
    t_end: f64,
    config: *const NlsSurgeryConfig,
    out: *mut *mut NlsRun,
) -> NlsStatus {
    guard(|| {
        let u0 = borrow(u0, "u0")?;
        let cfg: SurgeryConfig = config.as_ref().map_or_else(SurgeryConfig::default, |c| (*c).into());
        write_out(out, NlsRun(run_semi_strichartz(u0.0.clone(), t0, t_end, &cfg).map_err(lib)?))
    })
}

/// # Safety
/// `run` must be NULL or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn nls_run_free(run: *mut NlsRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of surgery events, 0 for NULL.
///
/// # Safety
/// `run` must be NULL or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn nls_run_event_count(run: *const NlsRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.events.len())
}

/// Event `index` of the run.
///
/// # Safety
/// `run` must be a live run handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nls_run_event(run: *const NlsRun, index: usize, out: *mut NlsSurgeryEvent) -> NlsStatus {
    guard(|| {
        let r = borrow(run, "run")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let e = r.0.events.get(index).ok_or_else(|| {
            lib(Error::InvalidArgument(format!("event index {index} out of {} events", r.0.events.len())))
        })?;
        *out = NlsSurgeryEvent {
            t_event: e.t_event,
            mass_before: e.mass_before,
            mass_after: e.mass_after,
            jump: e.jump,
            excision_radius: e.excision_radius,
            trigger: match e.trigger {
                Trigger::WindowNorm => NlsTrigger::WindowNorm,
                Trigger::CoreWidth => NlsTrigger::CoreWidth,
                Trigger::GradCap => NlsTrigger::GradCap,
            },
        };
        Ok(())
    })
}

/// The field at the end of the run.
///
/// # Safety
/// `run` must be a live run handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nls_run_final_field(run: *const NlsRun, out: *mut *mut NlsField) -> NlsStatus {
    guard(|| write_out(out, NlsField(borrow(run, "run")?.0.final_state().u.clone())))
}

/// Run experiment `id` ("e1".."e5"). `overrides` is NULL or a
/// newline-separated list of `key=value` settings; outputs go to
/// `output_dir/<id>` (the configured directory when NULL). `passed` receives
/// 1 when every check passes, else 0.
///
/// # Safety
/// `id` must be a nul-terminated string; `overrides` and `output_dir` NULL or
/// nul-terminated; `passed` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn nls_run_experiment(
    id: *const c_char,
    overrides: *const c_char,
    output_dir: *const c_char,
    passed: *mut c_int,
) -> NlsStatus {
    guard(|| {
        let text = |p: *const c_char, what: &str| -> Result<String, (NlsStatus, String)> {
            CStr::from_ptr(p).to_str().map(str::to_owned).map_err(|e| (NlsStatus::InvalidArgument, format!("{what}: {e}")))
        };
        if id.is_null() {
            return Err(null("id"));
        }
        let experiment: ExperimentId = text(id, "id")?.parse().map_err(lib)?;
        let sets: Vec<String> = if overrides.is_null() {
            Vec::new()
        } else {
            text(overrides, "overrides")?.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned).collect()
        };
        let mut cfg = RunConfig::assemble(experiment, None, &sets).map_err(lib)?.with_env_output_dir();
        if !output_dir.is_null() {
            cfg.output_dir = PathBuf::from(text(output_dir, "output_dir")?);
        }
        let out = run_experiment(&cfg).map_err(lib)?;
        emit_outputs(&out, &cfg.output_dir.join(experiment.as_str())).map_err(lib)?;
        if let Some(p) = passed.as_mut() {
            *p = out.report.passed as c_int;
        }
        Ok(())
    })
}
