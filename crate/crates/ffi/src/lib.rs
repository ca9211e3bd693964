//! C ABI for the mfewave solvers.
//!
//! All functions are panic-safe, return an [`MfwStatus`] code and
//! communicate detail through a thread-local error message retrievable via
//! [`mfw_last_error_message`]. Handles are opaque; every `*_create`/`*_solve`
//! output must be released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use mfewave::config::{ExperimentConfig, RawConfig};
use mfewave::direct::{direct_solve, energy_of, WaveTrajectory};
use mfewave::grid::Grid1D;
use mfewave::harness;
use mfewave::mfe::{coefficient_norms, mfe_solve, reconstruct, MfeConfig, MfeTrajectory};
use mfewave::MfeError;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfwStatus {
    Ok = 0,
    InvalidArgument = 1,
    NumericalFailure = 2,
    ConfigError = 3,
    NullPointer = 4,
    IoError = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg.into());
}

fn status_of(err: &MfeError) -> MfwStatus {
    match err {
        MfeError::InvalidArgument(_) => MfwStatus::InvalidArgument,
        MfeError::NumericalFailure(_) => MfwStatus::NumericalFailure,
        MfeError::Config(_) => MfwStatus::ConfigError,
        MfeError::Io(_) => MfwStatus::IoError,
    }
}

fn fail(err: MfeError) -> MfwStatus {
    let code = status_of(&err);
    set_error(err.to_string());
    code
}

fn guarded(f: impl FnOnce() -> MfwStatus) -> MfwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            MfwStatus::Panic
        }
    }
}

unsafe fn utf8_arg(ptr: *const c_char, what: &str) -> Result<String, MfwStatus> {
    if ptr.is_null() {
        set_error(format!("{what} is null"));
        return Err(MfwStatus::NullPointer);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(s.to_string()),
        Err(_) => {
            set_error(format!("{what} is not valid UTF-8"));
            Err(MfwStatus::InvalidArgument)
        }
    }
}

/// A configured problem: grid, modulation, source and truncation index.
pub struct MfwProblem {
    cfg: ExperimentConfig,
    grid: Grid1D,
}

enum TrajectoryKind {
    Direct(WaveTrajectory),
    Expansion(MfeTrajectory),
}

/// A computed trajectory (direct or coupled-harmonics).
pub struct MfwTrajectory {
    kind: TrajectoryKind,
    m: usize,
}

/// Copies the most recent error message of this thread into `buf`
/// (NUL-terminated, truncated to `len`). Returns the full message length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mfw_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Builds a problem from configuration text in the `key = value` format
/// also accepted by the CLI (empty text selects all defaults).
///
/// # Safety
/// `config_text` must be a NUL-terminated string or null; `out` must point
/// to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mfw_problem_create(
    config_text: *const c_char,
    out: *mut *mut MfwProblem,
) -> MfwStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is null");
            return MfwStatus::NullPointer;
        }
        let text = if config_text.is_null() {
            String::new()
        } else {
            match utf8_arg(config_text, "config_text") {
                Ok(t) => t,
                Err(code) => return code,
            }
        };
        let raw = match RawConfig::parse(&text) {
            Ok(raw) => raw,
            Err(e) => return fail(e),
        };
        let cfg = match ExperimentConfig::from_raw(&raw) {
            Ok(cfg) => cfg,
            Err(e) => return fail(e),
        };
        let grid = match cfg.grid() {
            Ok(grid) => grid,
            Err(e) => return fail(e),
        };
        *out = Box::into_raw(Box::new(MfwProblem { cfg, grid }));
        MfwStatus::Ok
    })
}

/// Releases a problem handle; null is ignored.
///
/// # Safety
/// `problem` must come from [`mfw_problem_create`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mfw_problem_free(problem: *mut MfwProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of interior grid nodes (the length of every field vector).
///
/// # Safety
/// `problem` must be a live handle from [`mfw_problem_create`].
#[no_mangle]
pub unsafe extern "C" fn mfw_problem_grid_size(problem: *const MfwProblem) -> usize {
    if problem.is_null() {
        return 0;
    }
    (*problem).grid.m
}

unsafe fn solve_common(
    problem: *const MfwProblem,
    tau: f64,
    steps: usize,
    out: *mut *mut MfwTrajectory,
    expansion: bool,
) -> MfwStatus {
    if problem.is_null() || out.is_null() {
        set_error("null handle");
        return MfwStatus::NullPointer;
    }
    let p = &*problem;
    let kind = if expansion {
        let mfe_cfg = match MfeConfig::new(p.cfg.truncation) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match mfe_solve(
            &p.grid,
            &p.cfg.modulation,
            &p.cfg.source,
            &mfe_cfg,
            tau,
            steps,
        ) {
            Ok(traj) => TrajectoryKind::Expansion(traj),
            Err(e) => return fail(e),
        }
    } else {
        match direct_solve(&p.grid, &p.cfg.modulation, &p.cfg.source, tau, steps) {
            Ok(traj) => TrajectoryKind::Direct(traj),
            Err(e) => return fail(e),
        }
    };
    *out = Box::into_raw(Box::new(MfwTrajectory { kind, m: p.grid.m }));
    MfwStatus::Ok
}

/// Trapezoidal solve of the modulated equation itself.
///
/// # Safety
/// `problem` must be a live handle; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn mfw_solve_direct(
    problem: *const MfwProblem,
    tau: f64,
    steps: usize,
    out: *mut *mut MfwTrajectory,
) -> MfwStatus {
    guarded(|| solve_common(problem, tau, steps, out, false))
}

/// Trapezoidal solve of the coupled-harmonics system (truncation index
/// `mfe.k` from the configuration).
///
/// # Safety
/// `problem` must be a live handle; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn mfw_solve_mfe(
    problem: *const MfwProblem,
    tau: f64,
    steps: usize,
    out: *mut *mut MfwTrajectory,
) -> MfwStatus {
    guarded(|| solve_common(problem, tau, steps, out, true))
}

/// Releases a trajectory handle; null is ignored.
///
/// # Safety
/// `traj` must come from a solve call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mfw_trajectory_free(traj: *mut MfwTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of stored states (step count + 1); 0 for a null handle.
///
/// # Safety
/// `traj` must be a live trajectory handle or null.
#[no_mangle]
pub unsafe extern "C" fn mfw_trajectory_states(traj: *const MfwTrajectory) -> usize {
    if traj.is_null() {
        return 0;
    }
    match &(*traj).kind {
        TrajectoryKind::Direct(t) => t.states.len(),
        TrajectoryKind::Expansion(t) => t.states.len(),
    }
}

/// Length of the field vectors (interior node count).
///
/// # Safety
/// `traj` must be a live trajectory handle or null.
#[no_mangle]
pub unsafe extern "C" fn mfw_trajectory_field_len(traj: *const MfwTrajectory) -> usize {
    if traj.is_null() {
        return 0;
    }
    (*traj).m
}

/// Copies the physical field u at one step into `out` (for the expansion
/// this is the reconstructed real field).
///
/// # Safety
/// `traj` and `problem` must be live handles; `out` must point to at least
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mfw_trajectory_field(
    traj: *const MfwTrajectory,
    problem: *const MfwProblem,
    step: usize,
    out: *mut f64,
    len: usize,
) -> MfwStatus {
    guarded(|| {
        if traj.is_null() || problem.is_null() || out.is_null() {
            set_error("null handle");
            return MfwStatus::NullPointer;
        }
        let t = &*traj;
        let p = &*problem;
        if len < t.m {
            set_error(format!("buffer holds {len} values, need {}", t.m));
            return MfwStatus::InvalidArgument;
        }
        let field: Vec<f64> = match &t.kind {
            TrajectoryKind::Direct(wt) => match wt.states.get(step) {
                Some(s) => s.u.clone(),
                None => {
                    set_error(format!("step {step} out of range"));
                    return MfwStatus::InvalidArgument;
                }
            },
            TrajectoryKind::Expansion(mt) => match mt.states.get(step) {
                Some(s) => reconstruct(s, &p.cfg.modulation, &p.grid).field,
                None => {
                    set_error(format!("step {step} out of range"));
                    return MfwStatus::InvalidArgument;
                }
            },
        };
        std::ptr::copy_nonoverlapping(field.as_ptr(), out, t.m);
        MfwStatus::Ok
    })
}

/// Discrete energy of a direct trajectory at one step.
///
/// # Safety
/// `traj` and `problem` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mfw_trajectory_energy(
    traj: *const MfwTrajectory,
    problem: *const MfwProblem,
    step: usize,
    out: *mut f64,
) -> MfwStatus {
    guarded(|| {
        if traj.is_null() || problem.is_null() || out.is_null() {
            set_error("null handle");
            return MfwStatus::NullPointer;
        }
        let p = &*problem;
        match &(*traj).kind {
            TrajectoryKind::Direct(wt) => match wt.states.get(step) {
                Some(s) => {
                    *out = energy_of(s, &p.cfg.modulation, &p.grid);
                    MfwStatus::Ok
                }
                None => {
                    set_error(format!("step {step} out of range"));
                    MfwStatus::InvalidArgument
                }
            },
            TrajectoryKind::Expansion(_) => {
                set_error("energy is defined for direct trajectories");
                MfwStatus::InvalidArgument
            }
        }
    })
}

/// Number of nonnegative harmonics carried by an expansion trajectory
/// (span + 1); 0 for direct trajectories or null.
///
/// # Safety
/// `traj` must be a live trajectory handle or null.
#[no_mangle]
pub unsafe extern "C" fn mfw_trajectory_harmonic_count(traj: *const MfwTrajectory) -> usize {
    if traj.is_null() {
        return 0;
    }
    match &(*traj).kind {
        TrajectoryKind::Direct(_) => 0,
        TrajectoryKind::Expansion(t) => t.span + 1,
    }
}

/// Space-time norms of the nonnegative harmonics of an expansion
/// trajectory, written into `out[0..count]`.
///
/// # Safety
/// `traj` and `problem` must be live handles; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mfw_trajectory_harmonic_norms(
    traj: *const MfwTrajectory,
    problem: *const MfwProblem,
    out: *mut f64,
    len: usize,
) -> MfwStatus {
    guarded(|| {
        if traj.is_null() || problem.is_null() || out.is_null() {
            set_error("null handle");
            return MfwStatus::NullPointer;
        }
        let p = &*problem;
        match &(*traj).kind {
            TrajectoryKind::Direct(_) => {
                set_error("harmonic norms are defined for expansion trajectories");
                MfwStatus::InvalidArgument
            }
            TrajectoryKind::Expansion(mt) => {
                let norms = coefficient_norms(mt, &p.grid);
                if len < norms.len() {
                    set_error(format!("buffer holds {len} values, need {}", norms.len()));
                    return MfwStatus::InvalidArgument;
                }
                std::ptr::copy_nonoverlapping(norms.as_ptr(), out, norms.len());
                MfwStatus::Ok
            }
        }
    })
}

/// Runs one experiment command ("convergence", "decay", "energy",
/// "visualize" or "laplace-diag") with the given configuration text,
/// writing CSV (and optional SVG) files under `out_dir`.
///
/// # Safety
/// `command` and `out_dir` must be NUL-terminated strings; `config_text`
/// may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn mfw_run_command(
    command: *const c_char,
    config_text: *const c_char,
    out_dir: *const c_char,
) -> MfwStatus {
    guarded(|| {
        let command = match utf8_arg(command, "command") {
            Ok(c) => c,
            Err(code) => return code,
        };
        let out_dir = match utf8_arg(out_dir, "out_dir") {
            Ok(d) => d,
            Err(code) => return code,
        };
        let text = if config_text.is_null() {
            String::new()
        } else {
            match utf8_arg(config_text, "config_text") {
                Ok(t) => t,
                Err(code) => return code,
            }
        };
        let raw = match RawConfig::parse(&text) {
            Ok(raw) => raw,
            Err(e) => return fail(e),
        };
        let mut cfg = match ExperimentConfig::from_raw(&raw) {
            Ok(cfg) => cfg,
            Err(e) => return fail(e),
        };
        cfg.out_dir = PathBuf::from(out_dir);
        let result = match command.as_str() {
            "convergence" => harness::run_convergence(&cfg),
            "decay" => harness::run_decay(&cfg),
            "energy" => harness::run_energy(&cfg),
            "visualize" => harness::run_visualize(&cfg),
            "laplace-diag" => harness::run_laplace_diag(&cfg),
            other => {
                set_error(format!("unknown command `{other}`"));
                return MfwStatus::InvalidArgument;
            }
        };
        match result {
            Ok(_) => MfwStatus::Ok,
            Err(e) => fail(e),
        }
    })
}
