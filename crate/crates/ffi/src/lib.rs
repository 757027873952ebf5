//! C interface to the beamforming designer.
//!
//! Scenarios come in as JSON (the same schema the CLI reads), solves hand
//! back an opaque solution handle, and scalar accessors pull the numbers
//! out. Every entry point is panic-safe; failures return an error code and
//! leave a message retrievable with `dfrc_last_error_message`. Handles must
//! be released with their matching `_free` function exactly once.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dfrc_beam::experiments::{run_scenario, ScenarioConfig, ScenarioFile, ScenarioOutcome};
use dfrc_beam::sdp::solver::SolveStatus;
use dfrc_beam::Error;

/// Success.
pub const DFRC_OK: c_int = 0;
/// Null pointer, bad index, or an internal panic.
pub const DFRC_ERR_INTERNAL: c_int = 1;
/// The scenario is certified infeasible.
pub const DFRC_ERR_INFEASIBLE: c_int = 2;
/// The solver stalled or hit a numerical failure.
pub const DFRC_ERR_SOLVER: c_int = 3;
/// Malformed JSON or invalid scenario parameters.
pub const DFRC_ERR_CONFIG: c_int = 4;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(clean).unwrap_or_default();
    });
}

fn error_code(err: &Error) -> c_int {
    match err {
        Error::Numerical(_) => DFRC_ERR_SOLVER,
        _ => DFRC_ERR_CONFIG,
    }
}

fn status_code(status: SolveStatus) -> c_int {
    match status {
        SolveStatus::Optimal => DFRC_OK,
        SolveStatus::Infeasible => DFRC_ERR_INFEASIBLE,
        _ => DFRC_ERR_SOLVER,
    }
}

/// Runs `body` with panics converted to `DFRC_ERR_INTERNAL`.
fn guarded<F: FnOnce() -> c_int>(body: F) -> c_int {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic");
            DFRC_ERR_INTERNAL
        }
    }
}

/// An immutable scenario: array geometry, users, noise, seed.
pub struct DfrcScenario {
    config: ScenarioConfig,
}

/// A solved scenario: beamformers plus the metric report.
pub struct DfrcSolution {
    outcome: ScenarioOutcome,
}

/// Version string of the underlying library; static storage.
#[no_mangle]
pub extern "C" fn dfrc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread. Valid until the next
/// failing call; never null.
#[no_mangle]
pub extern "C" fn dfrc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses a JSON scenario (CLI schema). Returns null on failure.
#[no_mangle]
pub unsafe extern "C" fn dfrc_scenario_from_json(json: *const c_char) -> *mut DfrcScenario {
    let mut out: *mut DfrcScenario = ptr::null_mut();
    guarded(|| {
        if json.is_null() {
            set_error("json pointer is null");
            return DFRC_ERR_INTERNAL;
        }
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("json is not valid UTF-8");
                return DFRC_ERR_CONFIG;
            }
        };
        let config = ScenarioFile::from_json(text).and_then(ScenarioFile::into_config);
        match config {
            Ok(config) => {
                out = Box::into_raw(Box::new(DfrcScenario { config }));
                DFRC_OK
            }
            Err(e) => {
                set_error(&e.to_string());
                error_code(&e)
            }
        }
    });
    out
}

/// Releases a scenario handle. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn dfrc_scenario_free(scenario: *mut DfrcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Antennas in the scenario's array; 0 on null.
#[no_mangle]
pub unsafe extern "C" fn dfrc_scenario_n_antennas(scenario: *const DfrcScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.config.array.n_antennas)
}

/// Users in the scenario; 0 on null.
#[no_mangle]
pub unsafe extern "C" fn dfrc_scenario_n_users(scenario: *const DfrcScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.config.users.len())
}

/// Solves the scenario. On `DFRC_OK` and `DFRC_ERR_INFEASIBLE` a solution
/// handle is written to `out` (inspect its status and metrics); the caller
/// owns it. Other codes leave `out` null.
#[no_mangle]
pub unsafe extern "C" fn dfrc_solve(
    scenario: *const DfrcScenario,
    out: *mut *mut DfrcSolution,
) -> c_int {
    guarded(|| {
        if out.is_null() {
            set_error("output pointer is null");
            return DFRC_ERR_INTERNAL;
        }
        *out = ptr::null_mut();
        let Some(scenario) = scenario.as_ref() else {
            set_error("scenario pointer is null");
            return DFRC_ERR_INTERNAL;
        };
        match run_scenario(&scenario.config) {
            Ok(outcome) => {
                let code = status_code(outcome.status);
                if code == DFRC_ERR_SOLVER {
                    set_error(&format!("solver stopped with status {:?}", outcome.status));
                    return code;
                }
                if code == DFRC_ERR_INFEASIBLE {
                    set_error("scenario certified infeasible");
                }
                *out = Box::into_raw(Box::new(DfrcSolution { outcome }));
                code
            }
            Err(e) => {
                set_error(&e.to_string());
                error_code(&e)
            }
        }
    })
}

/// Releases a solution handle. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn dfrc_solution_free(solution: *mut DfrcSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Solve status as an error code: OK, INFEASIBLE, or SOLVER.
#[no_mangle]
pub unsafe extern "C" fn dfrc_solution_status(solution: *const DfrcSolution) -> c_int {
    match solution.as_ref() {
        Some(s) => status_code(s.outcome.status),
        None => DFRC_ERR_INTERNAL,
    }
}

/// True when the solve converged and the matrix solution passed the
/// original-constraint check.
#[no_mangle]
pub unsafe extern "C" fn dfrc_solution_feasible(solution: *const DfrcSolution) -> bool {
    solution.as_ref().is_some_and(|s| s.outcome.report.feasible)
}

/// Array power toward the look direction; NaN when unsolved or null.
#[no_mangle]
pub unsafe extern "C" fn dfrc_solution_objective(solution: *const DfrcSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.outcome.design.objective)
}

/// Sum rate over users at the nominal channels (bps/Hz); NaN when unsolved.
#[no_mangle]
pub unsafe extern "C" fn dfrc_solution_sum_rate(solution: *const DfrcSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.outcome.report.sum_rate)
}

/// Detection probability of the radar probe; NaN when unsolved.
#[no_mangle]
pub unsafe extern "C" fn dfrc_solution_p_detect(solution: *const DfrcSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.outcome.report.p_detect)
}

/// Inverted sidelobe-to-mainlobe ratio in dB; NaN when unsolved.
#[no_mangle]
pub unsafe extern "C" fn dfrc_solution_ismr_inv_db(solution: *const DfrcSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.outcome.report.ismr_inv_db)
}

/// Users in the solution; 0 on null.
#[no_mangle]
pub unsafe extern "C" fn dfrc_solution_n_users(solution: *const DfrcSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.outcome.report.per_user_rate.len())
}

/// Antennas per beamformer; 0 on null or unsolved.
#[no_mangle]
pub unsafe extern "C" fn dfrc_solution_n_antennas(solution: *const DfrcSolution) -> usize {
    solution
        .as_ref()
        .map_or(0, |s| s.outcome.beams.first().map_or(0, |b| b.w.len()))
}

/// Rate of one user at its nominal channel; NaN on a bad index.
#[no_mangle]
pub unsafe extern "C" fn dfrc_solution_user_rate(
    solution: *const DfrcSolution,
    user: usize,
) -> f64 {
    solution
        .as_ref()
        .and_then(|s| s.outcome.report.per_user_rate.get(user).copied())
        .unwrap_or(f64::NAN)
}

/// Monte-Carlo outage estimate of one user; NaN on a bad index.
#[no_mangle]
pub unsafe extern "C" fn dfrc_solution_empirical_outage(
    solution: *const DfrcSolution,
    user: usize,
) -> f64 {
    solution
        .as_ref()
        .and_then(|s| s.outcome.report.empirical_outage.get(user).copied())
        .unwrap_or(f64::NAN)
}

/// Copies user `user`'s extracted beamformer into `re`/`im`, each with room
/// for `capacity` entries. Needs `capacity >= dfrc_solution_n_antennas`.
#[no_mangle]
pub unsafe extern "C" fn dfrc_solution_beam(
    solution: *const DfrcSolution,
    user: usize,
    re: *mut f64,
    im: *mut f64,
    capacity: usize,
) -> c_int {
    guarded(|| {
        let Some(s) = solution.as_ref() else {
            set_error("solution pointer is null");
            return DFRC_ERR_INTERNAL;
        };
        if re.is_null() || im.is_null() {
            set_error("output buffer is null");
            return DFRC_ERR_INTERNAL;
        }
        let Some(beam) = s.outcome.beams.get(user) else {
            set_error(&format!("user index {user} out of range"));
            return DFRC_ERR_CONFIG;
        };
        if capacity < beam.w.len() {
            set_error(&format!(
                "buffer holds {capacity} entries, beam needs {}",
                beam.w.len()
            ));
            return DFRC_ERR_CONFIG;
        }
        for (i, v) in beam.w.iter().enumerate() {
            *re.add(i) = v.re;
            *im.add(i) = v.im;
        }
        DFRC_OK
    })
}
