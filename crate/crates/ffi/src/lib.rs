//! C ABI over the `avgrl` core.
//!
//! Models and learners are opaque handles created by `*_new`/`*_builtin`
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`AvgrlStatus`]; on failure the message is available from
//! [`avgrl_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use avgrl::oracle::{bellman_residual, optimal_reward_rate, solve_q, SolverConfig};
use avgrl::{Error, InducedSmdp, LearnerState, QTable, ReferenceFunction, StepSize, StructureTag, TabularMdp};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvgrlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    Numerical = 4,
    NotWeaklyCommunicating = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvgrlStructure {
    Communicating = 0,
    WeaklyCommunicating = 1,
    NotWeaklyCommunicating = 2,
}

/// A validated MDP together with its one-step semi-MDP view.
pub struct AvgrlModel {
    mdp: TabularMdp,
    smdp: InducedSmdp,
}

/// A Differential Q-learning state.
pub struct AvgrlLearner {
    state: LearnerState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> AvgrlStatus {
    if matches!(e, Error::NotWeaklyCommunicating) {
        AvgrlStatus::NotWeaklyCommunicating
    } else if e.is_numerical() {
        AvgrlStatus::Numerical
    } else {
        AvgrlStatus::Validation
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (AvgrlStatus, String)>) -> AvgrlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AvgrlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside avgrl");
            AvgrlStatus::Panic
        }
    }
}

fn core(e: Error) -> (AvgrlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (AvgrlStatus, String) {
    (AvgrlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (AvgrlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (AvgrlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn model_ref<'a>(m: *const AvgrlModel) -> Result<&'a AvgrlModel, (AvgrlStatus, String)> {
    m.as_ref().ok_or_else(|| null("model"))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (AvgrlStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = value;
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn avgrl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

fn boxed_model(mdp: TabularMdp) -> *mut AvgrlModel {
    let smdp = InducedSmdp::from_mdp(&mdp);
    Box::into_raw(Box::new(AvgrlModel { mdp, smdp }))
}

/// Creates one of the built-in models by name.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn avgrl_model_builtin(name: *const c_char, out: *mut *mut AvgrlModel) -> AvgrlStatus {
    guard(|| {
        let name = read_str(name, "name")?;
        let mdp = avgrl::mdp::builtin(name).map_err(core)?;
        write_out(out, boxed_model(mdp), "out")
    })
}

/// Parses and validates a model document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn avgrl_model_from_json(json: *const c_char, out: *mut *mut AvgrlModel) -> AvgrlStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let mdp = TabularMdp::from_json(text).map_err(core)?;
        write_out(out, boxed_model(mdp), "out")
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn avgrl_model_free(model: *mut AvgrlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn avgrl_model_n_states(model: *const AvgrlModel) -> usize {
    model.as_ref().map_or(0, |m| m.mdp.n_states())
}

/// # Safety
/// `model` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn avgrl_model_n_actions(model: *const AvgrlModel) -> usize {
    model.as_ref().map_or(0, |m| m.mdp.n_actions())
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn avgrl_model_classify(model: *const AvgrlModel, out: *mut AvgrlStructure) -> AvgrlStatus {
    guard(|| {
        let m = model_ref(model)?;
        let tag = match m.mdp.classify().tag {
            StructureTag::Communicating => AvgrlStructure::Communicating,
            StructureTag::WeaklyCommunicating => AvgrlStructure::WeaklyCommunicating,
            StructureTag::NotWeaklyCommunicating => AvgrlStructure::NotWeaklyCommunicating,
        };
        write_out(out, tag, "out")
    })
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn avgrl_optimal_reward_rate(model: *const AvgrlModel, out: *mut f64) -> AvgrlStatus {
    guard(|| {
        let m = model_ref(model)?;
        let r = optimal_reward_rate(&m.smdp).map_err(core)?;
        write_out(out, r, "out")
    })
}

unsafe fn table_in(m: &AvgrlModel, q: *const f64, len: usize) -> Result<QTable, (AvgrlStatus, String)> {
    if q.is_null() {
        return Err(null("q"));
    }
    let values = std::slice::from_raw_parts(q, len).to_vec();
    QTable::from_values(m.mdp.n_states(), m.mdp.n_actions(), values).map_err(core)
}

/// Solves the optimality equation pinned by `f(q) = sum_i weights[i] q[i]`
/// (the plain sum when `weights` is null). Writes the witness row-major into
/// `q_out`, which must hold `n_states * n_actions` values.
///
/// # Safety
/// Pointers must be valid for the stated lengths; `weights` may be null.
#[no_mangle]
pub unsafe extern "C" fn avgrl_solve_q(
    model: *const AvgrlModel,
    weights: *const f64,
    tol: f64,
    q_out: *mut f64,
    q_len: usize,
    r_star_out: *mut f64,
) -> AvgrlStatus {
    guard(|| {
        let m = model_ref(model)?;
        let n = m.smdp.n_pairs();
        if q_out.is_null() {
            return Err(null("q_out"));
        }
        if q_len < n {
            return Err((AvgrlStatus::BufferTooSmall, format!("q_out needs {n} entries")));
        }
        let f = if weights.is_null() {
            ReferenceFunction::sum(n)
        } else {
            ReferenceFunction::weighted(std::slice::from_raw_parts(weights, n).to_vec()).map_err(core)?
        };
        let cfg = SolverConfig {
            tol,
            ..SolverConfig::default()
        };
        let report = solve_q(&m.smdp, &f, &cfg).map_err(core)?;
        std::slice::from_raw_parts_mut(q_out, n).copy_from_slice(report.witness_q.values());
        if !r_star_out.is_null() {
            *r_star_out = report.r_star;
        }
        Ok(())
    })
}

/// Sup-norm Bellman residual of `q` (row-major, `q_len` entries) at rate `r_bar`.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn avgrl_bellman_residual(
    model: *const AvgrlModel,
    q: *const f64,
    q_len: usize,
    r_bar: f64,
    out: *mut f64,
) -> AvgrlStatus {
    guard(|| {
        let m = model_ref(model)?;
        let table = table_in(m, q, q_len)?;
        let res = bellman_residual(&m.smdp, &table, r_bar).map_err(core)?;
        write_out(out, res.sup_norm, "out")
    })
}

/// Differential Q-learning state with a constant step size `alpha`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn avgrl_learner_new(
    n_states: usize,
    n_actions: usize,
    q0: f64,
    r_bar0: f64,
    eta: f64,
    alpha: f64,
    out: *mut *mut AvgrlLearner,
) -> AvgrlStatus {
    guard(|| {
        if n_states == 0 || n_actions == 0 {
            return Err((AvgrlStatus::InvalidArgument, "empty table".into()));
        }
        let schedule = StepSize::constant(alpha);
        schedule.validate().map_err(core)?;
        if eta.is_nan() || eta <= 0.0 || !q0.is_finite() || !r_bar0.is_finite() {
            return Err((AvgrlStatus::InvalidArgument, "eta must be positive and initial values finite".into()));
        }
        let state = LearnerState::new(n_states, n_actions, q0, r_bar0, eta, schedule);
        write_out(out, Box::into_raw(Box::new(AvgrlLearner { state })), "out")
    })
}

/// One Differential Q-learning update on `(s, a, r, s_next)`.
///
/// # Safety
/// `learner` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn avgrl_learner_dql_step(
    learner: *mut AvgrlLearner,
    s: usize,
    a: usize,
    r: f64,
    s_next: usize,
) -> AvgrlStatus {
    guard(|| {
        let l = learner.as_mut().ok_or_else(|| null("learner"))?;
        let q = &l.state.q;
        if s >= q.n_states() || s_next >= q.n_states() || a >= q.n_choices() {
            return Err((AvgrlStatus::InvalidArgument, "index out of range".into()));
        }
        l.state.dql_step(s, a, r, s_next).map(|_| ()).map_err(core)
    })
}

/// # Safety
/// `learner` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn avgrl_learner_r_bar(learner: *const AvgrlLearner, out: *mut f64) -> AvgrlStatus {
    guard(|| {
        let l = learner.as_ref().ok_or_else(|| null("learner"))?;
        write_out(out, l.state.r_bar, "out")
    })
}

/// Copies the table row-major into `buf`.
///
/// # Safety
/// `learner` must be a live handle and `buf` valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn avgrl_learner_q(learner: *const AvgrlLearner, buf: *mut f64, len: usize) -> AvgrlStatus {
    guard(|| {
        let l = learner.as_ref().ok_or_else(|| null("learner"))?;
        let values = l.state.q.values();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < values.len() {
            return Err((AvgrlStatus::BufferTooSmall, format!("buf needs {} entries", values.len())));
        }
        std::slice::from_raw_parts_mut(buf, values.len()).copy_from_slice(values);
        Ok(())
    })
}

/// # Safety
/// `learner` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn avgrl_learner_free(learner: *mut AvgrlLearner) {
    if !learner.is_null() {
        drop(Box::from_raw(learner));
    }
}
