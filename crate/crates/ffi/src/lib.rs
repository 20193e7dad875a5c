//! C interface to the `adgt` library.
//!
//! Objects cross the boundary as opaque handles released by the matching
//! `adgt_*_free`. Every
//! fallible call returns an [`AdgtStatus`]; on failure the message is
//! available from [`adgt_last_error`] on the same thread until the next
//! failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use adgt::algorithms::{reference_minimizer, run_decentralized, RunOptions, RunStatus, RunTrace, REFERENCE_TOL};
use adgt::graph::{build_topology, metropolis_weights, MixingMatrix, Topology, TopologyKind};
use adgt::harness::{run_experiment, write_text, ExperimentConfig, HarnessError};
use adgt::objectives::{make_quadratic_ensemble, ObjectiveEnsemble};
use adgt::stepsize::{Policy, StepsizeConfig};
use adgt::theory::{ceiling, gamma_min, BoundInputs};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdgtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Graph = 3,
    Objective = 4,
    Config = 5,
    Io = 6,
    Algorithm = 7,
    Theory = 8,
    OutOfRange = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdgtTopologyKind {
    Star = 0,
    Cycle = 1,
    Line = 2,
    Ladder = 3,
    Random = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdgtPolicy {
    Adgt = 0,
    AdgtCombined = 1,
    Adgd = 2,
    MethodDm = 3,
    Fixed = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdgtRunStatus {
    Converged = 0,
    Diverged = 1,
    BudgetExhausted = 2,
}

/// One trace row.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AdgtTraceRecord {
    pub k: u64,
    pub residual: f64,
    pub consensus_x: f64,
    pub consensus_y: f64,
    pub alpha_min: f64,
    pub alpha_mean: f64,
    pub alpha_max: f64,
    pub delta_alpha: f64,
}

pub struct AdgtTopology(Topology);
pub struct AdgtMixing(MixingMatrix);
pub struct AdgtEnsemble(ObjectiveEnsemble);
pub struct AdgtTrace(RunTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn fail(status: AdgtStatus, msg: impl Into<String>) -> AdgtStatus {
    set_error(msg);
    status
}

fn harness_status(e: &HarnessError) -> AdgtStatus {
    match e {
        HarnessError::Config(_) | HarnessError::MissingDataset { .. } => AdgtStatus::Config,
        HarnessError::Io { .. } | HarnessError::Artifact(_) | HarnessError::Dataset(_) => AdgtStatus::Io,
        HarnessError::Graph(_) => AdgtStatus::Graph,
        HarnessError::Objective(_) => AdgtStatus::Objective,
        HarnessError::Algorithm(_) => AdgtStatus::Algorithm,
        HarnessError::Theory(_) => AdgtStatus::Theory,
    }
}

fn guard(f: impl FnOnce() -> AdgtStatus) -> AdgtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(AdgtStatus::Panic, "internal panic"),
    }
}

unsafe fn out_handle<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

unsafe fn c_str<'a>(s: *const c_char) -> Result<&'a str, AdgtStatus> {
    if s.is_null() {
        return Err(fail(AdgtStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(AdgtStatus::InvalidArgument, "string is not UTF-8"))
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn adgt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn adgt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a topology. `ratio` is read only for random graphs.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn adgt_topology_build(
    kind: AdgtTopologyKind,
    n: usize,
    ratio: f64,
    seed: u64,
    out: *mut *mut AdgtTopology,
) -> AdgtStatus {
    guard(|| {
        if out.is_null() {
            return fail(AdgtStatus::NullPointer, "out is null");
        }
        let (kind, ratio) = match kind {
            AdgtTopologyKind::Star => (TopologyKind::Star, None),
            AdgtTopologyKind::Cycle => (TopologyKind::Cycle, None),
            AdgtTopologyKind::Line => (TopologyKind::Line, None),
            AdgtTopologyKind::Ladder => (TopologyKind::Ladder, None),
            AdgtTopologyKind::Random => (TopologyKind::Random, Some(ratio)),
        };
        match build_topology(kind, n, ratio, seed) {
            Ok(t) => {
                out_handle(out, AdgtTopology(t));
                AdgtStatus::Ok
            }
            Err(e) => fail(AdgtStatus::Graph, e.to_string()),
        }
    })
}

/// # Safety
/// `t` must be a live topology handle.
#[no_mangle]
pub unsafe extern "C" fn adgt_topology_agents(t: *const AdgtTopology) -> usize {
    t.as_ref().map_or(0, |t| t.0.n())
}

/// # Safety
/// `t` must be a live topology handle.
#[no_mangle]
pub unsafe extern "C" fn adgt_topology_edge_count(t: *const AdgtTopology) -> usize {
    t.as_ref().map_or(0, |t| t.0.edges().len())
}

/// Endpoints of edge `index`, smaller agent first.
///
/// # Safety
/// `t` must be a live topology handle; `i` and `j` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adgt_topology_edge(t: *const AdgtTopology, index: usize, i: *mut usize, j: *mut usize) -> AdgtStatus {
    guard(|| {
        let Some(t) = t.as_ref() else { return fail(AdgtStatus::NullPointer, "topology is null") };
        if i.is_null() || j.is_null() {
            return fail(AdgtStatus::NullPointer, "output is null");
        }
        match t.0.edges().get(index) {
            Some(&(a, b)) => {
                *i = a;
                *j = b;
                AdgtStatus::Ok
            }
            None => fail(AdgtStatus::OutOfRange, format!("edge {index} of {}", t.0.edges().len())),
        }
    })
}

/// # Safety
/// `t` must be NULL or a handle from [`adgt_topology_build`], freed once.
#[no_mangle]
pub unsafe extern "C" fn adgt_topology_free(t: *mut AdgtTopology) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Metropolis weights for a topology.
///
/// # Safety
/// `t` must be a live topology handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adgt_mixing_metropolis(t: *const AdgtTopology, out: *mut *mut AdgtMixing) -> AdgtStatus {
    guard(|| {
        let Some(t) = t.as_ref() else { return fail(AdgtStatus::NullPointer, "topology is null") };
        if out.is_null() {
            return fail(AdgtStatus::NullPointer, "out is null");
        }
        match metropolis_weights(&t.0) {
            Ok(w) => {
                out_handle(out, AdgtMixing(w));
                AdgtStatus::Ok
            }
            Err(e) => fail(AdgtStatus::Graph, e.to_string()),
        }
    })
}

/// `‖W − 11ᵀ/n‖₂`; NaN for a NULL handle.
///
/// # Safety
/// `w` must be NULL or a live mixing handle.
#[no_mangle]
pub unsafe extern "C" fn adgt_mixing_lambda(w: *const AdgtMixing) -> f64 {
    w.as_ref().map_or(f64::NAN, |w| w.0.lambda())
}

/// # Safety
/// `w` must be a live mixing handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adgt_mixing_weight(w: *const AdgtMixing, i: usize, j: usize, out: *mut f64) -> AdgtStatus {
    guard(|| {
        let Some(w) = w.as_ref() else { return fail(AdgtStatus::NullPointer, "mixing is null") };
        if out.is_null() {
            return fail(AdgtStatus::NullPointer, "out is null");
        }
        let n = w.0.n();
        if i >= n || j >= n {
            return fail(AdgtStatus::OutOfRange, format!("({i}, {j}) outside {n}x{n}"));
        }
        *out = w.0.weight(i, j);
        AdgtStatus::Ok
    })
}

/// # Safety
/// `w` must be NULL or a handle from [`adgt_mixing_metropolis`], freed once.
#[no_mangle]
pub unsafe extern "C" fn adgt_mixing_free(w: *mut AdgtMixing) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Diagonal quadratics, one `tau` per agent.
///
/// # Safety
/// `taus` must point to `n` readable doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn adgt_ensemble_quadratic(
    n: usize,
    dim: usize,
    taus: *const f64,
    seed: u64,
    out: *mut *mut AdgtEnsemble,
) -> AdgtStatus {
    guard(|| {
        if taus.is_null() || out.is_null() {
            return fail(AdgtStatus::NullPointer, "taus or out is null");
        }
        let taus = std::slice::from_raw_parts(taus, n);
        match make_quadratic_ensemble(n, dim, taus, seed) {
            Ok(e) => {
                out_handle(out, AdgtEnsemble(e));
                AdgtStatus::Ok
            }
            Err(e) => fail(AdgtStatus::Objective, e.to_string()),
        }
    })
}

/// # Safety
/// `e` must be NULL or a live ensemble handle.
#[no_mangle]
pub unsafe extern "C" fn adgt_ensemble_dim(e: *const AdgtEnsemble) -> usize {
    e.as_ref().map_or(0, |e| e.0.dim())
}

/// Gradient of agent `agent` at `x`, written to `grad`.
///
/// # Safety
/// `e` must be a live ensemble handle; `x` and `grad` must each hold
/// `adgt_ensemble_dim(e)` doubles.
#[no_mangle]
pub unsafe extern "C" fn adgt_ensemble_gradient(
    e: *const AdgtEnsemble,
    agent: usize,
    x: *const f64,
    grad: *mut f64,
) -> AdgtStatus {
    guard(|| {
        let Some(e) = e.as_ref() else { return fail(AdgtStatus::NullPointer, "ensemble is null") };
        if x.is_null() || grad.is_null() {
            return fail(AdgtStatus::NullPointer, "x or grad is null");
        }
        if agent >= e.0.n() {
            return fail(AdgtStatus::OutOfRange, format!("agent {agent} of {}", e.0.n()));
        }
        let p = e.0.dim();
        let x = nalgebra::DVector::from_column_slice(std::slice::from_raw_parts(x, p));
        let g = e.0.local(agent).gradient(&x);
        std::slice::from_raw_parts_mut(grad, p).copy_from_slice(g.as_slice());
        AdgtStatus::Ok
    })
}

/// # Safety
/// `e` must be NULL or a handle from an ensemble builder, freed once.
#[no_mangle]
pub unsafe extern "C" fn adgt_ensemble_free(e: *mut AdgtEnsemble) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Decentralized run from the zero point. `alpha0` is the initial stepsize,
/// or the constant one under the fixed policy.
///
/// # Safety
/// `w` and `e` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adgt_run(
    w: *const AdgtMixing,
    e: *const AdgtEnsemble,
    policy: AdgtPolicy,
    gamma: f64,
    alpha0: f64,
    max_iters: usize,
    tol: f64,
    out: *mut *mut AdgtTrace,
) -> AdgtStatus {
    guard(|| {
        let (Some(w), Some(e)) = (w.as_ref(), e.as_ref()) else {
            return fail(AdgtStatus::NullPointer, "mixing or ensemble is null");
        };
        if out.is_null() {
            return fail(AdgtStatus::NullPointer, "out is null");
        }
        let policy = match policy {
            AdgtPolicy::Adgt => Policy::AdGT,
            AdgtPolicy::AdgtCombined => Policy::AdGTCombined,
            AdgtPolicy::Adgd => Policy::AdGD,
            AdgtPolicy::MethodDm => Policy::MethodDM,
            AdgtPolicy::Fixed => Policy::Fixed,
        };
        let cfg = StepsizeConfig::new(policy).with_alpha0(alpha0).with_gamma(gamma);
        if let Err(m) = cfg.validate() {
            return fail(AdgtStatus::InvalidArgument, m);
        }
        if !(tol >= 0.0) {
            return fail(AdgtStatus::InvalidArgument, format!("tol must be nonnegative, got {tol}"));
        }
        let x_star = match reference_minimizer(&e.0, REFERENCE_TOL) {
            Ok(x) => x,
            Err(err) => return fail(AdgtStatus::Objective, err.to_string()),
        };
        let opts = RunOptions { max_iters, tol, ..Default::default() };
        match run_decentralized(&e.0, &w.0, &cfg, &opts, &x_star) {
            Ok(t) => {
                out_handle(out, AdgtTrace(t));
                AdgtStatus::Ok
            }
            Err(err) => fail(AdgtStatus::Algorithm, err.to_string()),
        }
    })
}

/// Runs a JSON experiment config. Artifacts are written only when the
/// config names a trace file.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adgt_run_config_json(json: *const c_char, out: *mut *mut AdgtTrace) -> AdgtStatus {
    guard(|| {
        if out.is_null() {
            return fail(AdgtStatus::NullPointer, "out is null");
        }
        let text = match c_str(json) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let result = ExperimentConfig::from_json(text).and_then(|cfg| run_experiment(&cfg));
        match result {
            Ok(o) => {
                out_handle(out, AdgtTrace(o.trace));
                AdgtStatus::Ok
            }
            Err(e) => fail(harness_status(&e), e.to_string()),
        }
    })
}

/// Number of rows, `iterations + 1`.
///
/// # Safety
/// `t` must be NULL or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn adgt_trace_len(t: *const AdgtTrace) -> usize {
    t.as_ref().map_or(0, |t| t.0.records.len())
}

/// # Safety
/// `t` must be a live trace handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adgt_trace_record(t: *const AdgtTrace, index: usize, out: *mut AdgtTraceRecord) -> AdgtStatus {
    guard(|| {
        let Some(t) = t.as_ref() else { return fail(AdgtStatus::NullPointer, "trace is null") };
        if out.is_null() {
            return fail(AdgtStatus::NullPointer, "out is null");
        }
        let Some(r) = t.0.records.get(index) else {
            return fail(AdgtStatus::OutOfRange, format!("row {index} of {}", t.0.records.len()));
        };
        *out = AdgtTraceRecord {
            k: r.k as u64,
            residual: r.residual,
            consensus_x: r.consensus_x,
            consensus_y: r.consensus_y,
            alpha_min: r.alpha_min,
            alpha_mean: r.alpha_mean,
            alpha_max: r.alpha_max,
            delta_alpha: r.delta_alpha,
        };
        AdgtStatus::Ok
    })
}

/// Final status and iteration count.
///
/// # Safety
/// `t` must be a live trace handle; `status` and `iterations` writable.
#[no_mangle]
pub unsafe extern "C" fn adgt_trace_status(
    t: *const AdgtTrace,
    status: *mut AdgtRunStatus,
    iterations: *mut u64,
) -> AdgtStatus {
    guard(|| {
        let Some(t) = t.as_ref() else { return fail(AdgtStatus::NullPointer, "trace is null") };
        if status.is_null() || iterations.is_null() {
            return fail(AdgtStatus::NullPointer, "output is null");
        }
        *status = match t.0.status {
            RunStatus::Converged { .. } => AdgtRunStatus::Converged,
            RunStatus::Diverged { .. } => AdgtRunStatus::Diverged,
            RunStatus::BudgetExhausted { .. } => AdgtRunStatus::BudgetExhausted,
        };
        *iterations = t.0.status.iterations() as u64;
        AdgtStatus::Ok
    })
}

/// Writes the trace CSV to `path`.
///
/// # Safety
/// `t` must be a live trace handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn adgt_trace_write_csv(t: *const AdgtTrace, path: *const c_char) -> AdgtStatus {
    guard(|| {
        let Some(t) = t.as_ref() else { return fail(AdgtStatus::NullPointer, "trace is null") };
        let path = match c_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match write_text(Path::new(path), &t.0.to_csv()) {
            Ok(()) => AdgtStatus::Ok,
            Err(e) => fail(harness_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `t` must be NULL or a handle from a run call, freed once.
#[no_mangle]
pub unsafe extern "C" fn adgt_trace_free(t: *mut AdgtTrace) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Stepsize ceiling `D` and damping floor `1/(2Dμ)` with
/// `α_max = 1/(2μ)`.
///
/// # Safety
/// `d` and `gamma_floor` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adgt_theory_ceiling(
    lambda: f64,
    l: f64,
    mu: f64,
    delta_alpha: f64,
    d: *mut f64,
    gamma_floor: *mut f64,
) -> AdgtStatus {
    guard(|| {
        if d.is_null() || gamma_floor.is_null() {
            return fail(AdgtStatus::NullPointer, "output is null");
        }
        let inp = BoundInputs::new(lambda, l, mu, delta_alpha);
        if let Err(e) = inp.validate() {
            return fail(AdgtStatus::Theory, e.to_string());
        }
        let c = ceiling(&inp);
        *d = c.d;
        *gamma_floor = gamma_min(c.d, mu);
        AdgtStatus::Ok
    })
}
