//! Round-synchronous engines.
//!
//! The decentralized engine runs gradient tracking in stacked form
//!
//! ```text
//! x⁺ = W (x − α ⊙ y)
//! y⁺ = W y + ∇f(x⁺) − ∇f(x)
//! ```
//!
//! followed by each agent's stepsize update. The centralized engine runs
//! gradient descent on `Σ_i f_i`. Both record a [`RunTrace`].
//!
//! Every per-agent computation in a round reads only the previous round's
//! state, and every mixing sum runs over the row's neighbors in ascending
//! order, so the sequential and multi-threaded paths give identical bits.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::MixingMatrix;
use crate::objectives::{ObjectiveEnsemble, ObjectiveError};
use crate::stepsize::{Binding, CurvatureProbe, Policy, StepsizeConfig, StepsizeState};

/// A residual above this marks the run as diverged.
pub const DIVERGENCE_RESIDUAL: f64 = 1e12;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgorithmError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("mixing matrix is for {w} agents but the ensemble has {n}")]
    AgentCount { w: usize, n: usize },
    #[error("invalid stepsize configuration: {0}")]
    Stepsize(String),
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// How the tracker is scaled before mixing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateVariant {
    /// Agent `j` scales its own tracker by its own stepsize: `W(x − α ⊙ y)`.
    #[default]
    Compact,
    /// Agent `i` scales every neighbor's tracker by its own stepsize:
    /// `x_i⁺ = Σ_j w_ij (x_j − α_i y_j)`.
    OwnStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    /// `∇f_i(x)`, recomputed every round.
    pub grad: DVector<f64>,
    pub step: StepsizeState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub agents: Vec<AgentState>,
    pub k: usize,
}

/// Starting iterate.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialPoint {
    #[default]
    Zero,
    Shared(DVector<f64>),
    PerAgent(Vec<DVector<f64>>),
}

impl InitialPoint {
    fn for_agent(&self, i: usize, p: usize) -> DVector<f64> {
        match self {
            InitialPoint::Zero => DVector::zeros(p),
            InitialPoint::Shared(x) => x.clone(),
            InitialPoint::PerAgent(xs) => xs[i].clone(),
        }
    }

    fn check(&self, n: usize, p: usize) -> Result<(), AlgorithmError> {
        match self {
            InitialPoint::Zero => Ok(()),
            InitialPoint::Shared(x) if x.len() != p => Err(AlgorithmError::Dimension { expected: p, got: x.len() }),
            InitialPoint::Shared(_) => Ok(()),
            InitialPoint::PerAgent(xs) => {
                if xs.len() != n {
                    return Err(AlgorithmError::Dimension { expected: n, got: xs.len() });
                }
                match xs.iter().find(|x| x.len() != p) {
                    Some(x) => Err(AlgorithmError::Dimension { expected: p, got: x.len() }),
                    None => Ok(()),
                }
            }
        }
    }
}

/// Every agent starts at `x⁰` with `y⁰ = ∇f_i(x⁰)`.
pub fn init_swarm(
    ens: &ObjectiveEnsemble,
    x0: &InitialPoint,
    step_cfg: &StepsizeConfig,
) -> Result<SwarmState, AlgorithmError> {
    let (n, p) = (ens.n(), ens.dim());
    x0.check(n, p)?;
    step_cfg.validate().map_err(AlgorithmError::Stepsize)?;
    let agents = (0..n)
        .map(|i| {
            let x = x0.for_agent(i, p);
            let grad = ens.local(i).gradient(&x);
            AgentState { y: grad.clone(), grad, x, step: step_cfg.initial_state() }
        })
        .collect();
    Ok(SwarmState { agents, k: 0 })
}

impl SwarmState {
    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.step.alpha).collect()
    }

    // shifted by the first agent so identical rows average exactly
    fn mean_of(&self, f: impl Fn(&AgentState) -> &DVector<f64>) -> DVector<f64> {
        let base = f(&self.agents[0]);
        let mut d = DVector::zeros(base.len());
        for a in &self.agents[1..] {
            d += f(a) - base;
        }
        base + d / self.n() as f64
    }

    pub fn mean_x(&self) -> DVector<f64> {
        self.mean_of(|a| &a.x)
    }

    pub fn mean_y(&self) -> DVector<f64> {
        self.mean_of(|a| &a.y)
    }

    pub fn mean_grad(&self) -> DVector<f64> {
        self.mean_of(|a| &a.grad)
    }

    /// `‖x − 1x̄ᵀ‖_F`
    pub fn consensus_x(&self) -> f64 {
        let m = self.mean_x();
        self.agents.iter().map(|a| (&a.x - &m).norm_squared()).sum::<f64>().sqrt()
    }

    /// `‖y − 1ȳᵀ‖_F`
    pub fn consensus_y(&self) -> f64 {
        let m = self.mean_y();
        self.agents.iter().map(|a| (&a.y - &m).norm_squared()).sum::<f64>().sqrt()
    }

    /// `‖ȳ − mean_i ∇f_i(x_i)‖`; zero in exact arithmetic.
    pub fn tracking_gap(&self) -> f64 {
        (self.mean_y() - self.mean_grad()).norm()
    }

    /// `‖x − 1x*ᵀ‖_F`
    pub fn distance_to(&self, x_star: &DVector<f64>) -> f64 {
        self.agents.iter().map(|a| (&a.x - x_star).norm_squared()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.agents.iter().all(|a| {
            a.x.iter().chain(a.y.iter()).chain(a.grad.iter()).all(|v| v.is_finite()) && a.step.alpha.is_finite()
        })
    }
}

/// `‖α − ᾱ1‖ / ‖ᾱ1‖`.
pub fn delta_alpha(alphas: &[f64]) -> f64 {
    let n = alphas.len() as f64;
    let base = alphas[0];
    let mean = base + alphas.iter().map(|a| a - base).sum::<f64>() / n;
    let dev = alphas.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>().sqrt();
    dev / (mean.abs() * n.sqrt())
}

/// Outcome of a single round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Ok,
    /// A non-finite entry appeared.
    Diverged,
}

/// One decentralized round with the mixing matrix `w`.
///
/// With `parallel` set, the per-agent work runs on the current rayon pool.
pub fn step_decentralized(
    s: &mut SwarmState,
    w: &MixingMatrix,
    ens: &ObjectiveEnsemble,
    variant: UpdateVariant,
    parallel: bool,
) -> StepOutcome {
    let n = s.n();
    debug_assert_eq!(w.n(), n);
    let prev = &s.agents;

    let scaled: Vec<DVector<f64>> = match variant {
        UpdateVariant::Compact => prev.iter().map(|a| &a.x - &a.y * a.step.alpha).collect(),
        UpdateVariant::OwnStep => Vec::new(),
    };

    // x_i⁺ = z_i + Σ_{j≠i} w_ij (z_j − z_i), equal to Σ_j w_ij z_j because
    // rows sum to one, and exact when neighbors agree
    let local = |i: usize| -> AgentState {
        let me = &prev[i];
        let own_z = match variant {
            UpdateVariant::Compact => scaled[i].clone(),
            UpdateVariant::OwnStep => &me.x - &me.y * me.step.alpha,
        };
        let mut x = own_z.clone();
        let mut ymix = me.y.clone();
        for &(j, wij) in w.row(i) {
            if j == i {
                continue;
            }
            match variant {
                UpdateVariant::Compact => x.axpy(wij, &(&scaled[j] - &own_z), 1.0),
                UpdateVariant::OwnStep => {
                    let z = &prev[j].x - &prev[j].y * me.step.alpha;
                    x.axpy(wij, &(z - &own_z), 1.0);
                }
            }
            ymix.axpy(wij, &(&prev[j].y - &me.y), 1.0);
        }
        let grad = ens.local(i).gradient(&x);
        let dgrad = &grad - &me.grad;
        // an agent without neighbors has y = ∇f exactly
        let isolated = w.row(i).iter().all(|&(j, _)| j == i);
        let y = if isolated { grad.clone() } else { ymix + &dgrad };
        let probe = CurvatureProbe {
            dx_norm: (&x - &me.x).norm(),
            dy_norm: (&y - &me.y).norm(),
            dgrad_norm: dgrad.norm(),
            y_norm: me.y.norm(),
        };
        let (step, _) = me.step.update(&probe);
        AgentState { x, y, grad, step }
    };

    let next: Vec<AgentState> =
        if parallel { (0..n).into_par_iter().map(local).collect() } else { (0..n).map(local).collect() };
    s.agents = next;
    s.k += 1;
    if s.is_finite() {
        StepOutcome::Ok
    } else {
        StepOutcome::Diverged
    }
}

/// Iterate of the centralized engine.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralizedState {
    pub x: DVector<f64>,
    /// `Σ_i ∇f_i(x)`
    pub grad: DVector<f64>,
    pub step: StepsizeState,
    pub k: usize,
}

impl CentralizedState {
    pub fn new(ens: &ObjectiveEnsemble, x0: DVector<f64>, step_cfg: &StepsizeConfig) -> Result<Self, AlgorithmError> {
        if x0.len() != ens.dim() {
            return Err(AlgorithmError::Dimension { expected: ens.dim(), got: x0.len() });
        }
        step_cfg.validate().map_err(AlgorithmError::Stepsize)?;
        let grad = ens.gradient(&x0);
        Ok(CentralizedState { x: x0, grad, step: step_cfg.initial_state(), k: 0 })
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.grad.iter()).all(|v| v.is_finite()) && self.step.alpha.is_finite()
    }
}

/// `x⁺ = x − α∇f(x)`, then the stepsize rule on the realized displacement
/// and gradient change. Adaptive policies all use the centralized ratio.
pub fn step_centralized(s: &mut CentralizedState, ens: &ObjectiveEnsemble) -> StepOutcome {
    let x = &s.x - &s.grad * s.step.alpha;
    let grad = ens.gradient(&x);
    let probe = CurvatureProbe {
        dx_norm: (&x - &s.x).norm(),
        dy_norm: 0.0,
        dgrad_norm: (&grad - &s.grad).norm(),
        y_norm: s.grad.norm(),
    };
    let (step, _): (StepsizeState, Binding) = match s.step.policy {
        Policy::Fixed => (s.step, Binding::Unchanged),
        _ => s.step.update_adgd(&probe),
    };
    s.x = x;
    s.grad = grad;
    s.step = step;
    s.k += 1;
    if s.is_finite() {
        StepOutcome::Ok
    } else {
        StepOutcome::Diverged
    }
}

/// Centralized AdGD until `‖∇f(x)‖ ≤ tol`.
pub fn minimize_adgd(
    ens: &ObjectiveEnsemble,
    x0: DVector<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<DVector<f64>, ObjectiveError> {
    let cfg = StepsizeConfig::new(Policy::AdGD);
    let mut s = CentralizedState::new(ens, x0, &cfg).map_err(|e| match e {
        AlgorithmError::Objective(o) => o,
        other => ObjectiveError::Format(other.to_string()),
    })?;
    for _ in 0..max_iters {
        if s.grad.norm() <= tol {
            return Ok(s.x);
        }
        if step_centralized(&mut s, ens) == StepOutcome::Diverged {
            return Err(ObjectiveError::NonFiniteGradient);
        }
    }
    if s.grad.norm() <= tol {
        return Ok(s.x);
    }
    Err(ObjectiveError::ReferenceNotReached { tol, iters: max_iters, last: s.grad.norm() })
}

/// Minimizer of `Σ_i f_i`: a direct linear solve when every local is
/// quadratic in `x`, centralized AdGD to `‖∇f‖ ≤ tol` otherwise.
pub fn reference_minimizer(ens: &ObjectiveEnsemble, tol: f64) -> Result<DVector<f64>, ObjectiveError> {
    if let Some(direct) = ens.closed_form_minimizer() {
        return direct;
    }
    minimize_adgd(ens, DVector::zeros(ens.dim()), tol, REFERENCE_MAX_ITERS)
}

pub const REFERENCE_TOL: f64 = 1e-12;
pub const REFERENCE_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Execution {
    Sequential,
    /// A dedicated rayon pool with this many threads.
    Threads(usize),
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Sequential
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub x0: InitialPoint,
    pub variant: UpdateVariant,
    pub execution: Execution,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            x0: InitialPoint::Zero,
            variant: UpdateVariant::Compact,
            execution: Execution::Sequential,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Converged { iterations: usize },
    Diverged { iteration: usize },
    BudgetExhausted { iterations: usize },
}

impl RunStatus {
    pub fn converged(&self) -> bool {
        matches!(self, RunStatus::Converged { .. })
    }

    pub fn diverged(&self) -> bool {
        matches!(self, RunStatus::Diverged { .. })
    }

    pub fn iterations(&self) -> usize {
        match *self {
            RunStatus::Converged { iterations } | RunStatus::BudgetExhausted { iterations } => iterations,
            RunStatus::Diverged { iteration } => iteration,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Converged { .. } => "converged",
            RunStatus::Diverged { .. } => "diverged",
            RunStatus::BudgetExhausted { .. } => "budget-exhausted",
        }
    }
}

/// Metrics after iteration `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub residual: f64,
    pub consensus_x: f64,
    pub consensus_y: f64,
    pub alpha_min: f64,
    pub alpha_mean: f64,
    pub alpha_max: f64,
    pub delta_alpha: f64,
    /// `‖ȳ − mean ∇f_i(x_i)‖`
    pub tracking_gap: f64,
    /// `‖mean ∇f_i(x_i)‖`
    pub mean_grad_norm: f64,
    /// Smallest stepsize among agents whose curvature term has bound at
    /// least once.
    pub calibrated_alpha_min: Option<f64>,
    pub elapsed_secs: f64,
}

pub const TRACE_CSV_HEADER: &str = "k,residual,consensus_x,consensus_y,alpha_min,alpha_mean,alpha_max,delta_alpha";

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub status: RunStatus,
    pub wall_secs: f64,
    /// Stepsizes of every agent at the last iterate.
    pub final_alphas: Vec<f64>,
    /// Last stacked iterate (one row per agent).
    pub final_x: Vec<DVector<f64>>,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.residual)
    }

    /// First `k` with `r(k) ≤ threshold`.
    pub fn iterations_to(&self, threshold: f64) -> Option<usize> {
        self.records.iter().find(|r| r.residual <= threshold).map(|r| r.k)
    }

    pub fn max_delta_alpha(&self) -> f64 {
        self.records.iter().map(|r| r.delta_alpha).fold(0.0, f64::max)
    }

    /// Deterministic CSV: no timing columns, shortest round-trip floats.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.records.len() + 1));
        s.push_str(TRACE_CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.k, r.residual, r.consensus_x, r.consensus_y, r.alpha_min, r.alpha_mean, r.alpha_max, r.delta_alpha
            );
        }
        s
    }
}

/// A row of a trace CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub k: usize,
    pub residual: f64,
    pub consensus_x: f64,
    pub consensus_y: f64,
    pub alpha_min: f64,
    pub alpha_mean: f64,
    pub alpha_max: f64,
    pub delta_alpha: f64,
}

/// Parses a trace CSV back into rows.
pub fn parse_trace_csv(text: &str) -> Result<Vec<CsvRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == TRACE_CSV_HEADER => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 8 {
                return Err(format!("line {}: expected 8 fields", i + 2));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", i + 2));
            Ok(CsvRow {
                k: f[0].parse().map_err(|e| format!("line {}: {e}", i + 2))?,
                residual: num(f[1])?,
                consensus_x: num(f[2])?,
                consensus_y: num(f[3])?,
                alpha_min: num(f[4])?,
                alpha_mean: num(f[5])?,
                alpha_max: num(f[6])?,
                delta_alpha: num(f[7])?,
            })
        })
        .collect()
}

fn with_pool<T: Send>(execution: Execution, f: impl FnOnce(bool) -> T + Send) -> Result<T, AlgorithmError> {
    match execution {
        Execution::Sequential => Ok(f(false)),
        Execution::Threads(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| AlgorithmError::ThreadPool(e.to_string()))?;
            Ok(pool.install(|| f(true)))
        }
    }
}

fn residual_scale(initial_distance: f64) -> f64 {
    if initial_distance > 0.0 {
        initial_distance
    } else {
        1.0
    }
}

fn swarm_record(s: &SwarmState, x_star: &DVector<f64>, scale: f64, start: &Instant) -> TraceRecord {
    let alphas = s.alphas();
    let (lo, hi) = alphas.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)));
    let calibrated = s
        .agents
        .iter()
        .filter(|a| a.step.calibrated)
        .map(|a| a.step.alpha)
        .fold(None, |m: Option<f64>, a| Some(m.map_or(a, |m| m.min(a))));
    let mean_grad = s.mean_grad();
    TraceRecord {
        k: s.k,
        residual: s.distance_to(x_star) / scale,
        consensus_x: s.consensus_x(),
        consensus_y: s.consensus_y(),
        alpha_min: lo,
        alpha_mean: alphas.iter().sum::<f64>() / alphas.len() as f64,
        alpha_max: hi,
        delta_alpha: delta_alpha(&alphas),
        tracking_gap: (s.mean_y() - &mean_grad).norm(),
        mean_grad_norm: mean_grad.norm(),
        calibrated_alpha_min: calibrated,
        elapsed_secs: start.elapsed().as_secs_f64(),
    }
}

fn decide(residual: f64, finite: bool, tol: f64, k: usize, max_iters: usize) -> Option<RunStatus> {
    if !finite || !residual.is_finite() || residual > DIVERGENCE_RESIDUAL {
        Some(RunStatus::Diverged { iteration: k })
    } else if residual <= tol {
        Some(RunStatus::Converged { iterations: k })
    } else if k >= max_iters {
        Some(RunStatus::BudgetExhausted { iterations: k })
    } else {
        None
    }
}

/// Runs the decentralized engine until `r(k) ≤ tol`, divergence, or the
/// iteration budget.
pub fn run_decentralized(
    ens: &ObjectiveEnsemble,
    w: &MixingMatrix,
    step_cfg: &StepsizeConfig,
    opts: &RunOptions,
    x_star: &DVector<f64>,
) -> Result<RunTrace, AlgorithmError> {
    if w.n() != ens.n() {
        return Err(AlgorithmError::AgentCount { w: w.n(), n: ens.n() });
    }
    if x_star.len() != ens.dim() {
        return Err(AlgorithmError::Dimension { expected: ens.dim(), got: x_star.len() });
    }
    let mut s = init_swarm(ens, &opts.x0, step_cfg)?;
    with_pool(opts.execution, |parallel| {
        let start = Instant::now();
        let scale = residual_scale(s.distance_to(x_star));
        let mut records = Vec::new();
        let status = loop {
            let rec = swarm_record(&s, x_star, scale, &start);
            records.push(rec);
            if let Some(st) = decide(rec.residual, s.is_finite(), opts.tol, s.k, opts.max_iters) {
                break st;
            }
            step_decentralized(&mut s, w, ens, opts.variant, parallel);
        };
        RunTrace {
            records,
            status,
            wall_secs: start.elapsed().as_secs_f64(),
            final_alphas: s.alphas(),
            final_x: s.agents.iter().map(|a| a.x.clone()).collect(),
        }
    })
}

/// Runs the centralized engine (fixed-step GD or AdGD) with the same
/// stopping rules and trace layout.
pub fn run_centralized(
    ens: &ObjectiveEnsemble,
    step_cfg: &StepsizeConfig,
    opts: &RunOptions,
    x_star: &DVector<f64>,
) -> Result<RunTrace, AlgorithmError> {
    let x0 = match &opts.x0 {
        InitialPoint::Zero => DVector::zeros(ens.dim()),
        InitialPoint::Shared(x) => x.clone(),
        InitialPoint::PerAgent(_) => {
            return Err(AlgorithmError::Stepsize("centralized runs take a single initial point".into()))
        }
    };
    if x_star.len() != ens.dim() {
        return Err(AlgorithmError::Dimension { expected: ens.dim(), got: x_star.len() });
    }
    let mut s = CentralizedState::new(ens, x0, step_cfg)?;
    let start = Instant::now();
    let scale = residual_scale((&s.x - x_star).norm());
    let mut records = Vec::new();
    let status = loop {
        let residual = (&s.x - x_star).norm() / scale;
        records.push(TraceRecord {
            k: s.k,
            residual,
            consensus_x: 0.0,
            consensus_y: 0.0,
            alpha_min: s.step.alpha,
            alpha_mean: s.step.alpha,
            alpha_max: s.step.alpha,
            delta_alpha: 0.0,
            tracking_gap: 0.0,
            mean_grad_norm: s.grad.norm(),
            calibrated_alpha_min: s.step.calibrated.then_some(s.step.alpha),
            elapsed_secs: start.elapsed().as_secs_f64(),
        });
        if let Some(st) = decide(residual, s.is_finite(), opts.tol, s.k, opts.max_iters) {
            break st;
        }
        step_centralized(&mut s, ens);
    };
    Ok(RunTrace {
        records,
        status,
        wall_secs: start.elapsed().as_secs_f64(),
        final_alphas: vec![s.step.alpha],
        final_x: vec![s.x],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_topology, metropolis_weights, TopologyKind};
    use crate::objectives::{make_quadratic_ensemble, LocalObjective};
    use crate::stepsize::Terms;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn quad_ens(n: usize) -> ObjectiveEnsemble {
        make_quadratic_ensemble(n, 4, &vec![1.0; n], 5).unwrap()
    }

    #[test]
    fn init_sets_tracker_to_gradient() {
        let ens = quad_ens(3);
        let s = init_swarm(&ens, &InitialPoint::Zero, &StepsizeConfig::new(Policy::AdGT)).unwrap();
        for (i, a) in s.agents.iter().enumerate() {
            if let LocalObjective::Quadratic { b, .. } = ens.local(i) {
                assert_eq!(&a.y, b);
            }
        }
        assert_eq!(s.mean_y(), s.mean_grad());
        let bad = InitialPoint::Shared(DVector::zeros(3));
        assert!(matches!(
            init_swarm(&ens, &bad, &StepsizeConfig::new(Policy::AdGT)),
            Err(AlgorithmError::Dimension { .. })
        ));
    }

    #[test]
    fn single_agent_fixed_is_gradient_descent() {
        let ens = quad_ens(1);
        let w = MixingMatrix::new(DMatrix::from_element(1, 1, 1.0)).unwrap();
        let cfg = StepsizeConfig::fixed(0.1);
        let mut s = init_swarm(&ens, &InitialPoint::Shared(DVector::from_element(4, 1.0)), &cfg).unwrap();
        let x0 = s.agents[0].x.clone();
        let expect = &x0 - ens.local(0).gradient(&x0) * 0.1;
        step_decentralized(&mut s, &w, &ens, UpdateVariant::Compact, false);
        assert_eq!(s.agents[0].x, expect);
    }

    #[test]
    fn identical_agents_stay_in_consensus() {
        let f = LocalObjective::quadratic(DVector::from_vec(vec![1.0, 3.0]), DVector::from_vec(vec![0.5, -1.0])).unwrap();
        let ens = ObjectiveEnsemble::new(vec![f; 5]).unwrap();
        let t = build_topology(TopologyKind::Cycle, 5, None, 0).unwrap();
        let w = metropolis_weights(&t).unwrap();
        let mut s = init_swarm(&ens, &InitialPoint::Zero, &StepsizeConfig::new(Policy::AdGT)).unwrap();
        for _ in 0..50 {
            step_decentralized(&mut s, &w, &ens, UpdateVariant::Compact, false);
            assert_eq!(s.consensus_x(), 0.0);
            assert_eq!(s.consensus_y(), 0.0);
        }
    }

    #[test]
    fn frozen_adgt_matches_fixed_bitwise() {
        let ens = quad_ens(6);
        let t = build_topology(TopologyKind::Ladder, 6, None, 0).unwrap();
        let w = metropolis_weights(&t).unwrap();
        let frozen = StepsizeConfig::new(Policy::AdGT)
            .with_alpha0(0.05)
            .with_terms(Terms { curvature: false, growth: false });
        let mut a = init_swarm(&ens, &InitialPoint::Zero, &frozen).unwrap();
        let mut b = init_swarm(&ens, &InitialPoint::Zero, &StepsizeConfig::fixed(0.05)).unwrap();
        for _ in 0..200 {
            step_decentralized(&mut a, &w, &ens, UpdateVariant::Compact, false);
            step_decentralized(&mut b, &w, &ens, UpdateVariant::Compact, false);
            for (x, y) in a.agents.iter().zip(&b.agents) {
                assert_eq!(x.x, y.x);
                assert_eq!(x.y, y.y);
            }
        }
    }

    #[test]
    fn stationary_at_consensual_optimum() {
        let ens = quad_ens(4);
        let x_star = reference_minimizer(&ens, REFERENCE_TOL).unwrap();
        let t = build_topology(TopologyKind::Star, 4, None, 0).unwrap();
        let w = metropolis_weights(&t).unwrap();
        let mut s = init_swarm(&ens, &InitialPoint::Shared(x_star.clone()), &StepsizeConfig::fixed(0.01)).unwrap();
        // trackers at the average gradient, which is zero at the optimum
        let mean = s.mean_grad();
        for a in &mut s.agents {
            a.y = mean.clone();
        }
        for _ in 0..20 {
            step_decentralized(&mut s, &w, &ens, UpdateVariant::Compact, false);
        }
        assert!(s.distance_to(&x_star) < 1e-13, "{}", s.distance_to(&x_star));
    }

    #[test]
    fn delta_alpha_examples() {
        assert_eq!(delta_alpha(&[0.2; 7]), 0.0);
        assert_relative_eq!(delta_alpha(&[1.0, 3.0]), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_budget_trace() {
        let ens = quad_ens(3);
        let t = build_topology(TopologyKind::Cycle, 3, None, 0).unwrap();
        let w = metropolis_weights(&t).unwrap();
        let x_star = reference_minimizer(&ens, REFERENCE_TOL).unwrap();
        let opts = RunOptions { max_iters: 0, ..RunOptions::default() };
        let tr = run_decentralized(&ens, &w, &StepsizeConfig::new(Policy::AdGT), &opts, &x_star).unwrap();
        assert_eq!(tr.records.len(), 1);
        assert_eq!(tr.records[0].residual, 1.0);
        assert_eq!(tr.status, RunStatus::BudgetExhausted { iterations: 0 });
    }

    #[test]
    fn quadratic_run_converges_and_csv_rescans() {
        let ens = quad_ens(5);
        let t = build_topology(TopologyKind::Random, 5, Some(0.6), 42).unwrap();
        let w = metropolis_weights(&t).unwrap();
        let x_star = reference_minimizer(&ens, REFERENCE_TOL).unwrap();
        let opts = RunOptions { tol: 1e-8, max_iters: 50_000, ..RunOptions::default() };
        let tr = run_decentralized(&ens, &w, &StepsizeConfig::new(Policy::AdGT), &opts, &x_star).unwrap();
        assert!(tr.status.converged(), "{:?}", tr.status);
        assert!(tr.final_residual() <= 1e-8);
        let rows = parse_trace_csv(&tr.to_csv()).unwrap();
        assert_eq!(rows.len(), tr.records.len());
        for (r, t) in rows.iter().zip(&tr.records) {
            assert_eq!(r.residual.to_bits(), t.residual.to_bits());
            assert_eq!(r.k, t.k);
        }
    }

    #[test]
    fn centralized_fixed_unit_step_on_half_square() {
        let f = LocalObjective::quadratic(DVector::from_vec(vec![1.0]), DVector::from_vec(vec![0.0])).unwrap();
        let ens = ObjectiveEnsemble::new(vec![f]).unwrap();
        let mut s = CentralizedState::new(&ens, DVector::from_vec(vec![3.7]), &StepsizeConfig::fixed(1.0)).unwrap();
        step_centralized(&mut s, &ens);
        assert_eq!(s.x[0], 0.0);
    }

    #[test]
    fn centralized_adgd_calibrates_to_inverse_two_l() {
        let l = 4.0;
        let f = LocalObjective::quadratic(DVector::from_vec(vec![l]), DVector::from_vec(vec![0.0])).unwrap();
        let ens = ObjectiveEnsemble::new(vec![f]).unwrap();
        let mut s = CentralizedState::new(&ens, DVector::from_vec(vec![1.0]), &StepsizeConfig::new(Policy::AdGD).with_alpha0(1.0)).unwrap();
        step_centralized(&mut s, &ens);
        assert!(s.step.calibrated);
        assert_eq!(s.step.alpha, 1.0 / (2.0 * l));
    }
}
