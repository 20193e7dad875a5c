//! Experiment plumbing: configs, problem construction, runs with on-disk
//! artifacts, fixed-stepsize grid search and the reproduction drivers.

mod config;
mod reproduce;

pub use config::*;
pub use reproduce::*;

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::algorithms::{
    parse_trace_csv, reference_minimizer, run_centralized, run_decentralized, AlgorithmError, Execution,
    InitialPoint, RunOptions, RunStatus, RunTrace, REFERENCE_TOL,
};
use crate::datasets::{
    logistic_ensemble, parse_libsvm, partition_uniform, ridge_ensemble, synthetic_logistic, DatasetError,
    SampleSet,
};
use crate::graph::{build_topology, metropolis_weights, GraphError, MixingMatrix, Topology, TopologyKind};
use crate::linalg::symmetric_spectral_norm;
use crate::objectives::{make_quadratic_ensemble, EnsembleFile, ObjectiveEnsemble, ObjectiveError};
use crate::rng::{derive_seed, Stream};
use crate::stepsize::StepsizeConfig;
use crate::theory::TheoryError;

/// Residual levels reported for every method.
pub const THRESHOLDS: [f64; 4] = [1e-2, 1e-4, 1e-6, 1e-8];

pub mod exit_code {
    pub const CONVERGED: i32 = 0;
    pub const DIVERGED: i32 = 2;
    pub const BUDGET_EXHAUSTED: i32 = 3;
    pub const CONFIG: i32 = 4;
    pub const IO: i32 = 5;
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),
    #[error("dataset file {path} not found; pass the LIBSVM file (e.g. w8a) via --data")]
    MissingDataset { path: PathBuf },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("artifact check failed: {0}")]
    Artifact(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

impl HarnessError {
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::MissingDataset { .. } => "missing-dataset",
            HarnessError::Io { .. } => "io",
            HarnessError::Artifact(_) => "artifact",
            HarnessError::Graph(_) => "graph",
            HarnessError::Objective(_) => "objective",
            HarnessError::Dataset(DatasetError::Io { .. }) => "io",
            HarnessError::Dataset(_) => "dataset",
            HarnessError::Algorithm(_) => "algorithm",
            HarnessError::Theory(_) => "theory",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Io { .. } | HarnessError::Artifact(_) | HarnessError::Dataset(DatasetError::Io { .. }) => {
                exit_code::IO
            }
            HarnessError::Objective(ObjectiveError::ReferenceNotReached { .. }) => exit_code::IO,
            _ => exit_code::CONFIG,
        }
    }

    /// One line: `error kind=<kind> code=<code> msg="<message>"`.
    pub fn record(&self) -> String {
        format!("error kind={} code={} msg={:?}", self.kind(), self.exit_code(), self.to_string())
    }
}

pub fn status_exit_code(status: &RunStatus) -> i32 {
    match status {
        RunStatus::Converged { .. } => exit_code::CONVERGED,
        RunStatus::Diverged { .. } => exit_code::DIVERGED,
        RunStatus::BudgetExhausted { .. } => exit_code::BUDGET_EXHAUSTED,
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

pub fn read_text(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Everything a run needs, built from a config.
#[derive(Debug, Clone)]
pub struct Problem {
    pub topology: Topology,
    pub mixing: MixingMatrix,
    pub ensemble: ObjectiveEnsemble,
    pub x_star: DVector<f64>,
    /// `max_i L_i`
    pub smoothness: f64,
    /// `min_i μ_i`
    pub strong_convexity: f64,
}

impl Problem {
    /// Smoothness of `Σ_i f_i`, the scale for centralized stepsizes.
    pub fn centralized_smoothness(&self) -> f64 {
        let forms: Option<Vec<(DMatrix<f64>, DVector<f64>)>> =
            self.ensemble.locals().iter().map(|f| f.quadratic_form()).collect();
        if let Some(forms) = forms {
            let p = self.ensemble.dim();
            let h = forms.iter().fold(DMatrix::zeros(p, p), |acc, (h, _)| acc + h);
            if let Ok(l) = symmetric_spectral_norm(&h) {
                return l;
            }
        }
        self.ensemble.known_l().map_or(f64::NAN, |ls| ls.iter().sum())
    }
}

fn build_topology_from(cfg: &ExperimentConfig) -> Result<Topology, HarnessError> {
    let t = &cfg.topology;
    if t.kind == TopologyKind::Custom {
        let path = t.path.as_ref().ok_or_else(|| HarnessError::Config("custom topology needs 'path'".into()))?;
        let topo = Topology::from_edge_list(&read_text(path)?)?;
        if topo.n() != cfg.agents {
            return Err(HarnessError::Config(format!("edge list has {} nodes but agents = {}", topo.n(), cfg.agents)));
        }
        return Ok(topo);
    }
    Ok(build_topology(t.kind, cfg.agents, t.ratio, derive_seed(cfg.seed, Stream::Topology))?)
}

fn load_samples(data: &DataSource, seed: u64) -> Result<SampleSet, HarnessError> {
    match data {
        DataSource::Libsvm { path, dim } => {
            if !path.exists() {
                return Err(HarnessError::MissingDataset { path: path.clone() });
            }
            Ok(parse_libsvm(path, *dim)?)
        }
        DataSource::Synthetic { dim, samples } => Ok(synthetic_logistic(*samples, *dim, derive_seed(seed, Stream::Data))),
    }
}

fn build_ensemble(cfg: &ExperimentConfig) -> Result<ObjectiveEnsemble, HarnessError> {
    let n = cfg.agents;
    let obj_seed = derive_seed(cfg.seed, Stream::Objective);
    let part_seed = derive_seed(cfg.seed, Stream::Partition);
    let ens = match &cfg.objective {
        ObjectiveSpec::Quadratic { dim, taus } => make_quadratic_ensemble(n, *dim, taus, obj_seed)?,
        ObjectiveSpec::QuadraticScenario { dim, scenario } => make_quadratic_ensemble(n, *dim, &scenario.taus(n), obj_seed)?,
        ObjectiveSpec::Logistic { data, samples_per_agent, rho, standardize_scope }
        | ObjectiveSpec::Ridge { data, samples_per_agent, rho, standardize_scope } => {
            let samples = load_samples(data, cfg.seed)?;
            let m = samples_per_agent.unwrap_or(samples.len() / n);
            let part = partition_uniform(&samples, n, m, part_seed)?;
            if matches!(cfg.objective, ObjectiveSpec::Logistic { .. }) {
                logistic_ensemble(&samples, &part, *rho, *standardize_scope)?
            } else {
                ridge_ensemble(&samples, &part, *rho, *standardize_scope)?
            }
        }
        ObjectiveSpec::File { path } => {
            let file: EnsembleFile =
                serde_json::from_str(&read_text(path)?).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
            ObjectiveEnsemble::from_file(&file)?
        }
    };
    if ens.n() != n {
        return Err(HarnessError::Config(format!("objective has {} agents but agents = {n}", ens.n())));
    }
    Ok(ens)
}

/// Saved minimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFile {
    pub x_star: Vec<f64>,
    /// `‖Σ_i ∇f_i(x*)‖`
    pub gradient_norm: f64,
    pub method: String,
}

pub fn solve_reference(ens: &ObjectiveEnsemble) -> Result<ReferenceFile, HarnessError> {
    let x = reference_minimizer(ens, REFERENCE_TOL)?;
    let method = if ens.closed_form_minimizer().is_some() { "linear-solve" } else { "adgd" };
    Ok(ReferenceFile { gradient_norm: ens.gradient(&x).norm(), x_star: x.iter().copied().collect(), method: method.into() })
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<Problem, HarnessError> {
    cfg.validate()?;
    let topology = build_topology_from(cfg)?;
    let mixing = metropolis_weights(&topology)?;
    let ensemble = build_ensemble(cfg)?;
    let x_star = match &cfg.reference {
        Some(path) => {
            let r: ReferenceFile = serde_json::from_str(&read_text(path)?)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
            if r.x_star.len() != ensemble.dim() {
                return Err(HarnessError::Config(format!(
                    "reference has dimension {} but the objective has {}",
                    r.x_star.len(),
                    ensemble.dim()
                )));
            }
            DVector::from_vec(r.x_star)
        }
        None => reference_minimizer(&ensemble, REFERENCE_TOL)?,
    };
    let smoothness = ensemble.global_smoothness().ok_or_else(|| HarnessError::Config("no smoothness constant".into()))?;
    let strong_convexity =
        ensemble.global_strong_convexity().ok_or_else(|| HarnessError::Config("no strong convexity constant".into()))?;
    Ok(Problem { topology, mixing, ensemble, x_star, smoothness, strong_convexity })
}

pub fn execution_for(threads: Option<usize>) -> Execution {
    threads.map_or(Execution::Sequential, Execution::Threads)
}

/// Runs `algorithm` on an already built problem.
pub fn run_on_problem(
    problem: &Problem,
    algorithm: &AlgorithmSpec,
    budget: &Budget,
    execution: Execution,
) -> Result<RunTrace, HarnessError> {
    let opts = RunOptions {
        max_iters: budget.max_iters,
        tol: budget.tol,
        x0: InitialPoint::Zero,
        variant: algorithm.variant,
        execution,
    };
    let trace = match algorithm.engine {
        Engine::Decentralized => {
            run_decentralized(&problem.ensemble, &problem.mixing, &algorithm.stepsize, &opts, &problem.x_star)?
        }
        Engine::Centralized => run_centralized(&problem.ensemble, &algorithm.stepsize, &opts, &problem.x_star)?,
    };
    Ok(trace)
}

/// JSON sidecar of a trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub converged: bool,
    pub status: RunStatus,
    pub iterations: usize,
    /// Absent when the last residual is not finite.
    pub final_residual: Option<f64>,
    pub max_delta_alpha: Option<f64>,
    pub wall_secs: f64,
    pub lambda: f64,
    pub smoothness: f64,
    pub strong_convexity: f64,
    pub trace_file: String,
    pub trace_sha256: String,
    pub version: String,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn run_metadata(cfg: &ExperimentConfig, problem: &Problem, trace: &RunTrace, trace_file: &str) -> RunMetadata {
    RunMetadata {
        config: cfg.clone(),
        seed: cfg.seed,
        converged: trace.status.converged(),
        status: trace.status,
        iterations: trace.iterations(),
        final_residual: finite(trace.final_residual()),
        max_delta_alpha: finite(trace.max_delta_alpha()),
        wall_secs: trace.wall_secs,
        lambda: problem.mixing.lambda(),
        smoothness: problem.smoothness,
        strong_convexity: problem.strong_convexity,
        trace_file: trace_file.to_string(),
        trace_sha256: sha256_hex(trace.to_csv().as_bytes()),
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

/// `<stem>.json` next to `<stem>.csv`.
pub fn metadata_path(trace_path: &Path) -> PathBuf {
    trace_path.with_extension("json")
}

/// Writes the CSV and its metadata sidecar.
pub fn write_run_artifacts(trace_path: &Path, trace: &RunTrace, meta: &RunMetadata) -> Result<(), HarnessError> {
    write_text(trace_path, &trace.to_csv())?;
    write_text(&metadata_path(trace_path), &serde_json::to_string_pretty(meta).expect("metadata serializes"))
}

/// Reloads a sidecar, checks the CSV hash and that the CSV's last row
/// agrees with the recorded iteration count and residual.
pub fn verify_run_artifacts(meta_path: &Path) -> Result<RunMetadata, HarnessError> {
    let meta: RunMetadata = serde_json::from_str(&read_text(meta_path)?)
        .map_err(|e| HarnessError::Artifact(format!("{}: {e}", meta_path.display())))?;
    let csv_path = meta_path.parent().unwrap_or(Path::new(".")).join(&meta.trace_file);
    let csv = read_text(&csv_path)?;
    let hash = sha256_hex(csv.as_bytes());
    if hash != meta.trace_sha256 {
        return Err(HarnessError::Artifact(format!("{} hash {hash} != recorded {}", csv_path.display(), meta.trace_sha256)));
    }
    let rows = parse_trace_csv(&csv).map_err(HarnessError::Artifact)?;
    let last = rows.last().ok_or_else(|| HarnessError::Artifact("empty trace".into()))?;
    if last.k != meta.iterations {
        return Err(HarnessError::Artifact(format!("trace ends at k={} but metadata says {}", last.k, meta.iterations)));
    }
    if let Some(r) = meta.final_residual {
        if r.to_bits() != last.residual.to_bits() {
            return Err(HarnessError::Artifact(format!("final residual {} != {}", last.residual, r)));
        }
    }
    Ok(meta)
}

/// A run's result summary.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub problem: Problem,
    pub trace: RunTrace,
    pub metadata: RunMetadata,
}

/// Builds the problem, runs it and, when `output.trace` is set, writes the
/// artifacts. Nothing is written if the problem cannot be built.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, HarnessError> {
    let problem = build_problem(cfg)?;
    let trace = run_on_problem(&problem, &cfg.algorithm, &cfg.budget, execution_for(cfg.threads))?;
    let name = cfg
        .output
        .trace
        .as_ref()
        .and_then(|p| p.file_name())
        .map_or_else(|| "trace.csv".to_string(), |f| f.to_string_lossy().into_owned());
    let metadata = run_metadata(cfg, &problem, &trace, &name);
    if let Some(path) = &cfg.output.trace {
        write_run_artifacts(path, &trace, &metadata)?;
    }
    Ok(RunOutcome { problem, trace, metadata })
}

/// `2^k / L` for `k = −6..=1`.
pub fn default_alpha_grid(l: f64) -> Vec<f64> {
    (-6..=1).map(|k| 2f64.powi(k) / l).collect()
}

pub fn iterations_to_thresholds(trace: &RunTrace) -> Vec<Option<usize>> {
    THRESHOLDS.iter().map(|&t| trace.iterations_to(t)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub alpha: f64,
    pub status: RunStatus,
    /// First iteration at each level of `levels`.
    pub iterations_to: Vec<Option<usize>>,
    pub final_residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    /// Residual levels used for ranking, coarsest first; the last is the
    /// run tolerance.
    pub levels: Vec<f64>,
    pub entries: Vec<GridEntry>,
    /// Index into `entries`.
    pub winner: Option<usize>,
    pub all_diverged: bool,
    pub winner_trace: Option<RunTrace>,
}

impl GridSearchResult {
    pub fn winner_alpha(&self) -> Option<f64> {
        self.winner.map(|i| self.entries[i].alpha)
    }
}

fn ranking_levels(tol: f64) -> Vec<f64> {
    let mut levels: Vec<f64> = THRESHOLDS.iter().copied().filter(|&t| t > tol).collect();
    levels.push(tol);
    levels
}

/// Fixed-stepsize runs over `grid` with `engine`. The winner reaches the
/// finest level any run reaches in the fewest iterations; ties go to the
/// smaller stepsize; runs reaching no level compare by final residual;
/// diverged runs rank last and never win.
pub fn grid_search_gt(
    problem: &Problem,
    engine: Engine,
    variant: crate::algorithms::UpdateVariant,
    budget: &Budget,
    grid: &[f64],
) -> Result<GridSearchResult, HarnessError> {
    if grid.is_empty() {
        return Err(HarnessError::Config("empty stepsize grid".into()));
    }
    let levels = ranking_levels(budget.tol);
    let runs: Vec<(GridEntry, RunTrace)> = grid
        .par_iter()
        .map(|&alpha| {
            let alg = AlgorithmSpec { engine, variant, stepsize: StepsizeConfig::fixed(alpha), gt_grid: None };
            let trace = run_on_problem(problem, &alg, budget, Execution::Sequential)?;
            let entry = GridEntry {
                alpha,
                status: trace.status,
                iterations_to: levels.iter().map(|&t| trace.iterations_to(t)).collect(),
                final_residual: finite(trace.final_residual()),
            };
            Ok((entry, trace))
        })
        .collect::<Result<_, HarnessError>>()?;

    // (diverged, −level, iterations at level, final residual, alpha)
    let key = |e: &GridEntry| {
        let reached = e.iterations_to.iter().rposition(Option::is_some);
        let level = reached.map_or(-1, |i| i as i64);
        let iters = reached.and_then(|i| e.iterations_to[i]).unwrap_or(usize::MAX);
        (e.status.diverged(), -level, iters, e.final_residual.unwrap_or(f64::INFINITY), e.alpha)
    };
    let winner = (0..runs.len())
        .filter(|&i| !runs[i].0.status.diverged())
        .min_by(|&a, &b| {
            let (ka, kb) = (key(&runs[a].0), key(&runs[b].0));
            (ka.0, ka.1, ka.2).cmp(&(kb.0, kb.1, kb.2)).then(ka.3.total_cmp(&kb.3)).then(ka.4.total_cmp(&kb.4))
        });
    let all_diverged = winner.is_none();
    let mut winner_trace = None;
    let mut entries = Vec::with_capacity(runs.len());
    for (i, (e, t)) in runs.into_iter().enumerate() {
        if Some(i) == winner {
            winner_trace = Some(t);
        }
        entries.push(e);
    }
    Ok(GridSearchResult { levels, entries, winner, all_diverged, winner_trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::LocalObjective;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig {
            schema: SCHEMA_VERSION,
            seed: 42,
            agents: 6,
            objective: ObjectiveSpec::Quadratic { dim: 4, taus: vec![1.0; 6] },
            topology: TopologySpec { kind: TopologyKind::Random, ratio: Some(0.6), path: None },
            algorithm: AlgorithmSpec::default(),
            budget: Budget { max_iters: 20_000, tol: 1e-8 },
            threads: None,
            reference: None,
            output: OutputSpec::default(),
        }
    }

    #[test]
    fn run_converges_and_artifacts_verify() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg();
        c.output.trace = Some(dir.path().join("run.csv"));
        let out = run_experiment(&c).unwrap();
        assert!(out.trace.status.converged());
        let meta = verify_run_artifacts(&dir.path().join("run.json")).unwrap();
        assert_eq!(meta, out.metadata);
        std::fs::write(dir.path().join("run.csv"), "tampered").unwrap();
        assert!(matches!(verify_run_artifacts(&dir.path().join("run.json")), Err(HarnessError::Artifact(_))));
    }

    #[test]
    fn missing_dataset_is_a_config_error() {
        let mut c = cfg();
        c.objective = ObjectiveSpec::Logistic {
            data: DataSource::Libsvm { path: "/nonexistent/w8a".into(), dim: 300 },
            samples_per_agent: Some(25),
            rho: 0.01,
            standardize_scope: Default::default(),
        };
        let err = build_problem(&c).unwrap_err();
        assert_eq!(err.exit_code(), exit_code::CONFIG);
        assert!(err.record().starts_with("error kind=missing-dataset code=4 msg="));
    }

    #[test]
    fn singleton_grid_wins() {
        let p = build_problem(&cfg()).unwrap();
        let r = grid_search_gt(&p, Engine::Decentralized, Default::default(), &Budget { max_iters: 2000, tol: 1e-8 }, &[0.01])
            .unwrap();
        assert_eq!(r.winner_alpha(), Some(0.01));
    }

    #[test]
    fn huge_grid_all_diverges() {
        let f = LocalObjective::quadratic(DVector::from_vec(vec![1.0, 100.0]), DVector::from_vec(vec![1.0, 1.0])).unwrap();
        let ens = ObjectiveEnsemble::new(vec![f.clone(), f]).unwrap().with_constants().unwrap();
        let topology = build_topology(TopologyKind::Line, 2, None, 0).unwrap();
        let p = Problem {
            mixing: metropolis_weights(&topology).unwrap(),
            topology,
            x_star: reference_minimizer(&ens, REFERENCE_TOL).unwrap(),
            ensemble: ens,
            smoothness: 100.0,
            strong_convexity: 1.0,
        };
        let r = grid_search_gt(&p, Engine::Centralized, Default::default(), &Budget { max_iters: 5000, tol: 1e-8 }, &[1.0, 5.0])
            .unwrap();
        assert!(r.all_diverged);
        assert_eq!(r.winner, None);
        assert!(r.winner_trace.is_none());
    }
}
