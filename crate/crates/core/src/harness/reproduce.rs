//! The three experiment families at desk or full scale.

use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{RunTrace, UpdateVariant};
use crate::datasets::StandardizeScope;
use crate::graph::TopologyKind;
use crate::objectives::QuadraticScenario;
use crate::stepsize::{Policy, StepsizeConfig};

use super::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Logistic regression on six topologies.
    LogisticTopologies,
    /// Quadratics with heterogeneous smoothness.
    QuadraticScenarios,
    /// Ridge regression on cycle and random graphs of two sizes.
    RidgeScaling,
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logistic" | "logistic-topologies" => Ok(Family::LogisticTopologies),
            "quadratic" | "quadratic-scenarios" => Ok(Family::QuadraticScenarios),
            "ridge" | "ridge-scaling" => Ok(Family::RidgeScaling),
            _ => Err(format!("unknown family '{s}' (logistic, quadratic, ridge)")),
        }
    }
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::LogisticTopologies => "logistic-topologies",
            Family::QuadraticScenarios => "quadratic-scenarios",
            Family::RidgeScaling => "ridge-scaling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    /// Small synthetic instances that finish in minutes.
    Desk,
    /// Full-size instances; logistic and ridge need a LIBSVM file.
    Paper,
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            _ => Err(format!("unknown scale '{s}' (desk, paper)")),
        }
    }
}

pub const DESK_MAX_ITERS: usize = 50_000;
pub const DESK_SAMPLES_PER_AGENT: usize = 25;
pub const DESK_SYNTHETIC_DIM: usize = 19;
pub const DESK_SYNTHETIC_SAMPLES: usize = 2_000;
pub const W8A_DIM: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct ReproduceOptions {
    pub seed: u64,
    pub scale: Scale,
    /// LIBSVM file for full-scale logistic and ridge runs.
    pub data_path: Option<PathBuf>,
    pub max_iters: Option<usize>,
    pub tol: f64,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    /// Keep every trace in memory in the returned [`Reproduction`].
    pub keep_traces: bool,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        ReproduceOptions {
            seed: 42,
            scale: Scale::Desk,
            data_path: None,
            max_iters: None,
            tol: 1e-8,
            out_dir: None,
            threads: None,
            keep_traces: false,
        }
    }
}

impl ReproduceOptions {
    fn budget(&self) -> Budget {
        let max_iters = self.max_iters.unwrap_or(match self.scale {
            Scale::Desk => DESK_MAX_ITERS,
            Scale::Paper => crate::algorithms::DEFAULT_MAX_ITERS,
        });
        Budget { max_iters, tol: self.tol }
    }
}

/// One problem instance of a family; `config` holds the AdGT settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    pub label: String,
    pub config: ExperimentConfig,
}

fn base_config(seed: u64, agents: usize, objective: ObjectiveSpec, kind: TopologyKind, ratio: Option<f64>, budget: Budget) -> ExperimentConfig {
    ExperimentConfig {
        schema: SCHEMA_VERSION,
        seed,
        agents,
        objective,
        topology: TopologySpec { kind, ratio, path: None },
        algorithm: AlgorithmSpec::default(),
        budget,
        threads: None,
        reference: None,
        output: OutputSpec::default(),
    }
}

fn data_source(opts: &ReproduceOptions) -> Result<DataSource, HarnessError> {
    match opts.scale {
        Scale::Desk => Ok(DataSource::Synthetic { dim: DESK_SYNTHETIC_DIM, samples: DESK_SYNTHETIC_SAMPLES }),
        Scale::Paper => {
            let path = opts.data_path.clone().unwrap_or_else(|| PathBuf::from("w8a"));
            if !path.exists() {
                return Err(HarnessError::MissingDataset { path });
            }
            Ok(DataSource::Libsvm { path, dim: W8A_DIM })
        }
    }
}

/// The instances of `family` at the requested scale.
pub fn family_cases(family: Family, opts: &ReproduceOptions) -> Result<Vec<CaseSpec>, HarnessError> {
    let budget = opts.budget();
    let seed = opts.seed;
    let cases = match family {
        Family::LogisticTopologies => {
            let data = data_source(opts)?;
            let objective = ObjectiveSpec::Logistic {
                data,
                samples_per_agent: Some(DESK_SAMPLES_PER_AGENT),
                rho: 0.01,
                standardize_scope: StandardizeScope::Local,
            };
            let graphs: [(&str, TopologyKind, Option<f64>, f64); 6] = [
                ("star", TopologyKind::Star, None, 1.0),
                ("cycle", TopologyKind::Cycle, None, 8.0),
                ("line", TopologyKind::Line, None, 8.0),
                ("ladder", TopologyKind::Ladder, None, 8.0),
                ("random-0.2", TopologyKind::Random, Some(0.2), 1.0),
                ("random-0.35", TopologyKind::Random, Some(0.35), 1.0),
            ];
            graphs
                .iter()
                .map(|&(label, kind, ratio, gamma)| {
                    let mut config = base_config(seed, 16, objective.clone(), kind, ratio, budget);
                    config.algorithm.stepsize = StepsizeConfig::new(Policy::AdGT).with_gamma(gamma);
                    CaseSpec { label: label.into(), config }
                })
                .collect()
        }
        Family::QuadraticScenarios => {
            let (n, p) = match opts.scale {
                Scale::Desk => (20, 10),
                Scale::Paper => (100, 20),
            };
            QuadraticScenario::ALL
                .iter()
                .map(|&scenario| CaseSpec {
                    label: format!("scenario-{}", scenario.label()),
                    config: base_config(
                        seed,
                        n,
                        ObjectiveSpec::QuadraticScenario { dim: p, scenario },
                        TopologyKind::Random,
                        Some(0.35),
                        budget,
                    ),
                })
                .collect()
        }
        Family::RidgeScaling => {
            let data = data_source(opts)?;
            let (samples_per_agent, sizes): (Option<usize>, [(TopologyKind, usize); 4]) = match opts.scale {
                Scale::Desk => (
                    Some(DESK_SAMPLES_PER_AGENT),
                    [(TopologyKind::Cycle, 10), (TopologyKind::Cycle, 25), (TopologyKind::Random, 10), (TopologyKind::Random, 25)],
                ),
                Scale::Paper => (
                    None,
                    [(TopologyKind::Cycle, 10), (TopologyKind::Cycle, 25), (TopologyKind::Random, 25), (TopologyKind::Random, 100)],
                ),
            };
            sizes
                .iter()
                .map(|&(kind, n)| {
                    let ratio = (kind == TopologyKind::Random).then_some(0.35);
                    let objective = ObjectiveSpec::Ridge {
                        data: data.clone(),
                        samples_per_agent,
                        rho: 0.1,
                        standardize_scope: StandardizeScope::Local,
                    };
                    CaseSpec { label: format!("{kind}-{n}"), config: base_config(seed, n, objective, kind, ratio, budget) }
                })
                .collect()
        }
    };
    Ok(cases)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub engine: Engine,
    pub policy: Policy,
    pub gamma: f64,
    /// Stepsize of fixed-step methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub status: RunStatus,
    pub converged: bool,
    pub diverged: bool,
    /// First iteration at each of [`THRESHOLDS`].
    pub iterations_to: Vec<Option<usize>>,
    pub final_residual: Option<f64>,
    pub max_delta_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub label: String,
    pub agents: usize,
    pub topology: TopologyKind,
    pub edges: usize,
    pub lambda: f64,
    pub smoothness: f64,
    pub strong_convexity: f64,
    pub methods: Vec<MethodReport>,
    pub gt_grid: Vec<GridEntry>,
    pub gt_all_diverged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gd_grid: Vec<GridEntry>,
}

impl CaseReport {
    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub family: Family,
    pub scale: Scale,
    pub seed: u64,
    pub thresholds: Vec<f64>,
    pub cases: Vec<CaseReport>,
}

impl ComparisonReport {
    pub fn case(&self, label: &str) -> Option<&CaseReport> {
        self.cases.iter().find(|c| c.label == label)
    }
}

#[derive(Debug, Clone)]
pub struct NamedTrace {
    pub case: String,
    pub method: String,
    pub trace: RunTrace,
}

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub report: ComparisonReport,
    pub traces: Vec<NamedTrace>,
}

struct MethodRun {
    name: String,
    config: ExperimentConfig,
    trace: RunTrace,
}

fn method_config(case: &CaseSpec, engine: Engine, stepsize: StepsizeConfig) -> ExperimentConfig {
    let mut c = case.config.clone();
    c.algorithm = AlgorithmSpec { engine, variant: UpdateVariant::Compact, stepsize, gt_grid: None };
    c
}

fn run_case(
    family: Family,
    case: &CaseSpec,
    opts: &ReproduceOptions,
) -> Result<(CaseReport, Vec<MethodRun>), HarnessError> {
    let problem = build_problem(&case.config)?;
    let budget = case.config.budget;
    let mut runs = Vec::new();
    let single = |name: &str, cfg: ExperimentConfig| -> Result<MethodRun, HarnessError> {
        let trace = run_on_problem(&problem, &cfg.algorithm, &budget, Execution::Sequential)?;
        Ok(MethodRun { name: name.into(), config: cfg, trace })
    };
    runs.push(single("adgt", case.config.clone())?);
    runs.push(single("method-dm", method_config(case, Engine::Decentralized, StepsizeConfig::new(Policy::MethodDM)))?);

    let gt = grid_search_gt(&problem, Engine::Decentralized, UpdateVariant::Compact, &budget, &default_alpha_grid(problem.smoothness))?;
    if let (Some(w), Some(trace)) = (gt.winner, gt.winner_trace.clone()) {
        let alpha = gt.entries[w].alpha;
        runs.push(MethodRun {
            name: "gt".into(),
            config: method_config(case, Engine::Decentralized, StepsizeConfig::fixed(alpha)),
            trace,
        });
        if family == Family::LogisticTopologies {
            // neighbors of the tuned value show the sensitivity to tuning
            for (name, j) in [("gt-smaller", w.checked_sub(1)), ("gt-larger", Some(w + 1))] {
                if let Some(e) = j.and_then(|j| gt.entries.get(j)) {
                    let cfg = method_config(case, Engine::Decentralized, StepsizeConfig::fixed(e.alpha));
                    runs.push(single(name, cfg)?);
                }
            }
        }
    }

    let mut gd_grid = Vec::new();
    if family != Family::LogisticTopologies {
        runs.push(single("adgd", method_config(case, Engine::Centralized, StepsizeConfig::new(Policy::AdGD)))?);
        let gd = grid_search_gt(&problem, Engine::Centralized, UpdateVariant::Compact, &budget, &default_alpha_grid(problem.centralized_smoothness()))?;
        if let (Some(w), Some(trace)) = (gd.winner, gd.winner_trace) {
            runs.push(MethodRun {
                name: "gd".into(),
                config: method_config(case, Engine::Centralized, StepsizeConfig::fixed(gd.entries[w].alpha)),
                trace,
            });
        }
        gd_grid = gd.entries;
    }

    let methods = runs
        .iter()
        .map(|r| MethodReport {
            method: r.name.clone(),
            engine: r.config.algorithm.engine,
            policy: r.config.algorithm.stepsize.policy,
            gamma: r.config.algorithm.stepsize.gamma,
            alpha: (r.config.algorithm.stepsize.policy == Policy::Fixed).then_some(r.config.algorithm.stepsize.alpha0),
            status: r.trace.status,
            converged: r.trace.status.converged(),
            diverged: r.trace.status.diverged(),
            iterations_to: iterations_to_thresholds(&r.trace),
            final_residual: finite(r.trace.final_residual()),
            max_delta_alpha: finite(r.trace.max_delta_alpha()),
            trace_file: opts.out_dir.as_ref().map(|_| format!("{}/{}.csv", case.label, r.name)),
        })
        .collect();

    if let Some(dir) = &opts.out_dir {
        let case_dir = dir.join(family.name()).join(&case.label);
        for r in &runs {
            let file = format!("{}.csv", r.name);
            let meta = run_metadata(&r.config, &problem, &r.trace, &file);
            write_run_artifacts(&case_dir.join(&file), &r.trace, &meta)?;
        }
    }

    let report = CaseReport {
        label: case.label.clone(),
        agents: case.config.agents,
        topology: case.config.topology.kind,
        edges: problem.topology.edges().len(),
        lambda: problem.mixing.lambda(),
        smoothness: problem.smoothness,
        strong_convexity: problem.strong_convexity,
        methods,
        gt_grid: gt.entries,
        gt_all_diverged: gt.all_diverged,
        gd_grid,
    };
    Ok((report, runs))
}

/// Runs every method on every instance of `family`. With `out_dir` set,
/// writes `<family>/<case>/<method>.{csv,json}` and `<family>/report.json`.
pub fn reproduce_experiment(family: Family, opts: &ReproduceOptions) -> Result<Reproduction, HarnessError> {
    let cases = family_cases(family, opts)?;
    let work = || -> Result<Vec<(CaseReport, Vec<MethodRun>)>, HarnessError> {
        cases.par_iter().map(|c| run_case(family, c, opts)).collect()
    };
    let results = match opts.threads {
        None => work()?,
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?
            .install(work)?,
    };
    let mut reports = Vec::with_capacity(results.len());
    let mut traces = Vec::new();
    for (report, runs) in results {
        if opts.keep_traces {
            traces.extend(runs.into_iter().map(|r| NamedTrace { case: report.label.clone(), method: r.name, trace: r.trace }));
        }
        reports.push(report);
    }
    let report = ComparisonReport {
        family,
        scale: opts.scale,
        seed: opts.seed,
        thresholds: THRESHOLDS.to_vec(),
        cases: reports,
    };
    if let Some(dir) = &opts.out_dir {
        write_text(
            &dir.join(family.name()).join("report.json"),
            &serde_json::to_string_pretty(&report).expect("report serializes"),
        )?;
    }
    Ok(Reproduction { report, traces })
}
