//! Versioned JSON experiment configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::algorithms::{UpdateVariant, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::datasets::StandardizeScope;
use crate::graph::TopologyKind;
use crate::objectives::QuadraticScenario;
use crate::stepsize::{Policy, StepsizeConfig};

use super::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

/// Where samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    /// LIBSVM file with `dim` raw features.
    Libsvm { path: PathBuf, dim: usize },
    /// Gaussian features with logistic labels; `samples` total rows.
    Synthetic { dim: usize, samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObjectiveSpec {
    /// Diagonal quadratics with one `τ` per agent.
    Quadratic { dim: usize, taus: Vec<f64> },
    /// Diagonal quadratics with the `τ` layout of a named scenario.
    QuadraticScenario { dim: usize, scenario: QuadraticScenario },
    Logistic {
        data: DataSource,
        /// Rows per agent; absent splits every sample evenly.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples_per_agent: Option<usize>,
        #[serde(default = "default_logistic_rho")]
        rho: f64,
        #[serde(default)]
        standardize_scope: StandardizeScope,
    },
    Ridge {
        data: DataSource,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples_per_agent: Option<usize>,
        #[serde(default = "default_ridge_rho")]
        rho: f64,
        #[serde(default)]
        standardize_scope: StandardizeScope,
    },
    /// A saved ensemble.
    File { path: PathBuf },
}

fn default_logistic_rho() -> f64 {
    0.01
}

fn default_ridge_rho() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    /// Edge ratio, random graphs only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// Edge-list file, custom graphs only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    #[default]
    Decentralized,
    Centralized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    #[serde(default)]
    pub engine: Engine,
    #[serde(default)]
    pub variant: UpdateVariant,
    pub stepsize: StepsizeConfig,
    /// Fixed stepsizes tried by `grid-search`; defaults to `2^k/L`,
    /// `k = −6..=1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_grid: Option<Vec<f64>>,
}

impl Default for AlgorithmSpec {
    fn default() -> Self {
        AlgorithmSpec {
            engine: Engine::Decentralized,
            variant: UpdateVariant::Compact,
            stepsize: StepsizeConfig::new(Policy::AdGT),
            gt_grid: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_iters: DEFAULT_MAX_ITERS, tol: DEFAULT_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputSpec {
    /// Trace CSV; the metadata sidecar goes next to it with a `.json`
    /// extension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub agents: usize,
    pub objective: ObjectiveSpec,
    pub topology: TopologySpec,
    #[serde(default)]
    pub algorithm: AlgorithmSpec,
    #[serde(default)]
    pub budget: Budget,
    /// Worker threads for the per-agent step; absent means sequential.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Saved minimizer to use instead of solving for one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<PathBuf>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_seed() -> u64 {
    42
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.schema != SCHEMA_VERSION {
            return bad(format!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema));
        }
        if self.agents == 0 {
            return bad("agents must be positive".into());
        }
        if let Err(m) = self.algorithm.stepsize.validate() {
            return bad(m);
        }
        if !(self.budget.tol >= 0.0) {
            return bad(format!("tol must be nonnegative, got {}", self.budget.tol));
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        if let Some(g) = &self.algorithm.gt_grid {
            if g.is_empty() || g.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
                return bad("gt_grid must be a nonempty list of positive stepsizes".into());
            }
        }
        match (&self.topology.kind, self.topology.ratio, &self.topology.path) {
            (TopologyKind::Random, None, _) => return bad("random topology needs 'ratio'".into()),
            (TopologyKind::Custom, _, None) => return bad("custom topology needs 'path'".into()),
            _ => {}
        }
        match &self.objective {
            ObjectiveSpec::Quadratic { taus, .. } if taus.len() != self.agents => {
                bad(format!("{} taus for {} agents", taus.len(), self.agents))
            }
            ObjectiveSpec::Logistic { samples_per_agent: Some(0), .. } | ObjectiveSpec::Ridge { samples_per_agent: Some(0), .. } => {
                bad("samples_per_agent must be positive".into())
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> &'static str {
        r#"{
            "schema": 1,
            "seed": 42,
            "agents": 20,
            "objective": {"kind": "quadratic-scenario", "dim": 10, "scenario": "iv"},
            "topology": {"kind": "random", "ratio": 0.35},
            "algorithm": {"stepsize": {"policy": "adgt", "gamma": 1.0}},
            "budget": {"max_iters": 50000, "tol": 1e-8}
        }"#
    }

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_json(sample()).unwrap();
        assert_eq!(cfg.agents, 20);
        assert_eq!(cfg.algorithm.stepsize.alpha0, 1e-3);
        assert_eq!(cfg.algorithm.engine, Engine::Decentralized);
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        let wrong_schema = sample().replace("\"schema\": 1", "\"schema\": 7");
        assert!(matches!(ExperimentConfig::from_json(&wrong_schema), Err(HarnessError::Config(_))));
        let no_ratio = sample().replace(", \"ratio\": 0.35", "");
        assert!(ExperimentConfig::from_json(&no_ratio).is_err());
        let bad_gamma = sample().replace("\"gamma\": 1.0", "\"gamma\": -1.0");
        assert!(ExperimentConfig::from_json(&bad_gamma).is_err());
        assert!(ExperimentConfig::from_json("{").is_err());
    }
}
