//! Sample loading and per-agent data preparation.
//!
//! Reads LIBSVM text into dense matrices, z-scores features, appends an
//! intercept column and splits samples across agents without replacement.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objectives::{LocalObjective, ObjectiveEnsemble, ObjectiveError};
use crate::rng::rng_from_seed;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: feature index {index} outside 1..={dim}")]
    IndexOutOfRange { line: usize, index: usize, dim: usize },
    #[error("no samples")]
    Empty,
    #[error("need {need} samples but only {have} are available")]
    InsufficientSamples { need: usize, have: usize },
    #[error("partition file: {0}")]
    Partition(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Dense samples with labels in `{−1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub features: DMatrix<f64>,
    pub labels: DVector<f64>,
    pub feature_names: Option<Vec<String>>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Rows in the given order.
    pub fn select(&self, rows: &[usize]) -> SampleSet {
        SampleSet {
            features: self.features.select_rows(rows),
            labels: self.labels.select_rows(rows),
            feature_names: self.feature_names.clone(),
        }
    }

    /// LIBSVM text with zero entries omitted and labels written as `+1`/`-1`.
    pub fn to_libsvm(&self) -> String {
        let mut s = String::new();
        for r in 0..self.len() {
            s.push_str(if self.labels[r] > 0.0 { "+1" } else { "-1" });
            for c in 0..self.dim() {
                let v = self.features[(r, c)];
                if v != 0.0 {
                    let _ = write!(s, " {}:{}", c + 1, v);
                }
            }
            s.push('\n');
        }
        s
    }
}

fn parse_label(tok: &str, line: usize) -> Result<f64, DatasetError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| DatasetError::Malformed { line, msg: format!("bad label '{tok}'") })?;
    if v > 0.0 {
        Ok(1.0)
    } else if v == 0.0 || v == -1.0 {
        Ok(-1.0)
    } else {
        Err(DatasetError::Malformed { line, msg: format!("label {v} is not binary") })
    }
}

/// Parses LIBSVM text. Indices are 1-based and strictly increasing; absent
/// entries are zero; labels `0` and `-1` both map to `−1`.
pub fn parse_libsvm_str(text: &str, dim: usize) -> Result<SampleSet, DatasetError> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        labels.push(parse_label(toks.next().unwrap_or_default(), line)?);
        let mut entries = Vec::new();
        let mut last = 0usize;
        for tok in toks {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| DatasetError::Malformed { line, msg: format!("expected idx:val, got '{tok}'") })?;
            let i: usize =
                i.parse().map_err(|_| DatasetError::Malformed { line, msg: format!("bad index '{i}'") })?;
            let v: f64 = v.parse().map_err(|_| DatasetError::Malformed { line, msg: format!("bad value '{v}'") })?;
            if i == 0 || i > dim {
                return Err(DatasetError::IndexOutOfRange { line, index: i, dim });
            }
            if i <= last {
                return Err(DatasetError::Malformed { line, msg: format!("index {i} not increasing") });
            }
            if !v.is_finite() {
                return Err(DatasetError::Malformed { line, msg: format!("non-finite value at index {i}") });
            }
            last = i;
            entries.push((i - 1, v));
        }
        rows.push(entries);
    }
    if rows.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut features = DMatrix::zeros(rows.len(), dim);
    for (r, entries) in rows.iter().enumerate() {
        for &(c, v) in entries {
            features[(r, c)] = v;
        }
    }
    Ok(SampleSet { features, labels: DVector::from_vec(labels), feature_names: None })
}

pub fn parse_libsvm(path: &Path, dim: usize) -> Result<SampleSet, DatasetError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    parse_libsvm_str(&text, dim)
}

/// Z-scores every column with the population standard deviation (divide by
/// `m`), maps zero-variance columns to zero and appends a column of ones.
pub fn standardize_and_intercept(s: &SampleSet) -> SampleSet {
    let (m, d) = (s.len(), s.dim());
    let mut out = DMatrix::zeros(m, d + 1);
    for c in 0..d {
        let col = s.features.column(c);
        let mean = col.sum() / m as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
        let sd = var.sqrt();
        if sd > 0.0 {
            for r in 0..m {
                out[(r, c)] = (col[r] - mean) / sd;
            }
        }
    }
    out.column_mut(d).fill(1.0);
    let feature_names = s.feature_names.as_ref().map(|names| {
        let mut n = names.clone();
        n.push("intercept".into());
        n
    });
    SampleSet { features: out, labels: s.labels.clone(), feature_names }
}

/// Disjoint per-agent row indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub agent_indices: Vec<Vec<usize>>,
}

impl Partition {
    pub fn n(&self) -> usize {
        self.agent_indices.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.agent_indices).expect("index lists serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let agent_indices: Vec<Vec<usize>> =
            serde_json::from_str(text).map_err(|e| DatasetError::Partition(e.to_string()))?;
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = agent_indices.iter().flatten().find(|&&i| !seen.insert(i)) {
            return Err(DatasetError::Partition(format!("index {dup} appears twice")));
        }
        Ok(Partition { agent_indices })
    }
}

/// Draws `n·m_per_agent` distinct rows and deals them out in consecutive
/// blocks of `m_per_agent`, each sorted ascending.
pub fn partition_uniform(
    s: &SampleSet,
    n: usize,
    m_per_agent: usize,
    seed: u64,
) -> Result<Partition, DatasetError> {
    let need = n * m_per_agent;
    if need > s.len() {
        return Err(DatasetError::InsufficientSamples { need, have: s.len() });
    }
    let mut rng = rng_from_seed(seed);
    let picked = index::sample(&mut rng, s.len(), need).into_vec();
    let agent_indices = picked
        .chunks(m_per_agent.max(1))
        .take(n)
        .map(|c| {
            let mut rows = c.to_vec();
            rows.sort_unstable();
            rows
        })
        .collect();
    Ok(Partition { agent_indices })
}

/// Where z-scoring happens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StandardizeScope {
    /// Each agent's local matrix separately.
    #[default]
    Local,
    /// The full sample set, before partitioning.
    Global,
}

impl std::str::FromStr for StandardizeScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local" => Ok(StandardizeScope::Local),
            "global" => Ok(StandardizeScope::Global),
            _ => Err(format!("unknown standardize scope '{s}'")),
        }
    }
}

/// Per-agent prepared matrices (z-scored, with intercept) and labels.
pub fn local_blocks(s: &SampleSet, part: &Partition, scope: StandardizeScope) -> Vec<SampleSet> {
    match scope {
        StandardizeScope::Local => {
            part.agent_indices.iter().map(|rows| standardize_and_intercept(&s.select(rows))).collect()
        }
        StandardizeScope::Global => {
            let all = standardize_and_intercept(s);
            part.agent_indices.iter().map(|rows| all.select(rows)).collect()
        }
    }
}

/// `f_i(x) = Σ_j log(1 + exp(−y_j m_jᵀx)) + (ρ/2)‖x‖²` on each agent's block.
pub fn logistic_ensemble(
    s: &SampleSet,
    part: &Partition,
    rho: f64,
    scope: StandardizeScope,
) -> Result<ObjectiveEnsemble, DatasetError> {
    let locals = local_blocks(s, part, scope)
        .into_iter()
        .map(|b| LocalObjective::logistic(b.features, b.labels, rho))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ObjectiveEnsemble::new(locals)?.with_constants()?)
}

/// `f_i(x) = ‖A_i x − b_i‖² + ρ‖x‖²` with the labels as targets.
pub fn ridge_ensemble(
    s: &SampleSet,
    part: &Partition,
    rho: f64,
    scope: StandardizeScope,
) -> Result<ObjectiveEnsemble, DatasetError> {
    let locals = local_blocks(s, part, scope)
        .into_iter()
        .map(|b| LocalObjective::ridge(b.features, b.labels, rho))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ObjectiveEnsemble::new(locals)?.with_constants()?)
}

/// Gaussian features with labels drawn from a logistic model around a
/// random weight vector. Stands in for real data at small scale.
pub fn synthetic_logistic(m: usize, dim: usize, seed: u64) -> SampleSet {
    let mut rng = rng_from_seed(seed);
    let truth: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut features = DMatrix::zeros(m, dim);
    let mut labels = DVector::zeros(m);
    for r in 0..m {
        let mut margin = 0.0;
        for c in 0..dim {
            let v: f64 = rng.sample(StandardNormal);
            features[(r, c)] = v;
            margin += v * truth[c];
        }
        let u: f64 = rng.random();
        labels[r] = if u < crate::objectives::sigmoid(margin) { 1.0 } else { -1.0 };
    }
    SampleSet { features, labels, feature_names: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let s = parse_libsvm_str("+1 3:0.5\n", 4).unwrap();
        assert_eq!(s.features.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 0.5, 0.0]);
        assert_eq!(s.labels[0], 1.0);
        let s = parse_libsvm_str("0 1:2\n", 2).unwrap();
        assert_eq!(s.features.row(0).iter().copied().collect::<Vec<_>>(), vec![2.0, 0.0]);
        assert_eq!(s.labels[0], -1.0);
    }

    #[test]
    fn parse_errors_name_lines() {
        match parse_libsvm_str("+1 1:1\n-1 2:1 1:3\n", 3) {
            Err(DatasetError::Malformed { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_libsvm_str("+1 5:1\n", 3) {
            Err(DatasetError::IndexOutOfRange { line: 1, index: 5, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_libsvm_str("+1 0:1\n", 3), Err(DatasetError::IndexOutOfRange { .. })));
        assert!(matches!(parse_libsvm_str("+1 1-1\n", 3), Err(DatasetError::Malformed { .. })));
        assert!(matches!(parse_libsvm_str("\n\n", 3), Err(DatasetError::Empty)));
    }

    #[test]
    fn standardize_examples() {
        let s = SampleSet {
            features: DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 3.0, 5.0, 2.0, 5.0]),
            labels: DVector::from_vec(vec![1.0, -1.0, 1.0]),
            feature_names: None,
        };
        let t = standardize_and_intercept(&s);
        assert_eq!(t.dim(), 3);
        assert_eq!(t.features.column(1).iter().copied().collect::<Vec<_>>(), vec![0.0; 3]);
        assert_eq!(t.features.column(2).iter().copied().collect::<Vec<_>>(), vec![1.0; 3]);
        let two = SampleSet {
            features: DMatrix::from_row_slice(2, 1, &[1.0, 3.0]),
            labels: DVector::from_vec(vec![1.0, -1.0]),
            feature_names: None,
        };
        let t = standardize_and_intercept(&two);
        assert_eq!(t.features[(0, 0)], -1.0);
        assert_eq!(t.features[(1, 0)], 1.0);
    }

    #[test]
    fn partition_shapes() {
        let s = synthetic_logistic(50, 3, 1);
        let p = partition_uniform(&s, 4, 10, 42).unwrap();
        assert_eq!(p.n(), 4);
        assert!(p.agent_indices.iter().all(|l| l.len() == 10));
        assert_eq!(p, partition_uniform(&s, 4, 10, 42).unwrap());
        assert_eq!(Partition::from_json(&p.to_json()).unwrap(), p);
        assert!(matches!(partition_uniform(&s, 6, 10, 42), Err(DatasetError::InsufficientSamples { .. })));
        let mut whole = partition_uniform(&s, 1, 50, 3).unwrap().agent_indices.remove(0);
        whole.sort_unstable();
        assert_eq!(whole, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn libsvm_round_trip() {
        let s = synthetic_logistic(12, 5, 9);
        let back = parse_libsvm_str(&s.to_libsvm(), 5).unwrap();
        assert_eq!(back, s);
    }
}
