//! Communication topologies, Metropolis mixing matrices and their spectral
//! diagnostics.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, EigenError};
use crate::rng::rng_from_seed;

/// Number of sub-seeded attempts for a connected random graph.
pub const MAX_RANDOM_ATTEMPTS: u64 = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("a topology needs at least 2 agents, got {0}")]
    TooFewAgents(usize),
    #[error("ladder topology needs an even agent count, got {0}")]
    OddLadder(usize),
    #[error("connectivity ratio {0} outside (0, 1]")]
    BadRatio(f64),
    #[error("connectivity ratio is required for random graphs and not accepted otherwise")]
    RatioMismatch,
    #[error("ratio {ratio} gives {edges} edges, fewer than the {needed} needed to connect {n} agents")]
    RatioTooLow { ratio: f64, n: usize, edges: usize, needed: usize },
    #[error("no connected sample after {0} attempts")]
    NoConnectedSample(u64),
    #[error("topology is not connected")]
    Disconnected,
    #[error("invalid edge ({0}, {1})")]
    BadEdge(usize, usize),
    #[error("edge list parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("mixing matrix shape {rows}x{cols} does not match {n} agents")]
    Shape { rows: usize, cols: usize, n: usize },
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Star,
    Cycle,
    Line,
    Ladder,
    Random,
    /// Loaded from an edge list rather than generated.
    Custom,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TopologyKind::Star => "star",
            TopologyKind::Cycle => "cycle",
            TopologyKind::Line => "line",
            TopologyKind::Ladder => "ladder",
            TopologyKind::Random => "random",
            TopologyKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl FromStr for TopologyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "star" => Ok(TopologyKind::Star),
            "cycle" => Ok(TopologyKind::Cycle),
            "line" => Ok(TopologyKind::Line),
            "ladder" => Ok(TopologyKind::Ladder),
            "random" => Ok(TopologyKind::Random),
            "custom" => Ok(TopologyKind::Custom),
            other => Err(format!("unknown topology kind `{other}`")),
        }
    }
}

/// An undirected connected graph on agents `0..n`.
///
/// Edges are stored once as `(i, j)` with `i < j`, sorted. Self links are
/// implicit and never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    n: usize,
    edges: Vec<(usize, usize)>,
    kind: TopologyKind,
}

impl Topology {
    /// Builds a topology from an explicit edge set, normalizing orientation
    /// and rejecting self loops, out-of-range endpoints and disconnected
    /// graphs.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        kind: TopologyKind,
    ) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewAgents(n));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j || i >= n || j >= n {
                return Err(GraphError::BadEdge(i, j));
            }
            set.insert((i.min(j), i.max(j)));
        }
        let t = Topology { n, edges: set.into_iter().collect(), kind };
        if !t.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(i, j) in &self.edges {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    /// Neighbor lists excluding self, ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        edges_connected(self.n, &self.edges)
    }

    /// Edge-list text: `n m` on the first line, then one `i j` per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.edges.len());
        for (i, j) in &self.edges {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    /// Parses the edge-list format. The result has kind [`TopologyKind::Custom`].
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or(GraphError::Parse { line: 1, msg: "empty input".into() })?;
        let (n, m) = parse_pair(hline, header)?;
        let mut edges = Vec::with_capacity(m);
        for (line, l) in lines {
            edges.push(parse_pair(line, l)?);
        }
        if edges.len() != m {
            return Err(GraphError::Parse {
                line: hline,
                msg: format!("header announces {m} edges, found {}", edges.len()),
            });
        }
        Topology::from_edges(n, edges, TopologyKind::Custom)
    }
}

fn parse_pair(line: usize, l: &str) -> Result<(usize, usize), GraphError> {
    let mut it = l.split_whitespace();
    let mut next = || -> Result<usize, GraphError> {
        it.next()
            .ok_or_else(|| GraphError::Parse { line, msg: "expected two integers".into() })?
            .parse()
            .map_err(|e| GraphError::Parse { line, msg: format!("{e}") })
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(GraphError::Parse { line, msg: "trailing tokens".into() });
    }
    Ok((a, b))
}

fn edges_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

/// Edges a random graph on `n` agents gets at connectivity `ratio`.
pub fn random_edge_count(n: usize, ratio: f64) -> usize {
    let total = n * (n - 1) / 2;
    (ratio * total as f64).round() as usize
}

/// Unordered pair with lexicographic rank `r` among all pairs `i < j` of `0..n`.
fn unrank_pair(n: usize, mut r: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if r < row {
            return (i, i + 1 + r);
        }
        r -= row;
        i += 1;
    }
}

/// Builds one of the experiment topologies.
///
/// Random graphs draw `round(ratio · n(n−1)/2)` distinct edges uniformly
/// without replacement from the lexicographically ranked pair list. Attempt
/// `t` (starting at 0) seeds its generator with `seed + t`; the first
/// connected sample is returned.
pub fn build_topology(
    kind: TopologyKind,
    n: usize,
    connectivity_ratio: Option<f64>,
    seed: u64,
) -> Result<Topology, GraphError> {
    if n < 2 {
        return Err(GraphError::TooFewAgents(n));
    }
    if connectivity_ratio.is_some() != (kind == TopologyKind::Random) {
        return Err(GraphError::RatioMismatch);
    }
    let edges: Vec<(usize, usize)> = match kind {
        TopologyKind::Star => (1..n).map(|j| (0, j)).collect(),
        TopologyKind::Cycle => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        TopologyKind::Line => (0..n - 1).map(|i| (i, i + 1)).collect(),
        TopologyKind::Ladder => {
            if n % 2 != 0 {
                return Err(GraphError::OddLadder(n));
            }
            let h = n / 2;
            let mut e = Vec::new();
            for i in 0..h {
                if i + 1 < h {
                    e.push((i, i + 1));
                    e.push((h + i, h + i + 1));
                }
                e.push((i, h + i));
            }
            e
        }
        TopologyKind::Random => {
            let ratio = connectivity_ratio.expect("checked above");
            return random_topology(n, ratio, seed);
        }
        TopologyKind::Custom => return Err(GraphError::RatioMismatch),
    };
    Topology::from_edges(n, edges, kind)
}

fn random_topology(n: usize, ratio: f64, seed: u64) -> Result<Topology, GraphError> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(GraphError::BadRatio(ratio));
    }
    let total = n * (n - 1) / 2;
    let m = random_edge_count(n, ratio);
    if m < n - 1 {
        return Err(GraphError::RatioTooLow { ratio, n, edges: m, needed: n - 1 });
    }
    for attempt in 0..MAX_RANDOM_ATTEMPTS {
        let mut rng = rng_from_seed(seed.wrapping_add(attempt));
        let mut edges: Vec<(usize, usize)> = index::sample(&mut rng, total, m)
            .into_iter()
            .map(|r| unrank_pair(n, r))
            .collect();
        edges.sort_unstable();
        if edges_connected(n, &edges) {
            return Ok(Topology { n, edges, kind: TopologyKind::Random });
        }
    }
    Err(GraphError::NoConnectedSample(MAX_RANDOM_ATTEMPTS))
}

/// A symmetric doubly-stochastic weight matrix matched to a topology.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    w: DMatrix<f64>,
    lambda: f64,
    /// Per row: `(j, w_ij)` over the closed neighborhood, ascending in `j`.
    rows: Vec<Vec<(usize, f64)>>,
}

impl MixingMatrix {
    /// Wraps an arbitrary weight matrix, computing its spectral quantity.
    pub fn new(w: DMatrix<f64>) -> Result<Self, GraphError> {
        if w.nrows() != w.ncols() {
            return Err(GraphError::Shape { rows: w.nrows(), cols: w.ncols(), n: w.nrows() });
        }
        let lambda = spectral_gap(&w)?;
        let n = w.nrows();
        let rows = (0..n)
            .map(|i| (0..n).filter(|&j| w[(i, j)] != 0.0).map(|j| (j, w[(i, j)])).collect())
            .collect();
        Ok(MixingMatrix { w, lambda, rows })
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// `‖W − 11ᵀ/n‖₂`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)]
    }

    /// Nonzero weights of row `i` in ascending column order. The engines
    /// reduce in exactly this order.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// `n` lines of `n` comma-separated values, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.n();
        let mut s = String::new();
        for i in 0..n {
            let line: Vec<String> = (0..n).map(|j| format!("{:.16e}", self.w[(i, j)])).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, GraphError> {
        let mut data = Vec::new();
        let mut n = None;
        for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let row: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| GraphError::Parse { line: k + 1, msg: e.to_string() })?;
            match n {
                None => n = Some(row.len()),
                Some(c) if c != row.len() => {
                    return Err(GraphError::Parse { line: k + 1, msg: "ragged row".into() })
                }
                _ => {}
            }
            data.extend(row);
        }
        let cols = n.unwrap_or(0);
        let rows = if cols == 0 { 0 } else { data.len() / cols };
        if rows != cols {
            return Err(GraphError::Shape { rows, cols, n: rows });
        }
        MixingMatrix::new(DMatrix::from_row_slice(rows, cols, &data))
    }
}

/// Metropolis–Hastings weights: `w_ij = 1/(1 + max(d_i, d_j))` on edges,
/// with the diagonal absorbing the remainder of each row.
pub fn metropolis_weights(t: &Topology) -> Result<MixingMatrix, GraphError> {
    let n = t.n();
    let d = t.degrees();
    let mut w = DMatrix::<f64>::zeros(n, n);
    for &(i, j) in t.edges() {
        let v = 1.0 / (1.0 + d[i].max(d[j]) as f64);
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..n {
        // sum in ascending column order so row i and column i agree bitwise
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    MixingMatrix::new(w)
}

/// `‖W − 11ᵀ/n‖₂` as the largest eigenvalue magnitude of the deflated
/// symmetric matrix.
pub fn spectral_gap(w: &DMatrix<f64>) -> Result<f64, GraphError> {
    let n = w.nrows();
    if n != w.ncols() {
        return Err(GraphError::Shape { rows: n, cols: w.ncols(), n });
    }
    let avg = 1.0 / n as f64;
    let deflated = w.map(|v| v - avg);
    Ok(linalg::symmetric_spectral_norm(&deflated)?)
}
