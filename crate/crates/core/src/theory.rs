//! Stability constants for heterogeneous stepsizes.
//!
//! Given the mixing contraction `λ`, smoothness `L`, strong convexity `μ`
//! and stepsize dispersion `δ`, this module evaluates the ceiling `D` on
//! the largest stepsize, the matching damping floor `γ_min = 1/(2Dμ)`, and
//! tables of both over `(λ, δ)` grids.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("{name} = {value} is outside {range}")]
    OutOfRange { name: &'static str, value: f64, range: &'static str },
    #[error("mu = {mu} exceeds L = {l}")]
    MuAboveL { mu: f64, l: f64 },
    #[error("bad grid '{0}'")]
    Grid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// `‖W − 11ᵀ/n‖₂`, in `[0, 1)`.
    pub lambda: f64,
    pub l: f64,
    pub mu: f64,
    /// Stepsize dispersion, in `[0, 1)`.
    pub delta_alpha: f64,
    pub alpha_max: f64,
}

impl BoundInputs {
    /// `alpha_max` defaults to `1/(2μ)`, the stepsize ceiling at `γ = 1`.
    pub fn new(lambda: f64, l: f64, mu: f64, delta_alpha: f64) -> Self {
        BoundInputs { lambda, l, mu, delta_alpha, alpha_max: 1.0 / (2.0 * mu) }
    }

    pub fn with_alpha_max(mut self, alpha_max: f64) -> Self {
        self.alpha_max = alpha_max;
        self
    }

    pub fn validate(&self) -> Result<(), TheoryError> {
        let check = |name, value: f64, ok: bool, range| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(TheoryError::OutOfRange { name, value, range })
            }
        };
        check("lambda", self.lambda, (0.0..1.0).contains(&self.lambda), "[0, 1)")?;
        check("L", self.l, self.l > 0.0, "(0, inf)")?;
        check("mu", self.mu, self.mu > 0.0, "(0, inf)")?;
        check("delta_alpha", self.delta_alpha, (0.0..1.0).contains(&self.delta_alpha), "[0, 1)")?;
        check("alpha_max", self.alpha_max, self.alpha_max > 0.0, "(0, inf)")?;
        if self.mu > self.l {
            return Err(TheoryError::MuAboveL { mu: self.mu, l: self.l });
        }
        Ok(())
    }
}

/// `λ̃ = λ + λ L α_max (1 + δ)`.
pub fn tilde_lambda(inp: &BoundInputs) -> f64 {
    inp.lambda + inp.lambda * inp.l * inp.alpha_max * (1.0 + inp.delta_alpha)
}

/// Largest `α_max` with `λ̃ ≤ 1`: `(1 − λ)/(Lλ(1 + δ))`.
pub fn tilde_lambda_cap(lambda: f64, l: f64, delta_alpha: f64) -> f64 {
    (1.0 - lambda) / (l * lambda * (1.0 + delta_alpha))
}

/// Upper limit of the dispersion when every stepsize lies in
/// `[1/(2γL), 1/(2γμ)]`.
pub fn delta_cap(l: f64, mu: f64) -> f64 {
    (l - mu) / (l + mu)
}

/// Coefficients of the quadratic `aα² + bα + c` whose positive root caps
/// the stepsize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abc {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub fn abc_constants(inp: &BoundInputs) -> Abc {
    let (lam, l, d) = (inp.lambda, inp.l, inp.delta_alpha);
    let s2 = std::f64::consts::SQRT_2;
    let a = l * l * lam * (1.0 + d) * ((lam - 1.0) + (2.0 * s2 - 4.0) * lam * d);
    let b = -2.0 * l * lam * (lam + 3.0) * (1.0 + d)
        - 2.0 * s2 * l * (1.0 - lam) * d * (lam + 1.0)
        - l * lam * d * d * ((4.0 - 2.0 * s2) * lam + (4.0 + 2.0 * s2))
        - l * (1.0 - lam) * (1.0 - lam);
    let c = 2.0 * (1.0 - lam) * (1.0 - lam);
    Abc { a, b, c }
}

/// Both candidates for the ceiling and their minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ceiling {
    /// `(1 − λ)²/((1 + δ)Lλ(λ + 3))`; infinite at `λ = 0`.
    pub lemma_bound: f64,
    /// Positive root of `aα² + bα + c`.
    pub root_bound: f64,
    pub d: f64,
}

impl Ceiling {
    pub fn lemma_binds(&self) -> bool {
        self.lemma_bound <= self.root_bound
    }
}

/// Positive root of `aα² + bα + c` for `a < 0`, `b < 0`, `c > 0`.
///
/// `(−b − √disc)/(2a)` and `2c/(−b + √disc)` are the same number; the
/// second has no subtraction of close values when `|4ac| ≪ b²`.
pub fn positive_root(abc: &Abc) -> f64 {
    let disc = abc.b * abc.b - 4.0 * abc.a * abc.c;
    2.0 * abc.c / (-abc.b + disc.sqrt())
}

pub fn ceiling(inp: &BoundInputs) -> Ceiling {
    let (lam, l, d) = (inp.lambda, inp.l, inp.delta_alpha);
    let lemma_bound = if lam == 0.0 {
        f64::INFINITY
    } else {
        (1.0 - lam) * (1.0 - lam) / ((1.0 + d) * l * lam * (lam + 3.0))
    };
    let root_bound = positive_root(&abc_constants(inp));
    Ceiling { lemma_bound, root_bound, d: lemma_bound.min(root_bound) }
}

#[allow(non_snake_case)]
pub fn ceiling_D(inp: &BoundInputs) -> f64 {
    ceiling(inp).d
}

/// `1/(2Dμ)`.
pub fn gamma_min(d: f64, mu: f64) -> f64 {
    1.0 / (2.0 * d * mu)
}

/// `[(μ/L)·D, D]`.
pub fn admissible_interval(d: f64, l: f64, mu: f64) -> (f64, f64) {
    (mu / l * d, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub delta_alpha: f64,
    pub d: f64,
    pub gamma_min: f64,
}

pub const SWEEP_CSV_HEADER: &str = "lambda,delta_alpha,D,gamma_min";

fn sorted_grid(grid: &[f64]) -> Vec<f64> {
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// `D` and `γ_min` over every `(λ, δ)` pair, ordered by `λ` then `δ`.
pub fn sweep_fig2(l: f64, mu: f64, lambda_grid: &[f64], delta_grid: &[f64]) -> Result<Vec<SweepRow>, TheoryError> {
    let lams = sorted_grid(lambda_grid);
    let deltas = sorted_grid(delta_grid);
    if lams.is_empty() || deltas.is_empty() {
        return Err(TheoryError::Grid("empty grid".into()));
    }
    let mut points = Vec::with_capacity(lams.len() * deltas.len());
    for &lambda in &lams {
        for &delta in &deltas {
            let inp = BoundInputs::new(lambda, l, mu, delta);
            inp.validate()?;
            points.push(inp);
        }
    }
    Ok(points
        .par_iter()
        .map(|inp| {
            let d = ceiling_D(inp);
            SweepRow { lambda: inp.lambda, delta_alpha: inp.delta_alpha, d, gamma_min: gamma_min(d, mu) }
        })
        .collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{:e},{:e},{:e},{:e}", r.lambda, r.delta_alpha, r.d, r.gamma_min);
    }
    s
}

/// Grid syntax: `0.1,0.5,0.9` or `start:stop:count` (inclusive, evenly
/// spaced).
pub fn parse_grid(text: &str) -> Result<Vec<f64>, TheoryError> {
    let bad = || TheoryError::Grid(text.to_string());
    let text = text.trim();
    if text.is_empty() {
        return Err(bad());
    }
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        return match n {
            0 => Err(bad()),
            1 => Ok(vec![a]),
            _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
        };
    }
    text.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect()
}
