//! Local cost functions of the three experiment families and their
//! ensembles.
//!
//! * quadratic: `½ xᵀ diag(a) x + bᵀx`
//! * logistic: `Σ_j log(1 + exp(−y_j m_jᵀx)) + (ρ/2)‖x‖²`
//! * ridge: `‖Ax − b‖² + ρ‖x‖²`

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, EigenError};
use crate::rng::rng_from_seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("quadratic curvature entries must be strictly positive")]
    NonPositiveCurvature,
    #[error("labels must be -1 or +1, found {0}")]
    BadLabel(f64),
    #[error("regularizer must be {0}")]
    BadRegularizer(&'static str),
    #[error("condition parameter tau must be a nonnegative integer, got {0}")]
    BadTau(f64),
    #[error("dimension p must be even and positive, got {0}")]
    OddDimension(usize),
    #[error("expected {expected} tau values, got {got}")]
    TauCount { expected: usize, got: usize },
    #[error("ensemble is empty")]
    Empty,
    #[error("gradient is not finite")]
    NonFiniteGradient,
    #[error("reference solve did not reach gradient norm {tol:e} within {iters} iterations (last {last:e})")]
    ReferenceNotReached { tol: f64, iters: usize, last: f64 },
    #[error("linear system for the reference point is not positive definite")]
    Singular,
    #[error("cannot read ensemble file: {0}")]
    Format(String),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// `log(1 + e^{-z})` without overflow.
pub fn log1p_exp_neg(z: f64) -> f64 {
    (-z.abs()).exp().ln_1p() + (-z).max(0.0)
}

/// Logistic sigmoid `1/(1+e^{-t})` evaluated on the branch that never
/// overflows.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocalObjective {
    Quadratic { diag: DVector<f64>, b: DVector<f64> },
    Logistic { features: DMatrix<f64>, labels: DVector<f64>, rho: f64 },
    Ridge { a: DMatrix<f64>, b: DVector<f64>, rho: f64 },
}

impl LocalObjective {
    pub fn quadratic(diag: DVector<f64>, b: DVector<f64>) -> Result<Self, ObjectiveError> {
        if diag.len() != b.len() {
            return Err(ObjectiveError::Dimension { expected: diag.len(), got: b.len() });
        }
        if diag.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(ObjectiveError::NonPositiveCurvature);
        }
        Ok(LocalObjective::Quadratic { diag, b })
    }

    pub fn logistic(features: DMatrix<f64>, labels: DVector<f64>, rho: f64) -> Result<Self, ObjectiveError> {
        if features.nrows() != labels.len() {
            return Err(ObjectiveError::Dimension { expected: features.nrows(), got: labels.len() });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(ObjectiveError::BadLabel(bad));
        }
        if !(rho >= 0.0) {
            return Err(ObjectiveError::BadRegularizer("nonnegative"));
        }
        Ok(LocalObjective::Logistic { features, labels, rho })
    }

    pub fn ridge(a: DMatrix<f64>, b: DVector<f64>, rho: f64) -> Result<Self, ObjectiveError> {
        if a.nrows() != b.len() {
            return Err(ObjectiveError::Dimension { expected: a.nrows(), got: b.len() });
        }
        if !(rho > 0.0) {
            return Err(ObjectiveError::BadRegularizer("positive"));
        }
        Ok(LocalObjective::Ridge { a, b, rho })
    }

    pub fn dim(&self) -> usize {
        match self {
            LocalObjective::Quadratic { diag, .. } => diag.len(),
            LocalObjective::Logistic { features, .. } => features.ncols(),
            LocalObjective::Ridge { a, .. } => a.ncols(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LocalObjective::Quadratic { .. } => "quadratic",
            LocalObjective::Logistic { .. } => "logistic",
            LocalObjective::Ridge { .. } => "ridge",
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            LocalObjective::Quadratic { diag, b } => {
                0.5 * diag.iter().zip(x.iter()).map(|(a, v)| a * v * v).sum::<f64>() + b.dot(x)
            }
            LocalObjective::Logistic { features, labels, rho } => {
                let margins = features * x;
                let loss: f64 = margins.iter().zip(labels.iter()).map(|(m, y)| log1p_exp_neg(y * m)).sum();
                loss + 0.5 * rho * x.norm_squared()
            }
            LocalObjective::Ridge { a, b, rho } => (a * x - b).norm_squared() + rho * x.norm_squared(),
        }
    }

    /// Analytic gradient written into `out`.
    pub fn gradient_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        match self {
            LocalObjective::Quadratic { diag, b } => {
                out.copy_from(b);
                for i in 0..x.len() {
                    out[i] += diag[i] * x[i];
                }
            }
            LocalObjective::Logistic { features, labels, rho } => {
                let margins = features * x;
                // d/dx log(1+e^{-y m·x}) = -y σ(-y m·x) m
                let weights = DVector::from_iterator(
                    labels.len(),
                    margins.iter().zip(labels.iter()).map(|(m, y)| -y * sigmoid(-y * m)),
                );
                out.gemv_tr(1.0, features, &weights, 0.0);
                out.axpy(*rho, x, 1.0);
            }
            LocalObjective::Ridge { a, b, rho } => {
                let r = a * x - b;
                out.gemv_tr(2.0, a, &r, 0.0);
                out.axpy(2.0 * rho, x, 1.0);
            }
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim());
        self.gradient_into(x, &mut g);
        g
    }

    /// Gradient with dimension and finiteness checks.
    pub fn checked_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>, ObjectiveError> {
        if x.len() != self.dim() {
            return Err(ObjectiveError::Dimension { expected: self.dim(), got: x.len() });
        }
        let g = self.gradient(x);
        if g.iter().all(|v| v.is_finite()) {
            Ok(g)
        } else {
            Err(ObjectiveError::NonFiniteGradient)
        }
    }

    /// Lipschitz constant of the gradient.
    pub fn smoothness_constant(&self) -> Result<f64, ObjectiveError> {
        Ok(match self {
            LocalObjective::Quadratic { diag, .. } => diag.max(),
            LocalObjective::Logistic { features, rho, .. } => 0.25 * linalg::gram_spectral_norm(features)? + rho,
            LocalObjective::Ridge { a, rho, .. } => 2.0 * linalg::gram_spectral_norm(a)? + 2.0 * rho,
        })
    }

    /// Strong-convexity modulus (`ρ` for logistic, a lower bound there).
    pub fn strong_convexity(&self) -> Result<f64, ObjectiveError> {
        Ok(match self {
            LocalObjective::Quadratic { diag, .. } => diag.min(),
            LocalObjective::Logistic { rho, .. } => *rho,
            LocalObjective::Ridge { a, rho, .. } => 2.0 * linalg::gram_min_eigenvalue(a)? + 2.0 * rho,
        })
    }

    /// For objectives with constant Hessian: `(H, ∇f(0))`.
    pub fn quadratic_form(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        match self {
            LocalObjective::Quadratic { diag, b } => Some((DMatrix::from_diagonal(diag), b.clone())),
            LocalObjective::Ridge { a, b, rho } => {
                let p = a.ncols();
                let h = a.transpose() * a * 2.0 + DMatrix::identity(p, p) * (2.0 * rho);
                Some((h, a.transpose() * b * -2.0))
            }
            LocalObjective::Logistic { .. } => None,
        }
    }
}

/// The agents' local objectives plus their known constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEnsemble {
    locals: Vec<LocalObjective>,
    known_l: Option<Vec<f64>>,
    known_mu: Option<Vec<f64>>,
}

impl ObjectiveEnsemble {
    pub fn new(locals: Vec<LocalObjective>) -> Result<Self, ObjectiveError> {
        let p = locals.first().ok_or(ObjectiveError::Empty)?.dim();
        if let Some(bad) = locals.iter().find(|f| f.dim() != p) {
            return Err(ObjectiveError::Dimension { expected: p, got: bad.dim() });
        }
        Ok(ObjectiveEnsemble { locals, known_l: None, known_mu: None })
    }

    /// Computes and stores every agent's `L_i` and `μ_i`.
    pub fn with_constants(mut self) -> Result<Self, ObjectiveError> {
        let l = self.locals.iter().map(|f| f.smoothness_constant()).collect::<Result<Vec<_>, _>>()?;
        let mu = self.locals.iter().map(|f| f.strong_convexity()).collect::<Result<Vec<_>, _>>()?;
        self.known_l = Some(l);
        self.known_mu = Some(mu);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.locals.len()
    }

    pub fn dim(&self) -> usize {
        self.locals[0].dim()
    }

    pub fn locals(&self) -> &[LocalObjective] {
        &self.locals
    }

    pub fn local(&self, i: usize) -> &LocalObjective {
        &self.locals[i]
    }

    pub fn known_l(&self) -> Option<&[f64]> {
        self.known_l.as_deref()
    }

    pub fn known_mu(&self) -> Option<&[f64]> {
        self.known_mu.as_deref()
    }

    /// `L = max_i L_i`.
    pub fn global_smoothness(&self) -> Option<f64> {
        self.known_l.as_ref().map(|l| l.iter().copied().fold(f64::MIN, f64::max))
    }

    /// `μ = min_i μ_i`.
    pub fn global_strong_convexity(&self) -> Option<f64> {
        self.known_mu.as_ref().map(|m| m.iter().copied().fold(f64::MAX, f64::min))
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.locals.iter().map(|f| f.value(x)).sum()
    }

    /// `Σ_i ∇f_i(x)`, accumulated in agent order.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut total = DVector::zeros(self.dim());
        let mut g = DVector::zeros(self.dim());
        for f in &self.locals {
            f.gradient_into(x, &mut g);
            total += &g;
        }
        total
    }

    /// Closed-form minimizer when every local has a constant Hessian.
    pub fn closed_form_minimizer(&self) -> Option<Result<DVector<f64>, ObjectiveError>> {
        let p = self.dim();
        let mut h = DMatrix::zeros(p, p);
        let mut g0 = DVector::zeros(p);
        for f in &self.locals {
            let (hi, gi) = f.quadratic_form()?;
            h += hi;
            g0 += gi;
        }
        Some(match h.cholesky() {
            Some(c) => Ok(c.solve(&(-g0))),
            None => Err(ObjectiveError::Singular),
        })
    }

    pub fn to_file(&self) -> EnsembleFile {
        EnsembleFile {
            version: ENSEMBLE_FILE_VERSION,
            dimension: self.dim(),
            locals: self.locals.iter().map(LocalRecord::from).collect(),
            known_l: self.known_l.clone(),
            known_mu: self.known_mu.clone(),
        }
    }

    pub fn from_file(file: &EnsembleFile) -> Result<Self, ObjectiveError> {
        if file.version != ENSEMBLE_FILE_VERSION {
            return Err(ObjectiveError::Format(format!("unsupported version {}", file.version)));
        }
        let locals = file.locals.iter().map(LocalObjective::try_from).collect::<Result<Vec<_>, _>>()?;
        let mut ens = ObjectiveEnsemble::new(locals)?;
        if ens.dim() != file.dimension {
            return Err(ObjectiveError::Dimension { expected: file.dimension, got: ens.dim() });
        }
        ens.known_l = file.known_l.clone();
        ens.known_mu = file.known_mu.clone();
        Ok(ens)
    }
}

pub const ENSEMBLE_FILE_VERSION: u32 = 1;

/// Serialized ensemble: kind, dimensions and dense parameter arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub version: u32,
    pub dimension: usize,
    pub locals: Vec<LocalRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_l: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_mu: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LocalRecord {
    Quadratic { diag: Vec<f64>, b: Vec<f64> },
    Logistic { rows: usize, cols: usize, features: Vec<Vec<f64>>, labels: Vec<f64>, rho: f64 },
    Ridge { rows: usize, cols: usize, a: Vec<Vec<f64>>, b: Vec<f64>, rho: f64 },
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn rows_matrix(rows: usize, cols: usize, data: &[Vec<f64>]) -> Result<DMatrix<f64>, ObjectiveError> {
    if data.len() != rows || data.iter().any(|r| r.len() != cols) {
        return Err(ObjectiveError::Format(format!("matrix is not {rows}x{cols}")));
    }
    Ok(DMatrix::from_row_iterator(rows, cols, data.iter().flatten().copied()))
}

impl From<&LocalObjective> for LocalRecord {
    fn from(f: &LocalObjective) -> Self {
        match f {
            LocalObjective::Quadratic { diag, b } => {
                LocalRecord::Quadratic { diag: diag.iter().copied().collect(), b: b.iter().copied().collect() }
            }
            LocalObjective::Logistic { features, labels, rho } => LocalRecord::Logistic {
                rows: features.nrows(),
                cols: features.ncols(),
                features: matrix_rows(features),
                labels: labels.iter().copied().collect(),
                rho: *rho,
            },
            LocalObjective::Ridge { a, b, rho } => LocalRecord::Ridge {
                rows: a.nrows(),
                cols: a.ncols(),
                a: matrix_rows(a),
                b: b.iter().copied().collect(),
                rho: *rho,
            },
        }
    }
}

impl TryFrom<&LocalRecord> for LocalObjective {
    type Error = ObjectiveError;
    fn try_from(r: &LocalRecord) -> Result<Self, Self::Error> {
        match r {
            LocalRecord::Quadratic { diag, b } => {
                LocalObjective::quadratic(DVector::from_vec(diag.clone()), DVector::from_vec(b.clone()))
            }
            LocalRecord::Logistic { rows, cols, features, labels, rho } => LocalObjective::logistic(
                rows_matrix(*rows, *cols, features)?,
                DVector::from_vec(labels.clone()),
                *rho,
            ),
            LocalRecord::Ridge { rows, cols, a, b, rho } => {
                LocalObjective::ridge(rows_matrix(*rows, *cols, a)?, DVector::from_vec(b.clone()), *rho)
            }
        }
    }
}

/// Heterogeneous diagonal quadratics.
///
/// Agent `i` with parameter `τ` draws its first `p/2` curvatures uniformly
/// from `{1, 10⁻¹, …, 10^(−τ)}`, the last `p/2` from `{1, 10, …, 10^τ}`, and
/// `b_i` uniformly from `[0, 1)^p`, in that order, agent by agent from one
/// generator.
pub fn make_quadratic_ensemble(
    n: usize,
    p: usize,
    tau_assignment: &[f64],
    seed: u64,
) -> Result<ObjectiveEnsemble, ObjectiveError> {
    if p == 0 || p % 2 != 0 {
        return Err(ObjectiveError::OddDimension(p));
    }
    if tau_assignment.len() != n {
        return Err(ObjectiveError::TauCount { expected: n, got: tau_assignment.len() });
    }
    let taus = tau_assignment
        .iter()
        .map(|&t| {
            if t >= 0.0 && t.fract() == 0.0 && t <= 300.0 {
                Ok(t as i32)
            } else {
                Err(ObjectiveError::BadTau(t))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rng = rng_from_seed(seed);
    let half = p / 2;
    let mut locals = Vec::with_capacity(n);
    for &tau in &taus {
        let mut diag = DVector::zeros(p);
        for k in 0..p {
            let e = rng.random_range(0..=tau);
            diag[k] = if k < half { 10f64.powi(-e) } else { 10f64.powi(e) };
        }
        let b = DVector::from_fn(p, |_, _| rng.random::<f64>());
        locals.push(LocalObjective::quadratic(diag, b)?);
    }
    ObjectiveEnsemble::new(locals)?.with_constants()
}

/// The four heterogeneity scenarios: how many agents (lowest indices first)
/// get `τ = 3`; the rest get `τ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadraticScenario {
    /// every agent high-τ
    I,
    /// half
    Ii,
    /// ten percent
    Iii,
    /// three agents
    Iv,
}

impl QuadraticScenario {
    pub const ALL: [QuadraticScenario; 4] =
        [QuadraticScenario::I, QuadraticScenario::Ii, QuadraticScenario::Iii, QuadraticScenario::Iv];

    pub fn high_tau_agents(self, n: usize) -> usize {
        match self {
            QuadraticScenario::I => n,
            QuadraticScenario::Ii => n / 2,
            QuadraticScenario::Iii => ((n as f64) * 0.1).round().max(1.0) as usize,
            QuadraticScenario::Iv => 3.min(n),
        }
    }

    pub fn taus(self, n: usize) -> Vec<f64> {
        let high = self.high_tau_agents(n);
        (0..n).map(|i| if i < high { 3.0 } else { 1.0 }).collect()
    }

    pub fn label(self) -> &'static str {
        match self {
            QuadraticScenario::I => "i",
            QuadraticScenario::Ii => "ii",
            QuadraticScenario::Iii => "iii",
            QuadraticScenario::Iv => "iv",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn gradient_examples() {
        let q = LocalObjective::quadratic(v(&[2.0, 3.0]), v(&[1.0, -1.0])).unwrap();
        assert_eq!(q.gradient(&v(&[0.0, 0.0])), v(&[1.0, -1.0]));

        let l = LocalObjective::logistic(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), v(&[1.0]), 0.0).unwrap();
        assert_eq!(l.gradient(&v(&[0.0, 0.0])), v(&[-0.5, 0.0]));

        let r = LocalObjective::ridge(DMatrix::identity(2, 2), v(&[2.0, 0.0]), 0.5).unwrap();
        assert_eq!(r.gradient(&v(&[1.0, 1.0])), v(&[-1.0, 3.0]));
    }

    #[test]
    fn smoothness_examples() {
        let q = LocalObjective::quadratic(v(&[1e-3, 1e3]), v(&[0.0, 0.0])).unwrap();
        assert_eq!(q.smoothness_constant().unwrap(), 1e3);
        let l = LocalObjective::logistic(DMatrix::identity(3, 3), v(&[1.0, -1.0, 1.0]), 0.01).unwrap();
        assert_relative_eq!(l.smoothness_constant().unwrap(), 0.26, epsilon = 1e-15);
        let r = LocalObjective::ridge(DMatrix::identity(2, 2), v(&[0.0, 0.0]), 0.1).unwrap();
        assert_relative_eq!(r.smoothness_constant().unwrap(), 2.2, epsilon = 1e-15);
    }

    #[test]
    fn stable_logistic_at_extreme_margins() {
        assert_eq!(log1p_exp_neg(800.0), 0.0);
        assert_relative_eq!(log1p_exp_neg(-700.0), 700.0);
        let l = LocalObjective::logistic(DMatrix::from_row_slice(1, 1, &[1.0]), v(&[1.0]), 0.0).unwrap();
        for x in [-700.0, -50.0, 0.0, 50.0, 700.0] {
            let g = l.checked_gradient(&v(&[x])).unwrap();
            assert!(g[0].is_finite());
            assert!(l.value(&v(&[x])).is_finite());
        }
    }

    #[test]
    fn constructor_validation() {
        assert_eq!(
            LocalObjective::quadratic(v(&[1.0, 0.0]), v(&[0.0, 0.0])),
            Err(ObjectiveError::NonPositiveCurvature)
        );
        assert_eq!(
            LocalObjective::logistic(DMatrix::identity(1, 1), v(&[0.0]), 0.1),
            Err(ObjectiveError::BadLabel(0.0))
        );
        assert!(LocalObjective::ridge(DMatrix::identity(1, 1), v(&[0.0]), 0.0).is_err());
        let q = LocalObjective::quadratic(v(&[1.0]), v(&[0.0])).unwrap();
        assert!(matches!(q.checked_gradient(&v(&[1.0, 2.0])), Err(ObjectiveError::Dimension { .. })));
    }

    #[test]
    fn tau_zero_gives_identity_curvature() {
        let e = make_quadratic_ensemble(5, 4, &[0.0; 5], 1).unwrap();
        for f in e.locals() {
            if let LocalObjective::Quadratic { diag, .. } = f {
                assert!(diag.iter().all(|&d| d == 1.0));
            }
        }
        assert_eq!(e.known_l().unwrap(), &[1.0; 5]);
    }

    #[test]
    fn tau_validation() {
        assert!(matches!(make_quadratic_ensemble(2, 4, &[1.5, 1.0], 0), Err(ObjectiveError::BadTau(_))));
        assert!(matches!(make_quadratic_ensemble(2, 4, &[-1.0, 1.0], 0), Err(ObjectiveError::BadTau(_))));
        assert!(matches!(make_quadratic_ensemble(2, 3, &[1.0, 1.0], 0), Err(ObjectiveError::OddDimension(3))));
        assert!(matches!(make_quadratic_ensemble(3, 4, &[1.0], 0), Err(ObjectiveError::TauCount { .. })));
    }

    #[test]
    fn scenario_iv_full_scale_shape() {
        let taus = QuadraticScenario::Iv.taus(100);
        assert_eq!(taus.iter().filter(|&&t| t == 3.0).count(), 3);
        let e = make_quadratic_ensemble(100, 20, &taus, 42).unwrap();
        let mut l = e.known_l().unwrap().to_vec();
        assert_eq!(e.global_smoothness().unwrap(), 1e3);
        l.sort_by(f64::total_cmp);
        assert!(l[50] <= 10.0);
        for (f, &tau) in e.locals().iter().zip(&taus) {
            if let LocalObjective::Quadratic { diag, .. } = f {
                let lo = 10f64.powi(-(tau as i32));
                let hi = 10f64.powi(tau as i32);
                assert!(diag.iter().all(|&d| d >= lo && d <= hi));
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let q = LocalObjective::quadratic(v(&[2.0, 4.0]), v(&[2.0, 4.0])).unwrap();
        let e = ObjectiveEnsemble::new(vec![q]).unwrap();
        let x = e.closed_form_minimizer().unwrap().unwrap();
        assert_relative_eq!(x, v(&[-1.0, -1.0]), epsilon = 1e-15);

        let r = LocalObjective::ridge(DMatrix::identity(2, 2), v(&[1.0, 1.0]), 0.5).unwrap();
        let e = ObjectiveEnsemble::new(vec![r]).unwrap();
        let x = e.closed_form_minimizer().unwrap().unwrap();
        assert_relative_eq!(x, v(&[2.0 / 3.0, 2.0 / 3.0]), epsilon = 1e-15);
    }

    #[test]
    fn ensemble_file_round_trip() {
        let e = make_quadratic_ensemble(3, 4, &[1.0, 2.0, 0.0], 9).unwrap();
        let json = serde_json::to_string(&e.to_file()).unwrap();
        let back = ObjectiveEnsemble::from_file(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, e);

        let l = LocalObjective::logistic(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]), v(&[1.0, -1.0]), 0.1)
            .unwrap();
        let e = ObjectiveEnsemble::new(vec![l]).unwrap();
        let back = ObjectiveEnsemble::from_file(&e.to_file()).unwrap();
        assert_eq!(back, e);
    }
}
