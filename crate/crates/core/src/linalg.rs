//! Dense symmetric eigenvalues by cyclic Jacobi rotations.
//!
//! Used for the mixing-matrix spectral norm and for the smoothness constants
//! of the data-driven objectives. Matrices here are small (agents, or the
//! smaller side of a local data matrix), so the cubic cost per sweep is fine.

use nalgebra::DMatrix;
use thiserror::Error;

/// Off-diagonal Frobenius mass, relative to the whole matrix, below which
/// the rotation sweeps stop.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

/// Upper bound on full sweeps; Jacobi converges quadratically, so hitting
/// this means the input was not a finite symmetric matrix.
pub const JACOBI_MAX_SWEEPS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: |a[{i},{j}] - a[{j},{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Eigenvalues of a symmetric matrix, sorted ascending.
///
/// Symmetry is checked with a relative tolerance of `1e-12` on each entry
/// pair; the rotations themselves act on the upper triangle only.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>, EigenError> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(EigenError::NotSquare { rows, cols });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(EigenError::NonFinite);
    }
    let n = rows;
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (a[(i, j)] - a[(j, i)]).abs();
            if gap > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(EigenError::NotSymmetric { i, j, gap });
            }
        }
    }

    let mut m = a.clone();
    let total = m.norm();
    if total == 0.0 || n == 1 {
        let mut d: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
        d.sort_by(f64::total_cmp);
        return Ok(d);
    }

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&m);
        if off <= JACOBI_TOLERANCE * total {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(EigenError::NoConvergence { sweeps, off });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
                // exact zero keeps the off-diagonal measure monotone
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
            }
        }
        sweeps += 1;
    }

    let mut d: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Spectral norm of a symmetric matrix: the largest eigenvalue magnitude.
pub fn symmetric_spectral_norm(a: &DMatrix<f64>) -> Result<f64, EigenError> {
    let eig = symmetric_eigenvalues(a)?;
    Ok(eig.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// `‖MᵀM‖₂`, computed on whichever Gram matrix (`MᵀM` or `MMᵀ`) is smaller.
pub fn gram_spectral_norm(m: &DMatrix<f64>) -> Result<f64, EigenError> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let gram = if m.nrows() < m.ncols() {
        m * m.transpose()
    } else {
        m.transpose() * m
    };
    symmetric_spectral_norm(&symmetrize(gram))
}

/// Smallest eigenvalue of `MᵀM` (zero when `M` has fewer rows than columns).
pub fn gram_min_eigenvalue(m: &DMatrix<f64>) -> Result<f64, EigenError> {
    if m.nrows() < m.ncols() {
        return Ok(0.0);
    }
    let gram = symmetrize(m.transpose() * m);
    let eig = symmetric_eigenvalues(&gram)?;
    Ok(eig.first().copied().unwrap_or(0.0).max(0.0))
}

fn symmetrize(mut g: DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_matrix() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -1.0, 2.0]));
        assert_eq!(symmetric_eigenvalues(&a).unwrap(), vec![-1.0, 2.0, 3.0]);
        assert_eq!(symmetric_spectral_norm(&a).unwrap(), 3.0);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = symmetric_eigenvalues(&a).unwrap();
        assert_relative_eq!(e[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(e[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn agrees_with_nalgebra_on_random_symmetric() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_pcg::Pcg64::seed_from_u64(7);
        for n in [3usize, 8, 17] {
            let mut a = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            let mine = symmetric_eigenvalues(&a).unwrap();
            let mut theirs: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            theirs.sort_by(f64::total_cmp);
            for (x, y) in mine.iter().zip(&theirs) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn rejects_asymmetric_and_nonfinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(symmetric_eigenvalues(&a), Err(EigenError::NotSymmetric { .. })));
        let b = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert_eq!(symmetric_eigenvalues(&b), Err(EigenError::NonFinite));
        let c = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(symmetric_eigenvalues(&c), Err(EigenError::NotSquare { .. })));
    }

    #[test]
    fn gram_norm_uses_either_side() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
        assert_relative_eq!(gram_spectral_norm(&m).unwrap(), 4.0, epsilon = 1e-14);
        assert_relative_eq!(gram_spectral_norm(&m.transpose()).unwrap(), 4.0, epsilon = 1e-14);
        assert_eq!(gram_min_eigenvalue(&m).unwrap(), 0.0);
        assert_relative_eq!(gram_min_eigenvalue(&m.transpose()).unwrap(), 1.0, epsilon = 1e-14);
    }
}
