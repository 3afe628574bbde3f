//! Small dense symmetric eigensolver built on cyclic Jacobi rotations.
//!
//! Every matrix in this crate is at most 8×8, so a dependency-free Jacobi
//! sweep is both fast and accurate. The solver is shared by the spectral
//! norm (via `MᵀM`) and the LMI feasibility verification.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not symmetric: |M[{0},{1}] - M[{1},{0}]| = {2}")]
    NotSymmetric(usize, usize, f64),
    #[error("matrix contains a non-finite entry at ({0},{1})")]
    NonFinite(usize, usize),
}

const OFF_DIAG_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 64;

fn check_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<(), LinalgError> {
    let n = m.nrows();
    let scale = m.amax().max(1.0);
    for i in 0..n {
        for j in 0..n {
            if !m[(i, j)].is_finite() {
                return Err(LinalgError::NonFinite(i, j));
            }
            if j > i {
                let d = (m[(i, j)] - m[(j, i)]).abs();
                if d > tol * scale {
                    return Err(LinalgError::NotSymmetric(i, j, d));
                }
            }
        }
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps.
///
/// Returned unsorted. Off-diagonal convergence threshold is `1e-12`
/// relative to the matrix scale.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>, LinalgError> {
    check_symmetric(m, 1e-12)?;
    let n = m.nrows();
    // Work on the symmetrized copy so tiny asymmetries cannot accumulate.
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    let scale = a.amax().max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[(i, j)].abs());
            }
        }
        if off <= OFF_DIAG_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= OFF_DIAG_TOL * scale * 1e-3 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    Ok((0..n).map(|i| a[(i, i)]).collect())
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn min_max_eig_sym(m: &DMatrix<f64>) -> Result<(f64, f64), LinalgError> {
    let eigs = sym_eigenvalues(m)?;
    let lo = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Operator 2-norm: the largest singular value, computed as the square
/// root of the largest eigenvalue of `MᵀM`.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.amax() == 0.0 {
        return 0.0;
    }
    // Gram matrix on the smaller side.
    let gram = if m.nrows() <= m.ncols() {
        m * m.transpose()
    } else {
        m.transpose() * m
    };
    let (_, hi) = min_max_eig_sym(&gram).expect("gram matrix is symmetric by construction");
    hi.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Power iteration on MᵀM, fully independent of the Jacobi path.
    fn power_iteration_norm(m: &DMatrix<f64>) -> f64 {
        let gram = m.transpose() * m;
        let n = gram.nrows();
        let mut v = DMatrix::from_element(n, 1, 1.0 / (n as f64).sqrt());
        let mut lambda = 0.0;
        for _ in 0..10_000 {
            let w = &gram * &v;
            let norm = w.norm();
            if norm == 0.0 {
                return 0.0;
            }
            v = w / norm;
            lambda = norm;
        }
        lambda.sqrt()
    }

    #[test]
    fn diag_eigenvalues() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let (lo, hi) = min_max_eig_sym(&m).unwrap();
        assert_eq!((lo, hi), (1.0, 3.0));
    }

    #[test]
    fn negative_identity() {
        let m = -DMatrix::<f64>::identity(8, 8);
        let (lo, hi) = min_max_eig_sym(&m).unwrap();
        assert_relative_eq!(lo, -1.0);
        assert_relative_eq!(hi, -1.0);
    }

    #[test]
    fn rejects_asymmetric() {
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(0, 1)] = 1.0;
        assert!(min_max_eig_sym(&m).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(1, 1)] = f64::NAN;
        assert!(min_max_eig_sym(&m).is_err());
    }

    #[test]
    fn spectral_norm_identity_and_diag() {
        assert_relative_eq!(spectral_norm(&DMatrix::identity(4, 4)), 1.0);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -4.0]));
        assert_relative_eq!(spectral_norm(&d), 4.0);
    }

    #[test]
    fn spectral_norm_matches_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = DMatrix::from_fn(2, 4, |_, _| rng.gen_range(-5.0..5.0));
            let a = spectral_norm(&m);
            let b = power_iteration_norm(&m);
            assert_relative_eq!(a, b, max_relative = 1e-9, epsilon = 1e-9);
        }
    }

    #[test]
    fn random_symmetric_extremes_match_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let raw = DMatrix::from_fn(8, 8, |_, _| rng.gen_range(-2.0..2.0));
            let m = (&raw + raw.transpose()) * 0.5;
            let (lo, hi) = min_max_eig_sym(&m).unwrap();
            // |lambda|_max of M equals the spectral norm of M.
            let norm = power_iteration_norm(&m);
            assert_relative_eq!(lo.abs().max(hi.abs()), norm, max_relative = 1e-9);
            // Trace and Frobenius invariants.
            let eigs = sym_eigenvalues(&m).unwrap();
            let trace: f64 = eigs.iter().sum();
            assert_relative_eq!(trace, m.trace(), max_relative = 1e-9, epsilon = 1e-9);
            let frob2: f64 = eigs.iter().map(|e| e * e).sum();
            assert_relative_eq!(frob2, m.norm_squared(), max_relative = 1e-9);
        }
    }
}
