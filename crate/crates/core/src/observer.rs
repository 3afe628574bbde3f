//! Observer-gain synthesis via a small self-contained semidefinite
//! feasibility solver.
//!
//! The synthesis decides feasibility of the 8×8 block inequality
//!
//! ```text
//! [ AᵀP + PA − CᵀYᵀ − YC + ηγ_f²I   P ]
//! [ P                              −ηI ]  ≺ 0,    P = Pᵀ ≻ 0,  η ≥ 0
//! ```
//!
//! and extracts the observer gain `L = P⁻¹Y`. Strict inequalities are
//! replaced by a configurable margin. The search runs a deterministic
//! ellipsoid method over the 19 scalar unknowns; certificates are always
//! re-verifiable from scratch through [`assemble_lmi`] and
//! [`min_max_eig_sym`], which is the actual interface contract.

use nalgebra::{DMatrix, Matrix2x4, Matrix4, Matrix4x2, SMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::linalg::min_max_eig_sym;
use crate::linalg::LinalgError;
use crate::model::{build_matrices, jac_h_x, DerivedConstants, Input, State};

#[derive(Debug, Error)]
pub enum ObserverError {
    #[error("non-finite problem data")]
    NonFinite,
    #[error("gamma_f must be nonnegative, got {0}")]
    NegativeGamma(f64),
    #[error("margin must be positive, got {0}")]
    BadMargin(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The feasibility problem data.
#[derive(Debug, Clone, PartialEq)]
pub struct LMIProblem {
    pub a: Matrix4<f64>,
    pub c: Matrix2x4<f64>,
    pub gamma_f: f64,
    /// Strictness slack ε: acceptance requires λ_max ≤ −ε and P ⪰ εI.
    pub margin: f64,
}

impl LMIProblem {
    pub fn new(a: Matrix4<f64>, c: Matrix2x4<f64>, gamma_f: f64) -> Result<Self, ObserverError> {
        let margin = default_margin(&a);
        Self::with_margin(a, c, gamma_f, margin)
    }

    pub fn with_margin(
        a: Matrix4<f64>,
        c: Matrix2x4<f64>,
        gamma_f: f64,
        margin: f64,
    ) -> Result<Self, ObserverError> {
        if a.iter().any(|v| !v.is_finite())
            || c.iter().any(|v| !v.is_finite())
            || !gamma_f.is_finite()
        {
            return Err(ObserverError::NonFinite);
        }
        if gamma_f < 0.0 {
            return Err(ObserverError::NegativeGamma(gamma_f));
        }
        if !(margin > 0.0) {
            return Err(ObserverError::BadMargin(margin));
        }
        Ok(Self { a, c, gamma_f, margin })
    }
}

/// Default strictness slack: 1e−6 scaled by the problem size through ‖A‖.
pub fn default_margin(a: &Matrix4<f64>) -> f64 {
    1e-6 * a.amax().max(1.0)
}

/// Witness of LMI feasibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCertificate {
    /// Row-major 4×4 symmetric matrix.
    pub p: [[f64; 4]; 4],
    /// Row-major 4×2 matrix.
    pub y: [[f64; 2]; 4],
    pub eta: f64,
    /// Largest eigenvalue of the assembled 8×8 block at the witness.
    pub max_eig: f64,
    pub margin: f64,
    pub iterations: usize,
}

impl FeasibilityCertificate {
    pub fn p_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.p[i][j])
    }

    pub fn y_matrix(&self) -> Matrix4x2<f64> {
        Matrix4x2::from_fn(|i, j| self.y[i][j])
    }
}

/// Observer gain `L` mapping output mismatch to state-rate correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverGain {
    /// Row-major 4×2 matrix.
    pub l: [[f64; 2]; 4],
}

impl ObserverGain {
    pub fn matrix(&self) -> Matrix4x2<f64> {
        Matrix4x2::from_fn(|i, j| self.l[i][j])
    }

    pub fn from_matrix(m: &Matrix4x2<f64>) -> Self {
        Self { l: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]], [m[(2, 0)], m[(2, 1)]], [m[(3, 0)], m[(3, 1)]]] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    Feasible(FeasibilityCertificate),
    Infeasible {
        /// Best λ_max seen at an admissible (P ⪰ εI, η ≥ 0) iterate.
        best_max_eig: f64,
        iterations: usize,
    },
}

/// Linearizes the output map around an operating point: `C = ∂h/∂x`,
/// with the input feedthrough `D_u` unchanged by the state linearization.
pub fn linearize_output(
    c: &DerivedConstants,
    x0: &State,
    u0: &Input,
) -> (Matrix2x4<f64>, Matrix2x4<f64>) {
    (jac_h_x(c, x0, u0), build_matrices(c).du)
}

/// Assembles the 8×8 symmetric LMI block at a candidate `(P, Y, η)`.
pub fn assemble_lmi(
    prob: &LMIProblem,
    p: &Matrix4<f64>,
    y: &Matrix4x2<f64>,
    eta: f64,
) -> SMatrix<f64, 8, 8> {
    let yc = y * prob.c;
    let top = prob.a.transpose() * p + p * prob.a
        - yc.transpose()
        - yc
        + Matrix4::identity() * (eta * prob.gamma_f * prob.gamma_f);
    let mut m = SMatrix::<f64, 8, 8>::zeros();
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] = top[(i, j)];
            m[(i, j + 4)] = p[(j, i)];
            m[(i + 4, j)] = p[(i, j)];
        }
        m[(i + 4, i + 4)] = -eta;
    }
    m
}

/// Solves `P·L = Y` for the gain.
pub fn extract_gain(cert: &FeasibilityCertificate) -> ObserverGain {
    let p = cert.p_matrix();
    let y = cert.y_matrix();
    let l = p.lu().solve(&y).expect("certificate P is positive definite");
    ObserverGain::from_matrix(&l)
}

// Ellipsoid search over the stacked unknowns
// θ = (P11, P12, P13, P14, P22, P23, P24, P33, P34, P44, Y11..Y42, η).
const DIM: usize = 19;

fn unpack(theta: &[f64; DIM]) -> (Matrix4<f64>, Matrix4x2<f64>, f64) {
    let mut p = Matrix4::zeros();
    let mut k = 0;
    for i in 0..4 {
        for j in i..4 {
            p[(i, j)] = theta[k];
            p[(j, i)] = theta[k];
            k += 1;
        }
    }
    let mut y = Matrix4x2::zeros();
    for i in 0..4 {
        for j in 0..2 {
            y[(i, j)] = theta[k];
            k += 1;
        }
    }
    (p, y, theta[k])
}

fn sym_eigen_8(m: &SMatrix<f64, 8, 8>) -> (f64, nalgebra::SVector<f64, 8>) {
    // nalgebra's symmetric eigensolver drives the search; the independent
    // Jacobi routine in `linalg` is reserved for certificate verification.
    let eig = nalgebra::SymmetricEigen::new(*m);
    let mut best = 0usize;
    for i in 1..8 {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    (eig.eigenvalues[best], eig.eigenvectors.column(best).into_owned())
}

fn min_eig_4(p: &Matrix4<f64>) -> (f64, nalgebra::SVector<f64, 4>) {
    let eig = nalgebra::SymmetricEigen::new(*p);
    let mut best = 0usize;
    for i in 1..4 {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    (eig.eigenvalues[best], eig.eigenvectors.column(best).into_owned())
}

/// Settings for the ellipsoid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Initial ellipsoid radius around the neutral start (P=I, Y=0, η=1).
    pub radius: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { max_iterations: 120_000, radius: 1e7 }
    }
}

/// Decides feasibility of the LMI and returns a re-verifiable certificate.
pub fn solve_lmi(prob: &LMIProblem) -> Result<SolveOutcome, ObserverError> {
    solve_lmi_with(prob, &SolverSettings::default())
}

pub fn solve_lmi_with(
    prob: &LMIProblem,
    settings: &SolverSettings,
) -> Result<SolveOutcome, ObserverError> {
    if !prob.margin.is_finite() || prob.margin <= 0.0 {
        return Err(ObserverError::BadMargin(prob.margin));
    }
    let n = DIM as f64;
    let mut theta = [0.0f64; DIM];
    // Neutral start: P = I, Y = 0, η = 1.
    theta[0] = 1.0; // P11
    theta[4] = 1.0; // P22
    theta[7] = 1.0; // P33
    theta[9] = 1.0; // P44
    theta[DIM - 1] = 1.0; // η
    let mut shape = DMatrix::<f64>::identity(DIM, DIM) * settings.radius * settings.radius;
    let mut best_admissible = f64::INFINITY;

    for it in 0..settings.max_iterations {
        let (p, y, eta) = unpack(&theta);
        let (p_min, p_vec) = min_eig_4(&p);
        let mut grad = [0.0f64; DIM];
        if p_min < prob.margin || eta < 0.0 {
            if eta < 0.0 && p_min >= prob.margin {
                grad[DIM - 1] = -1.0;
            } else {
                // Cut on margin − λ_min(P): subgradient is −wwᵀ mapped onto
                // the packed symmetric coordinates.
                let mut k = 0;
                for i in 0..4 {
                    for j in i..4 {
                        grad[k] = if i == j {
                            -p_vec[i] * p_vec[i]
                        } else {
                            -2.0 * p_vec[i] * p_vec[j]
                        };
                        k += 1;
                    }
                }
            }
        } else {
            let m = assemble_lmi(prob, &p, &y, eta);
            let (lam, v) = sym_eigen_8(&m);
            if lam <= -prob.margin {
                let cert = certificate_from(prob, &p, &y, eta, it + 1)?;
                return Ok(SolveOutcome::Feasible(cert));
            }
            best_admissible = best_admissible.min(lam);
            // Exact directional derivatives of vᵀMv: M is affine in θ, so
            // one assembly per coordinate direction gives the gradient.
            for (k, g) in grad.iter_mut().enumerate() {
                let mut probe = theta;
                probe[k] += 1.0;
                let (pp, yp, ep) = unpack(&probe);
                let dm = assemble_lmi(prob, &pp, &yp, ep) - m;
                *g = (v.transpose() * dm * v)[(0, 0)];
            }
        }

        // Central-cut ellipsoid update.
        let g = DMatrix::from_column_slice(DIM, 1, &grad);
        let bg = &shape * &g;
        let denom = (g.transpose() * &bg)[(0, 0)];
        if !(denom > 0.0) {
            break;
        }
        let sqrt_denom = denom.sqrt();
        for (t, b) in theta.iter_mut().zip(bg.iter()) {
            *t -= b / ((n + 1.0) * sqrt_denom);
        }
        shape = (&shape - (&bg * bg.transpose()) * (2.0 / ((n + 1.0) * denom)))
            * (n * n / (n * n - 1.0));
    }

    Ok(SolveOutcome::Infeasible {
        best_max_eig: best_admissible,
        iterations: settings.max_iterations,
    })
}

fn certificate_from(
    prob: &LMIProblem,
    p: &Matrix4<f64>,
    y: &Matrix4x2<f64>,
    eta: f64,
    iterations: usize,
) -> Result<FeasibilityCertificate, ObserverError> {
    // Independent re-verification through the Jacobi path.
    let m = assemble_lmi(prob, p, y, eta);
    let dm = DMatrix::from_fn(8, 8, |i, j| m[(i, j)]);
    let (_, max_eig) = min_max_eig_sym(&dm)?;
    Ok(FeasibilityCertificate {
        p: std::array::from_fn(|i| std::array::from_fn(|j| p[(i, j)])),
        y: std::array::from_fn(|i| std::array::from_fn(|j| y[(i, j)])),
        eta,
        max_eig,
        margin: prob.margin,
        iterations,
    })
}

/// Re-verifies a certificate from scratch: assembles the block and checks
/// `λ_max ≤ −margin` and `λ_min(P) ≥ margin` through the Jacobi eigensolver.
pub fn verify_certificate(
    prob: &LMIProblem,
    cert: &FeasibilityCertificate,
) -> Result<(f64, f64), ObserverError> {
    let m = assemble_lmi(prob, &cert.p_matrix(), &cert.y_matrix(), cert.eta);
    let dm = DMatrix::from_fn(8, 8, |i, j| m[(i, j)]);
    let (_, max_eig) = min_max_eig_sym(&dm)?;
    let dp = DMatrix::from_fn(4, 4, |i, j| cert.p[i][j]);
    let (p_min, _) = min_max_eig_sym(&dp)?;
    Ok((max_eig, p_min))
}
