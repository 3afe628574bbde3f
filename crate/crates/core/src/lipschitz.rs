//! Analytical and sampled Lipschitz constants for the generator model.
//!
//! The analytical constants bound the Lipschitz behavior of `f` and `h`
//! in the state for any fixed input over a compact bounds box. The
//! numerical estimators approximate the same constants from below, either
//! by the supremum of the Jacobian spectral norm over sampled points or by
//! pairwise difference quotients.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::linalg::spectral_norm;
use crate::model::{eval_f, eval_h, jac_f_x, jac_h_x, DerivedConstants, Input, State};
use crate::sampling::{self, SequenceSpec};

/// Pairs closer than this in the state are skipped by the pairwise
/// estimator; low-discrepancy projections can repeat coordinates.
const PAIR_DISTANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LipschitzError {
    #[error("bounds box violated: component {0} has lo {1} > hi {2}")]
    BadBounds(usize, f64, f64),
    #[error("pairwise estimation needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("empty component list")]
    EmptyComponents,
    #[error(transparent)]
    Sampling(#[from] sampling::SamplingError),
}

/// Compact operating region `𝒳 × 𝒰` as per-component intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsBox {
    pub x_lo: [f64; 4],
    pub x_hi: [f64; 4],
    pub u_lo: [f64; 4],
    pub u_hi: [f64; 4],
}

impl BoundsBox {
    pub fn validate(&self) -> Result<(), LipschitzError> {
        for i in 0..4 {
            if self.x_lo[i] > self.x_hi[i] {
                return Err(LipschitzError::BadBounds(i, self.x_lo[i], self.x_hi[i]));
            }
            if self.u_lo[i] > self.u_hi[i] {
                return Err(LipschitzError::BadBounds(i + 4, self.u_lo[i], self.u_hi[i]));
            }
        }
        Ok(())
    }

    /// Single-point box at the given state and input.
    pub fn degenerate(x: [f64; 4], u: [f64; 4]) -> Self {
        Self { x_lo: x, x_hi: x, u_lo: u, u_hi: u }
    }

    fn lo8(&self) -> [f64; 8] {
        let mut v = [0.0; 8];
        v[..4].copy_from_slice(&self.x_lo);
        v[4..].copy_from_slice(&self.u_lo);
        v
    }

    fn hi8(&self) -> [f64; 8] {
        let mut v = [0.0; 8];
        v[..4].copy_from_slice(&self.x_hi);
        v[4..].copy_from_slice(&self.u_hi);
        v
    }
}

/// Per-component interval magnitudes `κ = max(|lo|, |hi|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaVec {
    pub kx: [f64; 4],
    pub ku: [f64; 4],
}

pub fn kappas(b: &BoundsBox) -> KappaVec {
    let k = |lo: f64, hi: f64| lo.abs().max(hi.abs());
    KappaVec {
        kx: std::array::from_fn(|i| k(b.x_lo[i], b.x_hi[i])),
        ku: std::array::from_fn(|i| k(b.u_lo[i], b.u_hi[i])),
    }
}

/// Which nonlinearity an estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    #[serde(rename = "f")]
    Process,
    #[serde(rename = "h")]
    Measurement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Analytic,
    JacobianSup,
    Pairwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    None,
    Random,
    Halton,
    Sobol,
}

impl From<sampling::SequenceKind> for Sampler {
    fn from(kind: sampling::SequenceKind) -> Self {
        match kind {
            sampling::SequenceKind::Random => Sampler::Random,
            sampling::SequenceKind::Halton => Sampler::Halton,
            sampling::SequenceKind::Sobol => Sampler::Sobol,
        }
    }
}

/// A Lipschitz constant value together with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub target: Target,
    pub method: Method,
    pub sampler: Sampler,
    pub samples: usize,
    pub seed: u64,
    pub value: f64,
}

impl LipschitzEstimate {
    fn analytic(target: Target, value: f64) -> Self {
        Self { target, method: Method::Analytic, sampler: Sampler::None, samples: 0, seed: 0, value }
    }
}

/// Intermediate and final analytic process constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFParts {
    /// The `f₂` contribution before aggregation.
    pub gamma_f_tilde: f64,
    pub gamma_f: f64,
}

pub fn gamma_f_parts(c: &DerivedConstants, b: &BoundsBox) -> GammaFParts {
    let k = kappas(b);
    let (kx3, kx4) = (k.kx[2], k.kx[3]);
    let (ku3, ku4) = (k.ku[2], k.ku[3]);
    let tilde = c.alpha3.abs() * ((ku3 + ku4) * (1.0 + kx3 + kx4) + 2.0 * ku3 * ku4)
        + c.alpha4.abs() * (ku3 * (1.0 + ku3) + ku4 * (1.0 + ku4));
    let gamma_f = (tilde * tilde
        + (c.alpha8 * c.alpha8 + c.alpha10 * c.alpha10) * (ku3 + ku4) * (ku3 + ku4))
        .sqrt();
    GammaFParts { gamma_f_tilde: tilde, gamma_f }
}

/// Analytic upper bound on the Lipschitz constant of `f` in the state.
pub fn gamma_f_analytic(c: &DerivedConstants, b: &BoundsBox) -> LipschitzEstimate {
    LipschitzEstimate::analytic(Target::Process, gamma_f_parts(c, b).gamma_f)
}

/// Analytic upper bound on the Lipschitz constant of `h` in the state.
pub fn gamma_h_analytic(c: &DerivedConstants, b: &BoundsBox) -> LipschitzEstimate {
    let k = kappas(b);
    let sqrt2 = std::f64::consts::SQRT_2;
    let value =
        sqrt2 * (k.kx[2] + k.kx[3] + 2.0 * c.beta1.abs() * (k.ku[2] + k.ku[3]) + sqrt2);
    LipschitzEstimate::analytic(Target::Measurement, value)
}

/// Aggregates per-component constants into a whole-vector constant as the
/// Euclidean norm of the components.
pub fn component_aggregate(gammas: &[f64]) -> Result<f64, LipschitzError> {
    if gammas.is_empty() {
        return Err(LipschitzError::EmptyComponents);
    }
    Ok(gammas.iter().map(|g| g * g).sum::<f64>().sqrt())
}

fn sample_points(
    b: &BoundsBox,
    seq: &SequenceSpec,
    s: usize,
) -> Result<Vec<(State, Input)>, LipschitzError> {
    let spec = SequenceSpec { dim: 8, ..*seq };
    let unit = sampling::generate(&spec, s)?;
    let (lo, hi) = (b.lo8(), b.hi8());
    Ok(unit
        .iter()
        .map(|p| {
            let v = sampling::scale_to_box(p, &lo, &hi);
            (
                State::new(v[0], v[1], v[2], v[3]),
                Input::new(v[4], v[5], v[6], v[7]),
            )
        })
        .collect())
}

fn jacobian_norm(target: Target, c: &DerivedConstants, x: &State, u: &Input) -> f64 {
    match target {
        Target::Process => {
            let j = jac_f_x(c, x, u);
            spectral_norm(&DMatrix::from_fn(4, 4, |r, cc| j[(r, cc)]))
        }
        Target::Measurement => {
            let j = jac_h_x(c, x, u);
            spectral_norm(&DMatrix::from_fn(2, 4, |r, cc| j[(r, cc)]))
        }
    }
}

/// Supremum of the Jacobian spectral norm over `s` sampled points.
///
/// The running max is a parallel reduction over sample chunks; max is
/// associative and commutative, so the result is independent of the
/// partitioning.
pub fn estimate_gamma_jacobian(
    target: Target,
    c: &DerivedConstants,
    b: &BoundsBox,
    seq: &SequenceSpec,
    s: usize,
) -> Result<LipschitzEstimate, LipschitzError> {
    b.validate()?;
    let points = sample_points(b, seq, s)?;
    let value = points
        .par_iter()
        .map(|(x, u)| jacobian_norm(target, c, x, u))
        .reduce(|| 0.0, f64::max);
    Ok(LipschitzEstimate {
        target,
        method: Method::JacobianSup,
        sampler: seq.kind.into(),
        samples: s,
        seed: seq.seed,
        value,
    })
}

/// Pairwise quotient supremum over a sampled target function.
///
/// Shared `u` per pair, taken from the earlier sample of the pair, so the
/// quotient matches the fixed-input Lipschitz form. Near-coincident state
/// pairs are skipped.
pub(crate) fn pairwise_sup<F, const N: usize>(
    points: &[(State, Input)],
    g: F,
) -> f64
where
    F: Fn(&State, &Input) -> nalgebra::SVector<f64, N> + Sync,
{
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            let (xi, ui) = &points[i];
            let gi = g(xi, ui);
            let mut best = 0.0f64;
            for (xj, _) in points.iter().skip(i + 1) {
                let dx = (xi.as_vector() - xj.as_vector()).norm();
                if dx < PAIR_DISTANCE_FLOOR {
                    continue;
                }
                let q = (gi - g(xj, ui)).norm() / dx;
                best = best.max(q);
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Difference-quotient estimate over all `C(s,2)` sample pairs.
pub fn estimate_gamma_pairwise(
    target: Target,
    c: &DerivedConstants,
    b: &BoundsBox,
    seq: &SequenceSpec,
    s: usize,
) -> Result<LipschitzEstimate, LipschitzError> {
    b.validate()?;
    if s < 2 {
        return Err(LipschitzError::TooFewSamples(s));
    }
    let points = sample_points(b, seq, s)?;
    let value = match target {
        Target::Process => pairwise_sup(&points, |x, u| eval_f(c, x, u)),
        Target::Measurement => pairwise_sup(&points, |x, u| eval_h(c, x, u)),
    };
    Ok(LipschitzEstimate {
        target,
        method: Method::Pairwise,
        sampler: seq.kind.into(),
        samples: s,
        seed: seq.seed,
        value,
    })
}
