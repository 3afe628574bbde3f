//! Random and low-discrepancy point sequences in the unit hypercube,
//! plus discrepancy and star-discrepancy estimation.
//!
//! All generators index from 1 so the degenerate all-zeros point never
//! appears, and all of them are prefix-extendable: the first `s` points of
//! a sequence do not change when more points are requested.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Highest dimension supported by the embedded Sobol table and prime list.
pub const MAX_DIM: usize = 8;

const HALTON_BASES: [u64; MAX_DIM] = [2, 3, 5, 7, 11, 13, 17, 19];

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("dimension {0} out of range 1..={MAX_DIM}")]
    BadDimension(usize),
    #[error("empty point sequence")]
    EmptySequence,
    #[error("interval box is not inside the unit cube")]
    BadInterval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Random,
    Halton,
    Sobol,
}

impl std::fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SequenceKind::Random => write!(f, "random"),
            SequenceKind::Halton => write!(f, "halton"),
            SequenceKind::Sobol => write!(f, "sobol"),
        }
    }
}

impl std::str::FromStr for SequenceKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(SequenceKind::Random),
            "halton" => Ok(SequenceKind::Halton),
            "sobol" => Ok(SequenceKind::Sobol),
            other => Err(format!("unknown sampler `{other}` (expected random|halton|sobol)")),
        }
    }
}

/// Specification of a point sequence. `seed` only affects the random kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    pub dim: usize,
    pub seed: u64,
}

impl SequenceSpec {
    pub fn new(kind: SequenceKind, dim: usize, seed: u64) -> Self {
        Self { kind, dim, seed }
    }
}

/// Digit-reversed base-`b` expansion of `index`.
pub fn radical_inverse(base: u64, index: u64) -> f64 {
    let mut n = index;
    let mut result = 0.0;
    let inv_base = 1.0 / base as f64;
    let mut frac = inv_base;
    while n > 0 {
        result += (n % base) as f64 * frac;
        n /= base;
        frac *= inv_base;
    }
    result
}

/// Joe–Kuo style primitive-polynomial data for Sobol dimensions 2..=8.
/// Dimension 1 is the base-2 van der Corput sequence.
struct SobolDim {
    a: u32,
    m: &'static [u32],
}

const SOBOL_DIMS: [SobolDim; 7] = [
    SobolDim { a: 0, m: &[1] },
    SobolDim { a: 1, m: &[1, 3] },
    SobolDim { a: 1, m: &[1, 3, 1] },
    SobolDim { a: 2, m: &[1, 1, 1] },
    SobolDim { a: 1, m: &[1, 1, 3, 3] },
    SobolDim { a: 4, m: &[1, 3, 5, 13] },
    SobolDim { a: 2, m: &[1, 1, 5, 5, 17] },
];

const SOBOL_BITS: usize = 32;

/// Direction numbers `v_k` for one Sobol dimension, scaled to 32 bits.
fn sobol_directions(dim_index: usize) -> [u32; SOBOL_BITS] {
    let mut v = [0u32; SOBOL_BITS];
    if dim_index == 0 {
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = 1u32 << (31 - k);
        }
        return v;
    }
    let d = &SOBOL_DIMS[dim_index - 1];
    let s = d.m.len();
    let mut m: Vec<u32> = d.m.to_vec();
    for k in s..SOBOL_BITS {
        // Recurrence: m_k = 2 a_1 m_{k-1} ^ 4 a_2 m_{k-2} ^ ... ^ 2^s m_{k-s} ^ m_{k-s}
        let mut mk = m[k - s] ^ (m[k - s] << s);
        for i in 1..s {
            let a_i = (d.a >> (s - 1 - i)) & 1;
            if a_i == 1 {
                mk ^= m[k - i] << i;
            }
        }
        m.push(mk);
    }
    for k in 0..SOBOL_BITS {
        v[k] = m[k] << (31 - k);
    }
    v
}

/// Generates the first `s` points of the sequence, each in `[0,1)^dim`.
pub fn generate(spec: &SequenceSpec, s: usize) -> Result<Vec<Vec<f64>>, SamplingError> {
    if spec.dim == 0 || spec.dim > MAX_DIM {
        return Err(SamplingError::BadDimension(spec.dim));
    }
    let mut points = Vec::with_capacity(s);
    match spec.kind {
        SequenceKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            for _ in 0..s {
                points.push((0..spec.dim).map(|_| rng.gen::<f64>()).collect());
            }
        }
        SequenceKind::Halton => {
            for i in 1..=(s as u64) {
                points.push(
                    HALTON_BASES[..spec.dim]
                        .iter()
                        .map(|&b| radical_inverse(b, i))
                        .collect(),
                );
            }
        }
        SequenceKind::Sobol => {
            let dirs: Vec<[u32; SOBOL_BITS]> = (0..spec.dim).map(sobol_directions).collect();
            let mut state = vec![0u32; spec.dim];
            for i in 1..=(s as u64) {
                // Gray-code update: flip the direction of the lowest zero bit
                // of i-1, which is the bit that changes between successive
                // Gray codes.
                let bit = (i - 1).trailing_ones() as usize;
                let mut point = Vec::with_capacity(spec.dim);
                for (j, st) in state.iter_mut().enumerate() {
                    *st ^= dirs[j][bit];
                    point.push(*st as f64 / (1u64 << 32) as f64);
                }
                points.push(point);
            }
        }
    }
    Ok(points)
}

/// Affine map of a unit-cube point onto the box `[lo, hi]`, componentwise.
pub fn scale_to_box(point: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    point
        .iter()
        .zip(lo.iter().zip(hi.iter()))
        .map(|(&p, (&l, &h))| l + p * (h - l))
        .collect()
}

/// Axis-aligned interval `J = Π[lo_j, hi_j)` inside the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBoxJ {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl IntervalBoxJ {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, SamplingError> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(SamplingError::BadInterval);
        }
        for (&l, &h) in lo.iter().zip(hi.iter()) {
            if !(0.0..=1.0).contains(&l) || !(0.0..=1.0).contains(&h) || l > h {
                return Err(SamplingError::BadInterval);
            }
        }
        Ok(Self { lo, hi })
    }

    /// Anchored box `[0, q)`.
    pub fn anchored(q: Vec<f64>) -> Result<Self, SamplingError> {
        let lo = vec![0.0; q.len()];
        Self::new(lo, q)
    }

    pub fn volume(&self) -> f64 {
        self.lo
            .iter()
            .zip(self.hi.iter())
            .map(|(&l, &h)| h - l)
            .product()
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(self.hi.iter()))
            .all(|(&x, (&l, &h))| l <= x && x < h)
    }
}

/// Local discrepancy `|count(S ∩ J)/s − vol(J)|` with half-open membership.
pub fn discrepancy(j: &IntervalBoxJ, points: &[Vec<f64>]) -> Result<f64, SamplingError> {
    if points.is_empty() {
        return Err(SamplingError::EmptySequence);
    }
    let inside = points.iter().filter(|p| j.contains(p)).count();
    Ok((inside as f64 / points.len() as f64 - j.volume()).abs())
}

/// Lower-bound estimate of the star discrepancy `D*` over `m` anchored
/// trial boxes.
///
/// The corner stream is deterministic given `(points, seed)`: first the
/// sample points themselves, then the all-ones corner, then random
/// mixtures of the pooled per-dimension coordinates. Because the estimate
/// is a running max over a fixed stream, it is monotone in `m`.
pub fn star_discrepancy_estimate(
    points: &[Vec<f64>],
    m: usize,
    seed: u64,
) -> Result<f64, SamplingError> {
    if points.is_empty() {
        return Err(SamplingError::EmptySequence);
    }
    let dim = points[0].len();
    // Coordinate pool per dimension: observed coordinates plus the cube edge.
    let mut pool: Vec<Vec<f64>> = vec![Vec::with_capacity(points.len() + 1); dim];
    for p in points {
        for (d, &x) in p.iter().enumerate() {
            pool[d].push(x);
        }
    }
    for c in pool.iter_mut() {
        c.push(1.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for k in 0..m {
        let corner: Vec<f64> = if k < points.len() {
            points[k].clone()
        } else if k == points.len() {
            vec![1.0; dim]
        } else {
            (0..dim)
                .map(|d| pool[d][rng.gen_range(0..pool[d].len())])
                .collect()
        };
        let j = IntervalBoxJ::anchored(corner)?;
        best = best.max(discrepancy(&j, points)?);
    }
    Ok(best)
}
