//! Lipschitz-based dynamic state estimation for a fourth-order synchronous
//! generator with phasor (PMU) measurements.
//!
//! The crate covers the full pipeline:
//!
//! * [`model`] — the generator in collected form `ẋ = A x + f(x,u) + B_u u`,
//!   `y = h(x,u) + D_u u`, with analytic Jacobians and a closed-form
//!   equilibrium.
//! * [`lipschitz`] — analytical Lipschitz bounds for `f` and `h` over an
//!   interval box, plus sampled estimators (Jacobian supremum and pairwise
//!   difference quotients).
//! * [`sampling`] — Halton, Sobol and seeded-random point sequences on the
//!   unit cube with a star-discrepancy lower-bound estimator.
//! * [`observer`] — observer synthesis via a linear matrix inequality
//!   feasibility problem, with machine-checkable certificates and gain
//!   extraction `L = P⁻¹ Y`.
//! * [`sim`] — fixed-step RK4 co-simulation of plant and observer with
//!   estimation-error metrics.
//! * [`cli`] — the command-line front end and run-manifest plumbing used by
//!   the `lipdse` binary.
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod cli;
pub mod linalg;
pub mod lipschitz;
pub mod model;
pub mod observer;
pub mod sampling;
pub mod sim;

pub use lipschitz::{
    estimate_gamma_jacobian, estimate_gamma_pairwise, gamma_f_analytic, gamma_h_analytic,
    BoundsBox, LipschitzEstimate, Method, Sampler, Target,
};
pub use model::{
    build_matrices, derive_constants, equilibrium, DerivedConstants, GeneratorParams, Input,
    Output, State, StateMatrices,
};
pub use observer::{
    extract_gain, solve_lmi, verify_certificate, FeasibilityCertificate, LMIProblem, ObserverGain,
    SolveOutcome,
};
pub use sampling::{SequenceKind, SequenceSpec};
pub use sim::{
    error_metrics, load_inputs, simulate_observer, simulate_plant, ErrorMetrics, InputTrajectory,
    Interpolation, SimConfig, SimTrace,
};
