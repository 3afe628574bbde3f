//! Synthesizes an observer gain by solving the LMI feasibility problem,
//! once with the conservative analytic Lipschitz constant and once with the
//! smaller sampled one, and re-verifies both certificates through the
//! independent eigensolver path.
//!
//! Run with `cargo run --release --example observer_synthesis`.

use lipdse::lipschitz::{estimate_gamma_jacobian, gamma_f_parts, BoundsBox, Target};
use lipdse::model::{build_matrices, derive_constants, equilibrium, GeneratorParams};
use lipdse::observer::{extract_gain, linearize_output, solve_lmi, verify_certificate, LMIProblem, SolveOutcome};
use lipdse::sampling::{SequenceKind, SequenceSpec};

fn main() {
    let params: GeneratorParams = serde_json::from_str(include_str!("../../../data/params.json"))
        .expect("shipped params parse");
    let bounds: BoundsBox = serde_json::from_str(include_str!("../../../data/bounds.json"))
        .expect("shipped bounds parse");
    let c = derive_constants(&params).expect("valid params");
    let m = build_matrices(&c);

    // Linearize the output map at the scenario equilibrium.
    let (x0, u0) = equilibrium(&params, 0.5, 1.0, 0.25, -0.1);
    let (cmat, _) = linearize_output(&c, &x0, &u0);

    let gamma_analytic = gamma_f_parts(&c, &bounds).gamma_f;
    let gamma_numeric = estimate_gamma_jacobian(
        Target::Process,
        &c,
        &bounds,
        &SequenceSpec::new(SequenceKind::Halton, 8, 0),
        2000,
    )
    .unwrap()
    .value;

    for (name, gamma) in [("analytic", gamma_analytic), ("numeric", gamma_numeric)] {
        println!("gamma_f ({name}) = {gamma:.6}");
        let prob = LMIProblem::new(m.a, cmat, gamma).unwrap();
        match solve_lmi(&prob).unwrap() {
            SolveOutcome::Feasible(cert) => {
                let (max_eig, p_min) = verify_certificate(&prob, &cert).unwrap();
                let gain = extract_gain(&cert);
                println!("  feasible after {} iterations", cert.iterations);
                println!("  re-verified lambda_max = {max_eig:.3e}, lambda_min(P) = {p_min:.3e}");
                println!("  gain L = {:?}\n", gain.l);
            }
            SolveOutcome::Infeasible { best_max_eig, iterations } => {
                println!("  infeasible after {iterations} iterations (best lambda_max {best_max_eig:.3e})\n");
            }
        }
    }
}
