//! Computes the closed-form Lipschitz bounds for the process and
//! measurement nonlinearities over the shipped interval box, then compares
//! them against sampled estimates — the analytical bound is conservative,
//! the sampled ones approach the true constant from below.
//!
//! Run with `cargo run --release --example lipschitz_bounds`.

use lipdse::lipschitz::{
    estimate_gamma_jacobian, estimate_gamma_pairwise, gamma_f_parts, gamma_h_analytic, kappas,
    BoundsBox, Target,
};
use lipdse::model::{derive_constants, GeneratorParams};
use lipdse::sampling::{SequenceKind, SequenceSpec};

fn main() {
    let params: GeneratorParams = serde_json::from_str(include_str!("../../../data/params.json"))
        .expect("shipped params parse");
    let bounds: BoundsBox = serde_json::from_str(include_str!("../../../data/bounds.json"))
        .expect("shipped bounds parse");
    let c = derive_constants(&params).expect("valid params");

    let k = kappas(&bounds);
    println!("kappa_x = {:?}", k.kx);
    println!("kappa_u = {:?}", k.ku);

    let parts = gamma_f_parts(&c, &bounds);
    let gh = gamma_h_analytic(&c, &bounds).value;
    println!("\nanalytic bounds:");
    println!("  gamma_f       = {:.6} (gamma_f_tilde = {:.6})", parts.gamma_f, parts.gamma_f_tilde);
    println!("  gamma_h       = {:.6}", gh);

    let seq = SequenceSpec::new(SequenceKind::Halton, 8, 0);
    for (name, target, analytic) in
        [("f", Target::Process, parts.gamma_f), ("h", Target::Measurement, gh)]
    {
        let jac = estimate_gamma_jacobian(target, &c, &bounds, &seq, 2000).unwrap().value;
        let pair = estimate_gamma_pairwise(target, &c, &bounds, &seq, 400).unwrap().value;
        println!(
            "\n{name}: analytic {analytic:.4} >= jacobian-sup {jac:.4}, pairwise {pair:.4}"
        );
        assert!(analytic >= jac && analytic >= pair);
    }
}
