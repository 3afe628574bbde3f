//! Compares Halton, Sobol, and seeded-random sampling on two tasks:
//! star-discrepancy of the generated point sets, and the sampled Lipschitz
//! estimate of the process nonlinearity. Low-discrepancy sequences cover
//! the box more evenly and agree closely with each other.
//!
//! Run with `cargo run --release --example sampler_comparison`.

use lipdse::lipschitz::{estimate_gamma_jacobian, BoundsBox, Target};
use lipdse::model::{derive_constants, GeneratorParams};
use lipdse::sampling::{generate, star_discrepancy_estimate, SequenceKind, SequenceSpec};

fn main() {
    let params: GeneratorParams = serde_json::from_str(include_str!("../../../data/params.json"))
        .expect("shipped params parse");
    let bounds: BoundsBox = serde_json::from_str(include_str!("../../../data/bounds.json"))
        .expect("shipped bounds parse");
    let c = derive_constants(&params).expect("valid params");

    println!("star-discrepancy lower-bound estimates (dim 2, m = 4096 trial boxes):");
    for s in [256usize, 1024, 4096] {
        print!("  s = {s:5}:");
        for kind in [SequenceKind::Halton, SequenceKind::Sobol, SequenceKind::Random] {
            let pts = generate(&SequenceSpec::new(kind, 2, 1), s).unwrap();
            let d = star_discrepancy_estimate(&pts, 4096, 0).unwrap();
            print!("  {kind} {d:.5}");
        }
        println!();
    }

    println!("\nJacobian-sup estimate of gamma_f at s = 2000:");
    let mut values = Vec::new();
    for kind in [SequenceKind::Halton, SequenceKind::Sobol, SequenceKind::Random] {
        let est = estimate_gamma_jacobian(
            Target::Process,
            &c,
            &bounds,
            &SequenceSpec::new(kind, 8, 42),
            2000,
        )
        .unwrap();
        println!("  {kind}: {:.6}", est.value);
        values.push(est.value);
    }
    let (min, max) = values.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    println!("  relative spread: {:.2}%", 100.0 * (max - min) / max);
}
