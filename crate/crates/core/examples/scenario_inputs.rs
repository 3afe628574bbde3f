//! Regenerates the shipped input trajectory `data/inputs.csv`: a constant
//! input holding the generator at the closed-form equilibrium used by the
//! estimation scenario.
//!
//! Run with `cargo run --example scenario_inputs`; pass `--stdout` to print
//! instead of writing the file.

use lipdse::model::{equilibrium, GeneratorParams};

fn main() {
    let params: GeneratorParams = serde_json::from_str(include_str!("../../../data/params.json"))
        .expect("shipped params parse");
    let (x0, u0) = equilibrium(&params, 0.5, 1.0, 0.25, -0.1);

    let mut csv = String::from("t,Tm,Efd,iR,iI\n");
    for t in [0.0, 10.0] {
        csv.push_str(&format!("{},{},{},{},{}\n", t, u0.tm, u0.efd, u0.i_r, u0.i_i));
    }

    if std::env::args().any(|a| a == "--stdout") {
        print!("{csv}");
    } else {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/inputs.csv");
        std::fs::write(path, &csv).expect("write inputs.csv");
        println!("wrote {path}");
    }
    println!("# plant initial state: {},{},{},{}", x0.delta, x0.omega, x0.eq_p, x0.ed_p);
}
