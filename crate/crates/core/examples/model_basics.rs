//! Evaluates the generator model at an operating point: derived constants,
//! dynamics, outputs, Jacobians, and the closed-form equilibrium.
//!
//! Run with `cargo run --example model_basics`.

use lipdse::model::{
    build_matrices, derive_constants, equilibrium, eval_dynamics, eval_output, jac_f_x, jac_h_x,
    GeneratorParams,
};

fn main() {
    let params: GeneratorParams = serde_json::from_str(include_str!("../../../data/params.json"))
        .expect("shipped params parse");
    let c = derive_constants(&params).expect("valid params");
    let m = build_matrices(&c);

    println!("derived constants:");
    println!("  alpha3 = {:.6}  alpha4 = {:.6e}", c.alpha3, c.alpha4);
    println!("  alpha8 = {:.6e} alpha10 = {:.6e}", c.alpha8, c.alpha10);
    println!("  beta1  = {:.6e} beta2  = {:.6e}", c.beta1, c.beta2);

    // Closed-form equilibrium: rotor angle 0.5 rad, field voltage 1.0 p.u.,
    // terminal current (0.25, -0.1) p.u. on the system base.
    let (x0, u0) = equilibrium(&params, 0.5, 1.0, 0.25, -0.1);
    println!("\nequilibrium state  x0 = {:?}", x0);
    println!("equilibrium input  u0 = {:?}", u0);

    let xdot = eval_dynamics(&c, &m, &x0, &u0);
    println!("state derivative at equilibrium (should be ~0): {:.3e}", xdot.norm());

    let y = eval_output(&c, &m, &x0, &u0);
    println!("terminal voltage phasor y = ({:.6}, {:.6})", y.e_r, y.e_i);

    println!("\nprocess Jacobian df/dx at the equilibrium:");
    println!("{:.6}", jac_f_x(&c, &x0, &u0));
    println!("measurement Jacobian dh/dx at the equilibrium:");
    println!("{:.6}", jac_h_x(&c, &x0, &u0));
}
