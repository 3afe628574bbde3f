//! Acceptance gate: one pass/fail line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines;
//! the single test fails if any criterion fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{Matrix2x4, Matrix4, Vector4};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use lipdse::cli;
use lipdse::lipschitz::{
    estimate_gamma_jacobian, estimate_gamma_pairwise, gamma_f_analytic, gamma_h_analytic,
    BoundsBox, Target,
};
use lipdse::model::{
    build_matrices, derive_constants, equilibrium, eval_dynamics, eval_f, eval_h, jac_f_x,
    jac_h_x, GeneratorParams, Input, State,
};
use lipdse::observer::{
    extract_gain, linearize_output, solve_lmi, verify_certificate, LMIProblem, ObserverGain,
    SolveOutcome,
};
use lipdse::sampling::{generate, star_discrepancy_estimate, SequenceKind, SequenceSpec};
use lipdse::sim::{
    error_metrics, simulate_observer, simulate_plant, step_rk4, InputTrajectory, SimConfig,
};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn shipped_params() -> GeneratorParams {
    serde_json::from_str(&std::fs::read_to_string(data_dir().join("params.json")).unwrap())
        .unwrap()
}

fn shipped_bounds() -> BoundsBox {
    serde_json::from_str(&std::fs::read_to_string(data_dir().join("bounds.json")).unwrap())
        .unwrap()
}

fn scenario_equilibrium(p: &GeneratorParams) -> (State, Input) {
    equilibrium(p, 0.5, 1.0, 0.25, -0.1)
}

type Criterion = (&'static str, fn() -> Result<String, String>);

// 1. Degenerate-box exactness.
fn degenerate_box_exactness() -> Result<String, String> {
    let c = derive_constants(&shipped_params()).unwrap();
    let b = BoundsBox::degenerate([0.0; 4], [0.0; 4]);
    let gh = gamma_h_analytic(&c, &b).value;
    let gf = gamma_f_analytic(&c, &b).value;
    if (gh - 2.0).abs() > 1e-12 {
        return Err(format!("gamma_h on zero box = {gh}, want 2.0 within 1e-12"));
    }
    if gf != 0.0 {
        return Err(format!("gamma_f on zero box = {gf}, want exactly 0"));
    }
    Ok(format!("gamma_h = {gh}, gamma_f = {gf}"))
}

// 2. Upper-bound dominance on randomized boxes and parameter sets.
fn upper_bound_dominance() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trials = 100;
    for trial in 0..trials {
        let xdp = rng.gen_range(0.2..0.5);
        let xqp = rng.gen_range(0.3..0.8);
        let p = GeneratorParams {
            omega0: 120.0 * std::f64::consts::PI,
            h: rng.gen_range(2.0..8.0),
            k_d: rng.gen_range(0.0..4.0),
            td0p: rng.gen_range(4.0..10.0),
            tq0p: rng.gen_range(0.4..1.5),
            xd: xdp + rng.gen_range(0.5..1.8),
            xq: xqp + rng.gen_range(0.3..1.5),
            xdp,
            xqp,
            s_b: rng.gen_range(5.0..100.0),
            s_n: rng.gen_range(100.0..1000.0),
        };
        let c = derive_constants(&p).unwrap();
        let mut dim = |center: f64, max_w: f64, rng: &mut ChaCha8Rng| {
            let c0 = center + rng.gen_range(-1.0..1.0);
            let w = rng.gen_range(0.0..max_w);
            (c0 - 0.5 * w, c0 + 0.5 * w)
        };
        let mut lo = [0.0; 8];
        let mut hi = [0.0; 8];
        for (i, (center, w)) in [
            (0.0, 2.0),
            (377.0, 10.0),
            (0.5, 1.0),
            (0.0, 1.0),
            (0.0, 1.0),
            (1.0, 1.0),
            (0.0, 1.0),
            (0.0, 1.0),
        ]
        .iter()
        .enumerate()
        {
            let (l, h) = dim(*center, *w, &mut rng);
            lo[i] = l;
            hi[i] = h;
        }
        let b = BoundsBox {
            x_lo: [lo[0], lo[1], lo[2], lo[3]],
            x_hi: [hi[0], hi[1], hi[2], hi[3]],
            u_lo: [lo[4], lo[5], lo[6], lo[7]],
            u_hi: [hi[4], hi[5], hi[6], hi[7]],
        };
        let gf = gamma_f_analytic(&c, &b).value;
        let gh = gamma_h_analytic(&c, &b).value;
        let seq = SequenceSpec::new(SequenceKind::Halton, 8, trial as u64);
        let slack = |a: f64| a * (1.0 + 1e-12) + 1e-12;
        for (target, analytic) in [(Target::Process, gf), (Target::Measurement, gh)] {
            let jac = estimate_gamma_jacobian(target, &c, &b, &seq, 500).unwrap().value;
            if jac > slack(analytic) {
                return Err(format!(
                    "trial {trial}: jacobian-sup {jac} exceeds analytic {analytic} ({target:?})"
                ));
            }
            let pair = estimate_gamma_pairwise(target, &c, &b, &seq, 100).unwrap().value;
            if pair > slack(analytic) {
                return Err(format!(
                    "trial {trial}: pairwise {pair} exceeds analytic {analytic} ({target:?})"
                ));
            }
        }
    }
    Ok(format!("{trials} randomized boxes/params, zero violations"))
}

// 3. Analytic Jacobians vs central finite differences.
fn jacobian_correctness() -> Result<String, String> {
    let c = derive_constants(&shipped_params()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let step = 1e-6;
    let mut worst = 0.0f64;
    for point in 0..1000 {
        let x = State::new(
            rng.gen_range(-3.0..3.0),
            rng.gen_range(370.0..384.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        );
        let u = Input::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        );
        let jf = jac_f_x(&c, &x, &u);
        let jh = jac_h_x(&c, &x, &u);
        let mut fd_f = Matrix4::zeros();
        let mut fd_h = Matrix2x4::zeros();
        for j in 0..4 {
            let mut xp = x.as_vector();
            let mut xm = x.as_vector();
            xp[j] += step;
            xm[j] -= step;
            let (sp, sm) = (State::from_vector(&xp), State::from_vector(&xm));
            let df = (eval_f(&c, &sp, &u) - eval_f(&c, &sm, &u)) / (2.0 * step);
            let dh = (eval_h(&c, &sp, &u) - eval_h(&c, &sm, &u)) / (2.0 * step);
            for i in 0..4 {
                fd_f[(i, j)] = df[i];
            }
            for i in 0..2 {
                fd_h[(i, j)] = dh[i];
            }
        }
        let rel_f = (jf - fd_f).norm() / fd_f.norm().max(1.0);
        let rel_h = (jh - fd_h).norm() / fd_h.norm().max(1.0);
        worst = worst.max(rel_f).max(rel_h);
        if rel_f > 1e-6 || rel_h > 1e-6 {
            return Err(format!("point {point}: rel errors f {rel_f:.2e}, h {rel_h:.2e}"));
        }
    }
    Ok(format!("1000 points, worst relative error {worst:.2e}"))
}

// 4. Sampler concordance on the shipped model.
fn sampler_concordance() -> Result<String, String> {
    let c = derive_constants(&shipped_params()).unwrap();
    let b = shipped_bounds();
    let s = 2000;
    let jac = |kind: SequenceKind, seed: u64| {
        estimate_gamma_jacobian(Target::Process, &c, &b, &SequenceSpec::new(kind, 8, seed), s)
            .unwrap()
            .value
    };
    let halton = jac(SequenceKind::Halton, 0);
    let sobol = jac(SequenceKind::Sobol, 0);
    let mut randoms: Vec<f64> = (0..10).map(|seed| jac(SequenceKind::Random, seed)).collect();
    randoms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let random = 0.5 * (randoms[4] + randoms[5]);
    let values = [halton, sobol, random];
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    let spread = (max - min) / max;
    if spread >= 0.05 {
        return Err(format!(
            "spread {:.2}% >= 5% (halton {halton:.4}, sobol {sobol:.4}, random {random:.4})",
            100.0 * spread
        ));
    }
    Ok(format!(
        "halton {halton:.4}, sobol {sobol:.4}, random median {random:.4}; spread {:.2}%",
        100.0 * spread
    ))
}

// 5. Low-discrepancy quality.
fn lds_quality() -> Result<String, String> {
    let m = 4096;
    let disc = |kind: SequenceKind, s: usize, seed: u64| {
        let pts = generate(&SequenceSpec::new(kind, 2, seed), s).unwrap();
        star_discrepancy_estimate(&pts, m, 0).unwrap()
    };
    let halton_1024 = disc(SequenceKind::Halton, 1024, 0);
    let mut rand_1024: Vec<f64> =
        (0..10).map(|seed| disc(SequenceKind::Random, 1024, seed)).collect();
    rand_1024.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rand_med = 0.5 * (rand_1024[4] + rand_1024[5]);
    if halton_1024 >= rand_med {
        return Err(format!("halton {halton_1024:.5} not below random median {rand_med:.5}"));
    }
    let halton_4096 = disc(SequenceKind::Halton, 4096, 0);
    let halton_256 = disc(SequenceKind::Halton, 256, 0);
    if halton_4096 >= halton_256 {
        return Err(format!(
            "discrepancy did not shrink with s: {halton_4096:.5} at 4096 vs {halton_256:.5} at 256"
        ));
    }
    Ok(format!(
        "halton {halton_1024:.5} < random median {rand_med:.5}; halton 4096 {halton_4096:.5} < 256 {halton_256:.5}"
    ))
}

// 6. LMI solver soundness on diagnostic problems.
fn lmi_soundness() -> Result<String, String> {
    let prob = LMIProblem::new(-Matrix4::identity(), Matrix2x4::zeros(), 0.0).unwrap();
    match solve_lmi(&prob).map_err(|e| e.to_string())? {
        SolveOutcome::Feasible(cert) => {
            let (max_eig, p_min) = verify_certificate(&prob, &cert).map_err(|e| e.to_string())?;
            if max_eig > -prob.margin {
                return Err(format!("re-verified lambda_max {max_eig:.3e} above -margin"));
            }
            if p_min < prob.margin {
                return Err(format!("re-verified lambda_min(P) {p_min:.3e} below margin"));
            }
        }
        SolveOutcome::Infeasible { .. } => return Err("A = -I toy reported infeasible".into()),
    }
    let bad = LMIProblem::new(Matrix4::identity(), Matrix2x4::zeros(), 0.0).unwrap();
    match solve_lmi(&bad).map_err(|e| e.to_string())? {
        SolveOutcome::Infeasible { .. } => Ok("A = -I feasible and verified; A = +I infeasible".into()),
        SolveOutcome::Feasible(_) => Err("A = +I toy reported feasible".into()),
    }
}

fn synthesize(gamma: f64) -> Result<ObserverGain, String> {
    let p = shipped_params();
    let c = derive_constants(&p).unwrap();
    let m = build_matrices(&c);
    let (x0, u0) = scenario_equilibrium(&p);
    let (cmat, _) = linearize_output(&c, &x0, &u0);
    let prob = LMIProblem::new(m.a, cmat, gamma).map_err(|e| e.to_string())?;
    match solve_lmi(&prob).map_err(|e| e.to_string())? {
        SolveOutcome::Feasible(cert) => Ok(extract_gain(&cert)),
        SolveOutcome::Infeasible { best_max_eig, .. } => {
            Err(format!("infeasible at gamma {gamma} (best lambda_max {best_max_eig:.3e})"))
        }
    }
}

fn dse_run(gain: &ObserverGain, offset: bool) -> lipdse::sim::SimTrace {
    let p = shipped_params();
    let c = derive_constants(&p).unwrap();
    let m = build_matrices(&c);
    let (x0, u0) = scenario_equilibrium(&p);
    let xhat0 = if offset {
        State::new(x0.delta + 0.3, x0.omega + 2.0, x0.eq_p + 0.1, x0.ed_p + 0.05)
    } else {
        x0
    };
    let traj = InputTrajectory::constant(u0);
    let cfg = SimConfig {
        dt: 1e-3,
        t_final: 10.0,
        x0,
        xhat0,
        pmu_period: None,
        noise_std: None,
        noise_seed: 0,
    };
    let plant = simulate_plant(&c, &m, &traj, &cfg).unwrap();
    simulate_observer(&c, &m, gain, &traj, &cfg, &plant).unwrap()
}

// 7. Convergence with both the conservative and the sampled constant.
fn dual_gamma_estimation() -> Result<String, String> {
    let p = shipped_params();
    let c = derive_constants(&p).unwrap();
    let b = shipped_bounds();
    let gamma_analytic = gamma_f_analytic(&c, &b).value;
    let gamma_numeric = estimate_gamma_jacobian(
        Target::Process,
        &c,
        &b,
        &SequenceSpec::new(SequenceKind::Halton, 8, 0),
        2000,
    )
    .unwrap()
    .value;
    if gamma_numeric >= gamma_analytic {
        return Err(format!(
            "expected sampled gamma {gamma_numeric} below analytic {gamma_analytic}"
        ));
    }
    let mut report = Vec::new();
    for (name, gamma) in [("analytic", gamma_analytic), ("numeric", gamma_numeric)] {
        let gain = synthesize(gamma)?;
        let trace = dse_run(&gain, true);
        let metrics = error_metrics(&trace);
        match metrics.convergence_time {
            Some(t) if t <= 10.0 => report.push(format!("{name} gamma {gamma:.3}: 1% at {t:.2} s")),
            other => {
                return Err(format!(
                    "{name} gamma {gamma:.3}: error did not settle below 1% ({other:?})"
                ))
            }
        }
    }
    Ok(report.join("; "))
}

// 8. Zero-error invariance.
fn zero_error_invariance() -> Result<String, String> {
    let p = shipped_params();
    let c = derive_constants(&p).unwrap();
    let b = shipped_bounds();
    let gain = synthesize(gamma_f_analytic(&c, &b).value)?;
    let trace = dse_run(&gain, false);
    let max_err = trace.error_norm.iter().cloned().fold(0.0, f64::max);
    if max_err >= 1e-9 {
        return Err(format!("error norm reached {max_err:.3e} with matched start"));
    }
    Ok(format!("max error norm {max_err:.3e} over 10 s"))
}

// 9. CLI determinism via manifests.
fn cli_determinism() -> Result<String, String> {
    let data = data_dir();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let params = data.join("params.json");
    let bounds = data.join("bounds.json");
    let inputs = data.join("inputs.csv");
    let p = shipped_params();
    let (x0, _) = scenario_equilibrium(&p);
    let x0s = format!("{},{},{},{}", x0.delta, x0.omega, x0.eq_p, x0.ed_p);
    let xh0s = format!(
        "{},{},{},{}",
        x0.delta + 0.3,
        x0.omega + 2.0,
        x0.eq_p + 0.1,
        x0.ed_p + 0.05
    );
    let synth_dir = tmp.path().join("synth");
    let commands: Vec<Vec<String>> = vec![
        vec!["lipschitz".into(), "analytic".into(), "--params".into(), path_str(&params), "--bounds".into(), path_str(&bounds)],
        vec![
            "lipschitz".into(), "numeric".into(), "--params".into(), path_str(&params), "--bounds".into(), path_str(&bounds),
            "--sampler".into(), "sobol".into(), "--samples".into(), "500".into(), "--seed".into(), "3".into(),
        ],
        vec![
            "observer".into(), "synth".into(), "--params".into(), path_str(&params), "--bounds".into(), path_str(&bounds),
            "--gamma".into(), "analytic".into(), "--x0".into(), x0s.clone(),
        ],
        vec![
            "dse".into(), "simulate".into(), "--params".into(), path_str(&params),
            "--gain".into(), path_str(&synth_dir.join("gain.json")),
            "--inputs".into(), path_str(&inputs),
            "--x0".into(), x0s.clone(), "--xhat0".into(), xh0s,
        ],
        vec!["sample".into(), "emit".into(), "--sampler".into(), "halton".into(), "--dim".into(), "4".into(), "--samples".into(), "128".into()],
    ];
    for (i, cmd) in commands.iter().enumerate() {
        let first = if i == 2 { synth_dir.clone() } else { tmp.path().join(format!("run{i}")) };
        let rerun = tmp.path().join(format!("rerun{i}"));
        let mut args: Vec<String> = vec!["lipdse".into()];
        args.extend(cmd.iter().cloned());
        args.push("--out-dir".into());
        args.push(path_str(&first));
        let code = cli::run(args);
        if code != 0 {
            return Err(format!("command {i} exited {code}"));
        }
        let code = cli::run([
            "lipdse".to_string(),
            "rerun".into(),
            "--manifest".into(),
            path_str(&first.join("manifest.json")),
            "--out-dir".into(),
            path_str(&rerun),
        ]);
        if code != 0 {
            return Err(format!("rerun of command {i} exited {code}"));
        }
        for entry in std::fs::read_dir(&first).map_err(|e| e.to_string())? {
            let entry = entry.map_err(|e| e.to_string())?;
            let name = entry.file_name();
            let a = std::fs::read(entry.path()).map_err(|e| e.to_string())?;
            let b = std::fs::read(rerun.join(&name)).map_err(|e| {
                format!("command {i}: rerun missing {}: {e}", name.to_string_lossy())
            })?;
            if a != b {
                return Err(format!(
                    "command {i}: {} differs between run and rerun",
                    name.to_string_lossy()
                ));
            }
        }
    }
    Ok("5 commands re-run from manifests, all output files bit-identical".into())
}

fn path_str(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

// 10. RK4 self-convergence order.
fn integrator_order() -> Result<String, String> {
    let p = shipped_params();
    let c = derive_constants(&p).unwrap();
    let m = build_matrices(&c);
    let (x0, u0) = scenario_equilibrium(&p);
    // Perturb so the nonlinear terms are active.
    let start = Vector4::new(x0.delta + 0.4, x0.omega + 3.0, x0.eq_p + 0.2, x0.ed_p + 0.1);
    let horizon = 2.0;
    let run = |dt: f64| {
        let mut x = start;
        let n = (horizon / dt).round() as usize;
        for i in 0..n {
            x = step_rk4(
                |_, v| eval_dynamics(&c, &m, &State::from_vector(v), &u0),
                &x,
                i as f64 * dt,
                dt,
            );
        }
        x
    };
    // Steps chosen so the discretization error sits far above the
    // double-precision floor of the smooth trajectory.
    let e1 = (run(0.2) - run(0.1)).norm();
    let e2 = (run(0.1) - run(0.05)).norm();
    let order = (e1 / e2).log2();
    if order < 3.8 {
        return Err(format!("Richardson order {order:.2} below 3.8 (e1 {e1:.3e}, e2 {e2:.3e})"));
    }
    Ok(format!("Richardson order {order:.2}"))
}

#[test]
fn acceptance_criteria() {
    let criteria: Vec<Criterion> = vec![
        ("degenerate-box exactness", degenerate_box_exactness),
        ("upper-bound dominance", upper_bound_dominance),
        ("jacobian correctness", jacobian_correctness),
        ("sampler concordance", sampler_concordance),
        ("low-discrepancy quality", lds_quality),
        ("LMI solver soundness", lmi_soundness),
        ("dual-gamma estimation", dual_gamma_estimation),
        ("zero-error invariance", zero_error_invariance),
        ("CLI determinism", cli_determinism),
        ("integrator order", integrator_order),
    ];
    let mut failures = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let dt = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:2} ({name}): PASS [{dt:.1}s] — {detail}", i + 1),
            Err(msg) => {
                println!("criterion {:2} ({name}): FAIL [{dt:.1}s] — {msg}", i + 1);
                failures.push(format!("{} ({name}): {msg}", i + 1));
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria:\n{}", failures.join("\n"));
}
