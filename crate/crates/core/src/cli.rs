//! Command-line front end.
//!
//! Every run resolves its inputs into a self-contained [`RunManifest`]
//! written next to the outputs; `rerun` re-executes a manifest and
//! reproduces the output files bit-identically. All outputs are pure
//! functions of the resolved configuration and seeds — no wall clock,
//! locale, or environment leaks into them.
//!
//! Exit codes: 0 success, 2 validation error, 3 LMI infeasible,
//! 4 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lipschitz::{
    estimate_gamma_jacobian, estimate_gamma_pairwise, gamma_f_parts, gamma_h_analytic, kappas,
    BoundsBox, KappaVec, LipschitzEstimate, Target,
};
use crate::model::{derive_constants, build_matrices, GeneratorParams, Input, State};
use crate::observer::{
    extract_gain, linearize_output, solve_lmi, verify_certificate, LMIProblem, ObserverGain,
    SolveOutcome,
};
use crate::sampling::{generate, SequenceKind, SequenceSpec};
use crate::sim::{
    error_metrics, load_inputs, simulate_observer, simulate_plant, trace_to_csv, InputTrajectory,
    Interpolation, SimConfig, SimError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("LMI infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::NonFiniteDerivative(_) => CliError::Numerical(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn validation<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Validation(e.to_string())
}

// ---------------------------------------------------------------------------
// Resolved configuration and manifest

/// A command with every input resolved and embedded, so that re-execution
/// needs nothing but this record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum ResolvedCommand {
    LipschitzAnalytic {
        params: GeneratorParams,
        bounds: BoundsBox,
    },
    LipschitzNumeric {
        params: GeneratorParams,
        bounds: BoundsBox,
        sampler: SequenceKind,
        samples: usize,
        seed: u64,
        method: NumericMethod,
    },
    ObserverSynth {
        params: GeneratorParams,
        bounds: BoundsBox,
        /// Resolved numeric value of γ_f used in the LMI.
        gamma: f64,
        /// Provenance of `gamma`: `analytic`, `numeric`, or `explicit`.
        gamma_source: String,
        x0: [f64; 4],
        u0: [f64; 4],
    },
    DseSimulate {
        params: GeneratorParams,
        gain: ObserverGain,
        inputs: InputTrajectory,
        dt: f64,
        t_final: f64,
        x0: [f64; 4],
        xhat0: [f64; 4],
    },
    SampleEmit {
        sampler: SequenceKind,
        dim: usize,
        samples: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NumericMethod {
    Jacobian,
    Pairwise,
}

impl std::str::FromStr for NumericMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jacobian" => Ok(NumericMethod::Jacobian),
            "pairwise" => Ok(NumericMethod::Pairwise),
            other => Err(format!("unknown method `{other}` (expected jacobian|pairwise)")),
        }
    }
}

/// Record of one run, serialized as `manifest.json` alongside the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Seeds consumed by the run, in order of use.
    pub seeds: Vec<u64>,
    #[serde(flatten)]
    pub command: ResolvedCommand,
    /// Output file names relative to the output directory, manifest excluded.
    pub outputs: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    pub fn new(command: ResolvedCommand, outputs: Vec<String>) -> Self {
        let seeds = match &command {
            ResolvedCommand::LipschitzNumeric { seed, .. }
            | ResolvedCommand::SampleEmit { seed, .. } => vec![*seed],
            _ => vec![],
        };
        Self {
            tool: "lipdse".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seeds,
            command,
            outputs,
        }
    }
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticReport {
    pub gamma_f: f64,
    pub gamma_h: f64,
    pub gamma_f_tilde: f64,
    pub kappa: KappaVec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericReport {
    pub estimates: Vec<LipschitzEstimate>,
}

// ---------------------------------------------------------------------------
// Execution

/// Outputs of a command before anything touches the filesystem.
#[derive(Debug, Clone)]
pub struct ExecResult {
    /// (file name, contents), in write order.
    pub files: Vec<(String, Vec<u8>)>,
    /// Human-readable summary for stdout.
    pub summary: String,
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

/// Runs a resolved command. Pure: no filesystem access, no clock, no
/// environment.
pub fn execute(cmd: &ResolvedCommand) -> Result<ExecResult, CliError> {
    match cmd {
        ResolvedCommand::LipschitzAnalytic { params, bounds } => {
            params.validate().map_err(validation)?;
            bounds.validate().map_err(validation)?;
            let c = derive_constants(params).map_err(validation)?;
            let parts = gamma_f_parts(&c, bounds);
            let report = AnalyticReport {
                gamma_f: parts.gamma_f,
                gamma_h: gamma_h_analytic(&c, bounds).value,
                gamma_f_tilde: parts.gamma_f_tilde,
                kappa: kappas(bounds),
            };
            let body = json_bytes(&report);
            let summary = String::from_utf8(body.clone()).unwrap();
            Ok(ExecResult { files: vec![("report.json".into(), body)], summary })
        }
        ResolvedCommand::LipschitzNumeric { params, bounds, sampler, samples, seed, method } => {
            params.validate().map_err(validation)?;
            bounds.validate().map_err(validation)?;
            let c = derive_constants(params).map_err(validation)?;
            let seq = SequenceSpec::new(*sampler, 8, *seed);
            let est = |target| match method {
                NumericMethod::Jacobian => estimate_gamma_jacobian(target, &c, bounds, &seq, *samples),
                NumericMethod::Pairwise => estimate_gamma_pairwise(target, &c, bounds, &seq, *samples),
            };
            let report = NumericReport {
                estimates: vec![
                    est(Target::Process).map_err(validation)?,
                    est(Target::Measurement).map_err(validation)?,
                ],
            };
            let body = json_bytes(&report);
            let summary = String::from_utf8(body.clone()).unwrap();
            Ok(ExecResult { files: vec![("report.json".into(), body)], summary })
        }
        ResolvedCommand::ObserverSynth { params, bounds: _, gamma, gamma_source, x0, u0 } => {
            params.validate().map_err(validation)?;
            if !(gamma.is_finite() && *gamma >= 0.0) {
                return Err(CliError::Validation(format!("gamma must be finite and >= 0, got {gamma}")));
            }
            let c = derive_constants(params).map_err(validation)?;
            let m = build_matrices(&c);
            let x0s = State::new(x0[0], x0[1], x0[2], x0[3]);
            let u0s = Input::new(u0[0], u0[1], u0[2], u0[3]);
            let (cmat, _) = linearize_output(&c, &x0s, &u0s);
            let prob = LMIProblem::new(m.a, cmat, *gamma).map_err(validation)?;
            match solve_lmi(&prob).map_err(|e| CliError::Numerical(e.to_string()))? {
                SolveOutcome::Feasible(cert) => {
                    let (max_eig, p_min) =
                        verify_certificate(&prob, &cert).map_err(|e| CliError::Numerical(e.to_string()))?;
                    let gain = extract_gain(&cert);
                    let summary = format!(
                        "feasible (gamma = {gamma}, source = {gamma_source})\n\
                         re-verified lambda_max = {max_eig:.6e} (margin {:.3e})\n\
                         re-verified lambda_min(P) = {p_min:.6e}\n",
                        cert.margin
                    );
                    Ok(ExecResult {
                        files: vec![
                            ("certificate.json".into(), json_bytes(&cert)),
                            ("gain.json".into(), json_bytes(&gain)),
                        ],
                        summary,
                    })
                }
                SolveOutcome::Infeasible { best_max_eig, iterations } => Err(CliError::Infeasible(
                    format!(
                        "no feasible (P, Y, eta) found for gamma = {gamma} after {iterations} \
                         iterations (best lambda_max {best_max_eig:.3e}); \
                         consider retrying with --gamma numeric"
                    ),
                )),
            }
        }
        ResolvedCommand::DseSimulate { params, gain, inputs, dt, t_final, x0, xhat0 } => {
            params.validate().map_err(validation)?;
            let c = derive_constants(params).map_err(validation)?;
            let m = build_matrices(&c);
            let cfg = SimConfig {
                dt: *dt,
                t_final: *t_final,
                x0: State::new(x0[0], x0[1], x0[2], x0[3]),
                xhat0: State::new(xhat0[0], xhat0[1], xhat0[2], xhat0[3]),
                pmu_period: None,
                noise_std: None,
                noise_seed: 0,
            };
            let plant = simulate_plant(&c, &m, inputs, &cfg)?;
            let trace = simulate_observer(&c, &m, gain, inputs, &cfg, &plant)?;
            let metrics = error_metrics(&trace);
            let mut files: Vec<(String, Vec<u8>)> = vec![
                ("trace.csv".into(), trace_to_csv(&trace).into_bytes()),
                ("metrics.json".into(), json_bytes(&metrics)),
            ];
            // Plot data: one (t, value) series per file.
            for i in 0..4 {
                let mut plant_csv = format!("t,x{}\n", i + 1);
                let mut obs_csv = format!("t,xh{}\n", i + 1);
                for k in 0..trace.times.len() {
                    plant_csv.push_str(&format!(
                        "{},{}\n",
                        trace.times[k],
                        trace.plant_states[k].as_vector()[i]
                    ));
                    obs_csv.push_str(&format!(
                        "{},{}\n",
                        trace.times[k],
                        trace.observer_states[k].as_vector()[i]
                    ));
                }
                files.push((format!("plot_x{}_plant.csv", i + 1), plant_csv.into_bytes()));
                files.push((format!("plot_x{}_observer.csv", i + 1), obs_csv.into_bytes()));
            }
            let mut err_csv = String::from("t,err\n");
            for k in 0..trace.times.len() {
                err_csv.push_str(&format!("{},{}\n", trace.times[k], trace.error_norm[k]));
            }
            files.push(("plot_err.csv".into(), err_csv.into_bytes()));
            let summary = format!(
                "simulated {} steps (dt = {dt}, horizon {t_final})\n\
                 rmse = {:?}\nfinal_err = {:.6e}\nconvergence_time = {:?}\n",
                cfg.steps(),
                metrics.rmse,
                metrics.final_err,
                metrics.convergence_time
            );
            Ok(ExecResult { files, summary })
        }
        ResolvedCommand::SampleEmit { sampler, dim, samples, seed } => {
            let spec = SequenceSpec::new(*sampler, *dim, *seed);
            let points = generate(&spec, *samples).map_err(validation)?;
            let mut csv = String::new();
            for p in &points {
                let row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
            let summary = format!("emitted {} {sampler} points of dimension {dim}\n", points.len());
            Ok(ExecResult { files: vec![("points.csv".into(), csv.into_bytes())], summary })
        }
    }
}

/// Executes a resolved command and writes its outputs plus the manifest
/// into `out_dir`. Nothing is written if execution fails.
pub fn run_resolved(cmd: &ResolvedCommand, out_dir: &Path) -> Result<String, CliError> {
    let result = execute(cmd)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", out_dir.display())))?;
    let names: Vec<String> = result.files.iter().map(|(n, _)| n.clone()).collect();
    for (name, bytes) in &result.files {
        let path = out_dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
    }
    let manifest = RunManifest::new(cmd.clone(), names);
    std::fs::write(out_dir.join(MANIFEST_FILE), json_bytes(&manifest))
        .map_err(|e| CliError::Validation(format!("cannot write manifest: {e}")))?;
    Ok(result.summary)
}

// ---------------------------------------------------------------------------
// Argument parsing

#[derive(Debug, Parser)]
#[command(
    name = "lipdse",
    version,
    about = "Lipschitz constants, observer synthesis and dynamic state estimation \
             for a fourth-order synchronous generator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: TopCommand,
}

#[derive(Debug, Subcommand)]
pub enum TopCommand {
    /// Lipschitz constants of the process and measurement nonlinearities.
    Lipschitz {
        #[command(subcommand)]
        cmd: LipschitzSub,
    },
    /// Observer gain synthesis via LMI feasibility.
    Observer {
        #[command(subcommand)]
        cmd: ObserverSub,
    },
    /// Plant/observer co-simulation.
    Dse {
        #[command(subcommand)]
        cmd: DseSub,
    },
    /// Low-discrepancy and random point sequences.
    Sample {
        #[command(subcommand)]
        cmd: SampleSub,
    },
    /// Re-execute a run from its manifest; outputs are bit-identical.
    Rerun(RerunArgs),
}

#[derive(Debug, Subcommand)]
pub enum LipschitzSub {
    /// Closed-form bounds over an interval box.
    Analytic(AnalyticArgs),
    /// Sampled estimates (Jacobian supremum or pairwise quotients).
    Numeric(NumericArgs),
}

#[derive(Debug, Subcommand)]
pub enum ObserverSub {
    /// Solve the LMI and write certificate + gain.
    Synth(SynthArgs),
}

#[derive(Debug, Subcommand)]
pub enum DseSub {
    /// Run the plant and observer and write trace, metrics and plot data.
    Simulate(SimulateArgs),
}

#[derive(Debug, Subcommand)]
pub enum SampleSub {
    /// Write unit-cube points as CSV, one row per point.
    Emit(EmitArgs),
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    /// Generator parameter JSON file.
    #[arg(long)]
    pub params: PathBuf,
    /// Bounds JSON file with x_lo/x_hi/u_lo/u_hi arrays of length 4.
    #[arg(long)]
    pub bounds: PathBuf,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct NumericArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub bounds: PathBuf,
    /// random|halton|sobol
    #[arg(long, default_value = "halton")]
    pub sampler: String,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// jacobian|pairwise
    #[arg(long, default_value = "jacobian")]
    pub method: String,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub bounds: PathBuf,
    /// analytic | numeric | an explicit numeric value
    #[arg(long, default_value = "analytic")]
    pub gamma: String,
    /// Sampler for the numeric gamma path.
    #[arg(long, default_value = "halton")]
    pub sampler: String,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Estimation method for the numeric gamma path: jacobian|pairwise.
    #[arg(long, default_value = "jacobian")]
    pub method: String,
    /// Operating point state `d,w,eq,ed` for output linearization;
    /// defaults to the bounds-box midpoint.
    #[arg(long)]
    pub x0: Option<String>,
    /// Operating point input `Tm,Efd,iR,iI`; defaults to the bounds-box
    /// midpoint.
    #[arg(long)]
    pub u0: Option<String>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub params: PathBuf,
    /// Gain JSON file as written by `observer synth`.
    #[arg(long)]
    pub gain: PathBuf,
    /// Input CSV with header `t,Tm,Efd,iR,iI`.
    #[arg(long)]
    pub inputs: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_final: f64,
    /// Initial plant state `d,w,eq,ed`.
    #[arg(long)]
    pub x0: String,
    /// Initial observer state `d,w,eq,ed`.
    #[arg(long)]
    pub xhat0: String,
    /// zero-order-hold|linear
    #[arg(long, default_value = "zero-order-hold")]
    pub interpolation: String,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmitArgs {
    /// random|halton|sobol
    #[arg(long, default_value = "halton")]
    pub sampler: String,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    /// Path to a manifest.json from a previous run.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory; defaults to the manifest's directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// File loading and resolution

fn load_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {} file {}: {e}", what, path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: invalid {} file: {e}", path.display(), what)))
}

fn parse_vec4(s: &str, what: &str) -> Result<[f64; 4], CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(CliError::Validation(format!(
            "{what} must be 4 comma-separated numbers, got `{s}`"
        )));
    }
    let mut out = [0.0; 4];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("{what}: `{}` is not a number", p.trim())))?;
    }
    Ok(out)
}

fn parse_sampler(s: &str) -> Result<SequenceKind, CliError> {
    s.parse().map_err(CliError::Validation)
}

fn parse_method(s: &str) -> Result<NumericMethod, CliError> {
    s.parse().map_err(CliError::Validation)
}

fn parse_interpolation(s: &str) -> Result<Interpolation, CliError> {
    match s {
        "zero-order-hold" => Ok(Interpolation::ZeroOrderHold),
        "linear" => Ok(Interpolation::Linear),
        other => Err(CliError::Validation(format!(
            "unknown interpolation `{other}` (expected zero-order-hold|linear)"
        ))),
    }
}

fn box_midpoint(b: &BoundsBox) -> ([f64; 4], [f64; 4]) {
    (
        std::array::from_fn(|i| 0.5 * (b.x_lo[i] + b.x_hi[i])),
        std::array::from_fn(|i| 0.5 * (b.u_lo[i] + b.u_hi[i])),
    )
}

/// Builds the fully resolved command from parsed arguments, loading and
/// validating every referenced file.
pub fn resolve(cmd: TopCommand) -> Result<(ResolvedCommand, PathBuf), CliError> {
    match cmd {
        TopCommand::Lipschitz { cmd: LipschitzSub::Analytic(a) } => {
            let params: GeneratorParams = load_json(&a.params, "params")?;
            let bounds: BoundsBox = load_json(&a.bounds, "bounds")?;
            Ok((ResolvedCommand::LipschitzAnalytic { params, bounds }, a.out_dir))
        }
        TopCommand::Lipschitz { cmd: LipschitzSub::Numeric(a) } => {
            let params: GeneratorParams = load_json(&a.params, "params")?;
            let bounds: BoundsBox = load_json(&a.bounds, "bounds")?;
            Ok((
                ResolvedCommand::LipschitzNumeric {
                    params,
                    bounds,
                    sampler: parse_sampler(&a.sampler)?,
                    samples: a.samples,
                    seed: a.seed,
                    method: parse_method(&a.method)?,
                },
                a.out_dir,
            ))
        }
        TopCommand::Observer { cmd: ObserverSub::Synth(a) } => {
            let params: GeneratorParams = load_json(&a.params, "params")?;
            let bounds: BoundsBox = load_json(&a.bounds, "bounds")?;
            params.validate().map_err(validation)?;
            bounds.validate().map_err(validation)?;
            let c = derive_constants(&params).map_err(validation)?;
            let (gamma, gamma_source) = match a.gamma.as_str() {
                "analytic" => (gamma_f_parts(&c, &bounds).gamma_f, "analytic".to_string()),
                "numeric" => {
                    let seq = SequenceSpec::new(parse_sampler(&a.sampler)?, 8, a.seed);
                    let est = match parse_method(&a.method)? {
                        NumericMethod::Jacobian => {
                            estimate_gamma_jacobian(Target::Process, &c, &bounds, &seq, a.samples)
                        }
                        NumericMethod::Pairwise => {
                            estimate_gamma_pairwise(Target::Process, &c, &bounds, &seq, a.samples)
                        }
                    }
                    .map_err(validation)?;
                    (est.value, "numeric".to_string())
                }
                lit => {
                    let v: f64 = lit.parse().map_err(|_| {
                        CliError::Validation(format!(
                            "--gamma must be analytic, numeric, or a number; got `{lit}`"
                        ))
                    })?;
                    (v, "explicit".to_string())
                }
            };
            let (mid_x, mid_u) = box_midpoint(&bounds);
            let x0 = match &a.x0 {
                Some(s) => parse_vec4(s, "--x0")?,
                None => mid_x,
            };
            let u0 = match &a.u0 {
                Some(s) => parse_vec4(s, "--u0")?,
                None => mid_u,
            };
            Ok((
                ResolvedCommand::ObserverSynth { params, bounds, gamma, gamma_source, x0, u0 },
                a.out_dir,
            ))
        }
        TopCommand::Dse { cmd: DseSub::Simulate(a) } => {
            let params: GeneratorParams = load_json(&a.params, "params")?;
            let gain: ObserverGain = load_json(&a.gain, "gain")?;
            let interpolation = parse_interpolation(&a.interpolation)?;
            let inputs = load_inputs(&a.inputs, interpolation)?;
            Ok((
                ResolvedCommand::DseSimulate {
                    params,
                    gain,
                    inputs,
                    dt: a.dt,
                    t_final: a.t_final,
                    x0: parse_vec4(&a.x0, "--x0")?,
                    xhat0: parse_vec4(&a.xhat0, "--xhat0")?,
                },
                a.out_dir,
            ))
        }
        TopCommand::Sample { cmd: SampleSub::Emit(a) } => Ok((
            ResolvedCommand::SampleEmit {
                sampler: parse_sampler(&a.sampler)?,
                dim: a.dim,
                samples: a.samples,
                seed: a.seed,
            },
            a.out_dir,
        )),
        TopCommand::Rerun(a) => {
            let manifest: RunManifest = load_json(&a.manifest, "manifest")?;
            let out_dir = match a.out_dir {
                Some(d) => d,
                None => a
                    .manifest
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from(".")),
            };
            Ok((manifest.command, out_dir))
        }
    }
}

/// Full CLI entry point: parses, resolves, executes, writes, prints.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes; anything else is a
            // validation failure.
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match resolve(cli.cmd).and_then(|(cmd, out_dir)| run_resolved(&cmd, &out_dir)) {
        Ok(summary) => {
            print!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_params_json() -> String {
        serde_json::to_string(&GeneratorParams {
            omega0: 120.0 * std::f64::consts::PI,
            h: 5.0,
            k_d: 2.0,
            td0p: 8.0,
            tq0p: 0.8,
            xd: 1.8,
            xq: 1.7,
            xdp: 0.3,
            xqp: 0.55,
            s_b: 10.0,
            s_n: 900.0,
        })
        .unwrap()
    }

    fn test_bounds_json() -> String {
        serde_json::to_string(&BoundsBox {
            x_lo: [0.1, 372.0, 0.85, -0.15],
            x_hi: [0.9, 382.0, 1.15, 0.15],
            u_lo: [-0.5, 0.5, -0.3, -0.3],
            u_hi: [1.5, 3.0, 0.3, 0.3],
        })
        .unwrap()
    }

    fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, content).unwrap();
        p
    }

    #[test]
    fn parse_vec4_good_and_bad() {
        assert_eq!(parse_vec4("1,2.5,-3,4e-1", "--x0").unwrap(), [1.0, 2.5, -3.0, 0.4]);
        assert!(parse_vec4("1,2,3", "--x0").is_err());
        assert!(parse_vec4("1,2,3,abc", "--x0").is_err());
    }

    #[test]
    fn degenerate_box_analytic_via_cli() {
        let dir = tempfile::tempdir().unwrap();
        let params = write(dir.path(), "params.json", &test_params_json());
        let bounds = write(
            dir.path(),
            "bounds.json",
            r#"{"x_lo":[0,0,0,0],"x_hi":[0,0,0,0],"u_lo":[0,0,0,0],"u_hi":[0,0,0,0]}"#,
        );
        let out = dir.path().join("out");
        let code = run([
            "lipdse", "lipschitz", "analytic",
            "--params", params.to_str().unwrap(),
            "--bounds", bounds.to_str().unwrap(),
            "--out-dir", out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        let report: AnalyticReport =
            serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap())
                .unwrap();
        assert!((report.gamma_h - 2.0).abs() < 1e-12);
        assert_eq!(report.gamma_f, 0.0);
        assert!(out.join(MANIFEST_FILE).exists());
    }

    #[test]
    fn missing_bounds_field_names_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let params = write(dir.path(), "params.json", &test_params_json());
        let bounds = write(
            dir.path(),
            "bounds.json",
            r#"{"x_lo":[0,0,0,0],"x_hi":[0,0,0,0],"u_lo":[0,0,0,0]}"#,
        );
        let (_, err) = run_captured(&[
            "lipdse", "lipschitz", "analytic",
            "--params", params.to_str().unwrap(),
            "--bounds", bounds.to_str().unwrap(),
        ]);
        let e = err.unwrap();
        assert_eq!(e.exit_code(), EXIT_VALIDATION);
        assert!(e.to_string().contains("u_hi"), "{e}");
    }

    // Drives resolve+execute without touching stdout or the exit path.
    fn run_captured(args: &[&str]) -> (Option<String>, Option<CliError>) {
        let cli = Cli::try_parse_from(args).unwrap();
        match resolve(cli.cmd).and_then(|(cmd, out_dir)| run_resolved(&cmd, &out_dir)) {
            Ok(s) => (Some(s), None),
            Err(e) => (None, Some(e)),
        }
    }

    #[test]
    fn numeric_same_seed_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let params = write(dir.path(), "params.json", &test_params_json());
        let bounds = write(dir.path(), "bounds.json", &test_bounds_json());
        let run_once = |out: &Path| {
            let code = run([
                "lipdse", "lipschitz", "numeric",
                "--params", params.to_str().unwrap(),
                "--bounds", bounds.to_str().unwrap(),
                "--sampler", "random",
                "--samples", "50",
                "--seed", "7",
                "--method", "pairwise",
                "--out-dir", out.to_str().unwrap(),
            ]);
            assert_eq!(code, EXIT_OK);
            std::fs::read(out.join("report.json")).unwrap()
        };
        let a = run_once(&dir.path().join("a"));
        let b = run_once(&dir.path().join("b"));
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_sampler_and_method_are_validation_errors() {
        let dir = tempfile::tempdir().unwrap();
        let params = write(dir.path(), "params.json", &test_params_json());
        let bounds = write(dir.path(), "bounds.json", &test_bounds_json());
        for (flag, value) in [("--sampler", "uniform"), ("--method", "hessian")] {
            let (_, err) = run_captured(&[
                "lipdse", "lipschitz", "numeric",
                "--params", params.to_str().unwrap(),
                "--bounds", bounds.to_str().unwrap(),
                flag, value,
            ]);
            assert_eq!(err.unwrap().exit_code(), EXIT_VALIDATION);
        }
    }

    #[test]
    fn sample_emit_row_per_point() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let code = run([
            "lipdse", "sample", "emit",
            "--sampler", "halton",
            "--dim", "2",
            "--samples", "4",
            "--out-dir", out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        let text = std::fs::read_to_string(out.join("points.csv")).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0], "0.5,0.3333333333333333");
    }

    #[test]
    fn missing_gain_file_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let params = write(dir.path(), "params.json", &test_params_json());
        let inputs = write(dir.path(), "in.csv", "t,Tm,Efd,iR,iI\n0,1,2,0,0\n");
        let out = dir.path().join("out");
        let (_, err) = run_captured(&[
            "lipdse", "dse", "simulate",
            "--params", params.to_str().unwrap(),
            "--gain", dir.path().join("nope.json").to_str().unwrap(),
            "--inputs", inputs.to_str().unwrap(),
            "--x0", "0,0,0,0",
            "--xhat0", "0,0,0,0",
            "--out-dir", out.to_str().unwrap(),
        ]);
        assert_eq!(err.unwrap().exit_code(), EXIT_VALIDATION);
        assert!(!out.exists());
    }

    #[test]
    fn manifest_roundtrips_through_serde() {
        let cmd = ResolvedCommand::SampleEmit {
            sampler: SequenceKind::Sobol,
            dim: 3,
            samples: 16,
            seed: 42,
        };
        let m = RunManifest::new(cmd, vec!["points.csv".into()]);
        let text = serde_json::to_string_pretty(&m).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.seeds, vec![42]);
    }

    #[test]
    fn rerun_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        assert_eq!(
            run([
                "lipdse", "sample", "emit",
                "--sampler", "sobol",
                "--dim", "3",
                "--samples", "32",
                "--seed", "5",
                "--out-dir", out.to_str().unwrap(),
            ]),
            EXIT_OK
        );
        let points1 = std::fs::read(out.join("points.csv")).unwrap();
        let manifest1 = std::fs::read(out.join(MANIFEST_FILE)).unwrap();
        let out2 = dir.path().join("out2");
        assert_eq!(
            run([
                "lipdse", "rerun",
                "--manifest", out.join(MANIFEST_FILE).to_str().unwrap(),
                "--out-dir", out2.to_str().unwrap(),
            ]),
            EXIT_OK
        );
        assert_eq!(std::fs::read(out2.join("points.csv")).unwrap(), points1);
        assert_eq!(std::fs::read(out2.join(MANIFEST_FILE)).unwrap(), manifest1);
    }

    #[test]
    fn help_exits_zero_unknown_flag_exits_two() {
        assert_eq!(run(["lipdse", "--help"]), EXIT_OK);
        assert_eq!(run(["lipdse", "lipschitz", "analytic", "--bogus"]), EXIT_VALIDATION);
    }
}
