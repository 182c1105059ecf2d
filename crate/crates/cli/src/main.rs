//! Command-line interface: validation, products, majorization and
//! compatibility checks on JSON-encoded measurements, seeded samplers, and
//! the reproducible experiments.
//!
//! Exit codes: 0 success/holds, 1 validation-or-property violation (JSON
//! detail on stdout), 2 usage error, 3 numeric failure. Every experiment is
//! deterministic for fixed flags and seed, so reruns are byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use povmdyn::compat::{decide_compatibility, CompatError, CompatVerdict};
use povmdyn::dynamics::{blockwise_product, dual_blockwise_product, DynamicsError};
use povmdyn::experiments::{
    conjecture_sweep_all, fixed_point_experiment, monotone_trajectory, volume_ratio_mc,
    ExperimentsError,
};
use povmdyn::linalg::LinalgError;
use povmdyn::majorization::{
    classical_majorizes, operator_majorizes, sortable_order, ConjectureReading, MajorizationError,
};
use povmdyn::povm::{
    BlockMatrix, BlockMatrixJson, DensityMatrix, DensityMatrixJson, Povm, PovmError, PovmJson,
};
use povmdyn::sampling::{
    random_bistochastic, random_density, random_povm, BistochasticMethod, PovmMethod,
    SamplingError, SeededRng,
};

#[derive(Parser)]
#[command(
    name = "povmdyn",
    version,
    about = "Blockwise measurement dynamics toolbox"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a measurement or block matrix file
    Validate {
        #[command(subcommand)]
        target: ValidateTarget,
    },
    /// Blockwise product of two files (measurements or block matrices)
    Product {
        left: PathBuf,
        right: PathBuf,
        /// Use the dual product, which conjugates with the left factor
        #[arg(long)]
        dual: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Operator majorization P over Q, or classical majorization at a state
    Majorize {
        p: PathBuf,
        q: PathBuf,
        /// Compare the outcome distributions at this state instead
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Decide joint measurability of two measurements
    Compat {
        p: PathBuf,
        q: PathBuf,
        #[arg(long, default_value_t = 5000)]
        budget: usize,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Draw a seeded random object and write its JSON encoding
    Sample {
        #[command(subcommand)]
        target: SampleTarget,
    },
    /// Reproducible experiments
    Experiment {
        #[command(subcommand)]
        kind: ExperimentKind,
    },
}

#[derive(Subcommand)]
enum ValidateTarget {
    Povm {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    Block {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PovmMethodArg {
    Ginibre,
    NearExtremal,
    NearUniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum BistochasticMethodArg {
    Feasibility,
    NearIdentity,
    NearFlat,
    Circulant,
}

#[derive(Args)]
struct SampleCommon {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SampleTarget {
    Povm {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum)]
        method: PovmMethodArg,
        /// Mixing weight for the perturbation methods
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[command(flatten)]
        common: SampleCommon,
    },
    Bistochastic {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum)]
        method: BistochasticMethodArg,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[command(flatten)]
        common: SampleCommon,
    },
    Density {
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        common: SampleCommon,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReadingArg {
    Joint,
    PerK,
}

#[derive(Subcommand)]
enum ExperimentKind {
    /// Monte Carlo fraction of PSD qubit operators that are valid effects
    Volume {
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Noisy-identity dynamics from stratified random starts
    FixedPoints {
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 5000)]
        steps: usize,
        #[arg(long, default_value_t = 10)]
        starts: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Norm-profile domination sweep over all sampling recipe pairings
    Conjecture {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Samples per recipe pairing
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "joint")]
        reading: ReadingArg,
        /// Mixing weight for the perturbation recipes
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entropy monotone along an iterated bistochastic evolution
    Monotone {
        #[arg(long)]
        povm: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure classified by exit code.
enum AppError {
    /// Exit 1: the inputs or the asserted property failed, with JSON detail.
    Violation(Value),
    /// Exit 2: wrong invocation (missing files, bad flags).
    Usage(String),
    /// Exit 3: numeric failure inside a solver.
    Numeric(String),
}

impl AppError {
    fn exit(self) -> ExitCode {
        match self {
            AppError::Violation(detail) => {
                println!("{detail}");
                ExitCode::from(1)
            }
            AppError::Usage(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
            AppError::Numeric(msg) => {
                eprintln!("numeric failure: {msg}");
                ExitCode::from(3)
            }
        }
    }
}

impl From<LinalgError> for AppError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::EigenFailed { .. } => AppError::Numeric(e.to_string()),
            other => AppError::Violation(json!({"error": other.to_string()})),
        }
    }
}

impl From<PovmError> for AppError {
    fn from(e: PovmError) -> Self {
        match e {
            PovmError::Invalid(violations) => AppError::Violation(json!({
                "error": "validation failed",
                "violations": violations,
            })),
            PovmError::Linalg(inner) => inner.into(),
            other => AppError::Usage(other.to_string()),
        }
    }
}

impl From<DynamicsError> for AppError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Linalg(inner) => inner.into(),
            DynamicsError::Povm(inner) => inner.into(),
            other => AppError::Violation(json!({"error": other.to_string()})),
        }
    }
}

impl From<MajorizationError> for AppError {
    fn from(e: MajorizationError) -> Self {
        match e {
            MajorizationError::Linalg(inner) => inner.into(),
            MajorizationError::Povm(inner) => inner.into(),
            MajorizationError::CombinatorialLimit { .. } => AppError::Usage(e.to_string()),
            other => AppError::Violation(json!({"error": other.to_string()})),
        }
    }
}

impl From<CompatError> for AppError {
    fn from(e: CompatError) -> Self {
        match e {
            CompatError::Linalg(inner) => inner.into(),
            CompatError::Povm(inner) => inner.into(),
            other => AppError::Violation(json!({"error": other.to_string()})),
        }
    }
}

impl From<SamplingError> for AppError {
    fn from(e: SamplingError) -> Self {
        match e {
            SamplingError::Linalg(inner) => inner.into(),
            SamplingError::Povm(inner) => inner.into(),
            other => AppError::Numeric(other.to_string()),
        }
    }
}

impl From<ExperimentsError> for AppError {
    fn from(e: ExperimentsError) -> Self {
        match e {
            ExperimentsError::Sampling(inner) => inner.into(),
            ExperimentsError::Dynamics(inner) => inner.into(),
            ExperimentsError::Majorization(inner) => inner.into(),
            ExperimentsError::Povm(inner) => inner.into(),
            ExperimentsError::Linalg(inner) => inner.into(),
            ExperimentsError::EmptyConditioningSet => {
                AppError::Violation(json!({"error": e.to_string()}))
            }
            ExperimentsError::UnsupportedDimension { .. } => AppError::Usage(e.to_string()),
        }
    }
}

fn read_text(path: &Path) -> Result<String, AppError> {
    std::fs::read_to_string(path)
        .map_err(|e| AppError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_json(path: &Path) -> Result<Value, AppError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| {
        AppError::Violation(json!({
            "error": format!("{} is not valid JSON: {e}", path.display()),
        }))
    })
}

fn load_povm(path: &Path, tol: f64) -> Result<Povm, AppError> {
    let value = parse_json(path)?;
    let doc: PovmJson = serde_json::from_value(value).map_err(|e| {
        AppError::Violation(json!({
            "error": format!("{} does not match the measurement schema: {e}", path.display()),
        }))
    })?;
    Ok(Povm::from_json(&doc, tol)?)
}

fn load_density(path: &Path) -> Result<DensityMatrix, AppError> {
    let value = parse_json(path)?;
    let doc: DensityMatrixJson = serde_json::from_value(value).map_err(|e| {
        AppError::Violation(json!({
            "error": format!("{} does not match the state schema: {e}", path.display()),
        }))
    })?;
    Ok(DensityMatrix::from_json(&doc)?)
}

fn load_block(path: &Path, tol: f64) -> Result<BlockMatrix, AppError> {
    let value = parse_json(path)?;
    let doc: BlockMatrixJson = serde_json::from_value(value).map_err(|e| {
        AppError::Violation(json!({
            "error": format!("{} does not match the block matrix schema: {e}", path.display()),
        }))
    })?;
    Ok(BlockMatrix::from_json(&doc, tol)?)
}

/// A product operand: a measurement file (becomes the n x 1 block column) or
/// a block matrix file.
fn load_operand(path: &Path, tol: f64) -> Result<(BlockMatrix, bool), AppError> {
    let value = parse_json(path)?;
    if value.get("effects").is_some() {
        let doc: PovmJson = serde_json::from_value(value).map_err(|e| {
            AppError::Violation(json!({
                "error": format!("{} does not match the measurement schema: {e}", path.display()),
            }))
        })?;
        Ok((Povm::from_json(&doc, tol)?.to_block(), true))
    } else if value.get("blocks").is_some() {
        let doc: BlockMatrixJson = serde_json::from_value(value).map_err(|e| {
            AppError::Violation(json!({
                "error": format!("{} does not match the block matrix schema: {e}", path.display()),
            }))
        })?;
        Ok((BlockMatrix::from_json(&doc, tol)?, false))
    } else {
        Err(AppError::Violation(json!({
            "error": format!("{} has neither \"effects\" nor \"blocks\"", path.display()),
        })))
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), AppError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| AppError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn to_pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => e.exit(),
    }
}

/// Returns `Ok(false)` for clean "property does not hold" outcomes, which
/// exit 1 after their JSON detail has already been printed.
fn run(cli: Cli) -> Result<bool, AppError> {
    match cli.command {
        Command::Validate { target } => match target {
            ValidateTarget::Povm { file, tol } => {
                let p = load_povm(&file, tol)?;
                println!(
                    "{}",
                    json!({"valid": true, "kind": "povm", "n": p.n(), "d": p.d()})
                );
                Ok(true)
            }
            ValidateTarget::Block { file, tol } => {
                let b = load_block(&file, tol)?;
                println!(
                    "{}",
                    json!({
                        "valid": true,
                        "kind": b.kind(tol.max(povmdyn::povm::SUM_TOL)),
                        "rows": b.rows(),
                        "cols": b.cols(),
                        "d": b.d(),
                    })
                );
                Ok(true)
            }
        },
        Command::Product {
            left,
            right,
            dual,
            out,
        } => {
            let (a, _) = load_operand(&left, 1e-9)?;
            let (b, right_is_povm) = load_operand(&right, 1e-9)?;
            let result = if dual {
                dual_blockwise_product(&a, &b)?
            } else {
                blockwise_product(&a, &b)?
            };
            let content = if right_is_povm && result.cols() == 1 {
                match result.to_povm() {
                    Ok(p) => to_pretty(&serde_json::to_value(p.to_json()).expect("encodes")),
                    // the dual product can leave the measurement set
                    Err(_) => to_pretty(&serde_json::to_value(result.to_json()).expect("encodes")),
                }
            } else {
                to_pretty(&serde_json::to_value(result.to_json()).expect("encodes"))
            };
            write_output(&out, &content)?;
            Ok(true)
        }
        Command::Majorize { p, q, state, tol } => {
            let p = load_povm(&p, tol)?;
            let q = load_povm(&q, tol)?;
            match state {
                None => {
                    let Some(order) = sortable_order(&p, tol)? else {
                        println!(
                            "{}",
                            json!({"holds": false, "reason": "first measurement is not sortable"})
                        );
                        return Ok(false);
                    };
                    let sorted = p.permuted(&order);
                    let report = operator_majorizes(&sorted, &q, tol)?;
                    println!(
                        "{}",
                        json!({
                            "holds": report.holds,
                            "ordering": order,
                            "k_values": report.k_values,
                            "equality_residual": report.equality_residual,
                        })
                    );
                    Ok(report.holds)
                }
                Some(state) => {
                    let rho = load_density(&state)?;
                    let pv: Vec<f64> = p
                        .effects()
                        .iter()
                        .map(|e| rho.expectation(e.matrix()))
                        .collect();
                    let qv: Vec<f64> = q
                        .effects()
                        .iter()
                        .map(|e| rho.expectation(e.matrix()))
                        .collect();
                    let holds = classical_majorizes(&pv, &qv, tol)?;
                    println!("{}", json!({"holds": holds, "p": pv, "q": qv}));
                    Ok(holds)
                }
            }
        }
        Command::Compat { p, q, budget, tol } => {
            let p = load_povm(&p, 1e-9)?;
            let q = load_povm(&q, 1e-9)?;
            match decide_compatibility(&p, &q, budget, tol)? {
                CompatVerdict::Feasible(m) => {
                    let blocks: Vec<Vec<_>> = (0..m.rows())
                        .map(|i| {
                            (0..m.cols())
                                .map(|j| povmdyn::povm::matrix_to_json(m.block(i, j)))
                                .collect()
                        })
                        .collect();
                    println!(
                        "{}",
                        json!({
                            "status": "feasible",
                            "mother": {
                                "rows": m.rows(),
                                "cols": m.cols(),
                                "d": m.d(),
                                "blocks": blocks,
                            },
                        })
                    );
                    Ok(true)
                }
                CompatVerdict::Infeasible(cert) => {
                    println!(
                        "{}",
                        json!({
                            "status": "infeasible",
                            "certificate": {
                                "p_index": cert.p_index,
                                "q_index": cert.q_index,
                                "commutator_norm": cert.commutator_norm,
                            },
                        })
                    );
                    Ok(false)
                }
                CompatVerdict::Unknown {
                    iterations,
                    residual,
                } => {
                    println!(
                        "{}",
                        json!({"status": "unknown", "iterations": iterations, "residual": residual})
                    );
                    Ok(true)
                }
            }
        }
        Command::Sample { target } => match target {
            SampleTarget::Povm {
                n,
                d,
                method,
                epsilon,
                common,
            } => {
                let method = match method {
                    PovmMethodArg::Ginibre => PovmMethod::GinibreRenormalized,
                    PovmMethodArg::NearExtremal => PovmMethod::NearExtremal(epsilon),
                    PovmMethodArg::NearUniform => PovmMethod::NearUniform(epsilon),
                };
                let mut rng = SeededRng::new(common.seed);
                let p = random_povm(n, d, method, &mut rng)?;
                let content = to_pretty(&serde_json::to_value(p.to_json()).expect("encodes"));
                write_output(&common.out, &content)?;
                Ok(true)
            }
            SampleTarget::Bistochastic {
                n,
                d,
                method,
                epsilon,
                common,
            } => {
                let method = match method {
                    BistochasticMethodArg::Feasibility => BistochasticMethod::FeasibilityCompleted,
                    BistochasticMethodArg::NearIdentity => {
                        BistochasticMethod::NearIdentity(epsilon)
                    }
                    BistochasticMethodArg::NearFlat => BistochasticMethod::NearFlat(epsilon),
                    BistochasticMethodArg::Circulant => BistochasticMethod::Circulant,
                };
                let mut rng = SeededRng::new(common.seed);
                let b = random_bistochastic(n, d, method, &mut rng)?;
                let content = to_pretty(&serde_json::to_value(b.to_json()).expect("encodes"));
                write_output(&common.out, &content)?;
                Ok(true)
            }
            SampleTarget::Density { d, common } => {
                let mut rng = SeededRng::new(common.seed);
                let rho = random_density(d, &mut rng);
                let content = to_pretty(&serde_json::to_value(rho.to_json()).expect("encodes"));
                write_output(&common.out, &content)?;
                Ok(true)
            }
        },
        Command::Experiment { kind } => match kind {
            ExperimentKind::Volume { samples, seed } => {
                let est = volume_ratio_mc(samples, seed)?;
                println!("{}", serde_json::to_string(&est).expect("estimate encodes"));
                Ok(true)
            }
            ExperimentKind::FixedPoints {
                epsilon,
                steps,
                starts,
                seed,
                out,
            } => {
                let runs = fixed_point_experiment(epsilon, steps, starts, seed)?;
                let mut csv =
                    String::from("start,product,iteration,t,tau,tau_sigma_z,offdiag_plusminus\n");
                for run in &runs {
                    for s in &run.trajectory.steps {
                        writeln!(
                            csv,
                            "{},{},{},{},{},{},{}",
                            run.start,
                            run.product,
                            s.iteration,
                            s.t,
                            s.tau,
                            s.tau_sigma_z,
                            s.offdiag_plusminus
                        )
                        .expect("string write");
                    }
                }
                write_output(&out, &csv)?;
                Ok(true)
            }
            ExperimentKind::Conjecture {
                n,
                d,
                samples,
                seed,
                reading,
                epsilon,
                out,
            } => {
                let reading = match reading {
                    ReadingArg::Joint => ConjectureReading::Joint,
                    ReadingArg::PerK => ConjectureReading::PerK,
                };
                let reports = conjecture_sweep_all(n, d, samples, seed, reading, epsilon)?;
                let total_violations: usize = reports.iter().map(|r| r.violations.len()).sum();
                let wrapper = json!({
                    "n": n,
                    "d": d,
                    "samples_per_pairing": samples,
                    "seed": seed,
                    "reading": format!("{reading:?}"),
                    "total_violations": total_violations,
                    "reports": reports,
                });
                write_output(&out, &to_pretty(&wrapper))?;
                Ok(true)
            }
            ExperimentKind::Monotone {
                povm,
                matrix,
                state,
                steps,
                out,
            } => {
                let p = load_povm(&povm, 1e-9)?;
                let b = load_block(&matrix, 1e-9)?;
                let rho = load_density(&state)?;
                let traj = monotone_trajectory(&p, &b, &rho, steps)?;
                let mut csv = String::from("step,entropy\n");
                for (k, v) in traj.values.iter().enumerate() {
                    writeln!(csv, "{k},{v}").expect("string write");
                }
                write_output(&out, &csv)?;
                if let Some(stop) = traj.stopped_at {
                    eprintln!("stopped early: iterate {stop} is not sortable");
                }
                Ok(true)
            }
        },
    }
}
