//! Argument parsing and subcommand dispatch.
//!
//! Exit codes: 0 success/certified, 2 not certified within budget,
//! 3 input error, 4 internal assertion failure.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use otbarriers::classical::{barrier_sinkhorn, entropic_sinkhorn, lp_reference};
use otbarriers::driver::{solve_classical, solve_quantum};
use otbarriers::ipm::PathMode;
use otbarriers::OtError;

use crate::bench::{bench_csv, run_bench};
use crate::generate;
use crate::report::{ipm_trace_csv, sweep_trace_csv, IterationCounts, ResultReport, SolverParams};
use crate::schema::{load_instance, LoadedInstance};
use crate::validate::{validate_classical, validate_quantum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CERTIFIED: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "otb",
    about = "Barrier and entropic relaxations of classical and quantum optimal transport",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Lp,
    Entropic,
    #[value(name = "barrier-sinkhorn")]
    BarrierSinkhorn,
    Ipm,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StepMode {
    Short,
    Long,
}

impl From<StepMode> for PathMode {
    fn from(m: StepMode) -> Self {
        match m {
            StepMode::Short => PathMode::ShortStep,
            StepMode::Long => PathMode::LongStep,
        }
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, value_enum)]
    method: Method,
    /// Target precision for the duality gap.
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    /// Relaxation strength; defaults to delta/log(prod dims) for entropic
    /// and 0.1 for barrier-sinkhorn.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum, default_value_t = StepMode::Long)]
    mode: StepMode,
    #[arg(long = "in")]
    input: PathBuf,
    /// Write per-iteration rows as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the result report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    kind: String,
    /// Comma-separated mode dimensions, e.g. 3,3 or 4,4,4.
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.25)]
    conditioning: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value = "classical")]
    kind: String,
    /// Comma-separated sizes (n for n x n instances).
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 1e-4)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = StepMode::Short)]
    mode: StepMode,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an instance with the chosen method.
    Solve(SolveArgs),
    /// Run every applicable oracle and invariant suite on an instance.
    Validate(ValidateArgs),
    /// Generate a seeded random instance file.
    Generate(GenerateArgs),
    /// Benchmark seeded instances across sizes.
    Bench(BenchArgs),
}

fn exit_code_for(err: &OtError) -> i32 {
    match err {
        OtError::ModeOutOfRange { .. }
        | OtError::DimensionMismatch(_)
        | OtError::InvalidInput(_)
        | OtError::NonPositiveMarginal { .. }
        | OtError::SingularDensity { .. }
        | OtError::KernelUnderflow(_)
        | OtError::LpTooLarge { .. } => EXIT_INPUT,
        OtError::IterationBudget(_) => EXIT_NOT_CERTIFIED,
        OtError::EigenNonConvergence { .. }
        | OtError::DomainViolation(_)
        | OtError::SingularSystem(_)
        | OtError::DegenerateBasis(_)
        | OtError::ChainViolation(_)
        | OtError::Internal(_) => EXIT_INTERNAL,
    }
}

fn write_text(path: &PathBuf, text: &str) -> Result<(), OtError> {
    std::fs::write(path, text)
        .map_err(|e| OtError::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn internal_threads() -> usize {
    match std::env::var("OT_BARRIER_THREADS") {
        Ok(v) => v.parse::<usize>().unwrap_or(0),
        Err(_) => 0,
    }
}

fn run_solve(args: &SolveArgs) -> Result<i32, OtError> {
    let loaded = load_instance(&args.input)?;
    let start = Instant::now();
    let mode: PathMode = args.mode.into();
    let mode_name = match mode {
        PathMode::ShortStep => "short",
        PathMode::LongStep => "long",
    };

    let report = match (&loaded, args.method) {
        (LoadedInstance::Classical(inst), Method::Lp) => {
            let (tau, v) = lp_reference(inst)?;
            ResultReport {
                method: "lp".into(),
                value: tau,
                primal_value: Some(tau),
                gap: Some(0.0),
                residuals: vec![v.marginal_residual(inst.marginals())],
                iterations: IterationCounts::default(),
                flop_estimate: 0,
                wall_time_s: start.elapsed().as_secs_f64(),
                certified: true,
                params: SolverParams {
                    delta: args.delta,
                    ..Default::default()
                },
            }
        }
        (LoadedInstance::Classical(inst), Method::Entropic) => {
            let n_total: f64 = inst.cells() as f64;
            let eps = args.epsilon.unwrap_or(args.delta / n_total.ln());
            let sol = entropic_sinkhorn(inst, eps, 1e-10, 400_000)?;
            ResultReport {
                method: "entropic".into(),
                value: sol.tau_eps,
                primal_value: Some(sol.tau_eps),
                gap: None,
                residuals: vec![sol.max_residual],
                iterations: IterationCounts {
                    sweeps: sol.sweeps,
                    ..Default::default()
                },
                flop_estimate: 0,
                wall_time_s: start.elapsed().as_secs_f64(),
                certified: true,
                params: SolverParams {
                    delta: args.delta,
                    epsilon: Some(eps),
                    ..Default::default()
                },
            }
        }
        (LoadedInstance::Classical(inst), Method::BarrierSinkhorn) => {
            let eps = args.epsilon.unwrap_or(0.1);
            let sol = barrier_sinkhorn(inst, eps, 1e-8, 100_000)?;
            if let Some(path) = &args.trace {
                write_text(path, &sweep_trace_csv(&sol.trace))?;
            }
            ResultReport {
                method: "barrier-sinkhorn".into(),
                value: sol.tau_beta,
                primal_value: Some(sol.tau_beta),
                gap: None,
                residuals: vec![sol.max_residual],
                iterations: IterationCounts {
                    sweeps: sol.sweeps,
                    ..Default::default()
                },
                flop_estimate: 0,
                wall_time_s: start.elapsed().as_secs_f64(),
                certified: sol.converged,
                params: SolverParams {
                    delta: args.delta,
                    epsilon: Some(eps),
                    ..Default::default()
                },
            }
        }
        (LoadedInstance::Classical(inst), Method::Ipm) => {
            let sol = solve_classical(inst, args.delta, mode)?;
            if let Some(path) = &args.trace {
                write_text(path, &ipm_trace_csv(&sol.report.trace))?;
            }
            let region = otbarriers::barrier::classical_trust_region(inst);
            ResultReport {
                method: "ipm".into(),
                value: sol.report.value,
                primal_value: Some(sol.report.certificate.primal_value),
                gap: Some(sol.report.certificate.gap),
                residuals: sol.report.certificate.primal_residuals.clone(),
                iterations: IterationCounts {
                    phase1_newton: sol.report.iterations.phase1_newton,
                    phase2_outer: sol.report.iterations.phase2_outer,
                    phase2_newton: sol.report.iterations.phase2_newton,
                    ..Default::default()
                },
                flop_estimate: sol.report.flops,
                wall_time_s: start.elapsed().as_secs_f64(),
                certified: sol.report.certified,
                params: SolverParams {
                    delta: args.delta,
                    epsilon: Some(sol.report.eps_final),
                    mode: Some(mode_name.into()),
                    radius: Some(region.radius),
                    start_summary: Some(format!(
                        "x_i = (t/n_i) 1 with slack floor 1, |z0| = {:.6}",
                        region.center.iter().map(|v| v * v).sum::<f64>().sqrt()
                    )),
                },
            }
        }
        (LoadedInstance::Quantum(inst), Method::Ipm) => {
            let sol = solve_quantum(inst, args.delta, mode)?;
            if let Some(path) = &args.trace {
                write_text(path, &ipm_trace_csv(&sol.report.trace))?;
            }
            let region = otbarriers::barrier::quantum_trust_region(inst);
            ResultReport {
                method: "ipm".into(),
                value: sol.report.value,
                primal_value: Some(sol.report.certificate.primal_value),
                gap: Some(sol.report.certificate.gap),
                residuals: sol.report.certificate.primal_residuals.clone(),
                iterations: IterationCounts {
                    phase1_newton: sol.report.iterations.phase1_newton,
                    phase2_outer: sol.report.iterations.phase2_outer,
                    phase2_newton: sol.report.iterations.phase2_newton,
                    ..Default::default()
                },
                flop_estimate: sol.report.flops,
                wall_time_s: start.elapsed().as_secs_f64(),
                certified: sol.report.certified,
                params: SolverParams {
                    delta: args.delta,
                    epsilon: Some(sol.report.eps_final),
                    mode: Some(mode_name.into()),
                    radius: Some(region.radius),
                    start_summary: Some(format!(
                        "X_i = (t/n_i) I with slack floor 1, |z0| = {:.6}",
                        region.center.iter().map(|v| v * v).sum::<f64>().sqrt()
                    )),
                },
            }
        }
        (LoadedInstance::Quantum(_), _) => {
            return Err(OtError::InvalidInput(
                "quantum instances support --method ipm only".into(),
            ));
        }
    };

    println!("{}", report.to_json());
    if let Some(path) = &args.out {
        report.save(path)?;
    }
    Ok(if report.certified {
        EXIT_OK
    } else {
        EXIT_NOT_CERTIFIED
    })
}

fn run_validate(args: &ValidateArgs) -> Result<i32, OtError> {
    let loaded = load_instance(&args.input)?;
    let checks = match &loaded {
        LoadedInstance::Classical(inst) => validate_classical(inst),
        LoadedInstance::Quantum(inst) => validate_quantum(inst),
    };
    let mut all_ok = true;
    for c in &checks {
        let flag = if c.passed { "PASS" } else { "FAIL" };
        println!("{flag} {}: {}", c.name, c.detail);
        all_ok &= c.passed;
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_INTERNAL })
}

fn run_generate(args: &GenerateArgs) -> Result<i32, OtError> {
    let file = generate::generate(&args.kind, &args.dims, args.seed, args.conditioning)?;
    file.save(&args.out)?;
    println!(
        "wrote {} instance with dims {:?} to {}",
        args.kind,
        args.dims,
        args.out.display()
    );
    Ok(EXIT_OK)
}

fn run_bench_cmd(args: &BenchArgs) -> Result<i32, OtError> {
    if args.sizes.is_empty() {
        return Err(OtError::InvalidInput("--sizes must be nonempty".into()));
    }
    let rows = run_bench(
        &args.kind,
        &args.sizes,
        args.repeats,
        args.delta,
        args.mode.into(),
        internal_threads(),
    )?;
    let csv = bench_csv(&rows);
    write_text(&args.out, &csv)?;
    print!("{csv}");
    Ok(EXIT_OK)
}

/// Parses `argv` and runs the subcommand, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // Help and version requests are successes, not input errors.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Validate(a) => run_validate(a),
        Command::Generate(a) => run_generate(a),
        Command::Bench(a) => run_bench_cmd(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
