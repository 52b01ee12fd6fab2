//! `mnp`: generate, solve, benchmark, and verify box-constrained
//! minimum-norm-point instances.
//!
//! Exit codes: 0 success, 1 runtime or check failure, 2 usage error.

mod bench;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mnp_core::centroid::CentroidMapping;
use mnp_core::instance::{self, Feasibility, GeneratorSpec, Shape};
use mnp_core::solver::{self, CycleKind, SolverConfig, StartPoint};
use mnp_core::suite::{self, SuiteConfig};
use mnp_core::update::{PgStep, UpdateRule, UpdateRuleKind};
use mnp_core::Error;

#[derive(Parser)]
#[command(
    name = "mnp",
    version,
    about = "Box-constrained minimum-norm-point / NNLS toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master random seed.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Wall-clock limit per solve, in seconds.
    #[arg(long, global = true, default_value_t = 60.0)]
    pub time_limit: f64,
    /// Optimality tolerance, relative: scaled by (1 + ||b||).
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub opt_tol: f64,
    /// Bound-snap tolerance, relative: scaled by max(1, u(i)).
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub snap_tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Generate(GenerateArgs),
    /// Solve an instance file and print a summary.
    Solve(SolveArgs),
    /// Run a grid of solver/baseline configurations and emit CSV tables.
    Bench(bench::BenchArgs),
    /// Run the verification suite on small random instances.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Rect,
    NearSquare,
}

#[derive(Args)]
struct GenerateArgs {
    /// Instance family: rect (n >= 2m) or near-square (m <= n <= 1.1m).
    #[arg(long, value_enum)]
    shape: ShapeArg,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    /// Unit upper bounds instead of infinite ones.
    #[arg(long)]
    capacitated: bool,
    /// Plant a feasible right-hand side with this support density in (0, 1].
    #[arg(long, value_name = "CHI")]
    feasible: Option<f64>,
    /// Output path; stdout if omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum RuleArg {
    Pg,
    Fw,
    Coordinate,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MappingArg {
    Oblivious,
    LocalNorm,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum StartArg {
    Zero,
    Interior,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file in the MNP text format.
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = RuleArg::Pg)]
    rule: RuleArg,
    #[arg(long, value_enum, default_value_t = MappingArg::LocalNorm)]
    mapping: MappingArg,
    #[arg(long, value_enum, default_value_t = StartArg::Zero)]
    start: StartArg,
    /// Fixed projected-gradient step (default 1/||A||^2 where needed).
    #[arg(long, value_name = "LAMBDA")]
    fixed_step: Option<f64>,
    /// Write the cycle trace as CSV.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest instance size for brute-force-certified sections (cap 12).
    #[arg(long, default_value_t = 6)]
    n: usize,
    /// Number of oracle-equivalence instances.
    #[arg(long, default_value_t = 40)]
    instances: usize,
}

pub fn rule_from(rule: RuleArg, fixed_step: Option<f64>) -> UpdateRule {
    let kind = match rule {
        RuleArg::Pg => UpdateRuleKind::ProjectedGradient,
        RuleArg::Fw => UpdateRuleKind::FrankWolfe,
        RuleArg::Coordinate => UpdateRuleKind::Coordinate,
    };
    let pg_step = match fixed_step {
        Some(l) => PgStep::Fixed(l),
        None => PgStep::OptimalLineSearch,
    };
    UpdateRule { kind, pg_step }
}

pub fn mapping_from(mapping: MappingArg) -> CentroidMapping {
    match mapping {
        MappingArg::Oblivious => CentroidMapping::Oblivious,
        MappingArg::LocalNorm => CentroidMapping::LocalNorm,
    }
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs) -> Result<(), CliError> {
    let spec = GeneratorSpec {
        shape: match args.shape {
            ShapeArg::Rect => Shape::Rectangular,
            ShapeArg::NearSquare => Shape::NearSquare,
        },
        m: args.m,
        n: args.n,
        capacitated: args.capacitated,
        feasibility: match args.feasible {
            Some(chi) => Feasibility::Planted { chi },
            None => Feasibility::RandomRhs,
        },
        seed: cli.seed,
    };
    let inst = instance::generate(&spec).map_err(CliError::usage_if_spec)?;
    let text = instance::write_instance(&inst);
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(CliError::io)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn trace_csv(report: &solver::SolveReport) -> String {
    let mut out = String::from(
        "kind,objective_after,i0,i1,j,alpha_star,direction_norm,predicted_drop,image_move_sq\n",
    );
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
    for ev in &report.trace {
        let kind = match ev.cycle_kind {
            CycleKind::MajorUpdate => "major_update",
            CycleKind::MinorCentroid => "minor_centroid",
        };
        let (i0, i1, j) = ev.partition_sizes;
        out.push_str(&format!(
            "{kind},{:.17e},{i0},{i1},{j},{},{},{},{}\n",
            ev.objective_after,
            opt(ev.alpha_star),
            opt(ev.direction_norm),
            opt(ev.predicted_drop),
            opt(ev.image_move_sq),
        ));
    }
    out
}

fn cmd_solve(cli: &Cli, args: &SolveArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.instance).map_err(CliError::io)?;
    let inst = instance::read_instance(&text).map_err(CliError::runtime)?;
    let cfg = SolverConfig {
        rule: rule_from(args.rule, args.fixed_step),
        mapping: mapping_from(args.mapping),
        start: match args.start {
            StartArg::Zero => StartPoint::Zero,
            StartArg::Interior => StartPoint::Interior,
        },
        opt_tol: cli.opt_tol,
        snap_tol: cli.snap_tol,
        time_limit: Duration::from_secs_f64(cli.time_limit),
        record_trace: true,
        ..SolverConfig::default()
    };
    let started = std::time::Instant::now();
    let report = solver::solve(&inst, &cfg).map_err(CliError::runtime)?;
    let wall = started.elapsed();
    println!("status: {}", report.status.as_str());
    println!("objective: {:.12e}", report.objective);
    println!("major cycles: {}", report.major_cycles);
    println!("minor cycles: {}", report.minor_cycles_total);
    println!("wall time: {:.3} ms", wall.as_secs_f64() * 1e3);
    if let Some(path) = &args.trace {
        std::fs::write(path, trace_csv(&report)).map_err(CliError::io)?;
    }
    Ok(())
}

fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> Result<bool, CliError> {
    if args.n > mnp_core::oracle::BRUTE_FORCE_MAX_N {
        return Err(CliError::Usage(format!(
            "--n {} exceeds the brute-force enumeration cap of {}",
            args.n,
            mnp_core::oracle::BRUTE_FORCE_MAX_N
        )));
    }
    let cfg = SuiteConfig {
        seed: cli.seed,
        equivalence_instances: args.instances,
        max_n: args.n,
        ..SuiteConfig::default()
    };
    let report = suite::run_all(&cfg).map_err(CliError::runtime)?;
    print!("{report}");
    Ok(report.all_pass())
}

/// Errors mapped onto the documented exit codes.
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn runtime(e: Error) -> Self {
        CliError::Runtime(e.to_string())
    }

    fn io(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }

    /// Generator-spec problems are flag mistakes, not runtime failures.
    fn usage_if_spec(e: Error) -> Self {
        match e {
            Error::InvalidSpec(msg) => CliError::Usage(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes (e.g. `mnp verify | head`)
    // instead of panicking on the failed write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Generate(args) => cmd_generate(&cli, args).map(|()| true),
        Command::Solve(args) => cmd_solve(&cli, args).map(|()| true),
        Command::Bench(args) => bench::run(&cli, args).map(|()| true),
        Command::Verify(args) => cmd_verify(&cli, args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
