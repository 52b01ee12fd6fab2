//! The `bench` subcommand: a grid of (m, n, capacitated, feasibility)
//! cells, each instantiated `runs` times and solved by every requested
//! method. Raw per-run rows and per-cell aggregates are written as CSV in
//! deterministic plan order regardless of scheduling; cells and runs
//! execute in parallel when the `parallel` feature is enabled, with
//! MNP_THREADS capping the workers.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::Args;

use mnp_core::baselines::{run_baseline, BaselineConfig, BaselineMethod};
use mnp_core::centroid::CentroidMapping;
use mnp_core::instance::{generate, Feasibility, GeneratorSpec, Shape};
use mnp_core::solver::{solve, SolverConfig, StartPoint};
use mnp_core::update::{UpdateRule, UpdateRuleKind};

use crate::{Cli, CliError};

#[derive(Args)]
pub struct BenchArgs {
    /// Grid cells as MxN[:cap][:feas=<chi>], repeatable.
    #[arg(long = "cell", value_name = "SPEC")]
    cells: Vec<String>,
    /// Single-cell shorthand for --cell.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    capacitated: bool,
    /// Planted-feasible right-hand side with this support density.
    #[arg(long, value_name = "CHI")]
    feasible: Option<f64>,
    /// Comma-separated methods: pg, fw, coordinate (each optionally
    /// +oblivious or +local-norm), base-pg, base-pfg, base-fw, base-afw.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "coordinate,pg+local-norm,pg+oblivious"
    )]
    methods: Vec<String>,
    /// Instances per cell.
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Raw per-run CSV path.
    #[arg(long, default_value = "bench_raw.csv")]
    out: PathBuf,
    /// Aggregated per-cell CSV path.
    #[arg(long, default_value = "bench_agg.csv")]
    agg: PathBuf,
    /// Baseline stationarity threshold, relative to (1 + ||b||).
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
}

#[derive(Clone)]
struct Cell {
    m: usize,
    n: usize,
    capacitated: bool,
    feasibility: Feasibility,
}

impl Cell {
    fn shape(&self) -> Result<Shape, CliError> {
        if self.n >= 2 * self.m {
            Ok(Shape::Rectangular)
        } else if self.n >= self.m && self.n <= (1.1 * self.m as f64).round() as usize {
            Ok(Shape::NearSquare)
        } else {
            Err(CliError::Usage(format!(
                "cell {}x{} fits neither the rectangular (n >= 2m) nor the near-square \
                 (m <= n <= 1.1m) family",
                self.m, self.n
            )))
        }
    }

    fn feasibility_label(&self) -> String {
        match self.feasibility {
            Feasibility::RandomRhs => "random".to_string(),
            Feasibility::Planted { chi } => format!("planted({chi})"),
        }
    }
}

fn parse_cell(spec: &str) -> Result<Cell, CliError> {
    let mut parts = spec.split(':');
    let dims = parts.next().unwrap_or_default();
    let (ms, ns) = dims.split_once('x').ok_or_else(|| {
        CliError::Usage(format!("cell '{spec}': expected MxN[:cap][:feas=<chi>]"))
    })?;
    let m: usize = ms
        .parse()
        .map_err(|_| CliError::Usage(format!("cell '{spec}': bad m '{ms}'")))?;
    let n: usize = ns
        .parse()
        .map_err(|_| CliError::Usage(format!("cell '{spec}': bad n '{ns}'")))?;
    let mut capacitated = false;
    let mut feasibility = Feasibility::RandomRhs;
    for part in parts {
        if part == "cap" {
            capacitated = true;
        } else if let Some(chi) = part.strip_prefix("feas=") {
            let chi: f64 = chi
                .parse()
                .map_err(|_| CliError::Usage(format!("cell '{spec}': bad chi '{chi}'")))?;
            feasibility = Feasibility::Planted { chi };
        } else {
            return Err(CliError::Usage(format!(
                "cell '{spec}': unknown flag '{part}'"
            )));
        }
    }
    Ok(Cell {
        m,
        n,
        capacitated,
        feasibility,
    })
}

#[derive(Clone)]
enum MethodKind {
    Framework {
        rule: UpdateRule,
        mapping: CentroidMapping,
        mapping_label: &'static str,
    },
    Baseline(BaselineMethod),
}

#[derive(Clone)]
struct Method {
    label: String,
    kind: MethodKind,
}

fn parse_method(token: &str) -> Result<Method, CliError> {
    let baseline = match token {
        "base-pg" => Some(BaselineMethod::Pg),
        "base-pfg" => Some(BaselineMethod::Pfg),
        "base-fw" => Some(BaselineMethod::Fw),
        "base-afw" => Some(BaselineMethod::Afw),
        _ => None,
    };
    if let Some(method) = baseline {
        return Ok(Method {
            label: token.to_string(),
            kind: MethodKind::Baseline(method),
        });
    }
    let (rule_tok, mapping_tok) = match token.split_once('+') {
        Some((r, m)) => (r, m),
        None => (token, "local-norm"),
    };
    let rule = match rule_tok {
        "pg" => UpdateRule::projected_gradient(),
        "fw" => UpdateRule::frank_wolfe(),
        "coordinate" => UpdateRule::coordinate(),
        other => {
            return Err(CliError::Usage(format!(
                "unknown method '{other}' in '{token}'"
            )));
        }
    };
    let (mapping, mapping_label) = match mapping_tok {
        "oblivious" => (CentroidMapping::Oblivious, "oblivious"),
        "local-norm" => (CentroidMapping::LocalNorm, "local-norm"),
        other => {
            return Err(CliError::Usage(format!(
                "unknown mapping '{other}' in '{token}'"
            )));
        }
    };
    Ok(Method {
        label: rule_tok.to_string(),
        kind: MethodKind::Framework {
            rule,
            mapping,
            mapping_label,
        },
    })
}

struct Row {
    cell_idx: usize,
    run: usize,
    method_idx: usize,
    seed: u64,
    status: &'static str,
    objective: f64,
    major_cycles: usize,
    minor_cycles: usize,
    wall_ms: f64,
}

/// Per-run instance seed: one fixed stride per cell so cells are
/// independent and every method within a (cell, run) pair sees the same
/// instance.
fn run_seed(master: u64, cell_idx: usize, run: usize) -> u64 {
    master
        .wrapping_add(1_000_003u64.wrapping_mul(cell_idx as u64))
        .wrapping_add(run as u64)
}

fn execute_pair(
    cli: &Cli,
    args: &BenchArgs,
    cells: &[Cell],
    methods: &[Method],
    cell_idx: usize,
    run: usize,
) -> Result<Vec<Row>, CliError> {
    let cell = &cells[cell_idx];
    let seed = run_seed(cli.seed, cell_idx, run);
    let spec = GeneratorSpec {
        shape: cell.shape()?,
        m: cell.m,
        n: cell.n,
        capacitated: cell.capacitated,
        feasibility: cell.feasibility,
        seed,
    };
    let inst = generate(&spec).map_err(|e| CliError::Runtime(e.to_string()))?;
    let time_limit = Duration::from_secs_f64(cli.time_limit);
    let mut rows = Vec::with_capacity(methods.len());
    for (method_idx, method) in methods.iter().enumerate() {
        let started = Instant::now();
        let outcome = match &method.kind {
            MethodKind::Framework { rule, mapping, .. } => {
                // Gradient-style rules start interior so the stabilizing
                // projections see a full free set; the coordinate rule
                // starts at zero to keep its free columns independent.
                let start = if rule.kind == UpdateRuleKind::Coordinate {
                    StartPoint::Zero
                } else {
                    StartPoint::Interior
                };
                let cfg = SolverConfig {
                    rule: *rule,
                    mapping: *mapping,
                    start,
                    opt_tol: cli.opt_tol,
                    snap_tol: cli.snap_tol,
                    time_limit,
                    record_trace: false,
                    ..SolverConfig::default()
                };
                solve(&inst, &cfg)
            }
            MethodKind::Baseline(b) => {
                let cfg = BaselineConfig {
                    method: *b,
                    eps: args.eps,
                    time_limit,
                    ..BaselineConfig::default()
                };
                run_baseline(&inst, &cfg)
            }
        };
        let wall_ms = started.elapsed().as_secs_f64() * 1e3;
        // Per-run failures are recorded, not fatal for the plan.
        let row = match outcome {
            Ok(report) => Row {
                cell_idx,
                run,
                method_idx,
                seed,
                status: report.status.as_str(),
                objective: report.objective,
                major_cycles: report.major_cycles,
                minor_cycles: report.minor_cycles_total,
                wall_ms,
            },
            Err(err) => {
                eprintln!("cell{cell_idx} run {run} method {}: {err}", method.label);
                Row {
                    cell_idx,
                    run,
                    method_idx,
                    seed,
                    status: "error",
                    objective: f64::NAN,
                    major_cycles: 0,
                    minor_cycles: 0,
                    wall_ms,
                }
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(feature = "parallel")]
fn execute_all(
    cli: &Cli,
    args: &BenchArgs,
    cells: &[Cell],
    methods: &[Method],
    pairs: &[(usize, usize)],
) -> Result<Vec<Vec<Row>>, CliError> {
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(cap) = std::env::var("MNP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        builder = builder.num_threads(cap.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| {
        pairs
            .par_iter()
            .map(|&(cell_idx, run)| execute_pair(cli, args, cells, methods, cell_idx, run))
            .collect()
    })
}

#[cfg(not(feature = "parallel"))]
fn execute_all(
    cli: &Cli,
    args: &BenchArgs,
    cells: &[Cell],
    methods: &[Method],
    pairs: &[(usize, usize)],
) -> Result<Vec<Vec<Row>>, CliError> {
    pairs
        .iter()
        .map(|&(cell_idx, run)| execute_pair(cli, args, cells, methods, cell_idx, run))
        .collect()
}

pub fn run(cli: &Cli, args: &BenchArgs) -> Result<(), CliError> {
    let mut cells = Vec::new();
    for spec in &args.cells {
        cells.push(parse_cell(spec)?);
    }
    if cells.is_empty() {
        match (args.m, args.n) {
            (Some(m), Some(n)) => cells.push(Cell {
                m,
                n,
                capacitated: args.capacitated,
                feasibility: match args.feasible {
                    Some(chi) => Feasibility::Planted { chi },
                    None => Feasibility::RandomRhs,
                },
            }),
            _ => {
                return Err(CliError::Usage(
                    "no cells: pass --cell MxN[:cap][:feas=<chi>] or both --m and --n".into(),
                ));
            }
        }
    }
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be positive".into()));
    }
    let methods: Vec<Method> = args
        .methods
        .iter()
        .map(|t| parse_method(t))
        .collect::<Result<_, _>>()?;
    if methods.is_empty() {
        return Err(CliError::Usage("no methods given".into()));
    }
    for cell in &cells {
        cell.shape()?; // validate every cell before any work
        if !cell.capacitated {
            for method in &methods {
                let needs_finite = match &method.kind {
                    MethodKind::Framework { rule, .. } => rule.kind == UpdateRuleKind::FrankWolfe,
                    MethodKind::Baseline(b) => {
                        matches!(b, BaselineMethod::Fw | BaselineMethod::Afw)
                    }
                };
                if needs_finite {
                    return Err(CliError::Usage(format!(
                        "method '{}' requires finite bounds; use a :cap cell",
                        method.label
                    )));
                }
            }
        }
    }

    let pairs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..args.runs).map(move |r| (c, r)))
        .collect();
    let groups = execute_all(cli, args, &cells, &methods, &pairs)?;
    let mut rows: Vec<Row> = groups.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.cell_idx, r.run, r.method_idx));

    let header_comment = format!(
        "# mnp bench: seed={} runs={} time_limit={}s baseline_eps={} (relative to 1+||b||)\n",
        cli.seed, args.runs, cli.time_limit, args.eps
    );
    let mut raw = header_comment.clone();
    raw.push_str(
        "cell_id,m,n,capacitated,feasibility,method,mapping,run,seed,status,objective,\
         major_cycles,minor_cycles,wall_ms\n",
    );
    for row in &rows {
        let cell = &cells[row.cell_idx];
        let method = &methods[row.method_idx];
        let mapping = match &method.kind {
            MethodKind::Framework { mapping_label, .. } => mapping_label,
            MethodKind::Baseline(_) => &"-",
        };
        raw.push_str(&format!(
            "cell{},{},{},{},{},{},{},{},{},{},{:.17e},{},{},{:.3}\n",
            row.cell_idx,
            cell.m,
            cell.n,
            cell.capacitated,
            cell.feasibility_label(),
            method.label,
            mapping,
            row.run,
            row.seed,
            row.status,
            row.objective,
            row.major_cycles,
            row.minor_cycles,
            row.wall_ms,
        ));
    }
    std::fs::write(&args.out, &raw).map_err(CliError::io)?;

    let mut agg = header_comment;
    agg.push_str(
        "cell_id,m,n,capacitated,feasibility,method,mapping,runs,mean_objective,\
         mean_major_cycles,mean_minor_cycles,mean_wall_ms,timeouts\n",
    );
    for (cell_idx, cell) in cells.iter().enumerate() {
        for (method_idx, method) in methods.iter().enumerate() {
            let group: Vec<&Row> = rows
                .iter()
                .filter(|r| r.cell_idx == cell_idx && r.method_idx == method_idx)
                .collect();
            let k = group.len() as f64;
            let mean = |f: &dyn Fn(&Row) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / k;
            let timeouts = group.iter().filter(|r| r.status == "time_limit").count();
            let mapping = match &method.kind {
                MethodKind::Framework { mapping_label, .. } => mapping_label,
                MethodKind::Baseline(_) => &"-",
            };
            agg.push_str(&format!(
                "cell{},{},{},{},{},{},{},{},{:.17e},{:.3},{:.3},{:.3},{}\n",
                cell_idx,
                cell.m,
                cell.n,
                cell.capacitated,
                cell.feasibility_label(),
                method.label,
                mapping,
                group.len(),
                mean(&|r: &Row| r.objective),
                mean(&|r: &Row| r.major_cycles as f64),
                mean(&|r: &Row| r.minor_cycles as f64),
                mean(&|r: &Row| r.wall_ms),
                timeouts,
            ));
        }
    }
    std::fs::write(&args.agg, &agg).map_err(CliError::io)?;
    println!(
        "wrote {} rows to {} and {} aggregates to {}",
        rows.len(),
        args.out.display(),
        cells.len() * methods.len(),
        args.agg.display()
    );
    Ok(())
}
