//! `nlkpp` command line: single-cell eigen / stationary / evolve runs,
//! config-driven sweeps, and power-law fitting of (sigma, error) tables.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::config::{Reference, SweepConfig};
use crate::error::{Error, Result};
use crate::evolution::{
    evolve_with, logistic_discrete_trajectory, logistic_exact_trajectory, EvolveOptions,
};
use crate::expr::parse_expr;
use crate::grid::{constant, sample, Field, Grid, NormKind};
use crate::kernel::{Kernel, KernelFamily};
use crate::operator::{assemble, Boundary, NonlocalOperator};
use crate::ratefit::fit_rate;
use crate::spectral::principal_eigenpair;
use crate::stationary::{limit_profile, solve_stationary_given_lambda, LimitKind};
use crate::sweep::{run_sweep, write_csv};

#[derive(Parser)]
#[command(
    name = "nlkpp",
    about = "Nonlocal dispersal laboratory: principal eigenvalues, KPP states and sigma-rate sweeps",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Principal eigenvalue of the dispersal operator plus a coefficient.
    Eigen(EigenArgs),
    /// Stationary KPP state and its distance to a limit profile.
    Stationary(StationaryArgs),
    /// Time integration with an optional logistic reference.
    Evolve(EvolveArgs),
    /// Run a config-driven (sigma, m) sweep and write a CSV.
    Sweep(SweepArgs),
    /// Fit a power law to (sigma, error) rows of a CSV.
    RateFit(RateFitArgs),
}

#[derive(Args)]
struct CellArgs {
    /// Kernel family: uniform | triangular | quartic-bump.
    #[arg(long, default_value = "uniform")]
    kernel: String,
    /// Dispersal spread.
    #[arg(long)]
    sigma: f64,
    /// Cost exponent m >= 0.
    #[arg(long)]
    m: f64,
    /// Nodes per axis, e.g. `256` or `32,24`.
    #[arg(long)]
    n: String,
    /// Domain extents, e.g. `1.0` or `1.0x2.0` (boxes anchored at 0).
    #[arg(long, default_value = "1.0")]
    domain: String,
    /// Coefficient a(x): an expression or a path to a field CSV.
    #[arg(long)]
    coef: String,
}

#[derive(Args)]
struct EigenArgs {
    #[command(flatten)]
    cell: CellArgs,
    /// neumann | dirichlet.
    #[arg(long, default_value = "neumann")]
    boundary: String,
    /// Write the eigenfunction as a field CSV.
    #[arg(long)]
    dump_phi: Option<PathBuf>,
    /// Write the operator matrix as i,j,value triplets.
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
}

#[derive(Args)]
struct StationaryArgs {
    #[command(flatten)]
    cell: CellArgs,
    /// neumann | dirichlet.
    #[arg(long, default_value = "neumann")]
    boundary: String,
    /// Limit profile to compare against: a_plus | v1 | v2 | abar.
    #[arg(long, default_value = "a_plus")]
    limit: String,
    /// Write theta as a field CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    cell: CellArgs,
    /// Final time.
    #[arg(long, name = "T")]
    t_final: f64,
    /// Initial state: expression or field CSV path.
    #[arg(long, default_value = "1")]
    u0: String,
    /// Number of recorded output times.
    #[arg(long, default_value_t = 100)]
    out_times: usize,
    /// Reference: logistic | logistic-discrete | mean-logistic | none.
    #[arg(long, name = "ref", default_value = "logistic")]
    reference: String,
    /// Step-size override (never loosened beyond the stability policy).
    #[arg(long)]
    dt: Option<f64>,
    /// Write the final state as a field CSV.
    #[arg(long)]
    dump_final: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep configuration file (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RateFitArgs {
    /// CSV with sigma and error columns (headers `sigma` and one of
    /// `error`/`sup_error`, or the first two columns).
    #[arg(long, name = "in")]
    input: PathBuf,
    /// Expected slope: prints a two-sided verdict at +-tol.
    #[arg(long)]
    expect_slope: Option<f64>,
    /// Upper bound on the slope: prints a one-sided verdict.
    #[arg(long)]
    expect_max_slope: Option<f64>,
    /// Tolerance for --expect-slope.
    #[arg(long, default_value_t = 0.4)]
    tol: f64,
}

/// Entry point used by `main`; returns the process exit code
/// (0 ok, 1 configuration/runtime error, 2 sweep finished with flagged cells).
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Eigen(args) => cmd_eigen(args),
        Command::Stationary(args) => cmd_stationary(args),
        Command::Evolve(args) => cmd_evolve(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::RateFit(args) => cmd_rate_fit(args),
    }
}

fn parse_extents(s: &str) -> Result<Vec<f64>> {
    s.split(['x', 'X'])
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad domain extent `{p}`")))
        })
        .collect()
}

fn parse_counts(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad node count `{p}`")))
        })
        .collect()
}

struct Cell {
    grid: Arc<Grid>,
    kernel: Kernel,
    a: Field,
}

impl Cell {
    fn build(args: &CellArgs) -> Result<Cell> {
        let extent = parse_extents(&args.domain)?;
        let n = parse_counts(&args.n)?;
        if n.len() != extent.len() {
            return Err(Error::Config(format!(
                "domain has {} axes but n has {} entries",
                extent.len(),
                n.len()
            )));
        }
        let grid = Grid::new(&extent, &n)?;
        let family: KernelFamily = args.kernel.parse()?;
        let kernel = Kernel::new(family, grid.dim())?;
        let a = load_field(&grid, &args.coef)?;
        Ok(Cell { grid, kernel, a })
    }

    fn operator(&self, args: &CellArgs, boundary: Boundary) -> Result<NonlocalOperator> {
        assemble(&self.grid, &self.kernel, args.sigma, args.m, boundary)
    }
}

/// An argument names a field CSV when the file exists; otherwise it is
/// parsed as an expression over x[, y].
fn load_field(grid: &Arc<Grid>, spec: &str) -> Result<Field> {
    let path = Path::new(spec);
    if path.exists() && path.is_file() {
        let reader = BufReader::new(File::open(path)?);
        return Field::read_csv(grid.clone(), reader);
    }
    let expr = parse_expr(spec)?;
    if grid.dim() == 1 && expr.uses_y() {
        return Err(Error::Config("expression uses `y` on a 1D domain".into()));
    }
    Ok(sample(grid, |c| expr.eval_at(c)))
}

fn write_field(field: &Field, path: &Path) -> Result<()> {
    let mut f = File::create(path)?;
    field.write_csv(&mut f)
}

fn cmd_eigen(args: EigenArgs) -> Result<i32> {
    let cell = Cell::build(&args.cell)?;
    let boundary: Boundary = args.boundary.parse()?;
    let op = cell.operator(&args.cell, boundary)?;
    let ep = principal_eigenpair(&op, &cell.a)?;
    if let Some(path) = &args.dump_matrix {
        let mut f = File::create(path)?;
        op.dump_matrix_csv(&mut f)?;
    }
    if let Some(path) = &args.dump_phi {
        write_field(&ep.phi, path)?;
    }
    let out = std::io::stdout();
    let mut out = out.lock();
    writeln!(
        out,
        "lambda,residual,lower_bound,upper_bound,solver_gap,eigenfunction_criterion,degenerate"
    )?;
    writeln!(
        out,
        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
        ep.lambda,
        ep.residual,
        ep.diagnostics.lower_bound,
        ep.diagnostics.upper_bound,
        ep.diagnostics.solver_gap,
        ep.diagnostics.eigenfunction_criterion,
        ep.diagnostics.degenerate
    )?;
    Ok(0)
}

fn cmd_stationary(args: StationaryArgs) -> Result<i32> {
    let cell = Cell::build(&args.cell)?;
    let boundary: Boundary = args.boundary.parse()?;
    let limit: LimitKind = args.limit.parse()?;
    let op = cell.operator(&args.cell, boundary)?;
    let ep = principal_eigenpair(&op, &cell.a)?;
    let sol = solve_stationary_given_lambda(&op, &cell.a, ep.lambda)?;
    let target = limit_profile(limit, &cell.grid, &cell.kernel, &cell.a)?;
    let gap = sol.theta.zip_map(&target, |t, v| t - v)?;
    if let Some(path) = &args.out {
        write_field(&sol.theta, path)?;
    }
    let out = std::io::stdout();
    let mut out = out.lock();
    writeln!(
        out,
        "exists,lambda,residual,method_agreement,gap_linf,gap_l1,gap_l2"
    )?;
    writeln!(
        out,
        "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        sol.exists,
        ep.lambda,
        sol.residual,
        sol.method_agreement,
        gap.norm(NormKind::LInf),
        gap.norm(NormKind::L1),
        gap.norm(NormKind::L2)
    )?;
    Ok(0)
}

fn cmd_evolve(args: EvolveArgs) -> Result<i32> {
    let cell = Cell::build(&args.cell)?;
    let op = cell.operator(&args.cell, Boundary::Neumann)?;
    let u0 = load_field(&cell.grid, &args.u0)?;
    let reference: Reference = args.reference.parse()?;
    let traj = evolve_with(
        &op,
        &cell.a,
        &u0,
        args.t_final,
        EvolveOptions {
            dt: args.dt,
            out_times: Some(args.out_times),
            scheme: None,
        },
    )?;
    let ref_states = match reference {
        Reference::LogisticExact => Some(logistic_exact_trajectory(&cell.a, &u0, &traj)?),
        Reference::LogisticDiscrete => Some(logistic_discrete_trajectory(&cell.a, &u0, &traj)?),
        Reference::MeanLogistic => {
            let abar = constant(&cell.grid, cell.a.mean());
            Some(logistic_exact_trajectory(&abar, &u0, &traj)?)
        }
        Reference::None => None,
    };
    if let Some(path) = &args.dump_final {
        write_field(traj.final_state(), path)?;
    }
    let out = std::io::stdout();
    let mut out = out.lock();
    writeln!(out, "t,gap_linf,mass")?;
    for (k, &t) in traj.times().iter().enumerate() {
        let gap = match &ref_states {
            Some(r) => traj.states()[k].linf_distance(&r.states()[k])?,
            None => f64::NAN,
        };
        let mass = traj.states()[k].integral();
        if gap.is_nan() {
            writeln!(out, "{t:.16e},na,{mass:.16e}")?;
        } else {
            writeln!(out, "{t:.16e},{gap:.16e},{mass:.16e}")?;
        }
    }
    Ok(0)
}

fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.config)?;
    let cfg = SweepConfig::parse(&text)?;
    let outcome = run_sweep(&cfg);
    match &args.out {
        Some(path) => {
            let mut f = File::create(path)?;
            write_csv(cfg.task, &outcome.records, &mut f)?;
        }
        None => {
            let out = std::io::stdout();
            let mut out = out.lock();
            write_csv(cfg.task, &outcome.records, &mut out)?;
        }
    }
    Ok(if outcome.any_flagged { 2 } else { 0 })
}

fn cmd_rate_fit(args: RateFitArgs) -> Result<i32> {
    let reader = BufReader::new(File::open(&args.input)?);
    let mut sigma_col = 0usize;
    let mut error_col = 1usize;
    let mut points = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if idx == 0 && cells.iter().any(|c| c.chars().any(|ch| ch.is_alphabetic())) {
            for (k, name) in cells.iter().enumerate() {
                match *name {
                    "sigma" => sigma_col = k,
                    "error" | "sup_error" => error_col = k,
                    _ => {}
                }
            }
            continue;
        }
        if cells.len() <= sigma_col.max(error_col) {
            continue;
        }
        let (Ok(s), Ok(e)) = (
            cells[sigma_col].parse::<f64>(),
            cells[error_col].parse::<f64>(),
        ) else {
            continue;
        };
        points.push((s, e));
    }
    let fit = fit_rate(&points)?;
    let out = std::io::stdout();
    let mut out = out.lock();
    writeln!(out, "slope,intercept,r2,points,dropped")?;
    writeln!(
        out,
        "{:.16e},{:.16e},{:.16e},{},{}",
        fit.slope,
        fit.intercept,
        fit.r2,
        fit.points.len(),
        fit.dropped
    )?;
    let mut verdict_parts = Vec::new();
    if fit.low_confidence {
        verdict_parts.push("low-confidence (r2 < 0.9)".to_string());
    }
    if let Some(q) = args.expect_slope {
        let ok = (fit.slope - q).abs() <= args.tol;
        verdict_parts.push(format!(
            "slope {} {q} +- {} => {}",
            if ok { "within" } else { "outside" },
            args.tol,
            if ok { "ok" } else { "fail" }
        ));
    }
    if let Some(q) = args.expect_max_slope {
        let ok = fit.slope <= q;
        verdict_parts.push(format!(
            "slope {:.4} {} bound {q} => {}",
            fit.slope,
            if ok { "respects" } else { "violates" },
            if ok { "ok" } else { "fail" }
        ));
    }
    if verdict_parts.is_empty() {
        verdict_parts.push("fit-ok".to_string());
    }
    writeln!(out, "verdict: {}", verdict_parts.join("; "))?;
    let failed = verdict_parts.iter().any(|v| v.ends_with("fail"));
    Ok(if failed { 2 } else { 0 })
}
