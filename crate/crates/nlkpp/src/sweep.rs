//! Executes a (sigma, m) experiment grid described by a [`SweepConfig`] and
//! emits one CSV row per cell. Cells are independent work items; failures
//! are recorded in the row's flag column and the sweep continues.

use std::io::Write;

use crate::config::{Reference, SweepConfig, Task};
use crate::error::{Error, Result};
use crate::evolution::{
    evolve_with, logistic_discrete_trajectory, logistic_exact_trajectory, sup_error,
    EvolveOptions,
};
use crate::exec;
use crate::grid::{constant, sample, NormKind};
use crate::operator::assemble;
use crate::spectral::principal_eigenpair;
use crate::stationary::{limit_profile, solve_stationary_given_lambda};

#[derive(Debug, Clone)]
pub enum CellOutputs {
    Eigen {
        lambda: f64,
        residual: f64,
        lower_bound: f64,
        upper_bound: f64,
        solver_gap: f64,
        eigenfunction_criterion: bool,
        degenerate: bool,
    },
    Stationary {
        exists: bool,
        lambda: f64,
        residual: f64,
        method_agreement: f64,
        gap_linf: f64,
        gap_l1: f64,
        gap_l2: f64,
    },
    EvolveRate {
        sup_error: Option<f64>,
        dt: f64,
        steps: usize,
        mass_residual: f64,
    },
    Failed,
}

#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub sigma: f64,
    pub m: f64,
    pub n: Vec<usize>,
    pub outputs: CellOutputs,
    pub flag: Option<String>,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub any_flagged: bool,
}

/// Runs every (sigma, m) cell. Cell order is sigma-major, matching the
/// config lists; records are deterministic for a fixed config and build.
pub fn run_sweep(cfg: &SweepConfig) -> SweepOutcome {
    let cells: Vec<(f64, f64)> = cfg
        .sigmas
        .iter()
        .flat_map(|&s| cfg.ms.iter().map(move |&m| (s, m)))
        .collect();
    let records = exec::map_items(&cells, |_, &(sigma, m)| run_cell(cfg, sigma, m));
    let any_flagged = records.iter().any(|r| r.flag.is_some());
    SweepOutcome { records, any_flagged }
}

/// Sequential twin of [`run_sweep`]; same records, no thread pool.
#[doc(hidden)]
pub fn run_sweep_serial(cfg: &SweepConfig) -> SweepOutcome {
    let cells: Vec<(f64, f64)> = cfg
        .sigmas
        .iter()
        .flat_map(|&s| cfg.ms.iter().map(move |&m| (s, m)))
        .collect();
    let records = exec::map_items_serial(&cells, |_, &(sigma, m)| run_cell(cfg, sigma, m));
    let any_flagged = records.iter().any(|r| r.flag.is_some());
    SweepOutcome { records, any_flagged }
}

fn run_cell(cfg: &SweepConfig, sigma: f64, m: f64) -> SweepRecord {
    match try_cell(cfg, sigma, m) {
        Ok(rec) => rec,
        Err(e) => SweepRecord {
            sigma,
            m,
            n: Vec::new(),
            outputs: CellOutputs::Failed,
            flag: Some(e.to_string()),
        },
    }
}

fn try_cell(cfg: &SweepConfig, sigma: f64, m: f64) -> Result<SweepRecord> {
    let grid = cfg.grid_for(sigma)?;
    let n = grid.shape().to_vec();
    let a = sample(&grid, |c| cfg.coef.eval_at(c));
    let op = assemble(&grid, &cfg.kernel, sigma, m, cfg.boundary)?;

    let outputs = match cfg.task {
        Task::Eigen => {
            let ep = principal_eigenpair(&op, &a)?;
            CellOutputs::Eigen {
                lambda: ep.lambda,
                residual: ep.residual,
                lower_bound: ep.diagnostics.lower_bound,
                upper_bound: ep.diagnostics.upper_bound,
                solver_gap: ep.diagnostics.solver_gap,
                eigenfunction_criterion: ep.diagnostics.eigenfunction_criterion,
                degenerate: ep.diagnostics.degenerate,
            }
        }
        Task::Stationary => {
            let ep = principal_eigenpair(&op, &a)?;
            let sol = solve_stationary_given_lambda(&op, &a, ep.lambda)?;
            let target = limit_profile(cfg.limit, &grid, &cfg.kernel, &a)?;
            let gap = sol.theta.zip_map(&target, |t, v| t - v)?;
            CellOutputs::Stationary {
                exists: sol.exists,
                lambda: ep.lambda,
                residual: sol.residual,
                method_agreement: sol.method_agreement,
                gap_linf: gap.norm(NormKind::LInf),
                gap_l1: gap.norm(NormKind::L1),
                gap_l2: gap.norm(NormKind::L2),
            }
        }
        Task::EvolveRate => {
            let u0 = sample(&grid, |c| cfg.u0.eval_at(c));
            if u0.min() < 0.0 {
                return Err(Error::Domain("u0 expression is negative on the grid".into()));
            }
            let traj = evolve_with(
                &op,
                &a,
                &u0,
                cfg.t_final,
                EvolveOptions {
                    dt: cfg.dt,
                    out_times: Some(cfg.out_times),
                    scheme: None,
                },
            )?;
            let err = match cfg.reference {
                Reference::LogisticExact => {
                    Some(sup_error(&traj, &logistic_exact_trajectory(&a, &u0, &traj)?)?)
                }
                Reference::LogisticDiscrete => {
                    Some(sup_error(&traj, &logistic_discrete_trajectory(&a, &u0, &traj)?)?)
                }
                Reference::MeanLogistic => {
                    let abar = constant(&grid, a.mean());
                    Some(sup_error(&traj, &logistic_exact_trajectory(&abar, &u0, &traj)?)?)
                }
                Reference::None => None,
            };
            CellOutputs::EvolveRate {
                sup_error: err,
                dt: traj.dt_policy.dt,
                steps: traj.dt_policy.steps,
                mass_residual: traj.mass_residual_max,
            }
        }
    };

    Ok(SweepRecord {
        sigma,
        m,
        n,
        outputs,
        flag: None,
    })
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_n(n: &[usize]) -> String {
    if n.is_empty() {
        "na".to_string()
    } else {
        n.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("x")
    }
}

fn fmt_flag(flag: &Option<String>) -> String {
    match flag {
        None => String::new(),
        Some(msg) => msg.replace([',', '\n'], ";"),
    }
}

/// CSV header for a task's records.
pub fn csv_header(task: Task) -> &'static str {
    match task {
        Task::Eigen => {
            "sigma,m,n,lambda,residual,lower_bound,upper_bound,solver_gap,eigenfunction_criterion,degenerate,flag"
        }
        Task::Stationary => {
            "sigma,m,n,exists,lambda,residual,method_agreement,gap_linf,gap_l1,gap_l2,flag"
        }
        Task::EvolveRate => "sigma,m,n,sup_error,dt,steps,mass_residual,flag",
    }
}

/// Writes records with a stable column order; identical runs are
/// byte-identical.
pub fn write_csv(task: Task, records: &[SweepRecord], out: &mut impl Write) -> Result<()> {
    writeln!(out, "{}", csv_header(task))?;
    for r in records {
        let prefix = format!("{},{},{}", fmt_f(r.sigma), fmt_f(r.m), fmt_n(&r.n));
        let flag = fmt_flag(&r.flag);
        match &r.outputs {
            CellOutputs::Eigen {
                lambda,
                residual,
                lower_bound,
                upper_bound,
                solver_gap,
                eigenfunction_criterion,
                degenerate,
            } => writeln!(
                out,
                "{prefix},{},{},{},{},{},{},{},{flag}",
                fmt_f(*lambda),
                fmt_f(*residual),
                fmt_f(*lower_bound),
                fmt_f(*upper_bound),
                fmt_f(*solver_gap),
                eigenfunction_criterion,
                degenerate
            )?,
            CellOutputs::Stationary {
                exists,
                lambda,
                residual,
                method_agreement,
                gap_linf,
                gap_l1,
                gap_l2,
            } => writeln!(
                out,
                "{prefix},{},{},{},{},{},{},{},{flag}",
                exists,
                fmt_f(*lambda),
                fmt_f(*residual),
                fmt_f(*method_agreement),
                fmt_f(*gap_linf),
                fmt_f(*gap_l1),
                fmt_f(*gap_l2)
            )?,
            CellOutputs::EvolveRate {
                sup_error,
                dt,
                steps,
                mass_residual,
            } => writeln!(
                out,
                "{prefix},{},{},{},{},{flag}",
                sup_error.map_or("na".to_string(), fmt_f),
                fmt_f(*dt),
                steps,
                fmt_f(*mass_residual)
            )?,
            CellOutputs::Failed => {
                let cols = csv_header(task).split(',').count() - 4;
                writeln!(out, "{prefix},{}{flag}", "na,".repeat(cols))?
            }
        }
    }
    Ok(())
}
