//! Key = value sweep configuration: one experiment grid over (sigma, m).
//! Unknown keys are hard errors so typos cannot silently change a run.

use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Expr};
use crate::grid::Grid;
use crate::kernel::{Kernel, KernelFamily};
use crate::operator::{check_resolution, Boundary};
use crate::stationary::LimitKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Eigen,
    Stationary,
    EvolveRate,
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "eigen" => Ok(Task::Eigen),
            "stationary" => Ok(Task::Stationary),
            "evolve-rate" | "evolve_rate" => Ok(Task::EvolveRate),
            other => Err(Error::Config(format!("unknown task `{other}`"))),
        }
    }
}

/// Reference trajectory for evolve-rate measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// Closed-form logistic solution sampled at output times.
    LogisticExact,
    /// The same stepping scheme with the dispersal term removed; cancels the
    /// integrator bias out of the sigma-rate measurement.
    LogisticDiscrete,
    /// Spatially averaged logistic (the m > 2 conjecture probe).
    MeanLogistic,
    None,
}

impl FromStr for Reference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "logistic" | "logistic-exact" => Ok(Reference::LogisticExact),
            "logistic-discrete" => Ok(Reference::LogisticDiscrete),
            "mean-logistic" => Ok(Reference::MeanLogistic),
            "none" => Ok(Reference::None),
            other => Err(Error::Config(format!("unknown reference `{other}`"))),
        }
    }
}

/// Grid selection: fixed node counts, or refine with sigma so the kernel
/// resolution sigma/h stays constant across sweep cells.
#[derive(Debug, Clone, PartialEq)]
pub enum GridRule {
    Fixed(Vec<usize>),
    Auto { oversample: f64 },
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub task: Task,
    pub kernel: Kernel,
    pub extent: Vec<f64>,
    pub grid_rule: GridRule,
    pub coef: Expr,
    pub sigmas: Vec<f64>,
    pub ms: Vec<f64>,
    pub boundary: Boundary,
    // evolve-rate options
    pub t_final: f64,
    pub u0: Expr,
    pub reference: Reference,
    pub out_times: usize,
    pub dt: Option<f64>,
    // stationary options
    pub limit: LimitKind,
}

fn parse_list<T: FromStr>(value: &str, line: usize, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(|tok| {
            tok.trim().parse::<T>().map_err(|e| Error::Parse {
                line,
                msg: format!("bad {what} entry `{}`: {e}", tok.trim()),
            })
        })
        .collect()
}

impl SweepConfig {
    /// Parses `key = value` lines with `#` comments.
    pub fn parse(text: &str) -> Result<SweepConfig> {
        let mut task: Option<Task> = None;
        let mut family = KernelFamily::Uniform;
        let mut dim = 1usize;
        let mut extent: Option<Vec<f64>> = None;
        let mut n: Option<Vec<usize>> = None;
        let mut auto = true;
        let mut oversample = 2.0;
        let mut coef: Option<(Expr, usize)> = None;
        let mut sigmas: Option<(Vec<f64>, usize)> = None;
        let mut ms: Option<(Vec<f64>, usize)> = None;
        let mut boundary = Boundary::Neumann;
        let mut t_final = 1.0;
        let mut u0 = Expr::Num(1.0);
        let mut reference = Reference::LogisticDiscrete;
        let mut out_times = 100usize;
        let mut dt: Option<f64> = None;
        let mut limit = LimitKind::APlus;

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let ctx = |e: Error| match e {
                Error::Parse { msg, .. } => Error::Parse { line: lineno, msg },
                Error::Config(msg) | Error::Domain(msg) => Error::Parse { line: lineno, msg },
                other => other,
            };
            match key {
                "task" => task = Some(value.parse().map_err(ctx)?),
                "kernel" => family = value.parse().map_err(ctx)?,
                "dim" => {
                    dim = value.parse().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("bad dim `{value}`"),
                    })?
                }
                "domain" => {
                    let parts: Vec<&str> =
                        value.split(['x', 'X']).map(str::trim).collect();
                    let mut ext = Vec::new();
                    for p in parts {
                        ext.push(p.parse::<f64>().map_err(|_| Error::Parse {
                            line: lineno,
                            msg: format!("bad domain extent `{p}`"),
                        })?);
                    }
                    extent = Some(ext);
                }
                "n" => {
                    if value == "auto" {
                        auto = true;
                        n = None;
                    } else {
                        auto = false;
                        n = Some(parse_list(value, lineno, "n")?);
                    }
                }
                "oversample" => {
                    oversample = value.parse().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("bad oversample `{value}`"),
                    })?
                }
                "coef" => coef = Some((parse_expr(value).map_err(ctx)?, lineno)),
                "sigma" => sigmas = Some((parse_list(value, lineno, "sigma")?, lineno)),
                "m" => ms = Some((parse_list(value, lineno, "m")?, lineno)),
                "boundary" => boundary = value.parse().map_err(ctx)?,
                "T" => {
                    t_final = value.parse().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("bad T `{value}`"),
                    })?
                }
                "u0" => u0 = parse_expr(value).map_err(ctx)?,
                "reference" => reference = value.parse().map_err(ctx)?,
                "out_times" => {
                    out_times = value.parse().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("bad out_times `{value}`"),
                    })?
                }
                "dt" => {
                    if value == "auto" {
                        dt = None;
                    } else {
                        let v: f64 = value.parse().map_err(|_| Error::Parse {
                            line: lineno,
                            msg: format!("bad dt `{value}`"),
                        })?;
                        if !(v > 0.0) {
                            return Err(Error::Parse {
                                line: lineno,
                                msg: format!("dt must be positive, got {v}"),
                            });
                        }
                        dt = Some(v);
                    }
                }
                "limit" => limit = value.parse().map_err(ctx)?,
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }

        let task = task.ok_or_else(|| Error::Config("missing required key `task`".into()))?;
        let (coef, coef_line) =
            coef.ok_or_else(|| Error::Config("missing required key `coef`".into()))?;
        let (sigmas, sigma_line) =
            sigmas.ok_or_else(|| Error::Config("missing required key `sigma`".into()))?;
        let (ms, m_line) = ms.ok_or_else(|| Error::Config("missing required key `m`".into()))?;

        let extent = extent.unwrap_or_else(|| vec![1.0; dim]);
        if extent.len() != dim {
            return Err(Error::Config(format!(
                "domain has {} extents but dim = {dim}",
                extent.len()
            )));
        }
        let kernel = Kernel::new(family, dim)?;

        if sigmas.is_empty() || sigmas.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Parse {
                line: sigma_line,
                msg: "sigma list must be nonempty and positive".into(),
            });
        }
        let sorted = sigmas.windows(2).all(|w| w[0] < w[1])
            || sigmas.windows(2).all(|w| w[0] > w[1]);
        if !sorted {
            return Err(Error::Parse {
                line: sigma_line,
                msg: "sigma list must be sorted (strictly increasing or decreasing)".into(),
            });
        }
        if ms.is_empty() || ms.iter().any(|&m| !(m >= 0.0)) {
            return Err(Error::Parse {
                line: m_line,
                msg: "m list must be nonempty and nonnegative".into(),
            });
        }
        if dim == 1 && (coef.uses_y() || u0.uses_y()) {
            return Err(Error::Parse {
                line: coef_line,
                msg: "expression uses `y` on a 1-dimensional domain".into(),
            });
        }

        let grid_rule = if auto {
            if !(oversample >= 1.0) {
                return Err(Error::Config(format!(
                    "oversample must be >= 1, got {oversample}"
                )));
            }
            GridRule::Auto { oversample }
        } else {
            let n = n.expect("fixed rule carries node counts");
            if n.len() != dim {
                return Err(Error::Config(format!(
                    "n has {} entries but dim = {dim}",
                    n.len()
                )));
            }
            GridRule::Fixed(n)
        };

        let cfg = SweepConfig {
            task,
            kernel,
            extent,
            grid_rule,
            coef,
            sigmas,
            ms,
            boundary,
            t_final,
            u0,
            reference,
            out_times,
            dt,
            limit,
        };
        // Every (sigma, grid) pair must satisfy the resolution rule.
        for &sigma in &cfg.sigmas {
            let g = cfg.grid_for(sigma)?;
            check_resolution(&g, sigma)?;
        }
        Ok(cfg)
    }

    /// The grid a cell at spread `sigma` runs on.
    pub fn grid_for(&self, sigma: f64) -> Result<Arc<Grid>> {
        let n = match &self.grid_rule {
            GridRule::Fixed(n) => n.clone(),
            GridRule::Auto { oversample } => self
                .extent
                .iter()
                .map(|&l| auto_cells(l, sigma, *oversample))
                .collect(),
        };
        Grid::new(&self.extent, &n)
    }
}

/// Cells per axis for the auto rule: ceil(4 * oversample * L / sigma),
/// nudged so sigma never lands exactly on a node distance (which would put
/// sharp-cutoff kernels on a rounding knife edge).
pub fn auto_cells(length: f64, sigma: f64, oversample: f64) -> usize {
    let mut n = ((4.0 * oversample * length / sigma).ceil() as usize).max(2);
    let ratio = sigma * n as f64 / length;
    if (ratio - ratio.round()).abs() < 1e-6 {
        n += 1;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
task = eigen
kernel = uniform
coef = 2 + sin(2*pi*x)
sigma = 0.1, 0.2
m = 0, 1
";

    #[test]
    fn parses_a_minimal_config() {
        let cfg = SweepConfig::parse(BASE).unwrap();
        assert_eq!(cfg.task, Task::Eigen);
        assert_eq!(cfg.sigmas, vec![0.1, 0.2]);
        assert_eq!(cfg.ms, vec![0.0, 1.0]);
        assert!((cfg.coef.eval(0.25, 0.0) - 3.0).abs() < 1e-14);
        assert_eq!(cfg.boundary, Boundary::Neumann);
    }

    #[test]
    fn unknown_keys_are_rejected_with_line_numbers() {
        let text = format!("{BASE}sigmas = 1\n");
        match SweepConfig::parse(&text).unwrap_err() {
            Error::Parse { line, msg } => {
                assert_eq!(line, 6);
                assert!(msg.contains("sigmas"));
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn negative_sigma_is_rejected() {
        let text = BASE.replace("sigma = 0.1, 0.2", "sigma = -1");
        assert!(SweepConfig::parse(&text).is_err());
    }

    #[test]
    fn unsorted_sigma_is_rejected() {
        let text = BASE.replace("sigma = 0.1, 0.2", "sigma = 0.1, 0.3, 0.2");
        assert!(SweepConfig::parse(&text).is_err());
    }

    #[test]
    fn resolution_violations_surface_at_parse_time() {
        let text = format!("{BASE}n = 8\n");
        assert!(matches!(
            SweepConfig::parse(&text),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn y_requires_two_dimensions() {
        let text = BASE.replace("coef = 2 + sin(2*pi*x)", "coef = 1 + y");
        assert!(SweepConfig::parse(&text).is_err());

        let two_d = "task = eigen\nkernel = uniform\ndim = 2\ndomain = 1.0 x 1.0\n\
                     coef = 1 + y\nsigma = 0.5\nm = 0\nn = 12, 12\n";
        assert!(SweepConfig::parse(two_d).is_ok());
    }

    #[test]
    fn auto_cells_avoid_integer_ratio() {
        for (l, sigma, ov) in [(1.0, 0.1, 2.0), (1.0, 0.05, 2.0), (2.0, 0.25, 1.0)] {
            let n = auto_cells(l, sigma, ov);
            let ratio = sigma * n as f64 / l;
            assert!(ratio >= 4.0 * ov - 1e-9);
            assert!((ratio - ratio.round()).abs() > 1e-7, "sigma={sigma} n={n}");
        }
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let text = "# experiment\n\ntask = stationary\nkernel = quartic-bump # inline\n\
                    coef = 1\nsigma = 0.5\nm = 0\nlimit = abar\n";
        let cfg = SweepConfig::parse(text).unwrap();
        assert_eq!(cfg.task, Task::Stationary);
        assert_eq!(cfg.limit, LimitKind::Abar);
    }
}
