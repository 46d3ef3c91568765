//! Stationary KPP states: A[theta] + theta (a - theta) = 0 with the
//! persistence dichotomy (positive solution iff the principal eigenvalue is
//! negative), solved by monotone semi-implicit marching from a constant
//! super-solution followed by a Newton polish, plus the four limit profiles
//! a^+, V1, V2 and the spatial mean.

use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid::{constant, Field, Grid, NormKind};
use crate::kernel::Kernel;
use crate::operator::NonlocalOperator;
use crate::spectral;

/// Marching stops when the discrete time derivative drops below this.
const MARCH_TOL: f64 = 1e-10;
const MARCH_MAX_ITER: usize = 2_000_000;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 60;

#[derive(Debug, Clone)]
pub struct StationaryDiagnostics {
    pub lambda: f64,
    pub dt: f64,
    pub marching_iterations: usize,
    pub newton_iterations: usize,
    /// Newton diverged and the marching answer was kept.
    pub newton_fallback: bool,
}

#[derive(Debug, Clone)]
pub struct StationarySolution {
    pub theta: Field,
    /// Persistence verdict: lambda_p < 0.
    pub exists: bool,
    /// L-infinity norm of A theta + theta (a - theta).
    pub residual: f64,
    /// L-infinity gap between the marching fixed point and the Newton answer.
    pub method_agreement: f64,
    pub diagnostics: StationaryDiagnostics,
}

fn residual_vec(op: &NonlocalOperator, a: &Field, u: &DVector<f64>) -> DVector<f64> {
    let mut r = op.matrix() * u;
    for i in 0..u.len() {
        r[i] += u[i] * (a.values()[i] - u[i]);
    }
    r
}

/// Marching step size: 0.25 min(1, sigma^m / max p_sigma, 1 / (1 + sup|a|)).
/// The three factors keep the semi-implicit update positive and monotone.
fn marching_dt(op: &NonlocalOperator, a: &Field) -> f64 {
    let q = op.scale_factor() * op.p_sigma().max();
    let sup_a = a.norm(NormKind::LInf);
    0.25 * (1.0f64).min(1.0 / q).min(1.0 / (1.0 + sup_a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Decreasing,
    Increasing,
    Free,
}

/// Semi-implicit marching u <- (u + dt (A u + a u)) / (1 + dt u) until the
/// discrete time derivative is below `MARCH_TOL`, optionally enforcing
/// monotonicity (comparison principle) along the way.
fn march(
    op: &NonlocalOperator,
    a: &Field,
    start: &DVector<f64>,
    dt: f64,
    direction: Direction,
) -> Result<(DVector<f64>, usize)> {
    let n = start.len();
    let mut u = start.clone();
    let mut au = DVector::<f64>::zeros(n);
    let mono_tol = 1e-10 * (1.0 + u.amax());
    let mut last_delta = f64::INFINITY;
    let mut since_improvement = 0usize;

    for k in 1..=MARCH_MAX_ITER {
        op.matrix().mul_to(&u, &mut au);
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let ai = a.values()[i];
            let next = (u[i] + dt * (au[i] + ai * u[i])) / (1.0 + dt * u[i]);
            let step = next - u[i];
            match direction {
                Direction::Decreasing if step > mono_tol => {
                    return Err(Error::Internal(format!(
                        "marching lost monotone decrease at node {i} (step {step:.3e})"
                    )));
                }
                Direction::Increasing if step < -mono_tol => {
                    return Err(Error::Internal(format!(
                        "marching lost monotone increase at node {i} (step {step:.3e})"
                    )));
                }
                _ => {}
            }
            delta = delta.max(step.abs());
            u[i] = next;
        }
        if delta / dt < MARCH_TOL {
            return Ok((u, k));
        }
        // Rounding plateau: the derivative no longer improves.
        if delta < 0.5 * last_delta {
            last_delta = delta;
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement > 2000 && delta / dt < 1e-7 {
                return Ok((u, k));
            }
        }
    }
    Err(Error::Numerical(format!(
        "stationary marching did not converge in {MARCH_MAX_ITER} steps (dt {dt:.3e})"
    )))
}

/// Newton polish of F(u) = A u + u (a - u) with Jacobian A + diag(a - 2u).
/// Returns the improved state, iteration count, and a fallback flag when the
/// iteration failed to improve on the marching answer.
fn newton_polish(
    op: &NonlocalOperator,
    a: &Field,
    start: &DVector<f64>,
) -> (DVector<f64>, usize, bool) {
    let n = start.len();
    let mut u = start.clone();
    let mut best = u.clone();
    let mut best_res = residual_vec(op, a, &u).amax();
    for k in 1..=NEWTON_MAX_ITER {
        let f = residual_vec(op, a, &u);
        let res = f.amax();
        if res < best_res {
            best_res = res;
            best = u.clone();
        }
        if res < NEWTON_TOL {
            return (u, k, false);
        }
        let mut jac = op.matrix().clone();
        for i in 0..n {
            jac[(i, i)] += a.values()[i] - 2.0 * u[i];
        }
        let Some(delta) = jac.lu().solve(&f) else {
            return (best, k, true);
        };
        let next = &u - &delta;
        let next_res = residual_vec(op, a, &next).amax();
        if !next_res.is_finite() || next_res > 10.0 * res.max(NEWTON_TOL) {
            return (best, k, true);
        }
        // Stagnation at the rounding floor of A u.
        if next_res >= 0.9 * res && res < 1e-8 {
            if next_res < best_res {
                return (next, k, false);
            }
            return (best, k, false);
        }
        u = next;
    }
    (best, NEWTON_MAX_ITER, best_res >= 1e-8)
}

/// Solves the stationary problem from the constant super-solution.
pub fn solve_stationary(op: &NonlocalOperator, a: &Field) -> Result<StationarySolution> {
    let eig = spectral::principal_eigenpair(op, a)?;
    solve_stationary_given_lambda(op, a, eig.lambda)
}

/// Same as [`solve_stationary`] with a precomputed principal eigenvalue.
pub fn solve_stationary_given_lambda(
    op: &NonlocalOperator,
    a: &Field,
    lambda: f64,
) -> Result<StationarySolution> {
    let grid = op.grid();
    if lambda >= 0.0 {
        let zero = constant(grid, 0.0);
        return Ok(StationarySolution {
            theta: zero,
            exists: false,
            residual: 0.0,
            method_agreement: 0.0,
            diagnostics: StationaryDiagnostics {
                lambda,
                dt: 0.0,
                marching_iterations: 0,
                newton_iterations: 0,
                newton_fallback: false,
            },
        });
    }
    let super_solution = constant(grid, a.max().max(1.0));
    let sol = solve_from_start(op, a, &super_solution, Direction::Decreasing)?;
    Ok(StationarySolution {
        diagnostics: StationaryDiagnostics { lambda, ..sol.diagnostics },
        ..sol
    })
}

/// Marches from an arbitrary nonnegative start (sub- or super-solution) and
/// polishes with Newton. Used by the uniqueness probe.
pub fn solve_stationary_from(
    op: &NonlocalOperator,
    a: &Field,
    start: &Field,
) -> Result<StationarySolution> {
    if start.min() < 0.0 {
        return Err(Error::Domain("stationary start must be nonnegative".into()));
    }
    // Pick the monotone direction from the sign of F at the start when it is
    // one-sided; otherwise march without a comparison assertion.
    let f0 = residual_vec(op, a, start.values());
    let dir = if f0.iter().all(|&v| v <= 1e-12) {
        Direction::Decreasing
    } else if f0.iter().all(|&v| v >= -1e-12) {
        Direction::Increasing
    } else {
        Direction::Free
    };
    solve_from_start(op, a, start, dir)
}

fn solve_from_start(
    op: &NonlocalOperator,
    a: &Field,
    start: &Field,
    direction: Direction,
) -> Result<StationarySolution> {
    let grid = op.grid();
    let dt = marching_dt(op, a);
    let (marched, march_iters) = march(op, a, start.values(), dt, direction)?;
    let (polished, newton_iters, fallback) = newton_polish(op, a, &marched);
    let theta_vec = if fallback { marched.clone() } else { polished };
    let agreement = (&marched - &theta_vec).amax();
    let residual = residual_vec(op, a, &theta_vec).amax();
    Ok(StationarySolution {
        theta: Field::from_vector(grid.clone(), theta_vec)?,
        exists: true,
        residual,
        method_agreement: agreement,
        diagnostics: StationaryDiagnostics {
            lambda: f64::NAN,
            dt,
            marching_iterations: march_iters,
            newton_iterations: newton_iters,
            newton_fallback: fallback,
        },
    })
}

/// The four stationary limit objects across the (sigma, m) regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    /// Positive part of a: the sigma -> infinity limit, and the L1 target
    /// adopted for V1 (the kinetic equation V(a - V) = 0 selects a^+ at
    /// generic coefficients).
    APlus,
    V1,
    /// Logistic diffusion state with diffusivity D2(J)/(2N).
    V2,
    /// Spatial mean of a (m > 2 limit).
    Abar,
}

impl FromStr for LimitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a_plus" | "aplus" | "a+" => Ok(LimitKind::APlus),
            "v1" => Ok(LimitKind::V1),
            "v2" => Ok(LimitKind::V2),
            "abar" | "mean" => Ok(LimitKind::Abar),
            other => Err(Error::Config(format!("unknown limit profile `{other}`"))),
        }
    }
}

/// Builds the requested limit profile on `grid`. The kernel fixes the
/// effective diffusivity D2(J)/(2N) of the V2 equation.
pub fn limit_profile(
    kind: LimitKind,
    grid: &Arc<Grid>,
    kernel: &Kernel,
    a: &Field,
) -> Result<Field> {
    match kind {
        LimitKind::APlus | LimitKind::V1 => Ok(a.map(|v| v.max(0.0))),
        LimitKind::Abar => {
            let abar = a.mean();
            let crit = 1e-10 * (1.0 + a.norm(NormKind::LInf));
            if abar.abs() <= crit {
                return Err(Error::Regime(
                    "mean of a vanishes: the m > 2 limit is undetermined at abar = 0".into(),
                ));
            }
            if abar < 0.0 {
                return Err(Error::Regime(format!(
                    "mean of a is negative ({abar:.6}); no positive state survives for m > 2"
                )));
            }
            Ok(constant(grid, abar))
        }
        LimitKind::V2 => {
            let d = kernel.second_moment() / (2.0 * grid.dim() as f64);
            let lambda1 = spectral::local_neumann_eigenpair(grid, d, a)?.lambda;
            let crit = 1e-8 * (1.0 + a.norm(NormKind::LInf));
            if lambda1.abs() <= crit {
                return Err(Error::Regime(format!(
                    "local principal eigenvalue is critical ({lambda1:.3e}); V2 is undetermined"
                )));
            }
            if lambda1 > 0.0 {
                return Err(Error::Regime(format!(
                    "local principal eigenvalue {lambda1:.6} is positive; no V2 profile exists"
                )));
            }
            v2_newton(grid, d, a)
        }
    }
}

/// Newton solve of D lap V + V (a - V) = 0 with the Neumann stencil,
/// starting from the constant sup a.
fn v2_newton(grid: &Arc<Grid>, diffusivity: f64, a: &Field) -> Result<Field> {
    let lap = spectral::fd_neumann_laplacian(grid, diffusivity)?;
    let n = grid.len();
    let mut v = DVector::from_element(n, a.max());
    // The stencil scale D/h^2 sets the rounding floor of the residual.
    let h = grid.spacing().iter().cloned().fold(f64::INFINITY, f64::min);
    let floor = 16.0 * f64::EPSILON * diffusivity / (h * h) * (1.0 + a.max().abs());
    let tol = 1e-10f64.max(floor);
    let mut res = f64::INFINITY;
    for _ in 0..80 {
        let mut f = &lap * &v;
        for i in 0..n {
            f[i] += v[i] * (a.values()[i] - v[i]);
        }
        res = f.amax();
        if res < tol {
            break;
        }
        let mut jac = lap.clone();
        for i in 0..n {
            jac[(i, i)] += a.values()[i] - 2.0 * v[i];
        }
        let delta = jac.lu().solve(&f).ok_or_else(|| {
            Error::Numerical("singular Jacobian in the V2 Newton solve".into())
        })?;
        v -= &delta;
    }
    if res >= tol {
        return Err(Error::Numerical(format!(
            "V2 Newton solve stalled at residual {res:.3e}"
        )));
    }
    if v.min() <= 0.0 {
        return Err(Error::Numerical(
            "V2 Newton solve produced a nonpositive profile".into(),
        ));
    }
    Field::from_vector(grid.clone(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample;
    use crate::kernel::{Kernel, KernelFamily};
    use crate::operator::{assemble, Boundary};
    use std::f64::consts::PI;

    fn uniform_1d() -> Kernel {
        Kernel::new(KernelFamily::Uniform, 1).unwrap()
    }

    fn standard_a(g: &Arc<Grid>) -> Field {
        sample(g, |x| 2.0 + (2.0 * PI * x[0]).sin())
    }

    #[test]
    fn constant_coefficient_solves_exactly() {
        for (sigma, m) in [(0.3, 0.0), (0.1, 2.0)] {
            let g = Grid::line(1.0, 65).unwrap();
            let op = assemble(&g, &uniform_1d(), sigma, m, Boundary::Neumann).unwrap();
            let a = constant(&g, 2.0);
            let sol = solve_stationary(&op, &a).unwrap();
            assert!(sol.exists);
            for v in sol.theta.values().iter() {
                assert!((v - 2.0).abs() < 1e-8);
            }
            assert!(sol.residual < 1e-10);
        }
    }

    #[test]
    fn negative_coefficient_has_no_state() {
        let g = Grid::line(1.0, 65).unwrap();
        let op = assemble(&g, &uniform_1d(), 0.3, 0.0, Boundary::Neumann).unwrap();
        let sol = solve_stationary(&op, &constant(&g, -1.0)).unwrap();
        assert!(!sol.exists);
        assert_eq!(sol.theta.norm(NormKind::LInf), 0.0);
        assert!(sol.diagnostics.lambda > 0.0);
    }

    #[test]
    fn marching_and_newton_agree_on_heterogeneous_coefficient() {
        let g = Grid::line(1.0, 805).unwrap();
        let op = assemble(&g, &uniform_1d(), 0.1, 0.0, Boundary::Neumann).unwrap();
        let a = standard_a(&g);
        let sol = solve_stationary(&op, &a).unwrap();
        assert!(sol.exists);
        assert!(sol.theta.min() > 0.0);
        assert!(sol.method_agreement < 1e-8, "agreement {}", sol.method_agreement);
        assert!(sol.residual < 1e-8 * (1.0 + 3.0f64).powi(2));

        // A-priori bounds: 0 <= theta <= sup a^+, theta >= (a - sigma^-m p)^+.
        let sup = a.max();
        for i in 0..g.len() {
            let th = sol.theta.values()[i];
            assert!(th <= sup + 1e-8);
            let lower =
                (a.values()[i] - op.scale_factor() * op.p_sigma().values()[i]).max(0.0);
            assert!(th >= lower - 1e-6);
        }

        // Integral identity: sum w theta (a - theta) = 0.
        let w = g.weight();
        let ident: f64 = (0..g.len())
            .map(|i| w * sol.theta.values()[i] * (a.values()[i] - sol.theta.values()[i]))
            .sum();
        assert!(ident.abs() <= 1e-8 * (1.0 + 3.0f64).powi(2));
    }

    #[test]
    fn sub_and_super_solution_starts_converge_to_the_same_state() {
        let g = Grid::line(1.0, 205).unwrap();
        let op = assemble(&g, &uniform_1d(), 0.1, 0.0, Boundary::Neumann).unwrap();
        let a = standard_a(&g);
        let from_super = solve_stationary(&op, &a).unwrap();

        let eig = spectral::principal_eigenpair(&op, &a).unwrap();
        let sub = eig.phi.map(|v| 1e-3 * v.max(0.0));
        let from_sub = solve_stationary_from(&op, &a, &sub).unwrap();
        let gap = from_super.theta.linf_distance(&from_sub.theta).unwrap();
        assert!(gap < 1e-6, "gap {gap}");
    }

    #[test]
    fn large_sigma_state_obeys_the_upper_bound() {
        // theta <= a^+ + sigma^{-1/4} pointwise at large sigma.
        let g = Grid::line(1.0, 128).unwrap();
        let a = standard_a(&g);
        for m in [0.0, 1.0, 2.0] {
            for sigma in [20.0, 50.0, 100.0] {
                let op = assemble(&g, &uniform_1d(), sigma, m, Boundary::Neumann).unwrap();
                let sol = solve_stationary(&op, &a).unwrap();
                assert!(sol.exists);
                for i in 0..g.len() {
                    let bound = a.values()[i].max(0.0) + sigma.powf(-0.25) + 1e-6;
                    assert!(sol.theta.values()[i] <= bound);
                }
            }
        }
    }

    #[test]
    fn limit_profiles_for_constant_coefficient_coincide() {
        let g = Grid::line(1.0, 96).unwrap();
        let k = uniform_1d();
        let a = constant(&g, 2.0);
        for kind in [LimitKind::APlus, LimitKind::V1, LimitKind::V2, LimitKind::Abar] {
            let p = limit_profile(kind, &g, &k, &a).unwrap();
            for v in p.values().iter() {
                assert!((v - 2.0).abs() < 1e-8, "{kind:?}");
            }
        }
    }

    #[test]
    fn abar_profile_is_the_discrete_mean() {
        let g = Grid::line(1.0, 96).unwrap();
        let a = standard_a(&g);
        let p = limit_profile(LimitKind::Abar, &g, &uniform_1d(), &a).unwrap();
        assert!((p.values()[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_regimes_are_refused() {
        let g = Grid::line(1.0, 96).unwrap();
        let k = uniform_1d();
        // abar = 0 exactly: critical case.
        let zero_mean = sample(&g, |x| (2.0 * PI * x[0]).sin());
        assert!(matches!(
            limit_profile(LimitKind::Abar, &g, &k, &zero_mean),
            Err(Error::Regime(_))
        ));
        // abar < 0.
        assert!(matches!(
            limit_profile(LimitKind::Abar, &g, &k, &constant(&g, -1.0)),
            Err(Error::Regime(_))
        ));
        // lambda_1^N > 0: no V2.
        let hostile = sample(&g, |x| -0.5 + (2.0 * PI * x[0]).sin());
        assert!(matches!(
            limit_profile(LimitKind::V2, &g, &k, &hostile),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn v2_profile_is_stable_under_refinement() {
        let coarse = Grid::line(1.0, 400).unwrap();
        let fine = Grid::line(1.0, 800).unwrap();
        let k = uniform_1d();
        let vc = limit_profile(LimitKind::V2, &coarse, &k, &standard_a(&coarse)).unwrap();
        let vf = limit_profile(LimitKind::V2, &fine, &k, &standard_a(&fine)).unwrap();
        // Compare on the coarse grid: fine cells average pairwise onto coarse.
        let mut worst = 0.0f64;
        for i in 0..coarse.len() {
            let avg = 0.5 * (vf.values()[2 * i] + vf.values()[2 * i + 1]);
            worst = worst.max((vc.values()[i] - avg).abs());
        }
        assert!(worst <= 1e-3, "refinement gap {worst}");
        assert!(vc.min() > 0.0);
    }
}
