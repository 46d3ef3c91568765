//! Generalized principal eigenvalue of M_{sigma,m,Omega} + a via the
//! variational characterization: the smallest eigenvalue of the symmetric
//! matrix -(A + diag a), cross-checked by shifted inverse-power iteration.
//! Also hosts the local reference eigenproblem D * Laplacian + a with
//! homogeneous Neumann condition (ghost-node reflection stencil).

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::linalg;
use crate::operator::NonlocalOperator;

/// Degenerate smallest eigenvalues are flagged when the spectral gap drops
/// below this absolute threshold.
const DEGENERACY_GAP: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EigenDiagnostics {
    /// -max_i a_i (Rayleigh lower bound for the Neumann operator).
    pub lower_bound: f64,
    /// -(sum w a_i)/|Omega| (Rayleigh upper bound from the constant test function).
    pub upper_bound: f64,
    /// |lambda_dense - lambda_inverse_power|.
    pub solver_gap: f64,
    pub solver_iterations: usize,
    pub solver_reshifted: bool,
    /// Distance to the second-smallest eigenvalue.
    pub spectral_gap: f64,
    pub degenerate: bool,
    /// Existence criterion for a continuous principal eigenfunction:
    /// lambda < -max_i (a_i - sigma^{-m} p_sigma(x_i)).
    pub eigenfunction_criterion: bool,
    pub min_phi: f64,
}

/// Principal eigenvalue with its L2-normalized, nonnegatively oriented
/// eigenfunction and residual diagnostics.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub phi: Field,
    /// ||(A + diag a) phi + lambda phi||_{L2}
    pub residual: f64,
    pub diagnostics: EigenDiagnostics,
}

#[derive(Debug, Clone, Copy)]
pub struct LimitTargets {
    pub neg_sup: f64,
    pub neg_mean: f64,
}

/// -sup a and -mean a, the two sigma-limit targets for the eigenvalue.
pub fn limit_targets(a: &Field) -> LimitTargets {
    LimitTargets {
        neg_sup: -a.max(),
        neg_mean: -a.mean(),
    }
}

fn check_same_grid(grid: &Arc<Grid>, f: &Field, what: &str) -> Result<()> {
    if Arc::ptr_eq(grid, f.grid()) || **f.grid() == **grid {
        Ok(())
    } else {
        Err(Error::Shape(format!("{what} lives on a different grid")))
    }
}

/// Builds B = -(A + diag a), the symmetric matrix whose smallest eigenvalue
/// is the generalized principal eigenvalue.
fn negated_matrix(matrix: &DMatrix<f64>, a: &Field) -> DMatrix<f64> {
    let mut b = -matrix.clone();
    for (i, ai) in a.values().iter().enumerate() {
        b[(i, i)] -= ai;
    }
    b
}

/// Principal eigenpair of op + a.
pub fn principal_eigenpair(op: &NonlocalOperator, a: &Field) -> Result<EigenPair> {
    check_same_grid(op.grid(), a, "coefficient field")?;
    let criterion_threshold = {
        let scale = op.scale_factor();
        let p = op.p_sigma().values();
        a.values()
            .iter()
            .zip(p.iter())
            .map(|(ai, pi)| ai - scale * pi)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let b = negated_matrix(op.matrix(), a);
    eigenpair_of(op.grid(), b, a, criterion_threshold)
}

fn eigenpair_of(
    grid: &Arc<Grid>,
    b: DMatrix<f64>,
    a: &Field,
    criterion_threshold: f64,
) -> Result<EigenPair> {

    let w = grid.weight();
    let dense = linalg::sorted_symmetric_eigen(b.clone());
    let lambda = dense.values[0];
    let spectral_gap = dense.values.get(1).map_or(f64::INFINITY, |v| v - lambda);
    let degenerate = spectral_gap < DEGENERACY_GAP;

    // Tie-break near-degenerate ground states by the largest L1 mass.
    let mut pick = 0;
    if degenerate {
        let mut best = f64::NEG_INFINITY;
        for (k, &val) in dense.values.iter().enumerate() {
            if val - lambda >= DEGENERACY_GAP {
                break;
            }
            let mass = dense.vectors.column(k).sum().abs();
            if mass > best {
                best = mass;
                pick = k;
            }
        }
    }

    let (lambda, mut v, residual) =
        linalg::refine_eigenpair(&b, lambda, dense.vectors.column(pick).into());
    if v.sum() < 0.0 {
        v = -v;
    }

    // Independent route: shifted inverse-power iteration.
    let shift = -a.max() - 1.0;
    let ip = linalg::smallest_eigenpair_inverse_power(
        &b,
        shift,
        Some(lambda - 1.0),
        1e-12,
        4000,
    )?;

    let phi = Field::from_vector(grid.clone(), v / w.sqrt())?;
    let min_phi = phi.min();
    let targets = limit_targets(a);
    Ok(EigenPair {
        lambda,
        phi,
        residual,
        diagnostics: EigenDiagnostics {
            lower_bound: targets.neg_sup,
            upper_bound: targets.neg_mean,
            solver_gap: (ip.lambda - lambda).abs(),
            solver_iterations: ip.iterations,
            solver_reshifted: ip.reshifted,
            spectral_gap,
            degenerate,
            eigenfunction_criterion: lambda < -criterion_threshold,
            min_phi,
        },
    })
}

/// The variational functional
/// [ (1/(2 sigma^m)) sum_ij w^2 J_sigma (phi_j - phi_i)^2 - sum w a phi^2 ]
///   / sum w phi^2.
pub fn rayleigh_quotient(op: &NonlocalOperator, a: &Field, phi: &Field) -> Result<f64> {
    check_same_grid(op.grid(), a, "coefficient field")?;
    check_same_grid(op.grid(), phi, "test field")?;
    let w = op.grid().weight();
    let norm2 = w * phi.values().iter().map(|v| v * v).sum::<f64>();
    if norm2 == 0.0 {
        return Err(Error::Domain("Rayleigh quotient of the zero field".into()));
    }
    let form = op.quadratic_form(phi)?;
    let weighted_a = w * phi
        .values()
        .iter()
        .zip(a.values().iter())
        .map(|(p, ai)| ai * p * p)
        .sum::<f64>();
    Ok((form - weighted_a) / norm2)
}

/// Dense matrix of D * Laplacian_h with homogeneous Neumann conditions
/// (ghost-node reflection) on a 1D or 2D cell-centered grid.
pub fn fd_neumann_laplacian(grid: &Arc<Grid>, diffusivity: f64) -> Result<DMatrix<f64>> {
    if !(diffusivity > 0.0) {
        return Err(Error::Domain(format!(
            "diffusivity must be positive, got {diffusivity}"
        )));
    }
    let n = grid.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    match grid.shape() {
        [nx] => {
            let c = diffusivity / (grid.spacing()[0] * grid.spacing()[0]);
            for i in 0..*nx {
                if i > 0 {
                    m[(i, i - 1)] += c;
                    m[(i, i)] -= c;
                }
                if i + 1 < *nx {
                    m[(i, i + 1)] += c;
                    m[(i, i)] -= c;
                }
            }
        }
        [nx, ny] => {
            let cx = diffusivity / (grid.spacing()[0] * grid.spacing()[0]);
            let cy = diffusivity / (grid.spacing()[1] * grid.spacing()[1]);
            let idx = |ix: usize, iy: usize| ix * ny + iy;
            for ix in 0..*nx {
                for iy in 0..*ny {
                    let i = idx(ix, iy);
                    if ix > 0 {
                        m[(i, idx(ix - 1, iy))] += cx;
                        m[(i, i)] -= cx;
                    }
                    if ix + 1 < *nx {
                        m[(i, idx(ix + 1, iy))] += cx;
                        m[(i, i)] -= cx;
                    }
                    if iy > 0 {
                        m[(i, idx(ix, iy - 1))] += cy;
                        m[(i, i)] -= cy;
                    }
                    if iy + 1 < *ny {
                        m[(i, idx(ix, iy + 1))] += cy;
                        m[(i, i)] -= cy;
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(m)
}

/// Principal eigenpair of the local reference operator D*Laplacian + a with
/// homogeneous Neumann boundary condition.
pub fn local_neumann_eigenpair(grid: &Arc<Grid>, diffusivity: f64, a: &Field) -> Result<EigenPair> {
    check_same_grid(grid, a, "coefficient field")?;
    let lap = fd_neumann_laplacian(grid, diffusivity)?;
    let b = negated_matrix(&lap, a);
    // The local operator always admits the eigenfunction; keep the flag true.
    eigenpair_of(grid, b, a, f64::NEG_INFINITY)
}

/// The `count` smallest eigenvalues of -(D*Laplacian_h + diag a), ascending.
/// Used as a stencil diagnostic (for a = 0, D = 1 they approximate (k pi)^2).
pub fn local_neumann_spectrum(
    grid: &Arc<Grid>,
    diffusivity: f64,
    a: &Field,
    count: usize,
) -> Result<Vec<f64>> {
    check_same_grid(grid, a, "coefficient field")?;
    let lap = fd_neumann_laplacian(grid, diffusivity)?;
    let b = negated_matrix(&lap, a);
    let dense = linalg::sorted_symmetric_eigen(b);
    Ok(dense.values.into_iter().take(count).collect())
}

/// Richardson-extrapolated local principal eigenvalue: both sides of the m=2
/// comparison carry O(h^2) error, so the reference is computed on n and 2n
/// grids and extrapolated, (4 lambda_{2n} - lambda_n) / 3.
pub fn local_neumann_lambda_extrapolated(
    extent: &[f64],
    n: &[usize],
    diffusivity: f64,
    coefficient: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    let coarse = Grid::new(extent, n)?;
    let fine_n: Vec<usize> = n.iter().map(|&k| 2 * k).collect();
    let fine = Grid::new(extent, &fine_n)?;
    let a_c = crate::grid::sample(&coarse, &coefficient);
    let a_f = crate::grid::sample(&fine, &coefficient);
    let l_c = local_neumann_eigenpair(&coarse, diffusivity, &a_c)?.lambda;
    let l_f = local_neumann_eigenpair(&fine, diffusivity, &a_f)?.lambda;
    Ok((4.0 * l_f - l_c) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{constant, sample, NormKind};
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
    fn constant_coefficient_gives_flat_pair() {
        for (sigma, m) in [(0.5, 0.0), (0.1, 2.0), (5.0, 1.0)] {
            let g = Grid::line(1.0, 60).unwrap();
            let op = assemble(&g, &uniform_1d(), sigma, m, Boundary::Neumann).unwrap();
            let a = constant(&g, 1.5);
            let ep = principal_eigenpair(&op, &a).unwrap();
            assert!((ep.lambda + 1.5).abs() < 1e-10, "sigma={sigma} m={m}");
            let flat = 1.0; // |Omega|^{-1/2} with |Omega| = 1
            for v in ep.phi.values().iter() {
                assert!((v - flat).abs() < 1e-6);
            }
            assert!(ep.residual <= 1e-8 * (ep.lambda.abs() + 1.5));
            assert!(ep.diagnostics.solver_gap < 1e-8);
        }
    }

    #[test]
    fn diagonal_shift_moves_lambda_exactly() {
        let g = Grid::line(1.0, 120).unwrap();
        let op = assemble(&g, &uniform_1d(), 0.1, 1.0, Boundary::Neumann).unwrap();
        let a = standard_a(&g);
        let shifted = a.map(|v| v + 5.0);
        let l0 = principal_eigenpair(&op, &a).unwrap().lambda;
        let l5 = principal_eigenpair(&op, &shifted).unwrap().lambda;
        assert!((l5 - (l0 - 5.0)).abs() < 1e-10);
    }

    #[test]
    fn sandwich_and_dual_solver_agreement() {
        let g = Grid::line(1.0, 800).unwrap();
        let op = assemble(&g, &uniform_1d(), 0.05, 2.0, Boundary::Neumann).unwrap();
        let a = standard_a(&g);
        let ep = principal_eigenpair(&op, &a).unwrap();
        assert!(ep.lambda >= -3.0 - 1e-9);
        assert!(ep.lambda <= -2.0 + 1e-9);
        assert!(ep.lambda >= ep.diagnostics.lower_bound - 1e-9);
        assert!(ep.lambda <= ep.diagnostics.upper_bound + 1e-9);
        assert!(ep.diagnostics.solver_gap <= 1e-8);
        assert!(ep.diagnostics.min_phi >= -1e-10);
        assert!(!ep.diagnostics.degenerate);
    }

    #[test]
    fn rayleigh_quotient_properties() {
        let g = Grid::line(1.0, 96).unwrap();
        let op = assemble(&g, &uniform_1d(), 0.2, 1.0, Boundary::Neumann).unwrap();

        let c = constant(&g, 2.5);
        let one = constant(&g, 1.0);
        assert!((rayleigh_quotient(&op, &c, &one).unwrap() + 2.5).abs() < 1e-12);

        let a = standard_a(&g);
        let ep = principal_eigenpair(&op, &a).unwrap();
        let rq = rayleigh_quotient(&op, &a, &ep.phi).unwrap();
        assert!((rq - ep.lambda).abs() < 1e-9);

        let mut state = 42u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            0.1 + ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for _ in 0..20 {
            let phi = sample(&g, |_| next());
            let val = rayleigh_quotient(&op, &a, &phi).unwrap();
            assert!(val >= ep.lambda - 1e-10);
        }

        let zero = constant(&g, 0.0);
        assert!(rayleigh_quotient(&op, &a, &zero).is_err());
    }

    #[test]
    fn local_stencil_reproduces_neumann_spectrum() {
        // Closed form: eigenvalues of -Laplacian on (0,1) with Neumann
        // condition are (k pi)^2; the second one validates the stencil.
        let g = Grid::line(1.0, 400).unwrap();
        let a = constant(&g, 0.0);
        let ev = local_neumann_spectrum(&g, 1.0, &a, 3).unwrap();
        assert!(ev[0].abs() < 1e-8);
        assert!((ev[1] - PI * PI).abs() < 1e-3 * PI * PI);

        // The stencil scale is D/h^2 = 1.6e5, so the flat eigenvalue is exact
        // only up to rounding of that magnitude.
        let flat = local_neumann_eigenpair(&g, 1.0, &constant(&g, 2.0)).unwrap();
        assert!((flat.lambda + 2.0).abs() < 1e-9);
    }

    #[test]
    fn local_eigenpair_2d_constant() {
        let g = Grid::new(&[1.0, 1.0], &[12, 12]).unwrap();
        let ep = local_neumann_eigenpair(&g, 0.3, &constant(&g, 0.7)).unwrap();
        assert!((ep.lambda + 0.7).abs() < 1e-10);
    }

    #[test]
    fn limit_target_examples() {
        let g = Grid::line(1.0, 512).unwrap();
        let t = limit_targets(&constant(&g, 4.0));
        assert_eq!(t.neg_sup, -4.0);
        assert!((t.neg_mean + 4.0).abs() < 1e-12);

        let t = limit_targets(&standard_a(&g));
        assert!((t.neg_sup + 3.0).abs() < (PI / 512.0).powi(2) * 3.0);
        assert!((t.neg_mean + 2.0).abs() < 1e-12);

        let t = limit_targets(&sample(&g, |x| x[0]));
        assert!((t.neg_sup + 1.0).abs() < 2.0 / 512.0);
        assert!((t.neg_mean + 0.5).abs() < 1e-12);
    }

    #[test]
    fn eigenfunction_flattens_for_m_above_two() {
        let flat_gap = |sigma: f64, n: usize| {
            let g = Grid::line(1.0, n).unwrap();
            let op = assemble(&g, &uniform_1d(), sigma, 3.0, Boundary::Neumann).unwrap();
            let a = standard_a(&g);
            let ep = principal_eigenpair(&op, &a).unwrap();
            ep.phi.map(|v| v - 1.0).norm(NormKind::L2)
        };
        let coarse = flat_gap(0.1, 170);
        let fine = flat_gap(0.05, 340);
        assert!(fine < coarse, "fine {fine} vs coarse {coarse}");
    }

    #[test]
    fn mismatched_grid_is_rejected() {
        let g = Grid::line(1.0, 64).unwrap();
        let other = Grid::line(1.0, 65).unwrap();
        let op = assemble(&g, &uniform_1d(), 0.2, 0.0, Boundary::Neumann).unwrap();
        assert!(principal_eigenpair(&op, &constant(&other, 1.0)).is_err());
    }
}
