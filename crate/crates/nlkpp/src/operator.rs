//! Assembly of the discrete nonlocal dispersal operator
//!
//!   (A phi)_i = sigma^{-m} sum_j w J_sigma(x_i - x_j) (phi_j - phi_i)      (Neumann)
//!   (A phi)_i = sigma^{-m} (sum_j w J_sigma(x_i - x_j) phi_j - phi_i)      (Dirichlet)
//!
//! as a dense symmetric matrix, together with the row kernel masses
//! p_sigma(x_i) = sum_j w J_sigma(x_i - x_j).

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{Field, Grid};
use crate::kernel::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Neumann,
    Dirichlet,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Neumann => f.write_str("neumann"),
            Boundary::Dirichlet => f.write_str("dirichlet"),
        }
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "neumann" => Ok(Boundary::Neumann),
            "dirichlet" => Ok(Boundary::Dirichlet),
            other => Err(Error::Config(format!("unknown boundary `{other}`"))),
        }
    }
}

/// Dense form of the scaled nonlocal dispersal operator on a grid.
#[derive(Debug, Clone)]
pub struct NonlocalOperator {
    grid: Arc<Grid>,
    kernel: Kernel,
    sigma: f64,
    m: f64,
    boundary: Boundary,
    matrix: DMatrix<f64>,
    p_sigma: Field,
}

/// Enforces the resolution rule sigma/h >= 4 on every axis.
pub fn check_resolution(grid: &Grid, sigma: f64) -> Result<()> {
    const MIN_CELLS: f64 = 4.0;
    for (axis, (&h, &l)) in grid.spacing().iter().zip(grid.extent()).enumerate() {
        let ratio = sigma / h;
        if ratio < MIN_CELLS {
            return Err(Error::Resolution {
                axis,
                ratio,
                required_n: (MIN_CELLS * l / sigma).ceil() as usize,
                n: grid.shape()[axis],
            });
        }
    }
    Ok(())
}

/// Assembles the operator. Fails if sigma/h < 4 on any axis, if sigma is not
/// positive, or if m < 0.
pub fn assemble(
    grid: &Arc<Grid>,
    kernel: &Kernel,
    sigma: f64,
    m: f64,
    boundary: Boundary,
) -> Result<NonlocalOperator> {
    assemble_impl(grid, kernel, sigma, m, boundary, columns_default)
}

/// Sequential assembly path; behavior is identical to [`assemble`].
#[doc(hidden)]
pub fn assemble_serial(
    grid: &Arc<Grid>,
    kernel: &Kernel,
    sigma: f64,
    m: f64,
    boundary: Boundary,
) -> Result<NonlocalOperator> {
    assemble_impl(grid, kernel, sigma, m, boundary, columns_serial)
}

/// Rayon assembly path; behavior is identical to [`assemble`].
#[cfg(feature = "parallel")]
#[doc(hidden)]
pub fn assemble_parallel(
    grid: &Arc<Grid>,
    kernel: &Kernel,
    sigma: f64,
    m: f64,
    boundary: Boundary,
) -> Result<NonlocalOperator> {
    assemble_impl(grid, kernel, sigma, m, boundary, columns_parallel)
}

type ColumnFill<'a> = &'a (dyn Fn(usize, &mut [f64]) -> f64 + Sync);

fn columns_default(buf: &mut [f64], chunk: usize, f: ColumnFill<'_>) -> Vec<f64> {
    exec::map_columns_mut(buf, chunk, f)
}

fn columns_serial(buf: &mut [f64], chunk: usize, f: ColumnFill<'_>) -> Vec<f64> {
    exec::map_columns_mut_serial(buf, chunk, f)
}

#[cfg(feature = "parallel")]
fn columns_parallel(buf: &mut [f64], chunk: usize, f: ColumnFill<'_>) -> Vec<f64> {
    exec::map_columns_mut_parallel(buf, chunk, f)
}

fn assemble_impl<F>(
    grid: &Arc<Grid>,
    kernel: &Kernel,
    sigma: f64,
    m: f64,
    boundary: Boundary,
    columns: F,
) -> Result<NonlocalOperator>
where
    F: for<'a> Fn(&mut [f64], usize, ColumnFill<'a>) -> Vec<f64>,
{
    if kernel.dim() != grid.dim() {
        return Err(Error::Shape(format!(
            "kernel dimension {} does not match grid dimension {}",
            kernel.dim(),
            grid.dim()
        )));
    }
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::Domain(format!("cost parameter m must be >= 0, got {m}")));
    }
    check_resolution(grid, sigma)?;
    let scaled = kernel.scaled(sigma)?;

    let n = grid.len();
    let w = grid.weight();
    let mut matrix = DMatrix::<f64>::zeros(n, n);

    // Column j holds w J_sigma(x_i - x_j); the column sum is p_sigma(x_j).
    // Symmetry is exact because entry (i, j) and entry (j, i) evaluate the
    // kernel at the same squared distance.
    let fill = |j: usize, col: &mut [f64]| -> f64 {
        let cj = grid.coord(j);
        let mut p = 0.0;
        for (i, slot) in col.iter_mut().enumerate() {
            let ci = grid.coord(i);
            let dx = ci[0] - cj[0];
            let dy = ci[1] - cj[1];
            let v = w * scaled.eval_dist2(dx * dx + dy * dy);
            *slot = v;
            p += v;
        }
        p
    };
    let p = columns(matrix.as_mut_slice(), n, &fill);

    // Diagonal correction, then the sigma^{-m} prefactor.
    let scale = sigma.powf(-m);
    for j in 0..n {
        match boundary {
            Boundary::Neumann => matrix[(j, j)] -= p[j],
            Boundary::Dirichlet => matrix[(j, j)] -= 1.0,
        }
    }
    matrix *= scale;

    let p_sigma = Field::from_vector(grid.clone(), DVector::from_vec(p))?;
    Ok(NonlocalOperator {
        grid: grid.clone(),
        kernel: *kernel,
        sigma,
        m,
        boundary,
        matrix,
        p_sigma,
    })
}

impl NonlocalOperator {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn cost_exponent(&self) -> f64 {
        self.m
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Row kernel masses p_sigma(x_i), without the sigma^{-m} prefactor.
    pub fn p_sigma(&self) -> &Field {
        &self.p_sigma
    }

    /// sigma^{-m}
    pub fn scale_factor(&self) -> f64 {
        self.sigma.powf(-self.m)
    }

    /// Matrix-vector product A phi.
    pub fn apply(&self, phi: &Field) -> Result<Field> {
        if !phi.same_grid_as(self) {
            return Err(Error::Shape("field grid does not match operator grid".into()));
        }
        Field::from_vector(self.grid.clone(), &self.matrix * phi.values())
    }

    /// The Neumann quadratic form
    /// (1/(2 sigma^m)) sum_ij w^2 J_sigma(x_i - x_j) (phi_j - phi_i)^2,
    /// evaluated by a direct double sum over node pairs (independent of the
    /// assembled matrix entries' diagonal bookkeeping).
    pub fn quadratic_form(&self, phi: &Field) -> Result<f64> {
        if !phi.same_grid_as(self) {
            return Err(Error::Shape("field grid does not match operator grid".into()));
        }
        let scaled = self.kernel.scaled(self.sigma)?;
        let grid = &self.grid;
        let w2 = grid.weight() * grid.weight();
        let v = phi.values();
        let n = grid.len();
        let total = exec::sum_indexed(n, |i| {
            let ci = grid.coord(i);
            let vi = v[i];
            let mut acc = 0.0;
            for j in 0..n {
                let cj = grid.coord(j);
                let dx = ci[0] - cj[0];
                let dy = ci[1] - cj[1];
                let d = v[j] - vi;
                acc += scaled.eval_dist2(dx * dx + dy * dy) * d * d;
            }
            acc
        });
        Ok(0.5 * self.scale_factor() * w2 * total)
    }

    /// Writes the nonzero entries as `i,j,value` triplets.
    pub fn dump_matrix_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "i,j,value")?;
        for j in 0..self.matrix.ncols() {
            for i in 0..self.matrix.nrows() {
                let v = self.matrix[(i, j)];
                if v != 0.0 {
                    writeln!(out, "{i},{j},{:.16e}", v)?;
                }
            }
        }
        Ok(())
    }
}

impl Field {
    fn same_grid_as(&self, op: &NonlocalOperator) -> bool {
        Arc::ptr_eq(self.grid(), &op.grid) || **self.grid() == *op.grid
    }
}
