//! Uniform cell-centered grids on box domains [0, L1] x ... and node fields.

use std::io::{BufRead, Write};
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Uniform cell-centered discretization of a box domain. All nodes carry the
/// same quadrature weight (midpoint rule), which keeps discrete operators
/// exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    extent: Vec<f64>,
    n: Vec<usize>,
    h: Vec<f64>,
    weight: f64,
    coords: Vec<[f64; 2]>,
}

impl Grid {
    /// Builds the grid for the box with per-axis lengths `extent` and node
    /// counts `n`. Nodes are cell centers x_i = (i + 1/2) h.
    pub fn new(extent: &[f64], n: &[usize]) -> Result<Arc<Grid>> {
        if extent.is_empty() || extent.len() > 2 || extent.len() != n.len() {
            return Err(Error::Config(format!(
                "grid dimension must be 1 or 2 with matching node counts (extent {:?}, n {:?})",
                extent, n
            )));
        }
        for (axis, (&l, &na)) in extent.iter().zip(n).enumerate() {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::Config(format!(
                    "extent must be positive on axis {axis}, got {l}"
                )));
            }
            if na < 2 {
                return Err(Error::Config(format!(
                    "need at least 2 nodes per axis, got {na} on axis {axis}"
                )));
            }
        }
        let h: Vec<f64> = extent.iter().zip(n).map(|(&l, &na)| l / na as f64).collect();
        let weight = h.iter().product();
        let coords = match n {
            [nx] => (0..*nx).map(|i| [(i as f64 + 0.5) * h[0], 0.0]).collect(),
            [nx, ny] => {
                let mut c = Vec::with_capacity(nx * ny);
                for ix in 0..*nx {
                    let x = (ix as f64 + 0.5) * h[0];
                    for iy in 0..*ny {
                        c.push([x, (iy as f64 + 0.5) * h[1]]);
                    }
                }
                c
            }
            _ => unreachable!(),
        };
        Ok(Arc::new(Grid {
            extent: extent.to_vec(),
            n: n.to_vec(),
            h,
            weight,
            coords,
        }))
    }

    /// 1D convenience constructor for [0, length] with `n` cells.
    pub fn line(length: f64, n: usize) -> Result<Arc<Grid>> {
        Grid::new(&[length], &[n])
    }

    pub fn dim(&self) -> usize {
        self.extent.len()
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn shape(&self) -> &[usize] {
        &self.n
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    pub fn max_spacing(&self) -> f64 {
        self.h.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// Scalar quadrature weight per node (product of spacings).
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// |Omega|, the measure of the box.
    pub fn volume(&self) -> f64 {
        self.extent.iter().product()
    }

    /// Node coordinates; the second entry is 0 for 1D grids.
    #[inline]
    pub fn coord(&self, i: usize) -> [f64; 2] {
        self.coords[i]
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i][..self.dim()]
    }
}

/// Samples a coordinate function at every node.
pub fn sample(grid: &Arc<Grid>, mut f: impl FnMut(&[f64]) -> f64) -> Field {
    let dim = grid.dim();
    let values = DVector::from_iterator(grid.len(), grid.coords.iter().map(|c| f(&c[..dim])));
    Field {
        grid: grid.clone(),
        values,
    }
}

/// Constant field on a grid.
pub fn constant(grid: &Arc<Grid>, value: f64) -> Field {
    Field {
        grid: grid.clone(),
        values: DVector::from_element(grid.len(), value),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
    LInf,
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" => Ok(NormKind::L1),
            "l2" => Ok(NormKind::L2),
            "linf" | "inf" => Ok(NormKind::LInf),
            other => Err(Error::Config(format!("unknown norm `{other}`"))),
        }
    }
}

/// Real values attached to grid nodes (coefficients, eigenfunctions, states).
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: DVector<f64>,
}

impl Field {
    pub fn from_vector(grid: Arc<Grid>, values: DVector<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DVector<f64> {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    /// Quadrature norms: L1 = sum w|v|, L2 = (sum w v^2)^{1/2}, LInf = max|v|.
    pub fn norm(&self, kind: NormKind) -> f64 {
        let w = self.grid.weight();
        match kind {
            NormKind::L1 => w * self.values.iter().map(|v| v.abs()).sum::<f64>(),
            NormKind::L2 => (w * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt(),
            NormKind::LInf => self.values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Quadrature integral: sum w v_i.
    pub fn integral(&self) -> f64 {
        self.grid.weight() * self.values.sum()
    }

    /// Integral divided by |Omega|.
    pub fn mean(&self) -> f64 {
        self.integral() / self.grid.volume()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.map(f),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if !self.same_grid(other) {
            return Err(Error::Shape("fields live on different grids".into()));
        }
        Ok(Field {
            grid: self.grid.clone(),
            values: self.values.zip_map(&other.values, f),
        })
    }

    /// max_i |self_i - other_i|
    pub fn linf_distance(&self, other: &Field) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::Shape("fields live on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Writes the node dump CSV: header `x[,y],value`, 17 significant digits.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        let dim = self.grid.dim();
        if dim == 1 {
            writeln!(out, "x,value")?;
        } else {
            writeln!(out, "x,y,value")?;
        }
        for (i, v) in self.values.iter().enumerate() {
            let c = self.grid.coord(i);
            if dim == 1 {
                writeln!(out, "{:.16e},{:.16e}", c[0], v)?;
            } else {
                writeln!(out, "{:.16e},{:.16e},{:.16e}", c[0], c[1], v)?;
            }
        }
        Ok(())
    }

    /// Reads a node dump produced by `write_csv` back onto `grid`. The value
    /// column is the last one; node order must match the grid.
    pub fn read_csv(grid: Arc<Grid>, reader: impl BufRead) -> Result<Field> {
        let mut values = Vec::with_capacity(grid.len());
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || (lineno == 0 && t.starts_with(|c: char| c.is_alphabetic())) {
                continue;
            }
            let last = t.rsplit(',').next().unwrap_or(t);
            let v: f64 = last.trim().parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("bad field value `{last}`"),
            })?;
            values.push(v);
        }
        Field::from_vector(grid, DVector::from_vec(values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_centers_and_weight() {
        let g = Grid::line(1.0, 4).unwrap();
        let xs: Vec<f64> = (0..4).map(|i| g.coord(i)[0]).collect();
        assert_eq!(xs, vec![0.125, 0.375, 0.625, 0.875]);
        assert_eq!(g.weight(), 0.25);

        let g = Grid::line(2.0, 2).unwrap();
        assert_eq!(g.coord(0)[0], 0.5);
        assert_eq!(g.coord(1)[0], 1.5);
        assert_eq!(g.weight(), 1.0);

        let g = Grid::new(&[1.0, 1.0], &[3, 3]).unwrap();
        assert_eq!(g.len(), 9);
        assert!((g.weight() - 1.0 / 9.0).abs() < 1e-16);
    }

    #[test]
    fn total_weight_is_volume() {
        for (extent, n) in [
            (vec![1.0], vec![7usize]),
            (vec![3.5], vec![100]),
            (vec![1.0, 2.0], vec![13, 9]),
        ] {
            let g = Grid::new(&extent, &n).unwrap();
            let total = g.weight() * g.len() as f64;
            assert!((total - g.volume()).abs() <= 1e-12 * g.volume());
        }
    }

    #[test]
    fn invalid_grids_are_rejected() {
        assert!(Grid::line(0.0, 4).is_err());
        assert!(Grid::line(-1.0, 4).is_err());
        assert!(Grid::line(1.0, 1).is_err());
        assert!(Grid::new(&[1.0, 1.0, 1.0], &[2, 2, 2]).is_err());
    }

    #[test]
    fn sampling() {
        let g = Grid::line(1.0, 2).unwrap();
        let f = sample(&g, |_| 3.0);
        assert_eq!(f.values().as_slice(), &[3.0, 3.0]);

        let g = Grid::line(1.0, 4).unwrap();
        let f = sample(&g, |x| x[0]);
        assert_eq!(f.values().as_slice(), &[0.125, 0.375, 0.625, 0.875]);

        let f = sample(&g, |x| (x[0] - 0.5).max(0.0));
        assert_eq!(f.values().as_slice(), &[0.0, 0.0, 0.125, 0.375]);
    }

    #[test]
    fn norms() {
        let g = Grid::line(1.0, 10).unwrap();
        let f = constant(&g, 2.0);
        assert!((f.norm(NormKind::L2) - 2.0).abs() < 1e-14);

        let g = Grid::line(2.0, 16).unwrap();
        let f = constant(&g, -3.0);
        assert!((f.norm(NormKind::L1) - 6.0).abs() < 1e-14);

        // Closed form: int_0^1 x^2 dx = 1/3, so ||x||_{L2} = 3^{-1/2}.
        let g = Grid::line(1.0, 1000).unwrap();
        let f = sample(&g, |x| x[0]);
        assert!((f.norm(NormKind::L2) - 1.0 / 3.0_f64.sqrt()).abs() < 1e-3);

        let f = sample(&g, |x| x[0] - 0.4);
        assert!((f.norm(NormKind::LInf) - 0.5995).abs() < 1e-12);
    }

    #[test]
    fn normalized_constant_has_unit_l2_norm() {
        for (extent, n) in [(vec![1.0], vec![50usize]), (vec![2.0, 0.5], vec![20, 30])] {
            let g = Grid::new(&extent, &n).unwrap();
            let f = constant(&g, 1.0 / g.volume().sqrt());
            assert!((f.norm(NormKind::L2) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::line(1.0, 8).unwrap();
        let f = sample(&g, |x| (3.1 * x[0]).sin());
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = Field::read_csv(g.clone(), buf.as_slice()).unwrap();
        assert_eq!(f.values(), back.values());
    }
}
