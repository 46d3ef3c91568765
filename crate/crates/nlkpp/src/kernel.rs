//! Dispersal kernel families: compactly supported, even, unit-mass densities
//! on the unit ball, with closed-form normalization and second moment.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Admissible kernel families. `Triangular` is one-dimensional only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Uniform,
    Triangular,
    QuarticBump,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            KernelFamily::Uniform => "uniform",
            KernelFamily::Triangular => "triangular",
            KernelFamily::QuarticBump => "quartic-bump",
        };
        f.write_str(s)
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => Ok(KernelFamily::Uniform),
            "triangular" => Ok(KernelFamily::Triangular),
            "quartic-bump" | "quartic" => Ok(KernelFamily::QuarticBump),
            other => Err(Error::Config(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// A dispersal density J: even, J(0) > 0, supported on the unit ball,
/// total mass exactly 1 by the stored closed-form normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    dim: usize,
    norm_const: f64,
    d2: f64,
}

impl Kernel {
    /// Builds a kernel. Normalization and second moment are closed forms:
    ///
    /// | family       | N | J(z)                 | D2(J) |
    /// |--------------|---|----------------------|-------|
    /// | uniform      | 1 | 1/2                  | 1/3   |
    /// | uniform      | 2 | 1/pi                 | 1/2   |
    /// | triangular   | 1 | 1 - |z|              | 1/6   |
    /// | quartic-bump | 1 | (3/4)(1 - z^2)       | 1/5   |
    /// | quartic-bump | 2 | (2/pi)(1 - |z|^2)    | 1/3   |
    pub fn new(family: KernelFamily, dim: usize) -> Result<Kernel> {
        let (norm_const, d2) = match (family, dim) {
            (KernelFamily::Uniform, 1) => (0.5, 1.0 / 3.0),
            (KernelFamily::Uniform, 2) => (std::f64::consts::FRAC_1_PI, 0.5),
            (KernelFamily::Triangular, 1) => (1.0, 1.0 / 6.0),
            (KernelFamily::QuarticBump, 1) => (0.75, 0.2),
            (KernelFamily::QuarticBump, 2) => (2.0 * std::f64::consts::FRAC_1_PI, 1.0 / 3.0),
            (f, d) => {
                return Err(Error::Config(format!(
                    "kernel family `{f}` is not available in dimension {d}"
                )))
            }
        };
        Ok(Kernel {
            family,
            dim,
            norm_const,
            d2,
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    /// Second moment D2(J) = int J(z) |z|^2 dz of the unit-scale kernel.
    pub fn second_moment(&self) -> f64 {
        self.d2
    }

    /// Evaluates the unit-scale kernel from the squared radius |z|^2.
    ///
    /// The support boundary evaluates to 0, with a 1e-12 relative guard band:
    /// grid distances that land on |z| = 1 up to rounding (sigma/h integral)
    /// would otherwise be included or dropped per-row by the last ulp of the
    /// distance computation, breaking stencil symmetry for the uniform family.
    #[inline]
    pub fn eval_r2(&self, r2: f64) -> f64 {
        if r2 >= 1.0 - 1e-12 {
            return 0.0;
        }
        match self.family {
            KernelFamily::Uniform => self.norm_const,
            KernelFamily::Triangular => self.norm_const * (1.0 - r2.sqrt()),
            KernelFamily::QuarticBump => self.norm_const * (1.0 - r2),
        }
    }

    /// Evaluates J(z). The slice length must equal the kernel dimension.
    pub fn eval(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.dim);
        self.eval_r2(z.iter().map(|c| c * c).sum())
    }

    /// Evaluates the scaled kernel J_sigma(z) = sigma^{-N} J(z / sigma).
    pub fn eval_scaled(&self, sigma: f64, z: &[f64]) -> Result<f64> {
        Ok(self.scaled(sigma)?.eval(z))
    }

    /// Second moment of J_sigma: sigma^2 * D2(J).
    pub fn scaled_second_moment(&self, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        Ok(sigma * sigma * self.d2)
    }

    /// Precomputes the scaling factors for repeated J_sigma evaluations.
    pub fn scaled(&self, sigma: f64) -> Result<ScaledKernel> {
        check_sigma(sigma)?;
        Ok(ScaledKernel {
            kernel: *self,
            inv_sigma2: 1.0 / (sigma * sigma),
            prefactor: sigma.powi(-(self.dim as i32)),
        })
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "dispersal spread sigma must be positive and finite, got {sigma}"
        )))
    }
}

/// J_sigma with the 1/sigma factors folded in, for hot assembly loops.
#[derive(Debug, Clone, Copy)]
pub struct ScaledKernel {
    kernel: Kernel,
    inv_sigma2: f64,
    prefactor: f64,
}

impl ScaledKernel {
    /// Evaluates J_sigma from the squared distance |z|^2.
    #[inline]
    pub fn eval_dist2(&self, dist2: f64) -> f64 {
        self.prefactor * self.kernel.eval_r2(dist2 * self.inv_sigma2)
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.eval_dist2(z.iter().map(|c| c * c).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Midpoint quadrature of f over [-r, r]^dim with `m` nodes per axis.
    fn midpoint_quad(dim: usize, r: f64, m: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let h = 2.0 * r / m as f64;
        let coord = |i: usize| -r + (i as f64 + 0.5) * h;
        match dim {
            1 => (0..m).map(|i| f(&[coord(i)])).sum::<f64>() * h,
            2 => {
                let mut total = 0.0;
                for i in 0..m {
                    let x = coord(i);
                    let mut row = 0.0;
                    for j in 0..m {
                        row += f(&[x, coord(j)]);
                    }
                    total += row;
                }
                total * h * h
            }
            _ => unreachable!(),
        }
    }

    fn all_kernels() -> Vec<Kernel> {
        vec![
            Kernel::new(KernelFamily::Uniform, 1).unwrap(),
            Kernel::new(KernelFamily::Uniform, 2).unwrap(),
            Kernel::new(KernelFamily::Triangular, 1).unwrap(),
            Kernel::new(KernelFamily::QuarticBump, 1).unwrap(),
            Kernel::new(KernelFamily::QuarticBump, 2).unwrap(),
        ]
    }

    #[test]
    fn closed_form_families() {
        let k = Kernel::new(KernelFamily::Uniform, 1).unwrap();
        assert_eq!(k.eval(&[0.3]), 0.5);
        assert_eq!(k.second_moment(), 1.0 / 3.0);

        let k = Kernel::new(KernelFamily::QuarticBump, 1).unwrap();
        assert_eq!(k.eval(&[0.0]), 0.75);
        assert_eq!(k.second_moment(), 0.2);

        let k = Kernel::new(KernelFamily::Uniform, 2).unwrap();
        assert_eq!(k.eval(&[0.3, 0.4]), std::f64::consts::FRAC_1_PI);
        assert_eq!(k.second_moment(), 0.5);
    }

    #[test]
    fn triangular_is_one_dimensional_only() {
        assert!(Kernel::new(KernelFamily::Triangular, 2).is_err());
        assert!(Kernel::new(KernelFamily::Uniform, 3).is_err());
    }

    #[test]
    fn unit_mass_by_quadrature() {
        for k in all_kernels() {
            // 1e4 nodes per axis in 1D; 2D uses the same resolution.
            let m = if k.dim() == 1 { 10_000 } else { 10_000 };
            let mass = midpoint_quad(k.dim(), 1.0, m, |z| k.eval(z));
            assert!(
                (mass - 1.0).abs() < 1e-6,
                "{} {}d mass {mass}",
                k.family(),
                k.dim()
            );
        }
    }

    #[test]
    fn second_moment_by_quadrature() {
        for k in all_kernels() {
            let m = 10_000;
            let d2 = midpoint_quad(k.dim(), 1.0, m, |z| {
                k.eval(z) * z.iter().map(|c| c * c).sum::<f64>()
            });
            assert!(
                (d2 - k.second_moment()).abs() < 1e-6,
                "{} {}d d2 {d2} vs {}",
                k.family(),
                k.dim(),
                k.second_moment()
            );
        }
    }

    #[test]
    fn scaled_evaluation_examples() {
        let uni = Kernel::new(KernelFamily::Uniform, 1).unwrap();
        assert_eq!(uni.eval_scaled(2.0, &[0.0]).unwrap(), 0.25);

        for k in all_kernels() {
            let z = vec![0.2 / (k.dim() as f64).sqrt(); k.dim()];
            assert_eq!(k.eval_scaled(0.1, &z).unwrap(), 0.0);
        }

        let quartic = Kernel::new(KernelFamily::QuarticBump, 1).unwrap();
        assert_eq!(quartic.eval_scaled(0.5, &[0.25]).unwrap(), 1.125);
    }

    #[test]
    fn scaled_mass_is_one() {
        for k in all_kernels() {
            for sigma in [0.1, 1.0, 10.0] {
                let m = if k.dim() == 1 { 10_000 } else { 10_000 };
                let sk = k.scaled(sigma).unwrap();
                let mass = midpoint_quad(k.dim(), sigma, m, |z| sk.eval(z));
                assert!(
                    (mass - 1.0).abs() < 1e-6,
                    "{} {}d sigma={sigma} mass {mass}",
                    k.family(),
                    k.dim()
                );
            }
        }
    }

    #[test]
    fn scaled_second_moment_examples() {
        let uni1 = Kernel::new(KernelFamily::Uniform, 1).unwrap();
        assert_eq!(uni1.scaled_second_moment(1.0).unwrap(), 1.0 / 3.0);
        assert!((uni1.scaled_second_moment(0.1).unwrap() - 1.0 / 300.0).abs() < 1e-18);
        let uni2 = Kernel::new(KernelFamily::Uniform, 2).unwrap();
        assert_eq!(uni2.scaled_second_moment(2.0).unwrap(), 2.0);
    }

    #[test]
    fn scaled_second_moment_ratio_is_sigma_squared() {
        for k in all_kernels() {
            for sigma in [0.1, 0.7, 3.0, 10.0] {
                let ratio =
                    k.scaled_second_moment(sigma).unwrap() / k.scaled_second_moment(1.0).unwrap();
                let s2 = sigma * sigma;
                // exact up to one rounding of the division
                assert!((ratio - s2).abs() <= f64::EPSILON * s2);
            }
        }
    }

    #[test]
    fn evenness_is_exact() {
        for k in all_kernels() {
            for sigma in [0.3, 1.0, 5.0] {
                let pts: Vec<Vec<f64>> = if k.dim() == 1 {
                    vec![vec![0.1], vec![0.77], vec![0.29 * sigma]]
                } else {
                    vec![vec![0.1, -0.4], vec![0.5 * sigma, 0.2 * sigma]]
                };
                for z in pts {
                    let neg: Vec<f64> = z.iter().map(|c| -c).collect();
                    assert_eq!(
                        k.eval_scaled(sigma, &z).unwrap(),
                        k.eval_scaled(sigma, &neg).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_nonpositive_sigma() {
        let k = Kernel::new(KernelFamily::Uniform, 1).unwrap();
        assert!(k.eval_scaled(0.0, &[0.0]).is_err());
        assert!(k.eval_scaled(-1.0, &[0.0]).is_err());
        assert!(k.scaled_second_moment(0.0).is_err());
    }
}
