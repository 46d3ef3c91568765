use nlkpp::grid::{sample, Grid};
use nlkpp::kernel::{Kernel, KernelFamily};
use nlkpp::operator::{assemble, Boundary};
use nlkpp::spectral::*;
use std::f64::consts::PI;

fn lam(sigma: f64, m: f64, n: usize, c: f64) -> (f64, usize) {
    let g = Grid::line(1.0, n).unwrap();
    let k = Kernel::new(KernelFamily::Uniform, 1).unwrap();
    let op = assemble(&g, &k, sigma, m, Boundary::Neumann).unwrap();
    let a = sample(&g, |x| c + (2.0 * PI * x[0]).sin());
    let ep = principal_eigenpair(&op, &a).unwrap();
    (ep.lambda, ep.diagnostics.solver_iterations)
}

fn main() {
    // n chosen so sigma*n is half-integer-ish (avoid support knife edge)
    println!("criterion 4 (m in 0,1), gaps |lambda + sup a|, s ~ 32.5:");
    for m in [0.0, 1.0] {
        for (sigma, n) in [(0.2, 163), (0.1, 325), (0.05, 650)] {
            let (l, it) = lam(sigma, m, n, 2.0);
            println!("  m={m} sigma={sigma} n={n}: lambda={l:.6} gap={:.4} (ip iters {it})", l + 3.0);
        }
    }
    println!("criterion 5 (m=2): lambda vs lambda1N:");
    let lref = local_neumann_lambda_extrapolated(&[1.0], &[800], 1.0/6.0,
        |x| 2.0 + (2.0*PI*x[0]).sin()).unwrap();
    println!("  FD reference (richardson 800/1600): {lref:.8}");
    for (sigma, n) in [(0.2, 163), (0.1, 325), (0.05, 650)] {
        let (l, it) = lam(sigma, 2.0, n, 2.0);
        println!("  sigma={sigma} n={n}: lambda={l:.6} gap={:.4} (it {it})", (l - lref).abs());
    }
    println!("criterion 6 (m=3), target -abar=-2, s ~ 16.5:");
    for (sigma, n) in [(0.1, 165), (0.05, 330), (0.02, 825)] {
        let (l, it) = lam(sigma, 3.0, n, 2.0);
        println!("  sigma={sigma} n={n}: lambda={l:.6} gap={:.4} (it {it})", (l + 2.0).abs());
    }
    println!("criterion 7 cells (sigma=0.1, c, m):");
    for c in [-0.5, 0.5] {
        for m in [0.0, 2.0] {
            let (l, it) = lam(0.1, m, 325, c);
            println!("  c={c} m={m}: lambda={l:.6} exists={} (it {it})", l < 0.0);
        }
    }
}
