use nlkpp::grid::{sample, Grid};
use nlkpp::kernel::{Kernel, KernelFamily};
use nlkpp::operator::{assemble, Boundary};
use std::time::Instant;

fn main() {
    for n in [200usize, 400, 800, 1600] {
        let g = Grid::line(1.0, n).unwrap();
        let k = Kernel::new(KernelFamily::Uniform, 1).unwrap();
        let sigma = 40.0 / n as f64 * 1.1;
        let t0 = Instant::now();
        let op = assemble(&g, &k, sigma, 2.0, Boundary::Neumann).unwrap();
        let t_asm = t0.elapsed();
        let a = sample(&g, |x| 2.0 + (2.0 * std::f64::consts::PI * x[0]).sin());
        let mut b = -op.matrix().clone();
        for i in 0..n { b[(i, i)] -= a.values()[i]; }
        let t0 = Instant::now();
        let eig = nalgebra::SymmetricEigen::new(b);
        let t_eig = t0.elapsed();
        let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("n={n:5} assemble={t_asm:?} eig={t_eig:?} lambda_min={lmin:.6}");
    }
}
