use nlkpp::evolution::*;
use nlkpp::grid::{constant, Grid};
use nlkpp::kernel::{Kernel, KernelFamily};
use nlkpp::operator::{assemble, Boundary};
use std::time::Instant;

fn main() {
    let k = Kernel::new(KernelFamily::Uniform, 1).unwrap();
    for c in [-1.0, 0.5, 3.0] {
        for sigma in [0.1f64, 1.0, 10.0] {
            let n = ((4.0 / sigma).ceil() as usize).max(2);
            let g = Grid::line(1.0, n).unwrap();
            for m in [0.0, 3.0] {
                let op = assemble(&g, &k, sigma, m, Boundary::Neumann).unwrap();
                let a = constant(&g, c);
                let u0 = constant(&g, 1.0);
                let t0 = Instant::now();
                let traj = evolve_with(&op, &a, &u0, 2.0,
                    EvolveOptions { dt: Some(2e-6), ..Default::default() }).unwrap();
                let exact = logistic_exact_trajectory(&a, &u0, &traj).unwrap();
                let err = sup_error(&traj, &exact).unwrap();
                println!("c={c} sigma={sigma} m={m} n={n} dt={:.2e} steps={} err={err:.3e} t={:?}",
                    traj.dt_policy.dt, traj.dt_policy.steps, t0.elapsed());
            }
        }
    }
}
