use nlkpp::grid::{sample, Grid, NormKind};
use nlkpp::kernel::{Kernel, KernelFamily};
use nlkpp::operator::{assemble, Boundary};
use nlkpp::spectral::principal_eigenpair;
use nlkpp::stationary::*;
use std::f64::consts::PI;
use std::time::Instant;

fn main() {
    let k = Kernel::new(KernelFamily::Uniform, 1).unwrap();
    // Criterion 8: sigma -> inf, ||theta - a+||_inf decreasing, final <= 0.1
    println!("criterion 8:");
    let g = Grid::line(1.0, 128).unwrap();
    let a = sample(&g, |x| 2.0 + (2.0 * PI * x[0]).sin());
    let aplus = a.map(|v| v.max(0.0));
    for m in [0.0, 1.0, 2.0] {
        let mut line = format!("  m={m}:");
        for sigma in [20.0, 50.0, 100.0] {
            let op = assemble(&g, &k, sigma, m, Boundary::Neumann).unwrap();
            let sol = solve_stationary(&op, &a).unwrap();
            let gap = sol.theta.zip_map(&aplus, |t, v| t - v).unwrap().norm(NormKind::LInf);
            line += &format!(" {gap:.4}");
        }
        println!("{line}");
    }
    // Criterion 9
    println!("criterion 9 (m=0, L1 gap to a+, s=16.5):");
    let t0 = Instant::now();
    for (sigma, n) in [(0.2, 83), (0.1, 165), (0.05, 330)] {
        let g = Grid::line(1.0, n).unwrap();
        let a = sample(&g, |x| 2.0 + (2.0 * PI * x[0]).sin());
        let aplus = a.map(|v| v.max(0.0));
        let op = assemble(&g, &k, sigma, 0.0, Boundary::Neumann).unwrap();
        let sol = solve_stationary(&op, &a).unwrap();
        let gap = sol.theta.zip_map(&aplus, |t, v| t - v).unwrap().norm(NormKind::L1);
        println!("  sigma={sigma}: L1 gap={gap:.5} (march {} newton {})", sol.diagnostics.marching_iterations, sol.diagnostics.newton_iterations);
    }
    println!("  [{:?}] target <= 0.05*||a+||_1 = 0.1", t0.elapsed());
    println!("criterion 9 (m=2, L2 gap to V2, s=16.5):");
    let t0 = Instant::now();
    for (sigma, n) in [(0.2, 83), (0.1, 165), (0.05, 330)] {
        let g = Grid::line(1.0, n).unwrap();
        let a = sample(&g, |x| 2.0 + (2.0 * PI * x[0]).sin());
        let op = assemble(&g, &k, sigma, 2.0, Boundary::Neumann).unwrap();
        let sol = solve_stationary(&op, &a).unwrap();
        let v2 = limit_profile(LimitKind::V2, &g, &k, &a).unwrap();
        let gap = sol.theta.zip_map(&v2, |t, v| t - v).unwrap().norm(NormKind::L2);
        println!("  sigma={sigma}: L2 gap={gap:.5} (||V2||_2={:.4}, march {})", v2.norm(NormKind::L2), sol.diagnostics.marching_iterations);
    }
    println!("  [{:?}]", t0.elapsed());
    println!("criterion 9 (m=3, L2 gap to abar=2, s=6.8):");
    let t0 = Instant::now();
    for (sigma, n) in [(0.2, 35), (0.1, 69), (0.05, 137)] {
        let g = Grid::line(1.0, n).unwrap();
        let a = sample(&g, |x| 2.0 + (2.0 * PI * x[0]).sin());
        let op = assemble(&g, &k, sigma, 3.0, Boundary::Neumann).unwrap();
        let sol = solve_stationary(&op, &a).unwrap();
        let abar = limit_profile(LimitKind::Abar, &g, &k, &a).unwrap();
        let gap = sol.theta.zip_map(&abar, |t, v| t - v).unwrap().norm(NormKind::L2);
        println!("  sigma={sigma}: L2 gap={gap:.5} (march {})", sol.diagnostics.marching_iterations);
    }
    println!("  [{:?}]", t0.elapsed());
}
