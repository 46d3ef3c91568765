use nlkpp::evolution::*;
use nlkpp::grid::{sample, Grid};
use nlkpp::kernel::{Kernel, KernelFamily};
use nlkpp::operator::{assemble, Boundary};
use std::f64::consts::PI;

fn main() {
    let k = Kernel::new(KernelFamily::Uniform, 1).unwrap();
    for m in [0.0, 1.0] {
        for sigma in [0.2f64, 0.05, 0.025] {
            let n = ((6.8 / sigma).ceil() as usize) | 1; // odd, avoids integer ratio
            let g = Grid::line(1.0, n).unwrap();
            let op = assemble(&g, &k, sigma, m, Boundary::Neumann).unwrap();
            let a = sample(&g, |x| 2.0 + (2.0 * PI * x[0]).sin());
            let u0 = sample(&g, |x| 1.0 + 0.5 * (PI * x[0]).cos());
            let traj = evolve(&op, &a, &u0, 1.0).unwrap();
            let refr = logistic_discrete_trajectory(&a, &u0, &traj).unwrap();
            // find argmax over recorded times and nodes
            let (mut best, mut bt, mut bx) = (0.0, 0.0, 0.0);
            for (ti, (s, r)) in traj.states().iter().zip(refr.states()).enumerate() {
                for i in 0..g.len() {
                    let d = (s.values()[i] - r.values()[i]).abs();
                    if d > best {
                        best = d;
                        bt = traj.times()[ti];
                        bx = g.coord(i)[0];
                    }
                }
            }
            // also interior-only sup (distance > 2 sigma from boundary)
            let mut interior = 0.0f64;
            for (s, r) in traj.states().iter().zip(refr.states()) {
                for i in 0..g.len() {
                    let x = g.coord(i)[0];
                    if x > 2.0 * sigma && x < 1.0 - 2.0 * sigma {
                        interior = interior.max((s.values()[i] - r.values()[i]).abs());
                    }
                }
            }
            println!("m={m} sigma={sigma}: sup={best:.5e} at (t={bt:.2}, x={bx:.4}); interior sup={interior:.5e}");
        }
    }
}
