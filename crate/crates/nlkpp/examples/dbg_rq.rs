use nlkpp::grid::{sample, Grid};
use nlkpp::kernel::{Kernel, KernelFamily};
use nlkpp::operator::{assemble, Boundary};
use nlkpp::spectral::{principal_eigenpair, rayleigh_quotient};
use std::f64::consts::PI;

fn main() {
    let g = Grid::line(1.0, 96).unwrap();
    let k = Kernel::new(KernelFamily::Uniform, 1).unwrap();
    let op = assemble(&g, &k, 0.2, 1.0, Boundary::Neumann).unwrap();
    let a = sample(&g, |x| 2.0 + (2.0 * PI * x[0]).sin());
    let ep = principal_eigenpair(&op, &a).unwrap();
    let rq = rayleigh_quotient(&op, &a, &ep.phi).unwrap();
    println!("lambda={:.17e} rq={:.17e} diff={:.3e}", ep.lambda, rq, (rq - ep.lambda).abs());
    println!("residual={:.3e} solver_gap={:.3e}", ep.residual, ep.diagnostics.solver_gap);
    // compare quadratic form vs matrix route
    let w = g.weight();
    let form = op.quadratic_form(&ep.phi).unwrap();
    let matrix_route = -w * op.apply(&ep.phi).unwrap().values().dot(ep.phi.values());
    println!("form={:.17e} matrix={:.17e} rel={:.3e}", form, matrix_route, (form-matrix_route).abs()/form.abs());
}
