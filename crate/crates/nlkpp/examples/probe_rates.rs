use nlkpp::config::SweepConfig;
use nlkpp::ratefit::fit_rate;
use nlkpp::sweep::{run_sweep, CellOutputs};
use std::time::Instant;

fn errors(cfg_text: &str) -> Vec<(f64, f64, f64)> {
    let cfg = SweepConfig::parse(cfg_text).unwrap();
    let t0 = Instant::now();
    let out = run_sweep(&cfg);
    let dt = t0.elapsed();
    println!("  [sweep took {dt:?}]");
    out.records
        .iter()
        .map(|r| match r.outputs {
            CellOutputs::EvolveRate { sup_error, dt, .. } => (r.sigma, sup_error.unwrap(), dt),
            _ => panic!("{:?}", r.flag),
        })
        .collect()
}

fn main() {
    // Criterion 10: small-sigma rate, slope ~ 2-m, grids refine with sigma (s=6.8)
    for m in [0.0, 1.0] {
        let text = format!(
            "task = evolve-rate\ncoef = 2 + sin(2*pi*x)\nsigma = 0.2, 0.1, 0.05, 0.025\nm = {m}\n\
             n = auto\noversample = 1.7\nT = 1\nu0 = 1 + 0.5*cos(pi*x)\nreference = logistic-discrete\n"
        );
        let pts = errors(&text);
        println!("m={m}: {:?}", pts);
        let fit = fit_rate(&pts.iter().map(|&(s, e, _)| (s, e)).collect::<Vec<_>>()).unwrap();
        println!("m={m}: slope={:.4} r2={:.6} (expect {})", fit.slope, fit.r2, 2.0 - m);
        // dt-refinement: halve dt
        let text2 = format!(
            "task = evolve-rate\ncoef = 2 + sin(2*pi*x)\nsigma = 0.2, 0.1, 0.05, 0.025\nm = {m}\n\
             n = auto\noversample = 1.7\nT = 1\nu0 = 1 + 0.5*cos(pi*x)\nreference = logistic-discrete\ndt = {}\n",
            0.5 * pts[0].2
        );
        let pts2 = errors(&text2);
        for (a, b) in pts.iter().zip(&pts2) {
            println!("  dt-refine: sigma={} err {:.6e} -> {:.6e} rel change {:.3}%",
                a.0, a.1, b.1, 100.0 * (a.1 - b.1).abs() / a.1);
        }
    }
    // Criterion 11: large-sigma rate, slope <= -(m+1)+0.5, fixed grid
    for m in [0.0, 1.0] {
        let text = format!(
            "task = evolve-rate\ncoef = 2 + sin(2*pi*x)\nsigma = 20, 40, 80, 160\nm = {m}\n\
             n = 128\nT = 1\nu0 = 1 + 0.5*cos(pi*x)\nreference = logistic-discrete\n"
        );
        let pts = errors(&text);
        println!("m={m}: {:?}", pts);
        let fit = fit_rate(&pts.iter().map(|&(s, e, _)| (s, e)).collect::<Vec<_>>()).unwrap();
        println!("large-sigma m={m}: slope={:.4} r2={:.6} (bound {})", fit.slope, fit.r2, -(m + 1.0));
    }
}
