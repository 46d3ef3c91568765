//! Numerical laboratory for scaled nonlocal dispersal operators with Neumann
//! (and Dirichlet) boundary coupling: generalized principal eigenvalues,
//! stationary KPP states, time-dependent KPP dynamics, and power-law rate
//! fits over the dispersal spread sigma and the cost parameter m.

pub mod error;
pub mod exec;
pub mod grid;
pub mod linalg;
pub mod kernel;
pub mod operator;
pub mod spectral;
pub mod ratefit;
pub mod stationary;
pub mod sweep;
pub mod config;
pub mod evolution;
pub mod expr;

pub use error::{Error, Result};

mod cli;

/// CLI entry point; returns the process exit code. Honors `NLKPP_THREADS`
/// as a cap on the worker pool when the `parallel` feature is enabled.
pub fn run() -> i32 {
    #[cfg(feature = "parallel")]
    if let Ok(v) = std::env::var("NLKPP_THREADS") {
        match v.parse::<usize>() {
            Ok(k) if k >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => {
                eprintln!("error: NLKPP_THREADS must be a positive integer, got `{v}`");
                return 1;
            }
        }
    }
    cli::run()
}
