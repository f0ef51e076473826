//! Trace-decreasing channel demonstration: for every output dimension
//! d = 1..=n, push random unit states through the first d rows of a random
//! orthogonal matrix (no renormalization) and compare the fidelity of that
//! generating map against the maximized one.
//!
//! The maximized fidelity strictly exceeds the generating one whenever
//! d < n; at d = n the two coincide and F_orig/m = 1 (trace preservation).
//!
//! Run with `cargo run --release --example fidelity_sweep [n m seed]`.

use unifit::experiments::fidelity_sweep;
use unifit::model::{Channel, SolverConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map_or(10, |s| s.parse().unwrap());
    let m: usize = args.get(2).map_or(500, |s| s.parse().unwrap());
    let seed: u64 = args.get(3).map_or(1, |s| s.parse().unwrap());

    let config = SolverConfig {
        channel: Channel::Unit,
        ..SolverConfig::default()
    };
    let rows = fidelity_sweep(n, m, seed, &config).unwrap();
    println!(
        "{:>3} {:>14} {:>14} {:>12} {:>9}",
        "d", "F_orig/m", "F_max/m", "rel gain", "converged"
    );
    for r in &rows {
        println!(
            "{:>3} {:>14.10} {:>14.10} {:>12.3e} {:>9}",
            r.d,
            r.f_orig_over_m,
            r.f_max / m as f64,
            r.relative_gain,
            r.converged
        );
    }
}
