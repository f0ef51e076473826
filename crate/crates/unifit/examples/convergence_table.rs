//! Convergence comparison on a random instance: the constrained iteration
//! against the plain multiplier baseline, printed side by side per iteration
//! (eigenvalue of the selected state, fidelity, unitarity indicator).
//!
//! Run with `cargo run --release --example convergence_table [n d m seed]`.

use unifit::experiments::generate_random_pair_sample;
use unifit::model::SolverConfig;
use unifit::solver::{solve, solve_vanilla};
use unifit::tensor::build_tensor_pairs;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map_or(19, |s| s.parse().unwrap());
    let d: usize = args.get(2).map_or(4, |s| s.parse().unwrap());
    let m: usize = args.get(3).map_or(10_000, |s| s.parse().unwrap());
    let seed: u64 = args.get(4).map_or(1, |s| s.parse().unwrap());

    let sample = generate_random_pair_sample(n, d, m, seed).unwrap();
    let s = build_tensor_pairs(&sample);

    let config = SolverConfig {
        num_runs: 1,
        max_iterations: 25,
        ..SolverConfig::default()
    };
    let constrained = solve(&s, &config).unwrap();

    let vanilla_config = SolverConfig {
        num_runs: 1,
        max_iterations: 18,
        ..SolverConfig::default()
    };
    let vanilla = solve_vanilla(&s, &vanilla_config).unwrap();

    println!("d={d} n={n} m={m} seed={seed}");
    println!(
        "{:>4} | {:>13} {:>13} {:>13} | {:>13} {:>13} {:>13}",
        "iter", "mu", "F", "sum 1/l_G", "mu (van)", "F (van)", "sum 1/l_G"
    );
    let rows = constrained.iterations.len().max(vanilla.iterations.len());
    for i in 0..rows {
        let c = constrained.iterations.get(i);
        let v = vanilla.iterations.get(i);
        let fmt = |x: Option<f64>| x.map_or("".to_string(), |x| format!("{x:13.6e}"));
        println!(
            "{:>4} | {} {} {} | {} {} {}",
            i,
            fmt(c.map(|r| r.mu)),
            fmt(c.map(|r| r.fidelity)),
            fmt(c.map(|r| r.penalty)),
            fmt(v.map(|r| r.mu)),
            fmt(v.map(|r| r.fidelity)),
            fmt(v.map(|r| r.penalty)),
        );
    }
    println!(
        "constrained: converged={} F={:.6} | vanilla: converged={} F={:.6}",
        constrained.converged, constrained.fidelity, vanilla.converged, vanilla.fidelity
    );
}
