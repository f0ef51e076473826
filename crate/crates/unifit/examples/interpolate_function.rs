//! Scalar function interpolation through the channel: lift (x, f(x)) pairs
//! to coefficient vectors, fit the channel operator, then query three
//! evaluators — the Radon-Nikodym average, the least-squares value, and the
//! maximal-probability outcome on an outcome grid.
//!
//! The max-probability evaluator is known to jump where the selected
//! probability branch switches; the probability value itself reports where
//! the channel is exact (P = 1).
//!
//! Run with `cargo run --release --example interpolate_function [n d points]`.

use unifit::experiments::interpolate_scalar;
use unifit::model::SolverConfig;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).map_or(6, |s| s.parse().unwrap());
    let d: usize = args.get(2).map_or(6, |s| s.parse().unwrap());
    let m: usize = args.get(3).map_or(500, |s| s.parse().unwrap());

    // f(x) = x^2 sampled uniformly on [-1, 1].
    let points: Vec<(f64, f64, f64)> = (0..m)
        .map(|l| {
            let x = -1.0 + 2.0 * l as f64 / (m - 1) as f64;
            (1.0, x, x * x)
        })
        .collect();

    let config = SolverConfig::default();
    let model = interpolate_scalar(&points, n, d, 1, &config).unwrap();
    println!(
        "fitted n={n} d={d} on {m} points, converged={} F={:.6}",
        model.report.converged, model.report.fidelity
    );
    println!(
        "{:>7} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "x", "f exact", "RN", "LS", "f maxP", "P(f maxP)"
    );
    for i in 0..21 {
        let x = -1.0 + 2.0 * i as f64 / 20.0;
        let exact = x * x;
        let rn = model.radon_nikodym(x).unwrap();
        let ls = model.least_squares(x).unwrap();
        let (fm, pm) = model.max_probability(x).unwrap();
        println!("{x:>7.3} {exact:>10.6} {rn:>10.6} {ls:>10.6} {fm:>10.6} {pm:>10.6}");
    }
}
