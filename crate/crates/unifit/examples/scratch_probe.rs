use unifit::experiments::generate_random_pair_sample;
use unifit::model::SolverConfig;
use unifit::solver::solve_vanilla;
use unifit::tensor::build_tensor_pairs;

fn main() {
    let mut failures = 0;
    for seed in 1..=20u64 {
        let sample = generate_random_pair_sample(19, 4, 10_000, seed).unwrap();
        let s = build_tensor_pairs(&sample);
        let config = SolverConfig {
            max_iterations: 18,
            num_runs: 1,
            scan_candidates: true,
            ..SolverConfig::default()
        };
        let report = solve_vanilla(&s, &config).unwrap();
        let met = report.iterations.iter().any(|r| {
            r.mu.abs() <= 1e-12 * r.fidelity.abs().max(1.0) && (r.penalty - 4.0).abs() <= 1e-9
        });
        if !met { failures += 1; }
        println!("seed {seed:2}: vanilla-scan met criteria = {met}");
    }
    println!("failures: {failures}/20");
}
