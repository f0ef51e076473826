//! Recover seeded random orthogonal generators of growing dimension from
//! sign-stripped trajectories, with both channel types.
//!
//! Run with `cargo run --release --example recover_random_orthogonal [dims...]`
//! (default: 3 5 7 17; dimension 40 takes a couple of minutes).

use std::time::Instant;

use unifit::experiments::{GeneratorKind, GeneratorSpec};
use unifit::experiments::recover_dynamics;
use unifit::model::{Channel, SolverConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let dims: Vec<usize> = if args.len() > 1 {
        args[1..].iter().map(|s| s.parse().unwrap()).collect()
    } else {
        vec![3, 5, 7, 17]
    };

    let config = SolverConfig {
        num_runs: 1,
        ..SolverConfig::default()
    };
    for dim in dims {
        let spec = GeneratorSpec {
            kind: GeneratorKind::RandomOrthogonal { dim },
            points: 1000,
            seed: 1,
            phase_flips: true,
        };
        let (sample, reference) = spec.generate().unwrap();
        let u_true = reference.unwrap();
        for channel in [Channel::Gram, Channel::Unit] {
            let t = Instant::now();
            let (recovered, report) = recover_dynamics(&sample, channel, &config).unwrap();
            let diff = recovered.max_diff_up_to_sign(&u_true);
            println!(
                "{} diff for dim={dim} is {diff:.6e} (converged={}, {} iterations, {:.1?})",
                match channel {
                    Channel::Gram => "GRAM",
                    Channel::Unit => "UNIT",
                },
                report.converged,
                report.iterations.len(),
                t.elapsed()
            );
        }
    }
}
